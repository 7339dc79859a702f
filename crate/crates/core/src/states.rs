//! Localized states: the minimizing eigenvector of `Q_λ` and its distributions
//! in space and energy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lanczos::{spectral_quadrature, HermitianOp};
use crate::linalg::{dot, matvec, CsrMat, DMat, SolverOptions, C64};
use crate::models::ScaledTuple;
use crate::operator::{expectation, variance_sq, HermitianOperator, StateVector};
use crate::pseudospectra::{minimizing_state, ObservableTuple, ProbePoint};

/// Lanczos steps for the energy distribution of large models.
pub const QUADRATURE_STEPS: usize = 200;
/// Default Gaussian broadening for energy histograms.
pub const DEFAULT_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMethod {
    /// Exact weights against the eigenbasis of H.
    Eigenbasis,
    /// Gauss quadrature nodes of the spectral measure seen from the state.
    LanczosQuadrature,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizedStateReport {
    /// Probe in unscaled units.
    pub lambda: ProbePoint,
    pub kappa: f64,
    pub state: StateVector,
    pub site_probabilities: Vec<f64>,
    pub energy_weights: Vec<(f64, f64)>,
    pub energy_method: EnergyMethod,
    /// Unscaled position operators (all but the last).
    pub position_expectations: Vec<f64>,
    pub position_variances: Vec<f64>,
    pub energy_expectation: f64,
    pub energy_variance: f64,
    pub mu_q: f64,
    /// `|Σ_j ‖(X'_j − λ'_j)v‖² − μ²| / max(1, μ²)` in scaled units.
    pub identity_defect: f64,
    pub degenerate: bool,
}

/// Eigenbasis of H, or nothing when it is too large to diagonalize.
pub enum EnergyBasis {
    Dense(Vec<f64>, DMat),
    Iterative,
}

impl EnergyBasis {
    pub fn for_hamiltonian(h: &HermitianOperator, opts: &SolverOptions) -> Self {
        if h.dim() <= opts.dense_limit {
            let (vals, vecs) = h.eigen_decomposition();
            EnergyBasis::Dense(vals, vecs)
        } else {
            EnergyBasis::Iterative
        }
    }
}

struct CsrOp<'a>(&'a CsrMat);

impl HermitianOp for CsrOp<'_> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        matvec(self.0, x, y);
    }
}

fn energy_weights(h: &HermitianOperator, basis: &EnergyBasis, v: &StateVector) -> (Vec<(f64, f64)>, EnergyMethod) {
    match basis {
        EnergyBasis::Dense(vals, vecs) => {
            let w = vals
                .iter()
                .enumerate()
                .map(|(k, &e)| {
                    let col: Vec<C64> = vecs.column(k).iter().copied().collect();
                    (e, dot(&col, v.entries()).norm_sqr())
                })
                .collect();
            (w, EnergyMethod::Eigenbasis)
        }
        EnergyBasis::Iterative => (
            spectral_quadrature(&CsrOp(h.csr()), v.entries(), QUADRATURE_STEPS),
            EnergyMethod::LanczosQuadrature,
        ),
    }
}

/// `|v|²` summed over the orbitals of each site.
pub fn site_marginal(t: &ObservableTuple, v: &StateVector) -> Vec<f64> {
    v.probabilities()
        .chunks(t.orbitals())
        .map(|c| c.iter().sum())
        .collect()
}

fn hamiltonian(t: &ObservableTuple) -> Result<&HermitianOperator> {
    if t.d() < 2 {
        return Err(Error::config("state extraction needs positions followed by a Hamiltonian"));
    }
    Ok(t.op(t.d() - 1))
}

pub fn extract_state(st: &ScaledTuple, lambda: &ProbePoint, opts: &SolverOptions) -> Result<LocalizedStateReport> {
    let h = hamiltonian(st.base())?;
    extract_with_basis(st, lambda, &EnergyBasis::for_hamiltonian(h, opts), opts)
}

fn extract_with_basis(
    st: &ScaledTuple,
    lambda: &ProbePoint,
    basis: &EnergyBasis,
    opts: &SolverOptions,
) -> Result<LocalizedStateReport> {
    let base = st.base();
    let h = hamiltonian(base)?;
    let probe = st.probe(lambda)?;
    let ms = minimizing_state(st.scaled(), &probe, opts)?;
    let v = ms.state.with_canonical_phase();

    let d = base.d();
    let mut position_expectations = Vec::with_capacity(d - 1);
    let mut position_variances = Vec::with_capacity(d - 1);
    for op in &base.ops()[..d - 1] {
        position_expectations.push(expectation(op, &v)?);
        position_variances.push(variance_sq(op, &v)?);
    }
    let energy_expectation = expectation(h, &v)?;
    let energy_variance = variance_sq(h, &v)?;

    let mut total = 0.0;
    for (op, &l) in st.scaled().ops().iter().zip(probe.coords()) {
        total += variance_sq(op, &v)? + (expectation(op, &v)? - l).powi(2);
    }
    let mu2 = ms.eigenvalue;
    let identity_defect = (total - mu2).abs() / mu2.max(1.0);

    let (energy_weights, energy_method) = energy_weights(h, basis, &v);
    Ok(LocalizedStateReport {
        lambda: lambda.clone(),
        kappa: st.kappa(),
        site_probabilities: site_marginal(base, &v),
        state: v,
        energy_weights,
        energy_method,
        position_expectations,
        position_variances,
        energy_expectation,
        energy_variance,
        mu_q: mu2.sqrt(),
        identity_defect,
        degenerate: ms.degenerate,
    })
}

/// One report per κ, scaling only the positions; H's eigenbasis is shared.
pub fn kappa_sweep(
    t: &ObservableTuple,
    lambda: &ProbePoint,
    kappas: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<LocalizedStateReport>> {
    if let Some(&k) = kappas.iter().find(|&&k| !(k > 0.0 && k.is_finite())) {
        return Err(Error::out_of_range("kappa", k, "must be positive"));
    }
    let basis = EnergyBasis::for_hamiltonian(hamiltonian(t)?, opts);
    kappas
        .par_iter()
        .map(|&k| extract_with_basis(&ScaledTuple::new(t.clone(), k)?, lambda, &basis, opts))
        .collect()
}

/// Gaussian-broadened energy density of the weights, sampled at `energies`.
pub fn broadened_density(weights: &[(f64, f64)], sigma: f64, energies: &[f64]) -> Vec<f64> {
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    energies
        .iter()
        .map(|&e| {
            weights
                .iter()
                .map(|&(x, w)| w * (-(e - x).powi(2) / (2.0 * sigma * sigma)).exp())
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// `x_1, …, x_p, probability` per site, using the first orbital's positions.
pub fn site_probabilities_csv(t: &ObservableTuple, report: &LocalizedStateReport) -> Result<String> {
    let p = t.commuting_prefix().min(t.d() - 1);
    let diags = t.ops()[..p]
        .iter()
        .map(HermitianOperator::as_diagonal)
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::config("site coordinates need diagonal position operators"))?;
    let mut out = String::new();
    for (s, prob) in report.site_probabilities.iter().enumerate() {
        let idx = s * t.orbitals();
        let mut row: Vec<String> = diags.iter().map(|d| crate::sweep::fmt_f64(d[idx])).collect();
        row.push(crate::sweep::fmt_f64(*prob));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// P2 preview of the site probabilities on a rectangular 2D lattice, scaled
/// so the largest probability is 65535; top row is the largest y.
pub fn site_probabilities_pgm(t: &ObservableTuple, report: &LocalizedStateReport) -> Result<String> {
    if t.commuting_prefix().min(t.d() - 1) < 2 {
        return Err(Error::config("PGM preview needs two diagonal position operators"));
    }
    let coord = |j: usize| -> Result<Vec<f64>> {
        let d = t.op(j)
            .as_diagonal()
            .ok_or_else(|| Error::config("site coordinates need diagonal position operators"))?;
        Ok(d.iter().step_by(t.orbitals()).copied().collect())
    };
    let (xs, ys) = (coord(0)?, coord(1)?);
    let distinct = |v: &[f64]| {
        let mut u = v.to_vec();
        u.sort_by(f64::total_cmp);
        u.dedup();
        u
    };
    let (ux, uy) = (distinct(&xs), distinct(&ys));
    if ux.len() * uy.len() != xs.len() {
        return Err(Error::config("sites do not form a rectangular grid"));
    }
    let mut img = vec![0.0; xs.len()];
    for (s, p) in report.site_probabilities.iter().enumerate() {
        let ix = ux.partition_point(|&v| v < xs[s]);
        let iy = uy.partition_point(|&v| v < ys[s]);
        img[(uy.len() - 1 - iy) * ux.len() + ix] = *p;
    }
    let peak = img.iter().copied().fold(0.0_f64, f64::max);
    let mut out = format!("P2\n# kappa {}\n{} {}\n65535\n", crate::sweep::fmt_f64(report.kappa), ux.len(), uy.len());
    for row in img.chunks(ux.len()) {
        let line: Vec<String> = row
            .iter()
            .map(|&p| if peak > 0.0 { ((p / peak) * 65535.0).round() as u32 } else { 0 }.to_string())
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}
