//! Composite operators `M_λ`, `Q_λ`, `L_λ` and the quadratic / Clifford gaps.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clifford::{flip_witness, CliffordRep};
use crate::error::{Error, Result, SolverDiagnostics};
use crate::linalg::{
    self, commutator, eigen, from_dense, kron, norm_upper_bound, to_dense, vstack, CsrMat, DMat, SolverOptions,
    C64, I, ZERO,
};
use crate::operator::{check_dim, HermitianOperator, StateVector};

const COMMUTING_TOL: f64 = 1e-12;
const CHIRAL_TOL: f64 = 1e-10;
// clamp for round-off negative eigenvalues of the positive semidefinite Q
const PSD_CLAMP: f64 = 1e-10;
const DEGENERACY_TOL: f64 = 1e-8;

/// Ordered observables `(X_1, …, X_d)` of equal size.
#[derive(Debug, Clone)]
pub struct ObservableTuple {
    ops: Vec<HermitianOperator>,
    commuting_prefix: usize,
    orbitals: usize,
    bound: OnceLock<f64>,
}

impl ObservableTuple {
    /// `commuting_prefix` leading operators must commute pairwise.
    pub fn new(ops: Vec<HermitianOperator>, commuting_prefix: usize) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidOperator("tuple needs at least one operator".into()));
        };
        let n = first.dim();
        for op in &ops {
            check_dim(n, op.dim())?;
        }
        if commuting_prefix > ops.len() {
            return Err(Error::out_of_range(
                "commuting_prefix",
                commuting_prefix as f64,
                format!("tuple has {} operators", ops.len()),
            ));
        }
        let opts = SolverOptions::default();
        for j in 0..commuting_prefix {
            for k in j + 1..commuting_prefix {
                let c = commutator(ops[j].csr(), ops[k].csr());
                if c.nnz() == 0 {
                    continue;
                }
                let norm = eigen::operator_norm(&c, &opts)?;
                let scale = eigen::hermitian_norm(ops[j].csr(), &opts)? * eigen::hermitian_norm(ops[k].csr(), &opts)?;
                if norm > COMMUTING_TOL * scale.max(1.0) {
                    return Err(Error::InvalidOperator(format!(
                        "operators {j} and {k} are marked commuting but ‖[X_j, X_k]‖ = {norm:.3e}"
                    )));
                }
            }
        }
        Ok(ObservableTuple {
            ops,
            commuting_prefix,
            orbitals: 1,
            bound: OnceLock::new(),
        })
    }

    /// Number of basis states per lattice site, used to marginalize states.
    pub fn with_orbitals(mut self, orbitals: usize) -> Result<Self> {
        if orbitals == 0 || !self.dim().is_multiple_of(orbitals) {
            return Err(Error::out_of_range(
                "orbitals",
                orbitals as f64,
                format!("must divide the dimension {}", self.dim()),
            ));
        }
        self.orbitals = orbitals;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.ops.len()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn ops(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn op(&self, j: usize) -> &HermitianOperator {
        &self.ops[j]
    }

    pub fn commuting_prefix(&self) -> usize {
        self.commuting_prefix
    }

    pub fn orbitals(&self) -> usize {
        self.orbitals
    }

    pub fn sites(&self) -> usize {
        self.dim() / self.orbitals
    }

    /// Same structure with every operator replaced.
    pub fn map_ops(&self, f: impl Fn(usize, &HermitianOperator) -> HermitianOperator) -> Result<Self> {
        let ops = self.ops.iter().enumerate().map(|(j, op)| f(j, op)).collect();
        Ok(ObservableTuple {
            ops,
            commuting_prefix: self.commuting_prefix,
            orbitals: self.orbitals,
            bound: OnceLock::new(),
        })
    }

    /// `Σ_{j<k} ‖[X_j, X_k]‖`, computed once.
    pub fn commutator_bound(&self) -> Result<f64> {
        if let Some(&b) = self.bound.get() {
            return Ok(b);
        }
        let opts = SolverOptions::default();
        let mut total = 0.0;
        for j in 0..self.d() {
            for k in j + 1..self.d() {
                let c = commutator(self.ops[j].csr(), self.ops[k].csr());
                total += eigen::operator_norm(&c, &opts)?;
            }
        }
        Ok(*self.bound.get_or_init(|| total))
    }
}

/// A probe `λ ∈ R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbePoint {
    coords: Vec<f64>,
}

impl ProbePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::out_of_range("lambda", *bad, "probe coordinates must be finite"));
        }
        Ok(ProbePoint { coords })
    }

    pub fn origin(d: usize) -> Self {
        ProbePoint { coords: vec![0.0; d] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    /// Copy with coordinate `j` negated.
    pub fn flipped(&self, j: usize) -> Self {
        let mut coords = self.coords.clone();
        coords[j] = -coords[j];
        ProbePoint { coords }
    }

    pub fn distance(&self, other: &ProbePoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<&[f64]> for ProbePoint {
    fn from(c: &[f64]) -> Self {
        ProbePoint { coords: c.to_vec() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    Quadratic,
    Clifford,
}

impl std::fmt::Display for GapKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GapKind::Quadratic => "quadratic",
            GapKind::Clifford => "clifford",
        })
    }
}

impl std::str::FromStr for GapKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" | "q" => Ok(GapKind::Quadratic),
            "clifford" | "c" | "localizer" => Ok(GapKind::Clifford),
            _ => Err(Error::config(format!("unknown gap kind `{s}`"))),
        }
    }
}

/// A gap value; `low_confidence` marks quadratic gaps small enough that squaring
/// lost accuracy, which were then recomputed without squaring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapValue {
    pub value: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapResult {
    pub lambda: ProbePoint,
    pub mu_q: Option<f64>,
    pub mu_c: Option<f64>,
    pub commutator_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimizing_state: Option<StateVector>,
}

#[derive(Debug, Clone)]
pub struct MinimizingState {
    pub state: StateVector,
    /// Smallest eigenvalue of `Q_λ` (clamped at 0).
    pub eigenvalue: f64,
    /// `‖Q_λ v − σ v‖`.
    pub residual: f64,
    pub degenerate: bool,
}

fn check_probe(t: &ObservableTuple, lambda: &ProbePoint) -> Result<()> {
    check_dim(t.d(), lambda.d())
}

/// Shifted observables `X_j − λ_j`.
fn shifted(t: &ObservableTuple, lambda: &ProbePoint) -> Vec<CsrMat> {
    t.ops
        .iter()
        .zip(lambda.coords())
        .map(|(x, &l)| linalg::prune(&linalg::shift_diagonal(x.csr(), l)))
        .collect()
}

/// `M_λ`: the `(d·n) × n` stack of `X_j − λ_j`.
pub fn tall_composite(t: &ObservableTuple, lambda: &ProbePoint) -> Result<CsrMat> {
    check_probe(t, lambda)?;
    Ok(vstack(&shifted(t, lambda)))
}

/// `Q_λ = Σ (X_j − λ_j)²`.
pub fn quadratic_operator(t: &ObservableTuple, lambda: &ProbePoint) -> Result<HermitianOperator> {
    check_probe(t, lambda)?;
    let n = t.dim();
    let mut q = CsrMat::zeros(n, n);
    for s in shifted(t, lambda) {
        q = &q + &(&s * &s);
    }
    Ok(HermitianOperator::from_trusted(q))
}

/// `L_λ = Σ (X_j − λ_j) ⊗ Γ_j`, indexed `(site, spinor) → site·rep_dim + spinor`.
pub fn localizer(t: &ObservableTuple, lambda: &ProbePoint, rep: &CliffordRep) -> Result<HermitianOperator> {
    check_probe(t, lambda)?;
    if rep.d() != t.d() {
        return Err(Error::RepMismatch {
            rep: rep.d(),
            tuple: t.d(),
        });
    }
    let m = rep.rep_dim();
    let n = t.dim();
    let mut l = CsrMat::zeros(n * m, n * m);
    for (s, g) in shifted(t, lambda).iter().zip(rep.gammas()) {
        l = &l + &kron(s, g);
    }
    Ok(HermitianOperator::from_trusted(l))
}

fn norm_scale(a: &CsrMat) -> f64 {
    norm_upper_bound(a).max(1.0)
}

fn numerical_failure(method: &'static str, residual: f64, tolerance: f64) -> Error {
    Error::NumericalFailure(SolverDiagnostics {
        method,
        iterations: 0,
        residual,
        tolerance,
    })
}

/// Smallest eigenvalue of a PSD operator, clamping round-off negatives.
fn clamp_psd(value: f64, scale: f64) -> Result<f64> {
    if value < -PSD_CLAMP * scale {
        return Err(numerical_failure("psd clamp", value, PSD_CLAMP * scale));
    }
    Ok(value.max(0.0))
}

/// `sqrt(Σ‖(X_j − λ_j) v‖²) = ‖M_λ v‖`.
fn tall_norm(t: &ObservableTuple, lambda: &ProbePoint, v: &[C64]) -> f64 {
    shifted(t, lambda)
        .iter()
        .map(|s| {
            let mut y = vec![ZERO; v.len()];
            linalg::matvec(s, v, &mut y);
            y.iter().map(|x| x.norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

pub fn quadratic_gap(t: &ObservableTuple, lambda: &ProbePoint) -> Result<f64> {
    Ok(quadratic_gap_with(t, lambda, &SolverOptions::default())?.value)
}

/// `μ^Q_λ = λ_min(Q_λ)^{1/2}`.
///
/// Below `√ε·‖Q‖` the squared value has lost about half its digits, so the
/// gap is recomputed from `M_λ` (dense SVD, or `‖M_λ v‖` at the eigenvector).
pub fn quadratic_gap_with(t: &ObservableTuple, lambda: &ProbePoint, opts: &SolverOptions) -> Result<GapValue> {
    let q = quadratic_operator(t, lambda)?;
    let scale = norm_scale(q.csr());
    let small = opts_use_dense(opts, t.dim());
    let pair = eigen::smallest_abs_eigenpair(q.csr(), opts, !small)?;
    let sq = clamp_psd(pair.value, scale)?;
    if sq >= f64::EPSILON.sqrt() * scale {
        return Ok(GapValue {
            value: sq.sqrt(),
            low_confidence: false,
        });
    }
    let value = if small {
        eigen::smallest_singular_value(&tall_composite(t, lambda)?, opts)?
    } else {
        tall_norm(t, lambda, &pair.vector)
    };
    log::debug!("low-confidence quadratic gap {:.3e} re-verified as {value:.3e}", sq.sqrt());
    Ok(GapValue {
        value,
        low_confidence: true,
    })
}

fn opts_use_dense(opts: &SolverOptions, n: usize) -> bool {
    match opts.backend {
        linalg::Backend::Dense => true,
        linalg::Backend::ShiftInvert => false,
        linalg::Backend::Auto => n <= opts.dense_limit,
    }
}

pub fn clifford_gap(t: &ObservableTuple, lambda: &ProbePoint, rep: &CliffordRep) -> Result<f64> {
    clifford_gap_with(t, lambda, rep, &SolverOptions::default())
}

/// `μ^C_λ`: smallest |eigenvalue| of `L_λ`.
pub fn clifford_gap_with(
    t: &ObservableTuple,
    lambda: &ProbePoint,
    rep: &CliffordRep,
    opts: &SolverOptions,
) -> Result<f64> {
    let l = localizer(t, lambda, rep)?;
    Ok(eigen::smallest_abs_eigenpair(l.csr(), opts, false)?.value.abs())
}

/// Evaluates one gap kind; `rep` is required for the Clifford gap.
pub fn gap(
    kind: GapKind,
    t: &ObservableTuple,
    lambda: &ProbePoint,
    rep: Option<&CliffordRep>,
    opts: &SolverOptions,
) -> Result<f64> {
    match kind {
        GapKind::Quadratic => Ok(quadratic_gap_with(t, lambda, opts)?.value),
        GapKind::Clifford => {
            let rep = rep.ok_or_else(|| Error::config("the Clifford gap needs a Clifford representation"))?;
            clifford_gap_with(t, lambda, rep, opts)
        }
    }
}

/// Both gaps and the commutator bound, with `|μ_Q² − μ_C²| ≤ bound` checked.
pub fn gap_pair_with_bound(
    t: &ObservableTuple,
    lambda: &ProbePoint,
    rep: &CliffordRep,
    opts: &SolverOptions,
) -> Result<GapResult> {
    let mu_q = quadratic_gap_with(t, lambda, opts)?.value;
    let mu_c = clifford_gap_with(t, lambda, rep, opts)?;
    let bound = t.commutator_bound()?;
    let defect = (mu_q * mu_q - mu_c * mu_c).abs() - bound;
    let tol = 1e-8 * (1.0 + mu_q * mu_q);
    if defect > tol {
        return Err(numerical_failure("commutator bound check", defect, tol));
    }
    Ok(GapResult {
        lambda: lambda.clone(),
        mu_q: Some(mu_q),
        mu_c: Some(mu_c),
        commutator_bound: Some(bound),
        minimizing_state: None,
    })
}

/// `‖L_λ² − Q_λ ⊗ I‖ = ‖Σ_{j<k} [X_j, X_k] ⊗ Γ_jΓ_k‖`, a sharper bound than
/// the sum of commutator norms (for `(X, Y, H)` with `[X, Y] = 0` it is `‖[H, X+iY]‖`).
pub fn localizer_cross_norm(t: &ObservableTuple, rep: &CliffordRep) -> Result<f64> {
    if rep.d() != t.d() {
        return Err(Error::RepMismatch {
            rep: rep.d(),
            tuple: t.d(),
        });
    }
    let n = t.dim() * rep.rep_dim();
    let mut total = CsrMat::zeros(n, n);
    for j in 0..t.d() {
        for k in j + 1..t.d() {
            let c = commutator(t.ops[j].csr(), t.ops[k].csr());
            total = &total + &kron(&c, &(rep.gamma(j) * rep.gamma(k)));
        }
    }
    eigen::operator_norm(&linalg::prune(&total), &SolverOptions::default())
}

/// Unit eigenvector of `Q_λ` for its smallest eigenvalue.
pub fn minimizing_state(t: &ObservableTuple, lambda: &ProbePoint, opts: &SolverOptions) -> Result<MinimizingState> {
    let q = quadratic_operator(t, lambda)?;
    let scale = norm_scale(q.csr());
    let pair = eigen::smallest_abs_eigenpair(q.csr(), opts, true)?;
    let eigenvalue = clamp_psd(pair.value, scale)?;
    let state = StateVector::normalized(pair.vector)?;
    let qv = q.apply(state.entries());
    let residual = qv
        .iter()
        .zip(state.entries())
        .map(|(a, b)| (a - b * pair.value).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let q_norm = if opts_use_dense(opts, q.dim()) {
        eigen::hermitian_norm(q.csr(), opts)?
    } else {
        norm_upper_bound(q.csr())
    };
    if residual > 1e-8 * q_norm.max(1.0) {
        return Err(numerical_failure("minimizing state residual", residual, 1e-8 * q_norm.max(1.0)));
    }
    let degenerate = pair
        .next_abs
        .is_some_and(|next| next - pair.value.abs() <= DEGENERACY_TOL * q_norm.max(1.0));
    Ok(MinimizingState {
        state,
        eigenvalue,
        residual,
        degenerate,
    })
}

fn dense_max_abs(a: &DMat) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `((X − λ_x) + iH) Γ` for a chiral pair: `XΓ = ΓX`, `HΓ = −ΓH`, `Γ² = I`.
///
/// It is Hermitian, and `L_{(λ_x, 0)}` with `Γ = (σx, σy)` has spectrum `±|α|`
/// over its eigenvalues `α`.
pub fn reduced_localizer(
    x: &HermitianOperator,
    h: &HermitianOperator,
    lambda_x: f64,
    grading: &HermitianOperator,
) -> Result<HermitianOperator> {
    check_dim(x.dim(), h.dim())?;
    check_dim(x.dim(), grading.dim())?;
    let (xs, hs, g) = (x.csr(), h.csr(), grading.csr());
    let n = x.dim();
    let checks = [
        ("Γ² = I", linalg::max_abs_entry(&(&(g * g) - &linalg::identity(n)))),
        ("XΓ = ΓX", linalg::max_abs_entry(&commutator(xs, g))),
        ("HΓ = −ΓH", linalg::max_abs_entry(&(&(hs * g) + &(g * hs)))),
    ];
    for (name, defect) in checks {
        if defect > CHIRAL_TOL {
            return Err(Error::ChiralSymmetryViolation(format!("{name} fails by {defect:.3e}")));
        }
    }
    let a = &linalg::shift_diagonal(xs, lambda_x) + &linalg::scale(hs, I);
    HermitianOperator::new(linalg::prune(&(&a * g)))
}

/// Determinant of a square complex matrix via LU.
pub fn complex_determinant(a: &DMat) -> C64 {
    a.clone().lu().determinant()
}

/// Sign of `det A` for a real matrix: the Z/2 index of a class D pair.
pub fn determinant_sign_index(a: &DMat) -> Result<i8> {
    let imag = a.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if imag > 1e-10 {
        return Err(Error::NotRealMatrix(imag));
    }
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let real = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re);
    let det = real.clone().lu().determinant();
    // Hadamard: |det| ≤ Π column norms
    let scale: f64 = real.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)).product();
    Ok(if det.abs() <= 1e-12 * scale {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    })
}

/// Checks the symmetry theorem at `λ`: with `S X_j = X_j S` except
/// `S X_k = −X_k S` (`k = flipped_index`), both gaps agree at `λ` and at `λ`
/// with coordinate `k` negated.
pub fn verify_symmetry(
    t: &ObservableTuple,
    s: &DMat,
    flipped_index: usize,
    lambda: &ProbePoint,
    rep: &CliffordRep,
    opts: &SolverOptions,
) -> Result<bool> {
    let n = t.dim();
    check_dim(n, s.nrows())?;
    check_dim(n, s.ncols())?;
    check_probe(t, lambda)?;
    if flipped_index >= t.d() {
        return Err(Error::out_of_range(
            "flipped_index",
            flipped_index as f64,
            format!("tuple has {} operators", t.d()),
        ));
    }
    let unitarity = dense_max_abs(&(s * s.adjoint() - DMat::identity(n, n)));
    if unitarity > 1e-10 {
        return Err(Error::SymmetryHypothesisViolated(format!("S is not unitary ({unitarity:.3e})")));
    }
    let s_csr = from_dense(s);
    for (j, x) in t.ops.iter().enumerate() {
        let sx = &s_csr * x.csr();
        let xs = x.csr() * &s_csr;
        let defect = if j == flipped_index {
            linalg::max_abs_entry(&(&sx + &xs))
        } else {
            linalg::max_abs_entry(&(&sx - &xs))
        };
        if defect > 1e-10 {
            let rel = if j == flipped_index { "anticommute" } else { "commute" };
            return Err(Error::SymmetryHypothesisViolated(format!(
                "S does not {rel} with operator {j} (defect {defect:.3e})"
            )));
        }
    }
    let gamma = lambda.flipped(flipped_index);
    let tol = 1e-8;
    let q_ok = (quadratic_gap_with(t, lambda, opts)?.value - quadratic_gap_with(t, &gamma, opts)?.value).abs() <= tol;
    // Clifford part uses the generator order with the flipped axis last, as in the theorem
    let mut order: Vec<usize> = (0..t.d()).filter(|&j| j != flipped_index).collect();
    order.push(flipped_index);
    let permuted = ObservableTuple {
        ops: order.iter().map(|&j| t.ops[j].clone()).collect(),
        commuting_prefix: 0,
        orbitals: t.orbitals,
        bound: OnceLock::new(),
    };
    let perm = |p: &ProbePoint| ProbePoint {
        coords: order.iter().map(|&j| p.coords[j]).collect(),
    };
    let c1 = clifford_gap_with(&permuted, &perm(lambda), rep, opts)?;
    let c2 = clifford_gap_with(&permuted, &perm(&gamma), rep, opts)?;
    Ok(q_ok && (c1 - c2).abs() <= tol)
}

/// The unitary `S ⊗ R` conjugating `L_λ` into `±L_γ`, for tests and diagnostics.
pub fn symmetry_conjugator(s: &DMat, rep: &CliffordRep) -> DMat {
    s.kronecker(&flip_witness(rep))
}

/// Dense copy of a composite, for small problems.
pub fn dense(a: &HermitianOperator) -> DMat {
    to_dense(a.csr())
}
