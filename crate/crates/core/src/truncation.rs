//! Locality tools for the quadratic gap at the origin: the distance operator
//! `Z`, the far-field modification bound and ρ-ball compression.
//!
//! For a tuple `(X_1, …, X_k, H)` and `K = HH_0 + H_0H + H_0²`, the bound
//! `‖Z⁻¹KZ⁻¹‖ ≤ C < 1` gives `−CZ² ≤ K ≤ CZ² ≤ CQ_0`, hence
//! `(1−C)^{1/2} μ ≤ μ(X, H+H_0) ≤ (1+C)^{1/2} μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{diag, eigen, from_dense, principal_submatrix, prune, CsrMat, DMat, SolverOptions, C64};
use crate::operator::HermitianOperator;
use crate::pseudospectra::{quadratic_gap_with, ObservableTuple, ProbePoint};

const Z_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCertificate {
    /// Ball radius; `None` for a bare modification bound.
    pub rho: Option<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    /// Reference gap of the unmodified system, when computed.
    pub mu_full: Option<f64>,
    /// `min(ρ, μ_compressed)`, or the modified gap for a bare modification bound.
    pub mu_truncated: f64,
    /// Gap of the modified system `(X, H + H_0)`, exact block value.
    pub mu_modified: f64,
    /// Certified interval for the unmodified gap; `upper = None` when `C ≥ 1`.
    pub lower: f64,
    pub upper: Option<f64>,
    pub retained: usize,
}

impl TruncationCertificate {
    pub fn contains(&self, mu: f64, tol: f64) -> bool {
        mu >= self.lower - tol && self.upper.is_none_or(|u| mu <= u + tol)
    }
}

fn sqrt_sum_of_squares(ops: &[HermitianOperator]) -> Result<HermitianOperator> {
    let n = ops[0].dim();
    if let Some(diags) = ops.iter().map(HermitianOperator::as_diagonal).collect::<Option<Vec<_>>>() {
        let z: Vec<f64> = (0..n)
            .map(|i| diags.iter().map(|d| d[i] * d[i]).sum::<f64>().sqrt())
            .collect();
        return HermitianOperator::diagonal(&z);
    }
    let mut sum = CsrMat::zeros(n, n);
    for op in ops {
        sum = &sum + op.square().csr();
    }
    let (vals, vecs) = HermitianOperator::new(prune(&sum))?.eigen_decomposition();
    let root: Vec<C64> = vals.iter().map(|v| C64::new(v.max(0.0).sqrt(), 0.0)).collect();
    let d = &vecs * DMat::from_diagonal(&nalgebra::DVector::from_vec(root)) * vecs.adjoint();
    HermitianOperator::from_dense(&d)
}

/// `Z = (Σ X_j²)^{1/2}` over the commuting prefix (probe at the origin).
pub fn distance_operator(t: &ObservableTuple) -> Result<HermitianOperator> {
    let k = t.commuting_prefix();
    if k == 0 {
        return Err(Error::config("the distance operator needs a commuting position block"));
    }
    let z = sqrt_sum_of_squares(&t.ops()[..k])?;
    check_invertible(&z)?;
    Ok(z)
}

fn check_invertible(z: &HermitianOperator) -> Result<()> {
    let spec = match z.as_diagonal() {
        Some(d) => d,
        None => z.spectrum(),
    };
    if let Some((index, &distance)) = spec.iter().enumerate().find(|(_, &v)| v <= Z_TOL) {
        return Err(Error::ZNotInvertible { index, distance });
    }
    Ok(())
}

fn inverse(z: &HermitianOperator) -> Result<CsrMat> {
    if let Some(d) = z.as_diagonal() {
        let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
        return Ok(diag(&inv));
    }
    let inv = z
        .to_dense()
        .try_inverse()
        .ok_or(Error::ZNotInvertible {
            index: 0,
            distance: 0.0,
        })?;
    Ok(from_dense(&inv))
}

/// Splits a tuple-with-H into the position operators and H (the last operator).
fn positions_and_h(t: &ObservableTuple) -> Result<(&[HermitianOperator], &HermitianOperator)> {
    let d = t.d();
    if d < 2 || t.commuting_prefix() < d - 1 {
        return Err(Error::config(
            "truncation needs commuting positions followed by a Hamiltonian as the last operator",
        ));
    }
    Ok((&t.ops()[..d - 1], t.op(d - 1)))
}

/// `C = ‖Z⁻¹(HH_0 + H_0H + H_0²)Z⁻¹‖` with Z from the position operators.
pub fn perturbation_constant(t: &ObservableTuple, h: &HermitianOperator, h0: &HermitianOperator) -> Result<f64> {
    let (pos, _) = positions_and_h(t)?;
    crate::operator::check_dim(t.dim(), h.dim())?;
    crate::operator::check_dim(t.dim(), h0.dim())?;
    let z = sqrt_sum_of_squares(pos)?;
    check_invertible(&z)?;
    let (a, b) = (h.csr(), h0.csr());
    let k = &(&(a * b) + &(b * a)) + &(b * b);
    let k = prune(&k);
    if k.nnz() == 0 {
        return Ok(0.0);
    }
    let zi = inverse(&z)?;
    let m = prune(&(&(&zi * &k) * &zi));
    eigen::hermitian_norm(&m, &SolverOptions::default())
}

fn gap_at_origin(t: &ObservableTuple, opts: &SolverOptions) -> Result<f64> {
    Ok(quadratic_gap_with(t, &ProbePoint::origin(t.d()), opts)?.value)
}

fn with_hamiltonian(t: &ObservableTuple, h: HermitianOperator) -> Result<ObservableTuple> {
    let last = t.d() - 1;
    t.map_ops(|j, op| if j == last { h.clone() } else { op.clone() })
}

/// Modification bound for `H → H + H_0` at the origin.
///
/// The modified gap is always computed directly, so the certificate can be
/// checked against it; `C ≥ 1` is reported as [`Error::CTooLarge`].
pub fn modified_gap_bounds(
    t: &ObservableTuple,
    h0: &HermitianOperator,
    opts: &SolverOptions,
) -> Result<TruncationCertificate> {
    let (_, h) = positions_and_h(t)?;
    let c = perturbation_constant(t, h, h0)?;
    if c >= 1.0 {
        return Err(Error::CTooLarge(c));
    }
    let mu = gap_at_origin(t, opts)?;
    let modified = gap_at_origin(&with_hamiltonian(t, h.add(h0)?)?, opts)?;
    Ok(TruncationCertificate {
        rho: None,
        c,
        mu_full: Some(mu),
        mu_truncated: modified,
        mu_modified: modified,
        lower: (1.0 - c).sqrt() * mu,
        upper: Some((1.0 + c).sqrt() * mu),
        retained: t.dim(),
    })
}

fn position_distances(t: &ObservableTuple) -> Result<Vec<f64>> {
    let (pos, _) = positions_and_h(t)?;
    sqrt_sum_of_squares(pos)?
        .as_diagonal()
        .ok_or_else(|| Error::config("ball compression needs diagonal position operators"))
}

/// Restriction of every operator to the basis vectors with `Z ≤ ρ`.
pub fn compress_to_ball(t: &ObservableTuple, rho: f64) -> Result<(ObservableTuple, Vec<usize>)> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::out_of_range("rho", rho, "must be positive and finite"));
    }
    let z = position_distances(t)?;
    let keep: Vec<usize> = (0..z.len()).filter(|&i| z[i] <= rho).collect();
    if keep.is_empty() {
        return Err(Error::EmptyBall(rho));
    }
    let ops = t
        .ops()
        .iter()
        .map(|op| HermitianOperator::new(principal_submatrix(op.csr(), &keep)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ObservableTuple::new(ops, t.commuting_prefix())?;
    if keep.len().is_multiple_of(t.orbitals()) {
        out = out.with_orbitals(t.orbitals())?;
    }
    Ok((out, keep))
}

/// `X_j ← X_j − λ_j` for every operator, so the origin machinery applies at λ.
pub fn shift_to_probe(t: &ObservableTuple, lambda: &ProbePoint) -> Result<ObservableTuple> {
    crate::operator::check_dim(t.d(), lambda.d())?;
    t.map_ops(|j, op| op.shifted(lambda.coords()[j]))
}

/// `min(ρ, μ^Q_0(compressed))` with a certificate for the unmodified gap.
///
/// The far field is removed by `H_0 = −(H − PHP)`, so `H + H_0 = PHP` and
/// `Q_0(X, PHP)` splits into the compressed block and `Z²` outside the ball.
/// The certificate brackets the unmodified gap `μ` by
/// `[μ'/(1+C)^{1/2}, μ'/(1−C)^{1/2}]` where `μ' = min(z_out, μ_compressed)`
/// is the exact modified gap and `z_out` the smallest distance outside the ball.
pub fn truncated_gap(
    t: &ObservableTuple,
    lambda: &ProbePoint,
    rho: f64,
    opts: &SolverOptions,
) -> Result<(f64, TruncationCertificate)> {
    let shifted = shift_to_probe(t, lambda)?;
    let z = position_distances(&shifted)?;
    if let Some((index, &distance)) = z.iter().enumerate().find(|(_, &v)| v <= Z_TOL) {
        return Err(Error::ZNotInvertible { index, distance });
    }
    let (compressed, keep) = compress_to_ball(&shifted, rho)?;
    let mu_c = gap_at_origin(&compressed, opts)?;
    let truncated = rho.min(mu_c);

    let n = shifted.dim();
    let mut inside = vec![false; n];
    for &i in &keep {
        inside[i] = true;
    }
    let z_out = (0..n).filter(|&i| !inside[i]).map(|i| z[i]).fold(f64::INFINITY, f64::min);
    let modified = mu_c.min(z_out);

    let h = shifted.op(shifted.d() - 1);
    let projector: Vec<f64> = inside.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let p = diag(&projector);
    let php = prune(&(&(&p * h.csr()) * &p));
    let h0 = HermitianOperator::new(prune(&(&php - h.csr())))?;
    let c = perturbation_constant(&shifted, h, &h0)?;
    let (lower, upper) = if c < 1.0 {
        (modified / (1.0 + c).sqrt(), Some(modified / (1.0 - c).sqrt()))
    } else {
        (modified / (1.0 + c).sqrt(), None)
    };
    Ok((
        truncated,
        TruncationCertificate {
            rho: Some(rho),
            c,
            mu_full: None,
            mu_truncated: truncated,
            mu_modified: modified,
            lower,
            upper,
            retained: keep.len(),
        },
    ))
}

/// [`truncated_gap`] for each ρ (in parallel), with the full gap filled in when `reference` is set.
pub fn truncation_ladder(
    t: &ObservableTuple,
    lambda: &ProbePoint,
    rhos: &[f64],
    reference: Option<f64>,
    opts: &SolverOptions,
) -> Result<Vec<TruncationCertificate>> {
    use rayon::prelude::*;
    rhos.par_iter()
        .map(|&rho| {
            let (_, mut cert) = truncated_gap(t, lambda, rho, opts)?;
            cert.mu_full = reference;
            Ok(cert)
        })
        .collect()
}
