//! Hermitian observables, unit states and their statistical functionals.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, adjoint, dot, eigen, from_dense, matvec, max_abs_entry, norm2, norm_upper_bound, CsrMat, DMat,
    SolverOptions, C64,
};

/// Relative Hermiticity tolerance applied at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
const STATE_NORM_TOL: f64 = 1e-12;
// Above this size the scale uses a cheap norm bound instead of an SVD.
const EXACT_NORM_LIMIT: usize = 256;

/// A Hermitian matrix, symmetrized to exact Hermiticity once validated.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    mat: CsrMat,
}

impl HermitianOperator {
    pub fn new(mat: CsrMat) -> Result<Self> {
        let n = mat.nrows();
        if n == 0 {
            return Err(Error::InvalidOperator("dimension must be at least 1".into()));
        }
        if mat.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mat.ncols(),
            });
        }
        if linalg::has_non_finite(&mat) {
            return Err(Error::InvalidOperator("non-finite entry".into()));
        }
        let adj = adjoint(&mat);
        let defect = max_abs_entry(&(&mat - &adj));
        let scale = if n <= EXACT_NORM_LIMIT {
            eigen::operator_norm(&mat, &SolverOptions::default())?
        } else {
            norm_upper_bound(&mat)
        };
        if defect > HERMITIAN_TOL * scale.max(1.0) {
            return Err(Error::InvalidOperator(format!(
                "not Hermitian: max |A - A†| = {defect:.3e}"
            )));
        }
        let sym = linalg::scale(&(&mat + &adj), C64::new(0.5, 0.0));
        Ok(HermitianOperator { mat: linalg::prune(&sym) })
    }

    pub fn from_dense(a: &DMat) -> Result<Self> {
        Self::new(from_dense(a))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(linalg::diag(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(CsrMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(linalg::identity(n))
    }

    /// Skips validation; for results of operations that preserve Hermiticity.
    pub(crate) fn from_trusted(mat: CsrMat) -> Self {
        let adj = adjoint(&mat);
        HermitianOperator {
            mat: linalg::prune(&linalg::scale(&(&mat + &adj), C64::new(0.5, 0.0))),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn csr(&self) -> &CsrMat {
        &self.mat
    }

    pub fn to_dense(&self) -> DMat {
        linalg::to_dense(&self.mat)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HermitianOperator {
            mat: linalg::scale(&self.mat, C64::new(factor, 0.0)),
        }
    }

    /// `A - shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        HermitianOperator {
            mat: linalg::prune(&linalg::shift_diagonal(&self.mat, shift)),
        }
    }

    pub fn square(&self) -> Self {
        HermitianOperator::from_trusted(&self.mat * &self.mat)
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(HermitianOperator {
            mat: linalg::prune(&(&self.mat + &other.mat)),
        })
    }

    /// Diagonal entries when the matrix is diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let mut d = vec![0.0; self.dim()];
        for (i, j, v) in self.mat.triplet_iter() {
            if i != j {
                return None;
            }
            d[i] = v.re;
        }
        Some(d)
    }

    /// Full ascending spectrum with eigenvectors as columns (dense).
    pub fn eigen_decomposition(&self) -> (Vec<f64>, DMat) {
        let eig = SymmetricEigen::new(self.to_dense());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMat::from_fn(self.dim(), self.dim(), |r, k| eig.eigenvectors[(r, order[k])]);
        (values, vectors)
    }

    pub fn spectrum(&self) -> Vec<f64> {
        eigen::hermitian_spectrum(&self.mat)
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        matvec(&self.mat, x, &mut y);
        y
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// A unit vector in `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StateVector {
    entries: Vec<C64>,
}

impl StateVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidOperator("state must have dimension at least 1".into()));
        }
        let n = norm2(&entries);
        if (n - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidOperator(format!("state norm {n} is not 1")));
        }
        Ok(StateVector { entries })
    }

    /// Rescales any nonzero vector to unit length.
    pub fn normalized(entries: Vec<C64>) -> Result<Self> {
        let n = norm2(&entries);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidOperator("cannot normalize a zero vector".into()));
        }
        Ok(StateVector {
            entries: entries.into_iter().map(|x| x / n).collect(),
        })
    }

    pub fn from_real(entries: &[f64]) -> Result<Self> {
        Self::normalized(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[k] = C64::new(1.0, 0.0);
        StateVector { entries: e }
    }

    /// Multiplies by the phase making the largest-magnitude entry real positive.
    pub fn with_canonical_phase(mut self) -> Self {
        let (mut best, mut idx) = (0.0, 0);
        for (i, v) in self.entries.iter().enumerate() {
            // strict > keeps the first of equal-magnitude entries
            if v.norm() > best * (1.0 + 1e-12) {
                best = v.norm();
                idx = i;
            }
        }
        if best > 0.0 {
            let phase = self.entries[idx].conj() / best;
            self.entries.iter_mut().for_each(|v| *v *= phase);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(dot(&self.entries, &other.entries))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|v| v.norm_sqr()).collect()
    }
}

/// Largest singular value.
pub fn operator_norm(a: &CsrMat) -> Result<f64> {
    if linalg::has_non_finite(a) {
        return Err(Error::InvalidOperator("non-finite entry".into()));
    }
    eigen::operator_norm(a, &SolverOptions::default())
}

pub fn smallest_singular_value(a: &CsrMat, accuracy: f64) -> Result<f64> {
    if linalg::has_non_finite(a) {
        return Err(Error::InvalidOperator("non-finite entry".into()));
    }
    eigen::smallest_singular_value(a, &SolverOptions::with_accuracy(accuracy))
}

pub fn smallest_abs_eigenvalue(a: &HermitianOperator, accuracy: f64) -> Result<f64> {
    let pair = eigen::smallest_abs_eigenpair(a.csr(), &SolverOptions::with_accuracy(accuracy), false)?;
    Ok(pair.value.abs())
}

/// `E_v[A] = ⟨Av, v⟩`.
pub fn expectation(a: &HermitianOperator, v: &StateVector) -> Result<f64> {
    check_dim(a.dim(), v.dim())?;
    let av = a.apply(v.entries());
    let e = dot(v.entries(), &av);
    let scale = norm_upper_bound(a.csr()).max(1.0);
    if e.im.abs() > 1e-12 * scale {
        return Err(Error::InvalidOperator(format!(
            "expectation has imaginary part {:.3e}",
            e.im
        )));
    }
    Ok(e.re)
}

/// `Δ²_v A = ⟨A²v, v⟩ − ⟨Av, v⟩²`, computed as `‖Av‖² − E²`.
pub fn variance_sq(a: &HermitianOperator, v: &StateVector) -> Result<f64> {
    check_dim(a.dim(), v.dim())?;
    let av = a.apply(v.entries());
    let mean = dot(v.entries(), &av).re;
    let second = av.iter().map(|x| x.norm_sqr()).sum::<f64>();
    let var = second - mean * mean;
    let scale = second.max(1.0);
    if var < -1e-12 * scale {
        return Err(Error::InvalidOperator(format!("negative variance {var:.3e}")));
    }
    Ok(var.max(0.0))
}

/// `‖Av − λv‖`.
pub fn eigen_error(a: &HermitianOperator, v: &StateVector, lambda: f64) -> Result<f64> {
    check_dim(a.dim(), v.dim())?;
    let av = a.apply(v.entries());
    Ok(av
        .iter()
        .zip(v.entries())
        .map(|(x, y)| (x - y * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Approximate-eigenvector orthogonality:
/// `|⟨v,w⟩| ≤ (‖Av−λv‖ + ‖Aw−μw‖) / |λ−μ|`.
pub fn overlap_bound_check(
    a: &HermitianOperator,
    v: &StateVector,
    w: &StateVector,
    lambda: f64,
    mu: f64,
) -> Result<bool> {
    if lambda == mu {
        return Err(Error::DegenerateScalars(lambda));
    }
    let lhs = v.inner(w)?.norm();
    let rhs = (eigen_error(a, v, lambda)? + eigen_error(a, w, mu)?) / (lambda - mu).abs();
    Ok(lhs <= rhs + 1e-12)
}
