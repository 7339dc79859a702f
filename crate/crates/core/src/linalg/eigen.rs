//! Smallest-magnitude eigenpairs, singular values and norms.
//!
//! Small problems go through nalgebra's dense Hermitian eigensolver. Larger
//! ones use shift-invert Lanczos around 0 with a banded LU factorization,
//! which is cheap because lattice orderings keep every composite banded.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::banded::BandedLu;
use super::lanczos::{self, HermitianOp};
use super::{adjoint, bandwidth, matvec, matvec_adjoint, norm_upper_bound, shift_diagonal, to_dense, CsrMat, C64, ZERO};
use crate::error::{Error, Result, SolverDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative accuracy target for iterative solves.
    pub accuracy: f64,
    pub backend: Backend,
    /// `Auto` switches to shift-invert above this dimension.
    pub dense_limit: usize,
}

pub const DEFAULT_ACCURACY: f64 = 1e-9;
pub const DEFAULT_DENSE_LIMIT: usize = 256;

// Ritz residual bound for norm estimates; the Ritz value error is at most this (relative).
const NORM_TOLERANCE: f64 = 1e-7;

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            accuracy: DEFAULT_ACCURACY,
            backend: Backend::Auto,
            dense_limit: DEFAULT_DENSE_LIMIT,
        }
    }
}

impl SolverOptions {
    pub fn with_accuracy(accuracy: f64) -> Self {
        SolverOptions {
            accuracy,
            ..Default::default()
        }
    }

    fn use_dense(&self, n: usize) -> bool {
        match self.backend {
            Backend::Dense => true,
            Backend::ShiftInvert => false,
            Backend::Auto => n <= self.dense_limit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Eigenvalue of smallest magnitude (signed).
    pub value: f64,
    pub vector: Vec<C64>,
    /// Magnitude of the next eigenvalue, when one was resolved.
    pub next_abs: Option<f64>,
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

/// `A^† A` applied without forming it.
struct NormalOp<'a> {
    a: &'a CsrMat,
    tmp: std::cell::RefCell<Vec<C64>>,
}

impl HermitianOp for NormalOp<'_> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut tmp = self.tmp.borrow_mut();
        matvec(self.a, x, &mut tmp);
        matvec_adjoint(self.a, &tmp, y);
    }
}

struct InverseOp(BandedLu);

impl HermitianOp for InverseOp {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(x);
        self.0.solve(y);
    }
}

fn dense_smallest_abs(a: &CsrMat, want_vector: bool) -> EigenPair {
    let dense = to_dense(a);
    let n = dense.nrows();
    let (values, vectors) = if want_vector {
        let eig = SymmetricEigen::new(dense);
        (eig.eigenvalues, Some(eig.eigenvectors))
    } else {
        (dense.symmetric_eigenvalues(), None)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].abs().total_cmp(&values[j].abs()));
    let best = order[0];
    EigenPair {
        value: values[best],
        vector: vectors
            .map(|v| v.column(best).iter().copied().collect())
            .unwrap_or_default(),
        next_abs: order.get(1).map(|&i| values[i].abs()),
    }
}

fn shift_invert_smallest_abs(a: &CsrMat, accuracy: f64) -> Result<EigenPair> {
    let n = a.nrows();
    let scale = norm_upper_bound(a).max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for attempt in 0..4 {
        let shifted = shift_diagonal(a, shift);
        let (kl, ku) = bandwidth(&shifted);
        if let Some(lu) = BandedLu::factor(&shifted, kl, ku) {
            let op = InverseOp(lu);
            let count = 3.min(n);
            let pairs = lanczos::largest_magnitude(&op, count, accuracy, 300)?;
            let mut mapped: Vec<(f64, Vec<C64>)> = pairs
                .into_iter()
                .map(|p| (shift + 1.0 / p.value, p.vector))
                .collect();
            mapped.sort_by(|x, y| x.0.abs().total_cmp(&y.0.abs()));
            let next_abs = mapped.get(1).map(|x| x.0.abs());
            let (value, vector) = mapped.swap_remove(0);
            return Ok(EigenPair {
                value,
                vector,
                next_abs,
            });
        }
        // exactly singular: move off the eigenvalue and map back
        shift = scale * 1e-12 * 10f64.powi(attempt);
    }
    Err(Error::NumericalFailure(SolverDiagnostics {
        method: "banded LU",
        iterations: 4,
        residual: f64::NAN,
        tolerance: accuracy,
    }))
}

/// Eigenpair of smallest |eigenvalue| of a Hermitian matrix.
pub fn smallest_abs_eigenpair(a: &CsrMat, opts: &SolverOptions, want_vector: bool) -> Result<EigenPair> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidOperator("empty matrix".into()));
    }
    if opts.use_dense(n) {
        Ok(dense_smallest_abs(a, want_vector))
    } else {
        shift_invert_smallest_abs(a, opts.accuracy)
    }
}

/// All eigenvalues, ascending (dense).
pub fn hermitian_spectrum(a: &CsrMat) -> Vec<f64> {
    let mut v: Vec<f64> = to_dense(a).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest singular value.
pub fn operator_norm(a: &CsrMat, opts: &SolverOptions) -> Result<f64> {
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let n = a.nrows().max(a.ncols());
    if opts.use_dense(n) || n <= 64 {
        let s = to_dense(a).singular_values();
        return Ok(s.iter().copied().fold(0.0, f64::max));
    }
    let op = NormalOp {
        a,
        tmp: std::cell::RefCell::new(vec![ZERO; a.nrows()]),
    };
    let pairs = lanczos::largest_magnitude(&op, 1, NORM_TOLERANCE, 600)?;
    Ok(pairs[0].value.max(0.0).sqrt())
}

/// Largest |eigenvalue| of a Hermitian matrix (its operator norm).
pub fn hermitian_norm(a: &CsrMat, opts: &SolverOptions) -> Result<f64> {
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    let n = a.nrows();
    if opts.use_dense(n) {
        return Ok(hermitian_spectrum(a).iter().map(|x| x.abs()).fold(0.0, f64::max));
    }
    let pairs = lanczos::largest_magnitude(&CsrOp(a), 1, NORM_TOLERANCE, 600)?;
    Ok(pairs[0].value.abs())
}

/// Smallest singular value of a (possibly rectangular) matrix.
pub fn smallest_singular_value(a: &CsrMat, opts: &SolverOptions) -> Result<f64> {
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        return Ok(0.0);
    }
    if opts.use_dense(m.max(n)) || n <= 64 {
        let s = to_dense(a).singular_values();
        return Ok(s.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let gram = &adjoint(a) * a;
    let pair = smallest_abs_eigenpair(&gram, opts, false)?;
    Ok(pair.value.max(0.0).sqrt())
}
