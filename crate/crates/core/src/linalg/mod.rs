//! Sparse/dense complex matrix plumbing shared by every other module.
//!
//! Operators are stored as CSR so lattice models with tens of thousands of
//! basis states stay cheap; small problems are densified on demand.

pub mod banded;
pub mod eigen;
pub mod lanczos;

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;

pub use eigen::{Backend, EigenPair, SolverOptions};

pub type C64 = Complex64;
pub type CsrMat = CsrMatrix<C64>;
pub type DMat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Drops exact zeros, keeping structural patterns tight after cancellation.
pub fn prune(a: &CsrMat) -> CsrMat {
    a.filter(|_, _, v| v.re != 0.0 || v.im != 0.0)
}

pub fn from_dense(a: &DMat) -> CsrMat {
    let mut coo = CooMatrix::new(a.nrows(), a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != ZERO {
                coo.push(i, j, v);
            }
        }
    }
    CsrMat::from(&coo)
}

pub fn to_dense(a: &CsrMat) -> DMat {
    DMat::from(a)
}

pub fn diag(values: &[f64]) -> CsrMat {
    let n = values.len();
    let mut coo = CooMatrix::new(n, n);
    for (i, &v) in values.iter().enumerate() {
        if v != 0.0 {
            coo.push(i, i, c(v, 0.0));
        }
    }
    CsrMat::from(&coo)
}

pub fn identity(n: usize) -> CsrMat {
    CsrMat::identity(n)
}

pub fn adjoint(a: &CsrMat) -> CsrMat {
    let mut t = a.transpose();
    t.values_mut().iter_mut().for_each(|v| *v = v.conj());
    t
}

pub fn scale(a: &CsrMat, s: C64) -> CsrMat {
    let mut out = a.clone();
    out.values_mut().iter_mut().for_each(|v| *v *= s);
    out
}

/// `a - shift·I`.
pub fn shift_diagonal(a: &CsrMat, shift: f64) -> CsrMat {
    if shift == 0.0 {
        return a.clone();
    }
    a - &scale(&identity(a.nrows()), c(shift, 0.0))
}

/// Kronecker product `a ⊗ b` with `b` small and dense; index `(i, r) → i·m + r`.
pub fn kron(a: &CsrMat, b: &DMat) -> CsrMat {
    let (bm, bn) = b.shape();
    let mut coo = CooMatrix::new(a.nrows() * bm, a.ncols() * bn);
    for (i, j, &v) in a.triplet_iter() {
        for r in 0..bm {
            for s in 0..bn {
                let w = b[(r, s)];
                if w != ZERO {
                    coo.push(i * bm + r, j * bn + s, v * w);
                }
            }
        }
    }
    CsrMat::from(&coo)
}

/// Vertical stack of equally wide blocks.
pub fn vstack(blocks: &[CsrMat]) -> CsrMat {
    let ncols = blocks.first().map_or(0, |b| b.ncols());
    let nrows = blocks.iter().map(|b| b.nrows()).sum();
    let mut coo = CooMatrix::new(nrows, ncols);
    let mut offset = 0;
    for b in blocks {
        for (i, j, &v) in b.triplet_iter() {
            coo.push(offset + i, j, v);
        }
        offset += b.nrows();
    }
    CsrMat::from(&coo)
}

/// Principal submatrix on the given (sorted) index set.
pub fn principal_submatrix(a: &CsrMat, keep: &[usize]) -> CsrMat {
    let mut position = vec![usize::MAX; a.ncols()];
    for (new, &old) in keep.iter().enumerate() {
        position[old] = new;
    }
    let mut coo = CooMatrix::new(keep.len(), keep.len());
    for (new_row, &old_row) in keep.iter().enumerate() {
        let row = a.row(old_row);
        for (&col, &v) in row.col_indices().iter().zip(row.values()) {
            let p = position[col];
            if p != usize::MAX {
                coo.push(new_row, p, v);
            }
        }
    }
    CsrMat::from(&coo)
}

/// `y = A x`.
pub fn matvec(a: &CsrMat, x: &[C64], y: &mut [C64]) {
    let (offsets, cols, vals) = a.csr_data();
    for (i, yi) in y.iter_mut().enumerate() {
        let mut acc = ZERO;
        for k in offsets[i]..offsets[i + 1] {
            acc += vals[k] * x[cols[k]];
        }
        *yi = acc;
    }
}

/// `y = A^† x` without forming the adjoint.
pub fn matvec_adjoint(a: &CsrMat, x: &[C64], y: &mut [C64]) {
    y.iter_mut().for_each(|v| *v = ZERO);
    let (offsets, cols, vals) = a.csr_data();
    for (i, &xi) in x.iter().enumerate() {
        for k in offsets[i]..offsets[i + 1] {
            y[cols[k]] += vals[k].conj() * xi;
        }
    }
}

pub fn max_abs_entry(a: &CsrMat) -> f64 {
    a.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn has_non_finite(a: &CsrMat) -> bool {
    a.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
}

/// Cheap upper bound `sqrt(‖A‖₁ ‖A‖∞) ≥ ‖A‖₂`.
pub fn norm_upper_bound(a: &CsrMat) -> f64 {
    let mut row_max: f64 = 0.0;
    let mut col_sums = vec![0.0; a.ncols()];
    for row in a.row_iter() {
        let mut s = 0.0;
        for (&j, v) in row.col_indices().iter().zip(row.values()) {
            let m = v.norm();
            s += m;
            col_sums[j] += m;
        }
        row_max = row_max.max(s);
    }
    let col_max = col_sums.into_iter().fold(0.0, f64::max);
    (row_max * col_max).sqrt()
}

/// Lower and upper bandwidth `(kl, ku)`.
pub fn bandwidth(a: &CsrMat) -> (usize, usize) {
    let mut kl = 0;
    let mut ku = 0;
    for (i, j, _) in a.triplet_iter() {
        if i > j {
            kl = kl.max(i - j);
        } else {
            ku = ku.max(j - i);
        }
    }
    (kl, ku)
}

pub fn commutator(a: &CsrMat, b: &CsrMat) -> CsrMat {
    prune(&(&(a * b) - &(b * a)))
}

pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    // ⟨x, y⟩ conjugate-linear in the first slot
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Pauli matrices σx, σy, σz.
pub fn pauli() -> [DMat; 3] {
    [
        DMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        DMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        DMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}
