//! Banded LU factorization with partial pivoting (LAPACK `gbtrf` layout).
//!
//! Row `r` stores columns `r - kl ..= r + kl + ku`; the extra `kl` columns on
//! the right hold the fill created by row interchanges.

use super::{CsrMat, C64, ZERO};

pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
    pivots: Vec<usize>,
    /// Smallest |u_kk| relative to the largest entry of the input.
    pub min_pivot_ratio: f64,
}

impl BandedLu {
    fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.kl >= row && col <= row + self.kl + self.ku);
        row * self.width + (col + self.kl - row)
    }

    /// Factors `a`; returns `None` when an exactly zero pivot is met.
    pub fn factor(a: &CsrMat, kl: usize, ku: usize) -> Option<Self> {
        let n = a.nrows();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
            pivots: vec![0; n],
            min_pivot_ratio: f64::INFINITY,
        };
        let mut scale: f64 = 0.0;
        for (i, j, &v) in a.triplet_iter() {
            let k = lu.idx(i, j);
            lu.data[k] = v;
            scale = scale.max(v.norm());
        }
        if scale == 0.0 {
            return None;
        }

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = lu.data[lu.idx(k, k)].norm();
            for r in k + 1..=last_row {
                let m = lu.data[lu.idx(r, k)].norm();
                if m > best {
                    best = m;
                    piv = r;
                }
            }
            lu.pivots[k] = piv;
            if best == 0.0 {
                return None;
            }
            lu.min_pivot_ratio = lu.min_pivot_ratio.min(best / scale);
            let last_col = (k + kl + ku).min(n - 1);
            if piv != k {
                for col in k..=last_col {
                    let a_idx = lu.idx(k, col);
                    let b_idx = lu.idx(piv, col);
                    lu.data.swap(a_idx, b_idx);
                }
            }
            let pivot = lu.data[lu.idx(k, k)];
            let inv = C64::new(1.0, 0.0) / pivot;
            let k_row = k * width;
            for r in k + 1..=last_row {
                let rk = lu.idx(r, k);
                let l = lu.data[rk] * inv;
                lu.data[rk] = l;
                if l == ZERO {
                    continue;
                }
                let r_row = r * width;
                // column c sits at offset c + kl - row in each row
                for col in k + 1..=last_col {
                    let u = lu.data[k_row + col + kl - k];
                    lu.data[r_row + col + kl - r] -= l * u;
                }
            }
        }
        Some(lu)
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [C64]) {
        let n = self.n;
        let (kl, ku, width) = (self.kl, self.ku, self.width);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == ZERO {
                continue;
            }
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.data[r * width + kl + k - r] * bk;
            }
        }
        for k in (0..n).rev() {
            let row = k * width;
            let mut acc = b[k];
            for col in k + 1..=(k + kl + ku).min(n - 1) {
                acc -= self.data[row + col + kl - k] * b[col];
            }
            b[k] = acc / self.data[row + kl];
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}
