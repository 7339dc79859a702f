//! Hermitian Lanczos with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm2, C64, ZERO};
use crate::error::{Error, Result, SolverDiagnostics};

pub trait HermitianOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

struct Krylov {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Set once the Krylov space became invariant.
    exhausted: bool,
}

impl Krylov {
    fn new(start: Vec<C64>) -> Self {
        let nrm = norm2(&start);
        let v0 = start.into_iter().map(|x| x / nrm).collect();
        Krylov {
            basis: vec![v0],
            alpha: Vec::new(),
            beta: Vec::new(),
            exhausted: false,
        }
    }

    fn step(&mut self, op: &dyn HermitianOp, scratch: &mut [C64]) {
        let j = self.alpha.len();
        let v = &self.basis[j];
        op.apply(v, scratch);
        let a = dot(v, scratch).re;
        self.alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &self.basis {
                let h = dot(q, scratch);
                for (w, qi) in scratch.iter_mut().zip(q) {
                    *w -= h * qi;
                }
            }
        }
        let b = norm2(scratch);
        let scale = self.alpha.iter().map(|x| x.abs()).fold(a.abs(), f64::max).max(b);
        if b <= 1e-13 * scale.max(f64::MIN_POSITIVE) || j + 1 == op.dim() {
            self.exhausted = true;
            self.beta.push(0.0);
            return;
        }
        self.beta.push(b);
        self.basis.push(scratch.iter().map(|x| x / b).collect());
    }

    fn tridiagonal_eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        let m = self.alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.alpha[i]
            } else if i + 1 == j {
                self.beta[i]
            } else if j + 1 == i {
                self.beta[j]
            } else {
                0.0
            }
        });
        SymmetricEigen::new(t)
    }

    fn ritz_vector(&self, coeffs: &[f64]) -> Vec<C64> {
        let n = self.basis[0].len();
        let mut y = vec![ZERO; n];
        for (q, &s) in self.basis.iter().zip(coeffs) {
            for (yi, qi) in y.iter_mut().zip(q) {
                *yi += qi * s;
            }
        }
        let nrm = norm2(&y);
        y.iter_mut().for_each(|v| *v /= nrm);
        y
    }
}

pub fn deterministic_start(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// The `count` Ritz pairs of largest magnitude, sorted by decreasing |value|.
pub fn largest_magnitude(
    op: &dyn HermitianOp,
    count: usize,
    tolerance: f64,
    max_iter: usize,
) -> Result<Vec<RitzPair>> {
    let n = op.dim();
    let count = count.min(n);
    let mut krylov = Krylov::new(deterministic_start(n, 0x5eed_1a2c));
    let mut scratch = vec![ZERO; n];
    let max_iter = max_iter.min(n).max(1);
    loop {
        krylov.step(op, &mut scratch);
        let m = krylov.alpha.len();
        let check = krylov.exhausted || m == max_iter || (m >= count + 2 && m.is_multiple_of(4));
        if !check {
            continue;
        }
        let eig = krylov.tridiagonal_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
        let beta_last = *krylov.beta.last().unwrap();
        let top = &order[..count.min(m)];
        let residual = |i: usize| beta_last * eig.eigenvectors[(m - 1, i)].abs();
        let worst = top
            .iter()
            .map(|&i| residual(i) / eig.eigenvalues[i].abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if krylov.exhausted || (top.len() == count && worst <= tolerance) {
            return Ok(top
                .iter()
                .map(|&i| {
                    let coeffs: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                    RitzPair {
                        value: eig.eigenvalues[i],
                        vector: krylov.ritz_vector(&coeffs),
                        residual: residual(i),
                    }
                })
                .collect());
        }
        if m >= max_iter {
            return Err(Error::NumericalFailure(SolverDiagnostics {
                method: "lanczos",
                iterations: m,
                residual: worst,
                tolerance,
            }));
        }
    }
}

/// Gauss quadrature of the spectral measure of `op` seen from `start`:
/// nodes are Ritz values, weights are squared first components (sum to 1).
pub fn spectral_quadrature(op: &dyn HermitianOp, start: &[C64], steps: usize) -> Vec<(f64, f64)> {
    let mut krylov = Krylov::new(start.to_vec());
    let mut scratch = vec![ZERO; op.dim()];
    let steps = steps.min(op.dim()).max(1);
    while krylov.alpha.len() < steps && !krylov.exhausted {
        krylov.step(op, &mut scratch);
    }
    let eig = krylov.tridiagonal_eigen();
    let mut nodes: Vec<(f64, f64)> = (0..krylov.alpha.len())
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes
}
