//! Random instances and dense reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use quadps::linalg::{c, DMat, C64};
use quadps::{HermitianOperator, ObservableTuple, ProbePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMat {
    DMat::from_fn(n, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMat {
    let a = random_complex(rng, n, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMat {
    random_complex(rng, n, n).qr().q()
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v = random_complex(rng, n, 1);
    let norm = v.norm();
    v.iter().map(|x| x / norm).collect()
}

pub fn op(a: &DMat) -> HermitianOperator {
    HermitianOperator::from_dense(a).unwrap()
}

pub fn tuple(mats: &[DMat]) -> ObservableTuple {
    ObservableTuple::new(mats.iter().map(op).collect(), 0).unwrap()
}

/// Random size and dimension in the ranges used by the property suites.
pub fn random_shape(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..=12), rng.random_range(1..=3))
}

pub fn random_tuple(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<DMat> {
    (0..d).map(|_| random_hermitian(rng, n)).collect()
}

pub fn random_probe(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> ProbePoint {
    ProbePoint::new((0..d).map(|_| rng.random_range(-radius..radius)).collect()).unwrap()
}

/// Smallest singular value of the stack `[X_1 − λ_1; …; X_d − λ_d]`, dense SVD.
pub fn stack_sigma_min(mats: &[DMat], lambda: &[f64]) -> f64 {
    let n = mats[0].nrows();
    let mut m = DMat::zeros(n * mats.len(), n);
    for (j, (x, &l)) in mats.iter().zip(lambda).enumerate() {
        let shifted = x - DMat::identity(n, n) * c(l, 0.0);
        m.view_mut((j * n, 0), (n, n)).copy_from(&shifted);
    }
    m.singular_values().min()
}

/// `Σ_{j<k} ‖[X_j, X_k]‖` by dense SVD.
pub fn commutator_sum(mats: &[DMat]) -> f64 {
    let mut total = 0.0;
    for j in 0..mats.len() {
        for k in j + 1..mats.len() {
            let cmt = &mats[j] * &mats[k] - &mats[k] * &mats[j];
            total += cmt.singular_values().max();
        }
    }
    total
}

/// `‖Av − λv‖²` computed directly.
pub fn eigen_error_sq(a: &DMat, v: &[C64], lambda: f64) -> f64 {
    let v = DVector::from_column_slice(v);
    (a * &v - &v * c(lambda, 0.0)).norm_squared()
}

pub fn spectrum(a: &DMat) -> Vec<f64> {
    let mut v: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenvalues of a general complex matrix from its Schur form.
pub fn complex_eigenvalues(a: &DMat) -> Vec<C64> {
    let t = a.clone().schur().unpack().1;
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Block matrix `[[a, b], [b†, d]]`.
pub fn blocks(a: &DMat, b: &DMat, d: &DMat) -> DMat {
    let (p, q) = (a.nrows(), d.nrows());
    let mut m = DMatrix::zeros(p + q, p + q);
    m.view_mut((0, 0), (p, p)).copy_from(a);
    m.view_mut((0, p), (p, q)).copy_from(b);
    m.view_mut((p, 0), (q, p)).copy_from(&b.adjoint());
    m.view_mut((p, p), (q, q)).copy_from(d);
    m
}

/// A tuple with a unitary `S` commuting with every operator except
/// `flipped`, which it anticommutes with; all hidden by a random basis change.
pub fn symmetric_instance(rng: &mut ChaCha8Rng, d: usize, flipped: usize) -> (Vec<DMat>, DMat) {
    let p = rng.random_range(1..=6);
    let q = rng.random_range(1..=6);
    let n = p + q;
    let zero_pq = DMat::zeros(p, q);
    let mut mats = Vec::with_capacity(d);
    for j in 0..d {
        let m = if j == flipped {
            blocks(&DMat::zeros(p, p), &random_complex(rng, p, q), &DMat::zeros(q, q))
        } else {
            blocks(&random_hermitian(rng, p), &zero_pq, &random_hermitian(rng, q))
        };
        mats.push(m);
    }
    let s0 = DMat::from_fn(n, n, |i, k| if i != k { c(0.0, 0.0) } else if i < p { c(1.0, 0.0) } else { c(-1.0, 0.0) });
    let w = random_unitary(rng, n);
    let conj = |m: &DMat| &w * m * w.adjoint();
    (mats.iter().map(conj).collect(), conj(&s0))
}

pub mod checks;
