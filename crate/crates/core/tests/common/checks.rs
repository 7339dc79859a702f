//! One random instance per call for each invariant; `Err` describes a violation.

use quadps::linalg::{c, DMat, SolverOptions};
use quadps::operator::{eigen_error, expectation, overlap_bound_check, variance_sq};
use quadps::pseudospectra::{clifford_gap, minimizing_state, quadratic_gap, verify_symmetry};
use quadps::{build_clifford, ProbePoint, StateVector};
use rand::Rng;

use super::*;

pub type Check = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `⟨Qv, v⟩^{1/2}`, `(Σ‖(X_j−λ_j)v‖²)^{1/2}` at the minimizing state,
/// `σ_min(M_λ)` and `λ_min(Q_λ)^{1/2}` agree within 1e-7 relative.
pub fn four_ways(seed: u64) -> Check {
    let mut r = rng(seed);
    let (n, d) = random_shape(&mut r);
    let mats = random_tuple(&mut r, n, d);
    let lam = random_probe(&mut r, d, 2.0);
    let t = tuple(&mats);
    let opts = SolverOptions::default();
    let mu4 = quadratic_gap(&t, &lam).map_err(|e| e.to_string())?;
    let mu3 = stack_sigma_min(&mats, lam.coords());
    let v = minimizing_state(&t, &lam, &opts).map_err(|e| e.to_string())?.state;
    let sum_sq: f64 = mats
        .iter()
        .zip(lam.coords())
        .map(|(x, &l)| eigen_error_sq(x, v.entries(), l))
        .sum();
    let mu2 = sum_sq.sqrt();
    let q = mats.iter().zip(lam.coords()).fold(DMat::zeros(n, n), |acc, (x, &l)| {
        let s = x - DMat::identity(n, n) * c(l, 0.0);
        acc + &s * &s
    });
    let vv = nalgebra::DVector::from_column_slice(v.entries());
    let mu1 = vv.dotc(&(&q * &vv)).re.max(0.0).sqrt();
    let scale = mu3.max(1e-3);
    for (name, val) in [("<Qv,v>", mu1), ("sum of eigen-errors", mu2), ("lambda_min(Q)", mu4)] {
        ensure((val - mu3).abs() <= 1e-7 * scale, || {
            format!("seed {seed}: {name} gives {val:.12e}, sigma_min(M) gives {mu3:.12e}")
        })?;
    }
    Ok(())
}

/// `|μ^Q² − μ^C²| ≤ Σ‖[X_j, X_k]‖ + 1e-8`.
pub fn commutator_bound(seed: u64) -> Check {
    let mut r = rng(seed);
    let (n, d) = random_shape(&mut r);
    let mats = random_tuple(&mut r, n, d);
    let lam = random_probe(&mut r, d, 2.0);
    let t = tuple(&mats);
    let rep = build_clifford(d).unwrap();
    let mq = quadratic_gap(&t, &lam).map_err(|e| e.to_string())?;
    let mc = clifford_gap(&t, &lam, &rep).map_err(|e| e.to_string())?;
    let bound = commutator_sum(&mats);
    let lhs = (mq * mq - mc * mc).abs();
    ensure(lhs <= bound + 1e-8, || format!("seed {seed}: |muQ^2 - muC^2| = {lhs:.6e} > bound {bound:.6e}"))
}

/// Both gaps are 1-Lipschitz in λ (1e-9 slack).
pub fn lipschitz(seed: u64) -> Check {
    let mut r = rng(seed);
    let (n, d) = random_shape(&mut r);
    let mats = random_tuple(&mut r, n, d);
    let a = random_probe(&mut r, d, 2.0);
    let step = random_probe(&mut r, d, 0.5);
    let b = ProbePoint::new(a.coords().iter().zip(step.coords()).map(|(x, y)| x + y).collect()).unwrap();
    let t = tuple(&mats);
    let rep = build_clifford(d).unwrap();
    let dist = a.distance(&b);
    let dq = (quadratic_gap(&t, &a).unwrap() - quadratic_gap(&t, &b).unwrap()).abs();
    let dc = (clifford_gap(&t, &a, &rep).unwrap() - clifford_gap(&t, &b, &rep).unwrap()).abs();
    ensure(dq <= dist + 1e-9 && dc <= dist + 1e-9, || {
        format!("seed {seed}: gap changes {dq:.6e} / {dc:.6e} over distance {dist:.6e}")
    })
}

/// `‖Av − λv‖² = Δ²_v A + (E_v[A] − λ)²` within 1e-10 relative.
pub fn eigen_error_identity(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(1..=16);
    let a = random_hermitian(&mut r, n);
    let v = StateVector::new(random_unit(&mut r, n)).unwrap();
    let lambda = r.random_range(-3.0..3.0);
    let aop = op(&a);
    let lhs = eigen_error(&aop, &v, lambda).unwrap().powi(2);
    let direct = eigen_error_sq(&a, v.entries(), lambda);
    let rhs = variance_sq(&aop, &v).unwrap() + (expectation(&aop, &v).unwrap() - lambda).powi(2);
    let scale = direct.max(1e-300);
    ensure((lhs - rhs).abs() <= 1e-10 * scale && (lhs - direct).abs() <= 1e-10 * scale, || {
        format!("seed {seed}: ||Av - lv||^2 = {lhs:.15e}, variance form {rhs:.15e}, direct {direct:.15e}")
    })
}

/// `|⟨v, w⟩| ≤ (‖Av−λv‖ + ‖Aw−μw‖)/|λ−μ|`, including near-eigenvector pairs.
pub fn overlap_lemma(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(2..=12);
    let a = random_hermitian(&mut r, n);
    let aop = op(&a);
    let (vals, vecs) = aop.eigen_decomposition();
    // perturbed eigenvectors make the bound nearly tight
    let perturb = |k: usize, r: &mut rand_chacha::ChaCha8Rng| {
        let noise = random_unit(r, n);
        let eps = r.random_range(0.0..0.3);
        let raw: Vec<_> = (0..n).map(|i| vecs[(i, k)] + noise[i] * eps).collect();
        StateVector::normalized(raw).unwrap()
    };
    let (v, w, lam, mu) = if r.random_bool(0.5) {
        let (i, j) = (0, n - 1);
        (perturb(i, &mut r), perturb(j, &mut r), vals[i], vals[j])
    } else {
        let lam = r.random_range(-2.0..2.0);
        let mu = lam + r.random_range(0.01..2.0);
        (
            StateVector::new(random_unit(&mut r, n)).unwrap(),
            StateVector::new(random_unit(&mut r, n)).unwrap(),
            lam,
            mu,
        )
    };
    if lam == mu {
        return Ok(());
    }
    let ok = overlap_bound_check(&aop, &v, &w, lam, mu).map_err(|e| e.to_string())?;
    ensure(ok, || format!("seed {seed}: overlap lemma rejected"))
}

/// Both gaps are unchanged under `X_j → U X_j U†` (1e-9).
pub fn unitary_invariance(seed: u64) -> Check {
    let mut r = rng(seed);
    let (n, d) = random_shape(&mut r);
    let mats = random_tuple(&mut r, n, d);
    let u = random_unitary(&mut r, n);
    let rotated: Vec<DMat> = mats.iter().map(|x| &u * x * u.adjoint()).collect();
    let lam = random_probe(&mut r, d, 2.0);
    let rep = build_clifford(d).unwrap();
    let (t, tu) = (tuple(&mats), tuple(&rotated));
    let dq = (quadratic_gap(&t, &lam).unwrap() - quadratic_gap(&tu, &lam).unwrap()).abs();
    let dc = (clifford_gap(&t, &lam, &rep).unwrap() - clifford_gap(&tu, &lam, &rep).unwrap()).abs();
    ensure(dq <= 1e-9 && dc <= 1e-9, || format!("seed {seed}: gaps moved by {dq:.3e} / {dc:.3e}"))
}

/// With `S` commuting with every `X_j` except one it anticommutes with, both
/// gaps are even in that coordinate.
pub fn symmetry_theorem(seed: u64) -> Check {
    let mut r = rng(seed);
    let d = r.random_range(1..=3);
    let flipped = r.random_range(0..d);
    let (mats, s) = symmetric_instance(&mut r, d, flipped);
    let t = tuple(&mats);
    let lam = random_probe(&mut r, d, 2.0);
    let rep = build_clifford(d).unwrap();
    let ok = verify_symmetry(&t, &s, flipped, &lam, &rep, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let gamma = lam.flipped(flipped);
    let dq = (quadratic_gap(&t, &lam).unwrap() - quadratic_gap(&t, &gamma).unwrap()).abs();
    ensure(ok && dq <= 1e-8, || format!("seed {seed}: symmetry fails (d = {d}, flipped {flipped}, dq = {dq:.3e})"))
}

/// Runs `check` on seeds `base..base+count`, returning the violations.
pub fn run_suite(check: fn(u64) -> Check, base: u64, count: u64) -> Vec<String> {
    (base..base + count).filter_map(|s| check(s).err()).collect()
}

/// Modification sandwich `(1−C)^{1/2} μ ≤ μ(X, H+H_0) ≤ (1+C)^{1/2} μ` (1e-8).
/// `Ok(false)` when the draw has `C ≥ 1` and says nothing.
pub fn sandwich(seed: u64) -> std::result::Result<bool, String> {
    use quadps::truncation::{modified_gap_bounds, perturbation_constant};
    use quadps::{HermitianOperator, ObservableTuple};
    let mut r = rng(seed);
    let n = r.random_range(2..=12);
    let k = r.random_range(1..=2);
    let mut ops: Vec<HermitianOperator> = (0..k)
        .map(|_| {
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let x: f64 = r.random_range(0.5..3.0);
                    if r.random_bool(0.5) {
                        x
                    } else {
                        -x
                    }
                })
                .collect();
            HermitianOperator::diagonal(&d).unwrap()
        })
        .collect();
    ops.push(op(&random_hermitian(&mut r, n)));
    let t = ObservableTuple::new(ops, k).unwrap();
    let h0 = op(&(random_hermitian(&mut r, n) * c(r.random_range(0.01..0.4), 0.0)));
    let cc = perturbation_constant(&t, t.op(k), &h0).map_err(|e| e.to_string())?;
    if cc >= 1.0 {
        return Ok(false);
    }
    let cert = modified_gap_bounds(&t, &h0, &SolverOptions::default()).map_err(|e| e.to_string())?;
    // independent dense evaluation of the modified gap
    let hm = t.op(k).to_dense() + h0.to_dense();
    let mut q = &hm * &hm;
    for j in 0..k {
        let x = t.op(j).to_dense();
        q += &x * &x;
    }
    let modified = spectrum(&q)[0].max(0.0).sqrt();
    let mu = cert.mu_full.unwrap();
    let (lo, hi) = ((1.0 - cc).sqrt() * mu, (1.0 + cc).sqrt() * mu);
    ensure(
        modified >= lo - 1e-8 && modified <= hi + 1e-8 && (modified - cert.mu_modified).abs() <= 1e-8,
        || format!("seed {seed}: modified gap {modified:.10} outside [{lo:.10}, {hi:.10}] (C = {cc:.4})"),
    )?;
    Ok(true)
}
