mod common;

use common::spectrum;
use quadps::linalg::{c, DMat};
use quadps::models::{build_chern2d, build_ssh, ScaledTuple};
use quadps::truncation::{compress_to_ball, truncated_gap, truncation_ladder};
use quadps::{Error, ObservableTuple, ProbePoint, SolverOptions};

fn dense_gap(t: &ObservableTuple, lam: &[f64]) -> f64 {
    let n = t.dim();
    let q = t.ops().iter().zip(lam).fold(DMat::zeros(n, n), |acc, (x, &v)| {
        let s = x.to_dense() - DMat::identity(n, n) * c(v, 0.0);
        acc + &s * &s
    });
    spectrum(&q)[0].max(0.0).sqrt()
}

/// `‖Z⁻¹(HH₀ + H₀H + H₀²)Z⁻¹‖` with `H₀` zeroing every coupling that leaves the ball.
fn dense_c(t: &ObservableTuple, lam: &[f64], rho: f64) -> f64 {
    let n = t.dim();
    let p = t.d() - 1;
    let pos: Vec<Vec<f64>> = (0..p).map(|j| t.op(j).as_diagonal().unwrap()).collect();
    let z: Vec<f64> = (0..n)
        .map(|i| (0..p).map(|j| (pos[j][i] - lam[j]).powi(2)).sum::<f64>().sqrt())
        .collect();
    let h = t.op(p).to_dense() - DMat::identity(n, n) * c(lam[p], 0.0);
    let inside = DMat::from_fn(n, n, |i, k| if i == k && z[i] <= rho { c(1.0, 0.0) } else { c(0.0, 0.0) });
    let h0 = &inside * &h * &inside - &h;
    let zinv = DMat::from_fn(n, n, |i, k| if i == k { c(1.0 / z[i], 0.0) } else { c(0.0, 0.0) });
    let m = &zinv * (&h * &h0 + &h0 * &h + &h0 * &h0) * &zinv;
    m.singular_values().max()
}

#[test]
fn ssh_certificates_contain_the_dense_gap() {
    let t = build_ssh(12, 0.7, 1.4).unwrap();
    let lam = [12.3, 0.2];
    let probe = ProbePoint::new(lam.to_vec()).unwrap();
    let full = dense_gap(&t, &lam);
    let rhos = [1.0, 2.0, 3.5, 6.0, 30.0];
    let certs = truncation_ladder(&t, &probe, &rhos, Some(full), &SolverOptions::default()).unwrap();
    for (cert, &rho) in certs.iter().zip(&rhos) {
        assert!(cert.contains(full, 1e-9), "rho {rho}: {full} outside [{}, {:?}]", cert.lower, cert.upper);
        assert!((cert.c - dense_c(&t, &lam, rho)).abs() < 1e-9 * (1.0 + cert.c));
        let expected_retained = t.op(0).as_diagonal().unwrap().iter().filter(|x| (*x - lam[0]).abs() <= rho).count();
        assert_eq!(cert.retained, expected_retained);
    }
    // a ball holding every site reproduces the full gap with C = 0
    let last = certs.last().unwrap();
    assert_eq!(last.c, 0.0);
    assert!((last.mu_truncated - full).abs() < 1e-9);
    assert!((last.lower - full).abs() < 1e-9);
}

#[test]
fn compressed_gap_matches_a_dense_submatrix() {
    let t = build_chern2d(6, 6, &Default::default(), 1.0, Default::default()).unwrap();
    let lam = [1.2, -0.3, 0.3];
    let probe = ProbePoint::new(lam.to_vec()).unwrap();
    let rho = 2.2;
    let (mu, cert) = truncated_gap(&t, &probe, rho, &SolverOptions::default()).unwrap();
    let (xs, ys) = (t.op(0).as_diagonal().unwrap(), t.op(1).as_diagonal().unwrap());
    let keep: Vec<usize> = (0..t.dim())
        .filter(|&i| ((xs[i] - lam[0]).powi(2) + (ys[i] - lam[1]).powi(2)).sqrt() <= rho)
        .collect();
    assert_eq!(keep.len(), cert.retained);
    let sub = |m: DMat| DMat::from_fn(keep.len(), keep.len(), |a, b| m[(keep[a], keep[b])]);
    let k = keep.len();
    let q = (0..3).fold(DMat::zeros(k, k), |acc, j| {
        let s = sub(t.op(j).to_dense()) - DMat::identity(k, k) * c(lam[j], 0.0);
        acc + &s * &s
    });
    let compressed = spectrum(&q)[0].max(0.0).sqrt();
    assert!((mu - rho.min(compressed)).abs() < 1e-9);
    let full = dense_gap(&t, &lam);
    assert!(cert.contains(full, 1e-9));

    let (small, kept) = compress_to_ball(&t, 1e3).unwrap();
    assert_eq!(small.dim(), t.dim());
    assert_eq!(kept.len(), t.dim());
}

#[test]
fn scaled_probes_are_shifted_in_scaled_units() {
    let base = build_chern2d(6, 6, &Default::default(), 1.0, Default::default()).unwrap();
    let st = ScaledTuple::new(base, 0.5).unwrap();
    let lam = ProbePoint::new(vec![2.2, 0.7, 0.0]).unwrap();
    let probe = st.probe(&lam).unwrap();
    let (_, cert) = truncated_gap(st.scaled(), &probe, 100.0, &SolverOptions::default()).unwrap();
    let full = dense_gap(st.scaled(), probe.coords());
    assert!((cert.mu_truncated - full).abs() < 1e-9);
}

#[test]
fn probe_on_a_site_and_empty_balls_are_rejected() {
    let t = build_ssh(4, 0.7, 1.4).unwrap();
    let on_site = ProbePoint::new(vec![3.0, 0.0]).unwrap();
    assert!(matches!(
        truncated_gap(&t, &on_site, 2.0, &SolverOptions::default()),
        Err(Error::ZNotInvertible { index: 2, .. })
    ));
    let far = ProbePoint::new(vec![50.5, 0.0]).unwrap();
    assert!(matches!(truncated_gap(&t, &far, 1.0, &SolverOptions::default()), Err(Error::EmptyBall(_))));
}
