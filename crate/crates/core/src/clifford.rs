//! Irreducible Clifford representations `Γ_1 … Γ_d`.

use crate::error::{Error, Result};
use crate::linalg::{pauli, DMat, I, ONE};

pub const MAX_DIM: usize = 8;
const VERIFY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordRep {
    gammas: Vec<DMat>,
}

impl CliffordRep {
    /// Wraps user-supplied matrices without checking the relations; see [`verify_clifford`].
    pub fn from_gammas(gammas: Vec<DMat>) -> Result<Self> {
        let Some(first) = gammas.first() else {
            return Err(Error::UnsupportedDimension(0));
        };
        let m = first.nrows();
        for g in &gammas {
            if g.nrows() != m || g.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: g.ncols().max(g.nrows()),
                });
            }
        }
        Ok(CliffordRep { gammas })
    }

    pub fn d(&self) -> usize {
        self.gammas.len()
    }

    pub fn rep_dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    pub fn gammas(&self) -> &[DMat] {
        &self.gammas
    }

    pub fn gamma(&self, j: usize) -> &DMat {
        &self.gammas[j]
    }
}

/// d = 1, 2, 3 are `[1]`, `(σx, σy)` and `(σx, σy, σz)`; larger d by
/// `Γ_j ⊗ σz`, `I ⊗ σx`, `I ⊗ σy` from d − 2.
pub fn build_clifford(d: usize) -> Result<CliffordRep> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let [sx, sy, sz] = pauli();
    let gammas = match d {
        1 => vec![DMat::from_element(1, 1, ONE)],
        2 => vec![sx, sy],
        3 => vec![sx, sy, sz],
        _ => {
            let base = build_clifford(d - 2)?;
            let id = DMat::identity(base.rep_dim(), base.rep_dim());
            let mut g: Vec<DMat> = base.gammas.iter().map(|g| g.kronecker(&sz)).collect();
            g.push(id.kronecker(&sx));
            g.push(id.kronecker(&sy));
            g
        }
    };
    Ok(CliffordRep { gammas })
}

fn max_abs(a: &DMat) -> f64 {
    a.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Hermitian, squares to identity and pairwise anticommuting, entrywise within 1e-14.
pub fn verify_clifford(rep: &CliffordRep) -> bool {
    let m = rep.rep_dim();
    let id = DMat::identity(m, m);
    for (j, a) in rep.gammas.iter().enumerate() {
        if max_abs(&(a - a.adjoint())) > VERIFY_TOL || max_abs(&(a * a - &id)) > VERIFY_TOL {
            return false;
        }
        for b in &rep.gammas[j + 1..] {
            if max_abs(&(a * b + b * a)) > VERIFY_TOL {
                return false;
            }
        }
    }
    true
}

/// Unitary `R` with `R Γ_d R† = −Γ_d`, used by the symmetry theorem.
///
/// Even d: `R ∝ Γ_1⋯Γ_{d−1}` commutes with `Γ_j` for j < d.
/// Odd d: `R = Γ_d`, which instead negates every `Γ_j` with j < d and fixes
/// `Γ_d`; then `(S⊗R) L_λ (S⊗R)† = −L_γ`. No unitary can negate all the
/// generators of an odd irreducible representation, since `Γ_1⋯Γ_d` is a scalar.
pub fn flip_witness(rep: &CliffordRep) -> DMat {
    let d = rep.d();
    if d % 2 == 1 {
        return rep.gammas[d - 1].clone();
    }
    let m = rep.rep_dim();
    let mut r = DMat::identity(m, m);
    for g in &rep.gammas[..d - 1] {
        r = &r * g;
    }
    // (Γ_1⋯Γ_k)† = (−1)^{k(k−1)/2} Γ_1⋯Γ_k; this phase makes R Hermitian
    let k = d - 1;
    if (k * (k - 1) / 2) % 2 == 1 {
        r *= I;
    }
    r
}

/// `Γ_1 Γ_2 ⋯ Γ_d`.
pub fn chirality_product(rep: &CliffordRep) -> DMat {
    let m = rep.rep_dim();
    rep.gammas.iter().fold(DMat::identity(m, m), |acc, g| acc * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    #[test]
    fn low_dimensions_match_pauli() {
        let [sx, sy, sz] = pauli();
        assert_eq!(build_clifford(2).unwrap().gammas(), &[sx.clone(), sy.clone()]);
        assert_eq!(build_clifford(3).unwrap().gammas(), &[sx, sy, sz]);
        assert_eq!(build_clifford(1).unwrap().rep_dim(), 1);
    }

    #[test]
    fn all_supported_dimensions_verify() {
        for d in 1..=MAX_DIM {
            let rep = build_clifford(d).unwrap();
            assert_eq!(rep.d(), d);
            assert_eq!(rep.rep_dim(), 1 << (d / 2));
            assert!(verify_clifford(&rep), "d={d}");
        }
    }

    #[test]
    fn d4_brute_force() {
        let rep = build_clifford(4).unwrap();
        assert_eq!(rep.rep_dim(), 4);
        let id = DMat::identity(4, 4);
        for j in 0..4 {
            assert_eq!(rep.gamma(j) * rep.gamma(j), id);
            for k in j + 1..4 {
                let ac = rep.gamma(j) * rep.gamma(k) + rep.gamma(k) * rep.gamma(j);
                assert!(ac.iter().all(|&v| v == ZERO));
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions_and_reps() {
        assert!(matches!(build_clifford(0), Err(Error::UnsupportedDimension(0))));
        assert!(matches!(build_clifford(9), Err(Error::UnsupportedDimension(9))));
        let [sx, _, _] = pauli();
        let twice = CliffordRep::from_gammas(vec![sx.clone(), sx]).unwrap();
        assert!(!verify_clifford(&twice));
    }

    #[test]
    fn even_witness_flips_last_generator_only() {
        for d in [2, 4, 6, 8] {
            let rep = build_clifford(d).unwrap();
            let r = flip_witness(&rep);
            let m = rep.rep_dim();
            assert!(max_abs(&(&r * r.adjoint() - DMat::identity(m, m))) <= 1e-13);
            for j in 0..d {
                let conj = &r * rep.gamma(j) * r.adjoint();
                let expected = if j == d - 1 { -rep.gamma(j) } else { rep.gamma(j).clone() };
                assert!(max_abs(&(conj - expected)) <= 1e-13, "d={d} j={j}");
            }
        }
    }

    #[test]
    fn odd_witness_negates_all_but_last() {
        for d in [1, 3, 5, 7] {
            let rep = build_clifford(d).unwrap();
            let r = flip_witness(&rep);
            for j in 0..d {
                let conj = &r * rep.gamma(j) * r.adjoint();
                let expected = if j == d - 1 { rep.gamma(j).clone() } else { -rep.gamma(j) };
                assert!(max_abs(&(conj - expected)) <= 1e-13, "d={d} j={j}");
            }
        }
    }

    #[test]
    fn odd_chirality_product_is_scalar() {
        // so conjugation cannot send every Γ_j to −Γ_j
        for d in [1, 3, 5, 7] {
            let rep = build_clifford(d).unwrap();
            let p = chirality_product(&rep);
            let m = rep.rep_dim();
            let scalar = p[(0, 0)];
            assert!(scalar.norm() > 0.5);
            assert!(max_abs(&(p - DMat::identity(m, m) * scalar)) <= 1e-13, "d={d}");
        }
    }
}
