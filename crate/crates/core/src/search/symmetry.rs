//! Sampling of the sandwiching symmetry group: invertible (U,V,W) acting
//! on a decomposition as A -> UAV^-1, B -> VBW^-1, C -> WCU^-1, which
//! leaves the computed tensor unchanged. Random orbit elements are tried
//! in search of a representative with small support.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{Decomposition, RankOneTerm};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::search::gf2::GfMat;

#[derive(Debug, Clone)]
pub struct SymmetryOutcome {
    pub best: Decomposition,
    pub best_support: usize,
    pub input_support: usize,
    pub trials: u64,
}

/// Applies `trials` random symmetry elements and returns the candidate
/// with the smallest support (the input counts as a candidate, so support
/// never increases). Over Z2 the elements are uniform invertible matrices;
/// over the integers, signed permutations (the integer-invertible
/// transformations that cannot inflate coefficients).
pub fn degroote_sample(
    dec: &Decomposition,
    trials: u64,
    seed: u64,
) -> Result<SymmetryOutcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_support = dec.support();
    let mut best = dec.clone();
    let mut best_support = input_support;
    for _ in 0..trials {
        let candidate = match dec.ring {
            Ring::Z2 => sandwich_z2(dec, &mut rng)?,
            Ring::Integer => sandwich_signed_permutation(dec, &mut rng)?,
            Ring::Mod2k(_) => {
                return Err(Error::Unsupported(
                    "symmetry sampling works over Z2 or the integers".into(),
                ))
            }
        };
        let support = candidate.support();
        if support < best_support {
            best_support = support;
            best = candidate;
        }
    }
    debug_assert!(best.verify().pass, "symmetry action preserves verification");
    Ok(SymmetryOutcome {
        best,
        best_support,
        input_support,
        trials,
    })
}

/// Applies one explicit sandwich (U, V, W) over the ring of `dec`.
pub fn sandwich(
    dec: &Decomposition,
    u: &Matrix<BigInt>,
    v: &Matrix<BigInt>,
    w: &Matrix<BigInt>,
    v_inv: &Matrix<BigInt>,
    w_inv: &Matrix<BigInt>,
    u_inv: &Matrix<BigInt>,
) -> Result<Decomposition, Error> {
    let terms: Result<Vec<RankOneTerm>, Error> = dec
        .terms()
        .iter()
        .map(|t| {
            Ok(RankOneTerm {
                a: u.mul(&t.a)?.mul(v_inv)?,
                b: v.mul(&t.b)?.mul(w_inv)?,
                c: w.mul(&t.c)?.mul(u_inv)?,
            })
        })
        .collect();
    Decomposition::new(dec.shape, dec.ring, terms?)
}

fn gf_to_matrix(g: &GfMat) -> Matrix<BigInt> {
    let mut m = Matrix::zero(g.rows, g.cols);
    for r in 0..g.rows {
        for c in 0..g.cols {
            if g.get(r, c) {
                *m.at_mut(r, c) = BigInt::from(1);
            }
        }
    }
    m
}

fn sandwich_z2(dec: &Decomposition, rng: &mut ChaCha8Rng) -> Result<Decomposition, Error> {
    let s = dec.shape;
    let u = GfMat::random_invertible(s.n, rng);
    let v = GfMat::random_invertible(s.m, rng);
    let w = GfMat::random_invertible(s.p, rng);
    let ui = u.inverse().expect("sampled invertible");
    let vi = v.inverse().expect("sampled invertible");
    let wi = w.inverse().expect("sampled invertible");
    sandwich(
        dec,
        &gf_to_matrix(&u),
        &gf_to_matrix(&v),
        &gf_to_matrix(&w),
        &gf_to_matrix(&vi),
        &gf_to_matrix(&wi),
        &gf_to_matrix(&ui),
    )
}

/// Random signed permutation matrix and its inverse (the transpose with
/// the same signs).
fn signed_permutation(n: usize, rng: &mut ChaCha8Rng) -> (Matrix<BigInt>, Matrix<BigInt>) {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let signs: Vec<i64> = (0..n)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    let mut mat = Matrix::zero(n, n);
    let mut inv = Matrix::zero(n, n);
    for (row, (&col, &sign)) in perm.iter().zip(&signs).enumerate() {
        *mat.at_mut(row, col) = BigInt::from(sign);
        *inv.at_mut(col, row) = BigInt::from(sign);
    }
    (mat, inv)
}

fn sandwich_signed_permutation(
    dec: &Decomposition,
    rng: &mut ChaCha8Rng,
) -> Result<Decomposition, Error> {
    let s = dec.shape;
    let (u, ui) = signed_permutation(s.n, rng);
    let (v, vi) = signed_permutation(s.m, rng);
    let (w, wi) = signed_permutation(s.p, rng);
    sandwich(dec, &u, &v, &w, &vi, &wi, &ui)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::structure::{Analyzer, Objective};

    #[test]
    fn identity_sandwich_is_identity() {
        let dec = builtin::strassen();
        let id = Matrix::<BigInt>::identity(2);
        let out = sandwich(&dec, &id, &id, &id, &id, &id, &id).unwrap();
        assert_eq!(out, dec);
    }

    #[test]
    fn signed_permutations_preserve_verification_and_support() {
        let dec = builtin::strassen();
        let out = degroote_sample(&dec, 50, 9).unwrap();
        assert!(out.best.verify().pass);
        // signed permutations reposition coefficients without changing
        // how many there are
        assert_eq!(out.best_support, out.input_support);
        assert_eq!(out.best.rank(), 7);
    }

    #[test]
    fn z2_orbit_preserves_verification_and_structure() {
        let (z2, _) = builtin::standard_222().reduce_mod(Ring::Z2).unwrap();
        let before = Analyzer::new(&z2)
            .unwrap()
            .analyze(Objective::Coverage)
            .unwrap()
            .indicator();
        let out = degroote_sample(&z2, 100, 11).unwrap();
        assert!(out.best.verify().pass);
        let after = Analyzer::new(&out.best)
            .unwrap()
            .analyze(Objective::Coverage)
            .unwrap()
            .indicator();
        assert_eq!(before, after, "structure indicator is orbit-invariant");
    }
}
