//! Brent-equation verification.
//!
//! A term list decomposes the target tensor iff for every coordinate
//! triple ((i,j),(j2,k),(k2,i2)) the accumulated sum over terms of
//! a[i,j]*b[j2,k]*c[k2,i2] equals the target coordinate. Verification
//! accumulates the full tensor of the decomposition in O(r*(nmp)^2) and
//! compares entrywise. Over Z2 with factor matrices that fit a machine
//! word, factors are bit-packed and the accumulation is word-parallel.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::decomposition::{Decomposition, Target};
use crate::error::Error;
use crate::ring::Ring;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub pass: bool,
    /// Flat index ((i*m+j)*(m*p) + (j2*p+k))*(p*n) + (k2*n+i2) of the first
    /// violated equation, when verification fails.
    pub first_violation: Option<u64>,
    pub rank: usize,
    pub equations: u64,
}

impl Decomposition {
    /// Checks the Brent equations against the matmul tensor of `self.shape`.
    pub fn verify(&self) -> VerificationReport {
        self.verify_against(&Target::Single(self.shape))
            .expect("shape consistency is enforced at construction")
    }

    /// Checks the Brent equations against an explicit target tensor.
    pub fn verify_against(&self, target: &Target) -> Result<VerificationReport, Error> {
        let ambient = target.ambient();
        if ambient != self.shape {
            return Err(Error::Structural(format!(
                "target ambient shape {} does not match decomposition shape {}",
                ambient, self.shape
            )));
        }
        let (n, m, p) = (self.shape.n, self.shape.m, self.shape.p);
        let (nm, mp, pn) = (n * m, m * p, p * n);
        let equations = (nm * mp * pn) as u64;

        if self.ring == Ring::Z2 && nm <= 64 && mp <= 64 && pn <= 64 {
            return Ok(self.verify_z2_packed(target, equations));
        }

        // Exact i64 fast path when the accumulated sums provably fit.
        if let Some(report) = self.try_verify_i64(target, equations) {
            return Ok(report);
        }

        Ok(self.verify_big(target, equations))
    }

    fn residual_matches(&self, sum: &BigInt, expected_one: bool) -> bool {
        let want = if expected_one {
            BigInt::one()
        } else {
            BigInt::zero()
        };
        match self.ring {
            Ring::Integer => *sum == want,
            _ => self.ring.normalize(sum) == want,
        }
    }

    fn verify_big(&self, target: &Target, equations: u64) -> VerificationReport {
        let (n, m, p) = (self.shape.n, self.shape.m, self.shape.p);
        let (nm, mp, pn) = (n * m, m * p, p * n);
        let mut acc = vec![BigInt::zero(); nm * mp * pn];
        for t in self.terms() {
            for x in 0..nm {
                let av = t.a.at(x / m, x % m);
                if av.is_zero() {
                    continue;
                }
                for y in 0..mp {
                    let bv = t.b.at(y / p, y % p);
                    if bv.is_zero() {
                        continue;
                    }
                    let ab = av * bv;
                    let base = (x * mp + y) * pn;
                    for z in 0..pn {
                        let cv = t.c.at(z / n, z % n);
                        if cv.is_zero() {
                            continue;
                        }
                        acc[base + z] += &ab * cv;
                    }
                }
            }
        }
        self.compare_acc(target, equations, |idx| acc[idx as usize].clone())
    }

    fn try_verify_i64(&self, target: &Target, equations: u64) -> Option<VerificationReport> {
        let bound = self.max_abs_coeff();
        // |sum| <= r * B^3 must fit comfortably in i64
        let worst = BigInt::from(self.rank().max(1)) * (&bound * &bound * &bound);
        if worst > BigInt::from(i64::MAX / 4) {
            return None;
        }
        let (n, m, p) = (self.shape.n, self.shape.m, self.shape.p);
        let (nm, mp, pn) = (n * m, m * p, p * n);
        if nm
            .checked_mul(mp)
            .and_then(|v| v.checked_mul(pn))
            .map(|v| v > 1 << 28)
            .unwrap_or(true)
        {
            return None; // keep the dense accumulator modest
        }
        let mut acc = vec![0i64; nm * mp * pn];
        let as_i64 = |v: &BigInt| v.to_i64().expect("bounded by construction");
        for t in self.terms() {
            let af: Vec<i64> = t.a.entries().iter().map(as_i64).collect();
            let bf: Vec<i64> = t.b.entries().iter().map(as_i64).collect();
            let cf: Vec<i64> = t.c.entries().iter().map(as_i64).collect();
            for (x, &av) in af.iter().enumerate() {
                if av == 0 {
                    continue;
                }
                for (y, &bv) in bf.iter().enumerate() {
                    if bv == 0 {
                        continue;
                    }
                    let ab = av * bv;
                    let base = (x * mp + y) * pn;
                    for (z, &cv) in cf.iter().enumerate() {
                        if cv != 0 {
                            acc[base + z] += ab * cv;
                        }
                    }
                }
            }
        }
        Some(self.compare_acc(target, equations, |idx| BigInt::from(acc[idx as usize])))
    }

    fn compare_acc(
        &self,
        target: &Target,
        equations: u64,
        get: impl Fn(u64) -> BigInt,
    ) -> VerificationReport {
        let (n, m, p) = (self.shape.n, self.shape.m, self.shape.p);
        let (mp, pn) = (m * p, p * n);
        for x in 0..n * m {
            let (i, j) = (x / m, x % m);
            for y in 0..mp {
                let (j2, k) = (y / p, y % p);
                for z in 0..pn {
                    let (k2, i2) = (z / n, z % n);
                    let idx = ((x * mp + y) * pn + z) as u64;
                    let expected = target.coordinate(i, j, j2, k, k2, i2);
                    if !self.residual_matches(&get(idx), expected) {
                        return VerificationReport {
                            pass: false,
                            first_violation: Some(idx),
                            rank: self.rank(),
                            equations,
                        };
                    }
                }
            }
        }
        VerificationReport {
            pass: true,
            first_violation: None,
            rank: self.rank(),
            equations,
        }
    }

    fn verify_z2_packed(&self, target: &Target, equations: u64) -> VerificationReport {
        let (n, m, p) = (self.shape.n, self.shape.m, self.shape.p);
        let (nm, mp, pn) = (n * m, m * p, p * n);
        let mut acc = vec![0u64; nm * mp];
        for t in self.terms() {
            let am = pack_bits(t.a.entries());
            let bm = pack_bits(t.b.entries());
            let cm = pack_bits(t.c.entries());
            let mut abits = am;
            while abits != 0 {
                let x = abits.trailing_zeros() as usize;
                abits &= abits - 1;
                let mut bbits = bm;
                while bbits != 0 {
                    let y = bbits.trailing_zeros() as usize;
                    bbits &= bbits - 1;
                    acc[x * mp + y] ^= cm;
                }
            }
        }
        for x in 0..nm {
            let (i, j) = (x / m, x % m);
            for y in 0..mp {
                let (j2, k) = (y / p, y % p);
                let mut want = 0u64;
                for z in 0..pn {
                    let (k2, i2) = (z / n, z % n);
                    if target.coordinate(i, j, j2, k, k2, i2) {
                        want |= 1 << z;
                    }
                }
                let got = acc[x * mp + y];
                if got != want {
                    let diff = got ^ want;
                    let z = diff.trailing_zeros() as u64;
                    let idx = ((x * mp + y) * pn) as u64 + z;
                    return VerificationReport {
                        pass: false,
                        first_violation: Some(idx),
                        rank: self.rank(),
                        equations,
                    };
                }
            }
        }
        VerificationReport {
            pass: true,
            first_violation: None,
            rank: self.rank(),
            equations,
        }
    }
}

fn pack_bits(entries: &[BigInt]) -> u64 {
    let mut mask = 0u64;
    for (i, e) in entries.iter().enumerate() {
        if e.abs() == BigInt::one() {
            mask |= 1 << i;
        } else {
            debug_assert!(e.is_zero(), "Z2 entries are canonicalized to 0/1");
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::shape::Shape;

    /// Independent oracle: evaluates every Brent equation directly, one
    /// triple loop per equation, without the accumulation tensor.
    fn brent_violations(dec: &Decomposition, target: &Target) -> Vec<u64> {
        let (n, m, p) = (dec.shape.n, dec.shape.m, dec.shape.p);
        let mut bad = Vec::new();
        for i in 0..n {
            for j in 0..m {
                for j2 in 0..m {
                    for k in 0..p {
                        for k2 in 0..p {
                            for i2 in 0..n {
                                let mut sum = BigInt::zero();
                                for t in dec.terms() {
                                    sum += t.a.at(i, j) * t.b.at(j2, k) * t.c.at(k2, i2);
                                }
                                let want = target.coordinate(i, j, j2, k, k2, i2);
                                let ok = match dec.ring {
                                    Ring::Integer => {
                                        sum == if want { BigInt::one() } else { BigInt::zero() }
                                    }
                                    r => {
                                        r.normalize(&sum)
                                            == if want { BigInt::one() } else { BigInt::zero() }
                                    }
                                };
                                if !ok {
                                    let x = i * m + j;
                                    let y = j2 * p + k;
                                    let z = k2 * n + i2;
                                    bad.push(((x * m * p + y) * p * n + z) as u64);
                                }
                            }
                        }
                    }
                }
            }
        }
        bad
    }

    #[test]
    fn strassen_passes_all_64_equations() {
        let dec = builtin::strassen();
        assert!(brent_violations(&dec, &Target::Single(dec.shape)).is_empty());
        let rep = dec.verify();
        assert!(rep.pass);
        assert_eq!(rep.rank, 7);
        assert_eq!(rep.equations, 64);
    }

    #[test]
    fn standard_decomposition_passes_by_definition() {
        for (n, m, p) in [(1, 1, 2), (2, 2, 2), (3, 2, 4)] {
            let dec = Decomposition::standard(Shape::of(n, m, p), Ring::Integer);
            assert!(dec.verify().pass);
        }
    }

    #[test]
    fn sign_flip_fails_and_reports_first_violation() {
        let dec = builtin::strassen();
        let mut terms = dec.terms().to_vec();
        let old = terms[0].a.at(0, 0).clone();
        *terms[0].a.at_mut(0, 0) = -old;
        let broken = dec.with_terms(terms).unwrap();
        let oracle_bad = brent_violations(&broken, &Target::Single(broken.shape));
        assert!(!oracle_bad.is_empty());
        let rep = broken.verify();
        assert!(!rep.pass);
        assert_eq!(rep.first_violation, Some(oracle_bad[0]));
    }

    #[test]
    fn z2_packed_path_agrees_with_oracle() {
        let dec = builtin::strassen();
        let (z2, _) = dec.reduce_mod(Ring::Z2).unwrap();
        assert!(z2.verify().pass);
        assert!(brent_violations(&z2, &Target::Single(z2.shape)).is_empty());
        // break one bit
        let mut terms = z2.terms().to_vec();
        let old = terms[3].b.at(0, 1).clone();
        *terms[3].b.at_mut(0, 1) = if old.is_zero() {
            BigInt::one()
        } else {
            BigInt::zero()
        };
        let broken = z2.with_terms(terms).unwrap();
        let rep = broken.verify();
        let bad = brent_violations(&broken, &Target::Single(broken.shape));
        assert!(!rep.pass);
        assert_eq!(rep.first_violation, Some(bad[0]));
    }

    #[test]
    fn direct_sum_verifies_against_sum_target_not_full_tensor() {
        let s = builtin::strassen();
        let sum = s.direct_sum(&s).unwrap();
        assert_eq!(sum.rank(), 14);
        let tgt = Target::DirectSum(vec![s.shape, s.shape]);
        assert!(sum.verify_against(&tgt).unwrap().pass);
        assert!(brent_violations(&sum, &tgt).is_empty());
        // the full 4x4x4 tensor has cross blocks the sum does not cover
        assert!(!sum.verify().pass);
    }

    #[test]
    fn verify_invariant_under_term_reordering() {
        let dec = builtin::strassen();
        let mut terms = dec.terms().to_vec();
        terms.reverse();
        terms.swap(0, 3);
        let shuffled = dec.with_terms(terms).unwrap();
        assert!(shuffled.verify().pass);
    }
}
