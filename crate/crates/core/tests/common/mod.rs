//! Shared test oracles, independent of the library's verification path:
//! every Brent equation is evaluated directly, one product sum per
//! equation, with no accumulation tensor or bit packing.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use struxmm_core::decomposition::{Decomposition, Target};
use struxmm_core::ring::Ring;

pub fn brent_violations(dec: &Decomposition) -> Vec<u64> {
    let target = Target::Single(dec.shape);
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
                            let want = if target.coordinate(i, j, j2, k, k2, i2) {
                                BigInt::one()
                            } else {
                                BigInt::zero()
                            };
                            let ok = match dec.ring {
                                Ring::Integer => sum == want,
                                r => r.normalize(&sum) == want,
                            };
                            if !ok {
                                let x = (i * m + j) as u64;
                                let y = (j2 * p + k) as u64;
                                let z = (k2 * n + i2) as u64;
                                bad.push((x * (m * p) as u64 + y) * (p * n) as u64 + z);
                            }
                        }
                    }
                }
            }
        }
    }
    bad
}
