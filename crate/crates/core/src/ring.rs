use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Error;

/// Coefficient ring of a decomposition.
///
/// `Z2` is the two-element field, `Mod2k(k)` is arithmetic modulo 2^k
/// (the intermediate rings of Hensel lifting), and `Integer` is exact
/// arbitrary-precision integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ring {
    Z2,
    Mod2k(u32),
    Integer,
}

impl Ring {
    /// Canonical representative of `x` in this ring.
    ///
    /// `Z2` uses {0,1}, `Mod2k` uses [0, 2^k), `Integer` is the identity.
    pub fn normalize(&self, x: &BigInt) -> BigInt {
        match self {
            Ring::Z2 => {
                if num_integer::Integer::is_even(x) {
                    BigInt::zero()
                } else {
                    BigInt::one()
                }
            }
            Ring::Mod2k(k) => {
                let m = BigInt::one() << *k;
                let r = x % &m;
                if r.is_negative() {
                    r + m
                } else {
                    r
                }
            }
            Ring::Integer => x.clone(),
        }
    }

    /// Representative in the symmetric range; for `Mod2k(k)` this is
    /// (-2^(k-1), 2^(k-1)].
    pub fn symmetric(&self, x: &BigInt) -> BigInt {
        match self {
            Ring::Z2 => self.normalize(x),
            Ring::Mod2k(k) => {
                let r = self.normalize(x);
                let half = BigInt::one() << (*k - 1);
                if r > half {
                    r - (BigInt::one() << *k)
                } else {
                    r
                }
            }
            Ring::Integer => x.clone(),
        }
    }

    pub fn token(&self) -> String {
        match self {
            Ring::Z2 => "z2".to_string(),
            Ring::Mod2k(k) => format!("z2^{k}"),
            Ring::Integer => "int".to_string(),
        }
    }

    pub fn parse_token(s: &str) -> Result<Ring, Error> {
        if s == "z2" {
            return Ok(Ring::Z2);
        }
        if s == "int" {
            return Ok(Ring::Integer);
        }
        if let Some(k) = s.strip_prefix("z2^") {
            let k: u32 = k
                .parse()
                .map_err(|_| Error::Parse(format!("bad ring token '{s}'")))?;
            if k == 0 {
                return Err(Error::Parse("ring modulus exponent must be >= 1".into()));
            }
            return Ok(Ring::Mod2k(k));
        }
        Err(Error::Parse(format!("unknown ring '{s}'")))
    }
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}
