use std::fmt;

use crate::error::Error;

/// Block dimensions of a matrix multiplication problem: an `n x m` matrix
/// times an `m x p` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

impl Shape {
    pub fn new(n: usize, m: usize, p: usize) -> Result<Self, Error> {
        if n == 0 || m == 0 || p == 0 {
            return Err(Error::Structural(format!(
                "shape dimensions must be positive, got {n}x{m}x{p}"
            )));
        }
        Ok(Shape { n, m, p })
    }

    /// Panicking constructor for literals that are known to be positive.
    pub fn of(n: usize, m: usize, p: usize) -> Self {
        Shape::new(n, m, p).expect("positive shape")
    }

    pub fn volume(&self) -> u128 {
        self.n as u128 * self.m as u128 * self.p as u128
    }

    /// One application of the cyclic symmetry: (n,m,p) -> (m,p,n).
    pub fn cycled(&self) -> Shape {
        Shape {
            n: self.m,
            m: self.p,
            p: self.n,
        }
    }

    /// The transpose symmetry: (n,m,p) -> (p,m,n).
    pub fn transposed(&self) -> Shape {
        Shape {
            n: self.p,
            m: self.m,
            p: self.n,
        }
    }

    pub fn is_square(&self) -> bool {
        self.n == self.m && self.m == self.p
    }

    /// Rank of the standard (one product per coordinate triple) algorithm.
    pub fn standard_rank(&self) -> usize {
        self.n * self.m * self.p
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.n, self.m, self.p)
    }
}
