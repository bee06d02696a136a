use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::Error;

/// Scalar entries a matrix can hold. `BigInt` is the default for anything
/// user-facing; `i64` is used in tests and tight loops where the value range
/// is known, with checked arithmetic so an overflow can never pass silently.
pub trait Entry: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Entry for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Entry for i64 {
    fn zero() -> Self {
        0
    }
    fn from_i64(v: i64) -> Self {
        v
    }
    fn add(&self, other: &Self) -> Self {
        self.checked_add(*other)
            .expect("i64 overflow in matrix arithmetic")
    }
    fn sub(&self, other: &Self) -> Self {
        self.checked_sub(*other)
            .expect("i64 overflow in matrix arithmetic")
    }
    fn mul(&self, other: &Self) -> Self {
        self.checked_mul(*other)
            .expect("i64 overflow in matrix arithmetic")
    }
    fn neg(&self) -> Self {
        self.checked_neg()
            .expect("i64 overflow in matrix arithmetic")
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

/// Dense row-major matrix with exact entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T = BigInt> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<T>,
}

/// Exact integer matrix buffer used by the executor.
pub type MatrixBuffer = Matrix<BigInt>;

impl<T: Entry> Matrix<T> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, Error> {
        if data.len() != rows * cols {
            return Err(Error::Structural(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_i64s(rows: usize, cols: usize, data: &[i64]) -> Result<Self, Error> {
        Self::from_vec(rows, cols, data.iter().map(|&v| T::from_i64(v)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zero(dim, dim);
        for i in 0..dim {
            *m.at_mut(i, i) = T::from_i64(1);
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    pub fn support(&self) -> usize {
        self.data.iter().filter(|e| !e.is_zero()).count()
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.zip(other, |a, b| a.sub(b))
    }

    fn zip(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self, Error> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Structural(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn neg(&self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.neg()).collect(),
        }
    }

    /// Naive exact product; also serves as the standard-algorithm kernel.
    pub fn mul(&self, other: &Self) -> Result<Self, Error> {
        if self.cols != other.rows {
            return Err(Error::Structural(format!(
                "inner dimension mismatch: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out: Matrix<T> = Matrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k).clone();
                if Entry::is_zero(&a) {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a.mul(other.at(k, j));
                    let cur = out.at(i, j).clone();
                    *out.at_mut(i, j) = cur.add(&t);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Matrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(c, r) = self.at(r, c).clone();
            }
        }
        out
    }

    pub fn kronecker(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Matrix::zero(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.at(r1, c1);
                if a.is_zero() {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        *out.at_mut(r1 * other.rows + r2, c1 * other.cols + c2) =
                            a.mul(other.at(r2, c2));
                    }
                }
            }
        }
        out
    }

    /// Embeds this matrix at block offset (ro, co) of a larger zero matrix.
    pub fn embed(&self, rows: usize, cols: usize, ro: usize, co: usize) -> Self {
        let mut out = Matrix::zero(rows, cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                *out.at_mut(ro + r, co + c) = self.at(r, c).clone();
            }
        }
        out
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        let mut out = Matrix::zero(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                *out.at_mut(r, c) = self.at(r0 + r, c0 + c).clone();
            }
        }
        out
    }

    pub fn map<U: Entry>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl Matrix<BigInt> {
    /// Largest absolute entry value, used to pick exact fast paths.
    pub fn max_abs(&self) -> BigInt {
        let mut m = <BigInt as Zero>::zero();
        for e in &self.data {
            let a = e.abs();
            if a > m {
                m = a;
            }
        }
        m
    }
}

impl<T: Entry + fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(r, c))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_identity() {
        let a: Matrix<i64> = Matrix::from_i64s(2, 3, &[1, 2, 3, 4, 5, 6]).unwrap();
        let id = Matrix::<i64>::identity(3);
        assert_eq!(a.mul(&id).unwrap(), a);
    }

    #[test]
    fn kronecker_dimensions_and_values() {
        let a: Matrix<i64> = Matrix::from_i64s(1, 2, &[1, -1]).unwrap();
        let b: Matrix<i64> = Matrix::from_i64s(2, 1, &[2, 3]).unwrap();
        let k = a.kronecker(&b);
        assert_eq!((k.rows, k.cols), (2, 2));
        assert_eq!(k.entries(), &[2, -2, 3, -3]);
    }

    #[test]
    #[should_panic(expected = "overflow")]
    fn i64_overflow_is_loud() {
        let a: Matrix<i64> = Matrix::from_i64s(1, 1, &[i64::MAX]).unwrap();
        let _ = a.add(&a).unwrap();
    }
}
