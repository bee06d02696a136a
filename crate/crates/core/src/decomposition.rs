use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::Error;
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::shape::Shape;

/// One rank-one summand of a decomposition: a triple of coefficient
/// matrices. The C factor is stored as a `p x n` matrix whose `[k][i]`
/// entry is the coefficient contributing to output entry `C[i][k]`; this
/// convention keeps the cyclic symmetry a pure role rotation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankOneTerm {
    pub a: Matrix<BigInt>,
    pub b: Matrix<BigInt>,
    pub c: Matrix<BigInt>,
}

impl RankOneTerm {
    pub fn is_zero(&self) -> bool {
        self.a.is_zero() || self.b.is_zero() || self.c.is_zero()
    }

    pub fn support(&self) -> usize {
        self.a.support() + self.b.support() + self.c.support()
    }
}

/// What a list of rank-one terms is supposed to sum to. Verification of an
/// ordinary decomposition targets a single matrix multiplication tensor;
/// direct sums target the block-diagonal tensor of several.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Single(Shape),
    DirectSum(Vec<Shape>),
}

impl Target {
    /// Shape of the ambient factor spaces holding this target.
    pub fn ambient(&self) -> Shape {
        match self {
            Target::Single(s) => *s,
            Target::DirectSum(parts) => {
                let n = parts.iter().map(|s| s.n).sum();
                let m = parts.iter().map(|s| s.m).sum();
                let p = parts.iter().map(|s| s.p).sum();
                Shape { n, m, p }
            }
        }
    }

    /// Tensor coordinate at ((i,j),(j2,k),(k2,i2)): 1 if the triple is a
    /// matched coordinate of the target, 0 otherwise.
    pub fn coordinate(
        &self,
        i: usize,
        j: usize,
        j2: usize,
        k: usize,
        k2: usize,
        i2: usize,
    ) -> bool {
        match self {
            Target::Single(_) => i == i2 && j == j2 && k == k2,
            Target::DirectSum(parts) => {
                if i != i2 || j != j2 || k != k2 {
                    return false;
                }
                // all three indices must fall in the same diagonal block
                let (mut on, mut om, mut op) = (0usize, 0usize, 0usize);
                for s in parts {
                    let in_n = i >= on && i < on + s.n;
                    let in_m = j >= om && j < om + s.m;
                    let in_p = k >= op && k < op + s.p;
                    if in_n && in_m && in_p {
                        return true;
                    }
                    on += s.n;
                    om += s.m;
                    op += s.p;
                }
                false
            }
        }
    }
}

/// An explicit rank decomposition of a matrix multiplication tensor:
/// shape, coefficient ring, and an ordered list of rank-one terms.
/// Zero terms are legal and counted in the rank; `normalize` removes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub shape: Shape,
    pub ring: Ring,
    terms: Vec<RankOneTerm>,
}

/// What `reduce_mod` observed while reducing: terms that became identically
/// zero, and pairs of distinct terms that coincide entrywise in the target
/// ring (two rank-one copies that merge into a shared-factor pair).
#[derive(Debug, Clone, Default)]
pub struct ReduceReport {
    pub zero_terms: Vec<usize>,
    pub duplicate_pairs: Vec<(usize, usize)>,
}

impl Decomposition {
    pub fn new(shape: Shape, ring: Ring, terms: Vec<RankOneTerm>) -> Result<Self, Error> {
        for (idx, t) in terms.iter().enumerate() {
            if (t.a.rows, t.a.cols) != (shape.n, shape.m)
                || (t.b.rows, t.b.cols) != (shape.m, shape.p)
                || (t.c.rows, t.c.cols) != (shape.p, shape.n)
            {
                return Err(Error::Structural(format!(
                    "term {idx} factor dimensions do not match shape {shape}"
                )));
            }
        }
        let mut dec = Decomposition { shape, ring, terms };
        dec.canonicalize_ring();
        Ok(dec)
    }

    fn canonicalize_ring(&mut self) {
        if self.ring == Ring::Integer {
            return;
        }
        let ring = self.ring;
        for t in &mut self.terms {
            for m in [&mut t.a, &mut t.b, &mut t.c] {
                for e in m.entries_mut() {
                    *e = ring.normalize(e);
                }
            }
        }
    }

    pub fn terms(&self) -> &[RankOneTerm] {
        &self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn support(&self) -> usize {
        self.terms.iter().map(|t| t.support()).sum()
    }

    /// The standard decomposition: one term per coordinate triple (i,j,k).
    pub fn standard(shape: Shape, ring: Ring) -> Self {
        let mut terms = Vec::with_capacity(shape.standard_rank());
        for i in 0..shape.n {
            for j in 0..shape.m {
                for k in 0..shape.p {
                    let mut a = Matrix::zero(shape.n, shape.m);
                    let mut b = Matrix::zero(shape.m, shape.p);
                    let mut c = Matrix::zero(shape.p, shape.n);
                    *a.at_mut(i, j) = BigInt::from(1);
                    *b.at_mut(j, k) = BigInt::from(1);
                    *c.at_mut(k, i) = BigInt::from(1);
                    terms.push(RankOneTerm { a, b, c });
                }
            }
        }
        Decomposition { shape, ring, terms }
    }

    /// Cyclic symmetry: a decomposition of (n,m,p) becomes one of (m,p,n)
    /// by rotating the factor roles (a,b,c) -> (b,c,a).
    pub fn cyclic_permute(&self) -> Self {
        let shape = self.shape.cycled();
        let terms = self
            .terms
            .iter()
            .map(|t| RankOneTerm {
                a: t.b.clone(),
                b: t.c.clone(),
                c: t.a.clone(),
            })
            .collect();
        Decomposition {
            shape,
            ring: self.ring,
            terms,
        }
    }

    /// Transpose symmetry: (n,m,p) becomes (p,m,n) via
    /// (a,b,c) -> (b^T, a^T, c^T).
    pub fn transpose_permute(&self) -> Self {
        let shape = self.shape.transposed();
        let terms = self
            .terms
            .iter()
            .map(|t| RankOneTerm {
                a: t.b.transpose(),
                b: t.a.transpose(),
                c: t.c.transpose(),
            })
            .collect();
        Decomposition {
            shape,
            ring: self.ring,
            terms,
        }
    }

    /// Block-diagonal combination. The result decomposes the direct-sum
    /// tensor (see `Target::DirectSum`), not the full matmul tensor of the
    /// summed shape.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, Error> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!(
                "direct sum over {} vs {}",
                self.ring, other.ring
            )));
        }
        let s1 = self.shape;
        let s2 = other.shape;
        let shape = Shape {
            n: s1.n + s2.n,
            m: s1.m + s2.m,
            p: s1.p + s2.p,
        };
        let mut terms = Vec::with_capacity(self.rank() + other.rank());
        for t in &self.terms {
            terms.push(RankOneTerm {
                a: t.a.embed(shape.n, shape.m, 0, 0),
                b: t.b.embed(shape.m, shape.p, 0, 0),
                c: t.c.embed(shape.p, shape.n, 0, 0),
            });
        }
        for t in &other.terms {
            terms.push(RankOneTerm {
                a: t.a.embed(shape.n, shape.m, s1.n, s1.m),
                b: t.b.embed(shape.m, shape.p, s1.m, s1.p),
                c: t.c.embed(shape.p, shape.n, s1.p, s1.n),
            });
        }
        Ok(Decomposition {
            shape,
            ring: self.ring,
            terms,
        })
    }

    /// Kronecker product: a decomposition of the product shape with rank
    /// r1*r2, factor of each product term the Kronecker product of the
    /// constituent factors.
    pub fn kronecker(&self, other: &Self) -> Result<Self, Error> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(format!(
                "kronecker product over {} vs {}",
                self.ring, other.ring
            )));
        }
        let shape = Shape {
            n: self.shape.n * other.shape.n,
            m: self.shape.m * other.shape.m,
            p: self.shape.p * other.shape.p,
        };
        let mut terms = Vec::with_capacity(self.rank() * other.rank());
        for t1 in &self.terms {
            for t2 in &other.terms {
                terms.push(RankOneTerm {
                    a: t1.a.kronecker(&t2.a),
                    b: t1.b.kronecker(&t2.b),
                    c: t1.c.kronecker(&t2.c),
                });
            }
        }
        let mut dec = Decomposition {
            shape,
            ring: self.ring,
            terms,
        };
        dec.canonicalize_ring();
        Ok(dec)
    }

    /// Entrywise coefficient reduction into `Z2` or `Mod2k`. Terms that
    /// become identically zero and pairs of terms that coincide in the
    /// target ring are reported, never silently dropped.
    pub fn reduce_mod(&self, ring: Ring) -> Result<(Self, ReduceReport), Error> {
        if ring == Ring::Integer {
            return Err(Error::Unsupported(
                "reduce_mod targets Z2 or a power-of-two modulus".into(),
            ));
        }
        let terms: Vec<RankOneTerm> = self
            .terms
            .iter()
            .map(|t| RankOneTerm {
                a: t.a.map(|e| ring.normalize(e)),
                b: t.b.map(|e| ring.normalize(e)),
                c: t.c.map(|e| ring.normalize(e)),
            })
            .collect();
        let mut report = ReduceReport::default();
        for (i, t) in terms.iter().enumerate() {
            if t.is_zero() {
                report.zero_terms.push(i);
            }
        }
        for i in 0..terms.len() {
            if terms[i].is_zero() {
                continue;
            }
            for j in (i + 1)..terms.len() {
                if terms[j].is_zero() {
                    continue;
                }
                if terms[i] == terms[j] {
                    report.duplicate_pairs.push((i, j));
                }
            }
        }
        Ok((
            Decomposition {
                shape: self.shape,
                ring,
                terms,
            },
            report,
        ))
    }

    /// Removes identically-zero terms.
    pub fn normalize(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| !t.is_zero())
            .cloned()
            .collect();
        Decomposition {
            shape: self.shape,
            ring: self.ring,
            terms,
        }
    }

    /// Replaces the term list; used by search moves which maintain
    /// verification as an invariant.
    pub fn with_terms(&self, terms: Vec<RankOneTerm>) -> Result<Self, Error> {
        Decomposition::new(self.shape, self.ring, terms)
    }

    /// Max absolute coefficient over all factors (Integer ring analysis).
    pub fn max_abs_coeff(&self) -> BigInt {
        let mut m = BigInt::zero();
        for t in &self.terms {
            for f in [&t.a, &t.b, &t.c] {
                let v = f.max_abs();
                if v > m {
                    m = v;
                }
            }
        }
        m
    }
}
