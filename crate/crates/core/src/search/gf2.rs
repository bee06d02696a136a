//! Bit-packed GF(2) linear algebra for the search pipeline: small square
//! matrices for symmetry sampling and a row-reduction solver for the
//! lifting systems.

use rand::Rng;

/// Dense GF(2) matrix with up to 64 columns, one word per row; large
/// enough for every desk-scale factor shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl GfMat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        assert!(cols <= 64);
        GfMat {
            rows,
            cols,
            data: vec![0; rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = GfMat::zero(n, n);
        for i in 0..n {
            m.data[i] = 1 << i;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r] >> c) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        if v {
            self.data[r] |= 1 << c;
        } else {
            self.data[r] &= !(1 << c);
        }
    }

    pub fn mul(&self, other: &GfMat) -> GfMat {
        assert_eq!(self.cols, other.rows);
        let mut out = GfMat::zero(self.rows, other.cols);
        for r in 0..self.rows {
            let mut acc = 0u64;
            let mut bits = self.data[r];
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                acc ^= other.data[k];
            }
            out.data[r] = acc;
        }
        out
    }

    /// Gauss-Jordan inverse; None when singular.
    pub fn inverse(&self) -> Option<GfMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut left = self.data.clone();
        let mut right = GfMat::identity(n).data;
        for col in 0..n {
            let pivot = (col..n).find(|&r| (left[r] >> col) & 1 == 1)?;
            left.swap(col, pivot);
            right.swap(col, pivot);
            for r in 0..n {
                if r != col && (left[r] >> col) & 1 == 1 {
                    left[r] ^= left[col];
                    right[r] ^= right[col];
                }
            }
        }
        Some(GfMat {
            rows: n,
            cols: n,
            data: right,
        })
    }

    /// Rejection-samples an invertible matrix.
    pub fn random_invertible(n: usize, rng: &mut impl Rng) -> GfMat {
        loop {
            let data: Vec<u64> = (0..n).map(|_| rng.gen::<u64>() & mask(n)).collect();
            let m = GfMat {
                rows: n,
                cols: n,
                data,
            };
            if m.inverse().is_some() {
                return m;
            }
        }
    }
}

#[inline]
pub fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// One row of a wide GF(2) system, bit-packed.
#[derive(Debug, Clone)]
struct WideRow {
    words: Vec<u64>,
    rhs: bool,
}

impl WideRow {
    fn get(&self, c: usize) -> bool {
        (self.words[c / 64] >> (c % 64)) & 1 == 1
    }

    fn xor_in(&mut self, other: &WideRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.rhs ^= other.rhs;
    }
}

#[derive(Debug)]
pub enum SolveOutcome {
    /// Particular solution (free variables zero) and a nullspace basis.
    Solved {
        particular: Vec<bool>,
        nullspace: Vec<Vec<bool>>,
    },
    Inconsistent,
}

/// Solves a GF(2) linear system given as sparse rows. Pivot columns are
/// chosen sparsest-first, which biases the free-variables-zero particular
/// solution toward small support.
pub fn solve_sparse(cols: usize, rows: &[(Vec<usize>, bool)]) -> SolveOutcome {
    let words = cols.div_ceil(64).max(1);
    let mut work: Vec<WideRow> = Vec::new();
    let mut density = vec![0usize; cols];
    for (support, rhs) in rows {
        if support.is_empty() {
            if *rhs {
                return SolveOutcome::Inconsistent;
            }
            continue;
        }
        let mut row = WideRow {
            words: vec![0; words],
            rhs: *rhs,
        };
        for &c in support {
            row.words[c / 64] ^= 1 << (c % 64);
        }
        for &c in support {
            density[c] += 1;
        }
        work.push(row);
    }
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by_key(|&c| (density[c], c));

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut next_row = 0usize;
    for &col in &order {
        let Some(found) = (next_row..work.len()).find(|&r| work[r].get(col)) else {
            continue;
        };
        work.swap(next_row, found);
        let pivot = work[next_row].clone();
        for (r, row) in work.iter_mut().enumerate() {
            if r != next_row && row.get(col) {
                row.xor_in(&pivot);
            }
        }
        pivot_of_col[col] = Some(next_row);
        pivots.push((next_row, col));
        next_row += 1;
    }
    // rows past the pivot count have zero coefficients; a set right-hand
    // side there certifies inconsistency
    if work[next_row..].iter().any(|r| r.rhs) {
        return SolveOutcome::Inconsistent;
    }

    let mut particular = vec![false; cols];
    for &(r, c) in &pivots {
        particular[c] = work[r].rhs;
    }
    let mut nullspace = Vec::new();
    for free in 0..cols {
        if pivot_of_col[free].is_some() {
            continue;
        }
        if density[free] == 0 {
            // untouched variable: still a legitimate degree of freedom,
            // but activating it never helps support, so skip it
            continue;
        }
        let mut v = vec![false; cols];
        v[free] = true;
        for &(r, c) in &pivots {
            if work[r].get(free) {
                v[c] = true;
            }
        }
        nullspace.push(v);
    }
    SolveOutcome::Solved {
        particular,
        nullspace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=8 {
            for _ in 0..20 {
                let m = GfMat::random_invertible(n, &mut rng);
                let inv = m.inverse().unwrap();
                assert_eq!(m.mul(&inv), GfMat::identity(n));
            }
        }
    }

    #[test]
    fn solve_simple_system() {
        // x0 + x1 = 1, x1 = 1  ->  x0 = 0, x1 = 1
        let rows = vec![(vec![0, 1], true), (vec![1], true)];
        match solve_sparse(2, &rows) {
            SolveOutcome::Solved {
                particular,
                nullspace,
            } => {
                assert_eq!(particular, vec![false, true]);
                assert!(nullspace.is_empty());
            }
            SolveOutcome::Inconsistent => panic!("system is consistent"),
        }
    }

    #[test]
    fn detect_inconsistency() {
        let rows = vec![(vec![0], true), (vec![0], false)];
        assert!(matches!(solve_sparse(1, &rows), SolveOutcome::Inconsistent));
    }

    #[test]
    fn nullspace_spans_solutions() {
        // x0 + x1 + x2 = 1 has a 2-dimensional solution set
        let rows = vec![(vec![0, 1, 2], true)];
        match solve_sparse(3, &rows) {
            SolveOutcome::Solved {
                particular,
                nullspace,
            } => {
                assert_eq!(nullspace.len(), 2);
                let check = |v: &[bool]| v.iter().filter(|&&b| b).count() % 2 == 1;
                assert!(check(&particular));
                for nv in &nullspace {
                    let combo: Vec<bool> = particular.iter().zip(nv).map(|(a, b)| a ^ b).collect();
                    assert!(check(&combo));
                }
            }
            SolveOutcome::Inconsistent => panic!(),
        }
    }
}
