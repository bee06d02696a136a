//! Built-in decompositions used as fixtures, baselines, and oracle targets.

use crate::decomposition::{Decomposition, RankOneTerm};
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::shape::Shape;

fn term2(a: [i64; 4], b: [i64; 4], c: [i64; 4]) -> RankOneTerm {
    RankOneTerm {
        a: Matrix::from_i64s(2, 2, &a).unwrap(),
        b: Matrix::from_i64s(2, 2, &b).unwrap(),
        // c given in [k][i] order (coefficient of output C[i][k])
        c: Matrix::from_i64s(2, 2, &c).unwrap(),
    }
}

/// Strassen's original 7-term decomposition of 2x2x2, A = 18.
pub fn strassen() -> Decomposition {
    let terms = vec![
        term2([1, 0, 0, 1], [1, 0, 0, 1], [1, 0, 0, 1]), // (A11+A22)(B11+B22) -> C11,C22
        term2([0, 0, 1, 1], [1, 0, 0, 0], [0, 1, 0, -1]), // (A21+A22)B11 -> C21,-C22
        term2([1, 0, 0, 0], [0, 1, 0, -1], [0, 0, 1, 1]), // A11(B12-B22) -> C12,C22
        term2([0, 0, 0, 1], [-1, 0, 1, 0], [1, 1, 0, 0]), // A22(B21-B11) -> C11,C21
        term2([1, 1, 0, 0], [0, 0, 0, 1], [-1, 0, 1, 0]), // (A11+A12)B22 -> -C11,C12
        term2([-1, 0, 1, 0], [1, 1, 0, 0], [0, 0, 0, 1]), // (A21-A11)(B11+B12) -> C22
        term2([0, 1, 0, -1], [0, 0, 1, 1], [1, 0, 0, 0]), // (A12-A22)(B21+B22) -> C11
    ];
    Decomposition::new(Shape::of(2, 2, 2), Ring::Integer, terms).unwrap()
}

/// Winograd's variant of Strassen's algorithm, A = 15.
pub fn winograd() -> Decomposition {
    let terms = vec![
        term2([1, 0, 0, 0], [1, 0, 0, 0], [1, 1, 1, 1]), // A11 B11 -> all four outputs
        term2([0, 1, 0, 0], [0, 0, 1, 0], [1, 0, 0, 0]), // A12 B21 -> C11
        term2([1, 1, -1, -1], [0, 0, 0, 1], [0, 0, 1, 0]), // (A11+A12-A21-A22) B22 -> C12
        term2([0, 0, 0, 1], [1, -1, -1, 1], [0, -1, 0, 0]), // A22 (B11-B12-B21+B22) -> -C21
        term2([0, 0, 1, 1], [-1, 1, 0, 0], [0, 0, 1, 1]), // (A21+A22)(B12-B11) -> C12,C22
        term2([-1, 0, 1, 1], [1, -1, 0, 1], [0, 1, 1, 1]), // (A21+A22-A11)(B11-B12+B22)
        term2([1, 0, -1, 0], [0, -1, 0, 1], [0, 1, 0, 1]), // (A11-A21)(B22-B12) -> C21,C22
    ];
    Decomposition::new(Shape::of(2, 2, 2), Ring::Integer, terms).unwrap()
}

/// The standard 2x2x2 decomposition. Its four shared-A pairs make it the
/// smallest scheme with usable 1x1x2 structure.
pub fn standard_222() -> Decomposition {
    Decomposition::standard(Shape::of(2, 2, 2), Ring::Integer)
}

/// A 6x6x6 demonstration scheme: the Kronecker product of the standard
/// 3x3x3 algorithm with Strassen, extended by a four-term zero-sum gadget
/// that contains two distinct integer rank-one terms coinciding modulo 2.
/// Reducing mod 2 therefore flags a duplicate pair which then groups into a
/// rank-2 block, alongside two flagged zero terms; the gadget carries +-2
/// coefficients.
pub fn demo_666() -> Decomposition {
    let base = Decomposition::standard(Shape::of(3, 3, 3), Ring::Integer)
        .kronecker(&strassen())
        .unwrap();
    let shape = base.shape;
    let ones_a = Matrix::from_i64s(shape.n, shape.m, &[1; 36]).unwrap();
    let ones_b = Matrix::from_i64s(shape.m, shape.p, &[1; 36]).unwrap();
    let ones_c = Matrix::from_i64s(shape.p, shape.n, &[1; 36]).unwrap();
    let mut e00_a = Matrix::zero(shape.n, shape.m);
    *e00_a.at_mut(0, 0) = 2i64.into();
    let mut e00_b = Matrix::zero(shape.m, shape.p);
    *e00_b.at_mut(0, 0) = 2i64.into();

    // u, u+2x, v, v+2y below; the four extra terms sum to zero over the
    // integers while the first two coincide modulo 2.
    let u = ones_a.clone();
    let u2x = ones_a.add(&e00_a).unwrap();
    let v = ones_b.clone();
    let v2y = ones_b.add(&e00_b).unwrap();
    let z = ones_c;

    let mut terms = base.terms().to_vec();
    terms.push(RankOneTerm {
        a: u.clone(),
        b: v.clone(),
        c: z.clone(),
    });
    terms.push(RankOneTerm {
        a: u2x.clone(),
        b: v2y.clone(),
        c: z.clone(),
    });
    // corrections: (u+2x) (x) (-2(v+y)) (x) z  and  (-2x) (x) v (x) z
    let vy = {
        let mut y = Matrix::zero(shape.m, shape.p);
        *y.at_mut(0, 0) = 1i64.into();
        v.add(&y).unwrap()
    };
    let minus_2vy = vy.map(|e| e * num_bigint::BigInt::from(-2));
    terms.push(RankOneTerm {
        a: u2x,
        b: minus_2vy,
        c: z.clone(),
    });
    terms.push(RankOneTerm {
        a: e00_a,
        b: v,
        c: z,
    }); // +2x (x) v (x) z

    Decomposition::new(shape, Ring::Integer, terms).unwrap()
}

/// Every decomposition shipped with the toolkit, by name.
pub fn all() -> Vec<(&'static str, Decomposition)> {
    vec![
        ("strassen", strassen()),
        ("winograd", winograd()),
        ("standard222", standard_222()),
        ("demo666", demo_666()),
    ]
}

pub fn by_name(name: &str) -> Option<Decomposition> {
    match name {
        "strassen" => Some(strassen()),
        "winograd" => Some(winograd()),
        "standard222" => Some(standard_222()),
        "demo666" => Some(demo_666()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_verify() {
        for (name, dec) in all() {
            assert!(dec.verify().pass, "{name} failed verification");
        }
    }

    #[test]
    fn demo_666_shape_and_rank() {
        let d = demo_666();
        assert_eq!(d.shape, Shape::of(6, 6, 6));
        assert_eq!(d.rank(), 27 * 7 + 4);
    }

    #[test]
    fn demo_666_reduction_flags_duplicate_pair_and_zero_terms() {
        let d = demo_666();
        let (z2, report) = d.reduce_mod(Ring::Z2).unwrap();
        assert!(z2.verify().pass);
        assert_eq!(report.zero_terms.len(), 2);
        assert_eq!(report.duplicate_pairs.len(), 1);
        let (i, j) = report.duplicate_pairs[0];
        assert_eq!((i, j), (189, 190));
    }
}
