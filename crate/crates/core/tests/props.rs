//! Property tests over randomly generated schemes.

use num_bigint::BigInt;
use proptest::prelude::*;

use struxmm_core::decomposition::{Decomposition, RankOneTerm};
use struxmm_core::format;
use struxmm_core::matrix::Matrix;
use struxmm_core::ring::Ring;
use struxmm_core::search::{flip_terms, Z2Scheme, Z2Term};
use struxmm_core::shape::Shape;
use struxmm_core::structure::Slot;

fn shape_strategy() -> impl Strategy<Value = Shape> {
    (1usize..=3, 1usize..=3, 1usize..=3).prop_map(|(n, m, p)| Shape::of(n, m, p))
}

fn term_strategy(shape: Shape) -> impl Strategy<Value = RankOneTerm> {
    let factor = |rows: usize, cols: usize| {
        proptest::collection::vec(-3i64..=3, rows * cols)
            .prop_map(move |v| Matrix::<BigInt>::from_i64s(rows, cols, &v).unwrap())
    };
    (
        factor(shape.n, shape.m),
        factor(shape.m, shape.p),
        factor(shape.p, shape.n),
    )
        .prop_map(|(a, b, c)| RankOneTerm { a, b, c })
}

fn decomposition_strategy() -> impl Strategy<Value = Decomposition> {
    shape_strategy().prop_flat_map(|shape| {
        proptest::collection::vec(term_strategy(shape), 1..6)
            .prop_map(move |terms| Decomposition::new(shape, Ring::Integer, terms).unwrap())
    })
}

proptest! {
    /// Canonical serialization round-trips any well-formed scheme, and the
    /// serialized text re-serializes byte-identically.
    #[test]
    fn canonical_format_round_trips(dec in decomposition_strategy()) {
        let text = format::write_decomposition(&dec);
        let parsed = format::parse_decomposition(&text).unwrap();
        prop_assert_eq!(&parsed, &dec);
        prop_assert_eq!(format::write_decomposition(&parsed), text);
    }

    /// Reduction mod 2 commutes with the tensor: a verified integer scheme
    /// reduces to a verified Z2 scheme.
    #[test]
    fn reduction_preserves_verification(seed_terms in decomposition_strategy()) {
        // random term lists rarely verify; build a verified scheme by
        // summing the random terms with the standard one as a correction
        let shape = seed_terms.shape;
        let std = Decomposition::standard(shape, Ring::Integer);
        let mut terms = std.terms().to_vec();
        for t in seed_terms.terms() {
            // t and its negation cancel: the tensor is unchanged
            terms.push(t.clone());
            terms.push(RankOneTerm { a: t.a.neg(), b: t.b.clone(), c: t.c.clone() });
        }
        let dec = Decomposition::new(shape, Ring::Integer, terms).unwrap();
        prop_assert!(dec.verify().pass);
        let (z2, _) = dec.reduce_mod(Ring::Z2).unwrap();
        prop_assert!(z2.verify().pass);
    }

    /// A flip never changes the packed tensor, whichever slot is shared.
    #[test]
    fn flips_preserve_packed_tensors(
        abits in 1u64..16, b1 in 1u64..16, b2 in 1u64..16, c1 in 1u64..16, c2 in 1u64..16,
    ) {
        let shape = Shape::of(2, 2, 2);
        let scheme = Z2Scheme {
            shape,
            terms: vec![
                Z2Term { a: abits, b: b1, c: c1 },
                Z2Term { a: abits, b: b2, c: c2 },
            ],
        };
        let before = scheme.tensor();
        let flipped = flip_terms(&scheme, 0, 1, Slot::A).unwrap();
        prop_assert_eq!(flipped.tensor(), before);
        let back = flip_terms(&flipped, 0, 1, Slot::A).unwrap();
        prop_assert_eq!(back.tensor(), scheme.tensor());
    }
}
