//! Compiled execution plans: the linear phases and block layout that drive
//! the recursive multiplier for a structured restriction.
//!
//! Each rank-one term of a scheme contributes one product; terms grouped
//! into a block are computed by a single larger recursive call. A block of
//! shape (bn,bm,bp) assembles its left operand from a bn x bm grid of
//! combined input cells and its right operand from a bm x bp grid; the
//! product is sliced into a bn x bp grid that the output phase scatters.
//! Shared-factor groups and 2x2 grid groups map onto this uniformly:
//!
//!   shared A  -> 1x1xk: one left part, k right parts side by side
//!   shared B  -> kx1x1: k left parts stacked, one right part
//!   shared C  -> 1xkx1: inner-dimension concatenation, one output slice
//!   grid      -> the 1x2x2 family with parts taken from the grid rows
//!                and columns
//!
//! A plan carries the three cyclic images of its restriction; the executor
//! rotates through them by recursion depth so rectangular calls re-balance.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::cse::{compile_phase, LinearProgram, Row};
use crate::decomposition::Decomposition;
use crate::error::Error;
use crate::matrix::{Entry, Matrix};
use crate::ring::Ring;
use crate::shape::Shape;
use crate::structure::{
    Analyzer, GroupKind, Objective, Slot, StructureGroup, StructuredRestriction,
};

#[derive(Debug, Clone)]
pub struct PlanBlock {
    pub shape: Shape,
    /// Index of the first left-operand part in the image's L1 outputs;
    /// shape.n * shape.m parts, row-major.
    pub a_base: usize,
    /// Index of the first right-operand part in the L2 outputs;
    /// shape.m * shape.p parts, row-major.
    pub b_base: usize,
    /// Index of the first product slice variable; shape.n * shape.p
    /// slices, row-major.
    pub z_base: usize,
}

#[derive(Debug, Clone)]
pub struct PlanImage {
    pub base: Shape,
    pub blocks: Vec<PlanBlock>,
    pub l1: LinearProgram,
    pub l2: LinearProgram,
    pub l3: LinearProgram,
    pub z_count: usize,
}

#[derive(Debug, Clone)]
pub struct ExecutionPlan {
    /// Image d is used at recursion depth d mod 3; all three are cyclic
    /// rotations of the same restriction.
    pub images: [PlanImage; 3],
    /// Default size at or below which the executor falls back to the
    /// standard algorithm.
    pub threshold: usize,
}

impl ExecutionPlan {
    /// Compiles a plan for a scheme with no structure: every term its own
    /// block.
    pub fn for_scheme(dec: &Decomposition) -> Result<Self, Error> {
        let analyzer = Analyzer::new(dec)?;
        let restriction = analyzer.to_restriction(&[])?;
        Self::compile(dec, &restriction, None)
    }

    /// Analyzes structure with the given objective and compiles the plan.
    pub fn structured(dec: &Decomposition, objective: Objective) -> Result<Self, Error> {
        let analyzer = Analyzer::new(dec)?;
        let restriction = analyzer.analyze(objective)?;
        let folded = analyzer.plan_decomposition(&restriction.provenance)?;
        Self::compile(&folded, &restriction, None)
    }

    /// Compiles a plan from a decomposition and a restriction whose
    /// provenance refers to that decomposition's term indices. The
    /// decomposition must already carry the exact shared factors the
    /// provenance witnesses (the structure analyzer produces this form).
    pub fn compile(
        dec: &Decomposition,
        restriction: &StructuredRestriction,
        threshold: Option<usize>,
    ) -> Result<Self, Error> {
        if dec.ring != Ring::Integer {
            return Err(Error::Unsupported(
                "plans execute exact integer schemes; lift or relabel the ring first".into(),
            ));
        }
        if restriction.term_count() != dec.rank() as u64 {
            return Err(Error::Structural(format!(
                "restriction covers {} terms but the scheme has rank {}",
                restriction.term_count(),
                dec.rank()
            )));
        }
        // alternation exists to re-balance rectangular recursive calls; an
        // all-square restriction over a square base never needs it, and
        // skipping it keeps the linear-phase cost identical at every depth
        let needs_alternation =
            !dec.shape.is_square() || restriction.blocks.iter().any(|(s, _)| !s.is_square());
        let images: [PlanImage; 3] = if needs_alternation {
            let dec_images = [
                dec.clone(),
                dec.cyclic_permute(),
                dec.cyclic_permute().cyclic_permute(),
            ];
            let mut group_images: [Vec<StructureGroup>; 3] = Default::default();
            group_images[0] = restriction.provenance.clone();
            group_images[1] = restriction.provenance.iter().map(cycle_group).collect();
            group_images[2] = group_images[1].iter().map(cycle_group).collect();
            let mut images = Vec::with_capacity(3);
            for (dec_i, groups) in dec_images.iter().zip(&group_images) {
                images.push(compile_image(dec_i, groups)?);
            }
            images.try_into().expect("three images")
        } else {
            let img = compile_image(dec, &restriction.provenance)?;
            [img.clone(), img.clone(), img]
        };
        for (idx, image) in images.iter().enumerate() {
            image.self_check().map_err(|e| {
                Error::Structural(format!("plan self-check failed on image {idx}: {e}"))
            })?;
        }
        let threshold = threshold.unwrap_or(4 * dec.shape.n.max(dec.shape.m).max(dec.shape.p));
        Ok(ExecutionPlan { images, threshold })
    }

    /// Linear-phase operation count of image 0 (the A of the restriction
    /// as executed).
    pub fn addition_count(&self) -> u64 {
        let img = &self.images[0];
        img.l1.cost() + img.l2.cost() + img.l3.cost()
    }
}

/// Rotates a structure group one cyclic step: factor roles (a,b,c) map to
/// (b,c,a) of the rotated terms, so a shared slot moves A->C->B->A and a
/// grid's role pair rotates likewise (transposing the grid where the
/// canonical role order swaps rows and columns).
fn cycle_group(g: &StructureGroup) -> StructureGroup {
    let t = &g.term_indices;
    match g.kind {
        GroupKind::Shared { slot } => {
            let slot = match slot {
                Slot::A => Slot::C,
                Slot::C => Slot::B,
                Slot::B => Slot::A,
            };
            let k = t.len();
            let shape = match slot {
                Slot::A => Shape::of(1, 1, k),
                Slot::B => Shape::of(k, 1, 1),
                Slot::C => Shape::of(1, k, 1),
            };
            StructureGroup {
                term_indices: t.clone(),
                block_shape: shape,
                kind: GroupKind::Shared { slot },
            }
        }
        GroupKind::Grid { slots } => {
            let (kind, indices) = match slots {
                // rows kept A-first; transposed where the canonical order flips
                (Slot::A, Slot::C) => (
                    GroupKind::Grid {
                        slots: (Slot::B, Slot::C),
                    },
                    vec![t[0], t[2], t[1], t[3]],
                ),
                (Slot::B, Slot::C) => (
                    GroupKind::Grid {
                        slots: (Slot::A, Slot::B),
                    },
                    t.clone(),
                ),
                (Slot::A, Slot::B) => (
                    GroupKind::Grid {
                        slots: (Slot::A, Slot::C),
                    },
                    vec![t[0], t[2], t[1], t[3]],
                ),
                other => unreachable!("non-canonical grid slots {other:?}"),
            };
            let shape = match kind {
                GroupKind::Grid {
                    slots: (Slot::A, Slot::C),
                } => Shape::of(1, 2, 2),
                GroupKind::Grid {
                    slots: (Slot::A, Slot::B),
                } => Shape::of(2, 1, 2),
                GroupKind::Grid {
                    slots: (Slot::B, Slot::C),
                } => Shape::of(2, 2, 1),
                _ => unreachable!(),
            };
            StructureGroup {
                term_indices: indices,
                block_shape: shape,
                kind,
            }
        }
    }
}

fn row_of(m: &Matrix<BigInt>) -> Result<Row, Error> {
    let mut row = Row::new();
    for (i, e) in m.entries().iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        row.insert(
            i,
            e.to_i64().ok_or_else(|| {
                Error::Unsupported("coefficients beyond i64 are not executable".into())
            })?,
        );
    }
    Ok(row)
}

fn compile_image(dec: &Decomposition, groups: &[StructureGroup]) -> Result<PlanImage, Error> {
    let shape = dec.shape;
    let terms = dec.terms();
    let mut covered = vec![false; terms.len()];
    for g in groups {
        for &t in &g.term_indices {
            if covered[t] {
                return Err(Error::Structural(format!(
                    "group provenance overlaps on term {t}"
                )));
            }
            covered[t] = true;
        }
    }

    let mut a_rows: Vec<Row> = Vec::new();
    let mut b_rows: Vec<Row> = Vec::new();
    let mut blocks: Vec<PlanBlock> = Vec::new();
    // scatter factor for every z slice, in slice order
    let mut scatter: Vec<Matrix<BigInt>> = Vec::new();

    let mut push_block = |bshape: Shape,
                          a_parts: Vec<Row>,
                          b_parts: Vec<Row>,
                          slices: Vec<Matrix<BigInt>>,
                          a_rows: &mut Vec<Row>,
                          b_rows: &mut Vec<Row>| {
        debug_assert_eq!(a_parts.len(), bshape.n * bshape.m);
        debug_assert_eq!(b_parts.len(), bshape.m * bshape.p);
        debug_assert_eq!(slices.len(), bshape.n * bshape.p);
        let block = PlanBlock {
            shape: bshape,
            a_base: a_rows.len(),
            b_base: b_rows.len(),
            z_base: scatter.len(),
        };
        a_rows.extend(a_parts);
        b_rows.extend(b_parts);
        scatter.extend(slices);
        blocks.push(block);
    };

    for g in groups {
        let ts = &g.term_indices;
        match g.kind {
            GroupKind::Shared { slot } => {
                let witness = |s: Slot, t: usize| match s {
                    Slot::A => &terms[t].a,
                    Slot::B => &terms[t].b,
                    Slot::C => &terms[t].c,
                };
                for &t in &ts[1..] {
                    if witness(slot, t) != witness(slot, ts[0]) {
                        return Err(Error::Structural(
                            "group provenance does not witness equal shared factors".into(),
                        ));
                    }
                }
                match slot {
                    Slot::A => push_block(
                        g.block_shape,
                        vec![row_of(&terms[ts[0]].a)?],
                        ts.iter()
                            .map(|&t| row_of(&terms[t].b))
                            .collect::<Result<_, _>>()?,
                        ts.iter().map(|&t| terms[t].c.clone()).collect(),
                        &mut a_rows,
                        &mut b_rows,
                    ),
                    Slot::B => push_block(
                        g.block_shape,
                        ts.iter()
                            .map(|&t| row_of(&terms[t].a))
                            .collect::<Result<_, _>>()?,
                        vec![row_of(&terms[ts[0]].b)?],
                        ts.iter().map(|&t| terms[t].c.clone()).collect(),
                        &mut a_rows,
                        &mut b_rows,
                    ),
                    Slot::C => push_block(
                        g.block_shape,
                        ts.iter()
                            .map(|&t| row_of(&terms[t].a))
                            .collect::<Result<_, _>>()?,
                        ts.iter()
                            .map(|&t| row_of(&terms[t].b))
                            .collect::<Result<_, _>>()?,
                        vec![terms[ts[0]].c.clone()],
                        &mut a_rows,
                        &mut b_rows,
                    ),
                }
            }
            GroupKind::Grid { slots } => {
                if ts.len() != 4 {
                    return Err(Error::Structural("grid provenance needs four terms".into()));
                }
                // term grid order: [row0col0, row0col1, row1col0, row1col1]
                let (t00, t01, t10, t11) = (ts[0], ts[1], ts[2], ts[3]);
                match slots {
                    // 1x2x2: rows share a, columns share c
                    (Slot::A, Slot::C) => push_block(
                        g.block_shape,
                        vec![row_of(&terms[t00].a)?, row_of(&terms[t10].a)?],
                        vec![
                            row_of(&terms[t00].b)?,
                            row_of(&terms[t01].b)?,
                            row_of(&terms[t10].b)?,
                            row_of(&terms[t11].b)?,
                        ],
                        vec![terms[t00].c.clone(), terms[t01].c.clone()],
                        &mut a_rows,
                        &mut b_rows,
                    ),
                    // 2x1x2: rows share a, columns share b; c free
                    (Slot::A, Slot::B) => push_block(
                        g.block_shape,
                        vec![row_of(&terms[t00].a)?, row_of(&terms[t10].a)?],
                        vec![row_of(&terms[t00].b)?, row_of(&terms[t01].b)?],
                        vec![
                            terms[t00].c.clone(),
                            terms[t01].c.clone(),
                            terms[t10].c.clone(),
                            terms[t11].c.clone(),
                        ],
                        &mut a_rows,
                        &mut b_rows,
                    ),
                    // 2x2x1: grid rows share b, grid columns share c; the
                    // left operand takes the free a factors, output rows
                    // follow the grid columns
                    (Slot::B, Slot::C) => push_block(
                        g.block_shape,
                        vec![
                            row_of(&terms[t00].a)?,
                            row_of(&terms[t10].a)?,
                            row_of(&terms[t01].a)?,
                            row_of(&terms[t11].a)?,
                        ],
                        vec![row_of(&terms[t00].b)?, row_of(&terms[t10].b)?],
                        vec![terms[t00].c.clone(), terms[t01].c.clone()],
                        &mut a_rows,
                        &mut b_rows,
                    ),
                    other => {
                        return Err(Error::Structural(format!(
                            "non-canonical grid slots {other:?}"
                        )))
                    }
                }
            }
        }
    }
    for (t, term) in terms.iter().enumerate() {
        if covered[t] {
            continue;
        }
        push_block(
            Shape::of(1, 1, 1),
            vec![row_of(&term.a)?],
            vec![row_of(&term.b)?],
            vec![term.c.clone()],
            &mut a_rows,
            &mut b_rows,
        );
    }

    // output phase: cell (i,k) accumulates scatter[z][k][i] * slice z
    let mut l3_rows = Vec::with_capacity(shape.n * shape.p);
    for i in 0..shape.n {
        for k in 0..shape.p {
            let mut row = Row::new();
            for (z, c) in scatter.iter().enumerate() {
                let e = c.at(k, i);
                if e.is_zero() {
                    continue;
                }
                row.insert(
                    z,
                    e.to_i64().ok_or_else(|| {
                        Error::Unsupported("coefficients beyond i64 are not executable".into())
                    })?,
                );
            }
            l3_rows.push(row);
        }
    }

    Ok(PlanImage {
        base: shape,
        z_count: scatter.len(),
        blocks,
        l1: compile_phase(shape.n * shape.m, &a_rows),
        l2: compile_phase(shape.m * shape.p, &b_rows),
        l3: compile_phase(scatter.len(), &l3_rows),
    })
}

impl PlanImage {
    /// Applies the image at base scale with scalar cells: one linear pass,
    /// direct block products, one output pass. Used by the self-check and
    /// the executor's leaf-free probing.
    pub fn apply_base<T: Entry>(&self, a_cells: &[T], b_cells: &[T]) -> Vec<T> {
        let mut sink = 0u64;
        let a_cells: Vec<Matrix<T>> = a_cells.iter().map(|v| scalar_cell(v.clone())).collect();
        let b_cells: Vec<Matrix<T>> = b_cells.iter().map(|v| scalar_cell(v.clone())).collect();
        let a_parts = self.l1.eval_cells(&a_cells, 1, 1, &mut sink);
        let b_parts = self.l2.eval_cells(&b_cells, 1, 1, &mut sink);
        let mut slices: Vec<Matrix<T>> = Vec::with_capacity(self.z_count);
        for block in &self.blocks {
            let s = block.shape;
            let mut x: Matrix<T> = Matrix::zero(s.n, s.m);
            for r in 0..s.n {
                for c in 0..s.m {
                    *x.at_mut(r, c) = a_parts[block.a_base + r * s.m + c].at(0, 0).clone();
                }
            }
            let mut y: Matrix<T> = Matrix::zero(s.m, s.p);
            for r in 0..s.m {
                for c in 0..s.p {
                    *y.at_mut(r, c) = b_parts[block.b_base + r * s.p + c].at(0, 0).clone();
                }
            }
            let z = x.mul(&y).expect("block shapes agree");
            for r in 0..s.n {
                for c in 0..s.p {
                    slices.push(scalar_cell(z.at(r, c).clone()));
                }
            }
        }
        let out = self.l3.eval_cells(&slices, 1, 1, &mut sink);
        out.into_iter().map(|m| m.at(0, 0).clone()).collect()
    }

    /// Probes the image with every pair of elementary inputs and compares
    /// against the true product; equivalent to Brent verification through
    /// the compiled plan.
    pub fn self_check(&self) -> Result<(), Error> {
        let (n, m, p) = (self.base.n, self.base.m, self.base.p);
        for x in 0..n * m {
            for y in 0..m * p {
                let mut a = vec![0i64; n * m];
                let mut b = vec![0i64; m * p];
                a[x] = 1;
                b[y] = 1;
                let out = self.apply_base(&a, &b);
                let (i, j) = (x / m, x % m);
                let (j2, k) = (y / p, y % p);
                for i2 in 0..n {
                    for k2 in 0..p {
                        let want = if j == j2 && i == i2 && k == k2 { 1 } else { 0 };
                        let got = out[i2 * p + k2];
                        if got != want {
                            return Err(Error::Structural(format!(
                                "probe ({x},{y}) output cell ({i2},{k2}): got {got}, want {want}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn scalar_cell<T: Entry>(v: T) -> Matrix<T> {
    let mut m = Matrix::zero(1, 1);
    *m.at_mut(0, 0) = v;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn plain_plans_compile_and_self_check() {
        for (name, dec) in builtin::all() {
            let plan = ExecutionPlan::for_scheme(&dec);
            assert!(plan.is_ok(), "{name}: {:?}", plan.err());
        }
    }

    #[test]
    fn structured_plans_compile_and_self_check() {
        for (name, dec) in builtin::all() {
            let plan = ExecutionPlan::structured(&dec, Objective::Coverage);
            assert!(plan.is_ok(), "{name}: {:?}", plan.err());
        }
    }

    #[test]
    fn strassen_plan_costs_match_the_scheme() {
        let plan = ExecutionPlan::for_scheme(&builtin::strassen()).unwrap();
        let img = &plan.images[0];
        assert_eq!((img.l1.cost(), img.l2.cost(), img.l3.cost()), (5, 5, 8));
        assert_eq!(plan.addition_count(), 18);
        assert_eq!(img.blocks.len(), 7);
    }

    #[test]
    fn structured_222_plan_batches_blocks() {
        let plan =
            ExecutionPlan::structured(&builtin::standard_222(), Objective::Coverage).unwrap();
        let img = &plan.images[0];
        assert_eq!(img.blocks.len(), 4, "four 1x1x2 blocks cover all terms");
        assert!(img.blocks.iter().all(|b| b.shape.volume() == 2));
    }

    #[test]
    fn broken_provenance_is_rejected() {
        let dec = builtin::strassen();
        let analyzer = Analyzer::new(&builtin::standard_222()).unwrap();
        let restriction = analyzer.analyze(Objective::Coverage).unwrap();
        // restriction for another scheme: provenance does not witness
        assert!(ExecutionPlan::compile(&dec, &restriction, None).is_err());
    }
}
