//! Detection of exploitable structure inside a decomposition: maximal sets
//! of terms sharing a factor (copies of 1x1xk up to permutation) and 4-term
//! grid patterns (copies of 1x2x2 up to permutation), plus non-overlapping
//! selection and the census that drives exponent analysis.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::complexity;
use crate::decomposition::{Decomposition, RankOneTerm};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::shape::Shape;

/// Which factor role(s) witness a grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    A,
    B,
    C,
}

/// A set of terms certified as a copy of a small matmul tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureGroup {
    /// Term indices into the analyzed decomposition, grid order
    /// (row-major over the block's output grid for grid groups).
    pub term_indices: Vec<usize>,
    pub block_shape: Shape,
    pub kind: GroupKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupKind {
    /// k terms with an identical factor in `slot`:
    /// shared A -> 1x1xk, shared B -> kx1x1, shared C -> 1xkx1.
    Shared { slot: Slot },
    /// Four terms indexed by a 2x2 grid over two factor roles (the third
    /// role unconstrained): (A,C) -> 1x2x2, (A,B) -> 2x1x2, (B,C) -> 2x2x1.
    Grid { slots: (Slot, Slot) },
}

impl StructureGroup {
    pub fn covered(&self) -> usize {
        self.term_indices.len()
    }

    fn min_index(&self) -> usize {
        *self.term_indices.iter().min().unwrap()
    }

    fn overlaps(&self, other: &StructureGroup) -> bool {
        self.term_indices
            .iter()
            .any(|i| other.term_indices.contains(i))
    }
}

/// A decomposition partitioned into certified blocks plus singletons; the
/// input to exponent analysis and plan compilation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredRestriction {
    pub base: Shape,
    /// (block shape, multiplicity), sorted and deduplicated; excludes
    /// singletons.
    pub blocks: Vec<(Shape, u64)>,
    pub singletons: u64,
    /// Selected groups, in block order; empty for census-only restrictions.
    pub provenance: Vec<StructureGroup>,
}

impl StructuredRestriction {
    /// A census-style restriction given directly as blocks; singleton
    /// (1x1x1) entries are folded into the singleton count.
    pub fn from_blocks(base: Shape, blocks: &[(Shape, u64)]) -> Self {
        let mut singletons = 0;
        let mut rest: BTreeMap<Shape, u64> = BTreeMap::new();
        for &(s, mult) in blocks {
            if s.volume() == 1 {
                singletons += mult;
            } else if mult > 0 {
                *rest.entry(s).or_insert(0) += mult;
            }
        }
        StructuredRestriction {
            base,
            blocks: rest.into_iter().collect(),
            singletons,
            provenance: Vec::new(),
        }
    }

    /// All blocks including singletons, as (shape, multiplicity).
    pub fn all_blocks(&self) -> Vec<(Shape, u64)> {
        let mut v = self.blocks.clone();
        if self.singletons > 0 {
            v.push((Shape::of(1, 1, 1), self.singletons));
        }
        v
    }

    /// Total rank when each block is realized by `ranker` (the standard
    /// algorithm unless a better scheme is substituted for a block shape).
    pub fn total_rank_with(&self, ranker: impl Fn(Shape) -> u64) -> u64 {
        self.all_blocks()
            .iter()
            .map(|&(s, mult)| mult * ranker(s))
            .sum()
    }

    pub fn term_count(&self) -> u64 {
        self.total_rank_with(|s| s.standard_rank() as u64)
    }

    /// Canonical structure indicator "1^u 2^v 3^w 4^x"; blocks whose class
    /// (standard rank) exceeds 4 are rendered as vol=... suffix classes.
    pub fn indicator(&self) -> String {
        let mut by_class: BTreeMap<u64, u64> = BTreeMap::new();
        if self.singletons > 0 {
            by_class.insert(1, self.singletons);
        }
        for &(s, mult) in &self.blocks {
            *by_class.entry(s.standard_rank() as u64).or_insert(0) += mult;
        }
        let mut parts = Vec::new();
        for (class, count) in by_class {
            let head = if class <= 4 {
                class.to_string()
            } else {
                format!("vol={class}")
            };
            if count == 1 {
                parts.push(head);
            } else {
                parts.push(format!("{head}^{count}"));
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" ")
        }
    }
}

/// Structure detection over a decomposition. Over the integers, shared
/// factors are matched up to sign; `plan_decomposition` folds those signs
/// into companion factors of the selected groups so the witnessed
/// equalities hold entrywise, leaving unselected terms untouched. Over Z2
/// matching is exact equality.
pub struct Analyzer {
    dec: Decomposition,
    shared: Vec<StructureGroup>,
    grid: Vec<StructureGroup>,
}

/// Objective for selecting non-overlapping groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Minimize the exponent of the resulting restriction (default).
    Exponent,
    /// Maximize the number of covered terms.
    Coverage,
}

/// Candidate cap below which selection is solved exactly by branch and
/// bound; larger instances fall back to greedy-by-objective-gain.
pub const EXACT_SELECTION_LIMIT: usize = 40;

impl Analyzer {
    pub fn new(dec: &Decomposition) -> Result<Self, Error> {
        let shared = find_shared_groups(dec);
        let grid = find_grid_groups(dec);
        Ok(Analyzer {
            dec: dec.clone(),
            shared,
            grid,
        })
    }

    /// The decomposition the group indices refer to.
    pub fn decomposition(&self) -> &Decomposition {
        &self.dec
    }

    /// A copy of the analyzed decomposition in which every selected
    /// group's shared factors are made entrywise equal by folding signs
    /// into companion factors; term values are unchanged. This is the form
    /// plan compilation consumes.
    pub fn plan_decomposition(&self, selection: &[StructureGroup]) -> Result<Decomposition, Error> {
        let mut terms = self.dec.terms().to_vec();
        for g in selection {
            fold_group_signs(&mut terms, g)?;
        }
        self.dec.with_terms(terms)
    }

    /// Maximal sets of >= 2 terms sharing an identical factor.
    pub fn shared_factor_groups(&self) -> &[StructureGroup] {
        &self.shared
    }

    /// 4-term grid patterns (permutations of 1x2x2).
    pub fn grid_groups(&self) -> &[StructureGroup] {
        &self.grid
    }

    pub fn all_groups(&self) -> Vec<StructureGroup> {
        let mut v = self.shared.clone();
        v.extend(self.grid.iter().cloned());
        v
    }

    /// Pairwise-disjoint selection maximizing the objective. Exact branch
    /// and bound up to `EXACT_SELECTION_LIMIT` candidates, greedy beyond;
    /// ties break toward the lowest term index.
    pub fn select_disjoint(&self, objective: Objective) -> Vec<StructureGroup> {
        select_disjoint(
            self.dec.shape,
            self.dec.rank(),
            &self.all_groups(),
            objective,
        )
    }

    /// Builds the restriction for a selection, with provenance retained.
    pub fn to_restriction(
        &self,
        selection: &[StructureGroup],
    ) -> Result<StructuredRestriction, Error> {
        let mut seen = vec![false; self.dec.rank()];
        for g in selection {
            for &t in &g.term_indices {
                if seen[t] {
                    return Err(Error::Structural(format!("selection overlaps on term {t}")));
                }
                seen[t] = true;
            }
        }
        let covered: usize = selection.iter().map(|g| g.covered()).sum();
        let mut blocks: BTreeMap<Shape, u64> = BTreeMap::new();
        for g in selection {
            *blocks.entry(g.block_shape).or_insert(0) += 1;
        }
        let mut provenance: Vec<StructureGroup> = selection.to_vec();
        provenance.sort_by_key(|g| g.min_index());
        Ok(StructuredRestriction {
            base: self.dec.shape,
            blocks: blocks.into_iter().collect(),
            singletons: (self.dec.rank() - covered) as u64,
            provenance,
        })
    }

    /// Full pipeline: detect, select with the objective, build restriction.
    pub fn analyze(&self, objective: Objective) -> Result<StructuredRestriction, Error> {
        let sel = self.select_disjoint(objective);
        self.to_restriction(&sel)
    }
}

/// Canonical detection key of a factor: over the integers the sign is
/// normalized away (scalar multiples other than -1 do not occur in exact
/// shared-factor matching); other rings compare exactly.
fn canon_key(m: &Matrix<BigInt>, ring: Ring) -> Vec<BigInt> {
    if ring != Ring::Integer {
        return m.entries().to_vec();
    }
    for e in m.entries() {
        if e.is_negative() {
            return m.neg().entries().to_vec();
        }
        if e.is_positive() {
            break;
        }
    }
    m.entries().to_vec()
}

/// Rewrites the members of one selected group so its witnessed factors are
/// entrywise equal, folding each flipped sign into a factor the group does
/// not constrain.
fn fold_group_signs(terms: &mut [RankOneTerm], g: &StructureGroup) -> Result<(), Error> {
    let sign_to = |t: &Matrix<BigInt>, w: &Matrix<BigInt>| -> Result<i64, Error> {
        if t == w {
            Ok(1)
        } else if &t.neg() == w {
            Ok(-1)
        } else {
            Err(Error::Structural(
                "group member does not match its witness up to sign".into(),
            ))
        }
    };
    match g.kind {
        GroupKind::Shared { slot } => {
            let first = g.term_indices[0];
            for &t in &g.term_indices[1..] {
                let (witness, factor) = match slot {
                    Slot::A => (terms[first].a.clone(), &terms[t].a),
                    Slot::B => (terms[first].b.clone(), &terms[t].b),
                    Slot::C => (terms[first].c.clone(), &terms[t].c),
                };
                if sign_to(factor, &witness)? < 0 {
                    match slot {
                        Slot::A => {
                            terms[t].a = terms[t].a.neg();
                            terms[t].c = terms[t].c.neg();
                        }
                        Slot::B => {
                            terms[t].b = terms[t].b.neg();
                            terms[t].c = terms[t].c.neg();
                        }
                        Slot::C => {
                            terms[t].c = terms[t].c.neg();
                            terms[t].a = terms[t].a.neg();
                        }
                    }
                }
            }
        }
        GroupKind::Grid { slots } => {
            let ts = &g.term_indices;
            if ts.len() != 4 {
                return Err(Error::Structural("grid group needs four terms".into()));
            }
            let pick = |t: usize, s: Slot, terms: &[RankOneTerm]| match s {
                Slot::A => terms[t].a.clone(),
                Slot::B => terms[t].b.clone(),
                Slot::C => terms[t].c.clone(),
            };
            let (row_slot, col_slot) = slots;
            let free_slot = match slots {
                (Slot::A, Slot::C) => Slot::B,
                (Slot::A, Slot::B) => Slot::C,
                (Slot::B, Slot::C) => Slot::A,
                _ => return Err(Error::Structural("non-canonical grid slots".into())),
            };
            let row_witness = [pick(ts[0], row_slot, terms), pick(ts[2], row_slot, terms)];
            let col_witness = [pick(ts[0], col_slot, terms), pick(ts[1], col_slot, terms)];
            for (pos, &t) in ts.iter().enumerate() {
                let (r, c) = (pos / 2, pos % 2);
                let er = sign_to(&pick(t, row_slot, terms), &row_witness[r])?;
                let ec = sign_to(&pick(t, col_slot, terms), &col_witness[c])?;
                let set = |term: &mut RankOneTerm, s: Slot, v: Matrix<BigInt>| match s {
                    Slot::A => term.a = v,
                    Slot::B => term.b = v,
                    Slot::C => term.c = v,
                };
                set(&mut terms[t], row_slot, row_witness[r].clone());
                set(&mut terms[t], col_slot, col_witness[c].clone());
                if er * ec < 0 {
                    let flipped = pick(t, free_slot, terms).neg();
                    set(&mut terms[t], free_slot, flipped);
                }
            }
        }
    }
    Ok(())
}

fn factor_of<'d>(t: &'d RankOneTerm, slot: Slot) -> &'d Matrix<BigInt> {
    match slot {
        Slot::A => &t.a,
        Slot::B => &t.b,
        Slot::C => &t.c,
    }
}

fn shared_block_shape(slot: Slot, k: usize) -> Shape {
    match slot {
        Slot::A => Shape::of(1, 1, k),
        Slot::B => Shape::of(k, 1, 1),
        Slot::C => Shape::of(1, k, 1),
    }
}

fn find_shared_groups(dec: &Decomposition) -> Vec<StructureGroup> {
    let mut out = Vec::new();
    for slot in [Slot::A, Slot::B, Slot::C] {
        let mut classes: BTreeMap<Vec<BigInt>, Vec<usize>> = BTreeMap::new();
        for (i, t) in dec.terms().iter().enumerate() {
            let f = factor_of(t, slot);
            if f.is_zero() {
                continue;
            }
            classes.entry(canon_key(f, dec.ring)).or_default().push(i);
        }
        let mut groups: Vec<StructureGroup> = classes
            .into_values()
            .filter(|v| v.len() >= 2)
            .map(|v| StructureGroup {
                block_shape: shared_block_shape(slot, v.len()),
                term_indices: v,
                kind: GroupKind::Shared { slot },
            })
            .collect();
        groups.sort_by_key(|g| g.min_index());
        out.extend(groups);
    }
    out
}

/// Grid detection: terms are hashed by their factors in a role pair; a
/// fully-populated 2x2 incidence grid of two row values and two column
/// values is a copy of a 1x2x2 permutation. This scans pairs of populated
/// rows and intersects their column sets rather than enumerating 4-subsets.
fn find_grid_groups(dec: &Decomposition) -> Vec<StructureGroup> {
    let mut out = Vec::new();
    for (rs, cs, shape) in [
        (Slot::A, Slot::C, Shape::of(1, 2, 2)),
        (Slot::A, Slot::B, Shape::of(2, 1, 2)),
        (Slot::B, Slot::C, Shape::of(2, 2, 1)),
    ] {
        let mut row_ids: BTreeMap<Vec<BigInt>, usize> = BTreeMap::new();
        let mut col_ids: BTreeMap<Vec<BigInt>, usize> = BTreeMap::new();
        // row id -> sorted (col id, lowest term index in that cell)
        let mut rows: Vec<BTreeMap<usize, usize>> = Vec::new();
        for (i, t) in dec.terms().iter().enumerate() {
            let rf = factor_of(t, rs);
            let cf = factor_of(t, cs);
            if rf.is_zero() || cf.is_zero() {
                continue;
            }
            let next_row = row_ids.len();
            let r = *row_ids.entry(canon_key(rf, dec.ring)).or_insert(next_row);
            if r == rows.len() {
                rows.push(BTreeMap::new());
            }
            let next_col = col_ids.len();
            let c = *col_ids.entry(canon_key(cf, dec.ring)).or_insert(next_col);
            rows[r].entry(c).or_insert(i);
        }
        for r1 in 0..rows.len() {
            for r2 in (r1 + 1)..rows.len() {
                let common: Vec<usize> = rows[r1]
                    .keys()
                    .filter(|c| rows[r2].contains_key(c))
                    .copied()
                    .collect();
                for x in 0..common.len() {
                    for y in (x + 1)..common.len() {
                        let (c1, c2) = (common[x], common[y]);
                        let pick = vec![rows[r1][&c1], rows[r1][&c2], rows[r2][&c1], rows[r2][&c2]];
                        out.push(StructureGroup {
                            term_indices: pick,
                            block_shape: shape,
                            kind: GroupKind::Grid { slots: (rs, cs) },
                        });
                    }
                }
            }
        }
    }
    out.sort_by_key(|g| g.min_index());
    out
}

/// Objective value of a selection; exponent objectives are compared
/// negated so that larger is always better.
fn objective_value(
    base: Shape,
    rank: usize,
    selection: &[&StructureGroup],
    objective: Objective,
) -> f64 {
    match objective {
        Objective::Coverage => selection.iter().map(|g| g.covered()).sum::<usize>() as f64,
        Objective::Exponent => {
            let covered: usize = selection.iter().map(|g| g.covered()).sum();
            let mut blocks: Vec<(Shape, u64)> =
                selection.iter().map(|g| (g.block_shape, 1)).collect();
            blocks.push((Shape::of(1, 1, 1), (rank - covered) as u64));
            let restriction = StructuredRestriction::from_blocks(base, &blocks);
            match complexity::solve_exponent(&restriction, 1) {
                Ok(rep) => -rep.omega0,
                Err(_) => f64::NEG_INFINITY,
            }
        }
    }
}

fn select_disjoint(
    base: Shape,
    rank: usize,
    groups: &[StructureGroup],
    objective: Objective,
) -> Vec<StructureGroup> {
    let mut candidates: Vec<&StructureGroup> = groups
        .iter()
        // blocks as large as the base give no nontrivial exponent
        .filter(|g| objective != Objective::Exponent || g.block_shape.volume() < base.volume())
        .collect();
    candidates.sort_by_key(|g| (g.min_index(), g.term_indices.clone()));
    let chosen: Vec<usize> = if candidates.len() <= EXACT_SELECTION_LIMIT {
        select_exact(base, rank, &candidates, objective)
    } else {
        select_greedy(base, rank, &candidates, objective)
    };
    let sel: Vec<StructureGroup> = chosen.iter().map(|&i| candidates[i].clone()).collect();
    debug_assert!(pairwise_disjoint(&sel));
    sel
}

fn pairwise_disjoint(sel: &[StructureGroup]) -> bool {
    for i in 0..sel.len() {
        for j in (i + 1)..sel.len() {
            if sel[i].overlaps(&sel[j]) {
                return false;
            }
        }
    }
    true
}

/// Branch and bound over include/exclude decisions. Both objectives are
/// monotone in adding disjoint groups, so a selection extended by every
/// still-compatible candidate bounds the branch from above.
fn select_exact(
    base: Shape,
    rank: usize,
    candidates: &[&StructureGroup],
    objective: Objective,
) -> Vec<usize> {
    struct Ctx<'a> {
        base: Shape,
        rank: usize,
        candidates: &'a [&'a StructureGroup],
        objective: Objective,
        best: Vec<usize>,
        best_value: f64,
    }
    fn compatible(sel: &[usize], candidates: &[&StructureGroup], g: usize) -> bool {
        sel.iter().all(|&i| !candidates[i].overlaps(candidates[g]))
    }
    fn recurse(ctx: &mut Ctx, next: usize, current: &mut Vec<usize>) {
        // optimistic bound: extend with every still-compatible group;
        // both objectives improve monotonically under disjoint additions
        let mut optimistic = current.clone();
        for g in next..ctx.candidates.len() {
            if compatible(&optimistic, ctx.candidates, g) {
                optimistic.push(g);
            }
        }
        let sel: Vec<&StructureGroup> = optimistic.iter().map(|&i| ctx.candidates[i]).collect();
        if objective_value(ctx.base, ctx.rank, &sel, ctx.objective) < ctx.best_value {
            return;
        }
        if next == ctx.candidates.len() {
            let sel: Vec<&StructureGroup> = current.iter().map(|&i| ctx.candidates[i]).collect();
            let value = objective_value(ctx.base, ctx.rank, &sel, ctx.objective);
            // strict improvement keeps the include-first, lowest-index-first
            // optimum, which is the documented tie-break
            if value > ctx.best_value {
                ctx.best_value = value;
                ctx.best = current.clone();
            }
            return;
        }
        if compatible(current, ctx.candidates, next) {
            current.push(next);
            recurse(ctx, next + 1, current);
            current.pop();
        }
        recurse(ctx, next + 1, current);
    }
    let mut ctx = Ctx {
        base,
        rank,
        candidates,
        objective,
        best: Vec::new(),
        best_value: f64::NEG_INFINITY,
    };
    let mut current = Vec::new();
    recurse(&mut ctx, 0, &mut current);
    ctx.best
}

fn select_greedy(
    base: Shape,
    rank: usize,
    candidates: &[&StructureGroup],
    objective: Objective,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        let current: Vec<&StructureGroup> = chosen.iter().map(|&i| candidates[i]).collect();
        let current_value = objective_value(base, rank, &current, objective);
        for (i, g) in candidates.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            if current.iter().any(|s| s.overlaps(g)) {
                continue;
            }
            let mut trial = current.clone();
            trial.push(g);
            let v = objective_value(base, rank, &trial, objective);
            let gain = v - current_value;
            if gain <= 0.0 {
                continue;
            }
            // deterministic tie-break: lowest term index wins
            let better = match best {
                None => true,
                Some((bi, bv)) => v > bv || (v == bv && g.min_index() < candidates[bi].min_index()),
            };
            if better {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, _)) => chosen.push(i),
            None => break,
        }
    }
    chosen
}
