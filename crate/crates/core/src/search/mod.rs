//! Flip-graph search over Z2: tensor-preserving local rewrites of a term
//! list, greedy reductions, and random walks that minimize rank or
//! maximize detected structure.
//!
//! A flip takes two terms sharing a factor and rewrites them without
//! changing the sum:
//!
//! ```text
//! a(x)b(x)c + a(x)b'(x)c'  ->  a(x)b(x)(c+c') + a(x)(b+b')(x)c'
//! ```
//!
//! with the analogous role rotations for a shared b or c. A reduction
//! merges two terms agreeing in two slots (their third factors add); a
//! pair identical in all three slots cancels outright mod 2.

pub mod gf2;
pub mod lift;
pub mod symmetry;

use std::collections::BTreeMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomposition::{Decomposition, RankOneTerm};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::shape::Shape;
use crate::structure::{Analyzer, Objective, Slot};

/// A rank-one term over Z2 with bit-packed factors (row-major bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Z2Term {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl Z2Term {
    fn factor(&self, slot: Slot) -> u64 {
        match slot {
            Slot::A => self.a,
            Slot::B => self.b,
            Slot::C => self.c,
        }
    }

    fn is_zero(&self) -> bool {
        self.a == 0 || self.b == 0 || self.c == 0
    }

    pub fn support(&self) -> u32 {
        self.a.count_ones() + self.b.count_ones() + self.c.count_ones()
    }
}

/// A Z2 decomposition in packed form; shapes must fit machine words
/// (n*m, m*p, p*n all at most 64).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Z2Scheme {
    pub shape: Shape,
    pub terms: Vec<Z2Term>,
}

impl Z2Scheme {
    pub fn from_decomposition(dec: &Decomposition) -> Result<Self, Error> {
        if dec.ring != Ring::Z2 {
            return Err(Error::Structural(
                "packed schemes require the Z2 ring".into(),
            ));
        }
        let s = dec.shape;
        if s.n * s.m > 64 || s.m * s.p > 64 || s.p * s.n > 64 {
            return Err(Error::Unsupported(
                "factor matrices beyond 64 entries cannot be bit-packed".into(),
            ));
        }
        let pack = |m: &Matrix<num_bigint::BigInt>| -> u64 {
            let mut bits = 0u64;
            for (i, e) in m.entries().iter().enumerate() {
                if !e.is_zero() {
                    bits |= 1 << i;
                }
            }
            bits
        };
        let terms = dec
            .terms()
            .iter()
            .map(|t| Z2Term {
                a: pack(&t.a),
                b: pack(&t.b),
                c: pack(&t.c),
            })
            .collect();
        Ok(Z2Scheme { shape: s, terms })
    }

    pub fn to_decomposition(&self) -> Decomposition {
        let s = self.shape;
        let unpack = |bits: u64, rows: usize, cols: usize| {
            let data: Vec<i64> = (0..rows * cols).map(|i| ((bits >> i) & 1) as i64).collect();
            Matrix::from_i64s(rows, cols, &data).unwrap()
        };
        let terms = self
            .terms
            .iter()
            .map(|t| RankOneTerm {
                a: unpack(t.a, s.n, s.m),
                b: unpack(t.b, s.m, s.p),
                c: unpack(t.c, s.p, s.n),
            })
            .collect();
        Decomposition::new(s, Ring::Z2, terms).unwrap()
    }

    pub fn standard(shape: Shape) -> Result<Self, Error> {
        Self::from_decomposition(&Decomposition::standard(shape, Ring::Z2))
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn support(&self) -> u64 {
        self.terms.iter().map(|t| t.support() as u64).sum()
    }

    /// Dense tensor of the scheme: one word of p*n bits per (a-bit, b-bit)
    /// coordinate pair.
    pub fn tensor(&self) -> Vec<u64> {
        let (nm, mp) = (self.shape.n * self.shape.m, self.shape.m * self.shape.p);
        let mut acc = vec![0u64; nm * mp];
        for t in &self.terms {
            let mut abits = t.a;
            while abits != 0 {
                let x = abits.trailing_zeros() as usize;
                abits &= abits - 1;
                let mut bbits = t.b;
                while bbits != 0 {
                    let y = bbits.trailing_zeros() as usize;
                    bbits &= bbits - 1;
                    acc[x * mp + y] ^= t.c;
                }
            }
        }
        acc
    }

    /// The matmul tensor of `shape` in the same packed layout.
    pub fn matmul_tensor(shape: Shape) -> Vec<u64> {
        Z2Scheme::standard(shape).expect("packable shape").tensor()
    }
}

/// The flip rewrite on two explicit terms; pure function used by the walk
/// and exposed for direct use.
pub fn flip_terms(scheme: &Z2Scheme, t1: usize, t2: usize, slot: Slot) -> Result<Z2Scheme, Error> {
    if t1 == t2 || t1 >= scheme.rank() || t2 >= scheme.rank() {
        return Err(Error::Structural(
            "flip needs two distinct term indices".into(),
        ));
    }
    let (u, v) = (scheme.terms[t1], scheme.terms[t2]);
    if u.factor(slot) != v.factor(slot) {
        return Err(Error::Structural(format!(
            "terms {t1} and {t2} do not share the {slot:?} factor"
        )));
    }
    let mut terms = scheme.terms.clone();
    let (nu, nv) = flipped_pair(u, v, slot);
    terms[t1] = nu;
    terms[t2] = nv;
    Ok(Z2Scheme {
        shape: scheme.shape,
        terms,
    })
}

fn flipped_pair(u: Z2Term, v: Z2Term, slot: Slot) -> (Z2Term, Z2Term) {
    match slot {
        Slot::A => (
            Z2Term {
                a: u.a,
                b: u.b,
                c: u.c ^ v.c,
            },
            Z2Term {
                a: v.a,
                b: u.b ^ v.b,
                c: v.c,
            },
        ),
        Slot::B => (
            Z2Term {
                a: u.a ^ v.a,
                b: u.b,
                c: u.c,
            },
            Z2Term {
                a: v.a,
                b: v.b,
                c: u.c ^ v.c,
            },
        ),
        Slot::C => (
            Z2Term {
                a: u.a,
                b: u.b ^ v.b,
                c: u.c,
            },
            Z2Term {
                a: u.a ^ v.a,
                b: v.b,
                c: v.c,
            },
        ),
    }
}

/// One reduction pass: merges the first pair of terms agreeing in two
/// slots (mod-2 duplicates cancel entirely); returns None when no pair is
/// mergeable.
pub fn reduce_once(scheme: &Z2Scheme) -> Option<Z2Scheme> {
    for i in 0..scheme.rank() {
        for j in (i + 1)..scheme.rank() {
            if let Some(m) = merged_checked(scheme.terms[i], scheme.terms[j]) {
                let mut terms = scheme.terms.clone();
                terms.remove(j);
                terms.remove(i);
                if let Some(t) = m {
                    terms.push(t);
                }
                return Some(Z2Scheme {
                    shape: scheme.shape,
                    terms,
                });
            }
        }
    }
    None
}

/// If the pair agrees in at least two slots, the merged term (None inside
/// the option when the pair cancels outright).
fn merged_checked(u: Z2Term, v: Z2Term) -> Option<Option<Z2Term>> {
    let agree_a = u.a == v.a;
    let agree_b = u.b == v.b;
    let agree_c = u.c == v.c;
    let merged = match (agree_a, agree_b, agree_c) {
        (true, true, true) => None,
        (true, true, false) => Some(Z2Term {
            a: u.a,
            b: u.b,
            c: u.c ^ v.c,
        }),
        (true, false, true) => Some(Z2Term {
            a: u.a,
            b: u.b ^ v.b,
            c: u.c,
        }),
        (false, true, true) => Some(Z2Term {
            a: u.a ^ v.a,
            b: u.b,
            c: u.c,
        }),
        _ => return None,
    };
    Some(merged.filter(|t| !t.is_zero()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkObjective {
    /// Minimize rank.
    Rank,
    /// Maximize disjoint structure coverage, never letting rank grow.
    StructureCount,
    /// Minimize total nonzero coefficients.
    Support,
}

#[derive(Debug, Clone)]
pub struct SearchState {
    pub scheme: Z2Scheme,
    /// Leading terms excluded from flips and reductions (a protected
    /// target pattern stays intact through the walk).
    pub protected: usize,
    pub objective: WalkObjective,
    pub seed: u64,
    pub budget: u64,
    /// Flips without improvement before restarting from the best state.
    pub plateau: u64,
    /// Stop early once the rank objective reaches this value.
    pub target_rank: Option<usize>,
}

impl SearchState {
    /// The flip rewrite with the protected-prefix contract enforced.
    pub fn flip(&self, t1: usize, t2: usize, slot: Slot) -> Result<Z2Scheme, Error> {
        if t1 < self.protected || t2 < self.protected {
            return Err(Error::Structural(format!(
                "terms below index {} are protected and cannot be flipped",
                self.protected
            )));
        }
        flip_terms(&self.scheme, t1, t2, slot)
    }

    pub fn new(scheme: Z2Scheme, objective: WalkObjective, seed: u64, budget: u64) -> Self {
        SearchState {
            scheme,
            protected: 0,
            objective,
            seed,
            budget,
            plateau: 100_000,
            target_rank: None,
        }
    }

    /// Step-1 setup: search for a decomposition of the full tensor with
    /// `pattern` kept intact as a protected prefix. Pattern terms that
    /// occur in the standard decomposition replace those occurrences; any
    /// others are balanced by a free duplicate (which cancels mod 2).
    pub fn with_protected_pattern(
        shape: Shape,
        pattern: &[Z2Term],
        objective: WalkObjective,
        seed: u64,
        budget: u64,
    ) -> Result<Self, Error> {
        let std = Z2Scheme::standard(shape)?;
        let mut free: Vec<Z2Term> = std.terms.clone();
        let mut extra: Vec<Z2Term> = Vec::new();
        for pat in pattern {
            if let Some(pos) = free.iter().position(|t| t == pat) {
                free.remove(pos);
            } else {
                extra.push(*pat);
            }
        }
        let mut terms: Vec<Z2Term> = pattern.to_vec();
        terms.extend(extra);
        terms.extend(free);
        let scheme = Z2Scheme { shape, terms };
        let mut state = SearchState::new(scheme, objective, seed, budget);
        state.protected = pattern.len();
        Ok(state)
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Z2Scheme,
    pub steps: u64,
    pub restarts: u64,
    /// (step, rank, coverage-or-support metric) at each improvement.
    pub trajectory: Vec<(u64, usize, u64)>,
}

/// Random walk minimizing rank: uniformly random admissible flips, greedy
/// reductions whenever available, restart on plateau, best state retained.
/// Verification against the target tensor is spot-checked during the walk
/// and enforced at the end.
pub fn search_rank(state: &SearchState) -> Result<SearchOutcome, Error> {
    walk(state)
}

/// Same walk, tracking (rank, structure coverage) lexicographically: rank
/// never increases, ties break toward more detected structure.
pub fn search_structure(state: &SearchState) -> Result<SearchOutcome, Error> {
    walk(state)
}

fn coverage_of(scheme: &Z2Scheme) -> u64 {
    let dec = scheme.to_decomposition();
    let Ok(analyzer) = Analyzer::new(&dec) else {
        return 0;
    };
    let sel = analyzer.select_disjoint(Objective::Coverage);
    sel.iter().map(|g| g.covered() as u64).sum()
}

struct Walk {
    shape: Shape,
    terms: Vec<Z2Term>,
    protected: usize,
    /// factor value -> sorted free-term indices, per slot
    classes: [BTreeMap<u64, Vec<usize>>; 3],
    target: Vec<u64>,
}

const SLOTS: [Slot; 3] = [Slot::A, Slot::B, Slot::C];

impl Walk {
    fn new(scheme: &Z2Scheme, protected: usize, target: Vec<u64>) -> Self {
        let mut w = Walk {
            shape: scheme.shape,
            terms: scheme.terms.clone(),
            protected,
            classes: Default::default(),
            target,
        };
        w.rebuild();
        w
    }

    fn rebuild(&mut self) {
        self.classes = Default::default();
        for idx in self.protected..self.terms.len() {
            self.insert_maps(idx);
        }
    }

    fn insert_maps(&mut self, idx: usize) {
        for (si, slot) in SLOTS.iter().enumerate() {
            let key = self.terms[idx].factor(*slot);
            let v = self.classes[si].entry(key).or_default();
            match v.binary_search(&idx) {
                Ok(_) => {}
                Err(pos) => v.insert(pos, idx),
            }
        }
    }

    fn remove_maps(&mut self, idx: usize) {
        for (si, slot) in SLOTS.iter().enumerate() {
            let key = self.terms[idx].factor(*slot);
            let v = self.classes[si].get_mut(&key).expect("indexed term");
            let pos = v.binary_search(&idx).expect("indexed term");
            v.remove(pos);
            if v.is_empty() {
                self.classes[si].remove(&key);
            }
        }
    }

    fn admissible(&self) -> u64 {
        let mut total = 0u64;
        for side in &self.classes {
            for v in side.values() {
                let k = v.len() as u64;
                total += k * (k - 1);
            }
        }
        total
    }

    /// Picks the q-th admissible ordered flip, deterministic in map order.
    fn pick(&self, mut q: u64) -> (usize, usize, Slot) {
        for (si, side) in self.classes.iter().enumerate() {
            for v in side.values() {
                let k = v.len() as u64;
                let here = k * (k - 1);
                if q < here {
                    let i = (q / (k - 1)) as usize;
                    let mut j = (q % (k - 1)) as usize;
                    if j >= i {
                        j += 1;
                    }
                    return (v[i], v[j], SLOTS[si]);
                }
                q -= here;
            }
        }
        unreachable!("flip index within admissible count")
    }

    fn apply_flip(&mut self, t1: usize, t2: usize, slot: Slot) {
        self.remove_maps(t1);
        self.remove_maps(t2);
        let (nu, nv) = flipped_pair(self.terms[t1], self.terms[t2], slot);
        self.terms[t1] = nu;
        self.terms[t2] = nv;
        self.insert_maps(t1);
        self.insert_maps(t2);
        self.normalize(&mut vec![t1, t2]);
    }

    /// Removes zero terms and greedily merges two-slot agreements reachable
    /// from the dirty set, cascading until stable.
    fn normalize(&mut self, dirty: &mut Vec<usize>) {
        while let Some(idx) = dirty.pop() {
            if idx >= self.terms.len() || idx < self.protected {
                continue;
            }
            if self.terms[idx].is_zero() {
                self.remove_term(idx, dirty);
                continue;
            }
            if let Some(partner) = self.find_merge_partner(idx) {
                let (i, j) = (idx.min(partner), idx.max(partner));
                let merged = merged_checked(self.terms[i], self.terms[j]).expect("agreeing pair");
                self.remove_term(j, dirty);
                self.remove_term(i, dirty);
                if let Some(t) = merged {
                    let new_idx = self.terms.len();
                    self.terms.push(t);
                    self.insert_maps(new_idx);
                    dirty.push(new_idx);
                }
            }
        }
    }

    fn find_merge_partner(&self, idx: usize) -> Option<usize> {
        let t = self.terms[idx];
        for (si, slot) in SLOTS.iter().enumerate() {
            let key = t.factor(*slot);
            if let Some(class) = self.classes[si].get(&key) {
                for &other in class {
                    if other != idx && merged_checked(t, self.terms[other]).is_some() {
                        return Some(other);
                    }
                }
            }
        }
        None
    }

    /// Swap-removes a free term, fixing the maps of the displaced index.
    fn remove_term(&mut self, idx: usize, dirty: &mut Vec<usize>) {
        debug_assert!(idx >= self.protected);
        self.remove_maps(idx);
        let last = self.terms.len() - 1;
        if idx != last {
            self.remove_maps(last);
            self.terms.swap(idx, last);
            self.terms.pop();
            self.insert_maps(idx);
            // the displaced term changed index; re-point dirty entries
            for d in dirty.iter_mut() {
                if *d == last {
                    *d = idx;
                }
            }
        } else {
            self.terms.pop();
        }
    }

    fn scheme(&self) -> Z2Scheme {
        Z2Scheme {
            shape: self.shape,
            terms: self.terms.clone(),
        }
    }

    fn verifies(&self) -> bool {
        self.scheme().tensor() == self.target
    }
}

fn walk(state: &SearchState) -> Result<SearchOutcome, Error> {
    // the walk preserves the tensor of its start state; searches for the
    // matmul tensor start from a decomposition of it
    let target = state.scheme.tensor();
    let mut w = Walk::new(&state.scheme, state.protected, target);
    debug_assert!(w.verifies());
    let mut rng = ChaCha8Rng::seed_from_u64(state.seed);
    let score = |w: &Walk| -> (usize, u64) {
        let scheme = w.scheme();
        match state.objective {
            WalkObjective::Rank => (scheme.rank(), 0),
            WalkObjective::Support => (scheme.rank(), scheme.support()),
            WalkObjective::StructureCount => {
                let cov = coverage_of(&scheme);
                (scheme.rank(), u64::MAX - cov)
            }
        }
    };
    let mut best = w.scheme();
    let mut best_score = score(&w);
    let mut outcome = SearchOutcome {
        best: best.clone(),
        steps: 0,
        restarts: 0,
        trajectory: vec![(0, best.rank(), best_score.1)],
    };
    let mut since_improvement = 0u64;
    while outcome.steps < state.budget {
        if let Some(target_rank) = state.target_rank {
            if best.rank() <= target_rank {
                break;
            }
        }
        let total = w.admissible();
        if total == 0 {
            // restart from the best state; if that is flipless too, stop
            outcome.restarts += 1;
            let target = std::mem::take(&mut w.target);
            w = Walk::new(&best, state.protected, target);
            since_improvement = 0;
            if w.admissible() == 0 {
                break;
            }
            continue;
        }
        let (t1, t2, slot) = w.pick(rng.gen_range(0..total));
        w.apply_flip(t1, t2, slot);
        outcome.steps += 1;
        since_improvement += 1;
        if outcome.steps % 1024 == 0 && !w.verifies() {
            return Err(Error::Structural(format!(
                "walk state stopped verifying at step {}",
                outcome.steps
            )));
        }
        let s = score(&w);
        if s < best_score {
            best_score = s;
            best = w.scheme();
            outcome.best = best.clone();
            outcome.trajectory.push((outcome.steps, best.rank(), s.1));
            since_improvement = 0;
        }
        if since_improvement >= state.plateau {
            outcome.restarts += 1;
            let target = std::mem::take(&mut w.target);
            w = Walk::new(&best, state.protected, target);
            since_improvement = 0;
        }
    }
    if !w.verifies() {
        return Err(Error::Structural("walk end state does not verify".into()));
    }
    let final_best = Z2Scheme {
        shape: best.shape,
        terms: best.terms.clone(),
    };
    if final_best.tensor() != w.target {
        return Err(Error::Structural("best state does not verify".into()));
    }
    outcome.best = final_best;
    Ok(outcome)
}
