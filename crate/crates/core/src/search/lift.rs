//! Stage-wise lifting of a Z2 scheme to the integers. At stage j every
//! coefficient x is refined to x + 2^j * d with d in {0,1}; the Brent
//! residual divided by 2^j yields a linear system for the d's over GF(2)
//! whose matrix is fixed across stages (it depends only on the mod-2
//! values). Structure preservation pins factor pairs equal (merged
//! variables) and zero preservation pins vanished coefficients to zero
//! (dropped variables). Lifting stops as soon as the coefficients, read in
//! the symmetric range, verify over the integers.

use num_bigint::BigInt;

use crate::decomposition::{Decomposition, RankOneTerm};
use crate::error::Error;
use crate::matrix::Matrix;
use crate::ring::Ring;
use crate::search::gf2::{solve_sparse, SolveOutcome};
use crate::structure::{GroupKind, Slot, StructuredRestriction};

/// Coefficient coordinate: term index, factor role, flat entry index.
pub type Coord = (usize, Slot, usize);

#[derive(Debug, Clone, Default)]
pub struct LiftConstraints {
    /// Coordinates pinned to zero through every stage.
    pub zeros: Vec<Coord>,
    /// Factor pairs pinned entrywise equal through every stage.
    pub equal_factors: Vec<((usize, Slot), (usize, Slot))>,
}

impl LiftConstraints {
    /// Pins every coefficient that is zero in the scheme.
    pub fn preserving_zeros(dec: &Decomposition) -> Self {
        let mut zeros = Vec::new();
        for (t, term) in dec.terms().iter().enumerate() {
            for (slot, f) in [(Slot::A, &term.a), (Slot::B, &term.b), (Slot::C, &term.c)] {
                for (i, e) in f.entries().iter().enumerate() {
                    if num_traits::Zero::is_zero(e) {
                        zeros.push((t, slot, i));
                    }
                }
            }
        }
        LiftConstraints {
            zeros,
            equal_factors: Vec::new(),
        }
    }

    /// Pins the witnessed shared factors of a restriction's groups.
    pub fn preserving_structure(restriction: &StructuredRestriction) -> Self {
        let mut pairs = Vec::new();
        for g in &restriction.provenance {
            let ts = &g.term_indices;
            match g.kind {
                GroupKind::Shared { slot } => {
                    for &t in &ts[1..] {
                        pairs.push(((ts[0], slot), (t, slot)));
                    }
                }
                GroupKind::Grid { slots } => {
                    let (rs, cs) = slots;
                    // grid order [r0c0, r0c1, r1c0, r1c1]
                    pairs.push(((ts[0], rs), (ts[1], rs)));
                    pairs.push(((ts[2], rs), (ts[3], rs)));
                    pairs.push(((ts[0], cs), (ts[2], cs)));
                    pairs.push(((ts[1], cs), (ts[3], cs)));
                }
            }
        }
        LiftConstraints {
            zeros: Vec::new(),
            equal_factors: pairs,
        }
    }

    pub fn merged(mut self, other: LiftConstraints) -> Self {
        self.zeros.extend(other.zeros);
        self.equal_factors.extend(other.equal_factors);
        self
    }
}

/// Which constraint class made the lifting system unsolvable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailedClass {
    Lift,
    Zero,
    Structure,
}

#[derive(Debug, Clone)]
pub struct LiftFailure {
    pub stage: u32,
    pub class: FailedClass,
    pub message: String,
}

impl std::fmt::Display for LiftFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "lift failed at stage {} ({:?}): {}",
            self.stage, self.class, self.message
        )
    }
}

#[derive(Debug, Clone)]
pub struct LiftReport {
    pub result: Result<Decomposition, LiftFailure>,
    pub stages: u32,
}

/// Cap on 2^dim affine-set enumeration when choosing among solutions.
const ENUM_CAP_DIM: usize = 12;

struct LiftProblem {
    shape: crate::shape::Shape,
    rank: usize,
    /// coefficient values, coordinate-major: coords[t][slot][idx]
    values: Vec<i128>,
    /// coordinate -> merged variable id, or usize::MAX when pinned to zero
    var_of: Vec<usize>,
    vars: usize,
    dims: [(usize, usize); 3],
}

fn coord_index(shape: crate::shape::Shape, c: Coord) -> usize {
    let (t, slot, i) = c;
    let (nm, mp, pn) = (shape.n * shape.m, shape.m * shape.p, shape.p * shape.n);
    let per_term = nm + mp + pn;
    t * per_term
        + match slot {
            Slot::A => i,
            Slot::B => nm + i,
            Slot::C => nm + mp + i,
        }
}

pub fn hensel_lift(
    dec: &Decomposition,
    constraints: &LiftConstraints,
    max_stages: u32,
) -> Result<LiftReport, Error> {
    if dec.ring != Ring::Z2 {
        return Err(Error::Structural("lifting starts from a Z2 scheme".into()));
    }
    if !dec.verify().pass {
        return Err(Error::Structural(
            "lifting needs a verified Z2 scheme".into(),
        ));
    }
    if max_stages > 60 {
        return Err(Error::Structural(
            "stage cap beyond 60 would overflow residuals".into(),
        ));
    }
    let attempt = |use_zeros: bool, use_structure: bool| -> Result<Decomposition, LiftErr> {
        run_lift(dec, constraints, max_stages, use_zeros, use_structure)
    };
    match attempt(true, true) {
        Ok(lifted) => Ok(LiftReport {
            stages: stage_count(&lifted),
            result: Ok(lifted),
        }),
        Err(err) => {
            // pin violations carry their class; a system inconsistency is
            // attributed by retrying with constraint classes relaxed
            let class = match err.class_hint {
                Some(c) => c,
                None => {
                    let inconsistent = |r: &Result<Decomposition, LiftErr>| matches!(r, Err(e) if e.class_hint.is_none());
                    let without_structure = attempt(true, false);
                    if !inconsistent(&without_structure) {
                        FailedClass::Structure
                    } else if !inconsistent(&attempt(false, false)) {
                        FailedClass::Zero
                    } else {
                        FailedClass::Lift
                    }
                }
            };
            Ok(LiftReport {
                stages: err.stage,
                result: Err(LiftFailure {
                    stage: err.stage,
                    class,
                    message: err.message,
                }),
            })
        }
    }
}

/// Internal lift error; `class_hint` is set for failures whose class is
/// structurally known (pins, stage cap), and None for a system
/// inconsistency needing attribution.
struct LiftErr {
    stage: u32,
    message: String,
    class_hint: Option<FailedClass>,
}

impl LiftErr {
    fn pinned(stage: u32, message: &str, class: FailedClass) -> Self {
        LiftErr {
            stage,
            message: message.into(),
            class_hint: Some(class),
        }
    }
}

fn stage_count(dec: &Decomposition) -> u32 {
    let m = dec.max_abs_coeff();
    let mut bits = 1u32;
    let mut bound = BigInt::from(1);
    while bound < m {
        bound *= 2;
        bits += 1;
    }
    bits
}

fn run_lift(
    dec: &Decomposition,
    constraints: &LiftConstraints,
    max_stages: u32,
    use_zeros: bool,
    use_structure: bool,
) -> Result<Decomposition, LiftErr> {
    let shape = dec.shape;
    let (nm, mp, pn) = (shape.n * shape.m, shape.m * shape.p, shape.p * shape.n);
    let per_term = nm + mp + pn;
    let total = dec.rank() * per_term;

    // union-find for equality constraints
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    if use_structure {
        for &((t1, s1), (t2, s2)) in &constraints.equal_factors {
            let len = match s1 {
                Slot::A => nm,
                Slot::B => mp,
                Slot::C => pn,
            };
            for i in 0..len {
                let a = find(&mut parent, coord_index(shape, (t1, s1, i)));
                let b = find(&mut parent, coord_index(shape, (t2, s2, i)));
                parent[a] = b;
            }
        }
    }
    let mut pinned = vec![false; total];
    if use_zeros {
        for &c in &constraints.zeros {
            pinned[coord_index(shape, c)] = true;
        }
    }
    // a pinned coordinate pins its whole merged class
    let mut class_pinned = vec![false; total];
    for i in 0..total {
        if pinned[i] {
            let r = find(&mut parent, i);
            class_pinned[r] = true;
        }
    }
    let mut var_of = vec![usize::MAX; total];
    let mut vars = 0usize;
    for i in 0..total {
        let r = find(&mut parent, i);
        if class_pinned[r] {
            continue;
        }
        if var_of[r] == usize::MAX {
            var_of[r] = vars;
            vars += 1;
        }
        var_of[i] = var_of[r];
    }

    // initial values mod 2, with constraint consistency checks
    let mut values = vec![0i128; total];
    for (t, term) in dec.terms().iter().enumerate() {
        for (slot, f) in [(Slot::A, &term.a), (Slot::B, &term.b), (Slot::C, &term.c)] {
            for (i, e) in f.entries().iter().enumerate() {
                let bit = if num_traits::Zero::is_zero(e) { 0 } else { 1 };
                values[coord_index(shape, (t, slot, i))] = bit;
            }
        }
    }
    for i in 0..total {
        if pinned[i] && values[i] != 0 {
            return Err(LiftErr::pinned(
                0,
                "zero-pinned coefficient is odd",
                FailedClass::Zero,
            ));
        }
    }
    if use_structure {
        for i in 0..total {
            let r = find(&mut parent, i);
            if values[i] != values[r] {
                return Err(LiftErr::pinned(
                    0,
                    "equality-pinned factors differ mod 2",
                    FailedClass::Structure,
                ));
            }
            if class_pinned[r] && values[i] != 0 {
                return Err(LiftErr::pinned(
                    0,
                    "equality class pinned to zero holds an odd value",
                    FailedClass::Zero,
                ));
            }
        }
    }

    let problem = LiftProblem {
        shape,
        rank: dec.rank(),
        values,
        var_of,
        vars,
        dims: [(shape.n, shape.m), (shape.m, shape.p), (shape.p, shape.n)],
    };
    lift_stages(dec, problem, max_stages)
}

fn lift_stages(
    dec: &Decomposition,
    mut pr: LiftProblem,
    max_stages: u32,
) -> Result<Decomposition, LiftErr> {
    let shape = pr.shape;
    let (nm, mp, pn) = (shape.n * shape.m, shape.m * shape.p, shape.p * shape.n);

    // the GF(2) system matrix is stage-independent; build the sparse rows
    // once as (equation, variable) incidences with mod-2 coefficients
    let mut eq_supports: Vec<Vec<usize>> = vec![Vec::new(); nm * mp * pn];
    {
        let bit = |v: i128| (v & 1) as u64;
        for t in 0..pr.rank {
            for x in 0..nm {
                let av = bit(pr.value_at(t, Slot::A, x));
                for y in 0..mp {
                    let bv = bit(pr.value_at(t, Slot::B, y));
                    for z in 0..pn {
                        let cv = bit(pr.value_at(t, Slot::C, z));
                        let e = (x * mp + y) * pn + z;
                        // derivative wrt each of the three coordinates
                        if bv & cv == 1 {
                            if let Some(v) = pr.var(t, Slot::A, x) {
                                eq_supports[e].push(v);
                            }
                        }
                        if av & cv == 1 {
                            if let Some(v) = pr.var(t, Slot::B, y) {
                                eq_supports[e].push(v);
                            }
                        }
                        if av & bv == 1 {
                            if let Some(v) = pr.var(t, Slot::C, z) {
                                eq_supports[e].push(v);
                            }
                        }
                    }
                }
            }
        }
        // duplicate incidences cancel mod 2
        for s in &mut eq_supports {
            s.sort_unstable();
            let mut out = Vec::with_capacity(s.len());
            let mut i = 0;
            while i < s.len() {
                let mut j = i;
                while j < s.len() && s[j] == s[i] {
                    j += 1;
                }
                if (j - i) % 2 == 1 {
                    out.push(s[i]);
                }
                i = j;
            }
            *s = out;
        }
    }

    for stage in 1..=max_stages {
        if let Some(lifted) = pr.integer_scheme_if_verifying(dec, stage) {
            return Ok(lifted);
        }
        // residuals are divisible by 2^stage at entry; the next bit is
        // the right-hand side for this stage's correction x += 2^stage d
        let shift = stage;
        let mut rows: Vec<(Vec<usize>, bool)> = Vec::with_capacity(eq_supports.len());
        for x in 0..nm {
            for y in 0..mp {
                for z in 0..pn {
                    let e = (x * mp + y) * pn + z;
                    let residual = pr.residual(e, nm, mp, pn);
                    debug_assert_eq!(
                        residual & ((1i128 << shift) - 1),
                        0,
                        "residual must vanish modulo the current stage"
                    );
                    let rhs = (residual >> shift) & 1 == 1;
                    if rhs || !eq_supports[e].is_empty() {
                        rows.push((eq_supports[e].clone(), rhs));
                    }
                }
            }
        }
        let solution = match solve_sparse(pr.vars, &rows) {
            SolveOutcome::Solved {
                particular,
                nullspace,
            } => pr.choose_solution(dec, stage, particular, nullspace),
            SolveOutcome::Inconsistent => {
                return Err(LiftErr {
                    stage,
                    message: "lifting system is inconsistent".into(),
                    class_hint: None,
                })
            }
        };
        pr.apply(&solution, shift);
    }
    if let Some(lifted) = pr.integer_scheme_if_verifying(dec, max_stages + 1) {
        return Ok(lifted);
    }
    Err(LiftErr::pinned(
        max_stages,
        "stage cap reached without integer verification",
        FailedClass::Lift,
    ))
}

impl LiftProblem {
    fn value_at(&self, t: usize, slot: Slot, i: usize) -> i128 {
        self.values[coord_index(self.shape, (t, slot, i))]
    }

    fn var(&self, t: usize, slot: Slot, i: usize) -> Option<usize> {
        let v = self.var_of[coord_index(self.shape, (t, slot, i))];
        (v != usize::MAX).then_some(v)
    }

    /// Brent residual of equation e over the current integer
    /// representatives in [0, 2^stage).
    fn residual(&self, e: usize, _nm: usize, mp: usize, pn: usize) -> i128 {
        let z = e % pn;
        let y = (e / pn) % mp;
        let x = e / (pn * mp);
        let mut sum: i128 = 0;
        for t in 0..self.rank {
            sum += self.value_at(t, Slot::A, x)
                * self.value_at(t, Slot::B, y)
                * self.value_at(t, Slot::C, z);
        }
        let (i, j) = (x / self.shape.m, x % self.shape.m);
        let (j2, k) = (y / self.shape.p, y % self.shape.p);
        let (k2, i2) = (z / self.shape.n, z % self.shape.n);
        let target = (i == i2 && j == j2 && k == k2) as i128;
        sum - target
    }

    fn apply(&mut self, delta: &[bool], shift: u32) {
        let step = 1i128 << shift;
        for (idx, &var) in self.var_of.iter().enumerate() {
            if var != usize::MAX && delta[var] {
                self.values[idx] += step;
            }
        }
    }

    /// Among the affine solution set, prefer a delta whose lift verifies
    /// over the integers outright, then smallest support; enumeration is
    /// capped, falling back to the free-variables-zero particular
    /// solution.
    fn choose_solution(
        &self,
        dec: &Decomposition,
        stage: u32,
        particular: Vec<bool>,
        nullspace: Vec<Vec<bool>>,
    ) -> Vec<bool> {
        if nullspace.is_empty() || nullspace.len() > ENUM_CAP_DIM {
            return particular;
        }
        let dim = nullspace.len();
        let mut best: Option<(bool, usize, Vec<bool>)> = None;
        for mask in 0..(1u64 << dim) {
            let mut candidate = particular.clone();
            for (b, vec) in nullspace.iter().enumerate() {
                if (mask >> b) & 1 == 1 {
                    for (c, v) in candidate.iter_mut().zip(vec) {
                        *c ^= v;
                    }
                }
            }
            let mut trial = self.clone_values();
            let step = 1i128 << stage;
            for (idx, &var) in self.var_of.iter().enumerate() {
                if var != usize::MAX && candidate[var] {
                    trial[idx] += step;
                }
            }
            let z_valid = self
                .with_values(&trial)
                .integer_scheme_if_verifying(dec, stage + 1)
                .is_some();
            let weight = candidate.iter().filter(|&&b| b).count();
            let better = match &best {
                None => true,
                Some((bz, bw, _)) => {
                    (z_valid, std::cmp::Reverse(weight)) > (*bz, std::cmp::Reverse(*bw))
                }
            };
            if better {
                best = Some((z_valid, weight, candidate));
            }
        }
        best.expect("enumeration covers at least the particular solution")
            .2
    }

    fn clone_values(&self) -> Vec<i128> {
        self.values.clone()
    }

    fn with_values(&self, values: &[i128]) -> LiftProblem {
        LiftProblem {
            shape: self.shape,
            rank: self.rank,
            values: values.to_vec(),
            var_of: self.var_of.clone(),
            vars: self.vars,
            dims: self.dims,
        }
    }

    /// Builds the integer scheme with coefficients in the symmetric range
    /// (-2^(stage-1), 2^(stage-1)] and returns it when it verifies.
    fn integer_scheme_if_verifying(
        &self,
        dec: &Decomposition,
        stage: u32,
    ) -> Option<Decomposition> {
        let modulus = 1i128 << stage;
        let half = modulus >> 1;
        let shape = self.shape;
        let sym = |v: i128| {
            let r = v.rem_euclid(modulus);
            if r > half {
                r - modulus
            } else {
                r
            }
        };
        let mut terms = Vec::with_capacity(self.rank);
        for t in 0..self.rank {
            let fac = |slot: Slot, rows: usize, cols: usize| {
                let data: Vec<i64> = (0..rows * cols)
                    .map(|i| sym(self.value_at(t, slot, i)) as i64)
                    .collect();
                Matrix::from_i64s(rows, cols, &data).unwrap()
            };
            terms.push(RankOneTerm {
                a: fac(Slot::A, shape.n, shape.m),
                b: fac(Slot::B, shape.m, shape.p),
                c: fac(Slot::C, shape.p, shape.n),
            });
        }
        let candidate = Decomposition::new(shape, Ring::Integer, terms).ok()?;
        if candidate.rank() != dec.rank() {
            return None;
        }
        candidate.verify().pass.then_some(candidate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn strassen_lifts_back_to_signs() {
        let (z2, _) = builtin::strassen().reduce_mod(Ring::Z2).unwrap();
        let constraints = LiftConstraints::preserving_zeros(&z2);
        let report = hensel_lift(&z2, &constraints, 16).unwrap();
        let lifted = report.result.expect("strassen lifts");
        assert!(lifted.verify().pass);
        assert_eq!(lifted.rank(), 7);
        assert!(
            lifted.max_abs_coeff() <= BigInt::from(1),
            "coefficients stay in -1..1"
        );
    }

    #[test]
    fn round_trip_on_builtin_sign_schemes() {
        for name in ["strassen", "winograd", "standard222"] {
            let dec = builtin::by_name(name).unwrap();
            let (z2, _) = dec.reduce_mod(Ring::Z2).unwrap();
            let constraints = LiftConstraints::preserving_zeros(&z2);
            let report = hensel_lift(&z2, &constraints, 16).unwrap();
            let lifted = report.result.unwrap_or_else(|f| panic!("{name}: {f}"));
            assert!(lifted.verify().pass, "{name} round trip");
            assert!(lifted.max_abs_coeff() <= BigInt::from(1));
            // pinned zeros stayed zero: the mod-2 support is an upper bound
            for (t2, tl) in z2.terms().iter().zip(lifted.terms()) {
                for (f2, fl) in [(&t2.a, &tl.a), (&t2.b, &tl.b), (&t2.c, &tl.c)] {
                    for (e2, el) in f2.entries().iter().zip(fl.entries()) {
                        if num_traits::Zero::is_zero(e2) {
                            assert!(num_traits::Zero::is_zero(el), "{name}: pinned zero moved");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_term_scheme_is_unchanged() {
        let one = Decomposition::standard(crate::Shape::of(1, 1, 1), Ring::Z2);
        let report = hensel_lift(&one, &LiftConstraints::default(), 4).unwrap();
        let lifted = report.result.unwrap();
        assert_eq!(lifted.rank(), 1);
        assert!(lifted.verify().pass);
    }

    #[test]
    fn impossible_zero_constraint_reports_class() {
        let (z2, _) = builtin::strassen().reduce_mod(Ring::Z2).unwrap();
        // pinning a nonzero coefficient to zero is inconsistent at stage 0
        let mut constraints = LiftConstraints::preserving_zeros(&z2);
        let odd = z2
            .terms()
            .iter()
            .enumerate()
            .find_map(|(t, term)| {
                term.a
                    .entries()
                    .iter()
                    .position(|e| !num_traits::Zero::is_zero(e))
                    .map(|i| (t, Slot::A, i))
            })
            .unwrap();
        constraints.zeros.push(odd);
        let report = hensel_lift(&z2, &constraints, 8).unwrap();
        let failure = report
            .result
            .expect_err("cannot pin an odd coefficient to zero");
        assert_eq!(failure.class, FailedClass::Zero);
    }
}
