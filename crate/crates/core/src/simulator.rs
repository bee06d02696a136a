//! Deterministic operation-count model of the recursive multiplier.
//!
//! The recursion here mirrors the executor structurally: same padding,
//! same threshold selection, same depth-based alternation, same square
//! splitting. Plan-backed levels charge the compiled phase programs' exact
//! costs, so instrumented executor runs and simulated runs agree to the
//! operation. Declared levels (no decomposition available) charge the
//! declared addition count scaled by the largest operand grid area.
//! Recursion is over shapes only and memoized, so sizes up to 10^12
//! simulate in microseconds.

use std::collections::HashMap;

use crate::error::Error;
use crate::plan::ExecutionPlan;
use crate::shape::Shape;
use crate::structure::StructuredRestriction;

#[derive(Debug, Clone)]
pub enum SimLevel {
    Standard,
    /// Exact per-phase counts from a compiled plan.
    Plan(Box<ExecutionPlan>),
    /// Census-only restriction with a declared addition count.
    Declared {
        restriction: StructuredRestriction,
        additions: u64,
    },
}

#[derive(Debug, Clone)]
pub struct SimProfile {
    pub name: String,
    levels: Vec<(u64, SimLevel)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub n: u64,
    pub m: u64,
    pub p: u64,
    pub mults: u128,
    pub adds: u128,
}

impl CostReport {
    pub fn total(&self) -> u128 {
        self.mults + self.adds
    }
}

impl SimProfile {
    pub fn new(name: impl Into<String>, mut levels: Vec<(u64, SimLevel)>) -> Result<Self, Error> {
        levels.sort_by(|a, b| b.0.cmp(&a.0));
        for w in levels.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Structural(
                    "profile cutovers must be distinct".into(),
                ));
            }
        }
        match levels.last() {
            Some(&(1, SimLevel::Standard)) => {}
            _ => {
                return Err(Error::Structural(
                    "profile must end with the standard algorithm at cutover 1".into(),
                ))
            }
        }
        Ok(SimProfile {
            name: name.into(),
            levels,
        })
    }

    pub fn standard() -> Self {
        SimProfile {
            name: "standard".into(),
            levels: vec![(1, SimLevel::Standard)],
        }
    }

    pub fn plan_over_standard(
        name: impl Into<String>,
        plan: ExecutionPlan,
        cutover: u64,
    ) -> Result<Self, Error> {
        SimProfile::new(
            name,
            vec![
                (cutover, SimLevel::Plan(Box::new(plan))),
                (1, SimLevel::Standard),
            ],
        )
    }

    pub fn levels(&self) -> &[(u64, SimLevel)] {
        &self.levels
    }

    fn pick(&self, min_dim: u64) -> &SimLevel {
        for (cutover, level) in &self.levels {
            if min_dim >= *cutover {
                return level;
            }
        }
        &self.levels.last().expect("profile is never empty").1
    }
}

type Memo = HashMap<(u64, u64, u64, u8), (u128, u128)>;

/// Exact operation count of a (possibly rectangular) N x M x P run.
pub fn simulate(n: u64, m: u64, p: u64, profile: &SimProfile) -> CostReport {
    let mut memo = Memo::new();
    let (mults, adds) = cost(n, m, p, 0, profile, &mut memo);
    CostReport {
        n,
        m,
        p,
        mults,
        adds,
    }
}

fn standard_cost(n: u64, m: u64, p: u64) -> (u128, u128) {
    (
        n as u128 * m as u128 * p as u128,
        n as u128 * p as u128 * (m as u128 - 1),
    )
}

fn cost(
    n: u64,
    m: u64,
    p: u64,
    phase: usize,
    profile: &SimProfile,
    memo: &mut Memo,
) -> (u128, u128) {
    let key = (n, m, p, (phase % 3) as u8);
    if let Some(&hit) = memo.get(&key) {
        return hit;
    }
    let min = n.min(m).min(p);
    let max = n.max(m).max(p);
    let out = match profile.pick(min) {
        SimLevel::Standard => standard_cost(n, m, p),
        SimLevel::Plan(plan) => {
            if phase % 3 == 0 && max >= 2 * min {
                split_cost(n, m, p, phase, profile, memo)
            } else {
                let img = &plan.images[phase % 3];
                let (bn, bm, bp) = (img.base.n as u64, img.base.m as u64, img.base.p as u64);
                let cr = n.div_ceil(bn);
                let cs = m.div_ceil(bm);
                let cc = p.div_ceil(bp);
                let mut mults = 0u128;
                let mut adds = img.l1.cost() as u128 * cr as u128 * cs as u128
                    + img.l2.cost() as u128 * cs as u128 * cc as u128
                    + img.l3.cost() as u128 * cr as u128 * cc as u128;
                for block in &img.blocks {
                    let s = block.shape;
                    let child_phase = if s.volume() == 1 { phase } else { phase + 1 };
                    let (cm, ca) = cost(
                        s.n as u64 * cr,
                        s.m as u64 * cs,
                        s.p as u64 * cc,
                        child_phase,
                        profile,
                        memo,
                    );
                    mults += cm;
                    adds += ca;
                }
                (mults, adds)
            }
        }
        SimLevel::Declared {
            restriction,
            additions,
        } => {
            if phase % 3 == 0 && max >= 2 * min {
                split_cost(n, m, p, phase, profile, memo)
            } else {
                let base = cycled_shape(restriction.base, phase);
                let (bn, bm, bp) = (base.n as u64, base.m as u64, base.p as u64);
                let cr = n.div_ceil(bn);
                let cs = m.div_ceil(bm);
                let cc = p.div_ceil(bp);
                let grid_max = (cr as u128 * cs as u128)
                    .max(cs as u128 * cc as u128)
                    .max(cr as u128 * cc as u128);
                let mut mults = 0u128;
                let mut adds = *additions as u128 * grid_max;
                for (shape, mult) in restriction.all_blocks() {
                    let s = cycled_shape(shape, phase);
                    let child_phase = if s.volume() == 1 { phase } else { phase + 1 };
                    let (cm, ca) = cost(
                        s.n as u64 * cr,
                        s.m as u64 * cs,
                        s.p as u64 * cc,
                        child_phase,
                        profile,
                        memo,
                    );
                    mults += mult as u128 * cm;
                    adds += mult as u128 * ca;
                }
                (mults, adds)
            }
        }
    };
    memo.insert(key, out);
    out
}

fn cycled_shape(s: Shape, phase: usize) -> Shape {
    match phase % 3 {
        0 => s,
        1 => s.cycled(),
        _ => s.cycled().cycled(),
    }
}

/// Grouped mirror of the executor's square splitting: full D-cubes recurse
/// at the same depth, remainder slivers run the standard algorithm, and
/// partial products beyond the first are accumulated with one addition per
/// output entry.
fn split_cost(
    n: u64,
    m: u64,
    p: u64,
    phase: usize,
    profile: &SimProfile,
    memo: &mut Memo,
) -> (u128, u128) {
    let d = n.min(m).min(p);
    let chunks = |len: u64| {
        let mut v: Vec<(u64, u64)> = vec![(d, len / d)];
        if len % d != 0 {
            v.push((len % d, 1));
        }
        v
    };
    let rows = chunks(n);
    let inners = chunks(m);
    let cols = chunks(p);
    let num_inner: u64 = inners.iter().map(|&(_, c)| c).sum();
    let mut mults = 0u128;
    let mut adds = 0u128;
    for &(dr, cntr) in &rows {
        if cntr == 0 {
            continue;
        }
        for &(dc, cntc) in &cols {
            if cntc == 0 {
                continue;
            }
            for &(di, cnti) in &inners {
                if cnti == 0 {
                    continue;
                }
                let (cm, ca) = cost(dr, di, dc, phase, profile, memo);
                let count = (cntr * cntc * cnti) as u128;
                mults += count * cm;
                adds += count * ca;
            }
            // accumulating the partial products of each output region
            adds += cntr as u128 * cntc as u128 * (num_inner as u128 - 1) * dr as u128 * dc as u128;
        }
    }
    (mults, adds)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub n: u64,
    pub profile: String,
    pub mults: u128,
    pub adds: u128,
    pub total: u128,
    pub normalized: f64,
}

/// Log-spaced grid of square sizes.
pub fn sweep_grid(n_min: u64, n_max: u64, points_per_decade: u32) -> Vec<u64> {
    let mut out = Vec::new();
    let lo = (n_min as f64).log10();
    let hi = (n_max as f64).log10();
    let steps = ((hi - lo) * points_per_decade as f64).ceil() as u64;
    for i in 0..=steps {
        let x = lo + (hi - lo) * i as f64 / steps.max(1) as f64;
        let n = 10f64.powf(x).round() as u64;
        if n >= n_min.max(1) && Some(&n) != out.last() {
            out.push(n);
        }
    }
    out
}

/// Simulates every profile over the grid; `normalized` is total / N^omega.
pub fn sweep(
    profiles: &[SimProfile],
    n_min: u64,
    n_max: u64,
    points_per_decade: u32,
    omega_ref: f64,
) -> Vec<SweepPoint> {
    let grid = sweep_grid(n_min, n_max, points_per_decade);
    let mut out = Vec::new();
    for n in grid {
        for profile in profiles {
            let report = simulate(n, n, n, profile);
            let normalized = report.total() as f64 / (n as f64).powf(omega_ref);
            out.push(SweepPoint {
                n,
                profile: profile.name.clone(),
                mults: report.mults,
                adds: report.adds,
                total: report.total(),
                normalized,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossoverReport {
    /// First grid size where the first profile's total drops below the
    /// second's, if any.
    pub first_win: Option<u64>,
    /// Whether the first profile stays ahead from `first_win` to the end
    /// of the grid.
    pub persists: bool,
    /// First grid size from which the first profile wins at every later
    /// grid point; padding makes wins near the crossover scatter, so this
    /// is where dominance becomes consistent.
    pub persistent_from: Option<u64>,
}

pub fn crossover_search(
    a: &SimProfile,
    b: &SimProfile,
    n_min: u64,
    n_max: u64,
    points_per_decade: u32,
) -> CrossoverReport {
    let grid = sweep_grid(n_min, n_max, points_per_decade);
    let mut first_win = None;
    let mut persists = true;
    let mut persistent_from = None;
    for &n in &grid {
        let ta = simulate(n, n, n, a).total();
        let tb = simulate(n, n, n, b).total();
        if ta < tb {
            if first_win.is_none() {
                first_win = Some(n);
            }
            if persistent_from.is_none() {
                persistent_from = Some(n);
            }
        } else {
            if first_win.is_some() {
                persists = false;
            }
            persistent_from = None;
        }
    }
    CrossoverReport {
        first_win,
        persists,
        persistent_from,
    }
}
