//! Exact recursive matrix multiplication driven by compiled plans, with
//! zero padding, threshold fallback, per-depth cyclic alternation, and
//! square splitting for stalling rectangular calls. Every scalar operation
//! is counted, which couples the executor to the simulator's model.

use crate::error::Error;
use crate::matrix::{Entry, Matrix};
use crate::plan::ExecutionPlan;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub mults: u128,
    pub adds: u128,
}

impl OpCounts {
    pub fn total(&self) -> u128 {
        self.mults + self.adds
    }
}

#[derive(Debug, Clone)]
pub enum Level {
    Standard,
    Plan(ExecutionPlan),
}

/// Algorithm stack with size cutovers: the level with the largest cutover
/// at or below min(N,M,P) runs. The lowest level must be the standard
/// algorithm at cutover 1.
#[derive(Debug, Clone)]
pub struct Schedule {
    levels: Vec<(usize, Level)>,
}

impl Schedule {
    pub fn new(mut levels: Vec<(usize, Level)>) -> Result<Self, Error> {
        levels.sort_by(|a, b| b.0.cmp(&a.0));
        for w in levels.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Structural(
                    "schedule cutovers must be distinct".into(),
                ));
            }
        }
        match levels.last() {
            Some(&(1, Level::Standard)) => {}
            _ => {
                return Err(Error::Structural(
                    "schedule must end with the standard algorithm at cutover 1".into(),
                ))
            }
        }
        Ok(Schedule { levels })
    }

    /// Plan above the threshold, standard at or below it.
    pub fn single_plan(plan: ExecutionPlan, threshold: usize) -> Result<Self, Error> {
        Schedule::new(vec![
            (threshold + 1, Level::Plan(plan)),
            (1, Level::Standard),
        ])
    }

    pub fn standard_only() -> Self {
        Schedule {
            levels: vec![(1, Level::Standard)],
        }
    }

    pub fn levels(&self) -> &[(usize, Level)] {
        &self.levels
    }

    pub fn pick(&self, min_dim: usize) -> &Level {
        for (cutover, level) in &self.levels {
            if min_dim >= *cutover {
                return level;
            }
        }
        &self.levels.last().expect("schedule is never empty").1
    }
}

/// Naive triple-loop product with exact counting: N*M*P multiplications
/// and N*P*(M-1) additions.
pub fn standard_multiply<T: Entry>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    counts: &mut OpCounts,
) -> Result<Matrix<T>, Error> {
    if a.cols != b.rows {
        return Err(Error::Structural(format!(
            "inner dimension mismatch: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    counts.mults += (a.rows * a.cols * b.cols) as u128;
    counts.adds += (a.rows * b.cols) as u128 * (a.cols - 1) as u128;
    a.mul(b)
}

/// Multiplies via a single plan with the standard algorithm at or below
/// `threshold`.
pub fn multiply<T: Entry>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    plan: &ExecutionPlan,
    threshold: Option<usize>,
) -> Result<(Matrix<T>, OpCounts), Error> {
    let schedule = Schedule::single_plan(plan.clone(), threshold.unwrap_or(plan.threshold))?;
    run(a, b, &schedule)
}

/// Multiplies under a full schedule, returning the product and the exact
/// operation counts.
pub fn run<T: Entry>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    schedule: &Schedule,
) -> Result<(Matrix<T>, OpCounts), Error> {
    if a.cols != b.rows {
        return Err(Error::Structural(format!(
            "inner dimension mismatch: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut counts = OpCounts::default();
    let out = mul_rec(a, b, schedule, 0, &mut counts);
    Ok((out, counts))
}

fn mul_rec<T: Entry>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    schedule: &Schedule,
    phase: usize,
    counts: &mut OpCounts,
) -> Matrix<T> {
    let (n_dim, m_dim, p_dim) = (a.rows, a.cols, b.cols);
    let min = n_dim.min(m_dim).min(p_dim);
    let plan = match schedule.pick(min) {
        Level::Standard => {
            return standard_multiply(a, b, counts).expect("dimensions checked by caller")
        }
        Level::Plan(plan) => plan,
    };
    // The rotation phase advances through non-singleton blocks only:
    // singleton sub-calls preserve their parent's aspect, so they stay on
    // the image that matches it, while each grouped block moves one step
    // around the cycle and lands square after a full turn. Calls that have
    // still drifted to aspect two or beyond at a phase boundary are split
    // into cubes of their smallest side, realigning every path; thin
    // remainder chunks fall through the threshold to the standard
    // algorithm.
    let max = n_dim.max(m_dim).max(p_dim);
    if phase % 3 == 0 && max >= 2 * min {
        return square_split(a, b, schedule, phase, counts);
    }
    let img = &plan.images[phase % 3];
    let (n, m, p) = (img.base.n, img.base.m, img.base.p);
    // cell sizes after padding up to multiples of the base
    let cr = n_dim.div_ceil(n);
    let cs = m_dim.div_ceil(m);
    let cc = p_dim.div_ceil(p);

    let a_cells: Vec<Matrix<T>> = (0..n * m)
        .map(|x| padded_cell(a, x / m, x % m, cr, cs))
        .collect();
    let b_cells: Vec<Matrix<T>> = (0..m * p)
        .map(|y| padded_cell(b, y / p, y % p, cs, cc))
        .collect();
    let mut phase_ops = 0u64;
    let a_parts = img.l1.eval_cells(&a_cells, cr, cs, &mut phase_ops);
    let b_parts = img.l2.eval_cells(&b_cells, cs, cc, &mut phase_ops);

    let mut z_slices: Vec<Matrix<T>> = Vec::with_capacity(img.z_count);
    for block in &img.blocks {
        let s = block.shape;
        let x = assemble(
            &a_parts[block.a_base..block.a_base + s.n * s.m],
            s.n,
            s.m,
            cr,
            cs,
        );
        let y = assemble(
            &b_parts[block.b_base..block.b_base + s.m * s.p],
            s.m,
            s.p,
            cs,
            cc,
        );
        let child_phase = if s.volume() == 1 { phase } else { phase + 1 };
        let z = mul_rec(&x, &y, schedule, child_phase, counts);
        for r in 0..s.n {
            for c in 0..s.p {
                z_slices.push(z.submatrix(r * cr, c * cc, cr, cc));
            }
        }
    }

    let out_cells = img.l3.eval_cells(&z_slices, cr, cc, &mut phase_ops);
    counts.adds += phase_ops as u128;
    let full = assemble(&out_cells, n, p, cr, cc);
    full.submatrix(0, 0, n_dim, p_dim)
}

fn padded_cell<T: Entry>(
    src: &Matrix<T>,
    grid_r: usize,
    grid_c: usize,
    cell_rows: usize,
    cell_cols: usize,
) -> Matrix<T> {
    let mut out = Matrix::zero(cell_rows, cell_cols);
    let r0 = grid_r * cell_rows;
    let c0 = grid_c * cell_cols;
    for r in 0..cell_rows.min(src.rows.saturating_sub(r0)) {
        for c in 0..cell_cols.min(src.cols.saturating_sub(c0)) {
            *out.at_mut(r, c) = src.at(r0 + r, c0 + c).clone();
        }
    }
    out
}

fn assemble<T: Entry>(
    cells: &[Matrix<T>],
    grid_rows: usize,
    grid_cols: usize,
    cell_rows: usize,
    cell_cols: usize,
) -> Matrix<T> {
    let mut out = Matrix::zero(grid_rows * cell_rows, grid_cols * cell_cols);
    for gr in 0..grid_rows {
        for gc in 0..grid_cols {
            let cell = &cells[gr * grid_cols + gc];
            for r in 0..cell_rows {
                for c in 0..cell_cols {
                    *out.at_mut(gr * cell_rows + r, gc * cell_cols + c) = cell.at(r, c).clone();
                }
            }
        }
    }
    out
}

/// Splits a too-rectangular product into square chunks of the minimum
/// dimension, multiplied recursively, plus standard-algorithm remainders.
fn square_split<T: Entry>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    schedule: &Schedule,
    phase: usize,
    counts: &mut OpCounts,
) -> Matrix<T> {
    let (n_dim, m_dim, p_dim) = (a.rows, a.cols, b.cols);
    let d = n_dim.min(m_dim).min(p_dim);
    let chunks = |len: usize| {
        let mut v: Vec<(usize, usize)> = (0..len / d).map(|i| (i * d, d)).collect();
        if len % d != 0 {
            v.push((len / d * d, len % d));
        }
        v
    };
    let rows = chunks(n_dim);
    let inners = chunks(m_dim);
    let cols = chunks(p_dim);
    let mut out: Matrix<T> = Matrix::zero(n_dim, p_dim);
    for &(r0, rl) in &rows {
        for &(c0, cl) in &cols {
            let mut first = true;
            for &(i0, il) in &inners {
                let asub = a.submatrix(r0, i0, rl, il);
                let bsub = b.submatrix(i0, c0, il, cl);
                let prod = mul_rec(&asub, &bsub, schedule, phase, counts);
                if first {
                    for r in 0..rl {
                        for c in 0..cl {
                            *out.at_mut(r0 + r, c0 + c) = prod.at(r, c).clone();
                        }
                    }
                    first = false;
                } else {
                    counts.adds += (rl * cl) as u128;
                    for r in 0..rl {
                        for c in 0..cl {
                            let cur = out.at(r0 + r, c0 + c).clone();
                            *out.at_mut(r0 + r, c0 + c) = cur.add(prod.at(r, c));
                        }
                    }
                }
            }
        }
    }
    out
}
