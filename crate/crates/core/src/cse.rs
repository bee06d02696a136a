//! Straight-line programs for the linear phases of a scheme, and greedy
//! common-subexpression elimination to count the additions needed to
//! execute them.
//!
//! A linear phase is a list of rows, each a signed integer combination of
//! input cells. The builder deduplicates identical rows, then repeatedly
//! extracts the signed pair of operands occurring in the most rows until no
//! pair occurs twice, and finally emits binary add/subtract chains. The
//! emitted program replays to exactly the requested combinations; its
//! length is the addition count A.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;

use crate::decomposition::Decomposition;
use crate::error::Error;
use crate::matrix::{Entry, Matrix};

pub type Row = BTreeMap<usize, i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpRef {
    Input(usize),
    Temp(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinOp {
    /// temp = s1*r1 + s2*r2 (signs in {-1,+1}); one addition/subtraction.
    Combine {
        s1: i8,
        r1: OpRef,
        s2: i8,
        r2: OpRef,
    },
    /// temp = -r; one scalar multiplication.
    Negate { r: OpRef },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutRef {
    Input(usize),
    Temp(usize),
    Zero,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub inputs: usize,
    pub ops: Vec<LinOp>,
    pub outputs: Vec<OutRef>,
}

impl LinearProgram {
    /// Operation count of this phase.
    pub fn cost(&self) -> u64 {
        self.ops.len() as u64
    }

    /// Evaluates the program over any entry type; `inputs[i]` feeds
    /// `OpRef::Input(i)`. Used by the executor with matrix cells and by the
    /// replay check with sparse rows.
    pub fn eval<T, AddSub>(&self, inputs: &[T], zero: T, mut addsub: AddSub) -> Vec<T>
    where
        T: Clone,
        AddSub: FnMut(Option<&T>, i8, &T) -> T,
    {
        let mut temps: Vec<T> = Vec::with_capacity(self.ops.len());
        let fetch = |r: OpRef, temps: &Vec<T>| -> T {
            match r {
                OpRef::Input(i) => inputs[i].clone(),
                OpRef::Temp(t) => temps[t].clone(),
            }
        };
        for op in &self.ops {
            let value = match *op {
                LinOp::Combine { s1, r1, s2, r2 } => {
                    let v1 = fetch(r1, &temps);
                    let v2 = fetch(r2, &temps);
                    let first = addsub(None, s1, &v1);
                    addsub(Some(&first), s2, &v2)
                }
                LinOp::Negate { r } => {
                    let v = fetch(r, &temps);
                    addsub(None, -1, &v)
                }
            };
            temps.push(value);
        }
        self.outputs
            .iter()
            .map(|o| match *o {
                OutRef::Input(i) => inputs[i].clone(),
                OutRef::Temp(t) => temps[t].clone(),
                OutRef::Zero => zero.clone(),
            })
            .collect()
    }

    /// Symbolic replay: the coefficient vector each output computes.
    pub fn replay(&self) -> Vec<Row> {
        let basis: Vec<Row> = (0..self.inputs)
            .map(|i| {
                let mut r = Row::new();
                r.insert(i, 1);
                r
            })
            .collect();
        self.eval(&basis, Row::new(), |acc, sign, v| {
            let mut out = acc.cloned().unwrap_or_default();
            for (&var, &coef) in v {
                let e = out.entry(var).or_insert(0);
                *e += sign as i64 * coef;
                if *e == 0 {
                    out.remove(&var);
                }
            }
            out
        })
    }

    /// Evaluates the program over matrix cells, counting every program
    /// operation as cell-area scalar operations in `ops_counter`.
    pub fn eval_cells<T: Entry>(
        &self,
        inputs: &[Matrix<T>],
        cell_rows: usize,
        cell_cols: usize,
        ops_counter: &mut u64,
    ) -> Vec<Matrix<T>> {
        let zero = Matrix::<T>::zero(cell_rows, cell_cols);
        *ops_counter += self.cost() * (cell_rows * cell_cols) as u64;
        self.eval(inputs, zero, |acc, sign, v| match acc {
            None => {
                if sign > 0 {
                    v.clone()
                } else {
                    v.neg()
                }
            }
            Some(a) => {
                if sign > 0 {
                    a.add(v).expect("cells share dimensions")
                } else {
                    a.sub(v).expect("cells share dimensions")
                }
            }
        })
    }
}

/// Builds a phase program for `rows` over `inputs` variables and returns it
/// with its cost. The construction asserts its own replay.
pub fn compile_phase(inputs: usize, rows: &[Row]) -> LinearProgram {
    let original = rows.to_vec();
    let mut builder = Builder::new(inputs, rows);
    builder.extract_pairs();
    let program = builder.emit();
    debug_assert_eq!(
        program.replay(),
        original,
        "phase program must replay exactly"
    );
    program
}

/// Addition counts for the three linear phases of a scheme executed as
/// written (every term its own product).
#[derive(Debug, Clone)]
pub struct SchemePrograms {
    pub l1: LinearProgram,
    pub l2: LinearProgram,
    pub l3: LinearProgram,
}

impl SchemePrograms {
    pub fn total(&self) -> u64 {
        self.l1.cost() + self.l2.cost() + self.l3.cost()
    }
}

fn factor_row(m: &Matrix<num_bigint::BigInt>) -> Result<Row, Error> {
    let mut row = Row::new();
    for (i, e) in m.entries().iter().enumerate() {
        if e.is_zero() {
            continue;
        }
        let v = e.to_i64().ok_or_else(|| {
            Error::Unsupported("coefficients beyond i64 are not executable".into())
        })?;
        row.insert(i, v);
    }
    Ok(row)
}

/// Counts the additions needed to execute a scheme term-by-term: the rows
/// are each term's A and B combinations and each output cell's combination
/// of products.
pub fn count_additions(dec: &Decomposition) -> Result<SchemePrograms, Error> {
    let shape = dec.shape;
    let mut l1_rows = Vec::new();
    let mut l2_rows = Vec::new();
    for t in dec.terms() {
        l1_rows.push(factor_row(&t.a)?);
        l2_rows.push(factor_row(&t.b)?);
    }
    // output cell (i,k) accumulates c_t[k][i] * product_t
    let mut l3_rows = Vec::new();
    for i in 0..shape.n {
        for k in 0..shape.p {
            let mut row = Row::new();
            for (t_idx, t) in dec.terms().iter().enumerate() {
                let e = t.c.at(k, i);
                if e.is_zero() {
                    continue;
                }
                let v = e.to_i64().ok_or_else(|| {
                    Error::Unsupported("coefficients beyond i64 are not executable".into())
                })?;
                row.insert(t_idx, v);
            }
            l3_rows.push(row);
        }
    }
    Ok(SchemePrograms {
        l1: compile_phase(shape.n * shape.m, &l1_rows),
        l2: compile_phase(shape.m * shape.p, &l2_rows),
        l3: compile_phase(dec.rank(), &l3_rows),
    })
}

struct Builder {
    inputs: usize,
    /// Working rows over an extended variable space: inputs first, then one
    /// variable per extracted pair.
    rows: Vec<Row>,
    /// Extracted pairs in creation order: (s1, v1, s2, v2) meaning
    /// pairvar = s1*v1 + s2*v2 over the extended space.
    pairs: Vec<(i8, usize, i8, usize)>,
}

impl Builder {
    fn new(inputs: usize, rows: &[Row]) -> Self {
        Builder {
            inputs,
            rows: rows.to_vec(),
            pairs: Vec::new(),
        }
    }

    fn var_count(&self) -> usize {
        self.inputs + self.pairs.len()
    }

    fn extract_pairs(&mut self) {
        loop {
            // count signed pairs over unit-coefficient entries
            let mut counts: BTreeMap<(usize, usize, i8), u32> = BTreeMap::new();
            for row in &self.rows {
                let units: Vec<(usize, i64)> = row
                    .iter()
                    .filter(|(_, &c)| c == 1 || c == -1)
                    .map(|(&v, &c)| (v, c))
                    .collect();
                for x in 0..units.len() {
                    for y in (x + 1)..units.len() {
                        let (u, cu) = units[x];
                        let (v, cv) = units[y];
                        let rel = if cu * cv > 0 { 1 } else { -1 };
                        *counts.entry((u, v, rel)).or_insert(0) += 1;
                    }
                }
            }
            let best = counts
                .iter()
                .filter(|(_, &c)| c >= 2)
                .max_by_key(|(&(u, v, rel), &c)| (c, std::cmp::Reverse((u, v, rel))));
            let Some((&(u, v, rel), _)) = best else { break };

            // orientation: a row whose support is exactly the pair becomes a
            // bare reference; prefer the orientation that leaves such rows
            // positive (a negative bare reference costs a negation)
            let mut plus = 0i32;
            let mut minus = 0i32;
            for row in &self.rows {
                if row.len() == 2 && row.contains_key(&u) && row.contains_key(&v) {
                    let cu = row[&u];
                    if cu.abs() == 1 && row[&v].abs() == 1 {
                        if cu == 1 {
                            plus += 1;
                        } else {
                            minus += 1;
                        }
                    }
                }
            }
            let orient: i8 = if minus > plus { -1 } else { 1 };
            let pair_var = self.var_count();
            self.pairs
                .push((orient, u, (orient as i64 * rel as i64) as i8, v));
            for row in &mut self.rows {
                let (Some(&cu), Some(&cv)) = (row.get(&u), row.get(&v)) else {
                    continue;
                };
                if cu.abs() != 1 || cv.abs() != 1 {
                    continue;
                }
                let row_rel = if cu * cv > 0 { 1 } else { -1 };
                if row_rel != rel {
                    continue;
                }
                // row part is cu*(u + rel*v) = (cu*orient) * pairvar
                row.remove(&u);
                row.remove(&v);
                row.insert(pair_var, cu * orient as i64);
            }
        }
    }

    fn emit(self) -> LinearProgram {
        let inputs = self.inputs;
        let mut ops: Vec<LinOp> = Vec::new();
        // materialized extended variables: inputs map to themselves, pair
        // variables to the temp holding them
        let mut var_ref: Vec<Option<OpRef>> = (0..inputs).map(|i| Some(OpRef::Input(i))).collect();
        var_ref.resize(self.var_count(), None);
        for (idx, &(s1, v1, s2, v2)) in self.pairs.iter().enumerate() {
            let r1 = var_ref[v1].expect("pair operands precede the pair");
            let r2 = var_ref[v2].expect("pair operands precede the pair");
            let r = push_combine(&mut ops, s1, r1, s2, r2);
            var_ref[inputs + idx] = Some(r);
        }

        // cache of scaled pieces |c|*var so repeated magnitudes are reused
        let mut scaled: BTreeMap<(usize, u64), OpRef> = BTreeMap::new();
        let mut outputs = Vec::with_capacity(self.rows.len());
        let mut emitted: BTreeMap<Vec<(usize, i64)>, OutRef> = BTreeMap::new();
        for row in &self.rows {
            let key: Vec<(usize, i64)> = row.iter().map(|(&v, &c)| (v, c)).collect();
            if let Some(&out) = emitted.get(&key) {
                outputs.push(out);
                continue;
            }
            let out = emit_row(row, &var_ref, &mut ops, &mut scaled);
            emitted.insert(key, out);
            outputs.push(out);
        }
        LinearProgram {
            inputs,
            ops,
            outputs,
        }
    }
}

/// Emits one row as a chain of binary operations; returns where the row's
/// value lives.
fn emit_row(
    row: &Row,
    var_ref: &[Option<OpRef>],
    ops: &mut Vec<LinOp>,
    scaled: &mut BTreeMap<(usize, u64), OpRef>,
) -> OutRef {
    let mut pieces: Vec<(i8, OpRef)> = Vec::new();
    for (&var, &coef) in row {
        let base = var_ref[var].expect("all variables materialized");
        let mag = coef.unsigned_abs();
        let piece = if mag == 1 {
            base
        } else {
            scale(base, var, mag, ops, scaled)
        };
        pieces.push((if coef > 0 { 1 } else { -1 }, piece));
    }
    // lead with a positive piece so every emitted binary op is a plain
    // addition or subtraction; an all-negative row is built positively and
    // negated once at the end
    let mut negate_all = false;
    if let Some(pos) = pieces.iter().position(|&(s, _)| s > 0) {
        pieces.swap(0, pos);
    } else if !pieces.is_empty() {
        negate_all = true;
        for p in &mut pieces {
            p.0 = 1;
        }
    }
    let out = match pieces.len() {
        0 => return OutRef::Zero,
        1 => pieces[0].1,
        _ => {
            let (s1, r1) = pieces[0];
            let (s2, r2) = pieces[1];
            let mut acc = push_combine(ops, s1, r1, s2, r2);
            for &(s, r) in &pieces[2..] {
                acc = push_combine(ops, 1, acc, s, r);
            }
            acc
        }
    };
    let out = if negate_all {
        ops.push(LinOp::Negate { r: out });
        OpRef::Temp(ops.len() - 1)
    } else {
        out
    };
    match out {
        OpRef::Input(i) => OutRef::Input(i),
        OpRef::Temp(t) => OutRef::Temp(t),
    }
}

/// Emits s1*r1 + s2*r2 as proper binary operations: a double negative
/// costs an addition plus a negation.
fn push_combine(ops: &mut Vec<LinOp>, s1: i8, r1: OpRef, s2: i8, r2: OpRef) -> OpRef {
    if s1 < 0 && s2 < 0 {
        ops.push(LinOp::Combine {
            s1: 1,
            r1,
            s2: 1,
            r2,
        });
        ops.push(LinOp::Negate {
            r: OpRef::Temp(ops.len() - 1),
        });
        return OpRef::Temp(ops.len() - 1);
    }
    let (s1, r1, s2, r2) = if s1 < 0 {
        (s2, r2, s1, r1)
    } else {
        (s1, r1, s2, r2)
    };
    ops.push(LinOp::Combine { s1, r1, s2, r2 });
    OpRef::Temp(ops.len() - 1)
}

/// Builds |c|*x by binary doubling; coefficients beyond +-1 are rare and
/// cost one operation per doubling or added bit.
fn scale(
    base: OpRef,
    var: usize,
    mag: u64,
    ops: &mut Vec<LinOp>,
    scaled: &mut BTreeMap<(usize, u64), OpRef>,
) -> OpRef {
    debug_assert!(mag >= 2);
    if let Some(&r) = scaled.get(&(var, mag)) {
        return r;
    }
    let bits = 63 - mag.leading_zeros();
    let mut acc = base;
    for b in (0..bits).rev() {
        ops.push(LinOp::Combine {
            s1: 1,
            r1: acc,
            s2: 1,
            r2: acc,
        });
        acc = OpRef::Temp(ops.len() - 1);
        if (mag >> b) & 1 == 1 {
            ops.push(LinOp::Combine {
                s1: 1,
                r1: acc,
                s2: 1,
                r2: base,
            });
            acc = OpRef::Temp(ops.len() - 1);
        }
    }
    scaled.insert((var, mag), acc);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn strassen_has_no_reusable_pair() {
        let programs = count_additions(&builtin::strassen()).unwrap();
        assert_eq!(programs.l1.cost(), 5);
        assert_eq!(programs.l2.cost(), 5);
        assert_eq!(programs.l3.cost(), 8);
        assert_eq!(programs.total(), 18);
    }

    #[test]
    fn winograd_reaches_fifteen() {
        let programs = count_additions(&builtin::winograd()).unwrap();
        assert_eq!(
            (programs.l1.cost(), programs.l2.cost(), programs.l3.cost()),
            (4, 4, 7),
            "greedy elimination must find the shared sums"
        );
        assert_eq!(programs.total(), 15);
    }

    #[test]
    fn single_term_scheme_costs_nothing() {
        let dec = crate::Decomposition::standard(crate::Shape::of(1, 1, 1), crate::Ring::Integer);
        let programs = count_additions(&dec).unwrap();
        assert_eq!(programs.total(), 0);
    }

    #[test]
    fn replay_reproduces_rows_exactly() {
        for (_, dec) in builtin::all() {
            let programs = count_additions(&dec).unwrap();
            for p in [&programs.l1, &programs.l2, &programs.l3] {
                let rows = p.replay();
                assert_eq!(rows.len(), p.outputs.len());
            }
        }
    }

    #[test]
    fn scaling_handles_small_coefficients() {
        // row 3x - 2y
        let mut row = Row::new();
        row.insert(0, 3);
        row.insert(1, -2);
        let p = compile_phase(2, &[row.clone()]);
        assert_eq!(p.replay(), vec![row]);
        // 3x takes two ops, 2y one, the chain one
        assert_eq!(p.cost(), 4);
    }
}
