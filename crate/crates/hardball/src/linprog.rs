//! A small dense linear-programming solver.
//!
//! The certificate problems are tiny (a handful of rows, at most a few dozen
//! columns), so this is a plain two-phase tableau simplex. Bland's rule makes
//! pivoting deterministic and cycle-free; an iteration cap of `10 * (rows +
//! cols)` per phase turns any remaining numerical misbehavior into a hard
//! error instead of a hang.

use thiserror::Error;

/// Pivot elements and reduced costs below this magnitude count as zero.
const PIVOT_TOL: f64 = 1e-11;
/// Phase-1 objective above this (scaled by the largest right-hand side)
/// means the constraints are infeasible.
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex iteration cap exceeded ({0} pivots)")]
    IterationCap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row relation in a constraint `a . x REL b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
struct RowSpec {
    coeffs: Vec<f64>,
    rel: Rel,
    rhs: f64,
}

/// A linear program over variables that are either nonnegative (default) or
/// free. Internally free variables are split and all rows are brought to
/// equality standard form.
#[derive(Debug, Clone)]
pub struct Problem {
    sense: Sense,
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<RowSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

impl Problem {
    /// A problem optimizing `objective . x`; all variables start nonnegative.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Problem {
            sense,
            objective,
            free: vec![false; n],
            rows: Vec::new(),
        }
    }

    /// Mark variable `i` as free (unrestricted in sign).
    pub fn free_var(&mut self, i: usize) {
        self.free[i] = true;
    }

    /// Add the constraint `coeffs . x REL rhs`.
    pub fn row(&mut self, coeffs: Vec<f64>, rel: Rel, rhs: f64) {
        assert_eq!(coeffs.len(), self.objective.len(), "row length mismatch");
        self.rows.push(RowSpec { coeffs, rel, rhs });
    }

    pub fn solve(&self) -> Result<Outcome, LpError> {
        let n_orig = self.objective.len();
        let m = self.rows.len();

        // Column layout: originals, then negative parts of free variables,
        // then one slack/surplus column per inequality row.
        let neg_col: Vec<Option<usize>> = {
            let mut next = n_orig;
            self.free
                .iter()
                .map(|&f| {
                    f.then(|| {
                        let c = next;
                        next += 1;
                        c
                    })
                })
                .collect()
        };
        let n_free = neg_col.iter().flatten().count();
        let n_slack = self.rows.iter().filter(|r| r.rel != Rel::Eq).count();
        let n_real = n_orig + n_free + n_slack;

        // Standard-form cost, minimizing.
        let mut cost = vec![0.0; n_real];
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        for i in 0..n_orig {
            cost[i] = sign * self.objective[i];
            if let Some(c) = neg_col[i] {
                cost[c] = -sign * self.objective[i];
            }
        }

        // Equality rows [coeffs | rhs], then flip rows with negative rhs.
        let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut slack_at = n_orig + n_free;
        for r in &self.rows {
            let mut row = vec![0.0; n_real + 1];
            for i in 0..n_orig {
                row[i] = r.coeffs[i];
                if let Some(c) = neg_col[i] {
                    row[c] = -r.coeffs[i];
                }
            }
            match r.rel {
                Rel::Le => {
                    row[slack_at] = 1.0;
                    slack_at += 1;
                }
                Rel::Ge => {
                    row[slack_at] = -1.0;
                    slack_at += 1;
                }
                Rel::Eq => {}
            }
            row[n_real] = r.rhs;
            if r.rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            tableau.push(row);
        }

        match two_phase(tableau, cost, n_real)? {
            StdOutcome::Infeasible => Ok(Outcome::Infeasible),
            StdOutcome::Unbounded => Ok(Outcome::Unbounded),
            StdOutcome::Optimal(x_std) => {
                let x: Vec<f64> = (0..n_orig)
                    .map(|i| x_std[i] - neg_col[i].map_or(0.0, |c| x_std[c]))
                    .collect();
                let objective = self
                    .objective
                    .iter()
                    .zip(&x)
                    .map(|(c, v)| c * v)
                    .sum();
                Ok(Outcome::Optimal(Solution { x, objective }))
            }
        }
    }
}

enum StdOutcome {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Solve `min cost . x` s.t. `tableau`-rows `= rhs`, `x >= 0` (rhs already
/// nonnegative). Phase 1 minimizes artificial variables; phase 2 the real
/// objective.
fn two_phase(
    mut tableau: Vec<Vec<f64>>,
    cost: Vec<f64>,
    n_real: usize,
) -> Result<StdOutcome, LpError> {
    let m = tableau.len();
    let rhs_scale = tableau
        .iter()
        .map(|r| r[n_real].abs())
        .fold(1.0f64, f64::max);

    // Phase 1: widen each row with an artificial identity column.
    let n_full = n_real + m;
    let mut basis: Vec<usize> = (n_real..n_full).collect();
    for (i, row) in tableau.iter_mut().enumerate() {
        let rhs = row.pop().unwrap();
        row.resize(n_full, 0.0);
        row[n_real + i] = 1.0;
        row.push(rhs);
    }
    // Reduced-cost row for sum-of-artificials, already priced out.
    let mut cost_row = vec![0.0; n_full + 1];
    for j in n_real..n_full {
        cost_row[j] = 1.0;
    }
    for i in 0..m {
        let row = tableau[i].clone();
        for (c, v) in cost_row.iter_mut().zip(&row) {
            *c -= v;
        }
    }
    if simplex(&mut tableau, &mut cost_row, &mut basis, n_full)? == End::Unbounded {
        unreachable!("phase-1 objective is bounded below by zero");
    }
    let phase1 = -cost_row[n_full];
    if phase1 > FEAS_TOL * rhs_scale {
        return Ok(StdOutcome::Infeasible);
    }

    // Pivot leftover artificials out of the basis; an all-zero row is a
    // redundant constraint and is dropped.
    let mut keep = vec![true; m];
    for i in 0..m {
        if basis[i] < n_real {
            continue;
        }
        match (0..n_real).find(|&j| tableau[i][j].abs() > PIVOT_TOL) {
            Some(j) => pivot(&mut tableau, &mut cost_row, i, j, {
                basis[i] = j;
                n_full
            }),
            None => keep[i] = false,
        }
    }
    let mut tableau: Vec<Vec<f64>> = tableau
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(row, _)| {
            let mut short: Vec<f64> = row[..n_real].to_vec();
            short.push(row[n_full]);
            short
        })
        .collect();
    let mut basis: Vec<usize> = basis
        .into_iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(b, _)| b)
        .collect();

    // Phase 2: price out the real objective and optimize.
    let mut cost_row = cost.clone();
    cost_row.push(0.0);
    for (i, &b) in basis.iter().enumerate() {
        let factor = cost_row[b];
        if factor != 0.0 {
            let row = tableau[i].clone();
            for (c, v) in cost_row.iter_mut().zip(&row) {
                *c -= factor * v;
            }
        }
    }
    match simplex(&mut tableau, &mut cost_row, &mut basis, n_real)? {
        End::Unbounded => Ok(StdOutcome::Unbounded),
        End::Optimal => {
            let mut x = vec![0.0; n_real];
            for (i, &b) in basis.iter().enumerate() {
                x[b] = tableau[i][n_real];
            }
            Ok(StdOutcome::Optimal(x))
        }
    }
}

#[derive(PartialEq)]
enum End {
    Optimal,
    Unbounded,
}

/// One simplex run with Bland's rule: entering column is the lowest index
/// with negative reduced cost, leaving row breaks ratio ties by lowest basis
/// index.
fn simplex(
    tableau: &mut [Vec<f64>],
    cost_row: &mut [f64],
    basis: &mut [usize],
    ncols: usize,
) -> Result<End, LpError> {
    let cap = 10 * (tableau.len() + ncols);
    for _ in 0..cap {
        let Some(enter) = (0..ncols).find(|&j| cost_row[j] < -PIVOT_TOL) else {
            return Ok(End::Optimal);
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in tableau.iter().enumerate() {
            if row[enter] > PIVOT_TOL {
                let ratio = row[ncols] / row[enter];
                let better = match leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < lr - PIVOT_TOL
                            || (ratio < lr + PIVOT_TOL && basis[i] < basis[li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((leave, _)) = leave else {
            return Ok(End::Unbounded);
        };
        basis[leave] = enter;
        pivot(tableau, cost_row, leave, enter, ncols);
    }
    Err(LpError::IterationCap(cap))
}

fn pivot(tableau: &mut [Vec<f64>], cost_row: &mut [f64], r: usize, c: usize, ncols: usize) {
    let p = tableau[r][c];
    for v in tableau[r].iter_mut() {
        *v /= p;
    }
    tableau[r][c] = 1.0; // exact after normalization
    let prow = tableau[r].clone();
    for (i, row) in tableau.iter_mut().enumerate() {
        if i != r && row[c].abs() > 0.0 {
            let f = row[c];
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[c] = 0.0;
        }
    }
    let f = cost_row[c];
    if f != 0.0 {
        for (v, pv) in cost_row.iter_mut().zip(&prow) {
            *v -= f * pv;
        }
        cost_row[c] = 0.0;
    }
    let _ = ncols;
}
