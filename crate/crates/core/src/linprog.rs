//! Dense linear programs and a two-phase tableau simplex solver.
//!
//! Every distortion, fairness and instance-optimal quantity in this crate is
//! the optimum of a small dense LP, so the solver favours being easy to audit
//! over raw speed: a full tableau, Dantzig pricing while the objective makes
//! progress, and Bland's rule once pivots start to stall.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("objective has {found} coefficients, expected {expected}")]
    ObjectiveMismatch { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("linear program must have at least one variable")]
    NoVariables,
    #[error("variable index {index} out of range for {num_vars} variables")]
    VariableOutOfRange { index: usize, num_vars: usize },
    #[error("simplex exceeded the pivot cap of {0}")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Amount by which `x` violates this row; zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A linear program over `num_vars` variables.
///
/// Variables are nonnegative unless explicitly freed with
/// [`LinearProgram::set_free`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    num_vars: usize,
    sense: Sense,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    nonneg: Vec<bool>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Result<Self, LpError> {
        if objective.is_empty() {
            return Err(LpError::NoVariables);
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        let num_vars = objective.len();
        Ok(Self {
            num_vars,
            sense,
            objective,
            constraints: Vec::new(),
            nonneg: vec![true; num_vars],
        })
    }

    pub fn maximize(objective: Vec<f64>) -> Result<Self, LpError> {
        Self::new(Sense::Maximize, objective)
    }

    pub fn minimize(objective: Vec<f64>) -> Result<Self, LpError> {
        Self::new(Sense::Minimize, objective)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_nonneg(&self, var: usize) -> bool {
        self.nonneg[var]
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> Result<(), LpError> {
        let row = self.constraints.len();
        if coeffs.len() != self.num_vars {
            return Err(LpError::DimensionMismatch {
                row,
                expected: self.num_vars,
                found: coeffs.len(),
            });
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(format!("constraint {row}")));
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Sparse convenience form of [`LinearProgram::add_constraint`].
    pub fn add_sparse(
        &mut self,
        terms: &[(usize, f64)],
        relation: Relation,
        rhs: f64,
    ) -> Result<(), LpError> {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(j, a) in terms {
            if j >= self.num_vars {
                return Err(LpError::VariableOutOfRange {
                    index: j,
                    num_vars: self.num_vars,
                });
            }
            coeffs[j] += a;
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_free(&mut self, var: usize) -> Result<(), LpError> {
        if var >= self.num_vars {
            return Err(LpError::VariableOutOfRange {
                index: var,
                num_vars: self.num_vars,
            });
        }
        self.nonneg[var] = false;
        Ok(())
    }

    /// Re-checks the structural invariants. Useful for programs that were
    /// deserialized rather than built through the checked constructors.
    pub fn validate(&self) -> Result<(), LpError> {
        if self.num_vars == 0 {
            return Err(LpError::NoVariables);
        }
        if self.objective.len() != self.num_vars {
            return Err(LpError::ObjectiveMismatch {
                expected: self.num_vars,
                found: self.objective.len(),
            });
        }
        if self.nonneg.len() != self.num_vars {
            return Err(LpError::ObjectiveMismatch {
                expected: self.num_vars,
                found: self.nonneg.len(),
            });
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.num_vars {
                return Err(LpError::DimensionMismatch {
                    row,
                    expected: self.num_vars,
                    found: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite(format!("constraint {row}")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint or sign violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let signs = x
            .iter()
            .zip(&self.nonneg)
            .filter(|(_, &nn)| nn)
            .map(|(v, _)| (-v).max(0.0))
            .fold(0.0, f64::max);
        rows.max(signs)
    }

    /// Plain-text dump, one constraint per line, for bug reports.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        let _ = writeln!(out, "vars {}", self.num_vars);
        let _ = writeln!(out, "{sense} {}", join(&self.objective));
        let free: Vec<String> = (0..self.num_vars)
            .filter(|&j| !self.nonneg[j])
            .map(|j| j.to_string())
            .collect();
        if !free.is_empty() {
            let _ = writeln!(out, "free {}", free.join(" "));
        }
        for c in &self.constraints {
            let _ = writeln!(out, "{} {} {}", join(&c.coeffs), c.relation, c.rhs);
        }
        out
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, assignment: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn status(&self) -> LpStatus {
        match self {
            LpOutcome::Optimal { .. } => LpStatus::Optimal,
            LpOutcome::Infeasible => LpStatus::Infeasible,
            LpOutcome::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn assignment(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { assignment, .. } => Some(assignment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
    pub max_pivots: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feasibility_tol: 1e-7,
            max_pivots: 1_000_000,
            degenerate_streak: 50,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let mut tableau = Tableau::build(lp);
    let mut pivots = 0usize;

    if tableau.num_artificial > 0 {
        tableau.load_phase_one_costs();
        match tableau.run(opts, &mut pivots, tableau.art_start)? {
            PhaseResult::Optimal => {}
            // Phase one is bounded below by zero.
            PhaseResult::Unbounded => unreachable!("phase one objective is bounded"),
        }
        let infeasibility = -tableau.obj_value;
        let scale = 1.0 + tableau.rhs_scale;
        if infeasibility > opts.feasibility_tol * scale {
            return Ok(LpOutcome::Infeasible);
        }
        tableau.drive_out_artificials(opts);
    }

    tableau.load_phase_two_costs();
    match tableau.run(opts, &mut pivots, tableau.art_start)? {
        PhaseResult::Optimal => {}
        PhaseResult::Unbounded => return Ok(LpOutcome::Unbounded),
    }

    let assignment = tableau.extract(lp);
    let value = lp.objective_value(&assignment);
    Ok(LpOutcome::Optimal { value, assignment })
}

enum PhaseResult {
    Optimal,
    Unbounded,
}

/// Column layout: structural columns (free variables split into a positive
/// and a negative part), then slack/surplus columns, then artificials.
/// Rows are stored flat with the right-hand side in the last slot.
struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs of the current phase (minimization form).
    reduced: Vec<f64>,
    /// Negated objective value, kept in sync with `reduced`.
    obj_value: f64,
    /// Phase-two cost per tableau column (minimization form).
    costs: Vec<f64>,
    /// For each original variable: (positive column, optional negative column).
    var_cols: Vec<(usize, Option<usize>)>,
    art_start: usize,
    num_artificial: usize,
    rhs_scale: f64,
    /// Rows that were found redundant in phase one and dropped from pivoting.
    dead: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars;
        let mut var_cols = Vec::with_capacity(n);
        let mut next = 0;
        for j in 0..n {
            if lp.nonneg[j] {
                var_cols.push((next, None));
                next += 1;
            } else {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            }
        }
        let num_struct = next;

        // Normalize every row to a nonnegative right-hand side.
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                let mut row = vec![0.0; num_struct];
                for (j, &a) in c.coeffs.iter().enumerate() {
                    let (p, neg) = var_cols[j];
                    row[p] = a;
                    if let Some(q) = neg {
                        row[q] = -a;
                    }
                }
                if c.rhs < 0.0 {
                    for a in row.iter_mut() {
                        *a = -*a;
                    }
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (row, rel, -c.rhs)
                } else {
                    (row, c.relation, c.rhs)
                }
            })
            .collect();

        let num_slack = normalized
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Eq)
            .count();
        let num_artificial = normalized
            .iter()
            .filter(|(_, rel, _)| *rel != Relation::Le)
            .count();
        let slack_start = num_struct;
        let art_start = slack_start + num_slack;
        let cols = art_start + num_artificial;
        let width = cols + 1;
        let rows = normalized.len();

        let mut data = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut slack = slack_start;
        let mut art = art_start;
        let mut rhs_scale: f64 = 0.0;
        for (i, (coeffs, rel, rhs)) in normalized.into_iter().enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..num_struct].copy_from_slice(&coeffs);
            row[cols] = rhs;
            rhs_scale = rhs_scale.max(rhs);
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }

        let sign = match lp.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        let mut costs = vec![0.0; cols];
        for (j, &c) in lp.objective.iter().enumerate() {
            let (p, neg) = var_cols[j];
            costs[p] = sign * c;
            if let Some(q) = neg {
                costs[q] = -sign * c;
            }
        }

        Self {
            rows,
            width,
            data,
            basis,
            reduced: vec![0.0; cols],
            obj_value: 0.0,
            costs,
            var_cols,
            art_start,
            num_artificial,
            rhs_scale,
            dead: vec![false; rows],
        }
    }

    fn cols(&self) -> usize {
        self.width - 1
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn load_costs(&mut self, costs: &[f64]) {
        let cols = self.cols();
        self.reduced.clear();
        self.reduced.extend_from_slice(costs);
        self.obj_value = 0.0;
        for i in 0..self.rows {
            if self.dead[i] {
                continue;
            }
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[i * self.width..(i + 1) * self.width];
            for j in 0..cols {
                self.reduced[j] -= cb * row[j];
            }
            self.obj_value -= cb * row[cols];
        }
    }

    fn load_phase_one_costs(&mut self) {
        let cols = self.cols();
        let mut costs = vec![0.0; cols];
        for c in costs.iter_mut().skip(self.art_start) {
            *c = 1.0;
        }
        self.load_costs(&costs);
    }

    fn load_phase_two_costs(&mut self) {
        let costs = self.costs.clone();
        self.load_costs(&costs);
    }

    /// Runs primal simplex on the loaded costs, never entering columns at or
    /// beyond `col_limit` (artificials are only basic, never re-entered).
    fn run(
        &mut self,
        opts: &SolverOptions,
        pivots: &mut usize,
        col_limit: usize,
    ) -> Result<PhaseResult, LpError> {
        let rhs = self.cols();
        let mut bland = false;
        let mut streak = 0usize;
        loop {
            let entering = if bland {
                (0..col_limit).find(|&j| self.reduced[j] < -opts.pivot_tol)
            } else {
                let mut best = None;
                let mut best_val = -opts.pivot_tol;
                for j in 0..col_limit {
                    if self.reduced[j] < best_val {
                        best_val = self.reduced[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else {
                return Ok(PhaseResult::Optimal);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.rows {
                if self.dead[i] {
                    continue;
                }
                let a = self.data[i * self.width + q];
                if a > opts.pivot_tol {
                    let ratio = self.data[i * self.width + rhs].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-12
                                || (ratio <= best_ratio + 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = best_ratio.min(ratio);
                        leave = Some(i);
                    }
                }
            }
            let Some(p) = leave else {
                return Ok(PhaseResult::Unbounded);
            };

            if best_ratio <= 1e-12 {
                streak += 1;
                if streak >= opts.degenerate_streak {
                    bland = true;
                }
            } else {
                streak = 0;
            }

            *pivots += 1;
            if *pivots > opts.max_pivots {
                return Err(LpError::IterationLimit(opts.max_pivots));
            }
            self.pivot(p, q);
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let piv = self.data[p * w + q];
        {
            let prow = &mut self.data[p * w..(p + 1) * w];
            for a in prow.iter_mut() {
                *a /= piv;
            }
            prow[q] = 1.0;
        }
        let (before, rest) = self.data.split_at_mut(p * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[q];
            if f != 0.0 {
                for (a, &b) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                row[q] = 0.0;
            }
        };
        before.chunks_exact_mut(w).for_each(eliminate);
        after.chunks_exact_mut(w).for_each(eliminate);

        let f = self.reduced[q];
        if f != 0.0 {
            let cols = w - 1;
            for j in 0..cols {
                self.reduced[j] -= f * prow[j];
            }
            self.reduced[q] = 0.0;
            self.obj_value -= f * prow[cols];
        }
        self.basis[p] = q;
    }

    /// After a feasible phase one, pivot zero-valued artificials out of the
    /// basis; rows where that is impossible are linearly dependent.
    fn drive_out_artificials(&mut self, opts: &SolverOptions) {
        for i in 0..self.rows {
            if self.basis[i] < self.art_start || self.dead[i] {
                continue;
            }
            let candidate = {
                let row = self.row(i);
                (0..self.art_start)
                    .filter(|&j| row[j].abs() > opts.pivot_tol)
                    .max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs()))
            };
            match candidate {
                Some(q) => self.pivot(i, q),
                None => self.dead[i] = true,
            }
        }
    }

    fn extract(&self, lp: &LinearProgram) -> Vec<f64> {
        let rhs = self.cols();
        let mut col_values = vec![0.0; self.cols()];
        for i in 0..self.rows {
            if self.dead[i] {
                continue;
            }
            col_values[self.basis[i]] = self.data[i * self.width + rhs];
        }
        self.var_cols
            .iter()
            .enumerate()
            .map(|(j, &(p, neg))| {
                let v = col_values[p] - neg.map_or(0.0, |q| col_values[q]);
                if lp.nonneg[j] {
                    v.max(0.0)
                } else {
                    v
                }
            })
            .collect()
    }
}
