//! Worst-case distortion and fairness over the metrics consistent with a
//! profile, computed by linear programming.
//!
//! The LPs are not built over the raw `d(v, c)` variables. Each agent's row is
//! written as running sums of nonnegative increments along its ranking, so
//! nonnegativity and consistency hold by construction, and the quadrilateral
//! rows are added lazily: solve, find the most violated row for every
//! `(v, c)`, add those, repeat. Agents with identical rankings share one row
//! when the objective is symmetric in them.

use std::collections::HashMap;

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::linprog::{solve_with, Constraint, LinearProgram, LpError, LpOutcome, Relation, SolverOptions};
use crate::metricspace::{is_consistent, is_q_metric, top_k_sum, CostMatrix};
use crate::profile::PreferenceProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("LP failure ({context}): {source}")]
    Lp { context: String, source: LpError },
    #[error("alternative {alt} out of range for {num_alternatives} alternatives")]
    BadAlternative { alt: usize, num_alternatives: usize },
    #[error("invalid distribution: {0}")]
    BadDistribution(String),
    #[error("k = {k} outside 1..={num_agents}")]
    BadK { k: usize, num_agents: usize },
    #[error("enumeration needs a budget of {required}, only {budget} allowed")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("instance too large for the grid oracle: N*M = {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("bad grid: step {step}, max {max}")]
    BadGrid { step: f64, max: f64 },
    #[error("normalized LP is infeasible ({0})")]
    Infeasible(String),
    #[error("witness check failed: {0}")]
    WitnessCheck(String),
}

fn lp_err(context: impl Into<String>) -> impl FnOnce(LpError) -> DistortionError {
    let context = context.into();
    move |source| DistortionError::Lp { context, source }
}

/// Knobs shared by every metric LP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpConfig {
    #[serde(skip)]
    pub solver: SolverOptions,
    /// Generate quadrilateral rows on demand; `false` always uses all of them.
    pub lazy: bool,
    /// Below this many quadrilateral rows the full set is used directly.
    pub full_row_threshold: usize,
    pub merge_identical: bool,
    pub violation_tol: f64,
    pub witness_tol: f64,
    pub max_rounds: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            lazy: true,
            full_row_threshold: 256,
            merge_identical: true,
            violation_tol: 1e-9,
            witness_tol: 1e-7,
            max_rounds: 500,
        }
    }
}

impl LpConfig {
    /// Every quadrilateral row up front, no agent merging.
    pub fn paranoid() -> Self {
        Self {
            lazy: false,
            merge_identical: false,
            ..Self::default()
        }
    }
}

/// The consistent-metric polytope written out row by row over the variables
/// `d(v, c)`, index `v * M + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPolytope {
    num_agents: usize,
    num_alternatives: usize,
    rows: Vec<Constraint>,
}

impl MetricPolytope {
    pub fn new(profile: &PreferenceProfile) -> Self {
        let n = profile.num_agents();
        let m = profile.num_alternatives();
        let nv = n * m;
        let var = |v: usize, c: usize| v * m + c;
        let mut rows = Vec::new();
        let mut push = |terms: &[(usize, f64)]| {
            let mut coeffs = vec![0.0; nv];
            for &(j, a) in terms {
                coeffs[j] += a;
            }
            rows.push(Constraint {
                coeffs,
                relation: Relation::Le,
                rhs: 0.0,
            });
        };
        for j in 0..nv {
            push(&[(j, -1.0)]);
        }
        for v in 0..n {
            for w in 0..n {
                if v == w {
                    continue;
                }
                for c in 0..m {
                    for e in 0..m {
                        if c != e {
                            push(&[
                                (var(v, c), 1.0),
                                (var(v, e), -1.0),
                                (var(w, e), -1.0),
                                (var(w, c), -1.0),
                            ]);
                        }
                    }
                }
            }
        }
        for v in 0..n {
            for pair in profile.ranking(v).windows(2) {
                push(&[(var(v, pair[0]), 1.0), (var(v, pair[1]), -1.0)]);
            }
        }
        Self {
            num_agents: n,
            num_alternatives: m,
            rows,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_agents * self.num_alternatives
    }

    pub fn var(&self, agent: usize, alt: usize) -> usize {
        agent * self.num_alternatives + alt
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn max_violation(&self, d: &CostMatrix) -> f64 {
        let x: Vec<f64> = (0..self.num_agents)
            .flat_map(|v| d.row(v).to_vec())
            .collect();
        self.rows
            .iter()
            .map(|r| r.violation(&x))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, d: &CostMatrix, tol: f64) -> bool {
        self.max_violation(d) <= tol
    }
}

/// Agents grouped by ranking; `weight[t]` agents share type `t`.
struct Layout<'a> {
    profile: &'a PreferenceProfile,
    rep: Vec<usize>,
    weight: Vec<f64>,
    type_of: Vec<usize>,
}

impl<'a> Layout<'a> {
    fn new(profile: &'a PreferenceProfile, merge: bool) -> Self {
        let mut rep = Vec::new();
        let mut weight = Vec::new();
        let mut type_of = Vec::with_capacity(profile.num_agents());
        let mut seen: HashMap<&[usize], usize> = HashMap::new();
        for v in 0..profile.num_agents() {
            let t = if merge {
                *seen.entry(profile.ranking(v)).or_insert_with(|| {
                    rep.push(v);
                    weight.push(0.0);
                    rep.len() - 1
                })
            } else {
                rep.push(v);
                weight.push(0.0);
                rep.len() - 1
            };
            weight[t] += 1.0;
            type_of.push(t);
        }
        Self {
            profile,
            rep,
            weight,
            type_of,
        }
    }

    fn num_types(&self) -> usize {
        self.rep.len()
    }

    fn m(&self) -> usize {
        self.profile.num_alternatives()
    }

    /// Sum over all agents of `d(v, c)`, scaled by `coef`.
    fn column(&self, c: usize, coef: f64) -> impl Iterator<Item = Term> + '_ {
        (0..self.num_types()).map(move |t| Term::D(t, c, coef * self.weight[t]))
    }
}

#[derive(Debug, Clone, Copy)]
enum Term {
    D(usize, usize, f64),
    Aux(usize, f64),
}

struct Spec {
    aux: usize,
    objective: Vec<Term>,
    rows: Vec<(Vec<Term>, Relation, f64)>,
    /// `(c, c')`: column `c` must stay bounded given column `c'` is.
    bounded_pairs: Vec<(usize, usize)>,
}

struct Solved {
    value: f64,
    d: CostMatrix,
}

enum MetricLpResult {
    Optimal(Solved),
    Infeasible,
    Unbounded,
}

fn solve_metric_lp(
    layout: &Layout,
    spec: &Spec,
    cfg: &LpConfig,
    context: &str,
) -> Result<MetricLpResult, DistortionError> {
    let nt = layout.num_types();
    let m = layout.m();
    let nd = nt * m;
    let nvars = nd + spec.aux;
    let pos = |t: usize, c: usize| layout.profile.position(layout.rep[t], c);

    let dense = |terms: &[Term]| -> Vec<f64> {
        let mut coeffs = vec![0.0; nvars];
        for &term in terms {
            match term {
                Term::D(t, c, a) => {
                    for s in 0..=pos(t, c) {
                        coeffs[t * m + s] += a;
                    }
                }
                Term::Aux(i, a) => coeffs[nd + i] += a,
            }
        }
        coeffs
    };
    let quad_terms = |(t, u, c, e): (usize, usize, usize, usize)| {
        [
            Term::D(t, c, 1.0),
            Term::D(t, e, -1.0),
            Term::D(u, e, -1.0),
            Term::D(u, c, -1.0),
        ]
    };

    let objective = dense(&spec.objective);
    let base: Vec<(Vec<f64>, Relation, f64)> = spec
        .rows
        .iter()
        .map(|(terms, rel, rhs)| (dense(terms), *rel, *rhs))
        .collect();

    let total_quad = nt * nt.saturating_sub(1) * m * m.saturating_sub(1);
    let mut full = !cfg.lazy || total_quad <= cfg.full_row_threshold;
    let mut quads: Vec<(usize, usize, usize, usize)> = Vec::new();
    let key = |(t, u, c, e): (usize, usize, usize, usize)| ((t * nt + u) * m + c) * m + e;
    let mut present = vec![false; nt * nt * m * m];

    if !full {
        'seeds: for &(c, e) in &spec.bounded_pairs {
            if c == e {
                continue;
            }
            let preferring: Vec<usize> = (0..nt).filter(|&u| pos(u, c) < pos(u, e)).collect();
            let Some(&u) = preferring.first() else {
                full = true;
                break 'seeds;
            };
            for t in 0..nt {
                if pos(t, c) > pos(t, e) {
                    let q = (t, u, c, e);
                    if !present[key(q)] {
                        present[key(q)] = true;
                        quads.push(q);
                    }
                }
            }
        }
    }
    if full {
        quads.clear();
        for t in 0..nt {
            for u in 0..nt {
                for c in 0..m {
                    for e in 0..m {
                        if t != u && c != e {
                            quads.push((t, u, c, e));
                        }
                    }
                }
            }
        }
    }

    let mut dense_quads: Vec<Vec<f64>> = quads.iter().map(|&q| dense(&quad_terms(q))).collect();
    for round in 0.. {
        if round > cfg.max_rounds {
            return Err(DistortionError::Lp {
                context: format!("{context}: row generation did not settle"),
                source: LpError::IterationLimit(cfg.max_rounds),
            });
        }
        let mut lp = LinearProgram::maximize(objective.clone()).map_err(lp_err(context))?;
        for (coeffs, rel, rhs) in &base {
            lp.add_constraint(coeffs.clone(), *rel, *rhs)
                .map_err(lp_err(context))?;
        }
        for coeffs in &dense_quads {
            lp.add_constraint(coeffs.clone(), Relation::Le, 0.0)
                .map_err(lp_err(context))?;
        }
        let (value, x) = match solve_with(&lp, &cfg.solver).map_err(lp_err(context))? {
            LpOutcome::Infeasible => return Ok(MetricLpResult::Infeasible),
            LpOutcome::Unbounded if full => return Ok(MetricLpResult::Unbounded),
            LpOutcome::Unbounded => {
                // Seeds should prevent this; fall back to the complete system.
                full = true;
                dense_quads.clear();
                for t in 0..nt {
                    for u in 0..nt {
                        for c in 0..m {
                            for e in 0..m {
                                if t != u && c != e {
                                    dense_quads.push(dense(&quad_terms((t, u, c, e))));
                                }
                            }
                        }
                    }
                }
                continue;
            }
            LpOutcome::Optimal { value, assignment } => (value, assignment),
        };

        let mut dt = vec![0.0; nd];
        for t in 0..nt {
            let mut acc = 0.0;
            for (s, &c) in layout.profile.ranking(layout.rep[t]).iter().enumerate() {
                acc += x[t * m + s];
                dt[t * m + c] = acc;
            }
        }

        let mut added = 0;
        if !full {
            let scale = 1.0 + dt.iter().fold(0.0f64, |a, &b| a.max(b));
            let tol = cfg.violation_tol * scale;
            for t in 0..nt {
                for c in 0..m {
                    let mut best: Option<((usize, usize, usize, usize), f64)> = None;
                    for u in (0..nt).filter(|&u| u != t) {
                        for e in (0..m).filter(|&e| e != c) {
                            let viol = dt[t * m + c] - dt[t * m + e] - dt[u * m + e] - dt[u * m + c];
                            if viol > tol && best.map_or(true, |(_, b)| viol > b) {
                                best = Some(((t, u, c, e), viol));
                            }
                        }
                    }
                    if let Some((q, _)) = best {
                        if !present[key(q)] {
                            present[key(q)] = true;
                            dense_quads.push(dense(&quad_terms(q)));
                            added += 1;
                        }
                    }
                }
            }
        }
        if added == 0 {
            let rows = (0..layout.profile.num_agents())
                .map(|v| {
                    let t = layout.type_of[v];
                    dt[t * m..(t + 1) * m].to_vec()
                })
                .collect();
            let d = CostMatrix::from_rows(rows).map_err(|e| DistortionError::WitnessCheck(e.to_string()))?;
            return Ok(MetricLpResult::Optimal(Solved { value, d }));
        }
    }
    unreachable!()
}

fn check_alt(profile: &PreferenceProfile, alt: usize) -> Result<(), DistortionError> {
    if alt < profile.num_alternatives() {
        Ok(())
    } else {
        Err(DistortionError::BadAlternative {
            alt,
            num_alternatives: profile.num_alternatives(),
        })
    }
}

/// Checks that `x` is a probability vector over the alternatives.
pub fn check_distribution(profile: &PreferenceProfile, x: &[f64]) -> Result<(), DistortionError> {
    let m = profile.num_alternatives();
    if x.len() != m {
        return Err(DistortionError::BadDistribution(format!(
            "{} entries for {m} alternatives",
            x.len()
        )));
    }
    if x.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(DistortionError::BadDistribution("negative or non-finite entry".into()));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DistortionError::BadDistribution(format!("entries sum to {total}")));
    }
    Ok(())
}

pub fn point_mass(m: usize, alt: usize) -> Vec<f64> {
    let mut x = vec![0.0; m];
    x[alt] = 1.0;
    x
}

/// `Σ_c x_c φ(c, d)`.
pub fn expected_cost(d: &CostMatrix, x: &[f64]) -> f64 {
    x.iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(c, p)| p * d.column(c).iter().sum::<f64>())
        .sum()
}

/// Distortion of `x` under one fixed metric; infinite when the best column
/// costs nothing but `x` does not.
pub fn ratio_at(d: &CostMatrix, x: &[f64]) -> f64 {
    let best = (0..d.num_alternatives())
        .map(|c| d.column(c).iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    ratio(expected_cost(d, x), best)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// `Σ_c x_c top_k(c) / min_c top_k(c)` under one fixed metric.
pub fn fairness_ratio_at(d: &CostMatrix, x: &[f64], k: usize) -> Result<f64, DistortionError> {
    let n = d.num_agents();
    let top = |c: usize| {
        top_k_sum(&d.column(c), k).map_err(|_| DistortionError::BadK { k, num_agents: n })
    };
    let mut num = 0.0;
    let mut best = f64::INFINITY;
    for c in 0..d.num_alternatives() {
        let t = top(c)?;
        if x[c] > 0.0 {
            num += x[c] * t;
        }
        best = best.min(t);
    }
    Ok(ratio(num, best))
}

/// Confirms that `d` is a consistent q-metric, that column `opponent` is
/// normalized, and that `x` costs `value` on it.
pub fn check_witness(
    profile: &PreferenceProfile,
    d: &CostMatrix,
    x: &[f64],
    opponent: usize,
    value: f64,
    tol: f64,
) -> Result<(), DistortionError> {
    let scale = 1.0 + d.row(0).iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let scale = (1..d.num_agents()).fold(scale, |s, v| {
        d.row(v).iter().fold(s, |a, &b| a.max(1.0 + b.abs()))
    });
    is_q_metric(d, tol * scale).map_err(|e| DistortionError::WitnessCheck(e.to_string()))?;
    is_consistent(d, profile, tol * scale)
        .map_err(|e| DistortionError::WitnessCheck(e.to_string()))?;
    let norm: f64 = d.column(opponent).iter().sum();
    if (norm - 1.0).abs() > tol * scale {
        return Err(DistortionError::WitnessCheck(format!(
            "opponent column sums to {norm}"
        )));
    }
    let got = expected_cost(d, x);
    if (got - value).abs() > 1e-6 * (1.0 + value.abs()) {
        return Err(DistortionError::WitnessCheck(format!(
            "witness evaluates to {got}, LP reported {value}"
        )));
    }
    Ok(())
}

/// Optimal value of a metric LP; infinite (and witness-free) when the LP is
/// unbounded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpValue {
    pub value: f64,
    pub witness: Option<CostMatrix>,
}

impl LpValue {
    fn unbounded() -> Self {
        Self {
            value: f64::INFINITY,
            witness: None,
        }
    }
}

fn expected_column_lp(
    profile: &PreferenceProfile,
    x: &[f64],
    opponent: usize,
    normal: bool,
    cfg: &LpConfig,
) -> Result<Option<LpValue>, DistortionError> {
    check_distribution(profile, x)?;
    check_alt(profile, opponent)?;
    let layout = Layout::new(profile, cfg.merge_identical);
    let m = profile.num_alternatives();
    let support: Vec<usize> = (0..m).filter(|&c| x[c] > 0.0).collect();
    let mut rows = vec![(layout.column(opponent, 1.0).collect(), Relation::Eq, 1.0)];
    if normal {
        for c in (0..m).filter(|&c| c != opponent) {
            rows.push((layout.column(c, 1.0).collect(), Relation::Ge, 1.0));
        }
    }
    let spec = Spec {
        aux: 0,
        objective: support.iter().flat_map(|&c| layout.column(c, x[c])).collect(),
        rows,
        bounded_pairs: support.iter().map(|&c| (c, opponent)).collect(),
    };
    let context = format!("opponent {}", opponent + 1);
    match solve_metric_lp(&layout, &spec, cfg, &context)? {
        MetricLpResult::Infeasible => Ok(None),
        MetricLpResult::Unbounded => Ok(Some(LpValue::unbounded())),
        MetricLpResult::Optimal(s) => {
            check_witness(profile, &s.d, x, opponent, s.value, cfg.witness_tol)?;
            Ok(Some(LpValue {
                value: s.value,
                witness: Some(s.d),
            }))
        }
    }
}

/// The LP behind [`a_rand`] (or [`a_rand_normal`] when `normal`) written
/// out over the raw `d(v, c)` variables with every row of the
/// [`MetricPolytope`]; meant for inspection and cross-checks.
pub fn normalized_lp(
    profile: &PreferenceProfile,
    x: &[f64],
    opponent: usize,
    normal: bool,
) -> Result<LinearProgram, DistortionError> {
    check_distribution(profile, x)?;
    check_alt(profile, opponent)?;
    let poly = MetricPolytope::new(profile);
    let (n, m) = (profile.num_agents(), profile.num_alternatives());
    let column = |c: usize| -> Vec<(usize, f64)> { (0..n).map(|v| (poly.var(v, c), 1.0)).collect() };
    let mut objective = vec![0.0; poly.num_vars()];
    for c in 0..m {
        for v in 0..n {
            objective[poly.var(v, c)] += x[c];
        }
    }
    let mut lp = LinearProgram::maximize(objective).map_err(lp_err("normalized LP"))?;
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = vec![(column(opponent), Relation::Eq, 1.0)];
    if normal {
        rows.extend((0..m).filter(|&c| c != opponent).map(|c| (column(c), Relation::Ge, 1.0)));
    }
    let result = (|| {
        for row in poly.rows() {
            lp.add_constraint(row.coeffs.clone(), row.relation, row.rhs)?;
        }
        for (terms, rel, rhs) in &rows {
            lp.add_sparse(terms, *rel, *rhs)?;
        }
        Ok(())
    })();
    result.map_err(lp_err("normalized LP"))?;
    Ok(lp)
}

/// `A(x, c')`: the largest expected cost of `x` over consistent metrics in
/// which `c'` has social cost 1.
pub fn a_rand(
    profile: &PreferenceProfile,
    x: &[f64],
    opponent: usize,
    cfg: &LpConfig,
) -> Result<LpValue, DistortionError> {
    expected_column_lp(profile, x, opponent, false, cfg)?
        .ok_or_else(|| DistortionError::Infeasible(format!("opponent {}", opponent + 1)))
}

pub fn a_det(
    profile: &PreferenceProfile,
    alt: usize,
    opponent: usize,
    cfg: &LpConfig,
) -> Result<LpValue, DistortionError> {
    check_alt(profile, alt)?;
    a_rand(profile, &point_mass(profile.num_alternatives(), alt), opponent, cfg)
}

/// Like [`a_rand`], restricted to metrics where `c'` is a cheapest
/// alternative: every other column sums to at least 1. `None` when no such
/// metric exists.
pub fn a_rand_normal(
    profile: &PreferenceProfile,
    x: &[f64],
    opponent: usize,
    cfg: &LpConfig,
) -> Result<Option<LpValue>, DistortionError> {
    expected_column_lp(profile, x, opponent, true, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub violation: f64,
    pub witness: f64,
    pub pivot: f64,
    pub feasibility: f64,
}

impl From<&LpConfig> for Tolerances {
    fn from(cfg: &LpConfig) -> Self {
        Self {
            violation: cfg.violation_tol,
            witness: cfg.witness_tol,
            pivot: cfg.solver.pivot_tol,
            feasibility: cfg.solver.feasibility_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistortionReport {
    pub rule: Option<String>,
    pub winner: Option<usize>,
    pub distribution: Vec<f64>,
    pub value: f64,
    pub opponent: usize,
    pub witness: Option<CostMatrix>,
    pub per_opponent: Vec<f64>,
    pub tie_break: Option<Vec<usize>>,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
}

/// `max_{c'} A(x, c')` with the maximizing witness.
pub fn dist_rand(
    profile: &PreferenceProfile,
    x: &[f64],
    cfg: &LpConfig,
) -> Result<DistortionReport, DistortionError> {
    check_distribution(profile, x)?;
    let m = profile.num_alternatives();
    let mut per_opponent = Vec::with_capacity(m);
    let mut best: Option<(usize, LpValue)> = None;
    for opponent in 0..m {
        let a = a_rand(profile, x, opponent, cfg)?;
        per_opponent.push(a.value);
        if best.as_ref().map_or(true, |(_, b)| a.value > b.value) {
            best = Some((opponent, a));
        }
    }
    let (opponent, top) = best.expect("at least one alternative");
    let winner = x.iter().position(|&p| p == 1.0);
    Ok(DistortionReport {
        rule: None,
        winner,
        distribution: x.to_vec(),
        value: top.value,
        opponent,
        witness: top.witness,
        per_opponent,
        tie_break: None,
        tolerances: cfg.into(),
        seed: None,
    })
}

pub fn dist_det(
    profile: &PreferenceProfile,
    winner: usize,
    cfg: &LpConfig,
) -> Result<DistortionReport, DistortionError> {
    check_alt(profile, winner)?;
    dist_rand(profile, &point_mass(profile.num_alternatives(), winner), cfg)
}

/// Per-`k` fairness value; `lower == upper` when computed exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessEntry {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub opponent: usize,
    /// Agent subsets attaining `lower`, one per alternative in the support.
    pub subsets: Vec<Vec<usize>>,
    pub witness: Option<CostMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub distribution: Vec<f64>,
    pub per_k: Vec<FairnessEntry>,
    /// Max over `k` of the lower values.
    pub value: f64,
    pub upper: f64,
    pub exact: bool,
}

fn check_ks(profile: &PreferenceProfile, ks: &[usize]) -> Result<(), DistortionError> {
    let n = profile.num_agents();
    match ks.iter().find(|&&k| k == 0 || k > n) {
        Some(&k) => Err(DistortionError::BadK { k, num_agents: n }),
        None => Ok(()),
    }
}

/// One subset LP: maximize `Σ_c x_c Σ_{v ∈ S_c} d(v, c)` subject to the sum
/// of the `k` largest costs of `z` being at most 1.
fn subset_lp(
    profile: &PreferenceProfile,
    x: &[f64],
    subsets: &[(usize, &[usize])],
    k: usize,
    z: usize,
    cfg: &LpConfig,
) -> Result<LpValue, DistortionError> {
    let n = profile.num_agents();
    let layout = Layout::new(profile, false);
    // aux 0 is the threshold t, aux 1 + v the overflow of agent v.
    let mut budget = vec![Term::Aux(0, k as f64)];
    budget.extend((0..n).map(|v| Term::Aux(1 + v, 1.0)));
    let mut rows = vec![(budget, Relation::Le, 1.0)];
    for v in 0..n {
        rows.push((
            vec![Term::Aux(1 + v, 1.0), Term::Aux(0, 1.0), Term::D(v, z, -1.0)],
            Relation::Ge,
            0.0,
        ));
    }
    let objective = subsets
        .iter()
        .flat_map(|&(c, s)| s.iter().map(move |&v| Term::D(v, c, x[c])))
        .collect();
    let spec = Spec {
        aux: n + 1,
        objective,
        rows,
        bounded_pairs: subsets.iter().map(|&(c, _)| (c, z)).collect(),
    };
    let context = format!("k = {k}, opponent {}", z + 1);
    Ok(match solve_metric_lp(&layout, &spec, cfg, &context)? {
        MetricLpResult::Unbounded => LpValue::unbounded(),
        MetricLpResult::Infeasible => return Err(DistortionError::Infeasible(context)),
        MetricLpResult::Optimal(s) => LpValue {
            value: s.value,
            witness: Some(s.d),
        },
    })
}

/// Subsets of size `k`, keeping only one representative per orbit of agents
/// with identical rankings (members of a class are taken in order).
fn canonical_subsets(profile: &PreferenceProfile, k: usize) -> Vec<Vec<usize>> {
    let n = profile.num_agents();
    let class_prev: Vec<Option<usize>> = (0..n)
        .map(|v| (0..v).rev().find(|&u| profile.ranking(u) == profile.ranking(v)))
        .collect();
    (0..n)
        .combinations(k)
        .filter(|s| {
            s.iter()
                .all(|&v| class_prev[v].map_or(true, |u| s.contains(&u)))
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// `sup_d max_k φ_k(winner, d) / min_c φ_k(c, d)` for each `k` in `ks`,
/// enumerating the subsets on the objective side. Refuses when
/// `N > max_agents`.
pub fn fairness_det(
    profile: &PreferenceProfile,
    winner: usize,
    ks: &[usize],
    max_agents: usize,
    cfg: &LpConfig,
) -> Result<FairnessReport, DistortionError> {
    check_alt(profile, winner)?;
    check_ks(profile, ks)?;
    let n = profile.num_agents();
    if n > max_agents {
        return Err(DistortionError::BudgetExceeded {
            required: n as u128,
            budget: max_agents as u128,
        });
    }
    let m = profile.num_alternatives();
    let x = point_mass(m, winner);
    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut entry = FairnessEntry {
            k,
            lower: 1.0,
            upper: 1.0,
            opponent: winner,
            subsets: vec![(0..k).collect()],
            witness: None,
        };
        let subsets = canonical_subsets(profile, k);
        for z in (0..m).filter(|&z| z != winner) {
            for s in &subsets {
                let r = subset_lp(profile, &x, &[(winner, s)], k, z, cfg)?;
                if r.value > entry.lower {
                    entry = FairnessEntry {
                        k,
                        lower: r.value,
                        upper: r.value,
                        opponent: z,
                        subsets: vec![s.clone()],
                        witness: r.witness,
                    };
                }
            }
        }
        per_k.push(entry);
    }
    Ok(summarize(x, per_k, true))
}

fn summarize(distribution: Vec<f64>, per_k: Vec<FairnessEntry>, exact: bool) -> FairnessReport {
    let value = per_k.iter().map(|e| e.lower).fold(1.0, f64::max);
    let upper = per_k.iter().map(|e| e.upper).fold(1.0, f64::max);
    FairnessReport {
        distribution,
        per_k,
        value,
        upper,
        exact,
    }
}

/// Randomized fairness of `x`. Exact when, for every `k`, the number of
/// subset tuples (one subset per supported alternative) is within `budget`;
/// otherwise each `k` gets a coordinate-ascent lower bound and an upper bound
/// that maximizes each alternative's term separately.
pub fn fairness_rand(
    profile: &PreferenceProfile,
    x: &[f64],
    ks: &[usize],
    budget: u128,
    cfg: &LpConfig,
) -> Result<FairnessReport, DistortionError> {
    check_distribution(profile, x)?;
    check_ks(profile, ks)?;
    let n = profile.num_agents();
    let m = profile.num_alternatives();
    let support: Vec<usize> = (0..m).filter(|&c| x[c] > 0.0).collect();
    let mut exact = true;
    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let subsets = canonical_subsets(profile, k);
        let full: Vec<Vec<usize>> = (0..n).combinations(k).collect();
        let tuples = binomial(n, k).saturating_pow(support.len() as u32);
        let mut entry = FairnessEntry {
            k,
            lower: 0.0,
            upper: 0.0,
            opponent: 0,
            subsets: Vec::new(),
            witness: None,
        };
        let improve = |entry: &mut FairnessEntry, z: usize, upper: f64, tuple: &[(usize, &[usize])], r: LpValue| {
            entry.upper = entry.upper.max(upper);
            if r.value > entry.lower || entry.subsets.is_empty() {
                entry.lower = r.value;
                entry.opponent = z;
                entry.subsets = tuple.iter().map(|(_, s)| s.to_vec()).collect();
                entry.witness = r.witness;
            }
        };
        if support.len() == 1 || tuples <= budget {
            // With a single supported alternative the orbit reduction is exact.
            let pool = if support.len() == 1 { &subsets } else { &full };
            for z in 0..m {
                for choice in support.iter().map(|_| pool.iter()).multi_cartesian_product() {
                    let tuple: Vec<(usize, &[usize])> = support
                        .iter()
                        .zip(&choice)
                        .map(|(&c, s)| (c, s.as_slice()))
                        .collect();
                    let r = subset_lp(profile, x, &tuple, k, z, cfg)?;
                    let v = r.value;
                    improve(&mut entry, z, v, &tuple, r);
                }
            }
        } else {
            exact = false;
            for z in 0..m {
                // Independent maximization per alternative.
                let mut start = Vec::with_capacity(support.len());
                let mut upper = 0.0;
                for &c in &support {
                    let mut best = (f64::NEG_INFINITY, &subsets[0]);
                    for s in &subsets {
                        let r = subset_lp(profile, x, &[(c, s)], k, z, cfg)?;
                        if r.value > best.0 {
                            best = (r.value, s);
                        }
                    }
                    upper += best.0;
                    start.push(best.1.clone());
                }
                let (lower, tuple, witness) = coordinate_ascent(profile, x, &support, &full, start, k, z, cfg)?;
                let pairs: Vec<(usize, &[usize])> = support
                    .iter()
                    .zip(&tuple)
                    .map(|(&c, s)| (c, s.as_slice()))
                    .collect();
                improve(&mut entry, z, upper, &pairs, LpValue { value: lower, witness });
            }
        }
        // Any metric gives ratio at least 1 through the cheapest alternative.
        entry.lower = entry.lower.max(1.0);
        entry.upper = entry.upper.max(entry.lower);
        per_k.push(entry);
    }
    Ok(summarize(x.to_vec(), per_k, exact))
}

#[allow(clippy::too_many_arguments)]
fn coordinate_ascent(
    profile: &PreferenceProfile,
    x: &[f64],
    support: &[usize],
    pool: &[Vec<usize>],
    mut tuple: Vec<Vec<usize>>,
    k: usize,
    z: usize,
    cfg: &LpConfig,
) -> Result<(f64, Vec<Vec<usize>>, Option<CostMatrix>), DistortionError> {
    let eval = |tuple: &[Vec<usize>]| {
        let pairs: Vec<(usize, &[usize])> = support
            .iter()
            .zip(tuple)
            .map(|(&c, s)| (c, s.as_slice()))
            .collect();
        subset_lp(profile, x, &pairs, k, z, cfg)
    };
    let mut best = eval(&tuple)?;
    loop {
        let mut moved = false;
        for i in 0..support.len() {
            for s in pool {
                if *s == tuple[i] {
                    continue;
                }
                let mut cand = tuple.clone();
                cand[i] = s.clone();
                let r = eval(&cand)?;
                if r.value > best.value + 1e-12 * (1.0 + best.value.abs()) {
                    best = r;
                    tuple = cand;
                    moved = true;
                }
            }
        }
        if !moved {
            return Ok((best.value, tuple, best.witness));
        }
    }
}

/// Largest `N * M` the grid oracle accepts.
pub const GRID_LIMIT: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub value: f64,
    pub witness: Option<CostMatrix>,
    pub feasible_points: u64,
}

/// Brute-force lower bound on the distortion of `x`: the best ratio over all
/// consistent q-metrics with entries in `{0, step, ..., max}`.
pub fn grid_oracle(
    profile: &PreferenceProfile,
    x: &[f64],
    step: f64,
    max: f64,
) -> Result<GridResult, DistortionError> {
    check_distribution(profile, x)?;
    let n = profile.num_agents();
    let m = profile.num_alternatives();
    if n * m > GRID_LIMIT {
        return Err(DistortionError::TooLarge {
            size: n * m,
            limit: GRID_LIMIT,
        });
    }
    if !(step > 0.0 && max >= 0.0 && step.is_finite() && max.is_finite()) {
        return Err(DistortionError::BadGrid { step, max });
    }
    let levels: Vec<f64> = (0..=((max / step + 1e-9).floor() as usize))
        .map(|i| i as f64 * step)
        .collect();

    // Nondecreasing level sequences along a ranking, as level indices.
    let mut monotone: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0usize; m];
    fn fill(pos: usize, lo: usize, top: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for l in lo..top {
            cur[pos] = l;
            fill(pos + 1, l, top, cur, out);
        }
    }
    fill(0, 0, levels.len(), &mut cur, &mut monotone);

    // Row options per agent in alternative order.
    let options: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|v| {
            monotone
                .iter()
                .map(|seq| {
                    let mut row = vec![0.0; m];
                    for (s, &c) in profile.ranking(v).iter().enumerate() {
                        row[c] = levels[seq[s]];
                    }
                    row
                })
                .collect()
        })
        .collect();

    let mut best = GridResult {
        value: 1.0,
        witness: None,
        feasible_points: 0,
    };
    let mut idx = vec![0usize; n];
    let tol = 1e-12;
    loop {
        let rows: Vec<&Vec<f64>> = (0..n).map(|v| &options[v][idx[v]]).collect();
        let ok = (0..n).all(|v| {
            (0..n).filter(|&w| w != v).all(|w| {
                (0..m).all(|c| {
                    (0..m)
                        .filter(|&e| e != c)
                        .all(|e| rows[v][c] <= rows[v][e] + rows[w][e] + rows[w][c] + tol)
                })
            })
        });
        if ok {
            best.feasible_points += 1;
            let cols: Vec<f64> = (0..m).map(|c| rows.iter().map(|r| r[c]).sum()).collect();
            let min = cols.iter().copied().fold(f64::INFINITY, f64::min);
            if min > 0.0 {
                let r = x.iter().zip(&cols).map(|(p, s)| p * s).sum::<f64>() / min;
                if r > best.value {
                    best.value = r;
                    best.witness = Some(
                        CostMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())
                            .expect("grid rows are rectangular and finite"),
                    );
                }
            }
        }
        // Odometer step.
        let mut v = 0;
        loop {
            if v == n {
                return Ok(best);
            }
            idx[v] += 1;
            if idx[v] < options[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}
