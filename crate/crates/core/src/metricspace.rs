//! Agent-by-alternative cost matrices: q-metric and consistency checks,
//! completion to a full metric, and the cost objectives compared by the
//! distortion and fairness ratios.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{data_lines, PreferenceProfile};

/// Absolute tolerance for every boolean geometric check.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cost matrix needs at least one row and one column")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("entry ({agent}, {alt}) is negative or not finite: {value}")]
    BadEntry { agent: usize, alt: usize, value: f64 },
    #[error("not a q-metric: {0}")]
    NotQMetric(QuadViolation),
    #[error("k = {k} is outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Nonnegative costs `d(v, c)`, row `v` = agent, column `c` = alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    num_agents: usize,
    num_alternatives: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(MetricError::Empty);
        }
        let mut entries = Vec::with_capacity(n * m);
        for (v, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(MetricError::Ragged {
                    row: v,
                    expected: m,
                    found: row.len(),
                });
            }
            for (c, &x) in row.iter().enumerate() {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(MetricError::BadEntry {
                        agent: v,
                        alt: c,
                        value: x,
                    });
                }
            }
            entries.extend(row);
        }
        Ok(Self {
            num_agents: n,
            num_alternatives: m,
            entries,
        })
    }

    pub fn zeros(num_agents: usize, num_alternatives: usize) -> Self {
        Self {
            num_agents,
            num_alternatives,
            entries: vec![0.0; num_agents * num_alternatives],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn num_alternatives(&self) -> usize {
        self.num_alternatives
    }

    pub fn get(&self, agent: usize, alt: usize) -> f64 {
        self.entries[agent * self.num_alternatives + alt]
    }

    pub fn set(&mut self, agent: usize, alt: usize, value: f64) {
        self.entries[agent * self.num_alternatives + alt] = value;
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        let m = self.num_alternatives;
        &self.entries[agent * m..(agent + 1) * m]
    }

    /// Cost vector of one alternative across agents.
    pub fn column(&self, alt: usize) -> Vec<f64> {
        (0..self.num_agents).map(|v| self.get(v, alt)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|x| x * factor).collect(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in 0..self.num_agents {
            let line: Vec<String> = self.row(v).iter().map(|x| format_entry(*x)).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn format_entry(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

pub fn parse_cost_matrix(text: &str) -> Result<CostMatrix, MetricError> {
    let mut rows = Vec::new();
    let mut width = None;
    for (line, l) in data_lines(text) {
        let row: Vec<f64> = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|e| MetricError::Parse {
                    line,
                    message: format!("bad cost {t:?}: {e}"),
                })
            })
            .collect::<Result<_, _>>()?;
        if let Some((i, x)) = row
            .iter()
            .enumerate()
            .find(|(_, x)| !(**x >= 0.0 && x.is_finite()))
        {
            return Err(MetricError::Parse {
                line,
                message: format!("column {} is negative or not finite: {x}", i + 1),
            });
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(MetricError::Parse {
                    line,
                    message: format!("expected {w} costs, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    CostMatrix::from_rows(rows)
}

pub fn serialize_cost_matrix(d: &CostMatrix) -> String {
    d.to_text()
}

/// A failed quadrilateral inequality `d(v,c) <= d(v,c') + d(v',c') + d(v',c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadViolation {
    pub agent: usize,
    pub other_agent: usize,
    pub alt: usize,
    pub other_alt: usize,
    pub excess: f64,
}

impl std::fmt::Display for QuadViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "d(v{},c{}) exceeds d(v{},c{}) + d(v{},c{}) + d(v{},c{}) by {}",
            self.agent + 1,
            self.alt + 1,
            self.agent + 1,
            self.other_alt + 1,
            self.other_agent + 1,
            self.other_alt + 1,
            self.other_agent + 1,
            self.alt + 1,
            self.excess
        )
    }
}

fn quad_excess(d: &CostMatrix, v: usize, w: usize, c: usize, e: usize) -> f64 {
    d.get(v, c) - (d.get(v, e) + d.get(w, e) + d.get(w, c))
}

/// Checks nonnegativity and every quadrilateral inequality with `v != v'`,
/// `c != c'` (the remaining cases hold identically). Returns the first
/// violation in lexicographic `(v, v', c, c')` order.
pub fn is_q_metric(d: &CostMatrix, tol: f64) -> Result<(), QuadViolation> {
    quad_scan(d, tol, false)
}

/// Like [`is_q_metric`] but also walks the trivially satisfied `v = v'` and
/// `c = c'` cases.
pub fn is_q_metric_paranoid(d: &CostMatrix, tol: f64) -> Result<(), QuadViolation> {
    quad_scan(d, tol, true)
}

fn quad_scan(d: &CostMatrix, tol: f64, all: bool) -> Result<(), QuadViolation> {
    let (n, m) = (d.num_agents(), d.num_alternatives());
    for v in 0..n {
        for c in 0..m {
            if d.get(v, c) < -tol {
                return Err(QuadViolation {
                    agent: v,
                    other_agent: v,
                    alt: c,
                    other_alt: c,
                    excess: -d.get(v, c),
                });
            }
        }
    }
    for v in 0..n {
        for w in 0..n {
            if v == w && !all {
                continue;
            }
            for c in 0..m {
                for e in 0..m {
                    if c == e && !all {
                        continue;
                    }
                    let excess = quad_excess(d, v, w, c, e);
                    if excess > tol {
                        return Err(QuadViolation {
                            agent: v,
                            other_agent: w,
                            alt: c,
                            other_alt: e,
                            excess,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// An agent whose costs disagree with its ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyViolation {
    pub agent: usize,
    pub preferred: usize,
    pub other: usize,
}

impl std::fmt::Display for ConsistencyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "agent {} ranks c{} above c{} but pays more for it",
            self.agent + 1,
            self.preferred + 1,
            self.other + 1
        )
    }
}

/// Costs must be non-decreasing along each ranking; adjacent pairs suffice.
pub fn is_consistent(
    d: &CostMatrix,
    profile: &PreferenceProfile,
    tol: f64,
) -> Result<(), ConsistencyViolation> {
    for v in 0..profile.num_agents() {
        for pair in profile.ranking(v).windows(2) {
            if d.get(v, pair[0]) > d.get(v, pair[1]) + tol {
                return Err(ConsistencyViolation {
                    agent: v,
                    preferred: pair[0],
                    other: pair[1],
                });
            }
        }
    }
    Ok(())
}

/// Symmetric distance table over agents followed by alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullMetric {
    num_agents: usize,
    num_alternatives: usize,
    table: Vec<f64>,
}

impl FullMetric {
    pub fn size(&self) -> usize {
        self.num_agents + self.num_alternatives
    }

    pub fn agent_point(&self, v: usize) -> usize {
        v
    }

    pub fn alt_point(&self, c: usize) -> usize {
        self.num_agents + c
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        self.table[x * self.size() + y]
    }

    /// First triple `(x, y, z)` with `d(x,z) > d(x,y) + d(y,z) + tol`.
    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        let k = self.size();
        for x in 0..k {
            for y in 0..k {
                for z in 0..k {
                    if self.dist(x, z) > self.dist(x, y) + self.dist(y, z) + tol {
                        return Some((x, y, z));
                    }
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.size();
        (0..k).all(|x| (0..k).all(|y| self.dist(x, y) == self.dist(y, x)))
    }
}

/// Extends a q-metric to a metric on agents and alternatives:
/// alternative-alternative distance is the largest disagreement of any agent
/// about the pair, and symmetrically for agent pairs.
pub fn complete_metric(d: &CostMatrix) -> Result<FullMetric, MetricError> {
    is_q_metric(d, DEFAULT_TOL).map_err(MetricError::NotQMetric)?;
    let (n, m) = (d.num_agents(), d.num_alternatives());
    let k = n + m;
    let mut table = vec![0.0; k * k];
    let mut put = |x: usize, y: usize, val: f64| {
        table[x * k + y] = val;
        table[y * k + x] = val;
    };
    for v in 0..n {
        for c in 0..m {
            put(v, n + c, d.get(v, c));
        }
    }
    for c in 0..m {
        for e in (c + 1)..m {
            let val = (0..n)
                .map(|v| (d.get(v, c) - d.get(v, e)).abs())
                .fold(0.0, f64::max);
            put(n + c, n + e, val);
        }
    }
    for v in 0..n {
        for w in (v + 1)..n {
            let val = (0..m)
                .map(|c| (d.get(v, c) - d.get(w, c)).abs())
                .fold(0.0, f64::max);
            put(v, w, val);
        }
    }
    Ok(FullMetric {
        num_agents: n,
        num_alternatives: m,
        table,
    })
}

/// Total cost `phi(c, d)`.
pub fn social_cost(d: &CostMatrix, alt: usize) -> f64 {
    (0..d.num_agents()).map(|v| d.get(v, alt)).sum()
}

fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sum of the `k` largest entries of a cost vector.
pub fn top_k_sum(x: &[f64], k: usize) -> Result<f64, MetricError> {
    if k == 0 || k > x.len() {
        return Err(MetricError::KOutOfRange { k, n: x.len() });
    }
    Ok(sorted_desc(x)[..k].iter().sum())
}

/// Sum of the `k` largest agent costs for `alt`.
pub fn top_k_cost(d: &CostMatrix, alt: usize, k: usize) -> Result<f64, MetricError> {
    top_k_sum(&d.column(alt), k)
}

/// Smallest cost `x` in the column such that strictly more than an `alpha`
/// fraction of agents pay at most `x`.
pub fn percentile_cost(d: &CostMatrix, alt: usize, alpha: f64) -> f64 {
    let mut col = d.column(alt);
    col.sort_by(f64::total_cmp);
    let n = col.len() as f64;
    for &x in &col {
        let at_most = col.iter().filter(|&&y| y <= x).count();
        if at_most as f64 / n > alpha {
            return x;
        }
    }
    *col.last().expect("nonempty column")
}

/// Square of the total cost.
pub fn squared_sum_cost(d: &CostMatrix, alt: usize) -> f64 {
    social_cost(d, alt).powi(2)
}

/// Smallest `alpha` with `S_k(x) <= alpha * S_k(y)` for every `k`, where
/// `S_k` is the sum of the `k` largest entries. `0/0` counts as 1 and
/// `positive/0` as infinity.
pub fn submajorization_ratio(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    let (xs, ys) = (sorted_desc(x), sorted_desc(y));
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut ratio: f64 = 0.0;
    for (a, b) in xs.iter().zip(&ys) {
        sx += a;
        sy += b;
        let r = if sy > 0.0 {
            sx / sy
        } else if sx > 0.0 {
            f64::INFINITY
        } else {
            1.0
        };
        ratio = ratio.max(r);
    }
    Ok(ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

pub fn lp_norm(x: &[f64], p: Norm) -> f64 {
    match p {
        Norm::L1 => x.iter().map(|a| a.abs()).sum(),
        Norm::L2 => x.iter().map(|a| a * a).sum::<f64>().sqrt(),
        Norm::LInf => x.iter().map(|a| a.abs()).fold(0.0, f64::max),
    }
}

/// Agents and alternatives at uniform points of `[0, 10]`; absolute
/// differences always form a q-metric.
pub fn random_line_metric<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CostMatrix {
    let agents: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
    let alts: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..10.0)).collect();
    let rows = agents
        .iter()
        .map(|a| alts.iter().map(|c| (a - c).abs()).collect())
        .collect();
    CostMatrix::from_rows(rows).expect("line distances are valid costs")
}

/// Rejection-sampled q-metric with entries uniform in `[0, 4]`, shifted by
/// a per-agent offset so that not every sample is trivially valid. Covers
/// metrics that do not embed in a line.
pub fn random_box_q_metric<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> CostMatrix {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let offset = rng.gen_range(0.0..2.0);
                (0..m).map(|_| offset + rng.gen_range(0.0..4.0)).collect()
            })
            .collect();
        let d = CostMatrix::from_rows(rows).expect("nonnegative entries");
        if is_q_metric(&d, 0.0).is_ok() {
            return d;
        }
    }
}
