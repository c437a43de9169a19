//! Preference profiles, their text format, and the instance families used
//! as lower-bound constructions and worked examples.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metricspace::{self, CostMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("agent {agent}: ranking is not a permutation of 1..{alternatives}")]
    NotPermutation { agent: usize, alternatives: usize },
    #[error("profile needs at least one agent and one alternative")]
    Empty,
    #[error("expected {expected} rankings, found {found}")]
    WrongAgentCount { expected: usize, found: usize },
    #[error("metric is inconsistent with the profile: {0}")]
    InconsistentMetric(String),
    #[error("invalid generator parameter: {0}")]
    BadParameter(String),
}

/// Strict rankings, one per agent, most-preferred first. Alternatives and
/// agents are 0-based here and 1-based in files.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreferenceProfile {
    num_alternatives: usize,
    rankings: Vec<Vec<usize>>,
    positions: Vec<Vec<usize>>,
}

impl PreferenceProfile {
    pub fn new(num_alternatives: usize, rankings: Vec<Vec<usize>>) -> Result<Self, ProfileError> {
        if num_alternatives == 0 || rankings.is_empty() {
            return Err(ProfileError::Empty);
        }
        let mut positions = Vec::with_capacity(rankings.len());
        for (agent, ranking) in rankings.iter().enumerate() {
            let bad = ProfileError::NotPermutation {
                agent,
                alternatives: num_alternatives,
            };
            if ranking.len() != num_alternatives {
                return Err(bad);
            }
            let mut pos = vec![usize::MAX; num_alternatives];
            for (t, &c) in ranking.iter().enumerate() {
                if c >= num_alternatives || pos[c] != usize::MAX {
                    return Err(bad);
                }
                pos[c] = t;
            }
            positions.push(pos);
        }
        Ok(Self {
            num_alternatives,
            rankings,
            positions,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.rankings.len()
    }

    pub fn num_alternatives(&self) -> usize {
        self.num_alternatives
    }

    pub fn rankings(&self) -> &[Vec<usize>] {
        &self.rankings
    }

    pub fn ranking(&self, agent: usize) -> &[usize] {
        &self.rankings[agent]
    }

    /// Rank of `alt` in `agent`'s ordering, 0 for the top choice.
    pub fn position(&self, agent: usize, alt: usize) -> usize {
        self.positions[agent][alt]
    }

    pub fn prefers(&self, agent: usize, a: usize, b: usize) -> bool {
        self.positions[agent][a] < self.positions[agent][b]
    }

    pub fn top(&self, agent: usize) -> usize {
        self.rankings[agent][0]
    }

    /// True when some agent ranks `a` above `b`.
    pub fn someone_prefers(&self, a: usize, b: usize) -> bool {
        (0..self.num_agents()).any(|v| self.prefers(v, a, b))
    }

    /// Same profile with agents reordered: agent `i` of the result is agent
    /// `order[i]` of `self`.
    pub fn permute_agents(&self, order: &[usize]) -> Self {
        let rankings = order.iter().map(|&v| self.rankings[v].clone()).collect();
        Self::new(self.num_alternatives, rankings).expect("permutation of a valid profile")
    }

    /// Same profile with alternative `c` renamed to `relabel[c]`.
    pub fn relabel_alternatives(&self, relabel: &[usize]) -> Self {
        let rankings = self
            .rankings
            .iter()
            .map(|r| r.iter().map(|&c| relabel[c]).collect())
            .collect();
        Self::new(self.num_alternatives, rankings).expect("relabeling of a valid profile")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.num_agents(), self.num_alternatives);
        for r in &self.rankings {
            let line: Vec<String> = r.iter().map(|c| (c + 1).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_profile(text: &str) -> Result<PreferenceProfile, ProfileError> {
    let mut lines = data_lines(text);
    let (hline, header) = lines.next().ok_or(ProfileError::Parse {
        line: 1,
        message: "missing \"N M\" header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| ProfileError::Parse {
            line: hline,
            message: format!("bad header: {e}"),
        })?;
    let [n, m] = dims[..] else {
        return Err(ProfileError::Parse {
            line: hline,
            message: "header must be \"N M\"".into(),
        });
    };
    if n == 0 || m == 0 {
        return Err(ProfileError::Empty);
    }
    let mut rankings = Vec::with_capacity(n);
    for (line, l) in lines {
        if rankings.len() == n {
            return Err(ProfileError::Parse {
                line,
                message: format!("more than {n} rankings"),
            });
        }
        let row: Vec<usize> = l
            .split_whitespace()
            .map(|t| match t.parse::<usize>() {
                Ok(c) if c >= 1 => Ok(c - 1),
                Ok(_) => Err("alternative index must be at least 1".to_string()),
                Err(e) => Err(format!("bad alternative {t:?}: {e}")),
            })
            .collect::<Result<_, _>>()
            .map_err(|message| ProfileError::Parse { line, message })?;
        rankings.push(row);
    }
    if rankings.len() != n {
        return Err(ProfileError::WrongAgentCount {
            expected: n,
            found: rankings.len(),
        });
    }
    PreferenceProfile::new(m, rankings)
}

pub fn serialize_profile(profile: &PreferenceProfile) -> String {
    profile.to_text()
}

/// `N_c`, the number of agents ranking each alternative first.
pub fn top_choice_counts(profile: &PreferenceProfile) -> Vec<usize> {
    let mut counts = vec![0; profile.num_alternatives()];
    for v in 0..profile.num_agents() {
        counts[profile.top(v)] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub name: String,
    pub params: Vec<(String, String)>,
}

impl GeneratorMeta {
    fn new(name: &str, params: &[(&str, String)]) -> Self {
        Self {
            name: name.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        }
    }
}

/// A profile together with the witness metric its construction comes with.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInstance {
    pub profile: PreferenceProfile,
    pub metric: Option<CostMatrix>,
    pub meta: GeneratorMeta,
}

impl LabeledInstance {
    pub fn new(
        profile: PreferenceProfile,
        metric: Option<CostMatrix>,
        meta: GeneratorMeta,
    ) -> Result<Self, ProfileError> {
        if let Some(d) = &metric {
            if d.num_agents() != profile.num_agents()
                || d.num_alternatives() != profile.num_alternatives()
            {
                return Err(ProfileError::InconsistentMetric(format!(
                    "metric is {}x{}, profile is {}x{}",
                    d.num_agents(),
                    d.num_alternatives(),
                    profile.num_agents(),
                    profile.num_alternatives()
                )));
            }
            if let Err(w) = metricspace::is_consistent(d, &profile, metricspace::DEFAULT_TOL) {
                return Err(ProfileError::InconsistentMetric(format!(
                    "agent {} has d(c{}) > d(c{})",
                    w.agent + 1,
                    w.preferred + 1,
                    w.other + 1
                )));
            }
        }
        Ok(Self {
            profile,
            metric,
            meta,
        })
    }

    /// The attached metric; every built-in generator provides one.
    pub fn witness(&self) -> &CostMatrix {
        self.metric.as_ref().expect("instance carries a metric")
    }
}

/// Orders alternatives by cost, breaking ties by the given priority list.
fn rank_by_cost(costs: &[f64], tie_order: &[usize]) -> Vec<usize> {
    let mut r = tie_order.to_vec();
    r.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    r
}

fn build(
    rankings: Vec<Vec<usize>>,
    rows: Vec<Vec<f64>>,
    meta: GeneratorMeta,
) -> Result<LabeledInstance, ProfileError> {
    let m = rows[0].len();
    let profile = PreferenceProfile::new(m, rankings)?;
    let metric = CostMatrix::from_rows(rows)
        .map_err(|e| ProfileError::InconsistentMetric(e.to_string()))?;
    LabeledInstance::new(profile, Some(metric), meta)
}

/// The profile a cost matrix induces: each agent ranks alternatives by
/// cost, lower index first among ties.
pub fn induced_profile(d: &CostMatrix) -> PreferenceProfile {
    let ids: Vec<usize> = (0..d.num_alternatives()).collect();
    let rankings = (0..d.num_agents())
        .map(|v| rank_by_cost(d.row(v), &ids))
        .collect();
    PreferenceProfile::new(d.num_alternatives(), rankings).expect("sorting yields permutations")
}

/// Three agents, three alternatives, with the unit-edge shortest-path costs.
pub fn gen_warmup() -> LabeledInstance {
    let rankings = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]];
    let rows = vec![
        vec![1.0, 1.0, 1.0],
        vec![3.0, 1.0, 1.0],
        vec![2.0, 2.0, 0.0],
    ];
    build(rankings, rows, GeneratorMeta::new("warmup", &[])).expect("fixed fixture is valid")
}

/// Two coupled cyclic orders over five alternatives, pivoted about `c3`:
/// `n` copies of each coupled agent and `n + 1` agents ranking `c1..c5`.
pub fn gen_coupling(n: usize) -> Result<LabeledInstance, ProfileError> {
    if n == 0 {
        return Err(ProfileError::BadParameter("coupling needs n >= 1".into()));
    }
    let first = (vec![3, 4, 1, 2, 0], vec![5.0, 3.0, 3.0, 1.0, 1.0]);
    let second = (vec![4, 2, 3, 0, 1], vec![4.0, 4.0, 2.0, 2.0, 0.0]);
    let neutral = (vec![0, 1, 2, 3, 4], vec![2.0; 5]);
    let mut rankings = Vec::new();
    let mut rows = Vec::new();
    for (block, copies) in [(&first, n), (&second, n), (&neutral, n + 1)] {
        for _ in 0..copies {
            rankings.push(block.0.clone());
            rows.push(block.1.clone());
        }
    }
    build(
        rankings,
        rows,
        GeneratorMeta::new("coupling", &[("n", n.to_string())]),
    )
}

/// The `n + 2` agent, `2n + 1` alternative family on which Ranked Pairs and
/// Schulze pick `c1` while `c_{2n+1}` is cheaper by a factor approaching 5.
pub fn gen_rp_lower(n: usize) -> Result<LabeledInstance, ProfileError> {
    if n < 2 {
        return Err(ProfileError::BadParameter("rp-lower needs n >= 2".into()));
    }
    let m = 2 * n + 1;
    let mut rankings = vec![(0..m).collect::<Vec<_>>(); 2];
    let mut rows = vec![vec![2.0; m]; 2];
    for i in 1..=n {
        // 1-based alternative ranges; cost tier order follows the ranking.
        let near = (n + i + 1)..=(2 * n + 1);
        let middle = (i + 1)..=(n + i);
        let far = 1..=i;
        let ranking: Vec<usize> = near
            .clone()
            .chain(middle.clone())
            .chain(far.clone())
            .map(|j| j - 1)
            .collect();
        let mut row = vec![0.0; m];
        for j in near {
            row[j - 1] = 1.0;
        }
        for j in middle {
            row[j - 1] = 3.0;
        }
        for j in far {
            row[j - 1] = 5.0;
        }
        rankings.push(ranking);
        rows.push(row);
    }
    build(
        rankings,
        rows,
        GeneratorMeta::new("rp-lower", &[("n", n.to_string())]),
    )
}

/// The fully symmetric weighted tournament on `m + 1` alternatives
/// (`c*` is index 0, `c_i` is index `i`) with `2m` agents.
pub fn gen_rand_tourney(m: usize) -> Result<LabeledInstance, ProfileError> {
    if m < 2 {
        return Err(ProfileError::BadParameter("rand-tourney needs m >= 2".into()));
    }
    let mut rankings = Vec::with_capacity(2 * m);
    let mut rows = Vec::with_capacity(2 * m);
    let cycle = |i: usize| -> Vec<usize> { (0..m).map(|t| 1 + (i - 1 + t) % m).collect() };
    for i in 1..=m {
        let mut r = vec![0];
        r.extend(cycle(i));
        rankings.push(r);
        let mut row = vec![2.0; m + 1];
        row[0] = 0.0;
        rows.push(row);
    }
    for i in 1..=m {
        let mut r: Vec<usize> = cycle(i).into_iter().rev().collect();
        r.push(0);
        rankings.push(r);
        rows.push(vec![1.0; m + 1]);
    }
    build(
        rankings,
        rows,
        GeneratorMeta::new("rand-tourney", &[("m", m.to_string())]),
    )
}

/// Two equal groups over two alternatives: group V is indifferent in cost
/// (1, 1), group U pays 1 for `c1` and `eps` for `c2`.
pub fn gen_percentile_example(half: usize, eps: f64) -> Result<LabeledInstance, ProfileError> {
    if half == 0 || !(eps > 0.0 && eps.is_finite()) {
        return Err(ProfileError::BadParameter(
            "percentile example needs half >= 1 and eps > 0".into(),
        ));
    }
    let mut rankings = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..half {
        rankings.push(vec![0, 1]);
        rows.push(vec![1.0, 1.0]);
    }
    for _ in 0..half {
        // U's cheaper alternative is c2, so U must rank it first.
        rankings.push(vec![1, 0]);
        rows.push(vec![1.0, eps]);
    }
    build(
        rankings,
        rows,
        GeneratorMeta::new(
            "percentile-example",
            &[("half", half.to_string()), ("eps", eps.to_string())],
        ),
    )
}

/// Alternatives at 0 and 1 on a line, `n1` agents at 0 and `n2` at 1.
pub fn gen_convex_example(n1: usize, n2: usize) -> Result<LabeledInstance, ProfileError> {
    if n2 == 0 || n1 < n2 {
        return Err(ProfileError::BadParameter(
            "convex example needs n1 >= n2 >= 1".into(),
        ));
    }
    let mut rankings = Vec::new();
    let mut rows = Vec::new();
    for _ in 0..n1 {
        rankings.push(vec![0, 1]);
        rows.push(vec![0.0, 1.0]);
    }
    for _ in 0..n2 {
        rankings.push(vec![1, 0]);
        rows.push(vec![1.0, 0.0]);
    }
    build(
        rankings,
        rows,
        GeneratorMeta::new(
            "convex-example",
            &[("n1", n1.to_string()), ("n2", n2.to_string())],
        ),
    )
}

/// Uniformly random strict rankings.
pub fn random_profile<R: Rng + ?Sized>(
    rng: &mut R,
    num_agents: usize,
    num_alternatives: usize,
) -> PreferenceProfile {
    let rankings = (0..num_agents)
        .map(|_| {
            let mut r: Vec<usize> = (0..num_alternatives).collect();
            r.shuffle(rng);
            r
        })
        .collect();
    PreferenceProfile::new(num_alternatives, rankings).expect("random permutations are valid")
}

/// Random profile whose agents and alternatives sit at random points of the
/// segment `[0, 10]`; rankings are induced by distance, so the returned
/// metric is consistent by construction.
pub fn random_line_instance(seed: u64, num_agents: usize, num_alternatives: usize) -> LabeledInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents: Vec<f64> = (0..num_agents).map(|_| rng.gen_range(0.0..10.0)).collect();
    let alts: Vec<f64> = (0..num_alternatives)
        .map(|_| rng.gen_range(0.0..10.0))
        .collect();
    let rows: Vec<Vec<f64>> = agents
        .iter()
        .map(|a| alts.iter().map(|c| (a - c).abs()).collect())
        .collect();
    let ids: Vec<usize> = (0..num_alternatives).collect();
    let rankings = rows.iter().map(|row| rank_by_cost(row, &ids)).collect();
    build(
        rankings,
        rows,
        GeneratorMeta::new(
            "random-line",
            &[
                ("seed", seed.to_string()),
                ("n", num_agents.to_string()),
                ("m", num_alternatives.to_string()),
            ],
        ),
    )
    .expect("line metrics are consistent with their induced rankings")
}

/// Seeded uniformly random profile.
pub fn gen_random(seed: u64, num_agents: usize, num_alternatives: usize) -> LabeledInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = random_profile(&mut rng, num_agents, num_alternatives);
    LabeledInstance {
        profile,
        metric: None,
        meta: GeneratorMeta::new(
            "random",
            &[
                ("seed", seed.to_string()),
                ("n", num_agents.to_string()),
                ("m", num_alternatives.to_string()),
            ],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metricspace::{is_q_metric, social_cost, DEFAULT_TOL};

    #[test]
    fn parses_warmup_profile() {
        let p = parse_profile("3 3\n1 2 3\n2 3 1\n3 1 2\n").unwrap();
        assert_eq!(p, gen_warmup().profile);
    }

    #[test]
    fn parses_single_agent_single_alternative() {
        let p = parse_profile("1 1\n1\n").unwrap();
        assert_eq!((p.num_agents(), p.num_alternatives()), (1, 1));
    }

    #[test]
    fn rejects_non_permutation_row() {
        let err = parse_profile("2 2\n1 1\n2 1\n").unwrap_err();
        assert_eq!(
            err,
            ProfileError::NotPermutation {
                agent: 0,
                alternatives: 2
            }
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_profile("# comment\n2 2\n1 2\n1 x\n").unwrap_err();
        assert!(matches!(err, ProfileError::Parse { line: 4, .. }), "{err:?}");
        let err = parse_profile("2 2\n1 2\n").unwrap_err();
        assert!(matches!(err, ProfileError::WrongAgentCount { .. }));
        let err = parse_profile("").unwrap_err();
        assert!(matches!(err, ProfileError::Parse { line: 1, .. }));
        let err = parse_profile("1 2\n0 1\n").unwrap_err();
        assert!(matches!(err, ProfileError::Parse { line: 2, .. }));
    }

    #[test]
    fn comments_are_skipped() {
        let p = parse_profile("# warm-up\n3 3\n1 2 3\n# middle\n2 3 1\n3 1 2\n").unwrap();
        assert_eq!(p.to_text(), "3 3\n1 2 3\n2 3 1\n3 1 2\n");
    }

    #[test]
    fn top_choice_counts_examples() {
        assert_eq!(top_choice_counts(&gen_warmup().profile), vec![1, 1, 1]);
        let unanimous = PreferenceProfile::new(2, vec![vec![0, 1]; 4]).unwrap();
        assert_eq!(top_choice_counts(&unanimous), vec![4, 0]);
        // c* tops all of V; u1 tops c2 (ranks c2 > c1 > c*), u2 tops c1.
        let t3 = gen_rand_tourney(2).unwrap();
        assert_eq!(top_choice_counts(&t3.profile), vec![2, 1, 1]);
    }

    #[test]
    fn warmup_fixture() {
        let w = gen_warmup();
        assert_eq!(w.profile.num_agents(), 3);
        assert_eq!(w.witness().row(1), &[3.0, 1.0, 1.0]);
        assert_eq!(social_cost(w.witness(), 2), 2.0);
    }

    #[test]
    fn coupling_ratios() {
        for (n, num, den) in [(3, 35.0, 11.0), (1, 13.0, 5.0)] {
            let inst = gen_coupling(n).unwrap();
            let d = inst.witness();
            assert_eq!(social_cost(d, 0), num);
            assert_eq!(social_cost(d, 4), den);
            assert!(is_q_metric(d, DEFAULT_TOL).is_ok());
        }
        assert!(13.0 / 5.0 <= 3.0);
    }

    #[test]
    fn rp_lower_fixture() {
        let inst = gen_rp_lower(2).unwrap();
        let d = inst.witness();
        assert_eq!(social_cost(d, 0), 14.0);
        assert_eq!(social_cost(d, 4), 6.0);
        // v2 is agent index 3 (after v0 and v0').
        assert_eq!(d.get(3, 2), 3.0);
        assert_eq!(inst.profile.ranking(2), &[3, 4, 1, 2, 0]);
        for n in 2..=12 {
            let inst = gen_rp_lower(n).unwrap();
            assert!(is_q_metric(inst.witness(), DEFAULT_TOL).is_ok(), "n={n}");
        }
    }

    #[test]
    fn rand_tourney_column_sums() {
        for m in 2..=8 {
            let inst = gen_rand_tourney(m).unwrap();
            let d = inst.witness();
            assert_eq!(social_cost(d, 0), m as f64);
            for c in 1..=m {
                assert_eq!(social_cost(d, c), 3.0 * m as f64);
            }
            assert!(is_q_metric(d, DEFAULT_TOL).is_ok());
        }
        let inst = gen_rand_tourney(3).unwrap();
        assert_eq!(inst.profile.ranking(3), &[3, 2, 1, 0]);
        assert_eq!(inst.profile.ranking(4), &[1, 3, 2, 0]);
    }

    #[test]
    fn generator_parameter_checks() {
        assert!(gen_coupling(0).is_err());
        assert!(gen_rp_lower(1).is_err());
        assert!(gen_rand_tourney(1).is_err());
        assert!(gen_percentile_example(0, 0.1).is_err());
        assert!(gen_percentile_example(1, 0.0).is_err());
        assert!(gen_convex_example(1, 2).is_err());
    }

    #[test]
    fn labeled_instance_rejects_inconsistent_metric() {
        let p = gen_warmup().profile;
        let d = CostMatrix::from_rows(vec![
            vec![2.0, 1.0, 1.0],
            vec![3.0, 1.0, 1.0],
            vec![2.0, 2.0, 0.0],
        ])
        .unwrap();
        let err = LabeledInstance::new(p, Some(d), GeneratorMeta::new("x", &[])).unwrap_err();
        assert!(matches!(err, ProfileError::InconsistentMetric(_)));
    }

    #[test]
    fn random_line_instances_are_consistent_q_metrics() {
        for seed in 0..50 {
            let inst = random_line_instance(seed, 5, 4);
            assert!(is_q_metric(inst.witness(), DEFAULT_TOL).is_ok());
        }
    }

    #[test]
    fn relabel_and_permute() {
        let p = gen_warmup().profile;
        let q = p.permute_agents(&[2, 0, 1]);
        assert_eq!(q.ranking(0), p.ranking(2));
        let r = p.relabel_alternatives(&[1, 2, 0]);
        assert_eq!(r.ranking(0), &[1, 2, 0]);
    }
}
