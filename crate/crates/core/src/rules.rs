//! Copeland, Ranked Pairs, Schulze and Randomized Dictatorship.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::profile::{top_choice_counts, PreferenceProfile};
use crate::tournament::{
    build_weighted, majority_from_weights, TieBreak, TieBreakError, WeightedTournament,
};

/// Priority over ordered pairs `(i, j)` used by Ranked Pairs among edges of
/// equal weight; earlier is locked first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeTieBreak {
    size: usize,
    rank: Vec<usize>,
}

impl EdgeTieBreak {
    pub fn lexicographic(m: usize) -> Self {
        let order = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self::from_order(m, order).expect("lexicographic order covers every pair")
    }

    pub fn from_order(m: usize, order: Vec<(usize, usize)>) -> Result<Self, TieBreakError> {
        let pairs = m * m.saturating_sub(1);
        let mut rank = vec![usize::MAX; m * m];
        if order.len() != pairs {
            return Err(TieBreakError::NotEdgePermutation(pairs));
        }
        for (r, &(i, j)) in order.iter().enumerate() {
            if i >= m || j >= m || i == j || rank[i * m + j] != usize::MAX {
                return Err(TieBreakError::NotEdgePermutation(pairs));
            }
            rank[i * m + j] = r;
        }
        Ok(Self { size: m, rank })
    }

    pub fn rank(&self, i: usize, j: usize) -> usize {
        self.rank[i * self.size + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Audit {
    CopelandScores(Vec<usize>),
    /// Edges in processing order with their weight and whether they were locked.
    LockedEdges(Vec<EdgeDecision>),
    /// Strongest-path strengths; `None` on the diagonal.
    PathStrengths(Vec<Vec<Option<usize>>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeDecision {
    pub from: usize,
    pub to: usize,
    pub weight: usize,
    pub locked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleOutcome {
    Winner { winner: usize, audit: Audit },
    Lottery { distribution: Vec<f64> },
}

impl RuleOutcome {
    pub fn winner(&self) -> Option<usize> {
        match self {
            RuleOutcome::Winner { winner, .. } => Some(*winner),
            RuleOutcome::Lottery { .. } => None,
        }
    }

    /// Point mass for deterministic outcomes.
    pub fn distribution(&self, m: usize) -> Vec<f64> {
        match self {
            RuleOutcome::Winner { winner, .. } => {
                let mut x = vec![0.0; m];
                x[*winner] = 1.0;
                x
            }
            RuleOutcome::Lottery { distribution } => distribution.clone(),
        }
    }
}

pub fn copeland(profile: &PreferenceProfile, tie_break: &TieBreak) -> RuleOutcome {
    copeland_from_weights(&build_weighted(profile), tie_break)
}

pub fn copeland_from_weights(w: &WeightedTournament, tie_break: &TieBreak) -> RuleOutcome {
    let g = majority_from_weights(w, tie_break);
    let m = g.num_alternatives();
    let scores: Vec<usize> = (0..m).map(|c| g.out_degree(c)).collect();
    let best = *scores.iter().max().expect("at least one alternative");
    let winner = tie_break
        .pick((0..m).filter(|&c| scores[c] == best))
        .expect("some alternative attains the max");
    RuleOutcome::Winner {
        winner,
        audit: Audit::CopelandScores(scores),
    }
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(x) = stack.pop() {
        if x == to {
            return true;
        }
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    false
}

/// Locks edges heaviest first, skipping any edge that would close a cycle,
/// and returns the source of the resulting order.
pub fn ranked_pairs(profile: &PreferenceProfile, edge_tie_break: &EdgeTieBreak) -> RuleOutcome {
    ranked_pairs_from_weights(&build_weighted(profile), edge_tie_break)
}

pub fn ranked_pairs_from_weights(
    w: &WeightedTournament,
    edge_tie_break: &EdgeTieBreak,
) -> RuleOutcome {
    let m = w.num_alternatives();
    let mut edges: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    edges.sort_by_key(|&(i, j)| (std::cmp::Reverse(w.weight(i, j)), edge_tie_break.rank(i, j)));

    let mut adj = vec![Vec::new(); m];
    let mut indegree = vec![0usize; m];
    let mut trail = Vec::with_capacity(edges.len());
    for (i, j) in edges {
        let locked = !reaches(&adj, j, i);
        if locked {
            adj[i].push(j);
            indegree[j] += 1;
        }
        trail.push(EdgeDecision {
            from: i,
            to: j,
            weight: w.weight(i, j),
            locked,
        });
    }
    let sources: Vec<usize> = (0..m).filter(|&c| indegree[c] == 0).collect();
    assert_eq!(
        sources.len(),
        1,
        "a fully processed ranked-pairs graph is a transitive tournament"
    );
    RuleOutcome::Winner {
        winner: sources[0],
        audit: Audit::LockedEdges(trail),
    }
}

/// Every winner Ranked Pairs can return as the order among equal-weight
/// edges varies, found by exploring lock states class by class.
pub fn ranked_pairs_possible_winners(w: &WeightedTournament) -> Vec<usize> {
    let m = w.num_alternatives();
    assert!(m <= 11, "lock states are packed into a u128");
    let bit = |i: usize, j: usize| 1u128 << (i * m + j);
    let reaches = |adj: u128, from: usize, to: usize| {
        let mut seen = 1u32 << from;
        let mut stack = vec![from];
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            for y in 0..m {
                if adj & bit(x, y) != 0 && seen & (1 << y) == 0 {
                    seen |= 1 << y;
                    stack.push(y);
                }
            }
        }
        false
    };
    let mut classes: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for i in 0..m {
        for j in (0..m).filter(|&j| j != i) {
            classes.entry(w.weight(i, j)).or_default().push((i, j));
        }
    }
    let mut states: HashSet<u128> = HashSet::from([0]);
    for edges in classes.values().rev() {
        assert!(edges.len() < 32, "equal-weight class too large to enumerate");
        let full = (1u32 << edges.len()) - 1;
        let mut next = HashSet::new();
        let mut seen: HashSet<(u32, u128)> = HashSet::new();
        let mut stack: Vec<(u32, u128)> = states.iter().map(|&a| (0, a)).collect();
        while let Some((done, adj)) = stack.pop() {
            if !seen.insert((done, adj)) {
                continue;
            }
            if done == full {
                next.insert(adj);
                continue;
            }
            for (k, &(i, j)) in edges.iter().enumerate() {
                if done & (1 << k) == 0 {
                    let adj = if reaches(adj, j, i) { adj } else { adj | bit(i, j) };
                    stack.push((done | (1 << k), adj));
                }
            }
        }
        states = next;
    }
    let mut winners: Vec<usize> = states
        .iter()
        .map(|&adj| {
            (0..m)
                .find(|&c| (0..m).all(|i| adj & bit(i, c) == 0))
                .expect("a fully locked graph has a source")
        })
        .collect();
    winners.sort_unstable();
    winners.dedup();
    winners
}

/// Widest-path strengths over edges with `w(a,b) >= w(b,a)`; 0 when no
/// path exists.
pub fn path_strengths(w: &WeightedTournament) -> Vec<Vec<Option<usize>>> {
    let m = w.num_alternatives();
    let mut p = vec![vec![0usize; m]; m];
    for (i, row) in p.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            if i != j && w.weight(i, j) >= w.weight(j, i) {
                *cell = w.weight(i, j);
            }
        }
    }
    for k in 0..m {
        for i in 0..m {
            if i == k {
                continue;
            }
            for j in 0..m {
                if j == k || j == i {
                    continue;
                }
                let via = p[i][k].min(p[k][j]);
                if via > p[i][j] {
                    p[i][j] = via;
                }
            }
        }
    }
    p.into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, x)| (i != j).then_some(x))
                .collect()
        })
        .collect()
}

pub fn schulze(profile: &PreferenceProfile, tie_break: &TieBreak) -> RuleOutcome {
    schulze_from_weights(&build_weighted(profile), tie_break)
}

pub fn schulze_from_weights(w: &WeightedTournament, tie_break: &TieBreak) -> RuleOutcome {
    let m = w.num_alternatives();
    let p = path_strengths(w);
    let strength = |a: usize, b: usize| p[a][b].expect("off-diagonal");
    let winners = (0..m).filter(|&c| (0..m).all(|d| d == c || strength(c, d) >= strength(d, c)));
    let winner = tie_break
        .pick(winners)
        .expect("the strongest-path relation always has a maximal element");
    RuleOutcome::Winner {
        winner,
        audit: Audit::PathStrengths(p),
    }
}

/// Probability `N_c / N` on each alternative.
pub fn randomized_dictatorship(profile: &PreferenceProfile) -> RuleOutcome {
    let n = profile.num_agents() as f64;
    RuleOutcome::Lottery {
        distribution: top_choice_counts(profile)
            .into_iter()
            .map(|k| k as f64 / n)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Copeland,
    RankedPairs,
    Schulze,
    RandomizedDictatorship,
}

impl Rule {
    pub const ALL: [Rule; 4] = [
        Rule::Copeland,
        Rule::RankedPairs,
        Rule::Schulze,
        Rule::RandomizedDictatorship,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Copeland => "copeland",
            Rule::RankedPairs => "ranked-pairs",
            Rule::Schulze => "schulze",
            Rule::RandomizedDictatorship => "rd",
        }
    }

    pub fn is_randomized(self) -> bool {
        self == Rule::RandomizedDictatorship
    }

    /// Runs the rule; `tie_break` doubles as the Ranked Pairs edge order
    /// through [`edge_order_from`].
    pub fn apply(self, profile: &PreferenceProfile, tie_break: &TieBreak) -> RuleOutcome {
        match self {
            Rule::Copeland => copeland(profile, tie_break),
            Rule::RankedPairs => ranked_pairs(profile, &edge_order_from(tie_break)),
            Rule::Schulze => schulze(profile, tie_break),
            Rule::RandomizedDictatorship => randomized_dictatorship(profile),
        }
    }
}

/// Lexicographic order on pairs after renaming alternatives by their
/// tie-break priority.
pub fn edge_order_from(tie_break: &TieBreak) -> EdgeTieBreak {
    let order = tie_break.order();
    let pairs = order
        .iter()
        .flat_map(|&i| order.iter().filter(move |&&j| j != i).map(move |&j| (i, j)))
        .collect();
    EdgeTieBreak::from_order(order.len(), pairs).expect("derived from a permutation")
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "copeland" => Ok(Rule::Copeland),
            "ranked-pairs" | "rp" => Ok(Rule::RankedPairs),
            "schulze" => Ok(Rule::Schulze),
            "rd" | "randomized-dictatorship" => Ok(Rule::RandomizedDictatorship),
            other => Err(format!("unknown rule {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{gen_convex_example, gen_rp_lower, gen_warmup};

    fn unanimous() -> PreferenceProfile {
        PreferenceProfile::new(3, vec![vec![1, 0, 2]; 4]).unwrap()
    }

    #[test]
    fn copeland_examples() {
        let out = copeland(&gen_warmup().profile, &TieBreak::lexicographic(3));
        assert_eq!(out.winner(), Some(0));
        assert_eq!(
            out,
            RuleOutcome::Winner {
                winner: 0,
                audit: Audit::CopelandScores(vec![1, 1, 1])
            }
        );
        assert_eq!(
            copeland(&unanimous(), &TieBreak::lexicographic(3)).winner(),
            Some(1)
        );
        let p = gen_rp_lower(2).unwrap().profile;
        let a = copeland(&p, &TieBreak::lexicographic(5));
        let b = copeland(&p, &TieBreak::lexicographic(5));
        assert_eq!(a, b);
    }

    #[test]
    fn ranked_pairs_examples() {
        let out = ranked_pairs(&gen_warmup().profile, &EdgeTieBreak::lexicographic(3));
        assert_eq!(out.winner(), Some(0));
        let RuleOutcome::Winner {
            audit: Audit::LockedEdges(trail),
            ..
        } = out
        else {
            panic!()
        };
        // The three weight-2 edges come first; the third closes the cycle.
        let heavy: Vec<_> = trail[..3].iter().map(|e| (e.from, e.to, e.locked)).collect();
        assert_eq!(heavy, vec![(0, 1, true), (1, 2, true), (2, 0, false)]);
        assert_eq!(
            ranked_pairs(&unanimous(), &EdgeTieBreak::lexicographic(3)).winner(),
            Some(1)
        );
        for n in 2..=6 {
            let p = gen_rp_lower(n).unwrap().profile;
            let m = p.num_alternatives();
            assert_eq!(
                ranked_pairs(&p, &EdgeTieBreak::lexicographic(m)).winner(),
                Some(0)
            );
        }
    }

    #[test]
    fn schulze_examples() {
        let out = schulze(&gen_warmup().profile, &TieBreak::lexicographic(3));
        let RuleOutcome::Winner {
            winner,
            audit: Audit::PathStrengths(p),
        } = out
        else {
            panic!()
        };
        assert_eq!(winner, 0);
        assert_eq!((p[0][1], p[1][0]), (Some(2), Some(2)));
        for c in 0..3 {
            let tb = TieBreak::from_order(vec![c, (c + 1) % 3, (c + 2) % 3]).unwrap();
            assert_eq!(schulze(&gen_warmup().profile, &tb).winner(), Some(c));
        }
        assert_eq!(
            schulze(&unanimous(), &TieBreak::lexicographic(3)).winner(),
            Some(1)
        );
        for n in 2..=6 {
            let p = gen_rp_lower(n).unwrap().profile;
            let m = p.num_alternatives();
            assert_eq!(schulze(&p, &TieBreak::lexicographic(m)).winner(), Some(0));
        }
    }

    #[test]
    fn randomized_dictatorship_examples() {
        let third = 1.0 / 3.0;
        assert_eq!(
            randomized_dictatorship(&gen_warmup().profile).distribution(3),
            vec![third; 3]
        );
        assert_eq!(
            randomized_dictatorship(&unanimous()).distribution(3),
            vec![0.0, 1.0, 0.0]
        );
        let p = gen_convex_example(4, 2).unwrap().profile;
        let x = randomized_dictatorship(&p).distribution(2);
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15 && (x[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn possible_winners_cover_sampled_orders() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let w = build_weighted(&gen_warmup().profile);
        assert_eq!(ranked_pairs_possible_winners(&w), vec![0, 1, 2]);
        let p = gen_rp_lower(2).unwrap().profile;
        let w = build_weighted(&p);
        let all = ranked_pairs_possible_winners(&w);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut edges: Vec<(usize, usize)> = (0..5)
            .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        for _ in 0..200 {
            edges.shuffle(&mut rng);
            let tb = EdgeTieBreak::from_order(5, edges.clone()).unwrap();
            let got = ranked_pairs_from_weights(&w, &tb).winner().unwrap();
            assert!(all.contains(&got));
        }
    }

    #[test]
    fn edge_tie_break_validation() {
        assert!(EdgeTieBreak::from_order(2, vec![(0, 1)]).is_err());
        assert!(EdgeTieBreak::from_order(2, vec![(0, 1), (0, 1)]).is_err());
        assert!(EdgeTieBreak::from_order(2, vec![(1, 0), (0, 1)]).is_ok());
        let e = edge_order_from(&TieBreak::from_order(vec![1, 0]).unwrap());
        assert!(e.rank(1, 0) < e.rank(0, 1));
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert!("borda".parse::<Rule>().is_err());
    }
}
