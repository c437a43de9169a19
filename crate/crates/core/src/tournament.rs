//! Pairwise-majority information extracted from a profile.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::PreferenceProfile;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TieBreakError {
    #[error("tie-break order is not a permutation of {0} alternatives")]
    NotPermutation(usize),
    #[error("edge order is not a permutation of the {0} ordered pairs")]
    NotEdgePermutation(usize),
}

/// A total priority order over alternatives; earlier wins ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieBreak {
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl TieBreak {
    pub fn lexicographic(m: usize) -> Self {
        Self::from_order((0..m).collect()).expect("identity is a permutation")
    }

    pub fn from_order(order: Vec<usize>) -> Result<Self, TieBreakError> {
        let m = order.len();
        let mut rank = vec![usize::MAX; m];
        for (i, &c) in order.iter().enumerate() {
            if c >= m || rank[c] != usize::MAX {
                return Err(TieBreakError::NotPermutation(m));
            }
            rank[c] = i;
        }
        Ok(Self { order, rank })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// True when `a` is ahead of `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.rank[a] < self.rank[b]
    }

    /// The highest-priority member of `candidates`.
    pub fn pick(&self, candidates: impl IntoIterator<Item = usize>) -> Option<usize> {
        candidates.into_iter().min_by_key(|&c| self.rank[c])
    }
}

/// `w(i, j)`: the number of agents ranking `i` above `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedTournament {
    num_agents: usize,
    size: usize,
    weights: Vec<usize>,
}

impl WeightedTournament {
    pub fn num_alternatives(&self) -> usize {
        self.size
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn weight(&self, i: usize, j: usize) -> usize {
        self.weights[i * self.size + j]
    }

    /// Edge list `i j w(i,j)`, 1-based, one ordered pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for i in 0..self.size {
            for j in 0..self.size {
                if i != j {
                    let _ = writeln!(out, "{} {} {}", i + 1, j + 1, self.weight(i, j));
                }
            }
        }
        out
    }
}

pub fn build_weighted(profile: &PreferenceProfile) -> WeightedTournament {
    let m = profile.num_alternatives();
    let mut weights = vec![0; m * m];
    for ranking in profile.rankings() {
        for (t, &a) in ranking.iter().enumerate() {
            for &b in &ranking[t + 1..] {
                weights[a * m + b] += 1;
            }
        }
    }
    WeightedTournament {
        num_agents: profile.num_agents(),
        size: m,
        weights,
    }
}

/// Complete asymmetric orientation of the pairwise-majority relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityDigraph {
    size: usize,
    adjacency: Vec<bool>,
}

impl MajorityDigraph {
    pub fn num_alternatives(&self) -> usize {
        self.size
    }

    pub fn beats(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.size + j]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        (0..self.size).filter(|&j| self.beats(i, j)).count()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().filter(|&&b| b).count()
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for i in 0..self.size {
            for j in 0..self.size {
                if self.beats(i, j) {
                    let _ = writeln!(out, "{} {}", i + 1, j + 1);
                }
            }
        }
        out
    }
}

/// Edge `i -> j` iff `w(i,j) > N/2`, or `w(i,j) = N/2` and `tie_break`
/// puts `i` first.
pub fn majority_from_weights(w: &WeightedTournament, tie_break: &TieBreak) -> MajorityDigraph {
    let m = w.num_alternatives();
    let n = w.num_agents();
    let mut adjacency = vec![false; m * m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let twice = 2 * w.weight(i, j);
            adjacency[i * m + j] = twice > n || (twice == n && tie_break.prefers(i, j));
        }
    }
    MajorityDigraph { size: m, adjacency }
}

pub fn build_majority(profile: &PreferenceProfile, tie_break: &TieBreak) -> MajorityDigraph {
    majority_from_weights(&build_weighted(profile), tie_break)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{gen_rand_tourney, gen_rp_lower, gen_warmup};

    #[test]
    fn warmup_weights() {
        let w = build_weighted(&gen_warmup().profile);
        assert_eq!(w.weight(0, 1), 2);
        assert_eq!(w.weight(1, 0), 1);
    }

    #[test]
    fn rp_lower_cycle_edge_weight() {
        let w = build_weighted(&gen_rp_lower(2).unwrap().profile);
        assert_eq!(w.weight(0, 1), 3);
    }

    #[test]
    fn rand_tourney_is_fully_tied() {
        let w = build_weighted(&gen_rand_tourney(3).unwrap().profile);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(w.weight(i, j), 3);
                }
            }
        }
    }

    #[test]
    fn warmup_majority_is_three_cycle() {
        let g = build_majority(&gen_warmup().profile, &TieBreak::lexicographic(3));
        assert!(g.beats(0, 1) && g.beats(1, 2) && g.beats(2, 0));
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn unanimous_majority_is_transitive() {
        let p = PreferenceProfile::new(4, vec![vec![2, 0, 3, 1]; 3]).unwrap();
        let g = build_majority(&p, &TieBreak::lexicographic(4));
        assert_eq!(
            (0..4).map(|c| g.out_degree(c)).collect::<Vec<_>>(),
            vec![2, 0, 3, 1]
        );
    }

    #[test]
    fn ties_orient_toward_tie_break_winner() {
        let p = gen_rand_tourney(2).unwrap().profile;
        let g = build_majority(&p, &TieBreak::lexicographic(3));
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(g.beats(i, j) && !g.beats(j, i));
            }
        }
        let rev = TieBreak::from_order(vec![2, 1, 0]).unwrap();
        let g = build_majority(&p, &rev);
        assert!(g.beats(2, 0));
    }

    #[test]
    fn tie_break_validation() {
        assert!(TieBreak::from_order(vec![0, 0, 1]).is_err());
        assert!(TieBreak::from_order(vec![0, 3, 1]).is_err());
        let t = TieBreak::from_order(vec![2, 0, 1]).unwrap();
        assert_eq!(t.pick([0, 1, 2]), Some(2));
        assert_eq!(t.pick([0, 1]), Some(0));
    }

    #[test]
    fn edge_list_dump() {
        let w = build_weighted(&gen_warmup().profile);
        assert!(w.to_edge_list().starts_with("1 2 2\n1 3 1\n"));
        let g = build_majority(&gen_warmup().profile, &TieBreak::lexicographic(3));
        assert_eq!(g.to_edge_list(), "1 2\n2 3\n3 1\n");
    }
}
