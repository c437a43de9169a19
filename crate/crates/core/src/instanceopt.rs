//! Instance-optimal deterministic and randomized choices, and the value of
//! the candidate-response game.

use serde::Serialize;
use thiserror::Error;

use crate::distortion::{a_det, a_rand_normal, check_distribution, DistortionError, LpConfig};
use crate::linprog::{solve_with, LinearProgram, LpError, LpOutcome, Relation};
use crate::metricspace::CostMatrix;
use crate::profile::PreferenceProfile;

/// Row maxima within this much of the minimum count as tied.
pub const ROW_TIE_TOL: f64 = 1e-7;
pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_MAX_CUTS: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("pair (c{}, c{}): {source}", .alt + 1, .opponent + 1)]
    Pair {
        alt: usize,
        opponent: usize,
        source: DistortionError,
    },
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error("master LP: {0}")]
    Master(String),
    #[error("no convergence after {} cuts (gamma = {})", .0.cuts.len(), .0.gamma)]
    NoConvergence(Box<CuttingPlaneState>),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
}

impl From<LpError> for OptError {
    fn from(e: LpError) -> Self {
        OptError::Master(e.to_string())
    }
}

/// `A(c, c')` for every ordered pair; infinite where no consistent metric
/// bounds `c` against `c'`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseDistortionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl PairwiseDistortionMatrix {
    pub fn num_alternatives(&self) -> usize {
        self.size
    }

    pub fn get(&self, alt: usize, opponent: usize) -> f64 {
        self.entries[alt * self.size + opponent]
    }

    pub fn row(&self, alt: usize) -> &[f64] {
        &self.entries[alt * self.size..(alt + 1) * self.size]
    }

    pub fn row_max(&self, alt: usize) -> f64 {
        self.row(alt).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Alternatives whose distortion is infinite.
    pub fn dominated(&self) -> Vec<bool> {
        (0..self.size).map(|c| self.row_max(c).is_infinite()).collect()
    }
}

pub fn pairwise_matrix(
    profile: &PreferenceProfile,
    cfg: &LpConfig,
) -> Result<PairwiseDistortionMatrix, OptError> {
    let m = profile.num_alternatives();
    let mut entries = vec![1.0; m * m];
    for c in 0..m {
        for e in (0..m).filter(|&e| e != c) {
            entries[c * m + e] = a_det(profile, c, e, cfg)
                .map_err(|source| OptError::Pair {
                    alt: c,
                    opponent: e,
                    source,
                })?
                .value;
        }
    }
    Ok(PairwiseDistortionMatrix { size: m, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptDet {
    pub winner: usize,
    pub value: f64,
    pub matrix: PairwiseDistortionMatrix,
}

/// The alternative minimizing its worst pairwise ratio; the lowest index
/// wins among row maxima within [`ROW_TIE_TOL`].
pub fn opt_det(profile: &PreferenceProfile, cfg: &LpConfig) -> Result<OptDet, OptError> {
    let matrix = pairwise_matrix(profile, cfg)?;
    let maxima: Vec<f64> = (0..matrix.size).map(|c| matrix.row_max(c)).collect();
    let best = maxima.iter().copied().fold(f64::INFINITY, f64::min);
    let winner = maxima
        .iter()
        .position(|&r| r <= best + ROW_TIE_TOL)
        .expect("some row attains the minimum");
    Ok(OptDet {
        winner,
        value: maxima[winner],
        matrix,
    })
}

/// Only alternatives that some agent ranks above `c` can bound `c`; the
/// remaining pairs need an LP to tell whether `A(c, c')` is finite.
pub fn dominated_alternatives(
    profile: &PreferenceProfile,
    cfg: &LpConfig,
) -> Result<Vec<bool>, OptError> {
    let m = profile.num_alternatives();
    let mut out = vec![false; m];
    for (c, flag) in out.iter_mut().enumerate() {
        for e in (0..m).filter(|&e| e != c && !profile.someone_prefers(c, e)) {
            let a = a_det(profile, c, e, cfg).map_err(|source| OptError::Pair {
                alt: c,
                opponent: e,
                source,
            })?;
            if a.value.is_infinite() {
                *flag = true;
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Separation {
    Feasible {
        max_value: f64,
    },
    ViolatedCut {
        opponent: usize,
        witness: Option<CostMatrix>,
        value: f64,
    },
}

/// Solves the cheapest-`c'` LP for every `c'` and reports the worst metric
/// if it costs `x` more than `gamma + slack`.
pub fn separation_oracle(
    profile: &PreferenceProfile,
    x: &[f64],
    gamma: f64,
    slack: f64,
    cfg: &LpConfig,
) -> Result<Separation, OptError> {
    check_distribution(profile, x)?;
    let mut worst: Option<(usize, f64, Option<CostMatrix>)> = None;
    for opponent in 0..profile.num_alternatives() {
        let Some(r) = a_rand_normal(profile, x, opponent, cfg)? else {
            continue;
        };
        if worst.as_ref().map_or(true, |(_, v, _)| r.value > *v) {
            worst = Some((opponent, r.value, r.witness));
        }
    }
    let (opponent, value, witness) = worst.expect("some alternative is cheapest under any metric");
    Ok(if value > gamma + slack {
        Separation::ViolatedCut {
            opponent,
            witness,
            value,
        }
    } else {
        Separation::Feasible { max_value: value }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuttingPlaneState {
    /// Stored metrics, each normalized so its cheapest column sums to 1.
    pub cuts: Vec<CostMatrix>,
    pub x: Vec<f64>,
    pub gamma: f64,
    pub iterations: usize,
    pub eps: f64,
    /// Master value after each solve.
    pub gamma_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptRand {
    pub x: Vec<f64>,
    /// Lower end: the master value (or bisection upper end).
    pub value: f64,
    /// Worst distortion of `x` found by the final oracle call.
    pub upper: f64,
    pub state: CuttingPlaneState,
    pub binary_search: bool,
}

fn clean_distribution(raw: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = raw.iter().map(|&p| if p > 1e-12 { p } else { 0.0 }).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|p| p / total).collect()
}

/// Master LP: minimize `γ` over `x` in the simplex (zero on `banned`) with
/// one row `Σ_c x_c φ(c, d) ≤ γ` per stored metric.
fn solve_master(
    m: usize,
    banned: &[bool],
    cuts: &[CostMatrix],
    cfg: &LpConfig,
) -> Result<(Vec<f64>, f64), OptError> {
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::minimize(objective)?;
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.add_constraint(simplex, Relation::Eq, 1.0)?;
    lp.add_sparse(&[(m, 1.0)], Relation::Ge, 1.0)?;
    for c in (0..m).filter(|&c| banned[c]) {
        lp.add_sparse(&[(c, 1.0)], Relation::Le, 0.0)?;
    }
    for d in cuts {
        let mut row: Vec<f64> = (0..m).map(|c| d.column(c).iter().sum()).collect();
        row.push(-1.0);
        lp.add_constraint(row, Relation::Le, 0.0)?;
    }
    match solve_with(&lp, &cfg.solver)? {
        LpOutcome::Optimal { value, assignment } => Ok((clean_distribution(&assignment[..m]), value)),
        other => Err(OptError::Master(format!("{:?}", other.status()))),
    }
}

/// Instance-optimal randomized choice by cutting planes over the master LP,
/// or by bisection on `γ ∈ [1, 3]` when `binary_search` is set.
pub fn opt_rand(
    profile: &PreferenceProfile,
    eps: f64,
    max_cuts: usize,
    binary_search: bool,
    cfg: &LpConfig,
) -> Result<OptRand, OptError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(OptError::BadEpsilon(eps));
    }
    let m = profile.num_alternatives();
    let banned = dominated_alternatives(profile, cfg)?;
    let mut state = CuttingPlaneState {
        cuts: Vec::new(),
        x: Vec::new(),
        gamma: 1.0,
        iterations: 0,
        eps,
        gamma_history: Vec::new(),
    };

    // Refines the cut pool until the master optimum passes the oracle, or
    // the master value alone exceeds `give_up`.
    let settle = |state: &mut CuttingPlaneState, give_up: f64| -> Result<Option<f64>, OptError> {
        loop {
            let (x, gamma) = solve_master(m, &banned, &state.cuts, cfg)?;
            state.x = x;
            state.gamma = gamma;
            state.gamma_history.push(gamma);
            state.iterations += 1;
            if gamma > give_up {
                return Ok(None);
            }
            match separation_oracle(profile, &state.x, gamma, eps / 2.0, cfg)? {
                Separation::Feasible { max_value } => return Ok(Some(max_value)),
                Separation::ViolatedCut { witness, .. } => {
                    let witness = witness.ok_or_else(|| {
                        OptError::Master("oracle reported an unbounded cut".into())
                    })?;
                    if state.cuts.len() >= max_cuts {
                        return Err(OptError::NoConvergence(Box::new(state.clone())));
                    }
                    state.cuts.push(witness);
                }
            }
        }
    };

    if !binary_search {
        let upper = settle(&mut state, f64::INFINITY)?.expect("no give-up threshold");
        return Ok(OptRand {
            x: state.x.clone(),
            value: state.gamma,
            upper,
            state,
            binary_search: false,
        });
    }

    let (mut lo, mut hi) = (1.0f64, 3.0f64);
    let mut best: Option<(Vec<f64>, f64)> = None;
    // The γ = 1 end is feasible only when some alternative is unanimous-best
    // in every metric; test it first so `lo` is a true infeasible point.
    if let Some(upper) = settle(&mut state, 1.0)? {
        best = Some((state.x.clone(), upper));
        hi = 1.0;
    }
    while hi - lo > eps {
        let mid = 0.5 * (lo + hi);
        match settle(&mut state, mid)? {
            Some(upper) => {
                hi = mid;
                best = Some((state.x.clone(), upper));
            }
            None => lo = mid,
        }
    }
    let (x, upper) = match best {
        Some(b) => b,
        None => {
            let upper = settle(&mut state, hi)?.ok_or_else(|| {
                OptError::Master(format!("no distribution reaches distortion {hi}"))
            })?;
            (state.x.clone(), upper)
        }
    };
    Ok(OptRand {
        x,
        value: hi,
        upper,
        state,
        binary_search: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateResponse {
    pub x: Vec<f64>,
    pub value: f64,
    pub matrix: PairwiseDistortionMatrix,
}

/// `min_x max_{c'} Σ_c x_c A(c, c')` over the simplex.
pub fn candidate_response_value(
    profile: &PreferenceProfile,
    cfg: &LpConfig,
) -> Result<CandidateResponse, OptError> {
    let matrix = pairwise_matrix(profile, cfg)?;
    let m = matrix.size;
    let banned = matrix.dominated();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::minimize(objective)?;
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.add_constraint(simplex, Relation::Eq, 1.0)?;
    for c in (0..m).filter(|&c| banned[c]) {
        lp.add_sparse(&[(c, 1.0)], Relation::Le, 0.0)?;
    }
    for e in 0..m {
        let mut row: Vec<f64> = (0..m)
            .map(|c| if banned[c] { 0.0 } else { matrix.get(c, e) })
            .collect();
        row.push(-1.0);
        lp.add_constraint(row, Relation::Le, 0.0)?;
    }
    match solve_with(&lp, &cfg.solver)? {
        LpOutcome::Optimal { value, assignment } => Ok(CandidateResponse {
            x: clean_distribution(&assignment[..m]),
            value,
            matrix,
        }),
        other => Err(OptError::Master(format!("{:?}", other.status()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::{dist_det, dist_rand, point_mass};
    use crate::profile::{gen_rp_lower, gen_warmup};
    use crate::rules::{ranked_pairs, EdgeTieBreak};

    fn unanimous() -> PreferenceProfile {
        PreferenceProfile::new(3, vec![vec![1, 0, 2]; 4]).unwrap()
    }

    #[test]
    fn warmup_opt_det() {
        let r = opt_det(&gen_warmup().profile, &LpConfig::default()).unwrap();
        assert_eq!(r.winner, 0);
        assert!((r.value - 3.0).abs() < 1e-7);
        for c in 0..3 {
            assert!((r.matrix.row_max(c) - 3.0).abs() < 1e-7);
        }
    }

    #[test]
    fn unanimous_opt_det_and_response() {
        let cfg = LpConfig::default();
        let r = opt_det(&unanimous(), &cfg).unwrap();
        assert_eq!((r.winner, r.value), (1, 1.0));
        let cr = candidate_response_value(&unanimous(), &cfg).unwrap();
        assert!((cr.value - 1.0).abs() < 1e-9);
        assert!((cr.x[1] - 1.0).abs() < 1e-9);
        let o = opt_rand(&unanimous(), DEFAULT_EPS, 50, false, &cfg).unwrap();
        assert!((o.value - 1.0).abs() < 1e-6 && (o.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rp_lower_opt_det_below_rule() {
        let cfg = LpConfig::default();
        let p = gen_rp_lower(2).unwrap().profile;
        let w = ranked_pairs(&p, &EdgeTieBreak::lexicographic(5)).winner().unwrap();
        let r = opt_det(&p, &cfg).unwrap();
        assert!(r.value <= dist_det(&p, w, &cfg).unwrap().value + 1e-6);
    }

    #[test]
    fn separation_on_warmup() {
        let cfg = LpConfig::default();
        let p = gen_warmup().profile;
        let s = separation_oracle(&p, &[1.0 / 3.0; 3], 2.0, 1e-6, &cfg).unwrap();
        assert!(matches!(s, Separation::Feasible { .. }), "{s:?}");
        let s = separation_oracle(&p, &point_mass(3, 0), 2.5, 1e-6, &cfg).unwrap();
        let Separation::ViolatedCut { value, witness, opponent } = s else {
            panic!("expected a cut")
        };
        assert!((value - 3.0).abs() < 1e-7);
        let d = witness.unwrap();
        assert!((d.column(opponent).iter().sum::<f64>() - 1.0).abs() < 1e-7);
        for c in 0..3 {
            assert!(d.column(c).iter().sum::<f64>() >= 1.0 - 1e-7);
        }
    }

    #[test]
    fn warmup_opt_rand_both_modes() {
        let cfg = LpConfig::default();
        let p = gen_warmup().profile;
        let eps = DEFAULT_EPS;
        let cp = opt_rand(&p, eps, DEFAULT_MAX_CUTS, false, &cfg).unwrap();
        assert!((cp.value - 2.0).abs() <= eps, "{}", cp.value);
        for &xc in &cp.x {
            assert!((xc - 1.0 / 3.0).abs() <= eps);
        }
        let hist = &cp.state.gamma_history;
        assert!(hist.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        let bs = opt_rand(&p, eps, DEFAULT_MAX_CUTS, true, &cfg).unwrap();
        assert!((bs.value - cp.value).abs() <= 2.0 * eps);
        let check = dist_rand(&p, &cp.x, &cfg).unwrap();
        assert!(check.value <= cp.value + eps);
    }

    #[test]
    fn single_alternative() {
        let p = PreferenceProfile::new(1, vec![vec![0]; 3]).unwrap();
        let cfg = LpConfig::default();
        let o = opt_rand(&p, DEFAULT_EPS, 10, false, &cfg).unwrap();
        assert_eq!(o.x, vec![1.0]);
        assert!((o.value - 1.0).abs() < 1e-9);
        assert!((candidate_response_value(&p, &cfg).unwrap().value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bad_epsilon() {
        let err = opt_rand(&gen_warmup().profile, 0.0, 10, false, &LpConfig::default());
        assert_eq!(err.unwrap_err(), OptError::BadEpsilon(0.0));
    }
}
