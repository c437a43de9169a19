use metric_distortion::distortion::{a_det, dist_rand, ratio_at, LpConfig};
use metric_distortion::linprog::{solve, LinearProgram, LpOutcome, Relation};
use metric_distortion::metricspace::{
    is_consistent, is_q_metric, lp_norm, random_box_q_metric, submajorization_ratio, top_k_sum,
    Norm,
};
use metric_distortion::profile::{induced_profile, parse_profile, PreferenceProfile};
use metric_distortion::rules::randomized_dictatorship;
use proptest::prelude::*;
use proptest::sample::Index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn profile_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = PreferenceProfile> {
    (1..=max_n, 2..=max_m).prop_flat_map(|(n, m)| {
        let ranking = Just((0..m).collect::<Vec<_>>()).prop_shuffle();
        proptest::collection::vec(ranking, n)
            .prop_map(move |rs| PreferenceProfile::new(m, rs).unwrap())
    })
}

fn finite(v: f64, w: f64) -> bool {
    if v.is_infinite() || w.is_infinite() {
        v == w
    } else {
        (v - w).abs() <= 1e-6 * (1.0 + v.abs())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_text_round_trips(p in profile_strategy(8, 6)) {
        prop_assert_eq!(parse_profile(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn top_k_increments_shrink(xs in proptest::collection::vec(0.0f64..10.0, 1..8)) {
        let s: Vec<f64> = std::iter::once(0.0)
            .chain((1..=xs.len()).map(|k| top_k_sum(&xs, k).unwrap()))
            .collect();
        for k in 1..xs.len() {
            prop_assert!(s[k + 1] - s[k] <= s[k] - s[k - 1] + 1e-12);
        }
    }

    #[test]
    fn norms_within_submajorization(
        pairs in proptest::collection::vec((0.0f64..5.0, 0.01f64..5.0), 1..7),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let alpha = submajorization_ratio(&x, &y).unwrap();
        for p in [Norm::L1, Norm::L2, Norm::LInf] {
            prop_assert!(lp_norm(&x, p) <= alpha * lp_norm(&y, p) + 1e-9);
        }
    }

    #[test]
    fn ratio_is_scale_free(seed in any::<u64>(), n in 1usize..5, m in 2usize..5, s in 0.1f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_box_q_metric(&mut rng, n, m);
        let p = induced_profile(&d);
        prop_assert!(is_q_metric(&d, 1e-9).is_ok());
        prop_assert!(is_consistent(&d, &p, 1e-9).is_ok());
        let x = randomized_dictatorship(&p).distribution(m);
        let (a, b) = (ratio_at(&d, &x), ratio_at(&d.scaled(s), &x));
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn distortion_ignores_names(p in profile_strategy(4, 4), shift in any::<Index>(), rot in any::<Index>()) {
        let (n, m) = (p.num_agents(), p.num_alternatives());
        let cfg = LpConfig::default();
        let x = randomized_dictatorship(&p).distribution(m);
        let base = dist_rand(&p, &x, &cfg).unwrap().value;

        let k = rot.index(n);
        let order: Vec<usize> = (0..n).map(|i| (i + k) % n).collect();
        let permuted = dist_rand(&p.permute_agents(&order), &x, &cfg).unwrap().value;
        prop_assert!(finite(base, permuted), "{} vs {}", base, permuted);

        let t = shift.index(m);
        let relabel: Vec<usize> = (0..m).map(|c| (c + t) % m).collect();
        let mut y = vec![0.0; m];
        for c in 0..m {
            y[relabel[c]] = x[c];
        }
        let renamed = dist_rand(&p.relabel_alternatives(&relabel), &y, &cfg).unwrap().value;
        prop_assert!(finite(base, renamed), "{} vs {}", base, renamed);
    }

    #[test]
    fn head_to_head_with_itself_is_one(p in profile_strategy(5, 4), c in any::<Index>()) {
        let c = c.index(p.num_alternatives());
        let v = a_det(&p, c, c, &LpConfig::default()).unwrap().value;
        prop_assert!((v - 1.0).abs() <= 1e-7, "{}", v);
    }

    #[test]
    fn lazy_rows_match_full_rows(p in profile_strategy(4, 4)) {
        let m = p.num_alternatives();
        let x = randomized_dictatorship(&p).distribution(m);
        let fast = dist_rand(&p, &x, &LpConfig::default()).unwrap().value;
        let slow = dist_rand(&p, &x, &LpConfig::paranoid()).unwrap().value;
        prop_assert!(finite(fast, slow), "{} vs {}", fast, slow);
    }

    // Optimal points satisfy every row and cannot be beaten by any
    // coordinate-wise grid point of the box.
    #[test]
    fn simplex_beats_grid_points(
        obj in proptest::collection::vec(-3i32..=3, 2),
        rows in proptest::collection::vec((proptest::collection::vec(-3i32..=3, 2), 0i32..=6), 1..4),
    ) {
        let mut lp = LinearProgram::maximize(obj.iter().map(|&c| c as f64).collect()).unwrap();
        for (coeffs, rhs) in &rows {
            lp.add_constraint(coeffs.iter().map(|&c| c as f64).collect(), Relation::Le, *rhs as f64).unwrap();
        }
        for i in 0..2 {
            let mut e = vec![0.0; 2];
            e[i] = 1.0;
            lp.add_constraint(e, Relation::Le, 4.0).unwrap();
        }
        let LpOutcome::Optimal { value, assignment } = solve(&lp).unwrap() else {
            return Err(TestCaseError::fail("origin is feasible, box is bounded"));
        };
        prop_assert!(lp.max_violation(&assignment) <= 1e-7);
        for a in 0..=16 {
            for b in 0..=16 {
                let pt = [a as f64 / 4.0, b as f64 / 4.0];
                if lp.max_violation(&pt) == 0.0 {
                    prop_assert!(lp.objective_value(&pt) <= value + 1e-7);
                }
            }
        }
    }
}
