//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the closed
//! forms and brute-force checks here are computed independently of the
//! library code they test.

use std::time::{Duration, Instant};

use metric_distortion::claims::{reproduce, ClaimReport, SuiteParams};
use metric_distortion::linprog::{solve, LinearProgram, LpOutcome, Relation, Sense};
use metric_distortion::metricspace::{complete_metric, random_box_q_metric, CostMatrix};
use metric_distortion::profile::{
    gen_convex_example, gen_coupling, gen_percentile_example, gen_rand_tourney, gen_rp_lower,
    gen_warmup, PreferenceProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    failures: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn claim(&mut self, r: &ClaimReport) {
        for c in r.checks.iter().filter(|c| !c.passed) {
            self.failures.push(format!("{}: {} ({})", r.id, c.name, c.detail));
        }
        self.expect(r.passed, format!("{} did not pass", r.id));
    }

    fn report(self, n: usize, title: &str, elapsed: Duration) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {status} {title} [{:.2}s]", elapsed.as_secs_f64());
        for f in &self.failures {
            println!("    {f}");
        }
        assert!(self.failures.is_empty(), "criterion {n} failed");
    }
}

fn params() -> SuiteParams {
    SuiteParams::default()
}

fn run(id: &str) -> ClaimReport {
    reproduce(id, &params()).unwrap_or_else(|e| panic!("{id}: {e}"))
}

fn table_value(r: &ClaimReport, label: &str, key: &str) -> f64 {
    let row = r.table.iter().find(|row| row.label == label).unwrap_or_else(|| panic!("row {label}"));
    row.values.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("column {key}")).1
}

fn col_sum(d: &CostMatrix, c: usize) -> f64 {
    (0..d.num_agents()).map(|v| d.get(v, c)).sum()
}

fn top_k(mut xs: Vec<f64>, k: usize) -> f64 {
    xs.sort_by(|a, b| b.total_cmp(a));
    xs.iter().take(k).sum()
}

fn support(p: &PreferenceProfile, a: usize, b: usize) -> usize {
    p.rankings()
        .iter()
        .filter(|r| r.iter().position(|&c| c == a) < r.iter().position(|&c| c == b))
        .count()
}

fn quadrilateral_ok(d: &CostMatrix) -> bool {
    let (n, m) = (d.num_agents(), d.num_alternatives());
    (0..n).all(|v| {
        (0..n).all(|w| {
            (0..m).all(|c| {
                (0..m).all(|e| d.get(v, c) <= d.get(v, e) + d.get(w, e) + d.get(w, c) + 1e-9)
            })
        })
    })
}

fn consistent(d: &CostMatrix, p: &PreferenceProfile) -> bool {
    p.rankings()
        .iter()
        .enumerate()
        .all(|(v, r)| r.windows(2).all(|w| d.get(v, w[0]) <= d.get(v, w[1]) + 1e-9))
}

#[test]
fn criterion_01_warmup() {
    let start = Instant::now();
    let mut o = Outcome::new();
    let r = run("warmup");
    o.claim(&r);
    o.expect((table_value(&r, "warmup", "det") - 3.0).abs() <= 1e-6, "dist_det != 3");
    o.expect((table_value(&r, "warmup", "rand") - 2.0).abs() <= 1e-6, "dist_rand != 2");
    let inst = gen_warmup();
    let d = inst.metric.as_ref().expect("warmup metric");
    let ratios: Vec<f64> = (1..=3)
        .map(|k| {
            let chosen = top_k(d.column(0), k);
            let best = (0..3).map(|c| top_k(d.column(c), k)).fold(f64::INFINITY, f64::min);
            chosen / best
        })
        .collect();
    o.expect(ratios == [3.0, 2.5, 3.0], format!("fixture fairness ratios {ratios:?}"));
    let elapsed = start.elapsed();
    o.expect(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"));
    o.report(1, "warm-up fixture", elapsed);
}

#[test]
fn criterion_02_ranked_pairs_lower_bound() {
    let start = Instant::now();
    let mut o = Outcome::new();
    let r = run("thm2");
    o.claim(&r);
    for n in 2..=12usize {
        let inst = gen_rp_lower(n).unwrap();
        let p = &inst.profile;
        let m = p.num_alternatives();
        o.expect(m == 2 * n + 1, format!("n={n}: {m} alternatives"));
        for i in 0..m {
            for j in (0..m).filter(|&j| j != i) {
                let w = support(p, i, j);
                let ok = if j == i + 1 { w == n + 1 } else { w <= n };
                o.expect(ok, format!("n={n}: w(c{}, c{}) = {w}", i + 1, j + 1));
            }
        }
        let d = inst.metric.as_ref().unwrap();
        o.expect(quadrilateral_ok(d) && consistent(d, p), format!("n={n}: metric infeasible"));
        let nf = n as f64;
        let closed = (5.0 * nf + 4.0) / (nf + 4.0);
        let best = (0..m).map(|c| col_sum(d, c)).fold(f64::INFINITY, f64::min);
        let ratio = col_sum(d, 0) / best;
        o.expect((ratio - closed).abs() <= 1e-12, format!("n={n}: metric ratio {ratio} vs {closed}"));
        let lp = table_value(&r, &format!("n={n}"), "lp");
        o.expect(lp >= closed - 1e-6, format!("n={n}: LP {lp} < {closed}"));
        o.expect(table_value(&r, &format!("n={n}"), "winner") == 1.0, format!("n={n}: winner"));
    }
    let elapsed = start.elapsed();
    o.expect(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"));
    o.report(2, "ranked pairs / schulze lower-bound family", elapsed);
}

#[test]
fn criterion_03_coupling_example() {
    let start = Instant::now();
    let mut o = Outcome::new();
    o.claim(&run("example1"));
    for n in 1..=10usize {
        let inst = gen_coupling(n).unwrap();
        let d = inst.metric.as_ref().unwrap();
        let m = d.num_alternatives();
        let best = (0..m).map(|c| col_sum(d, c)).fold(f64::INFINITY, f64::min);
        let nf = n as f64;
        let (num, den) = (col_sum(d, 0), best);
        o.expect(
            num == 11.0 * nf + 2.0 && den == 3.0 * nf + 2.0,
            format!("n={n}: ratio {num}/{den}"),
        );
        o.expect((num / den > 3.0) == (n >= 3), format!("n={n}: > 3 iff n >= 3"));
        o.expect(quadrilateral_ok(d) && consistent(d, &inst.profile), format!("n={n}: metric infeasible"));
    }
    o.report(3, "coupling example", start.elapsed());
}

#[test]
fn criterion_04_random_tournament() {
    let start = Instant::now();
    let mut o = Outcome::new();
    let r = run("thm3");
    o.claim(&r);
    for m in 2..=8usize {
        let inst = gen_rand_tourney(m).unwrap();
        let p = &inst.profile;
        for a in 0..=m {
            for b in (0..=m).filter(|&b| b != a) {
                o.expect(support(p, a, b) == m, format!("m={m}: w(c{}, c{})", a + 1, b + 1));
            }
        }
        let d = inst.metric.as_ref().unwrap();
        o.expect(quadrilateral_ok(d) && consistent(d, p), format!("m={m}: metric infeasible"));
        let mf = m as f64;
        let cols: Vec<f64> = (0..=m).map(|c| col_sum(d, c)).collect();
        o.expect(
            cols[0] == mf && cols[1..].iter().all(|&s| s == 3.0 * mf),
            format!("m={m}: column sums {cols:?}"),
        );
        let closed = 3.0 - 2.0 / (mf + 1.0);
        let expected = cols.iter().sum::<f64>() / (mf + 1.0) / cols[0];
        o.expect((expected - closed).abs() <= 1e-12, format!("m={m}: uniform ratio {expected}"));
        let lp = table_value(&r, &format!("m={m}"), "lp");
        o.expect(lp >= closed - 1e-6, format!("m={m}: LP {lp} < {closed}"));
    }
    o.report(4, "randomized tournament lower bound", start.elapsed());
}

#[test]
fn criterion_05_copeland_suite() {
    let start = Instant::now();
    let mut o = Outcome::new();
    let r = run("thm4-suite");
    o.claim(&r);
    o.expect(table_value(&r, "distortion", "trials") >= 200.0, "fewer than 200 distortion trials");
    o.expect(table_value(&r, "fairness", "trials") >= 50.0, "fewer than 50 fairness trials");
    o.expect(table_value(&r, "distortion", "max") <= 5.0 + 1e-6, "distortion above 5");
    o.expect(table_value(&r, "fairness", "max") <= 5.0 + 1e-6, "fairness above 5");
    let elapsed = start.elapsed();
    o.expect(elapsed < Duration::from_secs(600), format!("took {elapsed:?}"));
    o.report(5, "copeland distortion and fairness at most 5", elapsed);
}

#[test]
fn criterion_06_randomized_dictatorship_suite() {
    let start = Instant::now();
    let mut o = Outcome::new();
    let r = run("thm5-suite");
    o.claim(&r);
    o.expect(table_value(&r, "distortion", "trials") >= 200.0, "fewer than 200 distortion trials");
    o.expect(table_value(&r, "fairness", "trials") >= 30.0, "fewer than 30 fairness trials");
    o.expect(table_value(&r, "distortion", "max") <= 3.0 + 1e-6, "distortion above 3");
    o.expect(table_value(&r, "fairness", "max") <= 3.0 + 1e-6, "fairness above 3");
    o.report(6, "randomized dictatorship at most 3", start.elapsed());
}

#[test]
fn criterion_07_metric_completion() {
    let start = Instant::now();
    let mut o = Outcome::new();
    o.claim(&run("lemma1-suite"));
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut metrics: Vec<CostMatrix> = (0..500)
        .map(|_| {
            let (n, m) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
            random_box_q_metric(&mut rng, n, m)
        })
        .collect();
    metrics.push(gen_warmup().metric.unwrap());
    metrics.push(gen_coupling(2).unwrap().metric.unwrap());
    metrics.push(gen_rp_lower(3).unwrap().metric.unwrap());
    metrics.push(gen_rand_tourney(3).unwrap().metric.unwrap());
    for (i, d) in metrics.iter().enumerate() {
        let full = complete_metric(d).unwrap();
        let k = full.size();
        let mut bad = false;
        for x in 0..k {
            bad |= full.dist(x, x) != 0.0;
            for y in 0..k {
                bad |= full.dist(x, y) < 0.0 || full.dist(x, y) != full.dist(y, x);
                for z in 0..k {
                    bad |= full.dist(x, z) > full.dist(x, y) + full.dist(y, z) + 1e-9;
                }
            }
        }
        for v in 0..d.num_agents() {
            for c in 0..d.num_alternatives() {
                bad |= full.dist(full.agent_point(v), full.alt_point(c)) != d.get(v, c);
            }
        }
        o.expect(!bad, format!("metric #{i} does not complete"));
    }
    o.report(7, "q-metrics complete to metrics", start.elapsed());
}

#[test]
fn criterion_08_norms_follow_submajorization() {
    let start = Instant::now();
    let mut o = Outcome::new();
    o.claim(&run("corollary1-suite"));
    // Independent spot check: prefix-sum ratio against p-norms on random
    // nonnegative vectors.
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..2000 {
        let n = rng.gen_range(1..=6);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        let alpha = (1..=n).map(|k| top_k(x.clone(), k) / top_k(y.clone(), k)).fold(0.0, f64::max);
        let l1 = x.iter().sum::<f64>() / y.iter().sum::<f64>();
        let l2 = x.iter().map(|a| a * a).sum::<f64>().sqrt() / y.iter().map(|a| a * a).sum::<f64>().sqrt();
        let linf = top_k(x.clone(), 1) / top_k(y.clone(), 1);
        o.expect(l1.max(l2).max(linf) <= alpha + 1e-9, format!("{x:?} vs {y:?}"));
    }
    o.report(8, "norm ratios bounded by submajorization ratio", start.elapsed());
}

#[test]
fn criterion_09_optimality_ordering() {
    let start = Instant::now();
    let mut o = Outcome::new();
    let r = run("optimality-suite");
    o.claim(&r);
    let eps = 1e-4;
    for row in &r.table {
        let get = |k: &str| row.values.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap();
        let (od, or) = (get("opt_det"), get("opt_rand"));
        o.expect(or <= od + eps, format!("{}: opt_rand {or} > opt_det {od}", row.label));
        o.expect(or <= get("rd") + eps, format!("{}: opt_rand above RD", row.label));
        for rule in ["copeland", "ranked-pairs", "schulze"] {
            o.expect(od <= get(rule) + 1e-6, format!("{}: opt_det above {rule}", row.label));
        }
        o.expect(get("candidate_response") >= or - 2.0 * eps, format!("{}: candidate response", row.label));
        o.expect((get("opt_rand_bisect") - or).abs() <= 2.0 * eps, format!("{}: modes disagree", row.label));
    }
    o.report(9, "instance-optimal ordering", start.elapsed());
}

/// Vertex enumeration: every choice of `n` tight rows (constraints or
/// nonnegativity bounds) that yields a feasible point.
fn bfs_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = lp.constraints().iter().map(|c| (c.coeffs.clone(), c.rhs)).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rows.push((e, 0.0));
    }
    let feasible = |x: &[f64]| {
        x.iter().all(|&v| v >= -1e-9) && lp.constraints().iter().all(|c| c.violation(x) <= 1e-9)
    };
    let sign = match lp.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn choose(
        start: usize,
        depth: usize,
        pick: &mut Vec<usize>,
        total: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if depth == pick.len() {
            visit(pick);
            return;
        }
        for i in start..total {
            pick[depth] = i;
            choose(i + 1, depth + 1, pick, total, visit);
        }
    }
    let total = rows.len();
    choose(0, 0, &mut pick, total, &mut |idx: &[usize]| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if feasible(&x) {
                let v = sign * lp.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    });
    best.map(|v| sign * v)
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn random_tiny_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=3);
    let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let mut lp = if rng.gen_bool(0.5) { LinearProgram::maximize(obj) } else { LinearProgram::minimize(obj) }.unwrap();
    for _ in 0..rng.gen_range(1..=3) {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-4..=4) as f64).collect();
        let rel = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        lp.add_constraint(coeffs, rel, rng.gen_range(-3..=8) as f64).unwrap();
    }
    // A box keeps the feasible region bounded, so every optimum is a vertex.
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        lp.add_constraint(e, Relation::Le, 10.0).unwrap();
    }
    lp
}

#[test]
fn criterion_10_oracle_equivalence() {
    let start = Instant::now();
    let mut o = Outcome::new();
    o.claim(&run("oracle-suite"));
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut optimal = 0;
    for t in 0..500 {
        let lp = random_tiny_lp(&mut rng);
        let oracle = bfs_oracle(&lp);
        match (solve(&lp).unwrap(), oracle) {
            (LpOutcome::Optimal { value, assignment }, Some(want)) => {
                optimal += 1;
                o.expect((value - want).abs() <= 1e-6, format!("LP #{t}: simplex {value}, vertices {want}"));
                o.expect(lp.max_violation(&assignment) <= 1e-7, format!("LP #{t}: infeasible assignment"));
            }
            (LpOutcome::Infeasible, None) => {}
            (got, want) => o.failures.push(format!("LP #{t}: simplex {got:?}, vertices {want:?}")),
        }
    }
    o.expect(optimal >= 100, format!("only {optimal} feasible LPs sampled"));
    o.report(10, "grid oracle and vertex-enumeration oracle", start.elapsed());
}

#[test]
fn criterion_11_unbounded_examples() {
    let start = Instant::now();
    let mut o = Outcome::new();
    o.claim(&run("example2"));
    o.claim(&run("example3"));
    let alpha = 0.25;
    let mut ratios = Vec::new();
    for eps in [0.1, 0.01] {
        let inst = gen_percentile_example(2, eps).unwrap();
        let d = inst.metric.as_ref().unwrap();
        // Smallest cost x such that more than an alpha fraction pay at most x.
        let pct = |c: usize| {
            let col = d.column(c);
            let n = col.len() as f64;
            col.iter()
                .copied()
                .filter(|&x| col.iter().filter(|&&y| y <= x).count() as f64 / n > alpha)
                .fold(f64::INFINITY, f64::min)
        };
        let r = pct(0) / pct(1);
        o.expect((r - 1.0 / eps).abs() <= 1e-9 / eps, format!("eps={eps}: percentile ratio {r}"));
        ratios.push(r);
    }
    o.expect(ratios[1] > ratios[0], "percentile ratio does not grow");
    let mut ratios = Vec::new();
    for (n1, n2) in [(100usize, 1usize), (1000, 1)] {
        let inst = gen_convex_example(n1, n2).unwrap();
        let d = inst.metric.as_ref().unwrap();
        let p = &inst.profile;
        let first = |c: usize| p.rankings().iter().filter(|r| r[0] == c).count() as f64;
        let sq = |c: usize| d.column(c).iter().sum::<f64>().powi(2);
        let total = p.num_agents() as f64;
        let expected = (first(0) * sq(0) + first(1) * sq(1)) / total;
        let r = expected / sq(0).min(sq(1));
        let want = n1 as f64 / n2 as f64;
        o.expect((r - want).abs() <= 1e-9 * want, format!("({n1},{n2}): squared-sum ratio {r}"));
        ratios.push(r);
    }
    o.expect(ratios[1] > ratios[0], "squared-sum ratio does not grow");
    o.report(11, "percentile and squared-sum examples", start.elapsed());
}
