//! `mdist`: generate profiles, run voting rules and measure their worst-case
//! distortion over consistent metrics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use metric_distortion::claims::{self, ClaimReport, SuiteParams, CLAIM_IDS};
use metric_distortion::distortion::{
    dist_rand, fairness_det, fairness_rand, fairness_ratio_at, grid_oracle, normalized_lp,
    ratio_at, DistortionReport, FairnessReport, LpConfig, Tolerances,
};
use metric_distortion::instanceopt::{
    candidate_response_value, opt_det, opt_rand, PairwiseDistortionMatrix, DEFAULT_MAX_CUTS,
};
use metric_distortion::metricspace::{
    is_consistent, is_q_metric, is_q_metric_paranoid, parse_cost_matrix, CostMatrix, DEFAULT_TOL,
};
use metric_distortion::profile::{
    gen_convex_example, gen_coupling, gen_percentile_example, gen_rand_tourney, gen_random,
    gen_rp_lower, gen_warmup, parse_profile, random_line_instance, LabeledInstance,
    PreferenceProfile,
};
use metric_distortion::rules::{Audit, Rule, RuleOutcome};
use metric_distortion::tournament::TieBreak;

const SCHEMA_VERSION: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "mdist", version, about = "Metric distortion of voting rules")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Trial count for the randomized suites.
    #[arg(long, global = true, value_parser = positive_usize)]
    trials: Option<usize>,
    /// Use every quadrilateral row and the exhaustive q-metric check.
    #[arg(long, global = true)]
    paranoid: bool,
    /// Write each opponent's LP, with all rows spelled out, into this directory.
    #[arg(long, global = true, value_name = "DIR")]
    dump_lp: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated profile (and its metric, when it has one).
    Gen(GenArgs),
    /// Winner of a deterministic rule.
    Winner(RuleArgs),
    /// Lottery of a rule (a point mass for deterministic rules).
    Distribution(RuleArgs),
    /// Worst-case distortion of a rule, or its ratio under one metric.
    Distortion(DistortionArgs),
    /// Worst-case fairness ratio for each k.
    Fairness(FairnessArgs),
    /// Instance-optimal deterministic alternative.
    OptDet(ProfileArg),
    /// Instance-optimal distribution.
    OptRand(OptRandArgs),
    /// Value of the candidate-response game.
    CandidateResponse(ProfileArg),
    /// Re-run a claim (or `all`) and report pass/fail.
    Reproduce(ReproduceArgs),
    /// Brute-force grid lower bound on a rule's distortion.
    Oracle(OracleArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Family {
    Warmup,
    Coupling,
    RpLower,
    RandTourney,
    Percentile,
    Convex,
    Random,
    RandomLine,
}

#[derive(Args, Debug)]
struct GenArgs {
    family: Family,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 100)]
    n1: usize,
    #[arg(long, default_value_t = 1)]
    n2: usize,
    /// Also write the generator's metric here.
    #[arg(long, value_name = "FILE")]
    metric_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProfileArg {
    profile: PathBuf,
}

#[derive(Args, Debug)]
struct RuleArgs {
    #[arg(long)]
    rule: Rule,
    /// `lex`, or a comma-separated priority order of 1-based alternatives.
    #[arg(long, default_value = "lex")]
    tie_break: String,
    profile: PathBuf,
}

#[derive(Args, Debug)]
struct DistortionArgs {
    #[command(flatten)]
    rule: RuleArgs,
    /// Evaluate under this metric instead of the worst case.
    #[arg(long, value_name = "FILE")]
    metric: Option<PathBuf>,
    /// Write the worst-case metric in cost-matrix format.
    #[arg(long, value_name = "FILE")]
    witness: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FairnessArgs {
    #[command(flatten)]
    rule: RuleArgs,
    /// `all` or a comma-separated list.
    #[arg(long, default_value = "all")]
    k: String,
    /// Most agents enumerated exactly (deterministic), or subset tuples
    /// (randomized).
    #[arg(long, value_parser = positive_usize)]
    budget: Option<usize>,
    #[arg(long, value_name = "FILE")]
    metric: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptRandArgs {
    profile: PathBuf,
    #[arg(long, default_value_t = 1e-4, value_parser = positive_f64)]
    eps: f64,
    #[arg(long)]
    binary_search: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_CUTS, value_parser = positive_usize)]
    max_cuts: usize,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// One of the claim ids, or `all`.
    claim: String,
    /// Largest n for the lower-bound family.
    #[arg(long, default_value_t = 12, value_parser = positive_usize)]
    max_n: usize,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long, default_value_t = 0.5, value_parser = positive_f64)]
    step: f64,
    #[arg(long, default_value_t = 3.0, value_parser = positive_f64)]
    max: f64,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be positive and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// `%.12g`: twelve significant digits, trailing zeros dropped.
fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_zeros(&fixed)
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn num(x: f64) -> Value {
    Value::String(fmt_num(x))
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn matrix_json(d: &CostMatrix) -> Value {
    Value::Array((0..d.num_agents()).map(|v| nums(d.row(v))).collect())
}

fn pairwise_json(a: &PairwiseDistortionMatrix) -> Value {
    Value::Array(
        (0..a.num_alternatives())
            .map(|c| nums(a.row(c)))
            .collect(),
    )
}

fn tolerances_json(t: &Tolerances) -> Value {
    json!({
        "violation": num(t.violation),
        "witness": num(t.witness),
        "pivot": num(t.pivot),
        "feasibility": num(t.feasibility),
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_profile(path: &Path) -> Result<PreferenceProfile> {
    parse_profile(&read(path)?).with_context(|| format!("parsing profile {}", path.display()))
}

fn load_metric(path: &Path, profile: &PreferenceProfile, paranoid: bool) -> Result<CostMatrix> {
    let d = parse_cost_matrix(&read(path)?)
        .with_context(|| format!("parsing metric {}", path.display()))?;
    if d.num_agents() != profile.num_agents() || d.num_alternatives() != profile.num_alternatives()
    {
        bail!(
            "metric is {}x{}, profile has {} agents and {} alternatives",
            d.num_agents(),
            d.num_alternatives(),
            profile.num_agents(),
            profile.num_alternatives()
        );
    }
    let q = if paranoid {
        is_q_metric_paranoid(&d, DEFAULT_TOL)
    } else {
        is_q_metric(&d, DEFAULT_TOL)
    };
    q.map_err(|e| anyhow::anyhow!("metric is not a q-metric: {e}"))?;
    is_consistent(&d, profile, DEFAULT_TOL)
        .map_err(|e| anyhow::anyhow!("metric is inconsistent with the profile: {e}"))?;
    Ok(d)
}

fn parse_tie_break(spec: &str, m: usize) -> Result<TieBreak> {
    if spec == "lex" {
        return Ok(TieBreak::lexicographic(m));
    }
    let order = spec
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(c) if c >= 1 => Ok(c - 1),
            _ => Err(anyhow::anyhow!("bad tie-break entry {t:?}")),
        })
        .collect::<Result<Vec<_>>>()?;
    if order.len() != m {
        bail!("tie-break lists {} alternatives, profile has {m}", order.len());
    }
    Ok(TieBreak::from_order(order)?)
}

fn parse_ks(spec: &str, n: usize) -> Result<Vec<usize>> {
    if spec == "all" {
        return Ok((1..=n).collect());
    }
    spec.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k) if (1..=n).contains(&k) => Ok(k),
            _ => Err(anyhow::anyhow!("k must be in 1..={n}, got {t:?}")),
        })
        .collect()
}

struct Ctx {
    global: Global,
    cfg: LpConfig,
    run: Map<String, Value>,
}

impl Ctx {
    fn new(global: Global, command: &str) -> Self {
        let cfg = if global.paranoid {
            LpConfig::paranoid()
        } else {
            LpConfig::default()
        };
        let mut run = Map::new();
        run.insert("command".into(), json!(command));
        run.insert("seed".into(), json!(global.seed));
        run.insert("paranoid".into(), json!(global.paranoid));
        run.insert("tolerances".into(), tolerances_json(&Tolerances::from(&cfg)));
        if let Some(t) = global.trials {
            run.insert("trials".into(), json!(t));
        }
        if let Some(o) = &global.output {
            run.insert("output".into(), json!(o.display().to_string()));
        }
        Self { global, cfg, run }
    }

    fn set(&mut self, key: &str, value: Value) {
        self.run.insert(key.into(), value);
    }

    fn emit(&self, mut body: Map<String, Value>) -> Result<()> {
        body.insert("schema_version".into(), json!(SCHEMA_VERSION));
        body.insert("run".into(), Value::Object(self.run.clone()));
        let text = serde_json::to_string_pretty(&Value::Object(body))? + "\n";
        match &self.global.output {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn dump_lps(&self, profile: &PreferenceProfile, x: &[f64], normal: bool) -> Result<()> {
        let Some(dir) = &self.global.dump_lp else {
            return Ok(());
        };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for opponent in 0..profile.num_alternatives() {
            let lp = normalized_lp(profile, x, opponent, normal)?;
            let path = dir.join(format!("opponent-{}.lp", opponent + 1));
            fs::write(&path, lp.to_text()).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}

fn obj(value: Value) -> Map<String, Value> {
    match value {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

/// Applies the rule, recording it and its tie-break in the run config.
fn run_rule(ctx: &mut Ctx, args: &RuleArgs) -> Result<(PreferenceProfile, RuleOutcome, Vec<f64>)> {
    let profile = load_profile(&args.profile)?;
    let m = profile.num_alternatives();
    let tb = parse_tie_break(&args.tie_break, m)?;
    ctx.set("inputs", json!([args.profile.display().to_string()]));
    ctx.set("rule", json!(args.rule.name()));
    ctx.set("tie_break", json!(tb.order().iter().map(|c| c + 1).collect::<Vec<_>>()));
    let outcome = args.rule.apply(&profile, &tb);
    let x = outcome.distribution(m);
    Ok((profile, outcome, x))
}

fn winner_field(outcome: &RuleOutcome) -> Value {
    outcome.winner().map_or(Value::Null, |w| json!(w + 1))
}

fn audit_json(audit: &Audit) -> Value {
    match audit {
        Audit::CopelandScores(s) => json!({ "copeland_scores": s }),
        Audit::LockedEdges(edges) => json!({
            "edges": edges
                .iter()
                .map(|e| json!({ "from": e.from + 1, "to": e.to + 1, "weight": e.weight, "locked": e.locked }))
                .collect::<Vec<_>>()
        }),
        Audit::PathStrengths(p) => json!({
            "path_strengths": p
                .iter()
                .map(|row| row.iter().map(|x| x.map_or(Value::Null, |v| json!(v))).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        }),
    }
}

fn cmd_gen(ctx: &Ctx, args: &GenArgs) -> Result<()> {
    let inst: LabeledInstance = match args.family {
        Family::Warmup => gen_warmup(),
        Family::Coupling => gen_coupling(args.n)?,
        Family::RpLower => gen_rp_lower(args.n)?,
        Family::RandTourney => gen_rand_tourney(args.m)?,
        Family::Percentile => gen_percentile_example(args.n, args.eps)?,
        Family::Convex => gen_convex_example(args.n1, args.n2)?,
        Family::Random => gen_random(ctx.global.seed, args.n, args.m),
        Family::RandomLine => random_line_instance(ctx.global.seed, args.n, args.m),
    };
    let mut text = format!("# {}", inst.meta.name);
    for (k, v) in &inst.meta.params {
        text.push_str(&format!(" {k}={v}"));
    }
    text.push('\n');
    text.push_str(&inst.profile.to_text());
    match &ctx.global.output {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.metric_out {
        let Some(d) = &inst.metric else {
            bail!("the {} generator has no metric", inst.meta.name);
        };
        fs::write(path, d.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_winner(ctx: &mut Ctx, args: &RuleArgs) -> Result<()> {
    if args.rule.is_randomized() {
        bail!("{} is randomized; use `distribution`", args.rule);
    }
    let (_, outcome, _) = run_rule(ctx, args)?;
    let RuleOutcome::Winner { winner, audit } = &outcome else {
        unreachable!("deterministic rule")
    };
    ctx.emit(obj(json!({ "winner": winner + 1, "audit": audit_json(audit) })))
}

fn cmd_distribution(ctx: &mut Ctx, args: &RuleArgs) -> Result<()> {
    let (_, outcome, x) = run_rule(ctx, args)?;
    ctx.emit(obj(json!({ "winner": winner_field(&outcome), "distribution": nums(&x) })))
}

fn report_json(r: &DistortionReport) -> Map<String, Value> {
    obj(json!({
        "winner": r.winner.map_or(Value::Null, |w| json!(w + 1)),
        "distribution": nums(&r.distribution),
        "value": num(r.value),
        "opponent": r.opponent + 1,
        "per_opponent": nums(&r.per_opponent),
        "witness": r.witness.as_ref().map_or(Value::Null, matrix_json),
    }))
}

fn cmd_distortion(ctx: &mut Ctx, args: &DistortionArgs) -> Result<()> {
    let (profile, outcome, x) = run_rule(ctx, &args.rule)?;
    if let Some(path) = &args.metric {
        let d = load_metric(path, &profile, ctx.global.paranoid)?;
        ctx.set("metric", json!(path.display().to_string()));
        return ctx.emit(obj(json!({
            "mode": "fixed-metric",
            "winner": winner_field(&outcome),
            "distribution": nums(&x),
            "value": num(ratio_at(&d, &x)),
        })));
    }
    ctx.dump_lps(&profile, &x, false)?;
    let report = dist_rand(&profile, &x, &ctx.cfg)?;
    if let Some(path) = &args.witness {
        let Some(d) = &report.witness else {
            bail!("distortion is unbounded; there is no witness metric");
        };
        fs::write(path, d.to_text()).with_context(|| format!("writing {}", path.display()))?;
        ctx.set("witness", json!(path.display().to_string()));
    }
    let mut body = report_json(&report);
    body.insert("mode".into(), json!("worst-case"));
    ctx.emit(body)
}

fn fairness_json(f: &FairnessReport) -> Map<String, Value> {
    obj(json!({
        "value": num(f.value),
        "upper": num(f.upper),
        "exact": f.exact,
        "per_k": f.per_k.iter().map(|e| json!({
            "k": e.k,
            "lower": num(e.lower),
            "upper": num(e.upper),
            "opponent": e.opponent + 1,
            "subsets": e.subsets.iter().map(|s| s.iter().map(|v| v + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "witness": e.witness.as_ref().map_or(Value::Null, matrix_json),
        })).collect::<Vec<_>>(),
    }))
}

fn cmd_fairness(ctx: &mut Ctx, args: &FairnessArgs) -> Result<()> {
    let (profile, outcome, x) = run_rule(ctx, &args.rule)?;
    let ks = parse_ks(&args.k, profile.num_agents())?;
    if let Some(path) = &args.metric {
        let d = load_metric(path, &profile, ctx.global.paranoid)?;
        ctx.set("metric", json!(path.display().to_string()));
        let per_k = ks
            .iter()
            .map(|&k| Ok(json!({ "k": k, "value": num(fairness_ratio_at(&d, &x, k)?) })))
            .collect::<Result<Vec<_>>>()?;
        return ctx.emit(obj(json!({
            "mode": "fixed-metric",
            "winner": winner_field(&outcome),
            "per_k": per_k,
        })));
    }
    let mut body = match outcome.winner() {
        Some(w) => {
            let budget = args.budget.unwrap_or(10);
            ctx.set("budget", json!(budget));
            fairness_json(&fairness_det(&profile, w, &ks, budget, &ctx.cfg)?)
        }
        None => {
            let budget = args.budget.unwrap_or(100_000);
            ctx.set("budget", json!(budget));
            fairness_json(&fairness_rand(&profile, &x, &ks, budget as u128, &ctx.cfg)?)
        }
    };
    body.insert("mode".into(), json!("worst-case"));
    body.insert("winner".into(), winner_field(&outcome));
    body.insert("distribution".into(), nums(&x));
    ctx.emit(body)
}

fn cmd_opt_det(ctx: &mut Ctx, args: &ProfileArg) -> Result<()> {
    let profile = load_profile(&args.profile)?;
    ctx.set("inputs", json!([args.profile.display().to_string()]));
    let r = opt_det(&profile, &ctx.cfg)?;
    ctx.emit(obj(json!({
        "winner": r.winner + 1,
        "value": num(r.value),
        "matrix": pairwise_json(&r.matrix),
    })))
}

fn cmd_opt_rand(ctx: &mut Ctx, args: &OptRandArgs) -> Result<()> {
    let profile = load_profile(&args.profile)?;
    ctx.set("inputs", json!([args.profile.display().to_string()]));
    ctx.set("eps", num(args.eps));
    ctx.set("binary_search", json!(args.binary_search));
    ctx.set("max_cuts", json!(args.max_cuts));
    ctx.set("normal_metric", json!("opponent column sums to 1, every other column to at least 1"));
    let r = opt_rand(&profile, args.eps, args.max_cuts, args.binary_search, &ctx.cfg)?;
    ctx.dump_lps(&profile, &r.x, true)?;
    let a = metric_distortion::instanceopt::pairwise_matrix(&profile, &ctx.cfg)?;
    ctx.emit(obj(json!({
        "x": nums(&r.x),
        "value": num(r.value),
        "upper": num(r.upper),
        "cuts": r.state.cuts.len(),
        "iterations": r.state.iterations,
        "matrix": pairwise_json(&a),
    })))
}

fn cmd_candidate_response(ctx: &mut Ctx, args: &ProfileArg) -> Result<()> {
    let profile = load_profile(&args.profile)?;
    ctx.set("inputs", json!([args.profile.display().to_string()]));
    let r = candidate_response_value(&profile, &ctx.cfg)?;
    ctx.emit(obj(json!({
        "x": nums(&r.x),
        "value": num(r.value),
        "matrix": pairwise_json(&r.matrix),
    })))
}

fn claim_json(r: &ClaimReport) -> Value {
    json!({
        "id": r.id,
        "passed": r.passed,
        "checks": r.checks.iter().map(|c| json!({
            "name": c.name, "passed": c.passed, "detail": c.detail,
        })).collect::<Vec<_>>(),
        "table": r.table.iter().map(|row| {
            let mut m = Map::new();
            m.insert("label".into(), json!(row.label));
            for (k, v) in &row.values {
                m.insert(k.clone(), num(*v));
            }
            Value::Object(m)
        }).collect::<Vec<_>>(),
        "notes": r.notes,
        "counterexample": r.counterexample,
    })
}

fn cmd_reproduce(ctx: &mut Ctx, args: &ReproduceArgs) -> Result<bool> {
    let ids: Vec<&str> = if args.claim == "all" {
        CLAIM_IDS.to_vec()
    } else if CLAIM_IDS.contains(&args.claim.as_str()) {
        vec![args.claim.as_str()]
    } else {
        bail!("unknown claim {:?}; expected one of {} or all", args.claim, CLAIM_IDS.join(", "));
    };
    ctx.set("claim", json!(args.claim));
    ctx.set("max_n", json!(args.max_n));
    let params = SuiteParams {
        seed: ctx.global.seed,
        trials: ctx.global.trials,
        max_n: args.max_n,
        cfg: ctx.cfg,
    };
    let mut reports = Vec::new();
    for id in ids {
        reports.push(claims::reproduce(id, &params)?);
    }
    let passed = reports.iter().all(|r| r.passed);
    ctx.emit(obj(json!({
        "passed": passed,
        "claims": reports.iter().map(claim_json).collect::<Vec<_>>(),
    })))?;
    Ok(passed)
}

fn cmd_oracle(ctx: &mut Ctx, args: &OracleArgs) -> Result<()> {
    let (profile, outcome, x) = run_rule(ctx, &args.rule)?;
    ctx.set("step", num(args.step));
    ctx.set("max", num(args.max));
    let g = grid_oracle(&profile, &x, args.step, args.max)?;
    ctx.emit(obj(json!({
        "winner": winner_field(&outcome),
        "distribution": nums(&x),
        "value": num(g.value),
        "feasible_points": g.feasible_points,
        "witness": g.witness.as_ref().map_or(Value::Null, matrix_json),
    })))
}

fn run(cli: Cli) -> Result<bool> {
    let name = match &cli.command {
        Command::Gen(_) => "gen",
        Command::Winner(_) => "winner",
        Command::Distribution(_) => "distribution",
        Command::Distortion(_) => "distortion",
        Command::Fairness(_) => "fairness",
        Command::OptDet(_) => "opt-det",
        Command::OptRand(_) => "opt-rand",
        Command::CandidateResponse(_) => "candidate-response",
        Command::Reproduce(_) => "reproduce",
        Command::Oracle(_) => "oracle",
    };
    let mut ctx = Ctx::new(cli.global.clone(), name);
    match &cli.command {
        Command::Gen(a) => cmd_gen(&ctx, a)?,
        Command::Winner(a) => cmd_winner(&mut ctx, a)?,
        Command::Distribution(a) => cmd_distribution(&mut ctx, a)?,
        Command::Distortion(a) => cmd_distortion(&mut ctx, a)?,
        Command::Fairness(a) => cmd_fairness(&mut ctx, a)?,
        Command::OptDet(a) => cmd_opt_det(&mut ctx, a)?,
        Command::OptRand(a) => cmd_opt_rand(&mut ctx, a)?,
        Command::CandidateResponse(a) => cmd_candidate_response(&mut ctx, a)?,
        Command::Reproduce(a) => return cmd_reproduce(&mut ctx, a),
        Command::Oracle(a) => cmd_oracle(&mut ctx, a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
