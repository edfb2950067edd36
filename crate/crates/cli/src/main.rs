mod manifest;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use coverplace::catalog::{choose_three_cluster_k, make_named, PlacementKind};
use coverplace::checks::{run_suite, CheckConfig, Suite, CHECKS, DEFAULT_SEED};
use coverplace::cortes::cortes_checks;
use coverplace::cost::{expected_cost_dp, expected_cost_enumeration};
use coverplace::lp::{build_lp, export_lp_text};
use coverplace::model::{FailureModel, Geometry, Placement};
use coverplace::optimizer::{optimize_lp, sweep_p};
use coverplace::random::random_study_row;
use coverplace::Error;

use manifest::{sig12, RunManifest};

#[derive(Parser)]
#[command(
    name = "coverplace",
    version,
    about = "Expected worst-case coverage of unreliable sensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expected cost of one placement, as JSON.
    Eval(EvalArgs),
    /// Optimal placement for one failure law, as JSON.
    Optimize(OptimizeArgs),
    /// Optimal placements over a grid of failure probabilities, as CSV.
    Sweep(SweepArgs),
    /// Random versus equispaced placement across sensor counts, as CSV.
    RandomStudy(RandomStudyArgs),
    /// Fixed-count failure checks for one (n, k), as JSON.
    Cortes(CortesArgs),
    /// Write the coverage program in LP text format.
    ExportLp(ExportArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Interval,
    Circle,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Interval => Geometry::Interval,
            GeometryArg::Circle => Geometry::Circle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dp,
    Enum,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

#[derive(Args)]
#[command(group(ArgGroup::new("law").required(true).args(["p", "cortes"])))]
struct LawArgs {
    /// Independent failure probability of each sensor.
    #[arg(long)]
    p: Option<f64>,
    /// Exactly this many sensors fail.
    #[arg(long)]
    cortes: Option<usize>,
}

impl LawArgs {
    fn model(&self, n: usize) -> Result<FailureModel, CliError> {
        Ok(match (self.p, self.cortes) {
            (Some(p), _) => FailureModel::independent(p)?,
            (None, Some(k)) => FailureModel::cortes(k, n)?,
            (None, None) => unreachable!("clap enforces the group"),
        })
    }

    fn describe(&self) -> Value {
        match (self.p, self.cortes) {
            (Some(p), _) => json!({"kind": "independent", "p": p}),
            (_, k) => json!({"kind": "cortes", "k": k}),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// eq, sgl, alt, three, three:K, random:SEED or file:PATH.json
    #[arg(long)]
    placement: String,
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, value_enum, default_value = "interval")]
    geometry: GeometryArg,
    #[arg(long, value_enum, default_value = "dp")]
    method: MethodArg,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, value_enum, default_value = "interval")]
    geometry: GeometryArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.005)]
    p_min: f64,
    #[arg(long, default_value_t = 0.995)]
    p_max: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, value_enum, default_value = "interval")]
    geometry: GeometryArg,
    /// Placements within this distance share a segment.
    #[arg(long, default_value_t = 1e-6)]
    match_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RandomStudyArgs {
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Comma-separated sensor counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CortesArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1e-9)]
    slack: f64,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    law: LawArgs,
    #[arg(long, value_enum, default_value = "interval")]
    geometry: GeometryArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    suite: SuiteArg,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1.0, hide = true)]
    tol_scale: f64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    SizeGuard(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::SizeGuard(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::SizeGuard(m) | CliError::Failure(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::TooLarge { .. } => CliError::SizeGuard(msg),
            Error::Solver(_) | Error::NoConvergence { .. } => CliError::Failure(msg),
            _ => CliError::Usage(msg),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| CliError::Failure(e.to_string())),
    }
}

fn print_json(value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json value");
    write_output(None, &(text + "\n"))
}

fn read_positions(path: &str) -> Result<Vec<f64>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{path}: {e}")))?;
    let list = match &value {
        Value::Array(_) => &value,
        Value::Object(map) => map
            .get("positions")
            .ok_or_else(|| usage(format!("{path}: expected a \"positions\" array")))?,
        _ => return Err(usage(format!("{path}: expected a JSON array of numbers"))),
    };
    serde_json::from_value(list.clone())
        .map_err(|e| usage(format!("{path}: positions must be numbers: {e}")))
}

fn resolve_placement(args: &EvalArgs) -> Result<Placement, CliError> {
    let spec = args.placement.as_str();
    if let Some(path) = spec.strip_prefix("file:") {
        let positions = read_positions(path)?;
        let x = Placement::new(&positions)?;
        if let Some(n) = args.n {
            if n != x.len() {
                return Err(usage(format!(
                    "--n {n} disagrees with the {} positions in {path}",
                    x.len()
                )));
            }
        }
        return Ok(x);
    }
    let n = args
        .n
        .ok_or_else(|| usage(format!("--n is required for placement '{spec}'")))?;
    let (name, arg) = match spec.split_once(':') {
        Some((name, arg)) => (name, Some(arg)),
        None => (spec, None),
    };
    let parse_arg = |what: &str| -> Result<u64, CliError> {
        arg.ok_or_else(|| usage(format!("placement '{name}' needs ':{what}'")))?
            .parse()
            .map_err(|_| usage(format!("bad {what} in placement '{spec}'")))
    };
    let kind = match name {
        "eq" | "equispaced" => PlacementKind::Equispaced,
        "sgl" | "single" => PlacementKind::SingleCluster,
        "alt" | "alternative" => PlacementKind::Alternative,
        "three" if arg.is_none() => {
            let p = args
                .law
                .p
                .ok_or_else(|| usage("placement 'three' without k needs --p"))?;
            PlacementKind::ThreeCluster(choose_three_cluster_k(n, p)?)
        }
        "three" => PlacementKind::ThreeCluster(parse_arg("k")? as usize),
        "random" => PlacementKind::Random(parse_arg("seed")?),
        _ => return Err(usage(format!("unknown placement '{spec}'"))),
    };
    Ok(make_named(kind, n)?.placement)
}

fn geometry_name(g: Geometry) -> &'static str {
    match g {
        Geometry::Interval => "interval",
        Geometry::Circle => "circle",
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let x = resolve_placement(args)?;
    let geom: Geometry = args.geometry.into();
    let model = args.law.model(x.len())?;
    let (report, method) = match args.method {
        MethodArg::Dp => (expected_cost_dp(&x, &model, geom)?, "dp"),
        MethodArg::Enum => (expected_cost_enumeration(&x, &model, geom)?, "enum"),
    };
    let params = json!({
        "placement": args.placement,
        "n": x.len(),
        "law": args.law.describe(),
        "geometry": geometry_name(geom),
        "method": method,
    });
    print_json(&json!({
        "manifest": RunManifest::new("eval", params, None),
        "n": x.len(),
        "positions": x.positions(),
        "expected_cost": report.expected_cost,
        "empty_set_mass": report.empty_set_mass,
        "threshold_count": report.threshold_count,
        "method": method,
    }))
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    let geom: Geometry = args.geometry.into();
    let model = args.law.model(args.n)?;
    if let FailureModel::Independent { p } = model {
        FailureModel::independent_open(p)?;
    }
    let opt = optimize_lp(args.n, &model, geom)?;
    let params = json!({
        "n": args.n,
        "law": args.law.describe(),
        "geometry": geometry_name(geom),
    });
    print_json(&json!({
        "manifest": RunManifest::new("optimize", params, None),
        "positions": opt.placement.positions(),
        "cost": opt.cost,
        "lower_bound": opt.lower_bound,
        "certified_gap": opt.certified_gap,
        "method": opt.method,
        "iterations": opt.iterations,
    }))
}

fn p_grid(p_min: f64, p_max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if !(p_min > 0.0 && p_max < 1.0) {
        return Err(usage("--p-min and --p-max must lie strictly inside (0, 1)"));
    }
    if p_min >= p_max {
        return Err(usage("--p-min must be below --p-max"));
    }
    if steps < 2 {
        return Err(usage("--steps must be at least 2"));
    }
    let h = (p_max - p_min) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| if i + 1 == steps { p_max } else { p_min + h * i as f64 })
        .collect())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let grid = p_grid(args.p_min, args.p_max, args.steps)?;
    if args.match_tol.is_nan() || args.match_tol < 0.0 {
        return Err(usage("--match-tol must be non-negative"));
    }
    let geom: Geometry = args.geometry.into();
    let sweep = sweep_p(args.n, &grid, geom, args.match_tol)?;
    let params = json!({
        "n": args.n,
        "p_min": args.p_min,
        "p_max": args.p_max,
        "steps": args.steps,
        "geometry": geometry_name(geom),
        "match_tol": args.match_tol,
    });
    let mut out = format!("# {}\n", RunManifest::new("sweep", params, None).to_line());
    let xs: Vec<String> = (1..=args.n).map(|i| format!("x{i}")).collect();
    out += &format!("p,{},cost,segment_id\n", xs.join(","));
    for (segment_id, seg) in sweep.breakpoints.iter().enumerate() {
        for i in seg.start..=seg.end {
            let row: Vec<String> = std::iter::once(sweep.p_grid[i])
                .chain(sweep.placements[i].iter().copied())
                .chain(std::iter::once(sweep.costs[i]))
                .map(sig12)
                .collect();
            out += &format!("{},{segment_id}\n", row.join(","));
        }
    }
    write_output(args.out.as_deref(), &out)
}

fn cmd_random_study(args: &RandomStudyArgs) -> Result<(), CliError> {
    if args.n_list.contains(&0) {
        return Err(usage("--n-list entries must be positive"));
    }
    let params = json!({"p": args.p, "n_list": args.n_list, "reps": args.reps});
    let mut out = format!(
        "# {}\n",
        RunManifest::new("random-study", params, Some(args.seed)).to_line()
    );
    out += "n,mc_estimate,mc_stderr,exact_mixture,equispaced_cost,equispaced_asymptote,random_asymptote\n";
    for &n in &args.n_list {
        let r = random_study_row(n, args.p, args.reps, args.seed)?;
        let cells = [
            r.mc_estimate,
            r.mc_stderr,
            r.exact_mixture,
            r.equispaced_cost,
            r.equispaced_asymptote,
            r.random_asymptote,
        ]
        .map(sig12);
        out += &format!("{n},{}\n", cells.join(","));
    }
    write_output(args.out.as_deref(), &out)
}

fn cmd_cortes(args: &CortesArgs) -> Result<(), CliError> {
    let report = cortes_checks(args.n, args.k, args.slack)?;
    let params = json!({"n": args.n, "k": args.k, "slack": args.slack});
    print_json(&json!({
        "manifest": RunManifest::new("cortes", params, None),
        "report": report,
    }))
}

fn cmd_export_lp(args: &ExportArgs) -> Result<(), CliError> {
    let geom: Geometry = args.geometry.into();
    let model = args.law.model(args.n)?;
    let built = build_lp(args.n, &model, geom)?;
    let params = json!({
        "n": args.n,
        "law": args.law.describe(),
        "geometry": geometry_name(geom),
    });
    let header = RunManifest::new("export-lp", params, None).to_line();
    let body = format!("\\ {header}\n{}", export_lp_text(&built.lp));
    write_output(args.out.as_deref(), &body)
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    if !(args.tol_scale.is_finite() && args.tol_scale >= 0.0) {
        return Err(usage("--tol-scale must be a non-negative number"));
    }
    let suite = match args.suite {
        SuiteArg::Fast => Suite::Fast,
        SuiteArg::Full => Suite::Full,
    };
    let cfg = CheckConfig {
        tol_scale: args.tol_scale,
        ..CheckConfig::new(suite, args.seed)
    };
    let started = Instant::now();
    let outcomes = run_suite(&cfg);
    let width = CHECKS.iter().map(|c| c.1.len()).max().unwrap_or(0);
    let mut text = String::new();
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        text += &format!(
            "[{:02}] {verdict}  {:<width$}  {:>7.2}s  {}\n",
            o.id, o.name, o.seconds, o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    text += &format!(
        "{} of {} checks passed in {:.1}s (seed {})\n",
        outcomes.len() - failed,
        outcomes.len(),
        started.elapsed().as_secs_f64(),
        args.seed
    );
    write_output(None, &text)?;
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COVERPLACE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| usage(format!("COVERPLACE_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Failure(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::RandomStudy(a) => cmd_random_study(a),
        Command::Cortes(a) => cmd_cortes(a),
        Command::ExportLp(a) => cmd_export_lp(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
