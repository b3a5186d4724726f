use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use psps_core::fairness::{build_opt_psps_fair, FairContext, FairnessMethod, ShedTally};
use psps_core::ingest::{
    assemble_season, line_risks, read_demand_csv, read_profile_csv, read_risk_csv, scale_demand, AlphaSchedule,
    DayInputs, DemandProfile, RiskRaster,
};
use psps_core::metrics::{beta_sweep, parse_betas, MetricsReport, MetricsRow, RowKind};
use psps_core::network::{validate, LoadOptions, Network};
use psps_core::psps::{build_opt_psps, ObjectiveContext};
use psps_core::sim::{run, RealtimePolicy, ScenarioConfig, SimulationResult};
use psps_core::solver::{Backend, SolverConfig};
use psps_core::synthetic::{self, PocketSpec};

#[derive(Parser)]
#[command(name = "psps", version, about = "Plan wildfire power shutoffs with fair load shedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file against the network invariants.
    Validate {
        #[arg(env = "PSPS_CASE")]
        case: PathBuf,
    },
    /// Simulate a season and write per-day outputs.
    Run(RunArgs),
    /// Simulate a season for several beta values and tabulate the metrics.
    Sweep(SweepArgs),
    /// Summarize the outputs of `run` or `sweep`.
    Report {
        #[arg(long = "in", env = "PSPS_IN")]
        dir: PathBuf,
    },
    /// Write a synthetic case with demand and risk files.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    None,
    Minmax,
    Weighted,
    Range,
}

impl MethodArg {
    fn method(self) -> Option<FairnessMethod> {
        match self {
            MethodArg::None => None,
            MethodArg::Minmax => Some(FairnessMethod::MinMaxShed),
            MethodArg::Weighted => Some(FairnessMethod::WeightedPenalty),
            MethodArg::Range => Some(FairnessMethod::ShedRange),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Highs,
    Bnb,
}

#[derive(Clone, Copy, ValueEnum)]
enum RealtimeArg {
    MinShed,
    Fair,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, env = "PSPS_CASE")]
    case: PathBuf,
    /// Demand CSV (`bus_id,hour,value_pu`) used for every day, or a directory
    /// with one CSV per day in file-name order.
    #[arg(long, env = "PSPS_DEMAND")]
    demand: PathBuf,
    /// System profile CSV (`hour,fraction`). When given, demand files hold
    /// hour-1 nominal loads that are scaled by the profile.
    #[arg(long, env = "PSPS_PROFILE")]
    profile: Option<PathBuf>,
    /// Risk raster JSON used for every day, or a directory of one raster per
    /// day.
    #[arg(long, env = "PSPS_RASTER", conflicts_with = "risk_csv")]
    raster: Option<PathBuf>,
    /// Per-line risk CSV (`day,line_id,risk`).
    #[arg(long = "risk-csv", visible_alias = "risk", env = "PSPS_RISK_CSV")]
    risk_csv: Option<PathBuf>,
    /// Path integration step in raster cells.
    #[arg(long, default_value_t = 0.1, env = "PSPS_STEP")]
    step: f64,
    /// Number of days; defaults to what the inputs cover.
    #[arg(long, env = "PSPS_DAYS")]
    days: Option<usize>,
    #[arg(long, default_value_t = AlphaSchedule::DEFAULT_ALPHA_LO, env = "PSPS_ALPHA_LO")]
    alpha_lo: f64,
    #[arg(long, default_value_t = AlphaSchedule::DEFAULT_ALPHA_HI, env = "PSPS_ALPHA_HI")]
    alpha_hi: f64,
    /// Historical total-risk extremes; default to the season's own.
    #[arg(long, env = "PSPS_HIST_RISK_MIN", requires = "hist_risk_max")]
    hist_risk_min: Option<f64>,
    #[arg(long, env = "PSPS_HIST_RISK_MAX", requires = "hist_risk_min")]
    hist_risk_max: Option<f64>,
    /// Keep the case's generator lower limits instead of zeroing them.
    #[arg(long, env = "PSPS_KEEP_GEN_MIN")]
    keep_gen_min: bool,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "none", env = "PSPS_METHOD")]
    method: MethodArg,
    #[arg(long, default_value_t = 0.5, env = "PSPS_BETA")]
    beta: f64,
    #[arg(long, default_value_t = 0.05, env = "PSPS_ZETA")]
    zeta: f64,
    #[arg(long, default_value_t = 0.9, env = "PSPS_ETA")]
    eta: f64,
    #[arg(long, default_value_t = 0.01, env = "PSPS_GAP")]
    gap: f64,
    /// Per-solve time limit in seconds.
    #[arg(long, default_value_t = 300.0, env = "PSPS_TIME_LIMIT")]
    time_limit: f64,
    #[arg(long, default_value_t = 0, env = "PSPS_SEED")]
    seed: u64,
    #[arg(long, value_enum, env = "PSPS_SOLVER")]
    solver: Option<SolverArg>,
    #[arg(long, value_enum, default_value = "min-shed", env = "PSPS_REALTIME")]
    realtime: RealtimeArg,
    /// Skip the per-day minimum-shed bound solves.
    #[arg(long, env = "PSPS_NO_BOUNDS")]
    no_bounds: bool,
}

impl ScenarioArgs {
    fn config(&self) -> ScenarioConfig {
        ScenarioConfig {
            beta: self.beta,
            zeta: self.zeta,
            eta: self.eta,
            method: self.method.method(),
            solver: SolverConfig {
                relative_mip_gap: self.gap,
                time_limit: self.time_limit,
                seed: self.seed,
                backend: match self.solver {
                    Some(SolverArg::Highs) => Backend::Highs,
                    Some(SolverArg::Bnb) => Backend::BranchAndBound,
                    None => Backend::default(),
                },
            },
            realtime: match self.realtime {
                RealtimeArg::MinShed => RealtimePolicy::MinShed,
                RealtimeArg::Fair => RealtimePolicy::FairObjective,
            },
            compute_bounds: !self.no_bounds,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, env = "PSPS_OUT")]
    out: PathBuf,
    /// Also write every day's models in LP format.
    #[arg(long, env = "PSPS_EXPORT_LP")]
    export_lp: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: InputArgs,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.05:0.95:0.05", env = "PSPS_BETAS")]
    betas: String,
    /// Concurrent runs; defaults to the available cores.
    #[arg(long, env = "PSPS_WORKERS")]
    workers: Option<usize>,
    #[arg(long, env = "PSPS_OUT")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    /// Meshed core with radial load pockets behind risky feeders.
    Pockets,
    /// 73-bus three-area system.
    Rts,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "pockets", env = "PSPS_KIND")]
    kind: Kind,
    #[arg(long, default_value_t = 10, env = "PSPS_DAYS")]
    days: usize,
    #[arg(long, default_value_t = 24, env = "PSPS_HOURS")]
    hours: usize,
    #[arg(long, default_value_t = 7, env = "PSPS_SEED")]
    seed: u64,
    #[arg(long, env = "PSPS_OUT")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out).expect("json output"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            let kind = err
                .chain()
                .find_map(|e| e.downcast_ref::<psps_core::Error>())
                .map_or("error", |e| e.kind());
            let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
            let report = json!({"error": {"kind": kind, "message": err.to_string(), "chain": chain}});
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Validate { case } => cmd_validate(&case),
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Report { dir } => cmd_report(&dir),
        Command::Generate(args) => cmd_generate(&args),
    }
}

fn cmd_validate(case: &Path) -> Result<Value> {
    let text = fs::read_to_string(case).with_context(|| format!("reading {}", case.display()))?;
    let net = Network::from_json_with(&text, LoadOptions { zero_gen_min: false })
        .with_context(|| format!("parsing {}", case.display()))?;
    let violations = validate(&net);
    if !violations.is_empty() {
        bail!(
            "{} invariant violation(s): {}",
            violations.len(),
            serde_json::to_string(&violations)?
        );
    }
    Ok(json!({
        "valid": true,
        "buses": net.n_buses(),
        "generators": net.n_generators(),
        "lines": net.n_lines(),
    }))
}

/// Sorted regular files in `dir` with the given extension.
fn files_in(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .{ext} files in {}", dir.display());
    }
    Ok(files)
}

/// Files for a per-day input: a directory holds one per day, a single file is
/// reused for every day (`None` count).
fn per_day(path: &Path, ext: &str) -> Result<(Vec<PathBuf>, Option<usize>)> {
    if path.is_dir() {
        let files = files_in(path, ext)?;
        let n = files.len();
        Ok((files, Some(n)))
    } else {
        Ok((vec![path.to_path_buf()], None))
    }
}

fn load_network(inputs: &InputArgs) -> Result<Network> {
    let opts = LoadOptions {
        zero_gen_min: !inputs.keep_gen_min,
    };
    let net = Network::from_path(&inputs.case, opts).with_context(|| format!("loading {}", inputs.case.display()))?;
    let violations = validate(&net);
    if !violations.is_empty() {
        bail!("case violates network invariants: {}", serde_json::to_string(&violations)?);
    }
    Ok(net)
}

fn load_season(net: &Network, inputs: &InputArgs, seed: u64) -> Result<Vec<DayInputs>> {
    let profile = match &inputs.profile {
        Some(p) => Some(read_profile_csv(File::open(p).with_context(|| format!("opening {}", p.display()))?)?),
        None => None,
    };
    let (demand_files, demand_days) = per_day(&inputs.demand, "csv")?;
    let demand: Vec<DemandProfile> = demand_files
        .iter()
        .map(|p| -> Result<DemandProfile> {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let d = match &profile {
                Some(shape) => {
                    let nominal = read_demand_csv(net, f, Some(1))?;
                    let peaks: Vec<f64> = nominal.values.iter().map(|r| r[0]).collect();
                    scale_demand(&peaks, shape, shape.len())?
                }
                None => read_demand_csv(net, f, None)?,
            };
            Ok(d)
        })
        .collect::<Result<_>>()
        .context("reading demand")?;

    let (risk, risk_days): (Vec<Vec<f64>>, Option<usize>) = match (&inputs.raster, &inputs.risk_csv) {
        (Some(path), None) => {
            let (files, n) = per_day(path, "json")?;
            let risks = files
                .iter()
                .map(|p| -> Result<Vec<f64>> {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let raster = RiskRaster::from_json(&text).with_context(|| format!("parsing {}", p.display()))?;
                    Ok(line_risks(net, &raster, inputs.step)?)
                })
                .collect::<Result<_>>()?;
            (risks, n)
        }
        (None, Some(path)) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let table = read_risk_csv(net, f).with_context(|| format!("reading {}", path.display()))?;
            let n = table.values.len();
            (table.values, Some(n))
        }
        _ => bail!("give exactly one of --raster or --risk-csv"),
    };

    let available = [demand_days, risk_days].into_iter().flatten().min();
    let days = match (inputs.days, available) {
        (Some(j), Some(n)) if j > n => bail!("asked for {j} days but the inputs cover only {n}"),
        (Some(j), _) => j,
        (None, Some(n)) => n,
        (None, None) => 1,
    };
    if days == 0 {
        bail!("at least one day is required");
    }
    let pick = |len: usize, k: usize| if len == 1 { 0 } else { k };
    let actual: Vec<DemandProfile> = (0..days).map(|k| demand[pick(demand.len(), k)].clone()).collect();
    let risk: Vec<Vec<f64>> = (0..days).map(|k| risk[pick(risk.len(), k)].clone()).collect();

    let schedule = match (inputs.hist_risk_min, inputs.hist_risk_max) {
        (Some(lo), Some(hi)) => AlphaSchedule::new(inputs.alpha_lo, inputs.alpha_hi, lo, hi)?,
        _ => {
            let totals: Vec<f64> = risk.iter().map(|r| r.iter().sum()).collect();
            let h = AlphaSchedule::from_history(&totals)?;
            AlphaSchedule::new(inputs.alpha_lo, inputs.alpha_hi, h.hist_risk_min, h.hist_risk_max)?
        }
    };
    Ok(assemble_season(actual, risk, &schedule, seed)?)
}

fn summary(result: &SimulationResult) -> Result<Value> {
    let row = MetricsRow::from_result(RowKind::Beta, result)?;
    let triangle = MetricsRow::triangle(result)?.map(|t| t.cumulative_shed_pct);
    Ok(json!({
        "method": result.method.map(|m| m.as_str()),
        "beta": result.beta,
        "days": result.days.len(),
        "cumulative_shed_pct": row.cumulative_shed_pct,
        "mad_normalized": row.mad_normalized,
        "max_shed_pct": row.max_shed_pct,
        "mean_hamming": row.mean_hamming,
        "min_shed_pct": triangle,
    }))
}

fn cmd_run(args: &RunArgs) -> Result<Value> {
    let net = load_network(&args.inputs)?;
    let cfg = args.scenario.config();
    let season = load_season(&net, &args.inputs, args.scenario.seed)?;
    let result = run(&net, &season, &cfg)?;
    result.write_outputs(&args.out, Some(&net))?;
    fs::write(args.out.join("scenario.json"), serde_json::to_string_pretty(&cfg)?)?;
    if args.export_lp {
        export_lp(&net, &season, &cfg, &result, &args.out.join("lp"))?;
    }
    let mut out = summary(&result)?;
    out["out"] = json!(args.out);
    Ok(out)
}

/// Rebuilds each day's models from the recorded plans and writes them as LP
/// files.
fn export_lp(net: &Network, season: &[DayInputs], cfg: &ScenarioConfig, result: &SimulationResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut tally = ShedTally::new(net.n_buses(), cfg.eta)?;
    for (day, rec) in season.iter().zip(&result.days) {
        let ctx = ObjectiveContext::new(day.alpha, &day.forecast, &day.risk)?;
        let base = build_opt_psps(net, &day.forecast, &day.risk, &ctx)?;
        fs::write(dir.join(format!("day_{:02}_base.lp", day.day)), base.model.to_lp_string())?;
        if let Some(method) = cfg.method {
            let fctx = FairContext {
                beta: cfg.beta,
                zeta: cfg.zeta,
                baseline_z: rec.z_base.clone(),
                tally: tally.clone(),
            };
            let fair = build_opt_psps_fair(net, &day.forecast, &day.risk, &fctx, method)?;
            fs::write(dir.join(format!("day_{:02}_fair.lp", day.day)), fair.inner.model.to_lp_string())?;
        }
        tally = tally.update(&rec.bus_shed_actual())?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<Value> {
    let net = load_network(&args.inputs)?;
    let cfg = args.scenario.config();
    if cfg.method.is_none() {
        bail!("sweep needs --method minmax, weighted or range");
    }
    let betas = parse_betas(&args.betas)?;
    let season = load_season(&net, &args.inputs, args.scenario.seed)?;
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let runs = beta_sweep(&net, &season, &cfg, &betas, workers)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("sweep.csv"), runs.report.to_csv()?)?;
    fs::write(args.out.join("sweep.json"), serde_json::to_string_pretty(&runs.report)?)?;
    runs.star.write_outputs(&args.out.join("star"), Some(&net))?;
    Ok(json!({
        "rows": runs.report.rows.len(),
        "outliers": runs.report.rows.iter().filter(|r| r.outlier).count(),
        "out": args.out,
    }))
}

fn cmd_report(dir: &Path) -> Result<Value> {
    let sweep = dir.join("sweep.json");
    if sweep.is_file() {
        let report: MetricsReport = serde_json::from_str(&fs::read_to_string(&sweep)?)
            .with_context(|| format!("parsing {}", sweep.display()))?;
        return Ok(serde_json::to_value(report)?);
    }
    let path = dir.join("result.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let result = SimulationResult::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    summary(&result)
}

fn cmd_generate(args: &GenerateArgs) -> Result<Value> {
    if args.days == 0 || args.hours == 0 {
        bail!("--days and --hours must be positive");
    }
    let season = match args.kind {
        Kind::Pockets => synthetic::pocket_season(&PocketSpec {
            days: args.days,
            hours: args.hours,
            seed: args.seed,
            ..PocketSpec::default()
        }),
        Kind::Rts => synthetic::rts_season(args.seed, args.days, args.hours),
    };
    let out = &args.out;
    fs::create_dir_all(out.join("demand"))?;
    fs::write(out.join("case.json"), season.network.to_json())?;
    let net = &season.network;
    for (k, day) in season.demand.iter().enumerate() {
        let mut text = String::from("bus_id,hour,value_pu\n");
        for (n, row) in day.values.iter().enumerate() {
            for (t, v) in row.iter().enumerate() {
                text.push_str(&format!("{},{},{}\n", net.buses[n].id, t + 1, v));
            }
        }
        fs::write(out.join("demand").join(format!("day_{:02}.csv", k + 1)), text)?;
    }
    let mut text = String::from("day,line_id,risk\n");
    for (k, day) in season.risk.iter().enumerate() {
        for (l, r) in day.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", k + 1, net.lines[l].id, r));
        }
    }
    fs::write(out.join("risk.csv"), text)?;
    let raster = synthetic::ridge_raster(net, args.seed);
    fs::write(out.join("raster.json"), serde_json::to_string(&raster)?)?;
    Ok(json!({
        "buses": net.n_buses(),
        "generators": net.n_generators(),
        "lines": net.n_lines(),
        "days": args.days,
        "hours": args.hours,
        "out": out,
    }))
}
