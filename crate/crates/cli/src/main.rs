use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use awdpd_cli::error::CliResult;
use awdpd_cli::ingest::{ingest_path, read_table};
use awdpd_cli::{evaluate, CliError, Filter, Ingested, LogTransform, ModelFile};
use awdpd_core::influence::{linspace, synthetic_design};
use awdpd_core::irls::resolve_grid;
use awdpd_core::report::{fmt_f64, write_json};
use awdpd_core::sim::write_table_csv;
use awdpd_core::{
    default_initial, fit, if_norm_curve, run_experiment, two_stage_fit, Coefficients, Contamination,
    FitConfig, FitResult, IfRequest, LabelMode, LambdaGrid, Method, PathResult, SimScenario, WeightRefresh,
    WeightScheme,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "awdpd", version, about = "Robust sparse logistic regression (AW-DPD-LASSO)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model: at a fixed --lambda, or with λ chosen by HGIC along a path.
    Fit(FitCmd),
    /// Fit the whole λ path and report every point.
    Path(PathCmd),
    /// Monte-Carlo comparison of estimators on contaminated synthetic data.
    Simulate(SimCmd),
    /// ‖IF‖₂ along the contamination direction t·(1, …, 1) on a synthetic design.
    Influence(InfluenceCmd),
    /// Accuracy and MAE of a saved model on a CSV.
    Eval(EvalCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Constant weights (DPD-LASSO).
    Lasso,
    /// `w(s) = 1/s` from the first-stage estimate.
    Adaptive,
    /// SCAD-derivative weights.
    Scad,
}

#[derive(Clone, Copy, Debug)]
struct GridArg {
    points: usize,
    ratio: f64,
}

fn parse_grid(s: &str) -> Result<GridArg, String> {
    let (a, b) = s.split_once(',').ok_or("expected N_POINTS,RATIO")?;
    let points = a.trim().parse().map_err(|_| format!("bad point count `{a}`"))?;
    let ratio = b.trim().parse().map_err(|_| format!("bad ratio `{b}`"))?;
    Ok(GridArg { points, ratio })
}

fn parse_label(s: &str) -> Result<LabelMode, String> {
    match s {
        "0" => Ok(LabelMode::Fixed(0)),
        "1" => Ok(LabelMode::Fixed(1)),
        "misfit" => Ok(LabelMode::Misfit),
        _ => Err(format!("expected 0, 1 or misfit, got `{s}`")),
    }
}

#[derive(Args, Clone)]
struct SchemeArgs {
    #[arg(long, value_enum, default_value = "adaptive")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 3.7)]
    scad_a: f64,
    #[arg(long, default_value_t = 1e6)]
    weight_cap: f64,
}

impl SchemeArgs {
    fn scheme(&self) -> WeightScheme {
        let s = match self.scheme {
            SchemeArg::Lasso => WeightScheme::constant(),
            SchemeArg::Adaptive => WeightScheme::hard_threshold(),
            SchemeArg::Scad => WeightScheme::scad(self.scad_a),
        };
        s.with_cap(self.weight_cap)
    }
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    alpha: f64,
    /// Auto grid: N_POINTS log-spaced values from λ_max down to λ_max·RATIO.
    #[arg(long, value_name = "N_POINTS,RATIO", value_parser = parse_grid)]
    lambda_grid: Option<GridArg>,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Relative objective decrease that stops the IRLS loop.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Compute adaptive weights once per fit instead of every iteration.
    #[arg(long)]
    frozen_weights: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn config(&self) -> CliResult<FitConfig> {
        let mut cfg = FitConfig {
            alpha: self.alpha,
            scheme: self.scheme.scheme(),
            max_iter: self.max_iter,
            obj_tol: self.tol,
            seed: self.seed,
            ..FitConfig::default()
        };
        if let Some(g) = self.lambda_grid {
            cfg.lambda_grid = LambdaGrid::Auto { points: g.points, ratio: g.ratio };
        }
        if self.frozen_weights {
            cfg.refresh = WeightRefresh::Frozen;
        }
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct FilterArgs {
    /// Keep only columns with |corr(x, y)| above this value.
    #[arg(long)]
    corr_threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    log_transform: LogTransform,
    #[arg(long, allow_hyphen_values = true)]
    floor: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ceiling: Option<f64>,
}

impl FilterArgs {
    fn filter(&self) -> CliResult<Filter> {
        let f = Filter {
            corr_threshold: self.corr_threshold,
            log_transform: self.log_transform,
            floor: self.floor,
            ceiling: self.ceiling,
        };
        f.validate()?;
        Ok(f)
    }
}

#[derive(Args)]
struct FitCmd {
    /// CSV with a header row and a binary `y` column.
    #[arg(long)]
    data: PathBuf,
    /// Fit at this λ instead of selecting along a path.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathCmd {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContaminationArg {
    None,
    Labels,
    Leverage,
}

#[derive(Args)]
struct SimCmd {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long, value_enum, default_value = "none")]
    contamination: ContaminationArg,
    /// Share of leverage rows corrupted on a true-nonzero covariate.
    #[arg(long, default_value_t = 0.5)]
    leverage_mix: f64,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    /// JSON array of methods `{name, config, two_stage}`; defaults to four built-in methods.
    #[arg(long)]
    methods: Option<PathBuf>,
    /// α of the built-in robust methods.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write summaries and per-replication metrics as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct InfluenceCmd {
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    lambda: f64,
    /// Slopes of the evaluation point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "3,2")]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    intercept: f64,
    /// Rows of the synthetic design.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    t_max: f64,
    #[arg(long, default_value_t = 401)]
    t_points: usize,
    /// Label of the contamination point: 0, 1, or misfit (the less likely label at x_t).
    #[arg(long, value_parser = parse_label, default_value = "misfit")]
    y_t: LabelMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalCmd {
    /// Model JSON, or the output of `fit`/`path`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct IngestSummary {
    rows: usize,
    retained: usize,
    dropped_zero_variance: Vec<String>,
    dropped_low_correlation: Vec<String>,
}

#[derive(Serialize)]
struct FitSummary {
    lambda: f64,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    clamped_fraction: f64,
    inner_unconverged: usize,
}

#[derive(Serialize)]
struct PointReport {
    lambda: f64,
    hgic: Option<f64>,
    coefficients: Option<IndexMap<String, f64>>,
    support: Vec<String>,
    fit: Option<FitSummary>,
    error: Option<String>,
}

#[derive(Serialize)]
struct StageReport {
    stage: &'static str,
    scheme: WeightScheme,
    lambdas: Vec<f64>,
    hgic: Vec<Option<f64>>,
    lambda_star: f64,
    selected_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<Vec<PointReport>>,
}

#[derive(Serialize)]
struct FitReport {
    schema: &'static str,
    model: ModelFile,
    support: Vec<String>,
    fit: FitSummary,
    ingest: IngestSummary,
    stages: Vec<StageReport>,
}

fn summary(f: &FitResult) -> FitSummary {
    FitSummary {
        lambda: f.lambda,
        iterations: f.iterations,
        converged: f.converged,
        objective_trace: f.objective_trace.clone(),
        clamped_fraction: f.clamped_fraction,
        inner_unconverged: f.inner_unconverged,
    }
}

fn named(names: &[String], beta: &Coefficients) -> IndexMap<String, f64> {
    std::iter::once((awdpd_cli::INTERCEPT_NAME.to_string(), beta.intercept()))
        .chain(names.iter().cloned().zip(beta.slopes().iter().copied()))
        .collect()
}

fn support_names(names: &[String], beta: &Coefficients) -> Vec<String> {
    beta.support().iter().map(|j| names[j - 1].clone()).collect()
}

fn stage_report(stage: &'static str, scheme: WeightScheme, path: &PathResult, names: &[String], full: bool) -> StageReport {
    let points = full.then(|| {
        path.points
            .iter()
            .map(|p| PointReport {
                lambda: p.lambda,
                hgic: p.hgic,
                coefficients: p.fit.as_ref().map(|f| named(names, &f.beta_hat)),
                support: p.fit.as_ref().map(|f| support_names(names, &f.beta_hat)).unwrap_or_default(),
                fit: p.fit.as_ref().map(summary),
                error: p.error.clone(),
            })
            .collect()
    });
    StageReport {
        stage,
        scheme,
        lambdas: path.lambdas(),
        hgic: path.hgic_values(),
        lambda_star: path.lambda_star,
        selected_index: path.selected_index,
        points,
    }
}

fn input(path: &Path) -> CliResult<&Path> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(path)
}

/// Writes to `out`, or to stdout when `None`.
fn with_output(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match out {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult<()> {
    with_output(out, |w| {
        write_json(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn stage1_config(cfg: &FitConfig) -> FitConfig {
    FitConfig {
        scheme: WeightScheme::constant().with_cap(cfg.scheme.cap),
        ..cfg.clone()
    }
}

fn report(
    ing: Ingested,
    cfg: &FitConfig,
    selected: &FitResult,
    lambda_star: f64,
    stages: Vec<StageReport>,
) -> CliResult<FitReport> {
    let names = ing.preprocessing.retained.clone();
    let ingest = IngestSummary {
        rows: ing.data.n(),
        retained: names.len(),
        dropped_zero_variance: ing.dropped_zero_variance,
        dropped_low_correlation: ing.dropped_low_correlation,
    };
    Ok(FitReport {
        schema: "awdpd-fit/1",
        model: ModelFile::new(cfg.alpha, lambda_star, cfg.scheme, &selected.beta_hat, ing.preprocessing)?,
        support: support_names(&names, &selected.beta_hat),
        fit: summary(selected),
        ingest,
        stages,
    })
}

fn path_stages(ing: &Ingested, cfg: &FitConfig, full: bool) -> CliResult<(FitResult, f64, Vec<StageReport>)> {
    let names = &ing.preprocessing.retained;
    let ts = two_stage_fit(&ing.data, cfg)?;
    let mut stages = vec![stage_report("initial", stage1_config(cfg).scheme, &ts.initial, names, full)];
    if let Some(a) = &ts.adaptive {
        stages.push(stage_report("adaptive", cfg.scheme, a, names, full));
    }
    let last = ts.final_path();
    Ok((last.selected.clone(), last.lambda_star, stages))
}

fn run_fit(cmd: FitCmd) -> CliResult<()> {
    let mut cfg = cmd.model.config()?;
    let filter = cmd.filter.filter()?;
    if let Some(l) = cmd.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--lambda must be positive, got {l}")));
        }
        if cmd.model.lambda_grid.is_some() {
            return Err(CliError::Usage("--lambda and --lambda-grid are mutually exclusive".into()));
        }
        cfg.lambda = l;
    }
    let ing = ingest_path(input(&cmd.data)?, &filter)?;
    let rep = match cmd.lambda {
        Some(l) => {
            let first = fit(&ing.data, &stage1_config(&cfg), &default_initial(&ing.data))?;
            let chosen = if cfg.scheme.is_adaptive() {
                fit(&ing.data, &cfg, &first.beta_hat)?
            } else {
                first
            };
            report(ing, &cfg, &chosen, l, Vec::new())?
        }
        None => {
            let (sel, lstar, stages) = path_stages(&ing, &cfg, false)?;
            report(ing, &cfg, &sel, lstar, stages)?
        }
    };
    emit_json(cmd.out.as_deref(), &rep)
}

fn run_path(cmd: PathCmd) -> CliResult<()> {
    let cfg = cmd.model.config()?;
    let filter = cmd.filter.filter()?;
    let ing = ingest_path(input(&cmd.data)?, &filter)?;
    // Surface an unusable grid as a usage error before any fitting.
    resolve_grid(&ing.data, &cfg, &default_initial(&ing.data)).map_err(CliError::usage)?;
    let (sel, lstar, stages) = path_stages(&ing, &cfg, true)?;
    emit_json(cmd.out.as_deref(), &report(ing, &cfg, &sel, lstar, stages)?)
}

fn default_methods(alpha: f64) -> Vec<Method> {
    let robust = |scheme| FitConfig { alpha, scheme, ..FitConfig::default() };
    vec![
        Method::new("lasso", FitConfig { alpha: 0.0, ..FitConfig::default() }),
        Method::new("dpd-lasso", robust(WeightScheme::constant())),
        Method::new("ad-dpd-lasso", robust(WeightScheme::hard_threshold())),
        Method::new("aw-dpd-lasso-scad", robust(WeightScheme::scad(3.7))),
    ]
}

fn run_simulate(cmd: SimCmd) -> CliResult<()> {
    let contamination = match cmd.contamination {
        ContaminationArg::None if cmd.eps != 0.0 => {
            return Err(CliError::Usage("--eps needs --contamination labels or leverage".into()));
        }
        ContaminationArg::None => Contamination::None,
        ContaminationArg::Labels => Contamination::LabelFlip { eps: cmd.eps },
        ContaminationArg::Leverage => Contamination::Leverage { eps: cmd.eps },
    };
    let mut scn = SimScenario::new(cmd.n, cmd.k).map_err(CliError::usage)?;
    scn.rho = cmd.rho;
    scn.contamination = contamination;
    scn.leverage_mix = cmd.leverage_mix;
    scn.seed = cmd.seed;
    scn.validate().map_err(CliError::usage)?;
    if cmd.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let methods = match &cmd.methods {
        Some(p) => {
            let file = File::open(input(p)?)?;
            let methods: Vec<Method> =
                serde_json::from_reader(io::BufReader::new(file)).map_err(CliError::usage)?;
            if methods.is_empty() {
                return Err(CliError::Usage("methods file lists no methods".into()));
            }
            methods
        }
        None => default_methods(cmd.alpha),
    };
    for m in &methods {
        m.config
            .validate()
            .map_err(|e| CliError::Usage(format!("method `{}`: {e}", m.name)))?;
    }
    let table = run_experiment(&scn, &methods, cmd.reps)?;
    if let Some(p) = &cmd.json {
        emit_json(Some(p), &table)?;
    }
    with_output(cmd.out.as_deref(), |w| Ok(write_table_csv(&table, w)?))
}

fn run_influence(cmd: InfluenceCmd) -> CliResult<()> {
    if cmd.beta.is_empty() || cmd.beta.iter().chain([&cmd.intercept]).any(|b| !b.is_finite()) {
        return Err(CliError::Usage("--beta needs finite slopes".into()));
    }
    if cmd.t_points == 0 || !(cmd.t_min <= cmd.t_max) || !cmd.t_min.is_finite() || !cmd.t_max.is_finite() {
        return Err(CliError::Usage("need --t-points >= 1 and finite --t-min <= --t-max".into()));
    }
    if !(cmd.lambda >= 0.0) || !cmd.lambda.is_finite() {
        return Err(CliError::Usage("--lambda must be non-negative".into()));
    }
    let scheme = cmd.scheme.scheme();
    awdpd_core::DpdParams::new(cmd.alpha).map_err(CliError::usage)?;
    scheme.validate().map_err(CliError::usage)?;
    let beta = Coefficients::from_vec(std::iter::once(cmd.intercept).chain(cmd.beta.iter().copied()).collect());
    let data = synthetic_design(cmd.n, &beta, cmd.seed)?;
    let req = IfRequest::new(&data, beta, cmd.alpha, cmd.lambda, scheme);
    let curve = if_norm_curve(&req, cmd.y_t, &linspace(cmd.t_min, cmd.t_max, cmd.t_points))?;
    with_output(cmd.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["t", "if_norm"])?;
        for (t, v) in curve {
            csv.write_record([fmt_f64(t), v.map(fmt_f64).unwrap_or_default()])?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn run_eval(cmd: EvalCmd) -> CliResult<()> {
    let model = ModelFile::load(input(&cmd.model)?)?;
    let table = read_table(input(&cmd.data)?)?;
    let probs = model.predict(&table)?;
    emit_json(cmd.out.as_deref(), &evaluate(&probs, &table.y)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Fit(c) => run_fit(c),
        Command::Path(c) => run_path(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Influence(c) => run_influence(c),
        Command::Eval(c) => run_eval(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("awdpd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
