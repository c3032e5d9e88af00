mod format;
mod run_config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use nlnoise::analysis::analyze_full;
use nlnoise::scan::DEFAULT_STOP_THRESHOLD;
use nlnoise::{
    build_lag_problem, embedding_scan, erf_fit, gen_henon, gen_ikeda, gen_lorenz, parse_var_list,
    subset_scan, AnalysisOptions, AnalysisReport, Dataset, EmbeddingSpec, GridConfig, HenonConfig,
    IkedaConfig, LorenzConfig, Noise, NoiseMode, ScanReport, VarRef, DEFAULT_MIN_COUNT,
};

use format::Fmt;
use run_config::RunConfig;

/// Model-free noise level estimates from pair statistics.
#[derive(Debug, Parser)]
#[command(name = "nlnoise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a test series (Ikeda, Hénon or Lorenz) as CSV.
    Generate(GenerateArgs),
    /// Linear and nonlinear residual estimates for one variable set.
    Analyze(AnalyzeArgs),
    /// Residual estimates for several variable sets or delay embeddings.
    Scan(ScanArgs),
    /// Conditional probabilities P(eps | delta) as CSV.
    Curve(CurveArgs),
    /// Gaussian erf fit of the plateau curve as CSV.
    FitErf(FitErfArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum System {
    Ikeda,
    Henon,
    Lorenz,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Iterative,
    Superimposed,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the primary output here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Where to write the run configuration (default: `<out>.run.json`, or a
    /// `run-config:` line on standard error without `--out`).
    #[arg(long)]
    run_config: Option<PathBuf>,
    /// Print all numbers with full precision.
    #[arg(long)]
    full_precision: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    system: System,
    #[arg(long)]
    n: Option<usize>,
    /// Noise standard deviation, applied to x.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Defaults to iterative for the maps and superimposed for Lorenz.
    #[arg(long, value_enum)]
    noise_mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override any generator parameter, e.g. `--set b=0.8` or
    /// `--set initial=[1,2,3]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone)]
struct VarList {
    text: String,
    vars: Vec<VarRef>,
}

fn parse_vars(s: &str) -> Result<VarList, String> {
    parse_var_list(s)
        .map(|vars| VarList {
            text: s.to_string(),
            vars,
        })
        .map_err(|e| e.to_string())
}

fn parse_bins(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| -> Result<usize, String> {
        match t.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(format!("invalid bin count '{t}'")),
        }
    };
    match s.split_once('x') {
        Some((e, d)) => Ok((parse(e)?, parse(d)?)),
        None => parse(s).map(|n| (n, n)),
    }
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let v = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok([v(lo)?, v(hi)?])
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Skip scaling y and every x column to zero mean and unit variance.
    #[arg(long)]
    no_standardize: bool,
    /// Pairs a delta column needs before it is used.
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    min_count: u64,
    /// Bin counts, `N` or `EPSxDELTA`.
    #[arg(long, value_parser = parse_bins, default_value = "40")]
    bins: (usize, usize),
    /// Fixed eps range `LO,HI` (needs `--delta-range`).
    #[arg(long, value_parser = parse_range, requires = "delta_range")]
    eps_range: Option<[f64; 2]>,
    /// Fixed delta range `LO,HI` (needs `--eps-range`).
    #[arg(long, value_parser = parse_range, requires = "eps_range")]
    delta_range: Option<[f64; 2]>,
    /// Worker threads for the pair loop. Results do not depend on it.
    #[arg(long, env = "NLNOISE_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
}

impl AnalysisArgs {
    fn options(&self) -> AnalysisOptions {
        let mut grid = GridConfig {
            n_eps_bins: self.bins.0,
            n_delta_bins: self.bins.1,
            ..GridConfig::default()
        };
        if let (Some(e), Some(d)) = (self.eps_range, self.delta_range) {
            grid.eps_range = e;
            grid.delta_range = d;
            grid.auto_range = false;
        }
        let mut opts = AnalysisOptions {
            grid,
            min_count: self.min_count,
            standardize: !self.no_standardize,
            ..AnalysisOptions::default()
        };
        if let Some(w) = self.workers {
            opts.workers = w as usize;
        }
        opts
    }
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// CSV file with a header row.
    input: PathBuf,
    /// Column to predict.
    #[arg(long)]
    target: String,
    /// Explanatory variables, e.g. `x@1,y@1`, `x@1..3` or `none`.
    #[arg(long, value_parser = parse_vars, default_value = "none")]
    vars: VarList,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("sets").required(true).args(["lags_up_to", "subsets"])))]
struct ScanArgs {
    input: PathBuf,
    #[arg(long)]
    target: String,
    /// Delay embeddings `{target@1 .. target@k}` for k = 0..=K.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    lags_up_to: Option<u32>,
    /// JSON list of variable sets, e.g. `["none", "x@1", "x@1,y@1"]`.
    #[arg(long)]
    subsets: Option<PathBuf>,
    /// Smallest improvement in NL fractional error that counts.
    #[arg(long, default_value_t = DEFAULT_STOP_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Emit only the plateau curve P(eps) with the delta that supplied each
    /// point, instead of the full matrix.
    #[arg(long)]
    plateau: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FitErfArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Print the fit and the fitted curve as JSON instead of CSV.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    output: OutputArgs,
}

/// Bad arguments that clap cannot catch on its own.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

/// The error chain on one line, skipping causes a message already quotes.
fn message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Scan(a) => scan(a),
        Command::Curve(a) => curve(a),
        Command::FitErf(a) => fit_erf(a),
    }
}

/// Primary output sink plus the matching run-config destination.
struct Sink<'a> {
    output: &'a OutputArgs,
}

impl Sink<'_> {
    fn write(&self, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
        match &self.output.out {
            Some(path) => {
                let file = File::create(path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                let mut w = BufWriter::new(file);
                f(&mut w)?;
                w.flush()
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                f(&mut w)?;
                w.flush()?;
            }
        }
        Ok(())
    }

    fn run_config(&self, cfg: &RunConfig) -> anyhow::Result<()> {
        let path = match (&self.output.run_config, &self.output.out) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(out)) => Some(sidecar_path(out)),
            (None, None) => None,
        };
        match path {
            Some(p) => {
                let text = serde_json::to_string_pretty(cfg)? + "\n";
                std::fs::write(&p, text).with_context(|| format!("cannot write {}", p.display()))
            }
            None => {
                eprintln!("run-config: {}", serde_json::to_string(cfg)?);
                Ok(())
            }
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".run.json");
    PathBuf::from(s)
}

fn apply_overrides<T>(base: &T, overrides: &[String]) -> anyhow::Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    let mut value = serde_json::to_value(base)?;
    let obj = value.as_object_mut().expect("configs serialize to objects");
    for o in overrides {
        let (key, raw) = o
            .split_once('=')
            .ok_or_else(|| UsageError(format!("--set expects KEY=VALUE, got '{o}'")))?;
        let key = key.trim();
        if !obj.contains_key(key) {
            let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
            return Err(UsageError(format!(
                "unknown parameter '{key}'; valid: {}",
                keys.join(", ")
            ))
            .into());
        }
        let v = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.into()));
        obj.insert(key.to_string(), v);
    }
    serde_json::from_value(value)
        .map_err(|e| UsageError(format!("invalid --set value: {e}")).into())
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let mode = |default: NoiseMode| match a.noise_mode {
        Some(ModeArg::Iterative) => NoiseMode::Iterative,
        Some(ModeArg::Superimposed) => NoiseMode::Superimposed,
        None => default,
    };
    let noise = |default| Noise {
        mode: mode(default),
        sigma: a.noise,
    };
    let (series, config) = match a.system {
        System::Ikeda => {
            let mut base = IkedaConfig {
                noise: noise(NoiseMode::Iterative),
                seed: a.seed,
                ..Default::default()
            };
            base.n = a.n.unwrap_or(base.n);
            let cfg = apply_overrides(&base, &a.overrides)?;
            (gen_ikeda(&cfg)?, serde_json::to_value(&cfg)?)
        }
        System::Henon => {
            let mut base = HenonConfig {
                noise: noise(NoiseMode::Iterative),
                seed: a.seed,
                ..Default::default()
            };
            base.n = a.n.unwrap_or(base.n);
            let cfg = apply_overrides(&base, &a.overrides)?;
            (gen_henon(&cfg)?, serde_json::to_value(&cfg)?)
        }
        System::Lorenz => {
            let mut base = LorenzConfig {
                noise: noise(NoiseMode::Superimposed),
                seed: a.seed,
                ..Default::default()
            };
            base.n = a.n.unwrap_or(base.n);
            let cfg = apply_overrides(&base, &a.overrides)?;
            (gen_lorenz(&cfg)?, serde_json::to_value(&cfg)?)
        }
    };
    let sink = Sink { output: &a.output };
    // series data are always written at full precision
    sink.write(|w| Ok(series.write_csv(w)?))?;
    let mut rc = RunConfig::new("generate", &a.output);
    rc.seed = Some(a.seed);
    rc.generator = Some(serde_json::json!({ "system": a.system, "config": config }));
    sink.run_config(&rc)
}

fn load_problem(p: &ProblemArgs) -> anyhow::Result<(Dataset, nlnoise::RegressionProblem)> {
    let series = Dataset::load_csv(&p.input)?;
    series.column(&p.target)?;
    let spec = EmbeddingSpec::from_vars(&p.target, &p.vars.vars)?;
    let problem = build_lag_problem(&series, &spec)?;
    Ok((series, problem))
}

fn problem_config(
    name: &'static str,
    p: &ProblemArgs,
    opts: &AnalysisOptions,
    out: &OutputArgs,
) -> RunConfig {
    let mut rc = RunConfig::new(name, out);
    rc.input = Some(p.input.clone());
    rc.target = Some(p.target.clone());
    rc.variables = Some(p.vars.text.clone());
    rc.analysis = Some(opts.clone());
    rc
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let opts = a.analysis.options();
    let (_, problem) = load_problem(&a.problem)?;
    let analysis = analyze_full(&problem, &opts)?;
    let report = analysis.report;
    let fmt = Fmt {
        full: a.output.full_precision,
    };
    let sink = Sink { output: &a.output };
    sink.write(|w| {
        if a.json {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
        } else {
            write_report(w, &report, fmt)?;
        }
        Ok(())
    })?;
    let mut rc = problem_config("analyze", &a.problem, &opts, &a.output);
    rc.resolved_grid = Some(report.grid.clone());
    rc.json = a.json;
    sink.run_config(&rc)
}

fn write_report(w: &mut dyn Write, r: &AnalysisReport, f: Fmt) -> io::Result<()> {
    let e = &r.estimate;
    let label = if r.variables.is_empty() {
        "{none}".to_string()
    } else {
        format!("{{{}}}", r.variables.join(", "))
    };
    writeln!(w, "target                {}", r.target)?;
    writeln!(w, "variables             {label}")?;
    writeln!(w, "rows                  {}", r.n)?;
    writeln!(
        w,
        "standardized          {}",
        if r.standardized { "yes" } else { "no" }
    )?;
    writeln!(w)?;
    writeln!(
        w,
        "fractional error      LR {}   NL {} +- {}",
        f.num(r.sigma_lr_fractional()),
        f.num(e.sigma_nl_fractional),
        f.num(e.sigma_nl_fractional_stderr)
    )?;
    writeln!(
        w,
        "residual variance     integral {} +- {}   direct {} +- {}",
        f.num(e.sigma2_nl),
        f.num(e.sigma2_nl_stderr),
        f.opt(e.sigma2_direct),
        f.opt(e.sigma2_direct_stderr)
    )?;
    let m = |n: u32| f.opt(e.moments.get(&n).copied());
    writeln!(
        w,
        "moments of |dr|       n=1 {}   n=2 {}   n=3 {}",
        m(1),
        m(2),
        m(3)
    )?;
    writeln!(
        w,
        "erf fit               sigma {}   rms misfit {}",
        f.opt(e.erf_sigma),
        f.opt(e.erf_rms_misfit)
    )?;
    writeln!(
        w,
        "grid                  {} x {} bins, eps {}..{}, delta {}..{}, min count {}",
        r.grid.n_eps_bins,
        r.grid.n_delta_bins,
        f.num(r.grid.eps_range[0]),
        f.num(r.grid.eps_range[1]),
        f.num(r.grid.delta_range[0]),
        f.num(r.grid.delta_range[1]),
        r.min_count
    )?;
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SubsetEntry {
    Text(String),
    List(Vec<String>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SubsetFile {
    Plain(Vec<SubsetEntry>),
    Wrapped { subsets: Vec<SubsetEntry> },
}

fn read_subsets(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<VarRef>>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: SubsetFile = serde_json::from_str(&text).with_context(|| {
        format!(
            "{}: expected a JSON list of variable sets such as [\"none\", \"x@1,y@1\"]",
            path.display()
        )
    })?;
    let entries = match file {
        SubsetFile::Plain(v) | SubsetFile::Wrapped { subsets: v } => v,
    };
    let mut texts = Vec::new();
    let mut sets = Vec::new();
    for e in entries {
        let text = match e {
            SubsetEntry::Text(s) => s,
            SubsetEntry::List(v) if v.is_empty() => "none".to_string(),
            SubsetEntry::List(v) => v.join(","),
        };
        let vars = parse_var_list(&text).with_context(|| format!("{}", path.display()))?;
        texts.push(text);
        sets.push(vars);
    }
    if sets.is_empty() {
        bail!("{}: no variable sets", path.display());
    }
    Ok((texts, sets))
}

fn scan(a: ScanArgs) -> anyhow::Result<()> {
    let opts = a.analysis.options();
    if a.threshold.is_nan() || a.threshold < 0.0 {
        return Err(UsageError(format!("--threshold must be >= 0, got {}", a.threshold)).into());
    }
    let series = Dataset::load_csv(&a.input)?;
    let mut rc = RunConfig::new("scan", &a.output);
    rc.input = Some(a.input.clone());
    rc.target = Some(a.target.clone());
    rc.analysis = Some(opts.clone());
    rc.json = a.json;
    let report = match (&a.subsets, a.lags_up_to) {
        (Some(path), _) => {
            let (texts, sets) = read_subsets(path)?;
            rc.subsets = Some(texts);
            subset_scan(&series, &a.target, &sets, &opts)?
        }
        (None, Some(k)) => {
            rc.lags_up_to = Some(k as usize);
            rc.threshold = Some(a.threshold);
            embedding_scan(&series, &a.target, k as usize, a.threshold, &opts)?
        }
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let fmt = Fmt {
        full: a.output.full_precision,
    };
    let sink = Sink { output: &a.output };
    sink.write(|w| {
        if a.json {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
        } else {
            write_scan(w, &report, fmt)?;
        }
        Ok(())
    })?;
    sink.run_config(&rc)
}

fn write_scan(w: &mut dyn Write, r: &ScanReport, f: Fmt) -> io::Result<()> {
    let width = r
        .rows
        .iter()
        .map(|row| row.label.chars().count())
        .max()
        .unwrap_or(0)
        .max(9);
    writeln!(
        w,
        "target {} ({} rows)",
        r.target,
        r.rows.first().map_or(0, |row| row.n)
    )?;
    writeln!(
        w,
        "{:<width$}  {:>10}  {:>10}  {:>10}",
        "variables", "LR", "NL", "NL stderr"
    )?;
    for row in &r.rows {
        match &row.error {
            None => writeln!(
                w,
                "{:<width$}  {:>10}  {:>10}  {:>10}",
                row.label,
                f.opt(row.sigma_lr_fractional),
                f.opt(row.sigma_nl_fractional),
                f.opt(row.sigma_nl_fractional_stderr)
            )?,
            Some(e) => writeln!(w, "{:<width$}  failed: {e}", row.label)?,
        }
    }
    if let Some(t) = r.stop_threshold {
        match r.chosen_de {
            Some(d) => writeln!(
                w,
                "embedding dimension {d} (improvement threshold {})",
                f.num(t)
            )?,
            None => writeln!(w, "embedding dimension undetermined")?,
        }
    }
    Ok(())
}

fn curve(a: CurveArgs) -> anyhow::Result<()> {
    let opts = a.analysis.options();
    let (_, problem) = load_problem(&a.problem)?;
    let analysis = analyze_full(&problem, &opts)?;
    let fmt = Fmt {
        full: a.output.full_precision,
    };
    let m = &analysis.matrix;
    let sink = Sink { output: &a.output };
    sink.write(|w| {
        let mut csv = csv_writer(w);
        csv.write_record(["eps", "delta", "p", "stderr", "n_pairs"])?;
        if a.plateau {
            let c = &analysis.curve;
            for i in 0..c.len() {
                let j = m
                    .delta_values
                    .iter()
                    .position(|&d| d == c.chosen_delta[i])
                    .expect("chosen delta is a grid edge");
                csv.write_record([
                    fmt.num(c.eps[i]),
                    fmt.num(c.chosen_delta[i]),
                    fmt.num(c.p[i]),
                    fmt.num(c.stderr[i]),
                    m.counts[j].to_string(),
                ])?;
            }
        } else {
            for i in 0..m.n_eps() {
                for j in 0..m.n_delta() {
                    // cells without pairs are undefined; leave them empty
                    csv.write_record([
                        fmt.num(m.eps_values[i]),
                        fmt.num(m.delta_values[j]),
                        m.p(i, j).map(|v| fmt.num(v)).unwrap_or_default(),
                        m.stderr(i, j).map(|v| fmt.num(v)).unwrap_or_default(),
                        m.counts[j].to_string(),
                    ])?;
                }
            }
        }
        csv.flush()?;
        Ok(())
    })?;
    let mut rc = problem_config("curve", &a.problem, &opts, &a.output);
    rc.resolved_grid = Some(analysis.report.grid.clone());
    rc.plateau = Some(a.plateau);
    sink.run_config(&rc)
}

fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(w)
}

#[derive(Serialize)]
struct FitPoint {
    eps: f64,
    p_data: f64,
    p_fit: f64,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    target: &'a str,
    variables: &'a [String],
    sigma: f64,
    sigma_fractional: f64,
    rms_misfit: f64,
    points: Vec<FitPoint>,
}

fn fit_erf(a: FitErfArgs) -> anyhow::Result<()> {
    let opts = AnalysisOptions {
        fit_erf: false,
        direct: false,
        ..a.analysis.options()
    };
    let (_, problem) = load_problem(&a.problem)?;
    let analysis = analyze_full(&problem, &opts)?;
    let c = &analysis.curve;
    let fit = erf_fit(c)?;
    let points: Vec<FitPoint> = c
        .eps
        .iter()
        .zip(&c.p)
        .map(|(&eps, &p)| FitPoint {
            eps,
            p_data: p,
            p_fit: fit.model(eps),
        })
        .collect();
    let fmt = Fmt {
        full: a.output.full_precision,
    };
    let sigma_y = analysis.problem.sigma_y();
    let sink = Sink { output: &a.output };
    sink.write(|w| {
        if a.json {
            let out = FitOutput {
                target: &analysis.report.target,
                variables: &analysis.report.variables,
                sigma: fit.sigma,
                sigma_fractional: fit.sigma / sigma_y,
                rms_misfit: fit.rms_misfit,
                points,
            };
            serde_json::to_writer_pretty(&mut *w, &out)?;
            writeln!(w)?;
        } else {
            let mut csv = csv_writer(w);
            csv.write_record(["eps", "p_data", "p_fit"])?;
            for p in &points {
                csv.write_record([fmt.num(p.eps), fmt.num(p.p_data), fmt.num(p.p_fit)])?;
            }
            csv.flush()?;
        }
        Ok(())
    })?;
    if !a.json {
        eprintln!(
            "erf fit: sigma {} (fractional {}), rms misfit {}",
            fmt.num(fit.sigma),
            fmt.num(fit.sigma / sigma_y),
            fmt.num(fit.rms_misfit)
        );
    }
    let mut rc = problem_config("fit-erf", &a.problem, &opts, &a.output);
    rc.resolved_grid = Some(analysis.report.grid.clone());
    rc.json = a.json;
    sink.run_config(&rc)
}
