//! `simplex-lab` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use simplex_core::constants::{moment_derivative, MomentConstants, MomentMethod};
use simplex_core::oracle::{gumbel_surrogate_cdf, max_spacing_cdf, OracleMethod, OracleResult};
use simplex_core::sampling::{sample_lp_ball, sample_simplex, Construction, RandomStream};
use simplex_core::statistics::SourceDistribution;

use crate::config::{ExperimentConfig, ExperimentKind, SnRule, DEFAULT_SEED};
use crate::report::finish_csv;
use crate::{run, ExperimentReport, LabError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "simplex-lab",
    version,
    about = "Norm statistics of random simplex and lp-ball points"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment constants mu_q, sigma_q^2 and friends.
    Constants(ConstantsArgs),
    /// Draw raw points from the simplex or an lp-ball.
    Sample(SampleArgs),
    /// Exact max-spacing probabilities.
    Oracle(OracleArgs),
    /// lq-norm central limit theorem.
    Clt(RunArgs),
    /// KS distance decay against log n / sqrt n.
    BerryEsseen(RunArgs),
    /// Gumbel limit of the sup-norm.
    Gumbel(RunArgs),
    /// Large deviations of the sup-norm.
    Ldp(RunArgs),
    /// Moderate deviations of the sup-norm.
    Mdp(RunArgs),
    /// Sup-norm of uniform lp-ball points.
    Lpball(LpballArgs),
    /// How often the sup-norm differs from the maximum spacing.
    Equivalence(RunArgs),
    /// Central-moment CLT for i.i.d. data.
    GeneralClt(RunArgs),
    /// Convert a JSON report to CSV or JSON.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Default)]
pub struct Output {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flags shared by the experiment subcommands. The same keys may appear in a
/// flat JSON object passed with `--config`; flags win over the file.
#[derive(Debug, Clone, Args, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFlags {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u64>>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z: Option<Vec<f64>>,
    /// `sqrt_log`, `log_log`, or a fixed number.
    #[arg(long)]
    pub sn: Option<String>,
    /// Comma-separated dimensions for exact oracle rows.
    #[arg(long = "oracle-n", value_delimiter = ',')]
    #[serde(rename = "oracle_n")]
    pub oracle_n: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceArg {
    Exponential,
    Uniform01,
}

impl From<SourceArg> for SourceDistribution {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Exponential => SourceDistribution::Exponential,
            SourceArg::Uniform01 => SourceDistribution::Uniform01,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub flags: RunFlags,
    /// JSON file with default flag values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LpballArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Gumbel fit of `n ||Y||_inf - log n` (p = 1) instead of the LDP.
    #[arg(long)]
    pub gumbel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantsArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub q: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    /// Sample the unit lp-ball instead of the simplex.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ConstructionArg::Exponential)]
    pub construction: ConstructionArg,
    /// Keep the simplex point uncentered.
    #[arg(long)]
    pub uncentered: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    Exponential,
    Spacings,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// `P[max spacing <= s]`.
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<f64>,
    /// `P[n max spacing - log n <= x]`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// A JSON report written by an experiment subcommand.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Constants(a) => constants(a),
        Command::Sample(a) => sample(a),
        Command::Oracle(a) => oracle(a),
        Command::Report(a) => report(a),
        Command::Clt(a) => experiment(ExperimentKind::Clt, a),
        Command::BerryEsseen(a) => experiment(ExperimentKind::BerryEsseenSweep, a),
        Command::Gumbel(a) => experiment(ExperimentKind::Gumbel, a),
        Command::Ldp(a) => experiment(ExperimentKind::Ldp, a),
        Command::Mdp(a) => experiment(ExperimentKind::Mdp, a),
        Command::Lpball(a) => {
            let kind = if a.gumbel {
                ExperimentKind::LpGumbel
            } else {
                ExperimentKind::LpLdp
            };
            experiment(kind, a.run)
        }
        Command::Equivalence(a) => experiment(ExperimentKind::EquivalenceDecay, a),
        Command::GeneralClt(a) => experiment(ExperimentKind::GeneralClt, a),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| LabError::io(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| LabError::io("<stdout>", e)),
    }
}

fn parse_sn(s: &str) -> Result<(SnRule, Option<f64>)> {
    match s {
        "sqrt_log" => Ok((SnRule::SqrtLog, None)),
        "log_log" => Ok((SnRule::LogLog, None)),
        other => other
            .parse::<f64>()
            .map(|v| (SnRule::Custom, Some(v)))
            .map_err(|_| {
                LabError::usage(format!(
                    "--sn takes sqrt_log, log_log or a number, got {other:?}"
                ))
            }),
    }
}

/// Flags over file over the stock defaults for `kind`.
pub fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<(ExperimentConfig, Output)> {
    let file: RunFlags = match &args.config {
        Some(path) => serde_json::from_str(&read_file(path)?)
            .map_err(|e| LabError::usage(format!("{}: {e}", path.display())))?,
        None => RunFlags::default(),
    };
    let f = &args.flags;
    let mut c = ExperimentConfig::new(kind);
    if let Some(v) = f.n.clone().or(file.n) {
        c.n_list = v;
    }
    if let Some(v) = f.q.or(file.q) {
        c.q = Some(v);
    }
    if let Some(v) = f.p.or(file.p) {
        c.p = Some(v);
    }
    if let Some(v) = f.replicates.or(file.replicates) {
        c.replicates = v;
    }
    if let Some(v) = f.seed.or(file.seed) {
        c.seed = v;
    }
    if let Some(v) = f.workers.or(file.workers) {
        c.workers = v;
    }
    if let Some(v) = f.z.clone().or(file.z) {
        c.thresholds = v;
    }
    if let Some(v) = f.sn.clone().or(file.sn) {
        (c.s_n_rule, c.s_n_custom) = parse_sn(&v)?;
    }
    if let Some(v) = f.oracle_n.clone().or(file.oracle_n) {
        c.oracle_n_list = v;
    }
    if let Some(v) = f.source.or(file.source) {
        c.source = Some(v.into());
    }
    let output = Output {
        format: f.format.or(file.format),
        out: f.out.clone().or(file.out),
    };
    c.validate()?;
    Ok((c, output))
}

fn render(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    }
}

fn experiment(kind: ExperimentKind, args: RunArgs) -> Result<()> {
    let (config, output) = build_config(kind, &args)?;
    let report = run(&config)?;
    emit(
        output.out.as_deref(),
        &render(&report, output.format.unwrap_or_default())?,
    )?;
    eprintln!(
        "{}: {} rows in {:.2} s",
        kind.name(),
        report.rows.len(),
        report.wall_time
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let report = ExperimentReport::from_json(&read_file(&args.input)?)
        .map_err(|e| LabError::usage(format!("{}: {e}", args.input.display())))?;
    emit(
        args.output.out.as_deref(),
        &render(&report, args.output.format.unwrap_or_default())?,
    )
}

/// Writes `rows` as CSV with a header, or as a JSON array.
fn table<T: Serialize>(rows: &[T], output: &Output) -> Result<()> {
    let text = match output.format.unwrap_or_default() {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(rows)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            finish_csv(w)?
        }
    };
    emit(output.out.as_deref(), &text)
}

#[derive(Debug, Serialize)]
struct ConstantsRow {
    q: f64,
    mu_q: f64,
    mu_2q: f64,
    sigma_q_sq: f64,
    cov_e_absq: f64,
    moment_derivative: f64,
    method: MomentMethod,
}

fn constants(args: ConstantsArgs) -> Result<()> {
    if let Some(q) = args.q.iter().find(|q| !(**q >= 1.0 && q.is_finite())) {
        return Err(LabError::usage(format!(
            "q = {q} must be finite and at least 1"
        )));
    }
    let rows = args
        .q
        .iter()
        .map(|&q| {
            let mc = MomentConstants::new(q)?;
            Ok(ConstantsRow {
                q,
                mu_q: mc.mu_q,
                mu_2q: mc.mu_2q,
                sigma_q_sq: mc.sigma_q_sq,
                cov_e_absq: mc.cov_e_absq,
                moment_derivative: moment_derivative(q)?,
                method: mc.method,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    table(&rows, &args.output)
}

#[derive(Debug, Serialize)]
struct OracleRow {
    n: u64,
    query: &'static str,
    arg: f64,
    value: f64,
    error_bound: f64,
    method: &'static str,
}

fn method_name(m: OracleMethod) -> &'static str {
    match m {
        OracleMethod::ClosedForm => "closed_form",
        OracleMethod::InclusionExclusion => "inclusion_exclusion",
        OracleMethod::Quadrature => "quadrature",
        OracleMethod::MonteCarloBruteforce => "monte_carlo_bruteforce",
    }
}

fn oracle(args: OracleArgs) -> Result<()> {
    if args.s.is_empty() && args.x.is_empty() {
        return Err(LabError::usage("oracle needs --s or --x"));
    }
    if let Some(n) = args.n.iter().find(|n| **n < 2) {
        return Err(LabError::usage(format!("n = {n} must be at least 2")));
    }
    if let Some(s) = args.s.iter().find(|s| !s.is_finite()) {
        return Err(LabError::usage(format!("s = {s} is not finite")));
    }
    if let Some(x) = args.x.iter().find(|x| !x.is_finite()) {
        return Err(LabError::usage(format!("x = {x} is not finite")));
    }
    let row = |n, query, arg, r: OracleResult| OracleRow {
        n,
        query,
        arg,
        value: r.value,
        error_bound: r.error_bound,
        method: method_name(r.method),
    };
    let mut rows = Vec::new();
    for &n in &args.n {
        for &s in &args.s {
            rows.push(row(n, "max_spacing_cdf", s, max_spacing_cdf(n, s)?));
        }
        for &x in &args.x {
            rows.push(row(
                n,
                "gumbel_surrogate_cdf",
                x,
                gumbel_surrogate_cdf(n, x)?,
            ));
        }
    }
    table(&rows, &args.output)
}

fn sample(args: SampleArgs) -> Result<()> {
    if args.n == 0 {
        return Err(LabError::usage("n must be at least 1"));
    }
    if let Some(p) = args.p.filter(|p| !(*p >= 1.0 && p.is_finite())) {
        return Err(LabError::usage(format!(
            "p = {p} must be finite and at least 1"
        )));
    }
    let construction = match args.construction {
        ConstructionArg::Exponential => Construction::Exponential,
        ConstructionArg::Spacings => Construction::Spacings,
    };
    let mut rng = RandomStream::new(args.seed).rng();
    let points = (0..args.replicates)
        .map(|_| {
            Ok(match args.p {
                Some(p) => sample_lp_ball(&mut rng, args.n, p)?.into_coords(),
                None => {
                    sample_simplex(&mut rng, args.n, !args.uncentered, construction)?.into_coords()
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match args.output.format.unwrap_or_default() {
        Format::Json => {
            let mut s = serde_json::to_string(&points)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record((0..args.n).map(|i| format!("x{i}")))?;
            for p in &points {
                w.write_record(p.iter().map(|v| format!("{v:.16e}")))?;
            }
            finish_csv(w)?
        }
    };
    emit(args.output.out.as_deref(), &text)
}
