//! Command-line front end. [`run`] takes the arguments and output streams so
//! it can be driven from tests; the binary only forwards to it.
//!
//! Exit codes: 0 success, 1 invalid input, 2 a check or plan verification
//! failed, 3 internal consistency failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::Zero;
use thiserror::Error;

use crate::analysis::{
    self, appendix_gap_check, lower_bound_load, tradeoff_curve, AnalysisError, Rendering,
    TradeoffCurve,
};
use crate::codec::{
    build_random_plan, build_storage_plan, verify_decodability, CodecError, ParamError,
    SchemeParams, StoragePlan, VerifyOptions,
};
use crate::presets::{self, Preset, PresetKind};
use crate::rational::{self, Rational};
use crate::shuffle::ShuffleTranscript;
use crate::sim::{self, SimConfig, SimError, SimMode, SimReport};
use crate::stragglers::{LatencyError, LatencyModel};
use crate::subset::ServerSet;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{constraint}: {message}")]
    Validation {
        constraint: &'static str,
        message: String,
    },
    #[error("check failed: {0}")]
    Mismatch(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Mismatch(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn invalid(constraint: &'static str, message: impl ToString) -> Self {
        CliError::Validation {
            constraint,
            message: message.to_string(),
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        // the message already starts with the constraint name
        let text = e.to_string();
        let message = text
            .strip_prefix(&format!("{}: ", e.constraint()))
            .unwrap_or(&text)
            .to_string();
        CliError::Validation {
            constraint: e.constraint(),
            message,
        }
    }
}

impl From<LatencyError> for CliError {
    fn from(e: LatencyError) -> Self {
        CliError::invalid("latency-model", e)
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Storage { .. } => CliError::invalid("storage-range", e),
            AnalysisError::Wait { .. } => CliError::invalid("wait-range", e),
            AnalysisError::FractionalReplication(_) => CliError::invalid("integral-replication", e),
            AnalysisError::Latency(l) => l.into(),
            AnalysisError::Index { .. } | AnalysisError::ZeroLowerBound => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Params(p) => p.into(),
            CodecError::NotDecodable { .. } => CliError::Mismatch(e.to_string()),
            CodecError::InvalidPlan(_)
            | CodecError::UnknownServer { .. }
            | CodecError::UnknownRow { .. }
            | CodecError::DuplicateRow(_) => CliError::invalid("plan-file", e),
            CodecError::Field(_) => CliError::invalid("field-width", e),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Codec(c) => c.into(),
            SimError::Latency(l) => l.into(),
            SimError::Analysis(a) => a.into(),
            SimError::MatrixShape { .. } | SimError::MatrixFile(_) => {
                CliError::invalid("matrix-file", e)
            }
            SimError::ForcedFinishers { .. } => CliError::invalid("finishers", e),
            SimError::NoTrials => CliError::invalid("trials", e),
            SimError::Shuffle { .. } | SimError::Decode { .. } => CliError::Internal(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::invalid("io", format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "coded-compute",
    version,
    about = "Coded distributed matrix multiplication with stragglers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Achievable latency-load pairs, lower bound and gap for every q.
    Tradeoff(TradeoffArgs),
    /// Lower bound on the load, and the q = K gap check for integral mu*K.
    Bound(BoundArgs),
    /// Run the full Map, Shuffle and Reduce pipeline.
    Simulate(SimulateArgs),
    /// Check that every q-subset of a stored plan can decode.
    VerifyPlan(VerifyPlanArgs),
    /// Write a storage plan as JSON.
    Plan(PlanArgs),
    /// Reproduce a named example; lists the examples without --preset.
    Example(ExampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Print exact fractions instead of decimals.
    #[arg(long)]
    pub rational: bool,
    /// Decimal places when not printing fractions.
    #[arg(long, default_value_t = 6)]
    pub precision: usize,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    fn rendering(&self) -> Rendering {
        if self.rational {
            Rendering::Fraction
        } else {
            Rendering::Decimal(self.precision)
        }
    }
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(long = "K")]
    pub servers: Option<usize>,
    /// Storage fraction, e.g. 1/3.
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long = "N")]
    pub outputs: Option<usize>,
    /// shifted-exp:muN=<v> or table:<file.json>; defaults to muN = mu*N.
    #[arg(long)]
    pub latency: Option<String>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Compare with the preset's known values.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long = "K")]
    pub servers: usize,
    #[arg(long)]
    pub mu: String,
    #[arg(long = "N", default_value_t = 1)]
    pub outputs: usize,
    /// A single q; all valid q when omitted.
    #[arg(long)]
    pub q: Option<usize>,
    /// Exit 2 unless L(K)/Lbar(K) < 3 + sqrt(5).
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    /// Number of servers.
    #[arg(long = "K")]
    pub servers: Option<usize>,
    /// Servers to wait for.
    #[arg(long)]
    pub q: Option<usize>,
    /// Storage fraction per server, e.g. 1/2 or 0.5.
    #[arg(long)]
    pub mu: Option<String>,
    /// Rows of A.
    #[arg(long)]
    pub m: Option<usize>,
    /// Columns of A.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of input vectors.
    #[arg(long = "N")]
    pub outputs: Option<usize>,
    /// Field width in bits (GF(2^w)).
    #[arg(long, default_value_t = 16)]
    pub w: u32,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Take parameters from a named example.
    #[arg(long)]
    pub preset: Option<String>,
    /// shifted-exp:muN=<v>; defaults to muN = mu*N.
    #[arg(long)]
    pub latency: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Decode and check outputs in every trial, not only the first.
    #[arg(long)]
    pub verify: bool,
    /// Use a random generator matrix drawn from this seed.
    #[arg(long = "random-mds")]
    pub random_mds: Option<u64>,
    /// JSON file with A as {"rows", "cols", "entries"}.
    #[arg(long = "matrix-file")]
    pub matrix_file: Option<PathBuf>,
    /// Comma-separated finishing servers, overriding the sampled ones.
    #[arg(long)]
    pub finishers: Option<String>,
    /// Write the message log of trial 0 as JSON lines.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Exit 2 unless the simulated load and latency match the exact values.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyPlanArgs {
    pub plan: PathBuf,
    /// Check this many random q-subsets instead of all of them.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long = "random-mds")]
    pub random_mds: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_mu(text: &str) -> Result<Rational, CliError> {
    rational::parse(text).map_err(|e| CliError::invalid("storage-format", e))
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::invalid("missing-flag", format!("--{flag} is required")))
}

fn find_preset(name: &str) -> Result<Preset, CliError> {
    presets::find(name).ok_or_else(|| {
        CliError::invalid(
            "preset",
            format!(
                "unknown preset {name:?}; known: {}",
                presets::names().join(", ")
            ),
        )
    })
}

fn default_model(mu: &Rational, outputs: usize) -> Result<LatencyModel, CliError> {
    Ok(LatencyModel::shifted_exponential(
        mu * rational::int(outputs as i64),
    )?)
}

fn model_from(spec: Option<&str>, mu: &Rational, outputs: usize) -> Result<LatencyModel, CliError> {
    match spec {
        Some(s) => Ok(LatencyModel::parse_spec(s)?),
        None => default_model(mu, outputs),
    }
}

fn scheme_params(args: &ParamArgs, preset: Option<&str>) -> Result<SchemeParams, CliError> {
    let params = match preset {
        Some(name) => match find_preset(name)?.kind {
            PresetKind::Simulate { params, .. } => params,
            PresetKind::Tradeoff { .. } => {
                return Err(CliError::invalid(
                    "preset",
                    format!("{name} is a tradeoff preset"),
                ))
            }
        },
        None => SchemeParams::new(
            require(args.servers, "K")?,
            require(args.q, "q")?,
            parse_mu(&require(args.mu.clone(), "mu")?)?,
            require(args.m, "m")?,
            require(args.n, "n")?,
            require(args.outputs, "N")?,
        )
        .with_field_width(args.w),
    };
    params.validate()?;
    Ok(params)
}

fn open_output<'a>(
    path: Option<&Path>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(|e| io_error(p, e))?)),
        None => Ok(Box::new(stdout)),
    }
}

fn write_text(path: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    let mut out = open_output(path, stdout)?;
    writeln!(out, "{text}").map_err(|e| CliError::Internal(e.to_string()))
}

fn emit_curve(
    curve: &TradeoffCurve,
    output: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let rendering = output.rendering();
    match output.format {
        Format::Csv => {
            let out = open_output(output.out.as_deref(), stdout)?;
            analysis::write_csv(curve, out, rendering)
                .map_err(|e| CliError::Internal(e.to_string()))
        }
        Format::Json => {
            let doc = analysis::to_json(curve, rendering);
            let text = serde_json::to_string_pretty(&doc).expect("json value serializes");
            write_text(output.out.as_deref(), stdout, &text)
        }
    }
}

fn check_tradeoff(curve: &TradeoffCurve, preset: &Preset) -> Result<Vec<String>, CliError> {
    let PresetKind::Tradeoff {
        endpoints, max_gap, ..
    } = &preset.kind
    else {
        return Err(CliError::invalid(
            "preset",
            format!("{} is not a tradeoff preset", preset.name),
        ));
    };
    let mut problems = Vec::new();
    for (q, load) in endpoints {
        match curve.point(*q) {
            Some(p) if p.achievable == *load => {}
            Some(p) => problems.push(format!(
                "L({q}) = {} but expected {}",
                rational::to_fraction_string(&p.achievable),
                rational::to_fraction_string(load)
            )),
            None => problems.push(format!("no point for q = {q}")),
        }
    }
    if let Some(limit) = max_gap {
        match curve.max_gap() {
            Some(g) if g <= *limit => {}
            g => problems.push(format!(
                "max gap {} exceeds {}",
                g.map_or("inf".into(), |g| rational::to_decimal_string(&g, 4)),
                rational::to_fraction_string(limit)
            )),
        }
    }
    Ok(problems)
}

fn cmd_tradeoff(args: &TradeoffArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let preset = args.preset.as_deref().map(find_preset).transpose()?;
    let (servers, mu, outputs) = match &preset {
        Some(Preset {
            kind:
                PresetKind::Tradeoff {
                    servers,
                    storage,
                    outputs,
                    ..
                },
            ..
        }) => (*servers, storage.clone(), *outputs),
        Some(p) => {
            return Err(CliError::invalid(
                "preset",
                format!("{} is not a tradeoff preset", p.name),
            ))
        }
        None => (
            require(args.servers, "K")?,
            parse_mu(&require(args.mu.clone(), "mu")?)?,
            require(args.outputs, "N")?,
        ),
    };
    if outputs == 0 {
        return Err(ParamError::ZeroDimension.into());
    }
    let model = model_from(args.latency.as_deref(), &mu, outputs)?;
    let curve = tradeoff_curve(servers, &mu, outputs, &model)?;
    emit_curve(&curve, &args.output, stdout)?;
    if args.check {
        let preset =
            preset.ok_or_else(|| CliError::invalid("missing-flag", "--check needs --preset"))?;
        let problems = check_tradeoff(&curve, &preset)?;
        if !problems.is_empty() {
            return Err(CliError::Mismatch(problems.join("; ")));
        }
    }
    Ok(())
}

fn cmd_bound(args: &BoundArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mu = parse_mu(&args.mu)?;
    if args.outputs == 0 {
        return Err(ParamError::ZeroDimension.into());
    }
    let probe = SchemeParams::new(args.servers, args.servers, mu.clone(), 1, 1, 1);
    if let Err(e) = probe.validate() {
        if matches!(
            e,
            ParamError::ServerCount(_) | ParamError::StorageRange { .. }
        ) {
            return Err(e.into());
        }
    }
    let min = crate::codec::min_wait(&mu);
    let qs: Vec<usize> = match args.q {
        Some(q) if q >= min && q <= args.servers => vec![q],
        Some(q) => {
            return Err(ParamError::WaitRange {
                q,
                min,
                max: args.servers,
            }
            .into())
        }
        None => (min..=args.servers).collect(),
    };
    let rendering = args.output.rendering();
    let rows: Vec<(usize, Rational)> = qs
        .iter()
        .map(|&q| (q, lower_bound_load(args.servers, q, &mu, args.outputs)))
        .collect();
    let appendix = (mu.clone() * rational::int(args.servers as i64))
        .is_integer()
        .then(|| appendix_gap_check(args.servers, &mu))
        .transpose()?;
    let text = match args.output.format {
        Format::Csv => {
            let mut lines = vec!["q,L_lb".to_string()];
            lines.extend(
                rows.iter()
                    .map(|(q, l)| format!("{q},{}", rendering.render(l))),
            );
            lines.join("\n")
        }
        Format::Json => {
            let doc = serde_json::json!({
                "points": rows.iter().map(|(q, l)| serde_json::json!({"q": q, "L_lb": rendering.render(l)})).collect::<Vec<_>>(),
                "full_wait_ratio": appendix.as_ref().map(|a| rendering.render(&a.ratio)),
                "full_wait_within_bound": appendix.as_ref().map(|a| a.within_bound),
            });
            serde_json::to_string_pretty(&doc).expect("json value serializes")
        }
    };
    write_text(args.output.out.as_deref(), stdout, &text)?;
    if args.check {
        let a = appendix.ok_or_else(|| {
            CliError::invalid(
                "integral-replication",
                "--check needs mu*K to be an integer",
            )
        })?;
        if !a.within_bound {
            return Err(CliError::Mismatch(format!(
                "L(K)/Lbar(K) = {} is not below 3 + sqrt(5)",
                rational::to_fraction_string(&a.ratio)
            )));
        }
    }
    Ok(())
}

fn parse_finishers(text: &str) -> Result<ServerSet, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k < crate::subset::MAX_SERVERS)
                .ok_or_else(|| CliError::invalid("finishers", format!("bad server id {s:?}")))
        })
        .collect()
}

fn simulate_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let params = scheme_params(&args.params, args.preset.as_deref())?;
    let model = model_from(args.latency.as_deref(), &params.storage, params.outputs)?;
    let matrix = args
        .matrix_file
        .as_deref()
        .map(sim::load_matrix)
        .transpose()?;
    let forced_finishers = args.finishers.as_deref().map(parse_finishers).transpose()?;
    Ok(SimConfig {
        params,
        model,
        seed: args.seed,
        trials: args.trials,
        mode: if args.trials > 1 {
            SimMode::MonteCarlo
        } else {
            SimMode::Single
        },
        verify: args.verify,
        matrix,
        random_mds: args.random_mds,
        forced_finishers,
    })
}

/// Problems found when comparing a report with its exact values.
fn check_report(
    report: &SimReport,
    transcript: &ShuffleTranscript,
    preset: Option<&Preset>,
) -> Vec<String> {
    let mut problems = Vec::new();
    let (latency, load, symbols) = match preset.map(|p| &p.kind) {
        Some(PresetKind::Simulate {
            latency,
            load,
            coded_symbols,
            uncoded_symbols,
            ..
        }) => (
            latency.clone(),
            load.clone(),
            Some((*coded_symbols, *uncoded_symbols)),
        ),
        _ => (
            report.analytic_latency.clone(),
            report.analytic_load.clone(),
            None,
        ),
    };
    if report.analytic_latency != latency {
        problems.push(format!(
            "D(q) = {} but expected {}",
            rational::to_fraction_string(&report.analytic_latency),
            rational::to_fraction_string(&latency)
        ));
    }
    for l in report.loads() {
        if *l != load {
            problems.push(format!(
                "simulated load {} but expected {}",
                rational::to_fraction_string(l),
                rational::to_fraction_string(&load)
            ));
            break;
        }
    }
    if let Some((coded, uncoded)) = symbols {
        if (transcript.coded_symbols(), transcript.uncoded_symbols()) != (coded, uncoded) {
            problems.push(format!(
                "{} coded and {} uncoded symbols, expected {coded} and {uncoded}",
                transcript.coded_symbols(),
                transcript.uncoded_symbols()
            ));
        }
    }
    problems
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = simulate_config(args)?;
    let (report, transcript) = sim::run(&config)?;
    if let Some(path) = &args.transcript {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        transcript
            .write_jsonl(io::BufWriter::new(file))
            .map_err(|e| io_error(path, e))?;
    }
    write_text(args.out.as_deref(), stdout, &report.to_json())?;
    if report.all_correct == Some(false) {
        return Err(CliError::Internal(
            "a decoded output differs from A x".into(),
        ));
    }
    if args.check {
        let preset = args.preset.as_deref().map(find_preset).transpose()?;
        let problems = check_report(&report, &transcript, preset.as_ref());
        if !problems.is_empty() {
            return Err(CliError::Mismatch(problems.join("; ")));
        }
    }
    Ok(())
}

fn cmd_verify_plan(args: &VerifyPlanArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.plan).map_err(|e| io_error(&args.plan, e))?;
    let plan = StoragePlan::from_json(&text)?;
    let mut opts = VerifyOptions {
        seed: args.seed,
        ..VerifyOptions::default()
    };
    if let Some(samples) = args.sample {
        opts.exhaustive_cap = 0;
        opts.samples = samples;
    }
    let report = verify_decodability(&plan, &opts);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_text(None, stdout, &text)?;
    if !report.passed {
        return Err(CliError::Mismatch(
            "plan is not decodable from every q-subset".into(),
        ));
    }
    Ok(())
}

fn cmd_plan(args: &PlanArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = scheme_params(&args.params, args.preset.as_deref())?;
    let plan = match args.random_mds {
        Some(seed) => build_random_plan(&params, seed)?,
        None => build_storage_plan(&params)?,
    };
    write_text(args.out.as_deref(), stdout, &plan.to_json())
}

fn cmd_example(args: &ExampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let Some(name) = &args.preset else {
        let mut lines = Vec::new();
        for p in presets::all() {
            lines.push(format!("{:<24}{}", p.name, p.description));
        }
        return write_text(None, stdout, &lines.join("\n"));
    };
    let preset = find_preset(name)?;
    let problems = match &preset.kind {
        PresetKind::Simulate { params, .. } => {
            let config = SimConfig::new(params.clone(), args.seed)?;
            let (report, transcript) = sim::run_single_with_transcript(&config)?;
            let load = report.mean_load.clone().unwrap_or_else(Rational::zero);
            let lines = [
                format!("preset      {}", preset.name),
                format!(
                    "parameters  {}",
                    serde_json::to_string(params).expect("params serialize")
                ),
                format!(
                    "latency D   {}",
                    rational::to_fraction_string(&report.analytic_latency)
                ),
                format!("load L      {}", rational::to_fraction_string(&load)),
                format!("coded       {}", transcript.coded_symbols()),
                format!("uncoded     {}", transcript.uncoded_symbols()),
                format!("verified    {}", report.all_correct == Some(true)),
            ];
            write_text(None, stdout, &lines.join("\n"))?;
            if report.all_correct == Some(false) {
                return Err(CliError::Internal(
                    "a decoded output differs from A x".into(),
                ));
            }
            check_report(&report, &transcript, Some(&preset))
        }
        PresetKind::Tradeoff {
            servers,
            storage,
            outputs,
            ..
        } => {
            let model = default_model(storage, *outputs)?;
            let curve = tradeoff_curve(*servers, storage, *outputs, &model)?;
            let output = OutputArgs {
                format: Format::Csv,
                rational: true,
                precision: 6,
                out: None,
            };
            emit_curve(&curve, &output, stdout)?;
            check_tradeoff(&curve, &preset)?
        }
    };
    if args.check && !problems.is_empty() {
        return Err(CliError::Mismatch(problems.join("; ")));
    }
    Ok(())
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Tradeoff(a) => cmd_tradeoff(a, stdout),
        Command::Bound(a) => cmd_bound(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::VerifyPlan(a) => cmd_verify_plan(a, stdout),
        Command::Plan(a) => cmd_plan(a, stdout),
        Command::Example(a) => cmd_example(a, stdout),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
