//! `fairshare gen|shares|solve|verify|bench`.
//!
//! Exit codes: 0 success or pass, 1 a guarantee failed, 2 invalid input,
//! 3 an oracle capability limit was hit.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Signed;
use serde::Deserialize;

use crate::generate::{self, Entitlements, Family, GenConfig};
use crate::model::{self, Allocation, Instance};
use crate::rational::{self, Rational};
use crate::shares::{self, OracleLimits, ShareError, ShareSelection};
use crate::splc_mms::{self, SplcError};
use crate::sub_aps::{self, SubApsError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

pub const BENCH_HEADER: [&str; 8] = [
    "id",
    "seed",
    "family",
    "n",
    "size",
    "algo",
    "worst_ratio",
    "runtime_ms",
];

#[derive(Debug, Parser)]
#[command(name = "fairshare", version, about = "Exact fair-division shares and allocations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random instances or a fixture.
    Gen(GenArgs),
    /// Compute exact shares for every agent.
    Shares(SharesArgs),
    /// Compute an allocation.
    Solve(SolveArgs),
    /// Check an allocation against factor × target.
    Verify(VerifyArgs),
    /// Run a benchmark configuration and write CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LimitArgs {
    /// Largest agent count for the MMS oracle.
    #[arg(long, default_value_t = 4)]
    pub limit_mms_agents: usize,
    /// Largest good count (SPLC: total copies) for the MMS oracle.
    #[arg(long, default_value_t = 10)]
    pub limit_mms_goods: usize,
    /// Largest good count for the APS oracle.
    #[arg(long, default_value_t = 14)]
    pub limit_aps_goods: usize,
}

impl LimitArgs {
    pub fn limits(&self) -> OracleLimits {
        OracleLimits {
            mms_max_agents: self.limit_mms_agents,
            mms_max_goods: self.limit_mms_goods,
            aps_max_goods: self.limit_aps_goods,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    SplcMmsHigh,
    GreedyCounter,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Family::Splc)]
    pub family: Family,
    #[arg(long, default_value_t = 2)]
    pub agents: usize,
    /// Goods, or good types for SPLC.
    #[arg(long, default_value_t = 2)]
    pub size: usize,
    #[arg(long, default_value_t = 2)]
    pub max_copies: usize,
    #[arg(long, default_value_t = 10)]
    pub max_value: u32,
    /// `symmetric`, `random`, or comma-separated rationals.
    #[arg(long, default_value = "symmetric")]
    pub entitlements: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances to write; seeds run from `seed` upward.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Write a fixture instead of random instances.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// δ for the greedy-counter fixture.
    #[arg(long, default_value = "1/32")]
    pub delta: String,
    /// Output file (one instance) or directory; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Mms,
    Aps,
    Mu,
    All,
}

#[derive(Debug, Args)]
pub struct SharesArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Which::All)]
    pub which: Which,
    #[command(flatten)]
    pub limits: LimitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    SplcMms,
    SubAps,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::SplcMms => "splc-mms",
            Algo::SubAps => "sub-aps",
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub algo: Algo,
    /// Refinement step for sub-aps.
    #[arg(long, default_value = "1/20")]
    pub epsilon: String,
    /// Allocation output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the pipeline trace or greedy log as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub allocation: PathBuf,
    #[arg(long, default_value = "1")]
    pub factor: String,
    /// `mms`, `aps`, `mu`, or a JSON file holding one rational per agent.
    #[arg(long, default_value = "mms")]
    pub target: String,
    #[command(flatten)]
    pub limits: LimitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON configuration: `{"runs": [...]}`.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write 0 in the runtime column, making the CSV byte-for-byte reproducible.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub limits: LimitArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Limit(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Io { .. } => EXIT_INVALID,
            CliError::Limit(_) => EXIT_LIMIT,
        }
    }
}

impl From<model::ModelError> for CliError {
    fn from(e: model::ModelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ShareError> for CliError {
    fn from(e: ShareError) -> Self {
        match e {
            ShareError::OverLimit { .. } => CliError::Limit(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SplcError> for CliError {
    fn from(e: SplcError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SubApsError> for CliError {
    fn from(e: SubApsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(io_err(path))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(io_err(path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn parse_rational(text: &str, what: &str) -> Result<Rational, CliError> {
    rational::parse(text.trim()).map_err(|e| CliError::Invalid(format!("{what}: {e}")))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    model::parse_instance(&read(path)?)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn parse_entitlements(text: &str) -> Result<Entitlements, CliError> {
    Ok(match text {
        "symmetric" => Entitlements::Symmetric,
        "random" => Entitlements::Random,
        list => Entitlements::Given(
            list.split(',')
                .map(|t| parse_rational(t, "entitlements"))
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Shares(a) => cmd_shares(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

pub fn cmd_gen(args: &GenArgs) -> Result<i32, CliError> {
    if let Some(fixture) = args.fixture {
        let instance = match fixture {
            Fixture::SplcMmsHigh => generate::splc_mms_high(args.agents.max(1)),
            Fixture::GreedyCounter => {
                let delta = parse_rational(&args.delta, "delta")?;
                if !delta.is_positive() || delta >= rational::ratio(1, 4) {
                    return Err(CliError::Invalid("delta must lie in (0, 1/4)".into()));
                }
                generate::greedy_counter(&delta)
            }
        };
        emit(args.out.as_deref(), &model::write_instance(&instance))?;
        return Ok(EXIT_OK);
    }
    let config = GenConfig {
        family: args.family,
        agents: args.agents,
        size: args.size,
        max_copies: args.max_copies,
        max_value: args.max_value,
        entitlements: parse_entitlements(&args.entitlements)?,
    };
    if args.agents == 0 {
        return Err(CliError::Invalid("at least one agent required".into()));
    }
    let seeds = args.seed..args.seed + args.count;
    if args.count == 1 {
        let instance = generate::generate(&config, args.seed)?;
        emit(args.out.as_deref(), &model::write_instance(&instance))?;
        return Ok(EXIT_OK);
    }
    let dir = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::Invalid("--out DIR is required with --count > 1".into()))?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for seed in seeds {
        let instance = generate::generate(&config, seed)?;
        let path = dir.join(format!("{}-n{}-s{}-{seed}.json", args.family.name(), args.agents, args.size));
        fs::write(&path, model::write_instance(&instance)).map_err(io_err(&path))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_shares(args: &SharesArgs) -> Result<i32, CliError> {
    let instance = load_instance(&args.instance)?;
    let which = match args.which {
        Which::Mms => ShareSelection { mms: true, aps: false, mu: false },
        Which::Aps => ShareSelection { mms: false, aps: true, mu: false },
        Which::Mu => ShareSelection { mms: false, aps: false, mu: true },
        Which::All => ShareSelection::ALL,
    };
    if which.mms && !instance.is_symmetric() && args.which == Which::Mms {
        return Err(ShareError::NotSymmetric.into());
    }
    let report = shares::share_report(&instance, which, &args.limits.limits())?;
    emit(
        args.out.as_deref(),
        &serde_json::to_vec_pretty(&report).expect("reports serialize"),
    )?;
    Ok(EXIT_OK)
}

fn solve(instance: &Instance, algo: Algo, epsilon: &Rational) -> Result<(Allocation, String), CliError> {
    match algo {
        Algo::SplcMms => {
            if !instance.is_splc() {
                return Err(CliError::Invalid(format!(
                    "splc-mms needs SPLC valuations, instance is {}",
                    instance.family()
                )));
            }
            let (allocation, trace) = splc_mms::solve_half_mms(instance)?;
            Ok((allocation, trace.to_json()))
        }
        Algo::SubAps => {
            let run = sub_aps::solve_third_aps(instance, epsilon)?;
            let log = serde_json::to_string_pretty(&run).expect("runs serialize");
            Ok((run.allocation, log))
        }
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<i32, CliError> {
    let instance = load_instance(&args.instance)?;
    let epsilon = parse_rational(&args.epsilon, "epsilon")?;
    let (allocation, trace) = solve(&instance, args.algo, &epsilon)?;
    if let Some(path) = &args.trace {
        fs::write(path, trace).map_err(io_err(path))?;
    }
    emit(args.out.as_deref(), &model::write_allocation(&allocation, &instance))?;
    Ok(EXIT_OK)
}

fn targets(instance: &Instance, spec: &str, limits: &OracleLimits) -> Result<Vec<Rational>, CliError> {
    let n = instance.agents();
    match spec {
        "mms" => (0..n)
            .map(|i| shares::exact_mms(instance, i, limits).map_err(CliError::from))
            .collect(),
        "aps" => (0..n)
            .map(|i| shares::exact_aps(instance, i, limits).map_err(CliError::from))
            .collect(),
        "mu" => (0..n)
            .map(|i| {
                shares::uniform_bound(instance, i)
                    .ok_or_else(|| CliError::Invalid("mu targets need SPLC valuations".into()))
            })
            .collect(),
        path => {
            #[derive(Deserialize)]
            struct Targets(#[serde(with = "rational::serde_text_vec")] Vec<Rational>);
            let bytes = read(Path::new(path))?;
            let Targets(t) = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::Invalid(format!("{path}: {e}")))?;
            Ok(t)
        }
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let instance = load_instance(&args.instance)?;
    let allocation = model::parse_allocation(&read(&args.allocation)?, &instance)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.allocation.display())))?;
    let factor = parse_rational(&args.factor, "factor")?;
    let targets = targets(&instance, &args.target, &args.limits.limits())?;
    let report = shares::verify(&instance, &allocation, &targets, &factor)?;
    emit(
        args.out.as_deref(),
        &serde_json::to_vec_pretty(&report).expect("reports serialize"),
    )?;
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_FAIL })
}

// ---------------------------------------------------------------------------
// bench

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub runs: Vec<BenchRun>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum EntitlementDoc {
    Named(String),
    Weights(#[serde(with = "rational::serde_text_vec")] Vec<Rational>),
}

fn default_entitlements() -> EntitlementDoc {
    EntitlementDoc::Named("symmetric".into())
}

fn default_epsilon() -> String {
    "1/20".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchRun {
    pub family: String,
    pub agents: usize,
    pub size: usize,
    #[serde(default = "default_copies")]
    pub max_copies: usize,
    #[serde(default = "default_value")]
    pub max_value: u32,
    #[serde(default = "default_entitlements")]
    pub entitlements: EntitlementDoc,
    #[serde(default)]
    pub seed_start: u64,
    pub count: u64,
    pub algos: Vec<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: String,
}

fn default_copies() -> usize {
    2
}

fn default_value() -> u32 {
    10
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub id: String,
    pub seed: u64,
    pub family: String,
    pub n: usize,
    pub size: String,
    pub algo: String,
    /// `p/q`, `inf` when no agent has a positive target, or a flag such as `over-limit`.
    pub worst_ratio: String,
    pub runtime_ms: u128,
}

impl BenchRecord {
    fn fields(&self) -> [String; 8] {
        [
            self.id.clone(),
            self.seed.to_string(),
            self.family.clone(),
            self.n.to_string(),
            self.size.clone(),
            self.algo.clone(),
            self.worst_ratio.clone(),
            self.runtime_ms.to_string(),
        ]
    }
}

fn size_label(instance: &Instance) -> String {
    match instance.universe() {
        model::Universe::Copies(k) => format!(
            "k={}",
            k.iter().map(usize::to_string).collect::<Vec<_>>().join("+")
        ),
        model::Universe::Goods(m) => format!("m={m}"),
    }
}

/// Minimum of `achieved / target` over agents with a positive target.
pub fn worst_ratio(achieved: &[Rational], targets: &[Rational]) -> Option<Rational> {
    achieved
        .iter()
        .zip(targets)
        .filter(|(_, t)| t.is_positive())
        .map(|(a, t)| a / t)
        .min()
}

fn bench_one(
    instance: &Instance,
    algo: Algo,
    epsilon: &Rational,
    limits: &OracleLimits,
) -> Result<String, CliError> {
    let n = instance.agents();
    let targets: Vec<Rational> = match algo {
        Algo::SplcMms => {
            if !instance.is_splc() || !instance.is_symmetric() {
                return Ok("unsupported".into());
            }
            (0..n).map(|i| shares::exact_mms(instance, i, limits)).collect::<Result<_, _>>()
        }
        Algo::SubAps => (0..n).map(|i| shares::exact_aps(instance, i, limits)).collect(),
    }
    .map_err(CliError::from)?;
    let (allocation, _) = solve(instance, algo, epsilon)?;
    let achieved = allocation.values(instance);
    Ok(worst_ratio(&achieved, &targets).map_or_else(|| "inf".into(), |r| rational::format(&r)))
}

/// Runs every `(instance, algorithm)` pair of `config`; rows come back sorted by id.
pub fn run_bench(
    config: &BenchConfig,
    limits: &OracleLimits,
    timing: bool,
) -> Result<Vec<BenchRecord>, CliError> {
    let mut rows = Vec::new();
    for run in &config.runs {
        let family = Family::from_str(&run.family, true)
            .map_err(|_| CliError::Invalid(format!("unknown family {}", run.family)))?;
        let entitlements = match &run.entitlements {
            EntitlementDoc::Named(name) => parse_entitlements(name)?,
            EntitlementDoc::Weights(w) => Entitlements::Given(w.clone()),
        };
        let gen = GenConfig {
            family,
            agents: run.agents,
            size: run.size,
            max_copies: run.max_copies,
            max_value: run.max_value,
            entitlements,
        };
        let epsilon = parse_rational(&run.epsilon, "epsilon")?;
        let algos = run
            .algos
            .iter()
            .map(|a| {
                Algo::from_str(a, true).map_err(|_| CliError::Invalid(format!("unknown algo {a}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for seed in run.seed_start..run.seed_start + run.count {
            let instance = generate::generate(&gen, seed)?;
            let id = format!("{}-n{}-s{}-{seed:06}", family.name(), run.agents, run.size);
            for &algo in &algos {
                let start = Instant::now();
                let worst_ratio = match bench_one(&instance, algo, &epsilon, limits) {
                    Ok(r) => r,
                    Err(CliError::Limit(_)) => "over-limit".into(),
                    Err(e) => return Err(e),
                };
                rows.push(BenchRecord {
                    id: id.clone(),
                    seed,
                    family: family.name().into(),
                    n: run.agents,
                    size: size_label(&instance),
                    algo: algo.name().into(),
                    worst_ratio,
                    runtime_ms: if timing { start.elapsed().as_millis() } else { 0 },
                });
            }
        }
    }
    rows.sort_by(|a, b| (&a.id, &a.algo).cmp(&(&b.id, &b.algo)));
    Ok(rows)
}

pub fn write_csv(rows: &[BenchRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.fields()).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn cmd_bench(args: &BenchArgs) -> Result<i32, CliError> {
    let bytes = read(&args.config)?;
    let config: BenchConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.config.display())))?;
    let rows = run_bench(&config, &args.limits.limits(), !args.no_timing)?;
    let csv = write_csv(&rows);
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(io_err(path))?,
        None => std::io::stdout()
            .lock()
            .write_all(&csv)
            .map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(EXIT_OK)
}
