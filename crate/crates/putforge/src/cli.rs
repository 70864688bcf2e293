//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 domain failure (generation error, verification
//! failure, conflict), 2 usage error. Every subcommand prints its effective
//! seed and configuration first, so a run can be reproduced from its output.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::batch::{self, BatchPreset};
use crate::dsl;
use crate::emit::EmitOptions;
use crate::instantiate::{ArgvPolicy, Ranges, Rng, RNG_ALGORITHM};
use crate::manifest::{self, RecordStatus};
use crate::metrics;
use crate::model::BugKind;
use crate::oracle;
use crate::verify;

#[derive(Parser)]
#[command(
    name = "putforge",
    version,
    about = "Deterministic generator of C programs with seeded, input-triggerable bugs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a batch of PUTs with sources and a ground-truth manifest.
    Generate(GenerateArgs),
    /// Parse a spec file and report every violation.
    ParseCheck(ParseCheckArgs),
    /// Print the triggering and non-triggering inputs for one sequence.
    Derive(DeriveArgs),
    /// Print the static metrics for one sequence.
    Metrics(MetricsArgs),
    /// Run the reproducibility protocol on a generated batch.
    Verify(VerifyArgs),
    /// List the built-in batch presets.
    Presets,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BugArg {
    Assert,
    Oob,
}

impl From<BugArg> for BugKind {
    fn from(value: BugArg) -> Self {
        match value {
            BugArg::Assert => BugKind::Assert,
            BugArg::Oob => BugKind::OutOfBounds,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Spec file: one sequence per line, `#` comments.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    /// Named preset (see `putforge presets`), or custom:<count>x<length>.
    #[arg(long)]
    preset: Option<String>,
    /// Instantiations per spec line; only valid with --spec.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; the batch goes into a subdirectory named after it.
    #[arg(long)]
    out: PathBuf,
    /// Override the bug payload of every generated PUT.
    #[arg(long)]
    bug: Option<BugArg>,
    /// JSON file overriding the default parameter ranges.
    #[arg(long)]
    ranges: Option<PathBuf>,
}

#[derive(Args)]
struct ParseCheckArgs {
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long = "spec-line")]
    spec_line: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long = "spec-line")]
    spec_line: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Parallel compile/run jobs.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    /// Comma-separated compiler commands, or @file with one per line;
    /// defaults to $PUTFORGE_CC_LIST, then probing gcc/clang.
    #[arg(long = "cc-list")]
    cc_list: Option<String>,
    /// Per compile/run wall-clock limit, in seconds.
    #[arg(long, default_value_t = 10)]
    timeout: u64,
}

/// Runs the CLI and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::ParseCheck(args) => parse_check(args),
        Command::Derive(args) => derive(args),
        Command::Metrics(args) => metrics_cmd(args),
        Command::Verify(args) => verify_cmd(args),
        Command::Presets => presets(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

const USAGE: i32 = 2;

fn load_ranges(path: Option<&Path>) -> Result<Ranges> {
    match path {
        None => Ok(Ranges::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read ranges file {}", path.display()))?;
            let ranges: Ranges = serde_json::from_str(&text)
                .with_context(|| format!("malformed ranges file {}", path.display()))?;
            ranges.check().map_err(|e| anyhow!("{e}"))?;
            Ok(ranges)
        }
    }
}

fn quote(arg: &str) -> String {
    format!("'{}'", arg.replace('\'', r"'\''"))
}

fn quote_vec(args: &[String]) -> String {
    args.iter()
        .map(|a| quote(a))
        .collect::<Vec<_>>()
        .join(" ")
}

fn generate(args: GenerateArgs) -> Result<i32> {
    let ranges = load_ranges(args.ranges.as_deref())?;
    let opts = EmitOptions {
        bug_override: args.bug.map(Into::into),
    };
    let bug_text = args
        .bug
        .map(|b| BugKind::from(b).to_string())
        .unwrap_or_else(|| "per-spec".into());

    let (name, jobs) = match (&args.spec, &args.preset) {
        (Some(_), Some(_)) | (None, None) => {
            eprintln!("usage: exactly one of --spec and --preset is required");
            return Ok(USAGE);
        }
        (None, Some(preset_name)) => {
            if args.count.is_some() {
                eprintln!("usage: --count is fixed by the preset and cannot be overridden");
                return Ok(USAGE);
            }
            let preset: BatchPreset = match preset_name.parse() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("usage: {e}");
                    return Ok(USAGE);
                }
            };
            let jobs = batch::make_batch(&preset, args.seed)?;
            (preset.name(), jobs)
        }
        (Some(spec_path), None) => {
            let text = std::fs::read_to_string(spec_path)
                .with_context(|| format!("cannot read spec file {}", spec_path.display()))?;
            let lines = dsl::parse_file(&text)?;
            if lines.is_empty() {
                bail!("spec file {} contains no sequences", spec_path.display());
            }
            let count = args.count.unwrap_or(1);
            let mut jobs = Vec::with_capacity(lines.len() * count);
            for (_, seq) in &lines {
                for _ in 0..count {
                    let index = jobs.len();
                    jobs.push((seq.clone(), Rng::child_seed(args.seed, index as u64)));
                }
            }
            ("custom".to_string(), jobs)
        }
    };

    println!(
        "# putforge generate batch={name} seed={} rng={RNG_ALGORITHM} bug={bug_text} ranges={} out={}",
        args.seed,
        args.ranges
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "default".into()),
        args.out.display()
    );

    let manifest = batch::generate_records(
        &name,
        args.seed,
        &jobs,
        &ranges,
        &args.out,
        ArgvPolicy::Distinct,
        &opts,
    )?;

    let mut errors = 0;
    for record in &manifest.records {
        match &record.status {
            RecordStatus::Ok => println!(
                "{} bug@{} trigger={}",
                record.source_path.as_deref().unwrap_or("?"),
                record.bug_line.unwrap_or(0),
                quote_vec(record.trigger.as_deref().unwrap_or(&[]))
            ),
            RecordStatus::Error(message) => {
                errors += 1;
                println!("put_{name}_{} ERROR {message}", record.index);
            }
        }
    }
    println!(
        "# wrote {} PUT(s) ({errors} error(s)) and manifest.json under {}",
        manifest.records.len() - errors,
        args.out.join(&name).display()
    );
    Ok(if errors > 0 { 1 } else { 0 })
}

fn parse_check(args: ParseCheckArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("cannot read spec file {}", args.spec.display()))?;
    match dsl::parse_file(&text) {
        Ok(lines) => {
            for (line_no, seq) in &lines {
                println!("line {line_no}: ok ({} transformation(s))", seq.items.len());
            }
            println!("# {} sequence(s), all valid", lines.len());
            Ok(0)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(1)
        }
    }
}

/// Instantiation used by `derive` and `metrics`: the first record (index 0)
/// of a single-line generate run with the same seed, so outputs line up with
/// `generate --spec`.
fn instantiate_line(line: &str, seed: u64) -> Result<crate::model::InstantiatedSequence> {
    let seq = dsl::parse(line)?;
    let child = Rng::child_seed(seed, 0);
    let mut rng = Rng::new(Rng::child_seed(child, 1));
    Ok(crate::instantiate::instantiate(
        &seq,
        &Ranges::default(),
        &mut rng,
        ArgvPolicy::Distinct,
    )?)
}

fn derive(args: DeriveArgs) -> Result<i32> {
    println!("# putforge derive seed={} rng={RNG_ALGORITHM}", args.seed);
    let inst = instantiate_line(&args.spec_line, args.seed)?;
    let inputs = oracle::derive_inputs(&inst)?;
    println!("trigger: {}", quote_vec(&inputs.trigger));
    match &inputs.non_trigger {
        Some(v) => println!("nonTrigger: {}", quote_vec(v)),
        None => println!("nonTrigger: (none exists: the bug is reached on every input)"),
    }
    Ok(0)
}

fn metrics_cmd(args: MetricsArgs) -> Result<i32> {
    println!("# putforge metrics seed={} rng={RNG_ALGORITHM}", args.seed);
    let inst = instantiate_line(&args.spec_line, args.seed)?;
    let inputs = oracle::derive_inputs(&inst)?;
    println!("cyclomatic: {}", metrics::cyclomatic(&inst));
    println!(
        "pathStatements: {}",
        metrics::path_statements(&inst, &inputs.trigger)?
    );
    println!("transformationCount: {}", inst.items.len());
    Ok(0)
}

fn verify_cmd(args: VerifyArgs) -> Result<i32> {
    if !args.manifest.exists() {
        eprintln!("usage: manifest {} does not exist", args.manifest.display());
        return Ok(USAGE);
    }
    let manifest = manifest::read(&args.manifest)?;
    let manifest_dir = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let compilers = verify::discover_compilers(args.cc_list.as_deref());
    let configs = verify::build_configs(&compilers);
    println!(
        "# putforge verify batch={} jobs={} timeout={}s compilers=[{}]",
        manifest.batch,
        args.jobs,
        args.timeout,
        compilers.join(", ")
    );
    if configs.is_empty() {
        println!("verify: skipped ({} PUT(s)): no C compiler available", manifest.records.len());
        return Ok(0);
    }
    let report = verify::verify_batch(
        &manifest,
        &manifest_dir,
        &configs,
        args.jobs,
        Duration::from_secs(args.timeout),
    )?;
    let report_path = manifest_dir.join("verification.json");
    verify::write_report(&report, &report_path)?;
    for put in &report.puts {
        match put.verdict {
            verify::PutVerdict::Pass => println!("{}: pass", put.source_path),
            verify::PutVerdict::Inconclusive => {
                println!("{}: inconclusive", put.source_path)
            }
            verify::PutVerdict::Skipped => println!("{}: skipped", put.source_path),
            verify::PutVerdict::Fail => {
                println!("{}: FAIL ({})", put.source_path, put.reasons.join("; "))
            }
        }
    }
    println!(
        "# {} pass / {} fail / {} inconclusive / {} skipped; report: {}",
        report.passed,
        report.failed,
        report.inconclusive,
        report.skipped,
        report_path.display()
    );
    Ok(if report.pass() { 0 } else { 1 })
}

fn presets() -> Result<i32> {
    println!("{:<8} {:>6}  SHAPE", "NAME", "#PUTS");
    for preset in BatchPreset::all_named() {
        println!(
            "{:<8} {:>6}  {}",
            preset.name(),
            preset.count(),
            preset.describe()
        );
    }
    println!("custom:<count>x<length>   any   fixed-length random sequences");
    Ok(0)
}
