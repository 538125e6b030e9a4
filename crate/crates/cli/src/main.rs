use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rumtest_core::choice_types::{enumerate_rational_types, RepairWeights};
use rumtest_core::colgen::ColgenError;
use rumtest_core::geometry::{
    enumerate_patches, Dataset, GeometryError, Observations, PatchFile, PatchStructure, TiePolicy, DEFAULT_DELTA,
    DEFAULT_TIE_EPS,
};
use rumtest_core::io::{read_choices_file, read_patch_counts_file, read_prices_file, IoError};
use rumtest_core::pipeline::{run_test, Mode, PipelineError, TestConfig, TraceRecord, DEFAULT_SUBSET_SIZE};
use rumtest_core::synth;

const EXIT_PARTIAL: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "rumtest", version, about = "Test whether repeated cross-section demand data are stochastically rationalizable")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test and write a JSON report.
    Run(RunArgs),
    /// Enumerate the patches of a price matrix.
    Patches(PatchesArgs),
    /// List every rational choice type of a patch file.
    Enumerate(EnumerateArgs),
    /// Write a synthetic instance as CSV files.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TieArg {
    Error,
    NoPreference,
}

#[derive(Clone, Copy, ValueEnum)]
enum RepairArg {
    /// Adding a relation costs 1, removing one costs 5.
    Pseudocode,
    /// Adding a relation costs 5, removing one costs 1.
    PreferRemoval,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    prices: PathBuf,
    /// One row `period,q1,...,qL` per observed bundle.
    #[arg(long, required_unless_present = "patch_counts", conflicts_with = "patch_counts")]
    choices: Option<PathBuf>,
    /// Rows `period,patch_index,count` with 0-based patch indices.
    #[arg(long)]
    patch_counts: Option<PathBuf>,
    /// Tightening parameter, or `auto` for sqrt(log N / N).
    #[arg(long, default_value = "auto")]
    tau: String,
    #[arg(long, default_value_t = 200)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "heur-bounds")]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_SUBSET_SIZE)]
    subset_size: usize,
    /// Wall-clock cap in seconds for the whole run.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Wall-clock cap in seconds for one bootstrap replication.
    #[arg(long)]
    replication_time_limit: Option<f64>,
    #[arg(long, value_enum, default_value = "error")]
    tie_policy: TieArg,
    #[arg(long, default_value_t = DEFAULT_TIE_EPS)]
    tie_eps: f64,
    /// Minimum patch margin on the price-normalised simplex.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Scores for repairing sampled types in the tightening subset.
    #[arg(long, value_enum, default_value = "pseudocode")]
    repair_weights: RepairArg,
    /// Line-delimited JSON trace of every column-generation iteration;
    /// `-` or no value writes to stderr.
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    trace: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also print a summary table to stdout.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct PatchesArgs {
    #[arg(long)]
    prices: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    patches: PathBuf,
    /// Refuse instances whose type count `Π I_t` exceeds this.
    #[arg(long, default_value_t = 1_000_000)]
    limit: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Mixture of rational types; rationalizable by construction.
    Mixture,
    /// Uniform draws over patches.
    Random,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    periods: usize,
    #[arg(long)]
    goods: usize,
    /// Observations per period (random) or per type (mixture).
    #[arg(long, default_value_t = 100)]
    observations: u64,
    /// Number of types in a mixture.
    #[arg(long, default_value_t = 5)]
    types: usize,
    #[arg(long, value_enum, default_value = "mixture")]
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Errors in the user's input, reported with exit code 3.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T, E: Into<anyhow::Error>>(r: std::result::Result<T, E>) -> Result<T> {
    r.map_err(|e| InputError(e.into()).into())
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        _ => Box::new(io::stdout().lock()),
    })
}

fn secs(v: Option<f64>, name: &str) -> Result<Option<Duration>> {
    v.map(|s| input(Duration::try_from_secs_f64(s).with_context(|| format!("bad --{name}"))))
        .transpose()
}

fn load_dataset(args: &RunArgs) -> Result<Dataset> {
    let prices = input(read_prices_file(&args.prices))?;
    let observations = match (&args.choices, &args.patch_counts) {
        (Some(c), _) => Observations::Bundles(input(read_choices_file(c, &prices))?),
        (None, Some(c)) => {
            let structure = input(enumerate_patches(&prices.prices, args.delta))?;
            Observations::PatchCounts(input(read_patch_counts_file(c, &prices, &structure.patch_counts()))?)
        }
        (None, None) => bail!(InputError(anyhow::anyhow!("one of --choices or --patch-counts is required"))),
    };
    input(Dataset::new(prices.prices, observations))
}

fn run(args: RunArgs) -> Result<u8> {
    let tau = match args.tau.as_str() {
        "auto" => None,
        v => Some(input(v.parse::<f64>().with_context(|| format!("bad --tau {v:?}")))?),
    };
    let config = TestConfig {
        tau,
        bootstrap: args.bootstrap,
        seed: args.seed,
        subset_size: args.subset_size,
        mode: args.mode,
        time_limit: secs(args.time_limit, "time-limit")?,
        replication_time_limit: secs(args.replication_time_limit, "replication-time-limit")?,
        tie_policy: match args.tie_policy {
            TieArg::Error => TiePolicy::Error,
            TieArg::NoPreference => TiePolicy::NoPreference,
        },
        tie_eps: args.tie_eps,
        delta: args.delta,
        repair_weights: match args.repair_weights {
            RepairArg::Pseudocode => RepairWeights::PSEUDOCODE,
            RepairArg::PreferRemoval => RepairWeights::PREFER_REMOVAL,
        },
        ..TestConfig::default()
    };
    input(config.validate())?;
    let dataset = load_dataset(&args)?;

    let mut trace_out: Option<Box<dyn Write>> = match args.trace.as_deref() {
        None => None,
        Some(p) if p == Path::new("-") => Some(Box::new(io::stderr())),
        Some(p) => Some(Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        ))),
    };
    let mut trace_err = None;
    let mut sink = |r: &TraceRecord| {
        if let Some(w) = trace_out.as_mut() {
            let res = serde_json::to_writer(&mut *w, r)
                .map_err(io::Error::from)
                .and_then(|_| w.write_all(b"\n"));
            if let Err(e) = res {
                trace_err.get_or_insert(e);
            }
        }
    };
    let tracing = args.trace.is_some();
    let result = run_test(
        &dataset,
        &config,
        tracing.then_some(&mut sink as &mut dyn FnMut(&TraceRecord)),
    );
    if let Some(w) = trace_out.as_mut() {
        w.flush()?;
    }
    if let Some(e) = trace_err {
        return Err(e).context("writing trace");
    }
    let report = match result {
        Ok(r) => r,
        Err(PipelineError::Geometry(e)) => return Err(InputError(e.into()).into()),
        Err(PipelineError::Config(m)) => return Err(InputError(anyhow::anyhow!(m)).into()),
        Err(PipelineError::Colgen(ColgenError::TimedOut { upper_bound, iterations })) => {
            eprintln!(
                "rumtest: time limit reached while computing the statistic \
                 ({iterations} iterations, upper bound {upper_bound})"
            );
            return Ok(EXIT_PARTIAL);
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = writer(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.write_all(b"\n")?;
    out.flush()?;
    drop(out);
    if args.table {
        let label = format!("1-{}", report.periods);
        print!("{}", report.table(&label));
    }
    if report.partial {
        eprintln!(
            "rumtest: partial result, {} of {} replications completed",
            report.completed, report.requested
        );
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn patches(args: PatchesArgs) -> Result<u8> {
    let prices = input(read_prices_file(&args.prices))?;
    let structure = input(enumerate_patches(&prices.prices, args.delta))?;
    for d in structure.dropped() {
        log::warn!("period {}: dropped patch {:?} (margin {})", d.period, d.signs, d.margin);
    }
    let mut out = writer(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &structure.to_file())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(0)
}

fn enumerate(args: EnumerateArgs) -> Result<u8> {
    let file = File::open(&args.patches).with_context(|| format!("opening {}", args.patches.display()));
    let file: PatchFile = input(
        input(file).and_then(|f| serde_json::from_reader(io::BufReader::new(f)).context("parsing patch file")),
    )?;
    let structure = input(PatchStructure::from_file(file))?;
    let types = input(enumerate_rational_types(structure.inducement(), args.limit))?;
    let mut out = writer(args.out.as_deref())?;
    serde_json::to_writer(
        &mut out,
        &serde_json::json!({ "count": types.len(), "types": types }),
    )?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(0)
}

fn synth_cmd(args: SynthArgs) -> Result<u8> {
    if args.periods == 0 || args.goods == 0 {
        return Err(InputError(anyhow::anyhow!("periods and goods must be positive")).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let prices = synth::random_prices(args.periods, args.goods, &mut rng);
    let structure = enumerate_patches(&prices, DEFAULT_DELTA).map_err(|e: GeometryError| InputError(e.into()))?;
    let x = structure.inducement();
    let counts = match args.kind {
        SynthKind::Mixture => {
            let types = synth::random_rational_types(x, args.types.max(1), &mut rng)?;
            synth::mixture_counts(x, &types, &vec![args.observations; types.len()])
        }
        SynthKind::Random => synth::random_counts(x, args.observations.max(1), &mut rng),
    };
    let bundles = synth::bundles_from_counts(&structure, &counts);
    std::fs::create_dir_all(&args.out_dir)?;
    let mut w = csv::Writer::from_path(args.out_dir.join("prices.csv"))?;
    let header = |tag: &str| {
        std::iter::once("period".to_string())
            .chain((1..=args.goods).map(|k| format!("{tag}{k}")))
            .collect::<Vec<_>>()
    };
    w.write_record(header("p"))?;
    for (t, p) in prices.iter().enumerate() {
        w.write_record(std::iter::once(t.to_string()).chain(p.iter().map(|v| format!("{v:?}"))))?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(args.out_dir.join("choices.csv"))?;
    w.write_record(header("q"))?;
    for (t, period) in bundles.iter().enumerate() {
        for q in period {
            w.write_record(std::iter::once(t.to_string()).chain(q.iter().map(|v| format!("{v:?}"))))?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Patches(a) => patches(a),
        Command::Enumerate(a) => enumerate(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rumtest: {e:#}");
            if e.downcast_ref::<InputError>().is_some() || e.downcast_ref::<IoError>().is_some() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
