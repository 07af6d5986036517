//! `fedarm`: command-line front end for the federated mining pipeline.
//!
//! Exit codes: 0 success, 1 bench invariant violation or pipeline failure,
//! 2 usage error, 65 malformed input data, 74 I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedarm_core::report::{MiningReport, SplitReport};
use fedarm_core::{
    dispersion, parse_basket_file, run_bench, run_federation, split, AggregationMode, BenchData, BenchGrid,
    DatasetError, DoubleEncryptionKey, PipelineConfig, TransactionDatabase,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DATAERR: u8 = 65;
const EXIT_IOERR: u8 = 74;

#[derive(Debug, Parser)]
#[command(name = "fedarm", version, about = "Privacy-preserving federated frequent-itemset mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the encrypt / split / mine / aggregate pipeline and write a JSON report.
    Mine(MineArgs),
    /// Sweep a parameter grid, comparing against classic Apriori, and write CSV.
    Bench(BenchArgs),
    /// Measure how evenly cipher-item frequencies spread over the blocks.
    Dispersion(DispersionArgs),
    /// Show which transaction ids each intermediate server receives.
    SplitReport(SplitArgs),
}

#[derive(Debug, Args)]
struct KeyArgs {
    /// Caesar shift of the first encryption layer.
    #[arg(long, env = "FEDARM_CAESAR_SHIFT", default_value_t = 5,
          value_parser = clap::value_parser!(i64).range(1..=127))]
    caesar_shift: i64,
    /// 7-bit XOR key of the second encryption layer.
    #[arg(long, env = "FEDARM_STREAM_KEY", default_value_t = 85,
          value_parser = clap::value_parser!(i64).range(0..=127))]
    stream_key: i64,
}

impl KeyArgs {
    fn key(&self) -> DoubleEncryptionKey {
        DoubleEncryptionKey::new(self.caesar_shift, self.stream_key).expect("range-checked by the parser")
    }
}

#[derive(Debug, Args)]
struct MineArgs {
    /// Basket file, one transaction per line; repeat once per data owner.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Relative minimum support in (0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    sigma: f64,
    /// Minimum rule confidence in (0, 1].
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    min_conf: f64,
    /// Number of intermediate servers.
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    ics: usize,
    /// Number of data owners; defaults to the number of --input files.
    #[arg(long, value_parser = parse_positive)]
    owners: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = AggregationMode::Union)]
    mode: AggregationMode,
    /// Largest itemset size explored.
    #[arg(long, value_parser = parse_positive)]
    max_level: Option<usize>,
    #[command(flatten)]
    key: KeyArgs,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Fixed basket file; synthetic baskets are generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated values of σ.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1], value_parser = parse_unit)]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit)]
    min_conf: f64,
    /// Comma-separated intermediate-server counts (c).
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4], value_parser = parse_positive)]
    ics: Vec<usize>,
    /// Comma-separated data-owner counts (t).
    #[arg(long, value_delimiter = ',', default_values_t = [1], value_parser = parse_positive)]
    owners: Vec<usize>,
    /// Comma-separated synthetic database sizes, shared across owners.
    #[arg(long, value_delimiter = ',', default_values_t = [1000], value_parser = parse_positive)]
    transactions: Vec<usize>,
    /// Synthetic alphabet size.
    #[arg(long, default_value_t = 20, value_parser = parse_positive)]
    items: usize,
    /// Longest synthetic basket.
    #[arg(long, default_value_t = 10, value_parser = parse_positive)]
    max_len: usize,
    /// Timing repetitions per cell (median reported).
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = AggregationMode::Union)]
    mode: AggregationMode,
    #[arg(long, value_parser = parse_positive)]
    max_level: Option<usize>,
    #[command(flatten)]
    key: KeyArgs,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DispersionArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = parse_positive)]
    ics: usize,
    /// First seed of the sweep.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds to average over.
    #[arg(long, default_value_t = 1, value_parser = parse_positive)]
    seeds: usize,
    #[command(flatten)]
    key: KeyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2, value_parser = parse_positive)]
    ics: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(format!("{e}")),
    }
}

/// A failure already classified by exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn read_db(path: &Path) -> Result<TransactionDatabase, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::new(EXIT_IOERR, anyhow::anyhow!("{}: {e}", path.display())))?;
    parse_basket_file(&bytes).map_err(|e| {
        let code = match e {
            DatasetError::Malformed { .. } | DatasetError::Empty => EXIT_DATAERR,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, anyhow::anyhow!("{}: {e}", path.display()))
    })
}

fn emit(out: Option<&Path>, body: &str) -> CmdResult {
    let res = match out {
        Some(path) => fs::write(path, body).map_err(|e| anyhow::anyhow!("{}: {e}", path.display())),
        None => io::stdout().lock().write_all(body.as_bytes()).map_err(|e| anyhow::anyhow!("stdout: {e}")),
    };
    res.map_err(|e| Failure::new(EXIT_IOERR, e))
}

fn usage(msg: String) -> Failure {
    Failure::new(EXIT_USAGE, anyhow::anyhow!(msg))
}

fn cmd_mine(args: MineArgs) -> CmdResult {
    let n_owners = match (args.owners, args.input.len()) {
        (Some(t), n) if n > 1 && t != n => {
            return Err(usage(format!("--owners {t} disagrees with the {n} --input files")));
        }
        (Some(t), _) => t,
        (None, n) => n,
    };
    let owners = args.input.iter().map(|p| read_db(p)).collect::<Result<Vec<_>, _>>()?;
    let config = PipelineConfig {
        n_ics: args.ics,
        sigma: args.sigma,
        min_conf: args.min_conf,
        mode: args.mode,
        key: args.key.key(),
        seed: args.seed,
        n_data_owners: n_owners,
        max_level: args.max_level,
    };
    let (result, metrics) = run_federation(&owners, &config).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    emit(args.out.as_deref(), &MiningReport::new(&config, &result, &metrics).to_json())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let data = match &args.input {
        Some(path) => BenchData::Fixed(read_db(path)?),
        None => BenchData::Synthetic { n_items: args.items, max_len: args.max_len },
    };
    let grid = BenchGrid {
        owners: args.owners,
        ics: args.ics,
        sigmas: args.sigma,
        n_transactions: args.transactions,
        data,
        mode: args.mode,
        min_conf: args.min_conf,
        key: args.key.key(),
        seed: args.seed,
        max_level: args.max_level,
        repeats: args.repeats,
    };
    let report = run_bench(&grid).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    emit(args.out.as_deref(), &report.to_csv())?;
    let violations = report.violations();
    if violations.is_empty() {
        Ok(())
    } else {
        for v in &violations {
            eprintln!("fedarm: violation: {v}");
        }
        Err(Failure::new(EXIT_FAILURE, anyhow::anyhow!("{} bench row violation(s)", violations.len())))
    }
}

fn cmd_dispersion(args: DispersionArgs) -> CmdResult {
    let db = read_db(&args.input)?;
    let report =
        dispersion(&db, &args.key.key(), args.ics, args.seed, args.seeds).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    emit(args.out.as_deref(), &report.to_json())
}

fn cmd_split_report(args: SplitArgs) -> CmdResult {
    let db = read_db(&args.input)?;
    let assignment = split(&db.ids(), args.ics, args.seed).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    emit(args.out.as_deref(), &SplitReport::new(&assignment).to_json())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Dispersion(a) => cmd_dispersion(a),
        Command::SplitReport(a) => cmd_split_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fedarm: error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
