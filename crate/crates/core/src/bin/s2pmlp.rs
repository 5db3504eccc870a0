use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use s2pmlp::bench::{run_bench, BenchOptions, ShareSplit, DEFAULT_DELTAS};
use s2pmlp::mlp::model::ModelFile;
use s2pmlp::protocols::Protocol;
use s2pmlp::report::{emit_report, to_canonical_json};
use s2pmlp::train::{run_predict, run_train_file, TrainOptions, DEFAULT_SEED};
use s2pmlp::{Error, SplitConfig};

/// Rows above which `train` insists on `--large`.
const LARGE_ROWS: usize = 10_000;

#[derive(Parser)]
#[command(
    name = "s2pmlp",
    version,
    about = "Two-party protocol benchmarks and vertically partitioned MLP training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol over a sweep of input exponent ranges.
    Bench(BenchArgs),
    /// Train the secure MLP beside the plaintext baseline.
    Train(TrainArgs),
    /// Secure prediction from two parties' saved model shares.
    Predict(PredictArgs),
}

#[derive(Args)]
struct SessionArgs {
    /// Addends per scalar in the Hadamard and DReLU encodings.
    #[arg(long, default_value_t = SplitConfig::DEFAULT_RHO)]
    rho: usize,
    /// Verification challenge rounds per check.
    #[arg(long, default_value_t = SplitConfig::DEFAULT_VERIFY_ROUNDS)]
    verify_rounds: usize,
    /// Scale of commodity-server masks and random shares.
    #[arg(long, default_value_t = SplitConfig::DEFAULT_MASK_SCALE)]
    mask_scale: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Net {
    Lan,
    Wan,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    protocol: String,
    #[arg(long, default_value_t = 50)]
    dim: usize,
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exponent range; repeat or comma-separate for a sweep. Defaults to 0,2,4,6,8.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<u32>,
    /// How single-input protocols split their input into shares.
    #[arg(long, default_value = "same-sign")]
    shares: String,
    /// Network used for the summary line; the report carries both.
    #[arg(long, value_enum, default_value_t = Net::Lan)]
    net: Net,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Bin,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Hidden layer widths, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Reshuffle training rows every epoch.
    #[arg(long)]
    shuffle: bool,
    #[command(flatten)]
    session: SessionArgs,
    /// Directory for report.json and both parties' model shares.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Allow datasets above 10000 rows.
    #[arg(long)]
    large: bool,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model_a: PathBuf,
    #[arg(long)]
    model_b: PathBuf,
    /// Scored against when present in the file.
    #[arg(long, default_value = "label")]
    label_col: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SessionArgs {
    fn config(&self, seed: u64) -> Result<SplitConfig, Error> {
        SplitConfig::new(self.rho, self.verify_rounds, self.mask_scale, seed)
    }
}

fn write_or_print<T: serde::Serialize>(report: &T, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => emit_report(report, p),
        None => {
            print!("{}", to_canonical_json(report)?);
            Ok(())
        }
    }
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let protocol: Protocol = args.protocol.parse()?;
    let mut opts = BenchOptions::new(protocol, args.dim, args.session.config(args.seed)?);
    opts.deltas = if args.delta.is_empty() {
        DEFAULT_DELTAS.to_vec()
    } else {
        args.delta
    };
    opts.shares = args.shares.parse::<ShareSplit>()?;
    let report = run_bench(&opts)?;
    for run in &report.runs {
        let t = match args.net {
            Net::Lan => run.traffic.lan_seconds,
            Net::Wan => run.traffic.wan_seconds,
        };
        eprintln!(
            "{protocol} dim={} delta={}: rounds={} bytes={} net_time={t:.6}s mre={:.3e}",
            args.dim, run.delta, run.traffic.rounds, run.traffic.bytes_sent, run.mre
        );
    }
    write_or_print(&report, args.out.as_deref())
}

fn train(args: TrainArgs) -> Result<(), Error> {
    if !args.large {
        let rows = csv::Reader::from_path(&args.data)
            .map_err(|e| Error::Usage(format!("cannot read {}: {e}", args.data.display())))?
            .records()
            .count();
        if rows > LARGE_ROWS {
            return Err(Error::Usage(format!(
                "{rows} rows exceeds {LARGE_ROWS}; pass --large to train anyway"
            )));
        }
    }
    let opts = TrainOptions {
        label_col: args.label_col,
        classes: None,
        hidden: args.hidden,
        batch: args.batch,
        lr: args.lr,
        epochs: args.epochs,
        seed: args.seed,
        test_fraction: args.test_fraction,
        shuffle: args.shuffle,
        split: args.session.config(args.seed)?,
    };
    let ext = match args.format {
        Format::Json => "json",
        Format::Bin => "bin",
    };
    let outcome = run_train_file(&args.data, &opts, args.out.as_deref().map(|d| (d, ext)))?;
    let r = &outcome.report;
    for e in &r.epochs {
        eprintln!(
            "epoch {}: secure_loss={:.6} plain_loss={:.6} divergence={:.3e}",
            e.epoch, e.secure_loss, e.plain_loss, e.divergence
        );
    }
    eprintln!(
        "test accuracy: secure={:.4} plain={:.4} ({} rows)",
        r.secure_accuracy, r.plain_accuracy, r.test_rows
    );
    write_or_print(
        r,
        args.out.as_ref().map(|d| d.join("report.json")).as_deref(),
    )
}

fn predict(args: PredictArgs) -> Result<(), Error> {
    let a = ModelFile::load(&args.model_a)?;
    let b = ModelFile::load(&args.model_b)?;
    let report = run_predict(
        &args.data,
        &a,
        &b,
        &args.label_col,
        args.session.config(args.seed)?,
    )?;
    if let Some(acc) = report.accuracy {
        eprintln!("accuracy: {acc:.4} ({} rows)", report.rows);
    }
    write_or_print(&report, args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::UnsupportedDimension(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
