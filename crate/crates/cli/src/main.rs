//! Command-line front end for the sparse random-projection toolkit.
//!
//! Subcommands: `gen-data` (synthetic datasets), `gen-matrix` (draw and
//! export a projection matrix), `verify` (closed forms against Monte Carlo
//! or enumeration oracles), and `sweep` (k-sweep classification experiment).
//!
//! Exit codes: 0 success, 1 a statistical verification failed (some |z| > 3),
//! 2 invalid flags or unusable inputs. Every command writes a manifest next
//! to its outputs with the full argument vector needed to reproduce them.

mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use sparseproj::classify::{run_experiment, DataSource, EnsembleChoice, ExperimentConfig};
use sparseproj::ensembles::{build_matrix, Storage};
use sparseproj::synth::{self, DataFormat, SyntheticSpec};

use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(
    name = "sparseproj",
    version,
    about = "Sparse random-projection toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a two-class synthetic dataset file
    GenData(GenDataArgs),
    /// Draw a projection matrix and export it
    GenMatrix(GenMatrixArgs),
    /// Check closed forms against their independent oracles
    #[command(subcommand)]
    Verify(verify::VerifyCmd),
    /// Run a k-sweep classification experiment to CSV
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Data dimension
    #[arg(long)]
    d: usize,
    /// Feature-coordinate count
    #[arg(long)]
    df: usize,
    /// Feature noise level
    #[arg(long = "sigma-f")]
    sigma_f: f64,
    /// Redundant-coordinate noise level
    #[arg(long = "sigma-r")]
    sigma_r: f64,
    /// Samples per class
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format: dense_csv or sparse
    #[arg(long, default_value = "dense_csv", value_parser = parse_format)]
    format: DataFormat,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GenMatrixArgs {
    /// Ensemble: GM/SM/VSM/StM, gaussian, sparse:<q>, or column:<s'>
    #[arg(long)]
    ensemble: String,
    /// Projection dimension
    #[arg(long)]
    k: usize,
    /// Source dimension
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Data dimension (synthetic source)
    #[arg(long, default_value_t = 2000)]
    d: usize,
    /// Feature-coordinate count (synthetic source)
    #[arg(long, default_value_t = 1000)]
    df: usize,
    #[arg(long = "sigma-f", default_value_t = 8.0)]
    sigma_f: f64,
    #[arg(long = "sigma-r", default_value_t = 12.0)]
    sigma_r: f64,
    /// Samples per class (synthetic source)
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Comma-separated projection dimensions
    #[arg(long, default_value = "50,100,200,400,600,800,1000,1500,2000")]
    k: String,
    /// Comma-separated ensembles
    #[arg(long, default_value = "GM,SM,VSM,StM")]
    ensembles: String,
    /// Projections per voted decision (odd)
    #[arg(long, default_value_t = 5)]
    votes: usize,
    /// Simulation repetitions
    #[arg(long, default_value_t = 500)]
    runs: usize,
    /// Train share of each class
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Classify a dataset file instead of synthetic data
    #[arg(long)]
    data: Option<PathBuf>,
    /// Format of --data: dense_csv or sparse
    #[arg(long, default_value = "dense_csv", value_parser = parse_format)]
    format: DataFormat,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_format(s: &str) -> Result<DataFormat, String> {
    match s.to_ascii_lowercase().as_str() {
        "dense_csv" | "csv" => Ok(DataFormat::DenseCsv),
        "sparse" | "sparse_indexvalue" => Ok(DataFormat::SparseIndexValue),
        other => Err(format!(
            "unknown format '{other}' (expected dense_csv or sparse)"
        )),
    }
}

/// Parse "50,100,200" into dimensions.
fn parse_usize_list(s: &str) -> anyhow::Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .with_context(|| format!("bad dimension '{t}'"))
        })
        .collect()
}

fn parse_ensembles(s: &str) -> anyhow::Result<Vec<EnsembleChoice>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<EnsembleChoice>()
                .map_err(anyhow::Error::from)
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::GenData(args) => cmd_gen_data(args),
        Cmd::GenMatrix(args) => cmd_gen_matrix(args),
        Cmd::Verify(cmd) => verify::cmd_verify(cmd),
        Cmd::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_gen_data(args: GenDataArgs) -> anyhow::Result<ExitCode> {
    let start = Instant::now();
    let spec = SyntheticSpec {
        d: args.d,
        d_f: args.df,
        sigma_f: args.sigma_f,
        sigma_r: args.sigma_r,
        n_per_class: args.n,
        seed: args.seed,
    };
    let ds = synth::generate(&spec)?;
    let file_name = match args.format {
        DataFormat::DenseCsv => "dataset.csv",
        DataFormat::SparseIndexValue => "dataset.txt",
    };
    let mut text = Vec::new();
    synth::save_dataset(&ds, &mut text, args.format)?;
    let path = manifest::write_atomic(&args.out, file_name, &text)?;
    println!(
        "wrote {} samples of dimension {} to {}",
        ds.n(),
        ds.dim(),
        path.display()
    );
    ManifestBuilder::new("gen-data", args.seed)
        .output(file_name)
        .write(&args.out, start)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen_matrix(args: GenMatrixArgs) -> anyhow::Result<ExitCode> {
    let start = Instant::now();
    let choice: EnsembleChoice = args.ensemble.parse()?;
    let spec = choice.resolve(args.k, args.d, args.seed)?;
    let matrix = build_matrix(&spec)?;
    let mut text = Vec::new();
    let file_name = match &matrix.storage {
        Storage::Sparse(_) => {
            matrix.write_sparse_triples(&mut text)?;
            "matrix.txt"
        }
        Storage::Dense(_) => {
            matrix.write_dense_csv(&mut text)?;
            "matrix.csv"
        }
    };
    let path = manifest::write_atomic(&args.out, file_name, &text)?;
    println!(
        "wrote {} {}x{} matrix ({} nonzeros) to {}",
        spec.label(),
        matrix.k,
        matrix.d,
        matrix.nnz(),
        path.display()
    );
    ManifestBuilder::new("gen-matrix", args.seed)
        .output(file_name)
        .write(&args.out, start)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        ensembles: parse_ensembles(&args.ensembles)?,
        k_values: parse_usize_list(&args.k)?,
        votes: args.votes,
        runs: args.runs,
        split_fraction: args.split,
        seed: args.seed,
    };
    let source = match &args.data {
        Some(path) => DataSource::Loaded(synth::load_dataset_file(path, args.format)?),
        None => DataSource::Synthetic(SyntheticSpec {
            d: args.d,
            d_f: args.df,
            sigma_f: args.sigma_f,
            sigma_r: args.sigma_r,
            n_per_class: args.n,
            seed: args.seed,
        }),
    };
    if let DataSource::Loaded(ds) = &source {
        let labels = ds.class_labels();
        if labels.len() < 2 {
            anyhow::bail!(
                "dataset {} holds a single class",
                args.data.unwrap().display()
            );
        }
    }
    let outcome = run_experiment(&cfg, &source)?;
    let csv = outcome.table.to_csv();
    let path = manifest::write_atomic(&args.out, "accuracy.csv", csv.as_bytes())?;
    print!("{csv}");
    println!("wrote {}", path.display());
    ManifestBuilder::new("sweep", args.seed)
        .output("accuracy.csv")
        .write(&args.out, start)?;
    Ok(ExitCode::SUCCESS)
}
