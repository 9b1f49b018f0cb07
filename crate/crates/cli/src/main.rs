use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use kspace_cli::plot::{emit_plot, Metric};
use kspace_cli::report::{format_float, CsvSink};
use kspace_cli::{read_tensor, run_experiment_with, write_tensor, ExperimentConfig};
use kspace_core::sim::{evaluate, synth_ground_truth, PhantomSpec};
use kspace_core::Shape;

#[derive(Parser)]
#[command(name = "kspace", version, about = "Active k-space sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic phantom as image.atns and kspace.atns.
    Synth {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        sparse_fraction: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config and write metrics.csv to its output_dir.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Plot one metric against sampling ratio from a metrics CSV.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "k_test")]
        metric: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a reconstructed k-space tensor file with the reference.
    Metrics {
        #[arg(long)]
        recon: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { shape, ranks, seed, sparse_fraction, noise_sigma, out } => {
            let spec = PhantomSpec { shape: Shape::new(shape)?, tucker_ranks: ranks, sparse_fraction, noise_sigma, seed };
            spec.validate()?;
            let (image, kspace) = synth_ground_truth(&spec)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_tensor(out.join("image.atns"), &image)?;
            write_tensor(out.join("kspace.atns"), &kspace)?;
            println!("wrote {} and {}", out.join("image.atns").display(), out.join("kspace.atns").display());
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = ExperimentConfig::parse(&text).with_context(|| format!("in {}", config.display()))?;
            std::fs::create_dir_all(&cfg.output_dir)
                .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
            let path = cfg.output_dir.join("metrics.csv");
            let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            let mut sink = CsvSink::new(file)?;
            let mut count = 0;
            run_experiment_with(&cfg, |rows| {
                count += rows.len();
                sink.write_rows(rows)
            })?;
            println!("wrote {count} rows to {}", path.display());
        }
        Command::Plot { csv, metric, out } => {
            emit_plot(&csv, metric.parse::<Metric>()?, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Metrics { recon, truth } => {
            let r = read_tensor(&recon).with_context(|| format!("reading {}", recon.display()))?;
            let t = read_tensor(&truth).with_context(|| format!("reading {}", truth.display()))?;
            let m = evaluate(&r, &t)?;
            println!("k_test={}", format_float(m.k_test));
            println!("ser_db={}", format_float(m.ser_db));
            println!("psnr_db={}", format_float(m.psnr_db));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
