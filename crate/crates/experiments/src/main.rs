use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use bessel_experiments::config::Config;
use bessel_experiments::corollaries::{self, corollaries, CorollarySettings};
use bessel_experiments::kernel_report::{kernel_report, KernelReportSettings};
use bessel_experiments::scans::{scan_t11, scan_t12, OneWeightSettings, TwoWeightSettings};
use bessel_experiments::sparse_demo::{sparse_demo, SparseDemoSettings};
use bessel_experiments::{Report, Result, Setup};

const GRID_KEYS: [&str; 3] = ["grid.lambda", "grid.decades", "grid.points_per_decade"];

#[derive(Parser, Debug)]
#[command(
    name = "bessel-harmonic",
    version,
    about = "Weighted and sparse bounds for Bessel operators, checked numerically"
)]
struct Cli {
    /// Configuration file with `[section]` headers and `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report.csv, summary.json and run.log.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Decades spanned by the x grid, centred on 1 (overrides grid.decades).
    #[arg(long, global = true)]
    grid_decades: Option<f64>,
    /// Grid resolution (overrides grid.points_per_decade).
    #[arg(long, global = true)]
    points_per_decade: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// One-weight scan: operator ratios against the A_p characteristic of power weights.
    ScanT11,
    /// Two-weight commutator scan against the product of A_p characteristics.
    ScanT12,
    /// Size, smoothness and variation bounds of the convolution kernels.
    KernelReport,
    /// Sparse family dominating |Tf| for one operator and input.
    SparseDemo,
    /// One-weight scans for Poisson, heat and Bochner-Riesz kernel families.
    Corollaries,
}

fn run(cli: &Cli) -> Result<Report> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(d) = cli.grid_decades {
        config.set("grid.decades", d);
    }
    if let Some(n) = cli.points_per_decade {
        config.set("grid.points_per_decade", n);
    }
    let jobs = cli.jobs.max(1);
    let known = |keys: &[&str]| {
        let mut all: Vec<&str> = GRID_KEYS.to_vec();
        all.extend_from_slice(keys);
        config.check_known(&all)
    };
    let report = match cli.command {
        Command::ScanT11 => {
            known(&OneWeightSettings::KEYS)?;
            scan_t11(
                &Setup::from_config(&config)?,
                &OneWeightSettings::from_config(&config)?,
                jobs,
            )?
        }
        Command::ScanT12 => {
            known(&TwoWeightSettings::KEYS)?;
            scan_t12(
                &Setup::from_config(&config)?,
                &TwoWeightSettings::from_config(&config)?,
                jobs,
            )?
        }
        Command::KernelReport => {
            known(&KernelReportSettings::KEYS)?;
            kernel_report(&KernelReportSettings::from_config(&config)?, jobs)?
        }
        Command::SparseDemo => {
            known(&SparseDemoSettings::KEYS)?;
            sparse_demo(
                &Setup::from_config(&config)?,
                &SparseDemoSettings::from_config(&config)?,
            )?
        }
        Command::Corollaries => {
            known(&CorollarySettings::KEYS)?;
            corollaries(
                &Setup::from_config_or(
                    &config,
                    corollaries::DEFAULT_DECADES,
                    corollaries::DEFAULT_POINTS_PER_DECADE,
                )?,
                &CorollarySettings::from_config(&config)?,
                jobs,
            )?
        }
    };
    let entries: Map<String, Value> = config
        .entries()
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    report.write(&cli.out, &entries)?;
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for c in &report.checks {
                println!("{c}");
            }
            println!("results written to {}", cli.out.display());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
