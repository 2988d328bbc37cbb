use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pbgd_cli::commands;
use pbgd_cli::config::load_experiment;
use pbgd_cli::{style, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "pbgd", version, about = "Partial-barrier distributed gradient descent simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        noise_sd: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write its trace and summary.
    Run {
        /// TOML config; the built-in default is used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also run with γ = M and report the speedup.
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the smallest γ whose sample meets the confidence target.
    EstimateGamma {
        /// Population size N.
        big_n: usize,
        alpha: f64,
        xi: f64,
        /// Examples per worker.
        zeta: usize,
        /// Sample variance s², used with --mean instead of the bound s ≤ |mean|.
        #[arg(long, requires = "mean")]
        variance: Option<f64>,
        #[arg(long, requires = "variance", allow_hyphen_values = true)]
        mean: Option<f64>,
    },
    /// Check the numerical claims on a configured problem.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData {
            n,
            m,
            seed,
            noise_sd,
            out,
        } => {
            let data = commands::gen_data(n, m, seed, noise_sd, &out)?;
            eprintln!("wrote {} examples to {}", data.m(), out.display());
        }
        Command::Run {
            config,
            seed,
            baseline,
            out,
        } => {
            let exp = load_experiment(config.as_deref(), seed)?;
            let dir = commands::output_dir(&exp, out.as_deref());
            let summary = commands::run_experiment(&exp, baseline, &dir)?;
            print!("{}", summary.to_text());
        }
        Command::EstimateGamma {
            big_n,
            alpha,
            xi,
            zeta,
            variance,
            mean,
        } => {
            let est = commands::estimate_gamma(big_n, alpha, xi, zeta, mean.zip(variance))?;
            println!("u_half_alpha = {}", est.u_half_alpha);
            println!("gamma = {}", est.gamma);
        }
        Command::Verify { config, seed, out } => {
            let exp = load_experiment(config.as_deref(), seed)?;
            let dir = commands::output_dir(&exp, out.as_deref());
            let report = commands::verify(&exp, &dir)?;
            print!("{}", report.table(style::color_enabled()));
            if let Some(failed) = report.first_failure() {
                return Err(CliError::Verify(format!("{}: {}", failed.name, failed.detail)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
