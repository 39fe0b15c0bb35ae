//! `bgf`: command-line runner for the hierarchy and kinetic-equation experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use bgf_core::harness::{
    cmd_chaos_check, cmd_evolve, cmd_scaling_study, cmd_verify_bounds, cmd_vlasov, parse_config,
    ExperimentConfig, DEFAULT_EPSILONS,
};
use bgf_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bgf", version, about = "Glauber hierarchy and Vlasov-limit experiments")]
struct Cli {
    /// Configuration file (`key = value` lines); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides `rng.seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the initial hierarchy with the Taylor solver.
    Evolve,
    /// Integrate the kinetic equation.
    Vlasov,
    /// Compare rescaled and limit evolutions over a list of epsilons.
    ScalingStudy {
        /// Comma-separated scaling parameters.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS.to_vec())]
        epsilons: Vec<f64>,
    },
    /// Check that product-form hierarchies follow the kinetic equation.
    ChaosCheck,
    /// Run the sampled inequality suites.
    VerifyBounds {
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.as_path();
    match &cli.command {
        Command::Evolve => {
            let s = cmd_evolve(&cfg, out)?;
            let r = &s.report;
            println!(
                "evolve: mode={:?} t={} restarts={} terms={} tail={:e} k0={}",
                s.mode,
                cfg.t_final,
                r.restarts,
                r.terms_used,
                r.tail_estimate,
                r.solution.constant_term()
            );
            Ok(true)
        }
        Command::Vlasov => {
            let s = cmd_vlasov(&cfg, out)?;
            print!(
                "vlasov: t={} residual={:e} linf_bound={}",
                cfg.t_final,
                s.stationary_residual,
                if s.bound_ok { "pass" } else { "fail" }
            );
            if let Some(e) = s.closed_form_error {
                print!(" closed_form_error={e:e}");
            }
            println!();
            Ok(s.bound_ok)
        }
        Command::ScalingStudy { epsilons } => {
            let r = cmd_scaling_study(&cfg, epsilons, out)?;
            for (e, g) in r.epsilons.iter().zip(&r.gaps) {
                println!("epsilon={e} gap={g:e}");
            }
            println!("fitted_order={:.4}", r.fitted_order);
            Ok(true)
        }
        Command::ChaosCheck => {
            let s = cmd_chaos_check(&cfg, out)?;
            println!(
                "chaos-check: t={} dev1={:e} dev2={:e} conv_linf={:.4} verdict={}",
                s.t,
                s.dev1,
                s.dev2,
                s.conv_linf,
                if s.pass { "pass" } else { "fail" }
            );
            Ok(s.pass)
        }
        Command::VerifyBounds { cases } => {
            let r = cmd_verify_bounds(&cfg, *cases, out)?;
            for s in &r.suites {
                println!(
                    "{}: checks={} violations={} max_ratio={:.4}",
                    s.name, s.checks, s.violations, s.max_ratio
                );
            }
            Ok(r.total_violations() == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(8),
        Err(e) => {
            let message = e.to_string().replace('"', "'");
            eprintln!("error: kind={} message=\"{message}\"", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
