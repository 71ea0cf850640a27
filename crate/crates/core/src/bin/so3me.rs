use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use so3me::harness::{
    emit_plots, load_config, run_batch, run_scenario, search_config, verify, NoiseMode, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "so3me", version, about = "Multi-rate attitude estimation runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noise: Option<NoiseMode>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plots: bool,
    },
    /// Run seeded trials in parallel and print aggregate statistics.
    Batch {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Check the implicit residual and Lyapunov defect on a noise-free run.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// `--config`, else the first hit on `SO3ME_DEFAULT_CONFIG`, else defaults.
fn resolve(config: Option<PathBuf>) -> Result<ScenarioConfig, String> {
    let path = config.or_else(|| std::env::var("SO3ME_DEFAULT_CONFIG").ok().and_then(|p| search_config(&p)));
    match path {
        Some(p) => load_config(&p).map_err(|e| e.to_string()),
        None => Ok(ScenarioConfig::default()),
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run { config, seed, noise, out, plots } => {
            let mut cfg = resolve(config)?;
            if let Some(n) = noise {
                cfg.sensors.noise = n;
            }
            let seed = seed.unwrap_or(cfg.run.seed);
            let dir = out.unwrap_or_else(|| cfg.run.output_dir.clone());
            let (path, s) = run_scenario(&cfg, seed, Some(&dir)).map_err(|e| e.to_string())?;
            let path = path.expect("output directory given");
            println!("trajectory: {}", path.display());
            println!(
                "seed {} final_phi {:e} settled_phi {:e} final_omega {:e}",
                s.seed, s.final_phi, s.settled_phi, s.final_omega
            );
            println!(
                "V in [{:e}, {:e}], {} increases beyond allowance, {:.3} s",
                s.min_v, s.max_v, s.violations, s.wall_clock_s
            );
            if plots {
                for p in emit_plots(&path).map_err(|e| e.to_string())? {
                    println!("plot: {}", p.display());
                }
            }
            Ok(true)
        }
        Command::Batch { config, trials } => {
            let cfg = resolve(config)?;
            let trials = trials.unwrap_or(cfg.run.trials);
            if trials == 0 {
                return Err("--trials must be at least 1".into());
            }
            let report = run_batch(&cfg, trials);
            println!("seed,final_phi,settled_phi,final_omega,violations");
            for s in &report.summaries {
                println!("{},{:e},{:e},{:e},{}", s.seed, s.final_phi, s.settled_phi, s.final_omega, s.violations);
            }
            for f in &report.failures {
                eprintln!("trial {} (seed {}) failed: {}", f.trial, f.seed, f.message);
            }
            if let Some(a) = report.aggregate {
                println!(
                    "{} trials: settled phi median {:e} max {:e}; final omega median {:e} max {:e}",
                    a.trials, a.median_settled_phi, a.max_settled_phi, a.median_final_omega, a.max_final_omega
                );
            }
            Ok(report.failures.is_empty())
        }
        Command::Verify { config } => {
            let cfg = resolve(config)?;
            let report = verify(&cfg).map_err(|e| e.to_string())?;
            println!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
