use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use multilift::controller::Mode;
use multilift::harness::{self, scenario};
use multilift::Error;

/// Multi-quadrotor cable-suspended payload simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (a file or groupA, groupB, groupC).
    Run {
        scenario: String,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Integration step (s).
        #[arg(long)]
        dt: Option<f64>,
        /// Simulated duration (s).
        #[arg(long)]
        duration: Option<f64>,
        /// Accepted for interface stability; every run is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run adaptive and baseline control on the same scenario and compare.
    Compare {
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Parse and validate a scenario file without running it.
    Validate { file: PathBuf },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGED: u8 = 2;

fn load(name: &str) -> Result<scenario::ScenarioFile, Error> {
    match scenario::ScenarioFile::builtin(name) {
        Some(f) => Ok(f),
        None => scenario::read_scenario_file(std::path::Path::new(name)),
    }
}

fn execute(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { scenario, mode, out, dt, duration, seed: _ } => {
            let mut file = load(&scenario)?;
            if let Some(mode) = mode {
                file.mode = mode;
            }
            if let Some(dt) = dt {
                file.integrator.dt_s = dt;
                if file.integrator.log_interval_s < dt {
                    file.integrator.log_interval_s = dt;
                }
            }
            if let Some(d) = duration {
                file.integrator.duration_s = d;
            }
            let result = harness::run(&file.build()?);
            harness::write_outputs(&result, &out)?;
            match &result.sim.divergence {
                Some((t, reason)) => {
                    eprintln!("{}: diverged at t = {t:.4} s: {reason}", result.label);
                    Ok(EXIT_DIVERGED)
                }
                None => {
                    let m = &result.metrics.steady_state;
                    println!(
                        "{} ({}): steady rms |e_x0| = {:.6e} m, |e_R0| = {:.6e}; outputs in {}",
                        result.label,
                        result.mode.as_str(),
                        m.stats.rms_position_error_m,
                        m.stats.rms_attitude_error,
                        out.display()
                    );
                    Ok(0)
                }
            }
        }
        Command::Compare { scenario, out } => {
            let cmp = harness::compare(&load(&scenario)?.build()?);
            harness::write_comparison(&cmp, &out)?;
            print!("{}", cmp.report());
            if cmp.adaptive.diverged() || cmp.baseline.diverged() {
                Ok(EXIT_DIVERGED)
            } else {
                Ok(0)
            }
        }
        Command::Validate { file } => {
            let s = scenario::read_scenario_file(&file)?.build()?;
            println!("{}: valid ({} quadrotors, mode {})", s.label, s.params.n(), s.mode.as_str());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Divergence { .. } | Error::OffManifold(_) => EXIT_DIVERGED,
                _ => EXIT_CONFIG,
            })
        }
    }
}
