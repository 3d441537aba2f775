use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bgpo::harness::{self, check, plot, sweep, RunConfig};
use bgpo::Error;

/// Bregman gradient policy optimization.
///
/// Outputs go under $BGPO_OUTPUT_ROOT (default ./runs).
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one seeded run.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        preset: Option<String>,
        /// Output directory; defaults to <root>/<preset>-seed<N>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one run per seed and aggregate the eval curves.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the config once as BGPO and once as VR-BGPO and write a paired
    /// report (compare.csv, compare.svg, compare.md).
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the gradient-correctness battery.
    CheckGrad {
        #[arg(long)]
        quick: bool,
        /// Lay network gradients out transposed; the battery must fail.
        #[arg(long, hide = true)]
        corrupt_flattening: bool,
    },
    /// Render a records or aggregate CSV as an SVG chart.
    Plot {
        csv: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        _ => 2,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn load(config: &PathBuf, preset: Option<&str>, seed: Option<u64>) -> Result<RunConfig, Error> {
    let mut c = RunConfig::load(config, preset).map_err(|e| match e {
        Error::Io { .. } => Error::Config(e.to_string()),
        e => e,
    })?;
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let root = harness::output_root();
    match cli.command {
        Command::Train {
            config,
            seed,
            preset,
            out,
        } => {
            let c = match load(&config, preset.as_deref(), seed) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = out.unwrap_or_else(|| harness::run::default_run_dir(&root, &c));
            match harness::run(&c, &dir) {
                Ok(summary) => {
                    let last = summary.output.records.last().expect("at least one record");
                    println!(
                        "{}: {} iterations, final eval return {:.3} ± {:.3}",
                        dir.display(),
                        summary.output.iterations.len(),
                        last.eval_return,
                        last.eval_return_std
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Sweep {
            config,
            seeds,
            preset,
            out,
        } => {
            let c = match load(&config, preset.as_deref(), None) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = out.unwrap_or_else(|| {
                root.join(format!("{}-sweep", c.preset.as_deref().unwrap_or("run")))
            });
            match sweep::sweep(&c, &seeds, &dir) {
                Ok(rows) => {
                    if let Some(last) = rows.last() {
                        println!(
                            "{}: {} seeds, final eval return {:.3} ± {:.3}",
                            dir.display(),
                            last.n_seeds,
                            last.eval_mean,
                            last.eval_std
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Compare {
            config,
            seeds,
            preset,
            out,
        } => {
            let c = match load(&config, preset.as_deref(), None) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = out.unwrap_or_else(|| {
                root.join(format!("{}-compare", c.preset.as_deref().unwrap_or("run")))
            });
            match sweep::compare(&c, &seeds, &dir) {
                Ok(report) => {
                    println!("{}", report.summary.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::CheckGrad {
            quick,
            corrupt_flattening,
        } => {
            let options = check::CheckOptions {
                quick,
                corrupt_flattening,
                ..check::CheckOptions::default()
            };
            match check::check_grad(&options) {
                Ok(report) => {
                    print!("{report}");
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(3)
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Plot { csv, output } => match plot::plot_csv(&csv, &output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e @ (Error::Csv(_) | Error::Io { .. })) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            Err(e) => fail(e),
        },
    }
}
