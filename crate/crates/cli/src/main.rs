use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infodyn::runner::{self, RunError, RunOptions, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "infodyn", version, about = "Run and check stochastic-trajectory scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        /// Parent output directory; results go to <DIR>/<scenario name>.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Override the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a scenario without computing anything.
    Validate { scenario: String },
    /// List the bundled scenarios.
    List,
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for b in runner::bundled::BUNDLED {
                let desc = runner::Scenario::parse(b.source).map(|s| s.description).unwrap_or_default();
                println!("{:<30} {desc}", b.name);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario } => {
            let resolved = match runner::load(&scenario).and_then(|s| runner::validate(&s)) {
                Ok(r) => r,
                Err(e) => return fail(&e),
            };
            println!("ok: {}", resolved.scenario.name);
            println!("grid: {} axis/axes, {} points, {:?}", resolved.grid.dims(), resolved.grid.len(), resolved.grid.boundary());
            println!("initial: {:?}", resolved.initial);
            println!();
            print!("{}", resolved.scenario.to_toml());
            ExitCode::SUCCESS
        }
        Command::Run { scenario, out, seed, threads } => {
            let sc = match runner::load(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            let opts = RunOptions { out_dir: out, seed, threads };
            match runner::run(sc, &opts) {
                Ok(outcome) => {
                    for r in &outcome.manifest.reports {
                        for v in &r.verdicts {
                            println!("{} {:<10} {:<44} {}", if v.passed { "PASS" } else { "FAIL" }, r.report, v.name, v.detail);
                        }
                    }
                    println!(
                        "{}: {} passed, {} failed, {:.1} s -> {}",
                        outcome.manifest.status,
                        outcome.manifest.passed,
                        outcome.manifest.failed,
                        outcome.manifest.wall_time_s,
                        outcome.dir.display()
                    );
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => fail(&e),
            }
        }
    }
}
