use std::process::ExitCode;

use appraise_cli::args::{Cli, Command};
use appraise_cli::{cmd_aggregate, cmd_agreement, cmd_experiment, cmd_simulate, cmd_stats, cmd_validate, CliResult};
use clap::Parser;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate(a) => {
            let s = cmd_validate(&a)?;
            eprintln!("valid: {}", s.report.display());
        }
        Command::Stats(a) => eprintln!("wrote {}", cmd_stats(&a)?.display()),
        Command::Agreement(a) => eprintln!("wrote {}", cmd_agreement(&a)?.display()),
        Command::Aggregate(a) => eprintln!("wrote {}", cmd_aggregate(&a)?.display()),
        Command::Simulate(a) => eprintln!("wrote {}", cmd_simulate(&a)?.out.display()),
        Command::Experiment(a) => {
            let s = cmd_experiment(&a)?;
            for r in &s.runs {
                eprintln!(
                    "{}: mse {:.4}, spearman {}, grid mass within one bin {:.3}",
                    r.dimension,
                    r.mse,
                    r.spearman.map_or("NA".into(), |v| format!("{v:.4}")),
                    r.grid_diagonal_mass_within_one_bin
                );
            }
            eprintln!("wrote {}", s.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
