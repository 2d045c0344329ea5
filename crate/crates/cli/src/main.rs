use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;
mod report;

use args::{Cli, Command};
use error::CliError;
use report::{emit, Report};

fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let (name, out) = match &cli.command {
        Command::Identities(a) => ("identities", commands::identities(a, g)?),
        Command::Semigroup(a) => ("semigroup", commands::semigroup(a, g)?),
        Command::Clark(a) => ("clark", commands::clark_cmd(a, g)?),
        Command::Inequalities(a) => ("inequalities", commands::inequalities(a, g)?),
        Command::Hoeffding(a) => ("hoeffding", commands::hoeffding(a, g)?),
        Command::Ewens(a) => ("ewens", commands::ewens(a, g)?),
        Command::SteinGaussian(a) => ("stein-gaussian", commands::stein_gaussian(a, g)?),
        Command::SteinGamma(a) => ("stein-gamma", commands::stein_gamma(a, g)?),
        Command::SteinHomog(a) => ("stein-homog", commands::stein_homog(a, g)?),
        Command::LimitsPoisson(a) => ("limits-poisson", commands::limits_poisson(a, g)?),
        Command::LimitsWalk(a) => ("limits-walk", commands::limits_walk(a, g)?),
    };
    let config = serde_json::json!({ "global": g, "command": &cli.command });
    let report = Report::new(name, g.seed, config, out.result);
    emit(&report, out.table.as_ref(), g.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
