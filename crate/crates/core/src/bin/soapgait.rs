use clap::{Parser, Subcommand};
use soapgait::cli::{self, Overrides, RunConfig, System, EXIT_CONVERGED, EXIT_NOT_CONVERGED};
use soapgait::optimizer::Mode;
use soapgait::source::Component;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "soapgait", version, about = "Soap-bubble gait optimization for drag-dominated swimmers")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// three_link or serpenoid.
    #[arg(long)]
    system: Option<System>,
    /// max_displacement or max_efficiency.
    #[arg(long)]
    mode: Option<Mode>,
    /// x, y or theta.
    #[arg(long)]
    component: Option<Component>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the connection, metric and height functions.
    Fields(Common),
    /// Run the gait optimizer.
    Optimize(Common),
    /// Integrate one cycle of a gait file.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Gait JSON, overriding simulate.gait in the config.
        #[arg(long)]
        gait: Option<PathBuf>,
    },
}

fn load(common: &Common, gait: Option<PathBuf>) -> soapgait::Result<RunConfig> {
    let overrides = Overrides {
        system: common.system,
        mode: common.mode,
        component: common.component,
        out: common.out.clone(),
        gait,
    };
    RunConfig::load(&common.config, &overrides)
}

fn run(args: Args) -> soapgait::Result<i32> {
    match args.command {
        Command::Fields(common) => {
            let written = cli::cmd_fields(&load(&common, None)?)?;
            println!("wrote {} files", written.files.len());
            Ok(EXIT_CONVERGED)
        }
        Command::Optimize(common) => {
            let outcome = cli::cmd_optimize(&load(&common, None)?)?;
            println!("{}", cli::summary(&outcome.report));
            Ok(if outcome.report.converged() { EXIT_CONVERGED } else { EXIT_NOT_CONVERGED })
        }
        Command::Simulate { common, gait } => {
            let outcome = cli::cmd_simulate(&load(&common, gait)?)?;
            let g = outcome.evaluation.displacement;
            println!(
                "displacement ({:.9}, {:.9}, {:.9}), pathlength {:.9}",
                g.x, g.y, g.theta, outcome.evaluation.pathlength
            );
            Ok(EXIT_CONVERGED)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors are configuration errors; clap's own status 2 would read
    // as a non-converged run.
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(cli::EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let code = match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
