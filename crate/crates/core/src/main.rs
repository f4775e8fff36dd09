use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lyapaudit::audit::{
    cmd_analyze, cmd_oracle, cmd_verify, exit, exit_code_for, AnalysisConfig, AuditOptions,
    CommandOutput,
};
use lyapaudit::Error;

#[derive(Parser)]
#[command(
    name = "lyapaudit",
    version,
    about = "Audit the auxiliary BVP for delay Lyapunov matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON analysis configuration.
    config: Option<PathBuf>,
    /// Built-in system instead of a config file.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rank and structure diagnostics and write a report.
    Analyze {
        #[command(flatten)]
        source: Source,
        /// Skip the brute-force Lyapunov oracle.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Compute U(tau) from its defining integral and write it as CSV.
    Oracle {
        #[command(flatten)]
        source: Source,
    },
    /// Exit 0 iff every audited claim holds.
    Verify {
        #[command(flatten)]
        source: Source,
        /// Shift entry (1,1) of H by this amount (negative control).
        #[arg(long, allow_negative_numbers = true)]
        perturb_h: Option<f64>,
        #[arg(long)]
        no_oracle: bool,
    },
}

fn load(source: &Source) -> Result<AnalysisConfig, Error> {
    match (&source.config, &source.preset) {
        (Some(path), None) => AnalysisConfig::load(path),
        (None, Some(name)) => AnalysisConfig::from_preset(name),
        _ => Err(Error::Config(
            "give either a config file or --preset, not both".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<CommandOutput, Error> {
    match cli.command {
        Command::Analyze { source, no_oracle } => {
            let options = AuditOptions {
                perturb_h: None,
                run_oracle: !no_oracle,
            };
            cmd_analyze(&load(&source)?, options).map(|(_, out)| out)
        }
        Command::Oracle { source } => {
            let (report, out) = cmd_oracle(&load(&source)?)?;
            let r = report.oracle.residuals;
            eprintln!(
                "oracle residuals: dynamic {:.3e}, symmetric {:.3e}, algebraic {:.3e} (t_max = {})",
                r.dynamic, r.symmetric, r.algebraic, report.oracle.t_max
            );
            Ok(out)
        }
        Command::Verify {
            source,
            perturb_h,
            no_oracle,
        } => {
            let options = AuditOptions {
                perturb_h,
                run_oracle: !no_oracle,
            };
            cmd_verify(&load(&source)?, options).map(|(_, out)| out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            let code = exit_code_for(&err);
            debug_assert!(code == exit::USAGE || code == exit::NUMERICAL);
            ExitCode::from(code as u8)
        }
    }
}
