use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mosq_cli::{commands, verify, CliError, Options};

#[derive(Parser)]
#[command(
    name = "mosq",
    version,
    about = "Seasonal sterile-release mosquito models: simulation, period maps and regimes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Relative tolerance, overriding the configuration.
    #[arg(long, global = true)]
    rtol: Option<f64>,
    /// Absolute tolerance, overriding the configuration.
    #[arg(long, global = true)]
    atol: Option<f64>,
    /// Worker threads for batch evaluation.
    #[arg(long, global = true, env = "MOSQ_THREADS")]
    threads: Option<usize>,
    /// Seed of the randomized verification battery.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate trajectories from the [simulate] initial densities.
    Simulate,
    /// Tabulate P, P', P'' and P''' over the [poincare] grid.
    Poincare,
    /// List the fixed points of the period map.
    FixedPoints,
    /// Classify the dynamical regime.
    Classify,
    /// Sweep the release level over the [sweep] range.
    Bifurcate,
    /// Compare the seasonal model with its period-averaged counterpart.
    CompareAveraged,
    /// Run the invariant suite over the built-in battery.
    Verify {
        /// Run only the named check.
        #[arg(long, value_name = "NAME")]
        check: Option<String>,
        /// Number of random models added to the battery.
        #[arg(long, default_value_t = 40)]
        battery: usize,
        /// List the available checks and exit.
        #[arg(long)]
        list: bool,
    },
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        mosq_core::par::set_threads(n);
    }
    let opts = Options {
        config: cli.config,
        out: cli.out,
        rtol: cli.rtol,
        atol: cli.atol,
        seed: cli.seed,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&opts),
        Command::Poincare => commands::poincare(&opts),
        Command::FixedPoints => commands::fixed_points(&opts),
        Command::Classify => commands::classify(&opts),
        Command::Bifurcate => commands::bifurcate(&opts),
        Command::CompareAveraged => commands::compare(&opts),
        Command::Verify { list: true, .. } => Ok(verify::CHECKS
            .iter()
            .map(|(name, description, _)| format!("{name}: {description}"))
            .collect()),
        Command::Verify { check, battery, .. } => verify::verify(&opts, check.as_deref(), battery),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(lines) => {
            mosq_cli::print_lines(&lines);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
