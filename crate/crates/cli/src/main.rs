use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use preimpact_cli::config::seed_from_env;
use preimpact_cli::design::{design_report, ImpedanceInput};
use preimpact_cli::sweep::{sweep, GridAxis, SWEEP_FILE};
use preimpact_cli::verify::{outcome, verify, VerifyInputs};
use preimpact_cli::{report, CliError, ConfigSource, Override};
use preimpact_core::ScenarioKind;

#[derive(Parser)]
#[command(name = "preimpact", version, about = "Simulate and analyse proximity-based preemptive impact reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and its zero-gain baseline.
    Run(RunArgs),
    /// Run a cartesian grid of configurations.
    Sweep(SweepArgs),
    /// Print the admittance frequency range for an impedance part.
    Design(DesignArgs),
    /// Check a trace, a configuration and a report for consistency.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario configuration file (TOML).
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario with default parameters: a, b, c or d.
    #[arg(long)]
    scenario: Option<ScenarioKind>,
    /// Override a configuration field, e.g. `--set virtual_force.gp=0.4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<Override>,
}

impl ConfigArgs {
    fn source(&self) -> Result<Option<ConfigSource>, CliError> {
        match (&self.config, self.scenario) {
            (Some(path), _) => ConfigSource::read(path).map(Some),
            (None, Some(kind)) => Ok(Some(ConfigSource::builtin(kind))),
            (None, None) => Ok(None),
        }
    }

    fn required(&self) -> Result<ConfigSource, CliError> {
        self.source()?
            .ok_or_else(|| CliError::Config("one of --config or --scenario is required".into()))
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for the traces and report.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit with status 4 if the run makes no contact.
    #[arg(long)]
    require_contact: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Grid axis, e.g. `--grid sensor.alpha=0.2,0.5,1.0`. Repeatable.
    #[arg(long = "grid", value_name = "KEY=V1,V2,...")]
    grid: Vec<GridAxis>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct DesignArgs {
    /// Impedance mass M_i.
    #[arg(long)]
    mass: Option<f64>,
    /// Impedance natural frequency omega_i (rad/s).
    #[arg(long, requires = "zeta", conflicts_with_all = ["damping", "stiffness"])]
    omega: Option<f64>,
    /// Impedance damping ratio zeta_i.
    #[arg(long, requires = "omega")]
    zeta: Option<f64>,
    /// Impedance damping D_i.
    #[arg(long, requires_all = ["stiffness", "mass"])]
    damping: Option<f64>,
    /// Impedance stiffness K_i.
    #[arg(long, requires_all = ["damping", "mass"])]
    stiffness: Option<f64>,
    /// Admittance natural frequency to check against the range.
    #[arg(long)]
    omega_a: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trace CSV written by `run`.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Report JSON written by `run`.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let source = args.config.required()?;
    let cfg = source.resolve(&args.config.sets, seed_from_env()?)?;
    let rep = report::run(&cfg, &args.out, args.require_contact)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    match (&rep.metrics, rep.contact_onset_time) {
        (Some(m), _) => println!(
            "scenario {}: peak {:.4} N, baseline {:.4} N, reduction {:.2} %",
            rep.scenario, m.mean, m.baseline_mean, m.reduction_percent
        ),
        (None, Some(t)) => println!("scenario {}: contact at {t:.4} s", rep.scenario),
        (None, None) => println!("scenario {}: no contact", rep.scenario),
    }
    println!("wrote {}", args.out.join(report::REPORT_FILE).display());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let source = args.config.required()?;
    let results = sweep(&source, &args.config.sets, seed_from_env()?, &args.grid, &args.out, args.jobs)?;
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    println!("{} runs, {failed} failed; wrote {}", results.len(), args.out.join(SWEEP_FILE).display());
    if failed > 0 {
        return Err(CliError::Numeric(format!("{failed} grid points failed")).into());
    }
    Ok(())
}

fn run_design(args: DesignArgs) -> anyhow::Result<()> {
    let input = match (args.omega, args.zeta, args.damping, args.stiffness) {
        (Some(omega), Some(zeta), None, None) => ImpedanceInput::Natural { mass: args.mass.unwrap_or(1.0), omega, zeta },
        (None, None, Some(damping), Some(stiffness)) => {
            ImpedanceInput::Mdk { mass: args.mass.unwrap_or(1.0), damping, stiffness }
        }
        _ => {
            return Err(CliError::Config("give --omega and --zeta, or --mass, --damping and --stiffness".into()).into())
        }
    };
    print!("{}", design_report(&input, args.omega_a)?);
    Ok(())
}

fn run_verify(args: VerifyArgs) -> anyhow::Result<()> {
    let config = match args.config.source()? {
        Some(source) => Some(source.resolve(&args.config.sets, seed_from_env()?)?),
        None => None,
    };
    let checks = verify(&VerifyInputs { config, trace: args.trace.as_deref(), report: args.report.as_deref() })?;
    for c in &checks {
        println!("{c}");
    }
    outcome(&checks)?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.downcast_ref::<CliError>().map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).context("run"),
        Command::Sweep(a) => run_sweep(a).context("sweep"),
        Command::Design(a) => run_design(a).context("design"),
        Command::Verify(a) => run_verify(a).context("verify"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
