use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use catqutrit_cli::emit::fmt_num;
use catqutrit_cli::{emit, load_config, run, CliError, Kind, EXIT_CHECK_FAILED, EXIT_OK};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "catqutrit", version, about = "Qutrit-ensemble cat code experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary subspace of the effective Liouvillian.
    Steady(RunArgs),
    /// Integrate the effective master equation from a chosen state.
    Evolve(RunArgs),
    /// NOT, SH or ZSH gate by switching the detuning.
    Gates(RunArgs),
    /// Fidelity relaxation under uncorrelated dephasing.
    Fig3(RunArgs),
    /// Residuals of the two-particle noise generators on the protected states.
    TwoQutritNoise(RunArgs),
    /// Closed-system preparation of a logical state.
    Prepare(RunArgs),
    /// Certify the logical states against the full pump–signal–qutrit model.
    PhysicalValidate(RunArgs),
    /// Derived and effective parameters of a physical configuration.
    ParamsMap(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` in the config, then `out/<kind>`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override a scalar config field, e.g. `--set effective.kappa1=2.5`.
    #[arg(long = "set", value_name = "K=V")]
    set: Vec<String>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

impl Command {
    fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::Steady(a) => (Kind::Steady, a),
            Command::Evolve(a) => (Kind::Evolve, a),
            Command::Gates(a) => (Kind::Gates, a),
            Command::Fig3(a) => (Kind::Fig3, a),
            Command::TwoQutritNoise(a) => (Kind::TwoQutritNoise, a),
            Command::Prepare(a) => (Kind::Prepare, a),
            Command::PhysicalValidate(a) => (Kind::PhysicalValidate, a),
            Command::ParamsMap(a) => (Kind::ParamsMap, a),
        }
    }
}

fn execute(kind: Kind, args: RunArgs) -> Result<i32, CliError> {
    let cfg = load_config(&args.config, Some(kind), &args.set, args.seed)?;
    let dir = args
        .out
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let start = Instant::now();
    let bundle = run(&cfg)?;
    let manifest = emit(&bundle, &cfg, &dir, start.elapsed().as_secs_f64())?;
    for c in &bundle.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {} {} {}", c.name, fmt_num(c.value), c.relation.symbol(), fmt_num(c.threshold));
    }
    println!("{kind}: wrote {} files to {}", manifest.files.len() + 1, dir.display());
    Ok(if bundle.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    let code = match execute(kind, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
