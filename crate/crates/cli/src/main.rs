use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "dressed", version, about = "Dressed-state code spaces for noise-protected metrology")]
struct Cli {
    /// Seed for randomized searches; the DM_SEED environment variable wins.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test a Heisenberg-scaling criterion.
    Check(CheckArgs),
    /// Solve the signal-maximization SDP with a dual certificate.
    Optimize(OptimizeArgs),
    /// Purify an SDP optimizer into a code space.
    BuildCode(BuildCodeArgs),
    /// Evaluate the code conditions for a given code.
    Verify(VerifyArgs),
    /// Multi-start search for a decoherence-free code without ancilla.
    NoGo(NoGoArgs),
    /// Integrate the master equation for one model.
    Simulate(SimulateArgs),
    /// Fisher-information scaling of a protected versus an unprotected model.
    Sweep(SweepArgs),
    /// NV-centre worked example and verdict table.
    NvDemo(NvDemoArgs),
}

#[derive(Args, Debug)]
pub struct Problem {
    /// Signal generator G (operator JSON).
    #[arg(long)]
    pub generator: PathBuf,
    /// Coupling operators; each file holds one operator or an array of them.
    #[arg(long, num_args = 0..)]
    pub couplings: Vec<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum CriterionArg {
    Thm1,
    Thm2,
    Hnls,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub criterion: CriterionArg,
    #[command(flatten)]
    pub problem: Problem,
    /// Jump operators for `hnls` (JSON array of matrices).
    #[arg(long)]
    pub lindblads: Option<PathBuf>,
    /// Exit with status 3 when the verdict is negative.
    #[arg(long)]
    pub gate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub problem: Problem,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BuildCodeArgs {
    /// Output of `optimize`.
    #[arg(long)]
    pub solution: PathBuf,
    /// Free Hamiltonian; with `--lambda0/--lambda1` also writes the control field.
    #[arg(long)]
    pub h_free: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub lambda1: f64,
    #[arg(long)]
    pub control_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[command(flatten)]
    pub problem: Problem,
    /// Dressed Hamiltonian, enabling the excitation condition.
    #[arg(long)]
    pub hamiltonian: Option<PathBuf>,
    /// Also check Knill–Laflamme under the two-level dressing at this gap.
    #[arg(long)]
    pub nu0: Option<f64>,
    /// Exit with status 3 unless the code is decoherence-free.
    #[arg(long)]
    pub gate: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NoGoArgs {
    #[arg(long, num_args = 1..)]
    pub couplings: Vec<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model file: hamiltonian, signal, noise, code.
    #[arg(long)]
    pub model: PathBuf,
    /// Simulation settings: t_final, dt, delta_omega, record_stride.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub protected: PathBuf,
    #[arg(long)]
    pub unprotected: PathBuf,
    /// `start:stop:count`, with a `log` suffix for logarithmic spacing.
    #[arg(long, default_value = "0.1:20:40log")]
    pub tgrid: String,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RegimeArg {
    Dephasing,
    Relaxation,
    Thermal,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Format {
    Json,
    Markdown,
}

#[derive(Args, Debug)]
pub struct NvDemoArgs {
    #[arg(long, value_enum, required_unless_present_any = ["table", "export"])]
    pub regime: Option<RegimeArg>,
    #[arg(long)]
    pub ancilla: bool,
    /// Print the full verdict table instead of a single regime.
    #[arg(long, conflicts_with = "regime")]
    pub table: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, default_value_t = 200)]
    pub restarts: usize,
    /// Write example input files for the other commands into this directory.
    #[arg(long, conflicts_with_all = ["regime", "table"])]
    pub export: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Optimize(_) => "optimize",
            Command::BuildCode(_) => "build-code",
            Command::Verify(_) => "verify",
            Command::NoGo(_) => "no-go",
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::NvDemo(_) => "nv-demo",
        }
    }

    fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::Check(a) => a.out.as_ref(),
            Command::Optimize(a) => a.out.as_ref(),
            Command::BuildCode(a) => a.out.as_ref(),
            Command::Verify(a) => a.out.as_ref(),
            Command::NoGo(a) => a.out.as_ref(),
            Command::Simulate(a) => a.out.as_ref(),
            Command::Sweep(a) => a.out.as_ref(),
            Command::NvDemo(a) => a.out.as_ref(),
        }
    }
}

fn seed(cli_seed: u64) -> Result<u64, CliError> {
    match std::env::var("DM_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("DM_SEED must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(cli_seed),
    }
}

fn run(cli: Cli, argv: &[String]) -> Result<u8, CliError> {
    let start = Instant::now();
    let seed = seed(cli.seed)?;
    let outcome = commands::dispatch(&cli.command, seed)?;
    let out = cli.command.out();
    match out {
        Some(path) => std::fs::write(path, &outcome.text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", outcome.text),
    }
    let manifest = manifest::RunManifest::new(
        cli.command.name(),
        manifest::config_hash(argv, &outcome.inputs),
        seed,
        start.elapsed(),
    );
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    match out {
        Some(path) => {
            let mpath = manifest::manifest_path(path);
            std::fs::write(&mpath, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", mpath.display())))?;
        }
        None => eprint!("{text}"),
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &argv[1..]) {
        Ok(status) => ExitCode::from(status),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
