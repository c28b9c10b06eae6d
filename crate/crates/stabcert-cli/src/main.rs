use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stabcert_cli::plot::PlotKind;
use stabcert_cli::runner::{run_certify, run_levinson, run_oracle, run_plot, run_simulate, Overrides};
use stabcert_cli::sweep::run_sweep_command;

/// Decay-rate certification for evolution equations with vanishing dissipation.
#[derive(Parser)]
#[command(name = "stabcert", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration (certify also accepts a certificate JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config relative tolerance.
    #[arg(long = "rel-tol")]
    rel_tol: Option<f64>,
    /// Worker pool size for sweeps (default: machine parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Omit the timestamp comment from generated SVG files.
    #[arg(long = "no-timestamp")]
    no_timestamp: bool,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            rel_tol: self.rel_tol,
            jobs: self.jobs,
            no_timestamp: self.no_timestamp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKindArg {
    NormVsEnvelope,
    MatchingError,
}

#[derive(Args)]
struct PlotArgs {
    /// Input CSV (`t,norm` or `t,error,bound,ratio`).
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKindArg,
    /// Certificate JSON (required for norm-vs-envelope).
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Omit the timestamp comment (for byte-identical output).
    #[arg(long = "no-timestamp")]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the certificate conditions and write certificate.json.
    Certify(RunArgs),
    /// Simulate a matrix system and validate the certified envelope.
    Simulate(RunArgs),
    /// Integrate the scalar comparison equation and check dominance.
    Oracle(RunArgs),
    /// Match a perturbed solution to an unperturbed one via the tail equation.
    Levinson(RunArgs),
    /// Random certified instances in parallel; one summary CSV row each.
    Sweep(RunArgs),
    /// Render a static SVG from run artifacts.
    Plot(PlotArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(a) => run_certify(&a.config, &a.out, &a.overrides()),
        Command::Simulate(a) => run_simulate(&a.config, &a.out, &a.overrides()),
        Command::Oracle(a) => run_oracle(&a.config, &a.out, &a.overrides()),
        Command::Levinson(a) => run_levinson(&a.config, &a.out, &a.overrides()),
        Command::Sweep(a) => run_sweep_command(&a.config, &a.out, &a.overrides()),
        Command::Plot(a) => {
            let kind = match a.kind {
                PlotKindArg::NormVsEnvelope => PlotKind::NormVsEnvelope,
                PlotKindArg::MatchingError => PlotKind::MatchingError,
            };
            run_plot(&a.csv, kind, a.certificate.as_deref(), &a.out, a.no_timestamp)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stabcert: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
