use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhomog::io::read_document;
use nhomog::{run, Command, Failure, RunConfig};
use nhomog_core::haar::DEFAULT_SAMPLES;
use nhomog_core::Tolerance;

/// Analyses of n-homogeneous matrix *-algebras.
#[derive(Parser)]
#[command(name = "nhomog", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Irreducible decomposition and n-homogeneity verdict of a tuple.
    Analyze(Opts),
    /// n-spectrum of a homogeneous tuple.
    Spectrum(Opts),
    /// n-functional calculus of a polynomial or orbit table.
    Calc(Opts),
    /// Density and Delta_2 report for a function algebra on a finite set.
    #[command(name = "sw-check")]
    SwCheck(Opts),
    /// Haar twirl of a matrix with Monte Carlo diagnostics.
    Haar(Opts),
    /// Ideals, measures and representations of a finite n-space.
    Nspace(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    /// Sets both the equality and the PSD tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "rank-cut")]
    rank_cut: Option<f64>,
    #[arg(long, env = "NHOMOG_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Append a short text summary after the JSON report.
    #[arg(long)]
    human: bool,
}

fn execute(command: Command, opts: &Opts) -> Result<i32, Failure> {
    let mut tol = Tolerance::default();
    if let Some(t) = opts.tol {
        tol.eq_tol = t;
        tol.psd_slack = t;
    }
    if let Some(r) = opts.rank_cut {
        tol.rank_cut = r;
    }
    let cfg = RunConfig { command, n: opts.n, tol, seed: opts.seed, samples: opts.samples };
    let doc = read_document(&opts.input)?;
    let outcome = run(&cfg, &doc)?;
    let mut text = serde_json::to_string_pretty(&outcome.report).expect("reports serialize");
    text.push('\n');
    match &opts.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if opts.human {
        println!("{}", outcome.summary);
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::Analyze(o) => (Command::Analyze, o),
        Cmd::Spectrum(o) => (Command::Spectrum, o),
        Cmd::Calc(o) => (Command::Calc, o),
        Cmd::SwCheck(o) => (Command::SwCheck, o),
        Cmd::Haar(o) => (Command::Haar, o),
        Cmd::Nspace(o) => (Command::Nspace, o),
    };
    let code = match execute(command, opts) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nhomog {}: {e}", command.name());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
