//! Command-line runner for tiling, approximation, verification and
//! convergence experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::{CliError, Outcome};
use config::ExperimentConfig;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bisobolev", version, about = "Piecewise affine approximation of planar homeomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tile a domain with squares of side r and report the uncovered area.
    Tile(Flags),
    /// Build a piecewise affine approximant and report its error terms.
    Approx(Flags),
    /// Run the verification checks and print them as CSV.
    Verify(Flags),
    /// Build approximants along an r schedule and plot the total error.
    Convergence(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// `key = value` configuration file; flags override it.
    #[arg(long, allow_hyphen_values = true)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    map: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<String>,
    #[arg(long = "r-schedule", allow_hyphen_values = true)]
    r_schedule: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// frobenius or operator
    #[arg(long, allow_hyphen_values = true)]
    norm: Option<String>,
    #[arg(long = "tau-j", allow_hyphen_values = true)]
    tau_j: Option<String>,
    #[arg(long = "eps-res", allow_hyphen_values = true)]
    eps_res: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    #[arg(long = "max-depth", allow_hyphen_values = true)]
    max_depth: Option<String>,
    #[arg(long = "quad-order", allow_hyphen_values = true)]
    quad_order: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    threads: Option<String>,
    #[arg(long = "out-dir", allow_hyphen_values = true)]
    out_dir: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    svg: Option<String>,
}

impl Flags {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(p) = &self.config {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io { path: p.display().to_string(), message: e.to_string() })?;
            cfg.apply_text(&text)?;
        }
        let pairs = [
            ("domain", &self.domain),
            ("map", &self.map),
            ("r", &self.r),
            ("r_schedule", &self.r_schedule),
            ("eta", &self.eta),
            ("norm", &self.norm),
            ("tau_j", &self.tau_j),
            ("eps_res", &self.eps_res),
            ("eps", &self.eps),
            ("max_depth", &self.max_depth),
            ("quad_order", &self.quad_order),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("out_dir", &self.out_dir),
            ("svg", &self.svg),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }
}

type Handler = fn(&ExperimentConfig) -> Result<Outcome, CliError>;

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (flags, cmd): (&Flags, Handler) = match &cli.command {
        Command::Tile(f) => (f, commands::tile),
        Command::Approx(f) => (f, commands::approx),
        Command::Verify(f) => (f, commands::verify),
        Command::Convergence(f) => (f, commands::convergence),
    };
    let cfg = flags.resolve()?;
    if let Some(n) = cfg.threads {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    cmd(&cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.to_string();
            let message = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", serde_json::json!({ "error": { "code": "Usage", "message": message } }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            match out.failure {
                None => ExitCode::SUCCESS,
                Some((code, message)) => {
                    let body = serde_json::json!({ "error": { "code": code, "message": message } });
                    eprintln!("{body}");
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
