//! `mosaic`: batch front end for indices, Lyapunov sweeps, phase diagrams,
//! eigenvector decay, Gordon scans and the lemma battery.
//!
//! Exit codes: 0 success, 1 a lemma was violated, 2 config error,
//! 3 numeric failure.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::{Meta, Output};

#[derive(Parser, Debug)]
#[command(name = "mosaic", version, about = "Spectral analysis of the mosaic Maryland operator")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// First phase of the Weyl sampling sequence.
    #[arg(long, global = true)]
    seed_phase: Option<f64>,
    /// Bits of precision for the continued-fraction arithmetic.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Arithmetic profile: beta_n and delta_n per scale.
    Indices,
    /// Lyapunov exponent sweep over the energy and lambda grids.
    Le {
        /// Cocycle steps per phase for the dynamical estimate.
        #[arg(long)]
        steps: Option<u64>,
        /// Number of sampled phases.
        #[arg(long)]
        phases: Option<usize>,
        /// Imaginary phase shift of the cocycle.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Also plot L2 against E.
        #[arg(long)]
        svg: bool,
    },
    /// Spectral-type verdict per grid cell.
    PhaseDiagram {
        /// Emit both threshold conventions.
        #[arg(long)]
        both_conventions: bool,
    },
    /// Finite-box eigenpairs and their decay fits.
    Eigen {
        /// Also write every eigenvector.
        #[arg(long)]
        vectors: bool,
    },
    /// Gordon norms along the cosine-product subsequence.
    Gordon,
    /// Run the lemma battery.
    LemmaCheck {
        /// Shipped suite name or `all`.
        #[arg(long)]
        suite: Option<String>,
        /// Report path; defaults to `<out>/lemmas.json`.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Indices => "indices",
            Command::Le { .. } => "le",
            Command::PhaseDiagram { .. } => "phase-diagram",
            Command::Eigen { .. } => "eigen",
            Command::Gordon => "gordon",
            Command::LemmaCheck { .. } => "lemma-check",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed_phase {
        cfg.seed_phase = s;
    }
    if let Some(b) = cli.precision_bits {
        cfg.precision_bits = b;
    }
    match &cli.command {
        Command::Le { steps, phases, epsilon, svg } => {
            if let Some(s) = steps {
                cfg.le.steps = *s;
            }
            if let Some(p) = phases {
                cfg.le.phases = *p;
            }
            if let Some(e) = epsilon {
                cfg.le.epsilon = *e;
            }
            cfg.le.svg |= svg;
        }
        Command::PhaseDiagram { both_conventions: true } => {
            cfg.phase_diagram.conventions = vec!["two-l".into(), "half-delta".into()];
        }
        Command::Eigen { vectors: true } => cfg.eigen.vectors = true,
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = load_config(cli)?;
    let mut out = Output::new(&cli.out, Meta::new(cli.command.name(), &cfg))?;
    let code = match &cli.command {
        Command::Indices => commands::indices(&cfg, &mut out)?,
        Command::Le { .. } => commands::le(&cfg, &mut out)?,
        Command::PhaseDiagram { .. } => commands::phase_diagram_cmd(&cfg, &mut out)?,
        Command::Eigen { .. } => commands::eigen(&cfg, &mut out)?,
        Command::Gordon => commands::gordon(&cfg, &mut out)?,
        Command::LemmaCheck { suite, json } => {
            commands::lemma_check(&cfg, &mut out, suite.as_deref(), json.as_deref(), cli.config.is_some())?
        }
    };
    for path in out.written() {
        println!("wrote {}", path.display());
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
