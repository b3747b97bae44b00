use clap::{Parser, Subcommand};
use ebinlab::cli;
use ebinlab::config::{ReportFormat, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ebinlab",
    version,
    about = "Distance bounds and degeneration diagnostics for grid-sampled Riemannian metrics on flat tori"
)]
struct Args {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (chacha8); recorded in every report.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Report format.
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<ReportFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-sided distance estimate between two metric-field files.
    Distance { g0: PathBuf, g1: PathBuf },
    /// Sequence diagnostics (and pairwise equivalence) from a manifest.
    Omega { manifest: PathBuf },
    /// Run a built-in reproduction suite: spd, torus, or bounds.
    Reproduce { suite: String },
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        "both" => Ok(ReportFormat::Both),
        other => Err(format!("unknown format {other} (expected json|csv|both)")),
    }
}

fn load_config(args: &Args) -> ebinlab::Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| ebinlab::Error::Parse {
                offset: 0,
                what: format!("{}: {e}", path.display()),
            })?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(format) = args.format {
        config.format = format;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    ebinlab::init_threads();
    let args = Args::parse();
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ebinlab: {e}");
            return ExitCode::from(cli::exit_code(&e) as u8);
        }
    };
    let outcome = match &args.command {
        Command::Distance { g0, g1 } => cli::run_distance(g0, g1, &config, &args.out),
        Command::Omega { manifest } => cli::run_omega(manifest, &config, &args.out),
        Command::Reproduce { suite } => cli::run_reproduce(suite, &config, &args.out),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("ebinlab: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
