use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use scl::cli::{run, Command};
use scl::config::{load_config, ManifoldConfig};
use scl::report::{emit_report, Format, Tolerances};

/// Verify induced symplectic connections on a chart.
#[derive(Debug, Parser)]
#[command(name = "scl", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Absolute tolerance for every jet-exact identity.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

fn apply(args: &Args, config: &mut ManifoldConfig) -> Result<(), String> {
    if let Some(seed) = args.seed {
        config.verify.seed = seed;
    }
    if let Some(n) = args.samples {
        if n == 0 {
            return Err("--samples must be positive".into());
        }
        config.verify.samples = n;
    }
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err("--tol must be a positive number".into());
        }
        config.verify.tol = Tolerances::uniform(t, config.verify.tol.fd_rel);
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("scl: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = apply(&args, &mut config) {
        eprintln!("scl: {e}");
        return ExitCode::from(2);
    }
    let report = match run(args.command, &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("scl {}: {e}", args.command);
            return ExitCode::from(2);
        }
    };
    let format = match args.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Text => Format::Text,
    };
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(&emit_report(&report, format));
    if format == Format::Json {
        let _ = out.write_all(b"\n");
    }
    ExitCode::from(if report.overall { 0 } else { 1 })
}
