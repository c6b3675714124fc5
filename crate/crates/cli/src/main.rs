//! Command line front end for the experiment harness.
//!
//! Exit codes: 0 on success, 1 for anything wrong with the requested
//! configuration (unreadable file, parse or validation failure, unknown
//! preset, conflicting flags), 2 for failures while the experiment runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixnum_core::harness::{preset, run_to_dir, RunConfig, RunReport, PRESETS};

#[derive(Parser)]
#[command(name = "mixnum", version, about = "Mixed-numerology peak-power experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write result files
    Run {
        /// Config file (omit when --preset is given)
        config: Option<PathBuf>,
        /// Output directory; defaults to runs/<name>-<fingerprint>
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the run seed
        #[arg(long)]
        seed: Option<u64>,
        /// Start from a ready-made config instead of a file
        #[arg(long)]
        preset: Option<String>,
        /// Size of the worker pool; defaults to all cores
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the ready-made configs
    ListPresets,
    /// Parse and check a config file without running it
    Validate {
        /// Config file to check
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests arrive as "errors" but are not.
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            preset,
            workers,
        } => run(config, out, seed, preset, workers),
        Command::ListPresets => {
            list_presets();
            ExitCode::SUCCESS
        }
        Command::Validate { config } => validate(&config),
    }
}

/// Loads the config from exactly one of the file path or the preset name.
/// Returns the config and a short label used for the default output dir.
fn load_config(
    config: Option<&Path>,
    preset_name: Option<&str>,
) -> Result<(RunConfig, String), String> {
    match (config, preset_name) {
        (Some(_), Some(_)) => Err("give either a config file or --preset, not both".into()),
        (None, None) => Err("a config file or --preset is required".into()),
        (None, Some(name)) => {
            let cfg = preset(name).ok_or_else(|| {
                format!("unknown preset `{name}` (see `mixnum list-presets`)")
            })?;
            Ok((cfg, name.to_string()))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let cfg = RunConfig::parse(&text).map_err(|e| e.to_string())?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            Ok((cfg, label))
        }
    }
}

fn run(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    preset_name: Option<String>,
    workers: Option<usize>,
) -> ExitCode {
    let (mut cfg, label) = match load_config(config.as_deref(), preset_name.as_deref()) {
        Ok(loaded) => loaded,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let fingerprint = cfg.fingerprint();
    let dir = out.unwrap_or_else(|| {
        PathBuf::from("runs").join(format!("{label}-{}", &fingerprint[..8]))
    });
    match run_to_dir(&cfg, &dir, workers) {
        Ok(report) => {
            print_report(&report, &dir);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn print_report(report: &RunReport, dir: &Path) {
    println!(
        "run {} finished: {} symbols in {:.1} s",
        report.fingerprint, report.symbols, report.elapsed_s
    );
    println!(
        "  papr at ccdf 1e-1/1e-2/1e-3, db: in {:.2}/{:.2}/{:.2}  out {:.2}/{:.2}/{:.2}",
        report.papr_in_db[0],
        report.papr_in_db[1],
        report.papr_in_db[2],
        report.papr_out_db[0],
        report.papr_out_db[1],
        report.papr_out_db[2],
    );
    let per_band = report
        .evm_rms_db
        .iter()
        .enumerate()
        .map(|(i, e)| format!("s{i} {e:.2}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!(
        "  evm rms, db: {per_band}, composite {:.2}",
        report.evm_composite_db
    );
    println!(
        "  mean sweeps {:.1}, converged {:.1}%",
        report.mean_sweeps,
        100.0 * report.converged_fraction
    );
    if let Some(guard) = report.guard_rel_db {
        println!("  guard-band spectrum level {guard:.1} db below peak");
    }
    println!("  results in {}", dir.display());
}

fn list_presets() {
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    for p in PRESETS {
        println!("{:width$}  {}", p.name, p.summary);
    }
}

fn validate(path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = RunConfig::parse(&text).and_then(|cfg| {
        cfg.validate()?;
        Ok(cfg)
    });
    match result {
        Ok(cfg) => {
            println!("ok: fingerprint {}", cfg.fingerprint());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
