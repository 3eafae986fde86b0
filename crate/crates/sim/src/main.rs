use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spmc_sim::presets::{preset, PRESETS};
use spmc_sim::runner::with_threads;
use spmc_sim::{run, ExperimentConfig, Frontend, Mode, SimError};

#[derive(Parser)]
#[command(name = "spmc-sim", version, about = "Monte Carlo harness for the spatial phase manifold receiver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// BER and SER vs SNR, SPMC and the coherent benchmark
    Ber(RunArgs),
    /// BER and SER vs SNR for each phase-noise level
    BerPhaseNoise(RunArgs),
    /// Direction error densities per array size
    ErrorPdf(RunArgs),
    /// Direction RMSE against the CRLB
    RmseCrlb(RunArgs),
    /// Position error bound over a scene grid
    PebMap(RunArgs),
    /// List the built-in configs, or print one
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file
    #[arg(long, value_name = "FILE", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in config by name
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when omitted
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = ["statistical", "waveform", "waveform-oracle"])]
    frontend: Option<String>,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<(), SimError> {
    let (mode, args) = match Cli::parse().command {
        Command::Ber(a) => (Mode::Ber, a),
        Command::BerPhaseNoise(a) => (Mode::BerPhaseNoise, a),
        Command::ErrorPdf(a) => (Mode::ErrorPdf, a),
        Command::RmseCrlb(a) => (Mode::RmseCrlb, a),
        Command::PebMap(a) => (Mode::PebMap, a),
        Command::Presets { show } => return presets(show),
    };
    let (mut cfg, base) = match (&args.config, &args.preset) {
        (Some(path), _) => (ExperimentConfig::from_file(path)?, path.parent().map(|p| p.to_path_buf())),
        (None, Some(name)) => {
            let p = preset(name).ok_or_else(|| SimError::Config(vec![format!("preset: unknown name {name:?}")]))?;
            (p.config()?, None)
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    if cfg.mode != mode {
        return Err(SimError::Config(vec![format!("mode: config says {}, command is {mode}", cfg.mode)]));
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(f) = &args.frontend {
        cfg.frontend = f.parse::<Frontend>().map_err(|e| SimError::Config(vec![format!("frontend: {e}")]))?;
    }
    let result = with_threads(args.threads, || run(&cfg, base.as_deref()))??;
    let csv = result.to_csv();
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn presets(show: Option<String>) -> Result<(), SimError> {
    match show {
        Some(name) => {
            let p = preset(&name).ok_or_else(|| SimError::Config(vec![format!("preset: unknown name {name:?}")]))?;
            print!("{}", p.json);
        }
        None => {
            for p in &PRESETS {
                println!("{:<9} {}", p.name, p.description);
            }
        }
    }
    Ok(())
}
