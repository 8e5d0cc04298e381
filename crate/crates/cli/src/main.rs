use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use chanest::channel::{check_frequency_nonselective, unambiguous_range};
use chanest::harness::{crb_sweep, emit_results, run_scenario, Parameter, Scenario};

#[derive(Parser)]
#[command(name = "chanest", version, about = "Monte-Carlo channel parameter estimation sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo sweep and write CSV results plus a manifest.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the error bounds at every sweep point without running the estimator.
    Crb { scenario: PathBuf },
    /// Validate a scenario and report waveform validity at every sweep point.
    Check { scenario: PathBuf },
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::from_file(path).with_context(|| format!("loading {}", path.display()))
}

fn run(path: &Path, out: &Path) -> Result<()> {
    let s = load(path)?;
    let result = run_scenario(&s)?;
    let files = emit_results(&result, out)?;
    for p in &result.points {
        println!(
            "{} = {}: detection rate {:.3} over {} trials",
            result.axis.name(),
            p.point.value,
            p.detection_rate,
            p.n_sim
        );
    }
    println!("wrote {}", files.csv.display());
    println!("wrote {}", files.manifest.display());
    Ok(())
}

fn crb(path: &Path) -> Result<()> {
    let s = load(path)?;
    let axis = s.axis()?;
    println!("sweep_value,parameter_name,path_index,crb");
    for p in crb_sweep(&s)? {
        for (n, b) in p.bounds.iter().enumerate() {
            for (k, param) in Parameter::ALL.iter().enumerate() {
                println!("{},{},{},{}", p.point.value, param.name(), n, b[k]);
            }
        }
    }
    eprintln!("sweep axis: {}", axis.name());
    Ok(())
}

/// Prints the per-point report, then fails if the scenario does not validate.
fn check(path: &Path) -> Result<()> {
    let s = load(path)?;
    let arrays = s.arrays.resolve()?;
    let axis = s.axis()?;
    println!("sweep axis: {}", axis.name());
    let paths = s.true_paths()?;
    let farthest = paths.iter().map(|p| p.distance).fold(0.0, f64::max);
    for point in s.points()? {
        let cfg = s.waveform_at(&point)?;
        let sel = check_frequency_nonselective(&cfg, &arrays);
        let range = unambiguous_range(&cfg);
        println!(
            "{} = {}: N_rx*N_s/(2T) = {:.4e} Hz vs f_c = {:.4e} Hz (ratio {:.3e}, {}); unambiguous range {:.3} m (farthest path {:.3} m)",
            axis.name(),
            point.value,
            sel.dispersion_term_hz,
            cfg.carrier_hz,
            sel.ratio,
            if sel.nonselective { "frequency-flat" } else { "frequency-selective" },
            range,
            farthest
        );
    }
    s.validate()?;
    println!("scenario is valid");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, out } => run(scenario, out),
        Command::Crb { scenario } => crb(scenario),
        Command::Check { scenario } => check(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
