//! `holonsim`: run scenarios, inspect recordings, analyse and replay runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use holonsim::audio_core::read_wav;
use holonsim::environment::{
    replay_run, run_scenario, write_run, RunError, Scenario, ScenarioError,
};
use holonsim::features::AnalysisVector;
use holonsim::telemetry::analyze_run;

#[derive(Parser)]
#[command(
    name = "holonsim",
    version,
    about = "Deterministic soundscape simulator for composer, collector and disruptor holons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its log, metrics, renders and manifest.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's duration, e.g. `10s`, `2m`, `90`.
        #[arg(long, value_parser = parse_duration)]
        duration: Option<f64>,
        /// Run directory; defaults to `runs/<scenario>-seed<seed>`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overwrite a completed run in the output directory.
        #[arg(long)]
        force: bool,
        /// Print progress to stderr.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Print the analysis vector of a WAV file as JSON.
    Features { wav: PathBuf },
    /// Compute occupation metrics and spectrograms of a completed run.
    Analyze { run: PathBuf },
    /// Re-render a run's microphones from its log and check the checksums.
    Replay { run: PathBuf },
}

enum Failure {
    /// Bad input: exit status 2.
    Config(String),
    /// The run or its artifacts failed: exit status 3.
    Runtime(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Scenario(e) => Failure::Config(e.to_string()),
            RunError::Exists(_) | RunError::NotARun(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn parse_duration(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (num, scale) = match t.char_indices().last() {
        Some((i, 's')) => (&t[..i], 1.0),
        Some((i, 'm')) => (&t[..i], 60.0),
        Some((i, 'h')) => (&t[..i], 3600.0),
        _ => (t, 1.0),
    };
    match num.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v * scale),
        _ => Err(format!(
            "invalid duration `{text}` (expected e.g. 10s, 2m, 90)"
        )),
    }
}

fn cmd_run(
    scenario_path: &Path,
    seed: Option<u64>,
    duration: Option<f64>,
    out: Option<PathBuf>,
    force: bool,
    verbose: bool,
) -> Result<(), Failure> {
    let mut scenario = Scenario::load(scenario_path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(d) = duration {
        scenario.duration_s = d;
    }
    scenario.validate()?;
    let out = out.unwrap_or_else(|| {
        let stem = scenario_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("run");
        PathBuf::from("runs").join(format!("{stem}-seed{}", scenario.seed))
    });
    if out.join(holonsim::environment::MANIFEST).exists() && !force {
        return Err(RunError::Exists(out).into());
    }

    let started = Instant::now();
    if verbose {
        eprintln!(
            "running {} for {} s (seed {})",
            scenario_path.display(),
            scenario.duration_s,
            scenario.seed
        );
    }
    let output = run_scenario(&scenario).map_err(|e| Failure::Runtime(e.to_string()))?;
    let manifest = write_run(&out, &scenario, &output, force)?;
    if verbose {
        eprintln!(
            "{} ticks, {} log records in {:.1} s",
            output.ticks,
            output.records.len(),
            started.elapsed().as_secs_f64()
        );
    }
    println!("{}", out.join(holonsim::environment::MANIFEST).display());
    println!("config_hash {}", manifest.config_hash);
    Ok(())
}

fn cmd_features(path: &Path) -> Result<(), Failure> {
    let wav = read_wav(path).map_err(|e| Failure::Config(e.to_string()))?;
    let v = AnalysisVector::compute(&wav.samples);
    println!(
        "{}",
        serde_json::to_string_pretty(&v).expect("vector serialises")
    );
    Ok(())
}

fn cmd_analyze(run: &Path) -> Result<(), Failure> {
    let report = analyze_run(run)?;
    let m = &report.metrics;
    match m.overlap_ratio {
        Some(r) => eprintln!("overlap_ratio {r:.4}"),
        None => eprintln!("overlap_ratio not applicable"),
    }
    eprintln!("niche_spread {}", m.niche_spread);
    if m.partial {
        eprintln!("warning: partial data (truncated log or missing truth)");
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialises")
    );
    Ok(())
}

fn cmd_replay(run: &Path) -> Result<(), Failure> {
    for r in replay_run(run)? {
        println!("{} {} ok", r.file, r.actual);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            duration,
            out,
            force,
            verbose,
        } => cmd_run(&scenario, seed, duration, out, force, verbose),
        Command::Features { wav } => cmd_features(&wav),
        Command::Analyze { run } => cmd_analyze(&run),
        Command::Replay { run } => cmd_replay(&run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
