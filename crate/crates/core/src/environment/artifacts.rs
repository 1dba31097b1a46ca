use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::replay::replay_renders;
use super::{parse_jsonl, to_jsonl, ParsedLog, RunOutput, Scenario, ScenarioError};
use crate::audio_core::{read_wav_native, wav_bytes, SAMPLE_RATE};
use crate::telemetry::occupation_to_csv;

pub const MANIFEST: &str = "manifest.json";
pub const EVENTS: &str = "events.jsonl";
pub const METRICS: &str = "metrics.csv";
pub const OCCUPATION: &str = "occupation.csv";
pub const RESOLVED_SCENARIO: &str = "scenario.resolved.toml";
pub const RENDERS_DIR: &str = "renders";
pub const EMISSIONS_DIR: &str = "emissions";
pub const REPLAY_DIR: &str = "replay";
pub const ANALYSIS_DIR: &str = "analysis";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}: holds a completed run (use --force to overwrite)")]
    Exists(PathBuf),
    #[error("{0}: no manifest.json, not a run directory")]
    NotARun(PathBuf),
    #[error("corrupted run: {0}")]
    Corrupt(String),
    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Proof of a completed run: what it was configured with and what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    /// SHA-256 of `scenario.resolved.toml`.
    pub config_hash: String,
    pub ticks: u64,
    /// Run-relative path to SHA-256 of the file's bytes.
    pub artifacts: BTreeMap<String, String>,
}

pub fn render_file(name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{RENDERS_DIR}/{clean}.wav")
}

/// Writes every artifact of `output` into `dir` and finishes with the
/// manifest. Refuses to touch a completed run unless `force` is set.
pub fn write_run(
    dir: &Path,
    scenario: &Scenario,
    output: &RunOutput,
    force: bool,
) -> Result<Manifest, RunError> {
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        if !force {
            return Err(RunError::Exists(dir.to_path_buf()));
        }
        fs::remove_file(&manifest_path).map_err(io(&manifest_path))?;
        for sub in [RENDERS_DIR, EMISSIONS_DIR, REPLAY_DIR, ANALYSIS_DIR] {
            let p = dir.join(sub);
            if p.exists() {
                fs::remove_dir_all(&p).map_err(io(&p))?;
            }
        }
        let occ = dir.join(OCCUPATION);
        if occ.exists() {
            fs::remove_file(&occ).map_err(io(&occ))?;
        }
    }
    fs::create_dir_all(dir).map_err(io(dir))?;

    let mut artifacts = BTreeMap::new();
    let mut put = |rel: &str, bytes: &[u8]| -> Result<(), RunError> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io(parent))?;
        }
        fs::write(&path, bytes).map_err(io(&path))?;
        artifacts.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    };

    let resolved = scenario.to_toml();
    put(RESOLVED_SCENARIO, resolved.as_bytes())?;
    put(EVENTS, to_jsonl(&output.records).as_bytes())?;
    put(METRICS, output.metrics_csv.as_bytes())?;
    if let Some(occ) = &output.occupation {
        put(OCCUPATION, occupation_to_csv(occ).as_bytes())?;
    }
    for (name, pcm) in &output.renders {
        put(&render_file(name), &wav_bytes(pcm, SAMPLE_RATE, true))?;
    }
    for (rel, pcm) in &output.emissions {
        put(rel, &wav_bytes(pcm, SAMPLE_RATE, true))?;
    }

    let manifest = Manifest {
        seed: scenario.seed,
        config_hash: sha256_hex(resolved.as_bytes()),
        ticks: output.ticks,
        artifacts,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    let tmp = dir.join("manifest.json.tmp");
    fs::write(&tmp, text).map_err(io(&tmp))?;
    fs::rename(&tmp, &manifest_path).map_err(io(&manifest_path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, RunError> {
    let path = dir.join(MANIFEST);
    if !path.exists() {
        return Err(RunError::NotARun(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text).map_err(|e| RunError::Corrupt(format!("{}: {e}", path.display())))
}

/// A completed run loaded back from disk.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub scenario: Scenario,
    pub log: ParsedLog,
}

/// Loads manifest, resolved scenario and log. The log may be truncated;
/// check `log.complete`.
pub fn load_run(dir: &Path) -> Result<StoredRun, RunError> {
    let manifest = read_manifest(dir)?;
    let scenario_path = dir.join(RESOLVED_SCENARIO);
    let text = fs::read_to_string(&scenario_path).map_err(io(&scenario_path))?;
    if sha256_hex(text.as_bytes()) != manifest.config_hash {
        return Err(RunError::Corrupt(format!(
            "{RESOLVED_SCENARIO} does not match config_hash"
        )));
    }
    let scenario = Scenario::parse(&text, &scenario_path.display().to_string(), dir)?;
    let events = dir.join(EVENTS);
    let log = parse_jsonl(&fs::read_to_string(&events).map_err(io(&events))?);
    Ok(StoredRun {
        dir: dir.to_path_buf(),
        manifest,
        scenario,
        log,
    })
}

/// Files whose bytes no longer hash to the manifest entry.
pub fn verify_artifacts(dir: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .artifacts
        .iter()
        .filter(|(rel, sum)| fs::read(dir.join(rel)).map_or(true, |b| sha256_hex(&b) != **sum))
        .map(|(rel, _)| rel.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayedRender {
    pub file: String,
    pub expected: String,
    pub actual: String,
}

impl ReplayedRender {
    pub fn matches(&self) -> bool {
        self.expected == self.actual
    }
}

/// Re-renders a run from its log into `replay/` and compares checksums with
/// the manifest. Any difference is an error.
pub fn replay_run(dir: &Path) -> Result<Vec<ReplayedRender>, RunError> {
    let run = load_run(dir)?;
    if !run.log.complete {
        return Err(RunError::Corrupt(format!("{EVENTS} is truncated")));
    }
    let manifest = &run.manifest;
    let load = |rel: &str| -> Result<Vec<f32>, RunError> {
        let expected = manifest
            .artifacts
            .get(rel)
            .ok_or_else(|| RunError::Corrupt(format!("{rel} is not in the manifest")))?;
        let path = dir.join(rel);
        let bytes = fs::read(&path).map_err(io(&path))?;
        if sha256_hex(&bytes) != *expected {
            return Err(RunError::Corrupt(format!(
                "{rel} does not match its checksum"
            )));
        }
        read_wav_native(&path)
            .map(|w| w.samples)
            .map_err(|e| RunError::Corrupt(format!("{rel}: {e}")))
    };
    let renders = replay_renders(&run.scenario, &run.log.records, load)?;
    let out_dir = dir.join(REPLAY_DIR);
    fs::create_dir_all(&out_dir).map_err(io(&out_dir))?;

    let mut report = Vec::new();
    for (name, pcm) in &renders {
        let file = render_file(name);
        let bytes = wav_bytes(pcm, SAMPLE_RATE, true);
        let path = dir
            .join(REPLAY_DIR)
            .join(Path::new(&file).file_name().expect("render file name"));
        fs::write(&path, &bytes).map_err(io(&path))?;
        report.push(ReplayedRender {
            expected: manifest.artifacts.get(&file).cloned().unwrap_or_default(),
            actual: sha256_hex(&bytes),
            file,
        });
    }
    let bad: Vec<&str> = report
        .iter()
        .filter(|r| !r.matches())
        .map(|r| r.file.as_str())
        .collect();
    if !bad.is_empty() {
        return Err(RunError::Mismatch(bad.join(", ")));
    }
    Ok(report)
}
