use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{occupation_from_csv, occupation_metrics, spectrogram, OccupationMetrics};
use crate::audio_core::read_wav_native;
use crate::environment::{load_run, render_file, RunError, ANALYSIS_DIR, OCCUPATION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub metrics: OccupationMetrics,
    /// Run-relative paths written.
    pub files: Vec<String>,
}

fn write(dir: &Path, rel: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<(), RunError> {
    let path = dir.join(rel);
    fs::write(&path, bytes).map_err(|source| RunError::Io { path, source })?;
    files.push(rel.to_string());
    Ok(())
}

/// Computes occupation metrics and spectrograms of every render of a stored
/// run, writing them under `analysis/`. A truncated log yields a report
/// flagged partial rather than an error.
pub fn analyze_run(dir: &Path) -> Result<AnalysisReport, RunError> {
    let run = load_run(dir)?;
    let occ_path = dir.join(OCCUPATION);
    let truth = if occ_path.exists() {
        let text = fs::read_to_string(&occ_path).map_err(|source| RunError::Io {
            path: occ_path.clone(),
            source,
        })?;
        Some(
            occupation_from_csv(&text, run.scenario.telemetry.window_s)
                .map_err(RunError::Corrupt)?,
        )
    } else {
        None
    };
    let metrics = occupation_metrics(&run.log.records, truth.as_ref(), run.log.complete);

    let out = dir.join(ANALYSIS_DIR);
    fs::create_dir_all(&out).map_err(|source| RunError::Io {
        path: out.clone(),
        source,
    })?;
    let mut files = Vec::new();
    write(
        dir,
        &format!("{ANALYSIS_DIR}/occupation_metrics.csv"),
        metrics.to_csv().as_bytes(),
        &mut files,
    )?;
    let json = serde_json::to_string_pretty(&metrics).expect("metrics serialise") + "\n";
    write(
        dir,
        &format!("{ANALYSIS_DIR}/occupation_metrics.json"),
        json.as_bytes(),
        &mut files,
    )?;

    for r in &run.scenario.renders {
        let rel = render_file(&r.name);
        let wav = read_wav_native(dir.join(&rel))
            .map_err(|e| RunError::Corrupt(format!("{rel}: {e}")))?;
        let s = spectrogram(&wav.samples);
        let stem = Path::new(&rel)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("render")
            .to_string();
        write(
            dir,
            &format!("{ANALYSIS_DIR}/{stem}_spectrogram.csv"),
            s.to_csv().as_bytes(),
            &mut files,
        )?;
        write(
            dir,
            &format!("{ANALYSIS_DIR}/{stem}_spectrogram.pgm"),
            &s.to_pgm(),
            &mut files,
        )?;
    }
    Ok(AnalysisReport { metrics, files })
}
