use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bus::{D_REF_M, NOISE_FLOOR_DB};
use super::source::{SignalSpec, SourceSpec};
use crate::agents::{
    AgentKind, AgentParams, CollectorParams, ComposerParams, DisruptorParams, EnergyModel,
    MAX_VOICES,
};
use crate::audio_core::{read_wav, NightWindow, SimClock, WavError, NYQUIST_HZ, TICK_SECONDS};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: cannot read scenario: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Parse {
        location: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("{key}: {source}")]
    Audio { key: String, source: WavError },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

fn one() -> usize {
    1
}

/// A block of identical agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub kind: AgentKind,
    #[serde(default = "one")]
    pub count: usize,
    /// Explicit positions (one per agent); otherwise agents are laid out on a grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub positions: Vec<[f64; 2]>,
}

/// A microphone whose mix is written to `renders/<name>.wav`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSpec {
    pub name: String,
    #[serde(default)]
    pub position: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetrySpec {
    /// Record per-channel band energies heard by each composer.
    pub occupation: bool,
    pub window_s: f64,
}

impl Default for TelemetrySpec {
    fn default() -> Self {
        Self {
            occupation: false,
            window_s: 1.0,
        }
    }
}

fn default_duration() -> f64 {
    60.0
}
fn default_day() -> f64 {
    86_400.0
}
fn default_noise() -> f64 {
    NOISE_FLOOR_DB
}
fn default_d_ref() -> f64 {
    D_REF_M
}
fn default_spacing() -> f64 {
    3.0
}

/// Declarative description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_day")]
    pub day_length_s: f64,
    #[serde(default)]
    pub start_day_fraction: f64,
    #[serde(default)]
    pub night_window: NightWindow,
    #[serde(default = "default_noise")]
    pub noise_floor_db: f64,
    #[serde(default = "default_d_ref")]
    pub d_ref_m: f64,
    #[serde(default = "default_spacing")]
    pub grid_spacing_m: f64,
    #[serde(default)]
    pub energy: EnergyModel,
    #[serde(default)]
    pub composer: ComposerParams,
    #[serde(default)]
    pub collector: CollectorParams,
    #[serde(default)]
    pub disruptor: DisruptorParams,
    #[serde(default)]
    pub telemetry: TelemetrySpec,
    #[serde(default)]
    pub agents: Vec<RosterEntry>,
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub renders: Vec<RenderSpec>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl Scenario {
    /// Minimal scenario with no agents or sources.
    pub fn empty(seed: u64, duration_s: f64) -> Self {
        toml::from_str::<Scenario>(&format!("seed = {seed}\nduration_s = {duration_s:?}"))
            .expect("minimal scenario parses")
    }

    /// Reads, resolves relative paths against the file's directory, and validates.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self, ScenarioError> {
        let mut scenario: Scenario = toml::from_str(text).map_err(|e| {
            let (line, location) = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(text, span.start);
                    (Some(l), format!("{origin}:{l}:{c}"))
                }
                None => (None, origin.to_string()),
            };
            ScenarioError::Parse {
                location,
                line,
                message: e.message().trim().to_string(),
            }
        })?;
        scenario.resolve_paths(base_dir);
        scenario.validate()?;
        Ok(scenario)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for s in &mut self.sources {
            if let SignalSpec::Wav { path, .. } = &mut s.signal {
                if path.is_relative() {
                    let joined = base.join(&*path);
                    *path = std::path::absolute(&joined).unwrap_or(joined);
                }
            }
        }
    }

    /// Checks ranges and that every referenced file is a readable WAV.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(key, format!("must be a positive number, got {v}")))
            }
        };
        positive("duration_s", self.duration_s)?;
        positive("day_length_s", self.day_length_s)?;
        positive("d_ref_m", self.d_ref_m)?;
        positive("grid_spacing_m", self.grid_spacing_m)?;
        positive("telemetry.window_s", self.telemetry.window_s)?;
        positive("energy.battery_max_wh", self.energy.battery_max_wh)?;
        if !(0.0..1.0).contains(&self.start_day_fraction) {
            return Err(invalid("start_day_fraction", "must be in [0, 1)"));
        }
        let nw = self.night_window;
        if !(0.0..=1.0).contains(&nw.start) || !(0.0..=1.0).contains(&nw.end) {
            return Err(invalid("night_window", "start and end must be in [0, 1]"));
        }
        if !self.noise_floor_db.is_finite() {
            return Err(invalid("noise_floor_db", "must be finite"));
        }
        if !(1..=MAX_VOICES).contains(&self.composer.voices) {
            return Err(invalid(
                "composer.voices",
                format!("must be 1 to {MAX_VOICES}"),
            ));
        }
        if self.composer.min_note_s <= 0.0 || self.composer.max_note_s < self.composer.min_note_s {
            return Err(invalid(
                "composer.max_note_s",
                "need 0 < min_note_s <= max_note_s",
            ));
        }
        let e = &self.energy;
        for (key, v) in [
            ("energy.peak_harvest_w", e.peak_harvest_w),
            ("energy.cost_idle_w", e.cost_idle_w),
            ("energy.cost_listen_w", e.cost_listen_w),
            ("energy.cost_emit_w", e.cost_emit_w),
            ("energy.liveliness_max_hz", e.liveliness_max_hz),
            ("energy.day_activity", e.day_activity),
            ("energy.initial_battery_wh", e.initial_battery_wh),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(
                    key,
                    format!("must be a non-negative number, got {v}"),
                ));
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            if !a.positions.is_empty() && a.positions.len() != a.count {
                return Err(invalid(
                    format!("agents[{i}].positions"),
                    format!("{} positions for count = {}", a.positions.len(), a.count),
                ));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, r) in self.renders.iter().enumerate() {
            let ok = !r.name.is_empty()
                && r.name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok || !names.insert(r.name.clone()) {
                return Err(invalid(
                    format!("renders[{i}].name"),
                    "must be unique and use only letters, digits, '-' and '_'",
                ));
            }
        }
        for (i, s) in self.sources.iter().enumerate() {
            let key = format!("sources[{i}]");
            if !(s.gain.is_finite() && s.gain >= 0.0) {
                return Err(invalid(format!("{key}.gain"), "must be non-negative"));
            }
            for (j, w) in s.windows.iter().enumerate() {
                if w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less) {
                    return Err(invalid(
                        format!("{key}.windows[{j}]"),
                        "start must precede end",
                    ));
                }
            }
            match &s.signal {
                SignalSpec::Noise {
                    low_hz, high_hz, ..
                } => {
                    if !(0.0 <= *low_hz && low_hz < high_hz && *high_hz <= NYQUIST_HZ) {
                        return Err(invalid(
                            format!("{key}.signal"),
                            format!("need 0 <= low_hz < high_hz <= {NYQUIST_HZ}"),
                        ));
                    }
                }
                SignalSpec::Tone { freq_hz, .. } => {
                    if !(0.0 < *freq_hz && *freq_hz < NYQUIST_HZ) {
                        return Err(invalid(
                            format!("{key}.signal.freq_hz"),
                            "must be below Nyquist",
                        ));
                    }
                }
                SignalSpec::Wav { path, .. } => {
                    let key = format!("{key}.signal.path");
                    if !path.is_file() {
                        return Err(invalid(key, format!("file not found: {}", path.display())));
                    }
                    read_wav(path).map_err(|source| ScenarioError::Audio { key, source })?;
                }
            }
        }
        Ok(())
    }

    pub fn ticks(&self) -> u64 {
        (self.duration_s / TICK_SECONDS).round() as u64
    }

    pub fn clock(&self) -> SimClock {
        SimClock::new(
            self.day_length_s,
            self.start_day_fraction,
            self.night_window,
        )
    }

    pub fn agent_params(&self) -> AgentParams {
        AgentParams {
            energy: self.energy,
            composer: self.composer,
            collector: self.collector,
            disruptor: self.disruptor,
        }
    }

    /// Every agent's kind and position, in id order.
    pub fn roster(&self) -> Vec<(AgentKind, [f64; 2])> {
        let total: usize = self.agents.iter().map(|a| a.count).sum();
        let cols = (total as f64).sqrt().ceil().max(1.0) as usize;
        let mut out = Vec::with_capacity(total);
        for entry in &self.agents {
            for k in 0..entry.count {
                let i = out.len();
                let pos = entry.positions.get(k).copied().unwrap_or([
                    (i % cols) as f64 * self.grid_spacing_m,
                    (i / cols) as f64 * self.grid_spacing_m,
                ]);
                out.push((entry.kind, pos));
            }
        }
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7
duration_s = 10.0

[composer]
voices = 2

[[agents]]
kind = "composer"
count = 3

[[agents]]
kind = "disruptor"
positions = [[10.0, 0.0]]

[[sources]]
name = "traffic"
channel = "anthrophony"
signal = { type = "noise", low_hz = 100.0, high_hz = 900.0, level_db = -30.0 }

[[renders]]
name = "centre"
"#;

    #[test]
    fn parses_and_round_trips() {
        let s = Scenario::parse(SAMPLE, "t.toml", Path::new(".")).unwrap();
        assert_eq!(s.composer.voices, 2);
        assert_eq!(s.composer.amplitude, ComposerParams::default().amplitude);
        assert_eq!(s.ticks(), 625);
        let back = Scenario::parse(&s.to_toml(), "r.toml", Path::new(".")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn roster_grid_and_explicit_positions() {
        let s = Scenario::parse(SAMPLE, "t.toml", Path::new(".")).unwrap();
        let r = s.roster();
        assert_eq!(r.len(), 4);
        assert_eq!(r[1], (AgentKind::Composer, [3.0, 0.0]));
        assert_eq!(r[2], (AgentKind::Composer, [0.0, 3.0]));
        assert_eq!(r[3], (AgentKind::Disruptor, [10.0, 0.0]));
    }

    #[test]
    fn missing_seed_is_reported() {
        let err = Scenario::parse("duration_s = 5.0\n", "x.toml", Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = Scenario::parse(
            "seed = 1\n\n[composer]\nvoicez = 2\n",
            "x.toml",
            Path::new("."),
        )
        .unwrap_err();
        match &err {
            ScenarioError::Parse { line, message, .. } => {
                assert_eq!(*line, Some(4));
                assert!(message.contains("voicez"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_wav_names_path() {
        let text = "seed = 1\n[[sources]]\nname = \"x\"\nchannel = \"biophony\"\nsignal = { type = \"wav\", path = \"nope/gull.wav\" }\n";
        let err = Scenario::parse(text, "x.toml", Path::new("/tmp")).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("/tmp/nope/gull.wav") && msg.contains("sources[0]"),
            "{msg}"
        );
    }

    #[test]
    fn invalid_values_name_their_key() {
        let err =
            Scenario::parse("seed = 1\nduration_s = -1.0\n", "x", Path::new(".")).unwrap_err();
        assert!(err.to_string().starts_with("duration_s"), "{err}");
        let err =
            Scenario::parse("seed = 1\n[composer]\nvoices = 4\n", "x", Path::new(".")).unwrap_err();
        assert!(err.to_string().starts_with("composer.voices"), "{err}");
    }
}
