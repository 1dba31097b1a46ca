use std::f64::consts::TAU;
use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio_core::{db_to_amplitude, read_wav, WavError, HOP, SAMPLE_RATE};
use crate::rng::{self, SimRng};

/// Soundscape taxonomy label carried by every source on the bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Biophony,
    Geophony,
    Anthrophony,
    /// Machine-made sound; every agent emits on this channel.
    Cyberphony,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::Biophony,
        Channel::Geophony,
        Channel::Anthrophony,
        Channel::Cyberphony,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::Biophony => "biophony",
            Channel::Geophony => "geophony",
            Channel::Anthrophony => "anthrophony",
            Channel::Cyberphony => "cyberphony",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

/// What an external source plays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    /// Band-limited noise with the given RMS level.
    Noise {
        low_hz: f64,
        high_hz: f64,
        level_db: f64,
    },
    /// Sine with the given RMS level.
    Tone { freq_hz: f64, level_db: f64 },
    /// A recording, resampled to the simulation rate.
    Wav {
        path: PathBuf,
        #[serde(default)]
        looped: bool,
    },
}

fn unit_gain() -> f64 {
    1.0
}

/// An external sound source as declared in a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub name: String,
    pub channel: Channel,
    #[serde(default)]
    pub position: [f64; 2],
    #[serde(default = "unit_gain")]
    pub gain: f64,
    #[serde(default)]
    pub start_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_s: Option<f64>,
    /// If present, the source only sounds inside these `[from, to]` windows
    /// (seconds), with short linear fades.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub windows: Vec<[f64; 2]>,
    pub signal: SignalSpec,
}

/// Fade length at window edges.
pub const GATE_RAMP_S: f64 = 0.005;
/// Length of the pre-computed noise loop.
pub const NOISE_LOOP_LEN: usize = 1 << 18;

#[derive(Debug, Clone)]
enum Data {
    Buffer { pcm: Arc<Vec<f32>>, looped: bool },
    Tone { amplitude: f64, freq_hz: f64 },
}

/// A ready-to-play external source.
#[derive(Debug, Clone)]
pub struct Source {
    pub spec: SourceSpec,
    data: Data,
    start: u64,
    end: u64,
    windows: Vec<(u64, u64)>,
    ramp: f64,
}

/// Loop of noise with a flat spectrum between `low_hz` and `high_hz` and unit RMS.
pub fn band_noise(low_hz: f64, high_hz: f64, len: usize, rng: &mut SimRng) -> Vec<f32> {
    let sr = SAMPLE_RATE as f64;
    let mut spec = vec![Complex64::new(0.0, 0.0); len];
    let lo = ((low_hz * len as f64 / sr).ceil() as usize).max(1);
    let hi = ((high_hz * len as f64 / sr).floor() as usize).min(len / 2 - 1);
    for k in lo..=hi {
        let phase: f64 = rng.random::<f64>() * TAU;
        let z = Complex64::from_polar(1.0, phase);
        spec[k] = z;
        spec[len - k] = z.conj();
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut spec);
    let rms = (spec.iter().map(|c| c.re * c.re).sum::<f64>() / len as f64).sqrt();
    let scale = if rms > 0.0 { 1.0 / rms } else { 0.0 };
    spec.iter().map(|c| (c.re * scale) as f32).collect()
}

impl Source {
    /// Builds the source; `index` selects its random stream.
    pub fn build(spec: &SourceSpec, seed: u64, index: u64) -> Result<Self, WavError> {
        let data = match &spec.signal {
            SignalSpec::Noise {
                low_hz,
                high_hz,
                level_db,
            } => {
                let mut rng = rng::stream(seed, "source", index);
                let mut pcm = band_noise(*low_hz, *high_hz, NOISE_LOOP_LEN, &mut rng);
                let level = db_to_amplitude(*level_db);
                pcm.iter_mut().for_each(|s| *s = (*s as f64 * level) as f32);
                Data::Buffer {
                    pcm: Arc::new(pcm),
                    looped: true,
                }
            }
            SignalSpec::Tone { freq_hz, level_db } => Data::Tone {
                amplitude: db_to_amplitude(*level_db) * std::f64::consts::SQRT_2,
                freq_hz: *freq_hz,
            },
            SignalSpec::Wav { path, looped } => Data::Buffer {
                pcm: Arc::new(read_wav(path)?.samples),
                looped: *looped,
            },
        };
        let sr = SAMPLE_RATE as f64;
        let at = |s: f64| (s.max(0.0) * sr).round() as u64;
        Ok(Self {
            spec: spec.clone(),
            data,
            start: at(spec.start_s),
            end: spec.end_s.map_or(u64::MAX, at),
            windows: spec.windows.iter().map(|w| (at(w[0]), at(w[1]))).collect(),
            ramp: GATE_RAMP_S * sr,
        })
    }

    fn gate(&self, n: u64) -> f64 {
        if n < self.start || n >= self.end {
            return 0.0;
        }
        if self.windows.is_empty() {
            return 1.0;
        }
        self.windows
            .iter()
            .map(|&(a, b)| {
                if n < a || n >= b {
                    0.0
                } else {
                    let x = (n - a) as f64 / self.ramp;
                    let y = (b - n) as f64 / self.ramp;
                    x.min(y).min(1.0)
                }
            })
            .fold(0.0, f64::max)
    }

    fn audible(&self, from: u64, to: u64) -> bool {
        if to <= self.start || from >= self.end {
            return false;
        }
        if let Data::Buffer { pcm, looped: false } = &self.data {
            if from >= self.start + pcm.len() as u64 {
                return false;
            }
        }
        self.windows.is_empty() || self.windows.iter().any(|&(a, b)| from < b && to > a)
    }

    /// Writes the source's hop for `tick`, scaled by its gain; returns false
    /// (leaving `out` untouched) if the source is silent throughout.
    pub fn hop(&self, tick: u64, out: &mut [f32]) -> bool {
        let from = tick * HOP as u64;
        if !self.audible(from, from + HOP as u64) {
            return false;
        }
        let sr = SAMPLE_RATE as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let n = from + i as u64;
            let g = self.gate(n);
            if g == 0.0 {
                *o = 0.0;
                continue;
            }
            let local = n - self.start;
            let v = match &self.data {
                Data::Buffer { pcm, looped } => {
                    let idx = if *looped {
                        Some((local % pcm.len() as u64) as usize)
                    } else {
                        (local < pcm.len() as u64).then_some(local as usize)
                    };
                    idx.map_or(0.0, |i| pcm[i] as f64)
                }
                Data::Tone { amplitude, freq_hz } => {
                    amplitude * (TAU * freq_hz * local as f64 / sr).sin()
                }
            };
            *o = (v * g * self.spec.gain) as f32;
        }
        true
    }
}
