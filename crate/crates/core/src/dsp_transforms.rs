//! The disruptor's effects: octave pitch shift by resampling, frequency
//! modulation of a fixed carrier by the input, and ring modulation.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio_core::SAMPLE_RATE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    PitchUp,
    PitchDown,
    FreqMod,
    RingMod,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [
        TransformKind::PitchUp,
        TransformKind::PitchDown,
        TransformKind::FreqMod,
        TransformKind::RingMod,
    ];
}

/// Ranges the carriers are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformParams {
    pub fm_carrier_hz: [f64; 2],
    pub ring_carrier_hz: [f64; 2],
    /// Frequency deviation in Hz per unit input amplitude.
    pub fm_index: f64,
}

impl Default for TransformParams {
    fn default() -> Self {
        Self {
            fm_carrier_hz: [50.0, 500.0],
            ring_carrier_hz: [100.0, 2000.0],
            fm_index: 5.0,
        }
    }
}

/// One fully determined transform; carriers are fixed for the whole event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub carrier_hz: f64,
    pub fm_index: f64,
}

impl TransformSpec {
    /// Draws a kind uniformly, then its carrier.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, params: &TransformParams) -> Self {
        let kind = TransformKind::ALL[rng.random_range(0..TransformKind::ALL.len())];
        let carrier_hz = match kind {
            TransformKind::FreqMod => {
                rng.random_range(params.fm_carrier_hz[0]..=params.fm_carrier_hz[1])
            }
            TransformKind::RingMod => {
                rng.random_range(params.ring_carrier_hz[0]..=params.ring_carrier_hz[1])
            }
            TransformKind::PitchUp | TransformKind::PitchDown => 0.0,
        };
        Self {
            kind,
            carrier_hz,
            fm_index: params.fm_index,
        }
    }

    pub fn apply(&self, pcm: &[f32]) -> Vec<f32> {
        match self.kind {
            TransformKind::PitchUp => pitch_shift_octave(pcm, Direction::Up),
            TransformKind::PitchDown => pitch_shift_octave(pcm, Direction::Down),
            TransformKind::FreqMod => freq_mod(pcm, self.carrier_hz, self.fm_index),
            TransformKind::RingMod => ring_mod(pcm, self.carrier_hz),
        }
    }
}

fn read_linear(pcm: &[f32], pos: f64) -> f32 {
    let i = pos.floor() as usize;
    let frac = (pos - i as f64) as f32;
    let a = pcm[i.min(pcm.len() - 1)];
    let b = pcm[(i + 1).min(pcm.len() - 1)];
    a + (b - a) * frac
}

/// Resampling octave shift: up halves the length, down doubles it.
pub fn pitch_shift_octave(pcm: &[f32], direction: Direction) -> Vec<f32> {
    if pcm.is_empty() {
        return Vec::new();
    }
    match direction {
        Direction::Up => (0..pcm.len().div_ceil(2)).map(|i| pcm[2 * i]).collect(),
        Direction::Down => (0..pcm.len() * 2)
            .map(|i| read_linear(pcm, i as f64 * 0.5))
            .collect(),
    }
}

/// `y[i] = x[i] * sin(2 pi c i / sr)`.
pub fn ring_mod(pcm: &[f32], carrier_hz: f64) -> Vec<f32> {
    let w = TAU * carrier_hz / SAMPLE_RATE as f64;
    pcm.iter()
        .enumerate()
        .map(|(i, &x)| (x as f64 * (w * i as f64).sin()) as f32)
        .collect()
}

/// Unit sine whose instantaneous frequency is `carrier_hz + fm_index * x[i]`.
pub fn freq_mod(pcm: &[f32], carrier_hz: f64, fm_index: f64) -> Vec<f32> {
    let sr = SAMPLE_RATE as f64;
    let mut phase = 0.0f64;
    pcm.iter()
        .map(|&x| {
            phase += TAU * (carrier_hz + fm_index * x as f64) / sr;
            if phase >= PI {
                phase -= TAU;
            } else if phase < -PI {
                phase += TAU;
            }
            phase.sin() as f32
        })
        .collect()
}
