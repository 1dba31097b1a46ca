use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::audio_core::{
    padded_frames, rms, MelFilterbank, SpectrumAnalyzer, MEL_BANDS, SAMPLE_RATE,
};

pub const MFCC_COEFFS: usize = 13;
pub const VECTOR_DIM: usize = MFCC_COEFFS + 2;
/// Frame RMS treated as silence when computing dynamic range.
pub const SILENCE_FLOOR: f64 = 1e-5;
/// Added to Mel energies before the log.
pub const LOG_FLOOR: f64 = 1e-10;

/// Dynamic range, zero-crossing rate and MFCCs of one recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisVector {
    pub dynamic_range_db: f64,
    pub zero_crossing_rate: f64,
    pub mfcc: [f64; MFCC_COEFFS],
}

impl AnalysisVector {
    pub fn compute(pcm: &[f32]) -> Self {
        Self {
            dynamic_range_db: dynamic_range_db(pcm),
            zero_crossing_rate: zero_crossing_rate(pcm),
            mfcc: mfcc(pcm),
        }
    }

    pub fn to_array(&self) -> [f64; VECTOR_DIM] {
        let mut out = [0.0; VECTOR_DIM];
        out[0] = self.dynamic_range_db;
        out[1] = self.zero_crossing_rate;
        out[2..].copy_from_slice(&self.mfcc);
        out
    }

    pub fn from_array(v: [f64; VECTOR_DIM]) -> Self {
        let mut mfcc = [0.0; MFCC_COEFFS];
        mfcc.copy_from_slice(&v[2..]);
        Self {
            dynamic_range_db: v[0],
            zero_crossing_rate: v[1],
            mfcc,
        }
    }
}

/// Ratio of loudest to quietest non-silent frame, in dB.
pub fn dynamic_range_db(pcm: &[f32]) -> f64 {
    let levels: Vec<f64> = padded_frames(pcm).iter().map(|f| rms(f)).collect();
    let loudest = levels.iter().copied().fold(0.0, f64::max);
    let quietest = levels
        .iter()
        .copied()
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let quietest = if quietest.is_finite() {
        quietest
    } else {
        SILENCE_FLOOR
    };
    20.0 * (loudest.max(SILENCE_FLOOR) / quietest.max(SILENCE_FLOOR)).log10()
}

/// Sign changes per second; zero counts as positive.
pub fn zero_crossing_rate(pcm: &[f32]) -> f64 {
    if pcm.is_empty() {
        return 0.0;
    }
    let crossings = pcm
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    crossings as f64 * SAMPLE_RATE as f64 / pcm.len() as f64
}

fn dct_table() -> &'static [[f64; MEL_BANDS]; MFCC_COEFFS] {
    static TABLE: OnceLock<[[f64; MEL_BANDS]; MFCC_COEFFS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0.0; MEL_BANDS]; MFCC_COEFFS];
        for (k, row) in t.iter_mut().enumerate() {
            for (n, v) in row.iter_mut().enumerate() {
                *v = (PI * k as f64 * (n as f64 + 0.5) / MEL_BANDS as f64).cos();
            }
        }
        t
    })
}

/// Cepstrum of one frame: unnormalised DCT-II of log Mel energies.
pub fn frame_cepstrum(mel: &[f64]) -> [f64; MFCC_COEFFS] {
    let logs: Vec<f64> = mel.iter().map(|e| (e + LOG_FLOOR).ln()).collect();
    let mut out = [0.0; MFCC_COEFFS];
    for (c, row) in out.iter_mut().zip(dct_table()) {
        *c = row.iter().zip(&logs).map(|(w, l)| w * l).sum();
    }
    out
}

/// Frame-averaged MFCCs (coefficients 0..=12).
pub fn mfcc(pcm: &[f32]) -> [f64; MFCC_COEFFS] {
    let frames = padded_frames(pcm);
    let mut acc = [0.0; MFCC_COEFFS];
    if frames.is_empty() {
        return acc;
    }
    let bank = MelFilterbank::global();
    let mut analyzer = SpectrumAnalyzer::new();
    let mut spec = Vec::new();
    let mut mel = [0.0; MEL_BANDS];
    for f in &frames {
        analyzer.magnitude_into(f, &mut spec);
        bank.apply_into(&spec, &mut mel);
        for (a, c) in acc.iter_mut().zip(frame_cepstrum(&mel)) {
            *a += c;
        }
    }
    acc.iter_mut().for_each(|a| *a /= frames.len() as f64);
    acc
}
