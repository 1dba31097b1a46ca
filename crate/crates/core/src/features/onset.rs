use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::audio_core::TICK_SECONDS;

/// Spectral-flux onset detector tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnsetParams {
    /// Standard deviations above the trailing mean.
    pub k: f64,
    /// Trailing window length in frames.
    pub window: usize,
    /// Extra margin as a multiple of the trailing mean.
    pub delta_ratio: f64,
    /// Absolute flux floor (unnormalised FFT magnitudes).
    pub min_flux: f64,
    pub refractory_s: f64,
}

impl Default for OnsetParams {
    fn default() -> Self {
        Self {
            k: 2.0,
            window: 43,
            delta_ratio: 1.0,
            min_flux: 0.5,
            refractory_s: 0.150,
        }
    }
}

/// Frames the trailing window must hold before the detector arms.
pub const MIN_HISTORY: usize = 8;

/// Streaming spectral-flux onset detector with an adaptive threshold.
///
/// Fires when `flux > (1 + delta_ratio) * mean + k * std` over the trailing
/// window and `flux > min_flux`, then stays disarmed for the refractory period.
#[derive(Debug, Clone)]
pub struct OnsetDetector {
    params: OnsetParams,
    history: VecDeque<f64>,
    previous: Vec<f64>,
    cooldown: usize,
    refractory_frames: usize,
}

impl Default for OnsetDetector {
    fn default() -> Self {
        Self::new(OnsetParams::default())
    }
}

impl OnsetDetector {
    pub fn new(params: OnsetParams) -> Self {
        assert!(
            params.window >= MIN_HISTORY,
            "onset window must be >= {MIN_HISTORY} frames"
        );
        assert!(params.k > 0.0, "onset k must be positive");
        Self {
            params,
            history: VecDeque::with_capacity(params.window),
            previous: Vec::new(),
            cooldown: 0,
            refractory_frames: (params.refractory_s / TICK_SECONDS).ceil() as usize,
        }
    }

    pub fn params(&self) -> &OnsetParams {
        &self.params
    }

    pub fn armed(&self) -> bool {
        self.cooldown == 0 && self.history.len() >= MIN_HISTORY
    }

    pub fn refractory_frames(&self) -> usize {
        self.refractory_frames
    }

    /// Sum of positive per-bin magnitude increases against the previous frame.
    pub fn flux(previous: &[f64], spectrum: &[f64]) -> f64 {
        if previous.is_empty() {
            return spectrum.iter().sum();
        }
        spectrum
            .iter()
            .zip(previous)
            .map(|(c, p)| (c - p).max(0.0))
            .sum()
    }

    /// Consumes the next magnitude spectrum; returns true on an onset.
    pub fn process(&mut self, spectrum: &[f64]) -> bool {
        let flux = Self::flux(&self.previous, spectrum);
        self.previous.clear();
        self.previous.extend_from_slice(spectrum);

        let fire = self.armed() && flux > self.params.min_flux && {
            let n = self.history.len() as f64;
            let mean = self.history.iter().sum::<f64>() / n;
            let var = self.history.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            flux > (1.0 + self.params.delta_ratio) * mean + self.params.k * var.sqrt()
        };

        if self.history.len() == self.params.window {
            self.history.pop_front();
        }
        self.history.push_back(flux);

        if fire {
            self.cooldown = self.refractory_frames;
        } else {
            self.cooldown = self.cooldown.saturating_sub(1);
        }
        fire
    }

    /// Forgets the previous spectrum so the next frame is compared against
    /// silence; used after an agent has been deaf for a while.
    pub fn resync(&mut self, spectrum: &[f64]) {
        self.previous.clear();
        self.previous.extend_from_slice(spectrum);
    }
}

/// Free-function form: runs one frame through `state`.
pub fn onset_detect(state: &mut OnsetDetector, spectrum: &[f64]) -> bool {
    state.process(spectrum)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::audio_core::{FrameAssembler, SpectrumAnalyzer, HOP, SAMPLE_RATE};

    fn run(signal: &[f32]) -> Vec<usize> {
        let mut det = OnsetDetector::default();
        let mut asm = FrameAssembler::default();
        let mut an = SpectrumAnalyzer::new();
        let mut onsets = Vec::new();
        for (t, hop) in signal.chunks_exact(HOP).enumerate() {
            asm.push_hop(hop);
            let spec = an.magnitude(asm.samples());
            if onset_detect(&mut det, &spec) {
                onsets.push(t);
            }
        }
        onsets
    }

    fn noise(n: usize, amp: f32, mut s: u64) -> Vec<f32> {
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0) as f32) * amp
            })
            .collect()
    }

    #[test]
    fn step_to_noise_gives_one_onset() {
        let step_hop = 100;
        let mut signal = vec![0.0f32; step_hop * HOP];
        signal.extend(noise(200 * HOP, 0.5, 3));
        let onsets = run(&signal);
        assert_eq!(onsets.len(), 1, "{onsets:?}");
        assert!(onsets[0] >= step_hop && onsets[0] <= step_hop + 2);
    }

    #[test]
    fn steady_sine_has_no_onsets_after_attack() {
        let n = 10 * SAMPLE_RATE as usize;
        let signal: Vec<f32> = (0..n)
            .map(|i| (0.6 * (2.0 * PI * 440.0 * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
            .collect();
        let onsets = run(&signal);
        assert!(onsets.iter().all(|&t| t < MIN_HISTORY + 2), "{onsets:?}");
    }

    #[test]
    fn silence_has_no_onsets() {
        assert!(run(&vec![0.0; 300 * HOP]).is_empty());
    }

    #[test]
    fn steady_noise_floor_is_quiet() {
        let onsets = run(&noise(2000 * HOP, 0.001, 11));
        assert!(onsets.is_empty(), "{onsets:?}");
    }

    #[test]
    fn refractory_limits_rate() {
        // clicks every other hop would fire constantly without the refractory period
        let mut signal = vec![0.0f32; 20 * HOP];
        for i in 0..200 {
            let mut hop = vec![0.0f32; HOP];
            if i % 2 == 0 {
                hop[..64].copy_from_slice(&noise(64, 0.8, i as u64 + 1));
            }
            signal.extend(hop);
        }
        let onsets = run(&signal);
        let refractory = OnsetDetector::default().refractory_frames();
        assert!(
            onsets.windows(2).all(|w| w[1] - w[0] > refractory),
            "{onsets:?}"
        );
    }
}
