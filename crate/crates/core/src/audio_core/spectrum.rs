use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{FRAME_SIZE, SPECTRUM_BINS};

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn shared_plan() -> &'static (Arc<dyn Fft<f64>>, Vec<f64>) {
    static PLAN: OnceLock<(Arc<dyn Fft<f64>>, Vec<f64>)> = OnceLock::new();
    PLAN.get_or_init(|| {
        let fft = FftPlanner::new().plan_fft_forward(FRAME_SIZE);
        (fft, hann_window(FRAME_SIZE))
    })
}

/// Hann-windowed magnitude spectrum of a [`FRAME_SIZE`] frame.
///
/// Owns its scratch space so one instance per agent avoids allocation per tick.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: &'static [f64],
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Clone for SpectrumAnalyzer {
    fn clone(&self) -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer").finish_non_exhaustive()
    }
}

impl Default for SpectrumAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl SpectrumAnalyzer {
    pub fn new() -> Self {
        let (fft, window) = shared_plan();
        Self {
            fft: Arc::clone(fft),
            window,
            buffer: vec![Complex::default(); FRAME_SIZE],
            scratch: vec![Complex::default(); fft.get_inplace_scratch_len()],
        }
    }

    /// Writes `FRAME_SIZE / 2 + 1` magnitudes into `out`.
    pub fn magnitude_into(&mut self, frame: &[f32], out: &mut Vec<f64>) {
        assert_eq!(
            frame.len(),
            FRAME_SIZE,
            "frame must hold FRAME_SIZE samples"
        );
        for ((b, &x), &w) in self.buffer.iter_mut().zip(frame).zip(self.window) {
            *b = Complex::new(x as f64 * w, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        out.clear();
        out.extend(self.buffer[..SPECTRUM_BINS].iter().map(|c| c.norm()));
    }

    pub fn magnitude(&mut self, frame: &[f32]) -> Vec<f64> {
        let mut out = Vec::with_capacity(SPECTRUM_BINS);
        self.magnitude_into(frame, &mut out);
        out
    }
}

/// Convenience wrapper; bin `k` sits at `k * SAMPLE_RATE / FRAME_SIZE` Hz.
pub fn fft_magnitude(frame: &[f32]) -> Vec<f64> {
    SpectrumAnalyzer::new().magnitude(frame)
}

#[cfg(test)]
mod tests {
    use super::super::SAMPLE_RATE;
    use super::*;

    fn naive_dft_magnitude(frame: &[f32]) -> Vec<f64> {
        let n = frame.len();
        let w = hann_window(n);
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &x) in frame.iter().enumerate() {
                    let ang = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += x as f64 * w[i] * ang.cos();
                    im += x as f64 * w[i] * ang.sin();
                }
                re.hypot(im)
            })
            .collect()
    }

    fn lcg_noise(seed: u64, n: usize) -> Vec<f32> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0) as f32
            })
            .collect()
    }

    #[test]
    fn zero_frame_gives_zero_spectrum() {
        let spec = fft_magnitude(&[0.0; FRAME_SIZE]);
        assert_eq!(spec.len(), SPECTRUM_BINS);
        assert!(spec.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn bin_32_sine_peaks_at_bin_32() {
        let f = 32.0 * SAMPLE_RATE as f64 / FRAME_SIZE as f64;
        let frame: Vec<f32> = (0..FRAME_SIZE)
            .map(|i| (2.0 * PI * f * i as f64 / SAMPLE_RATE as f64).sin() as f32)
            .collect();
        let spec = fft_magnitude(&frame);
        let oracle = naive_dft_magnitude(&frame);
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        assert_eq!(argmax(&spec), 32);
        assert_eq!(argmax(&oracle), 32);
    }

    #[test]
    fn noise_matches_naive_dft() {
        let frame = lcg_noise(99, FRAME_SIZE);
        let spec = fft_magnitude(&frame);
        let oracle = naive_dft_magnitude(&frame);
        for (a, b) in spec.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn parseval_holds() {
        let frame = lcg_noise(7, FRAME_SIZE);
        let w = hann_window(FRAME_SIZE);
        let time: f64 = frame
            .iter()
            .zip(&w)
            .map(|(&x, &w)| (x as f64 * w).powi(2))
            .sum();
        let spec = fft_magnitude(&frame);
        let n = FRAME_SIZE;
        let mut freq = spec[0].powi(2) + spec[n / 2].powi(2);
        freq += 2.0 * spec[1..n / 2].iter().map(|m| m * m).sum::<f64>();
        freq /= n as f64;
        assert!((time - freq).abs() <= 1e-6 * time);
    }
}
