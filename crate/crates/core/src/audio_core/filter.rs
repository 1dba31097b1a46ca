use std::f64::consts::PI;

/// Direct-form-I biquad with `a0` normalised to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Biquad {
    pub fn new(b: [f64; 3], a: [f64; 3]) -> Self {
        Self {
            b0: b[0] / a[0],
            b1: b[1] / a[0],
            b2: b[2] / a[0],
            a1: a[1] / a[0],
            a2: a[2] / a[0],
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        }
    }

    /// Second-order Butterworth highpass via the bilinear transform.
    pub fn butterworth_highpass(cutoff_hz: f64, sample_rate: f64) -> Self {
        let w0 = 2.0 * PI * cutoff_hz / sample_rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        Self::new(
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
            [1.0 + alpha, -2.0 * cos, 1.0 - alpha],
        )
    }

    /// Normalised coefficients `([b0, b1, b2], [1, a1, a2])`.
    pub fn coefficients(&self) -> ([f64; 3], [f64; 3]) {
        ([self.b0, self.b1, self.b2], [1.0, self.a1, self.a2])
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.b1 * self.x1 + self.b2 * self.x2
            - self.a1 * self.y1
            - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / sample_rate;
        // H(z) evaluated on the unit circle, z^-1 = e^{-jw}
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num_re = self.b0 + self.b1 * c1 + self.b2 * c2;
        let num_im = self.b1 * s1 + self.b2 * s2;
        let den_re = 1.0 + self.a1 * c1 + self.a2 * c2;
        let den_im = self.a1 * s1 + self.a2 * s2;
        (num_re.hypot(num_im)) / (den_re.hypot(den_im))
    }

    pub fn reset(&mut self) {
        self.x1 = 0.0;
        self.x2 = 0.0;
        self.y1 = 0.0;
        self.y2 = 0.0;
    }
}

/// The 80 Hz input highpass, streaming across frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Highpass {
    biquad: Biquad,
}

impl Default for Highpass {
    fn default() -> Self {
        Self::new(super::HIGHPASS_HZ, super::SAMPLE_RATE as f64)
    }
}

impl Highpass {
    pub fn new(cutoff_hz: f64, sample_rate: f64) -> Self {
        Self {
            biquad: Biquad::butterworth_highpass(cutoff_hz, sample_rate),
        }
    }

    pub fn biquad(&self) -> &Biquad {
        &self.biquad
    }

    pub fn process_in_place(&mut self, samples: &mut [f32]) {
        for s in samples.iter_mut() {
            *s = self.biquad.process(*s as f64) as f32;
        }
    }

    pub fn process_f64(&mut self, samples: &mut [f64]) {
        for s in samples.iter_mut() {
            *s = self.biquad.process(*s);
        }
    }

    /// Filters one frame, carrying state into the next call.
    pub fn apply(&mut self, frame: &super::AudioFrame) -> super::AudioFrame {
        let mut out = frame.clone();
        self.process_in_place(&mut out.samples);
        out
    }
}

/// Free-function form of the streaming highpass.
pub fn highpass(frame: &super::AudioFrame, state: &mut Highpass) -> super::AudioFrame {
    state.apply(frame)
}

#[cfg(test)]
mod tests {
    use super::super::{rms, AudioFrame, FRAME_SIZE, SAMPLE_RATE};
    use super::*;

    /// Plain difference-equation filter written out from the coefficients.
    fn direct_filter(b: [f64; 3], a: [f64; 3], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for n in 0..x.len() {
            let xn = |k: usize| if n >= k { x[n - k] } else { 0.0 };
            let yn = |k: usize, y: &[f64]| if n >= k { y[n - k] } else { 0.0 };
            y[n] = b[0] * xn(0) + b[1] * xn(1) + b[2] * xn(2) - a[1] * yn(1, &y) - a[2] * yn(2, &y);
        }
        y
    }

    #[test]
    fn dc_is_removed_after_one_second() {
        let mut hp = Highpass::default();
        let (b, a) = hp.biquad().coefficients();
        let n = SAMPLE_RATE as usize;
        let input = vec![0.5f64; n + FRAME_SIZE];
        let oracle = direct_filter(b, a, &input);
        let tail: Vec<f32> = oracle[n..].iter().map(|&v| v as f32).collect();
        assert!(rms(&tail) < 0.01 * 0.5);

        // streaming through frames gives the same tail
        let mut last = AudioFrame::silent(0);
        for i in 0..(n + FRAME_SIZE) / FRAME_SIZE {
            let f = AudioFrame::from_samples(vec![0.5; FRAME_SIZE], i as u64);
            last = highpass(&f, &mut hp);
        }
        assert!(last.rms() < 0.005);
    }

    #[test]
    fn passband_at_1khz_is_flat() {
        let hp = Highpass::default();
        let mag = hp.biquad().magnitude_at(1000.0, SAMPLE_RATE as f64);
        let db = 20.0 * mag.log10();
        assert!(db.abs() < 0.5, "{db}");

        // measured on a streamed sine after the transient
        let mut hp = Highpass::default();
        let sr = SAMPLE_RATE as f64;
        let mut x: Vec<f32> = (0..32_000)
            .map(|i| (2.0 * PI * 1000.0 * i as f64 / sr).sin() as f32)
            .collect();
        hp.process_in_place(&mut x);
        let peak = x[16_000..].iter().fold(0f32, |m, v| m.max(v.abs())) as f64;
        assert!((20.0 * peak.log10()).abs() < 0.5);
    }

    #[test]
    fn cutoff_is_minus_three_db() {
        let hp = Highpass::default();
        let mag = hp.biquad().magnitude_at(80.0, SAMPLE_RATE as f64);
        assert!((20.0 * mag.log10() + 3.0103).abs() < 0.01);
    }

    #[test]
    fn zero_in_zero_out() {
        let mut hp = Highpass::default();
        let out = hp.apply(&AudioFrame::silent(3));
        assert!(out.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn streaming_matches_one_shot() {
        let mut state = 12345u64;
        let signal: Vec<f64> = (0..FRAME_SIZE * 40)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        let mut one = Highpass::default();
        let mut whole = signal.clone();
        one.process_f64(&mut whole);

        let mut streaming = Highpass::default();
        let mut chunked = Vec::new();
        for chunk in signal.chunks(FRAME_SIZE) {
            let mut c = chunk.to_vec();
            streaming.process_f64(&mut c);
            chunked.extend(c);
        }
        let max_err = whole
            .iter()
            .zip(&chunked)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1e-9);
    }
}
