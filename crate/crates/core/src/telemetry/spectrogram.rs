use std::fmt::Write;

use crate::audio_core::{frames, SpectrumAnalyzer, FRAME_SIZE, HOP, SAMPLE_RATE, SPECTRUM_BINS};

/// Image dynamic range below the loudest cell.
pub const IMAGE_RANGE_DB: f64 = 80.0;

/// STFT magnitudes, one row per analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub frames: usize,
    pub bins: usize,
    data: Vec<f64>,
}

pub fn spectrogram(pcm: &[f32]) -> Spectrogram {
    let mut an = SpectrumAnalyzer::new();
    let mut data = Vec::new();
    let mut spec = Vec::new();
    let fs = frames(pcm);
    for f in &fs {
        an.magnitude_into(f, &mut spec);
        data.extend_from_slice(&spec);
    }
    Spectrogram {
        frames: fs.len(),
        bins: SPECTRUM_BINS,
        data,
    }
}

impl Spectrogram {
    pub fn magnitude(&self, frame: usize, bin: usize) -> f64 {
        self.data[frame * self.bins + bin]
    }

    pub fn frame(&self, frame: usize) -> &[f64] {
        &self.data[frame * self.bins..(frame + 1) * self.bins]
    }

    pub fn bin_hz(bin: usize) -> f64 {
        bin as f64 * SAMPLE_RATE as f64 / FRAME_SIZE as f64
    }

    /// Loudest bin of each frame.
    pub fn ridge(&self) -> Vec<usize> {
        (0..self.frames)
            .map(|f| {
                self.frame(f)
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                    .map_or(0, |(i, _)| i)
            })
            .collect()
    }

    /// CSV with one row per frame: start time, then the magnitude of each bin
    /// in dB (floored at -200).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s");
        for b in 0..self.bins {
            write!(out, ",{:.2}", Self::bin_hz(b)).unwrap();
        }
        out.push_str("\r\n");
        for f in 0..self.frames {
            write!(out, "{}", (f * HOP) as f64 / SAMPLE_RATE as f64).unwrap();
            for v in self.frame(f) {
                write!(out, ",{:.1}", 20.0 * v.max(1e-10).log10()).unwrap();
            }
            out.push_str("\r\n");
        }
        out
    }

    /// Binary greyscale PNM (P5): one column per frame, row index = frequency
    /// bin ascending, brightness = dB over the top `IMAGE_RANGE_DB`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.frames.max(1), self.bins).into_bytes();
        let peak = self.data.iter().copied().fold(0.0, f64::max);
        let width = self.frames.max(1);
        let mut pixels = vec![0u8; width * self.bins];
        if peak > 0.0 {
            let top = 20.0 * peak.log10();
            for f in 0..self.frames {
                for (b, &m) in self.frame(f).iter().enumerate() {
                    let db = if m > 0.0 {
                        20.0 * m.log10()
                    } else {
                        f64::NEG_INFINITY
                    };
                    let v = ((db - (top - IMAGE_RANGE_DB)) / IMAGE_RANGE_DB).clamp(0.0, 1.0);
                    pixels[b * width + f] = (v * 255.0).round() as u8;
                }
            }
        }
        out.extend_from_slice(&pixels);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn tone_gives_flat_ridge() {
        let pcm: Vec<f32> = (0..SAMPLE_RATE as usize)
            .map(|i| (0.5 * (2.0 * PI * 1000.0 * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
            .collect();
        let s = spectrogram(&pcm);
        assert_eq!(s.frames, (pcm.len() - FRAME_SIZE) / HOP + 1);
        assert!(s.ridge().iter().all(|&b| b == 32));
        let img = s.to_pgm();
        let header = format!("P5\n{} {}\n255\n", s.frames, s.bins);
        assert!(img.starts_with(header.as_bytes()));
        let px = &img[header.len()..];
        assert!(px[32 * s.frames..33 * s.frames].iter().all(|&v| v == 255));
    }

    #[test]
    fn silence_is_uniform_minimum() {
        let s = spectrogram(&vec![0.0; 8192]);
        let img = s.to_pgm();
        let header = format!("P5\n{} {}\n255\n", s.frames, s.bins);
        assert!(img[header.len()..].iter().all(|&v| v == 0));
        assert_eq!(s.to_csv().lines().count(), s.frames + 1);
    }
}
