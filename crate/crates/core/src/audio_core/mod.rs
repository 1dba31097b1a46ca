//! Sample- and frequency-domain primitives shared by every agent and by the bus.
//!
//! All streaming happens in hops of [`HOP`] samples at [`SAMPLE_RATE`]; analysis
//! frames are [`FRAME_SIZE`] samples (two hops) so consecutive frames overlap by half.

mod clock;
mod filter;
mod mel;
mod spectrum;
mod wav;

pub use clock::{NightWindow, SimClock};
pub use filter::{highpass, Biquad, Highpass};
pub use mel::{hz_to_mel, mel_energies, mel_to_hz, MelFilterbank, MelSpectrum};
pub use spectrum::{fft_magnitude, hann_window, SpectrumAnalyzer};
pub use wav::{
    read_wav, read_wav_native, resample_linear, wav_bytes, write_wav, write_wav_f32, WavData,
    WavError,
};

/// Global simulation sample rate (Hz).
pub const SAMPLE_RATE: u32 = 32_000;
/// Analysis frame length in samples.
pub const FRAME_SIZE: usize = 1024;
/// Samples advanced per simulation tick.
pub const HOP: usize = 512;
/// Number of Mel bands.
pub const MEL_BANDS: usize = 128;
/// Number of magnitude bins returned by [`fft_magnitude`].
pub const SPECTRUM_BINS: usize = FRAME_SIZE / 2 + 1;
/// Cutoff of the input highpass, also the lower edge of the Mel filterbank.
pub const HIGHPASS_HZ: f64 = 80.0;
/// Upper edge of the Mel filterbank.
pub const NYQUIST_HZ: f64 = SAMPLE_RATE as f64 / 2.0;

/// Duration of one tick in seconds.
pub const TICK_SECONDS: f64 = HOP as f64 / SAMPLE_RATE as f64;

/// Number of whole ticks covering `seconds` (rounded up).
pub fn ticks_for(seconds: f64) -> u64 {
    (seconds / TICK_SECONDS - 1e-9).ceil().max(0.0) as u64
}

/// One analysis frame as heard by a listener at a given tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame {
    pub samples: Vec<f32>,
    pub frame_index: u64,
}

impl AudioFrame {
    pub fn silent(frame_index: u64) -> Self {
        Self {
            samples: vec![0.0; FRAME_SIZE],
            frame_index,
        }
    }

    pub fn from_samples(samples: Vec<f32>, frame_index: u64) -> Self {
        assert_eq!(
            samples.len(),
            FRAME_SIZE,
            "frame must hold FRAME_SIZE samples"
        );
        Self {
            samples,
            frame_index,
        }
    }

    /// The most recent hop, i.e. the samples that were new at this tick.
    pub fn newest_hop(&self) -> &[f32] {
        &self.samples[FRAME_SIZE - HOP..]
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }
}

/// Assembles overlapping frames from a stream of hops.
#[derive(Debug, Clone)]
pub struct FrameAssembler {
    buf: Vec<f32>,
}

impl Default for FrameAssembler {
    fn default() -> Self {
        Self {
            buf: vec![0.0; FRAME_SIZE],
        }
    }
}

impl FrameAssembler {
    pub fn push_hop(&mut self, hop: &[f32]) {
        debug_assert_eq!(hop.len(), HOP);
        self.buf.copy_within(HOP.., 0);
        self.buf[FRAME_SIZE - HOP..].copy_from_slice(hop);
    }

    pub fn frame(&self, frame_index: u64) -> AudioFrame {
        AudioFrame {
            samples: self.buf.clone(),
            frame_index,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.buf
    }
}

pub fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let sum: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (sum / samples.len() as f64).sqrt()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(amp: f64) -> f64 {
    20.0 * amp.log10()
}

/// Splits `pcm` into full analysis frames of [`FRAME_SIZE`] at [`HOP`] spacing.
/// A trailing partial frame is dropped.
pub fn frames(pcm: &[f32]) -> Vec<&[f32]> {
    if pcm.len() < FRAME_SIZE {
        return Vec::new();
    }
    (0..=(pcm.len() - FRAME_SIZE) / HOP)
        .map(|i| &pcm[i * HOP..i * HOP + FRAME_SIZE])
        .collect()
}

/// Like [`frames`] but always returns at least one frame for nonempty input.
pub fn padded_frames(pcm: &[f32]) -> Vec<Vec<f32>> {
    if pcm.is_empty() {
        return Vec::new();
    }
    if pcm.len() < FRAME_SIZE {
        let mut f = pcm.to_vec();
        f.resize(FRAME_SIZE, 0.0);
        return vec![f];
    }
    frames(pcm).into_iter().map(<[f32]>::to_vec).collect()
}
