use std::sync::OnceLock;

use super::{FRAME_SIZE, HIGHPASS_HZ, MEL_BANDS, NYQUIST_HZ, SAMPLE_RATE, SPECTRUM_BINS};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters on the Mel scale between the highpass cutoff and Nyquist.
///
/// `MEL_BANDS + 2` edge points are spaced evenly in Mel; band `b` rises from
/// edge `b` to its centre at edge `b + 1` and falls to zero at edge `b + 2`,
/// so neighbouring triangles overlap by half a band. Each filter's weights are
/// scaled to sum to one, which makes band energies comparable across bands of
/// different width.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    edges_hz: Vec<f64>,
    filters: Vec<SparseFilter>,
}

#[derive(Debug, Clone)]
struct SparseFilter {
    first_bin: usize,
    weights: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(bands: usize, low_hz: f64, high_hz: f64, fft_size: usize, sample_rate: f64) -> Self {
        let (lo, hi) = (hz_to_mel(low_hz), hz_to_mel(high_hz));
        let edges_hz: Vec<f64> = (0..bands + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (bands + 1) as f64))
            .collect();
        let bin_hz = sample_rate / fft_size as f64;
        let n_bins = fft_size / 2 + 1;

        let filters = (0..bands)
            .map(|b| {
                let (left, centre, right) = (edges_hz[b], edges_hz[b + 1], edges_hz[b + 2]);
                let mut first_bin = None;
                let mut weights = Vec::new();
                for k in 0..n_bins {
                    let f = k as f64 * bin_hz;
                    let w = if f > left && f <= centre {
                        (f - left) / (centre - left)
                    } else if f > centre && f < right {
                        (right - f) / (right - centre)
                    } else {
                        0.0
                    };
                    if w > 0.0 {
                        first_bin.get_or_insert(k);
                        weights.push(w);
                    } else if first_bin.is_some() {
                        break;
                    }
                }
                let total: f64 = weights.iter().sum();
                assert!(total > 0.0, "mel band {b} covers no FFT bin");
                weights.iter_mut().for_each(|w| *w /= total);
                SparseFilter {
                    first_bin: first_bin.unwrap_or(0),
                    weights,
                }
            })
            .collect();
        Self { edges_hz, filters }
    }

    /// The filterbank at the global rate and frame size.
    pub fn global() -> &'static MelFilterbank {
        static BANK: OnceLock<MelFilterbank> = OnceLock::new();
        BANK.get_or_init(|| {
            MelFilterbank::new(
                MEL_BANDS,
                HIGHPASS_HZ,
                NYQUIST_HZ,
                FRAME_SIZE,
                SAMPLE_RATE as f64,
            )
        })
    }

    pub fn bands(&self) -> usize {
        self.filters.len()
    }

    /// All `bands + 2` edge frequencies in Hz.
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }

    pub fn center_hz(&self, band: usize) -> f64 {
        self.edges_hz[band + 1]
    }

    /// The band whose triangle peaks closest to `hz`.
    pub fn band_for_hz(&self, hz: f64) -> usize {
        self.centers_hz()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - hz).abs().total_cmp(&(b.1 - hz).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Dense `bands x bins` weight row for `band`.
    pub fn dense_row(&self, band: usize, n_bins: usize) -> Vec<f64> {
        let mut row = vec![0.0; n_bins];
        let f = &self.filters[band];
        row[f.first_bin..f.first_bin + f.weights.len()].copy_from_slice(&f.weights);
        row
    }

    /// Sum of squared magnitudes weighted by each filter.
    pub fn apply(&self, magnitudes: &[f64]) -> MelSpectrum {
        let mut energies = [0.0; MEL_BANDS];
        self.apply_into(magnitudes, &mut energies);
        MelSpectrum { energies }
    }

    pub fn apply_into(&self, magnitudes: &[f64], out: &mut [f64]) {
        for (e, f) in out.iter_mut().zip(&self.filters) {
            *e = f
                .weights
                .iter()
                .zip(&magnitudes[f.first_bin..])
                .map(|(w, m)| w * m * m)
                .sum();
        }
    }
}

/// Per-band energies of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrum {
    pub energies: [f64; MEL_BANDS],
}

impl MelSpectrum {
    pub fn zero() -> Self {
        Self {
            energies: [0.0; MEL_BANDS],
        }
    }

    pub fn band_centers(&self) -> &'static [f64] {
        MelFilterbank::global().centers_hz()
    }

    pub fn argmax(&self) -> usize {
        self.energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn total(&self) -> f64 {
        self.energies.iter().sum()
    }
}

/// Mel energies of a magnitude spectrum from [`super::fft_magnitude`].
pub fn mel_energies(spectrum: &[f64]) -> MelSpectrum {
    debug_assert_eq!(spectrum.len(), SPECTRUM_BINS);
    MelFilterbank::global().apply(spectrum)
}
