use serde::{Deserialize, Serialize};

use crate::audio_core::{MelSpectrum, MEL_BANDS, TICK_SECONDS};

/// Added to band energies before converting to dB.
const DB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileParams {
    pub long_half_life_s: f64,
    pub short_window_s: f64,
    /// Release rate of the per-band peak and floor trackers behind `ema_range`.
    pub range_release_db_per_s: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            long_half_life_s: 120.0,
            short_window_s: 2.0,
            range_release_db_per_s: 1.0,
        }
    }
}

fn band_db(e: f64) -> f64 {
    10.0 * (e + DB_FLOOR).log10()
}

/// A composer's model of its acoustic surroundings, per Mel band.
///
/// Long term: exponential moving averages of energy and of dynamic range
/// (distance between a slowly released peak and floor tracker), started as
/// plain running means. Short term:
/// the last `short_window_s` of frames, summarised by their per-band median.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub ema_energy: [f64; MEL_BANDS],
    pub ema_range: [f64; MEL_BANDS],
    peak_db: [f64; MEL_BANDS],
    floor_db: [f64; MEL_BANDS],
    recent: Vec<[f64; MEL_BANDS]>,
    cursor: usize,
    window: usize,
    alpha: f64,
    release_db: f64,
    frames: u64,
}

impl SpectralProfile {
    pub fn new(params: &ProfileParams) -> Self {
        let per_tick = TICK_SECONDS / params.long_half_life_s;
        Self {
            ema_energy: [0.0; MEL_BANDS],
            ema_range: [0.0; MEL_BANDS],
            peak_db: [0.0; MEL_BANDS],
            floor_db: [0.0; MEL_BANDS],
            recent: Vec::new(),
            cursor: 0,
            window: ((params.short_window_s / TICK_SECONDS).round() as usize).max(1),
            alpha: 1.0 - 0.5f64.powf(per_tick),
            release_db: params.range_release_db_per_s * TICK_SECONDS,
            frames: 0,
        }
    }

    /// Frames absorbed so far.
    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn update(&mut self, mel: &MelSpectrum) {
        let e = &mel.energies;
        if self.frames == 0 {
            self.ema_energy = *e;
            for ((&x, peak), floor) in e.iter().zip(&mut self.peak_db).zip(&mut self.floor_db) {
                *peak = band_db(x);
                *floor = *peak;
            }
        } else {
            // cumulative mean until the window is long enough for the EMA to take over
            let alpha = self.alpha.max(1.0 / (self.frames + 1) as f64);
            #[allow(clippy::needless_range_loop)]
            for b in 0..MEL_BANDS {
                self.ema_energy[b] += alpha * (e[b] - self.ema_energy[b]);
                let db = band_db(e[b]);
                self.peak_db[b] = db.max(self.peak_db[b] - self.release_db);
                self.floor_db[b] = db.min(self.floor_db[b] + self.release_db);
                let range = (self.peak_db[b] - self.floor_db[b]).max(0.0);
                self.ema_range[b] += alpha * (range - self.ema_range[b]);
            }
        }
        if self.recent.len() < self.window {
            self.recent.push(*e);
        } else {
            self.recent[self.cursor] = *e;
        }
        self.cursor = (self.cursor + 1) % self.window;
        self.frames += 1;
    }

    /// Per-band median energy over the trailing short window.
    pub fn short_term_energy(&self) -> [f64; MEL_BANDS] {
        let mut out = [0.0; MEL_BANDS];
        if self.recent.is_empty() {
            return out;
        }
        let mut col = vec![0.0; self.recent.len()];
        let mid = col.len() / 2;
        for (b, o) in out.iter_mut().enumerate() {
            for (c, frame) in col.iter_mut().zip(&self.recent) {
                *c = frame[b];
            }
            let (_, m, _) = col.select_nth_unstable_by(mid, f64::total_cmp);
            *o = *m;
        }
        out
    }

    /// Replaces the long-term state; for constructing scripted profiles.
    pub fn set_long_term(&mut self, ema_energy: [f64; MEL_BANDS], ema_range: [f64; MEL_BANDS]) {
        self.ema_energy = ema_energy;
        self.ema_range = ema_range;
        if self.frames == 0 {
            self.frames = 1;
        }
    }
}

/// Energy above which a band counts as occupied: the given percentile of
/// all bands' short-term energies, raised by `margin_db`.
pub fn occupancy_threshold(short_term: &[f64; MEL_BANDS], percentile: f64, margin_db: f64) -> f64 {
    let mut sorted = *short_term;
    sorted.sort_unstable_by(f64::total_cmp);
    let rank = ((percentile * MEL_BANDS as f64).ceil() as usize).clamp(1, MEL_BANDS);
    sorted[rank - 1] * 10f64.powf(margin_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(f: impl Fn(usize) -> f64) -> MelSpectrum {
        let mut m = MelSpectrum::zero();
        m.energies
            .iter_mut()
            .enumerate()
            .for_each(|(b, e)| *e = f(b));
        m
    }

    #[test]
    fn first_frame_initialises_ema() {
        let mut p = SpectralProfile::new(&ProfileParams::default());
        p.update(&spectrum(|b| b as f64));
        assert_eq!(p.ema_energy[7], 7.0);
        assert!(p.ema_range.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn early_ema_is_running_mean() {
        let mut p = SpectralProfile::new(&ProfileParams::default());
        for i in 0..10 {
            p.update(&spectrum(|_| i as f64));
        }
        assert!((p.ema_energy[0] - 4.5).abs() < 1e-12);
    }

    #[test]
    fn long_term_half_life() {
        let params = ProfileParams::default();
        let mut p = SpectralProfile::new(&params);
        p.update(&spectrum(|_| 1.0));
        p.set_long_term([1.0; MEL_BANDS], [0.0; MEL_BANDS]);
        p.frames = 1_000_000;
        let ticks = (params.long_half_life_s / TICK_SECONDS).round() as usize;
        for _ in 0..ticks {
            p.update(&spectrum(|_| 0.0));
        }
        assert!((p.ema_energy[0] - 0.5).abs() < 0.01, "{}", p.ema_energy[0]);
    }

    #[test]
    fn short_term_median_ignores_brief_spikes() {
        let mut p = SpectralProfile::new(&ProfileParams::default());
        for i in 0..125 {
            let spike = i % 10 == 0;
            p.update(&spectrum(|b| if spike && b == 3 { 100.0 } else { 1.0 }));
        }
        assert_eq!(p.short_term_energy()[3], 1.0);
        // a sustained level takes over once it fills half the window
        for _ in 0..63 {
            p.update(&spectrum(|b| if b == 3 { 100.0 } else { 1.0 }));
        }
        assert_eq!(p.short_term_energy()[3], 100.0);
    }

    #[test]
    fn range_grows_with_fluctuation() {
        let mut steady = SpectralProfile::new(&ProfileParams::default());
        let mut bursty = SpectralProfile::new(&ProfileParams::default());
        for i in 0..2000 {
            steady.update(&spectrum(|_| 1.0));
            bursty.update(&spectrum(|_| if i % 50 < 5 { 1.0 } else { 1e-4 }));
        }
        assert!(steady.ema_range[0] < 1e-9);
        assert!(bursty.ema_range[0] > 20.0, "{}", bursty.ema_range[0]);
    }

    #[test]
    fn threshold_is_quartile_plus_margin() {
        let short: [f64; MEL_BANDS] = std::array::from_fn(|b| (b + 1) as f64);
        let t = occupancy_threshold(&short, 0.25, 10.0);
        assert!((t - 320.0).abs() < 1e-9, "{t}");
        assert!(occupancy_threshold(&[0.0; MEL_BANDS], 0.25, 10.0) == 0.0);
    }
}
