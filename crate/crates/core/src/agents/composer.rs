use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::energy::{Battery, EnergyModel};
use super::profile::{occupancy_threshold, ProfileParams, SpectralProfile};
use super::AgentEvent;
use crate::audio_core::{mel_energies, MelFilterbank, SimClock, MEL_BANDS, SAMPLE_RATE};
use crate::rng::SimRng;

pub const MAX_VOICES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComposerParams {
    pub profile: ProfileParams,
    pub amplitude: f64,
    /// Simultaneous tones per note, 1 to 3.
    pub voices: usize,
    /// Listening time before the first note.
    pub warmup_s: f64,
    pub min_rest_s: f64,
    /// A note that finds no free band for this long is dropped.
    pub max_wait_s: f64,
    pub occupancy_percentile: f64,
    pub occupancy_margin_db: f64,
    pub min_note_s: f64,
    pub max_note_s: f64,
    /// Band range (dB) at and above which ramps are shortest.
    pub staccato_range_db: f64,
    pub fast_ramp_s: f64,
    pub slow_ramp_s: f64,
}

impl Default for ComposerParams {
    fn default() -> Self {
        Self {
            profile: ProfileParams::default(),
            amplitude: 0.3,
            voices: 1,
            warmup_s: 2.0,
            min_rest_s: 0.5,
            max_wait_s: 5.0,
            occupancy_percentile: 0.25,
            occupancy_margin_db: 10.0,
            min_note_s: 0.5,
            max_note_s: 3.0,
            staccato_range_db: 60.0,
            fast_ramp_s: 0.005,
            slow_ramp_s: 0.4,
        }
    }
}

impl ComposerParams {
    /// Attack (and decay) length for a band with the given dynamic range.
    pub fn ramp_seconds(&self, range_db: f64) -> f64 {
        let t = (range_db / self.staccato_range_db).clamp(0.0, 1.0);
        self.slow_ramp_s + (self.fast_ramp_s - self.slow_ramp_s) * t
    }

    pub fn note_seconds(&self, battery_fraction: f64) -> f64 {
        self.min_note_s + (self.max_note_s - self.min_note_s) * battery_fraction.clamp(0.0, 1.0)
    }
}

/// Everything needed to re-synthesise a note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteSpec {
    pub bins: Vec<usize>,
    pub freqs_hz: Vec<f64>,
    pub amplitude: f64,
    pub length: usize,
    pub attack: usize,
    pub decay: usize,
}

impl NoteSpec {
    /// Sum of equal-amplitude sines under a linear attack/sustain/decay envelope.
    pub fn synthesize(&self) -> Vec<f32> {
        let sr = SAMPLE_RATE as f64;
        let per_voice = self.amplitude / self.freqs_hz.len().max(1) as f64;
        let n = self.length;
        (0..n)
            .map(|i| {
                let env = if i < self.attack {
                    i as f64 / self.attack as f64
                } else if i + self.decay >= n {
                    (n - i) as f64 / (self.decay.max(1)) as f64
                } else {
                    1.0
                };
                let tone: f64 = self
                    .freqs_hz
                    .iter()
                    .map(|f| (2.0 * PI * f * i as f64 / sr).sin())
                    .sum();
                (per_voice * env.min(1.0) * tone) as f32
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Choice {
    Emit(usize),
    /// The band looks free on average but is sounding right now.
    Collision,
    NoFreeBand,
}

/// Composer/generator: listens, keeps a spectral profile, and fills quiet bands.
#[derive(Debug, Clone)]
pub struct Composer {
    pub params: ComposerParams,
    pub profile: SpectralProfile,
    pub preferred_bin: Option<usize>,
    pending_since: Option<u64>,
    wait_logged: bool,
    rest_until: u64,
}

impl Composer {
    pub fn new(params: ComposerParams) -> Self {
        Self {
            profile: SpectralProfile::new(&params.profile),
            params,
            preferred_bin: None,
            pending_since: None,
            wait_logged: false,
            rest_until: 0,
        }
    }

    pub fn is_waiting(&self) -> bool {
        self.pending_since.is_some()
    }

    fn warm(&self) -> bool {
        self.profile.frames() as f64 * crate::audio_core::TICK_SECONDS >= self.params.warmup_s
    }

    fn choose(&self, short: &[f64; MEL_BANDS], now: &[f64; MEL_BANDS], threshold: f64) -> Choice {
        let free = |b: usize| short[b] <= threshold && now[b] <= threshold;
        if let Some(p) = self.preferred_bin {
            if short[p] <= threshold {
                return if now[p] <= threshold {
                    Choice::Emit(p)
                } else {
                    Choice::Collision
                };
            }
        }
        self.quietest(free, &[])
            .map_or(Choice::NoFreeBand, Choice::Emit)
    }

    fn quietest(&self, free: impl Fn(usize) -> bool, exclude: &[usize]) -> Option<usize> {
        (0..MEL_BANDS)
            .filter(|&b| free(b) && !exclude.contains(&b))
            .min_by(|&a, &b| {
                self.profile.ema_energy[a]
                    .total_cmp(&self.profile.ema_energy[b])
                    .then(a.cmp(&b))
            })
    }

    /// One tick. `spectrum` is `None` while the agent is deaf (its own
    /// emission is sounding); `busy` is true while an emission is scheduled or
    /// playing. Returns a note to emit from the next tick on.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        clock: &SimClock,
        spectrum: Option<&[f64]>,
        busy: bool,
        battery: &Battery,
        energy: &EnergyModel,
        rng: &mut SimRng,
        events: &mut Vec<AgentEvent>,
    ) -> Option<NoteSpec> {
        let tick = clock.tick;
        let draw: f64 = rng.random();
        let mel = spectrum.map(mel_energies);
        if let Some(m) = &mel {
            self.profile.update(m);
        }
        if busy {
            return None;
        }

        if self.pending_since.is_none() && tick >= self.rest_until && self.warm() {
            let rate = energy.emission_rate(battery.wh, clock);
            if draw < 1.0 - (-rate * clock.dt()).exp() {
                self.pending_since = Some(tick);
                self.wait_logged = false;
            }
        }
        let since = self.pending_since?;
        if !energy.can_emit(battery.wh) {
            self.pending_since = None;
            return None;
        }
        let waited_s = (tick - since) as f64 * clock.dt();
        let mel = mel?;

        let short = self.profile.short_term_energy();
        let threshold = occupancy_threshold(
            &short,
            self.params.occupancy_percentile,
            self.params.occupancy_margin_db,
        );
        let target = match self.choose(&short, &mel.energies, threshold) {
            Choice::Emit(b) => b,
            blocked => {
                if waited_s >= self.params.max_wait_s {
                    self.pending_since = None;
                    events.push(AgentEvent::new("give_up", json!({ "waited_s": waited_s })));
                } else if !self.wait_logged {
                    self.wait_logged = true;
                    let reason = if blocked == Choice::Collision {
                        "collision"
                    } else {
                        "no_free_band"
                    };
                    events.push(AgentEvent::new(
                        "wait",
                        json!({ "reason": reason, "preferred_bin": self.preferred_bin, "threshold": threshold }),
                    ));
                }
                return None;
            }
        };
        if self.preferred_bin.is_none() {
            self.preferred_bin = Some(target);
            events.push(AgentEvent::new(
                "prefer",
                json!({ "bin": target, "freq_hz": MelFilterbank::global().center_hz(target) }),
            ));
        }

        let mut bins = vec![target];
        let free = |b: usize| short[b] <= threshold && mel.energies[b] <= threshold;
        while bins.len() < self.params.voices.clamp(1, MAX_VOICES) {
            match self.quietest(free, &bins) {
                Some(b) => bins.push(b),
                None => break,
            }
        }
        let note = self.note(&bins, battery.fraction(energy));
        let end_tick = tick + note.length.div_ceil(crate::audio_core::HOP) as u64;
        self.pending_since = None;
        self.rest_until = end_tick + crate::audio_core::ticks_for(self.params.min_rest_s);
        events.push(AgentEvent::new(
            "emit",
            json!({
                "bin": target,
                "preferred_bin": self.preferred_bin,
                "threshold": threshold,
                "waited_s": waited_s,
                "start_tick": tick + 1,
                "end_tick": end_tick,
                "note": note,
            }),
        ));
        Some(note)
    }

    fn note(&self, bins: &[usize], battery_fraction: f64) -> NoteSpec {
        let sr = SAMPLE_RATE as f64;
        let bank = MelFilterbank::global();
        let length = (self.params.note_seconds(battery_fraction) * sr).round() as usize;
        let mut ramp =
            (self.params.ramp_seconds(self.profile.ema_range[bins[0]]) * sr).round() as usize;
        if 2 * ramp > length {
            ramp = length / 2;
        }
        NoteSpec {
            bins: bins.to_vec(),
            freqs_hz: bins.iter().map(|&b| bank.center_hz(b)).collect(),
            amplitude: self.params.amplitude,
            length,
            attack: ramp,
            decay: ramp,
        }
    }
}
