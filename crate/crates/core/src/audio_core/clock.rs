use serde::{Deserialize, Serialize};

use super::{HOP, TICK_SECONDS};

/// Portion of the day, as `[start, end)` fractions, treated as night.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NightWindow {
    pub start: f64,
    pub end: f64,
}

impl Default for NightWindow {
    fn default() -> Self {
        Self {
            start: 0.5,
            end: 1.0,
        }
    }
}

impl NightWindow {
    pub fn contains(&self, day_fraction: f64) -> bool {
        if self.start <= self.end {
            day_fraction >= self.start && day_fraction < self.end
        } else {
            day_fraction >= self.start || day_fraction < self.end
        }
    }

    /// Fraction of the day that is night.
    pub fn length(&self) -> f64 {
        if self.start <= self.end {
            self.end - self.start
        } else {
            1.0 - self.start + self.end
        }
    }

    /// Position within the daylight period in `[0, 1)`, or `None` at night.
    pub fn daylight_phase(&self, day_fraction: f64) -> Option<f64> {
        if self.contains(day_fraction) {
            return None;
        }
        let day_len = 1.0 - self.length();
        if day_len <= 0.0 {
            return None;
        }
        let since_dawn = (day_fraction - self.end).rem_euclid(1.0);
        Some((since_dawn / day_len).clamp(0.0, 1.0))
    }
}

/// Simulation clock; one tick advances [`HOP`] samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub tick: u64,
    pub sample_rate: u32,
    pub day_length_s: f64,
    pub start_day_fraction: f64,
    pub night: NightWindow,
}

impl SimClock {
    pub fn new(day_length_s: f64, start_day_fraction: f64, night: NightWindow) -> Self {
        Self {
            tick: 0,
            sample_rate: super::SAMPLE_RATE,
            day_length_s,
            start_day_fraction,
            night,
        }
    }

    pub fn at(mut self, tick: u64) -> Self {
        self.tick = tick;
        self
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }

    pub fn seconds(&self) -> f64 {
        (self.tick * HOP as u64) as f64 / self.sample_rate as f64
    }

    pub fn dt(&self) -> f64 {
        TICK_SECONDS
    }

    pub fn day_fraction(&self) -> f64 {
        (self.start_day_fraction + self.seconds() / self.day_length_s).rem_euclid(1.0)
    }

    pub fn is_night(&self) -> bool {
        self.night.contains(self.day_fraction())
    }

    pub fn daylight_phase(&self) -> Option<f64> {
        self.night.daylight_phase(self.day_fraction())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seconds_follow_hop() {
        let c = SimClock::new(600.0, 0.0, NightWindow::default()).at(625);
        assert!((c.seconds() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn night_window_default() {
        let c = SimClock::new(100.0, 0.0, NightWindow::default());
        assert!(!c.is_night());
        assert!(c.at(ticks(49.0)).daylight_phase().is_some());
        assert!(c.at(ticks(50.0)).is_night());
        assert!(c.at(ticks(99.9)).is_night());
        assert!(!c.at(ticks(100.0)).is_night());
    }

    #[test]
    fn wrapping_window() {
        let w = NightWindow {
            start: 0.8,
            end: 0.2,
        };
        assert!(w.contains(0.9));
        assert!(w.contains(0.1));
        assert!(!w.contains(0.5));
        assert!((w.length() - 0.4).abs() < 1e-12);
        assert!((w.daylight_phase(0.2).unwrap()).abs() < 1e-12);
        assert!((w.daylight_phase(0.5).unwrap() - 0.5).abs() < 1e-12);
    }

    fn ticks(s: f64) -> u64 {
        (s * 62.5).round() as u64
    }
}
