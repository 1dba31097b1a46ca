use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio_core::SimClock;

const REAL_DAY_S: f64 = 86_400.0;

/// Solar harvest, consumption and the battery-to-liveliness map.
///
/// Costs and harvest are in real watts. When the simulated day is shorter than
/// a real one, energy flows are scaled by `real day / simulated day` (or by
/// `time_scale` if given).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyModel {
    pub battery_max_wh: f64,
    pub initial_battery_wh: f64,
    pub peak_harvest_w: f64,
    pub cost_idle_w: f64,
    pub cost_listen_w: f64,
    pub cost_emit_w: f64,
    /// Below this charge an agent will not start an emission.
    pub emit_floor_wh: f64,
    /// Emission-initiation rate at full charge, per second.
    pub liveliness_max_hz: f64,
    /// Multiplier on liveliness during daylight.
    pub day_activity: f64,
    pub time_scale: Option<f64>,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            battery_max_wh: 10.0,
            initial_battery_wh: 5.0,
            peak_harvest_w: 2.0,
            cost_idle_w: 0.05,
            cost_listen_w: 0.1,
            cost_emit_w: 1.0,
            emit_floor_wh: 0.5,
            liveliness_max_hz: 0.3,
            day_activity: 0.5,
            time_scale: None,
        }
    }
}

impl EnergyModel {
    /// Insolation: a half-sine over the daylight period, zero at night.
    pub fn harvest_w(&self, clock: &SimClock) -> f64 {
        clock.daylight_phase().map_or(0.0, |phase| {
            self.peak_harvest_w * (PI * phase).sin().max(0.0)
        })
    }

    pub fn time_scale(&self, clock: &SimClock) -> f64 {
        self.time_scale.unwrap_or(REAL_DAY_S / clock.day_length_s)
    }

    pub fn can_emit(&self, battery_wh: f64) -> bool {
        battery_wh >= self.emit_floor_wh && battery_wh > 0.0
    }

    /// Emission starts per second; non-decreasing in charge.
    pub fn liveliness(&self, battery_wh: f64) -> f64 {
        if !self.can_emit(battery_wh) {
            return 0.0;
        }
        self.liveliness_max_hz * (battery_wh / self.battery_max_wh).clamp(0.0, 1.0)
    }

    /// Liveliness with the day/night bias applied.
    pub fn emission_rate(&self, battery_wh: f64, clock: &SimClock) -> f64 {
        let bias = if clock.is_night() {
            1.0
        } else {
            self.day_activity
        };
        self.liveliness(battery_wh) * bias
    }
}

/// Battery charge with a running energy ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub wh: f64,
    pub harvested_wh: f64,
    pub consumed_wh: f64,
    /// Energy lost (positive) or not delivered (negative) to clamping.
    pub clamp_loss_wh: f64,
}

impl Battery {
    pub fn new(wh: f64) -> Self {
        Self {
            wh,
            harvested_wh: 0.0,
            consumed_wh: 0.0,
            clamp_loss_wh: 0.0,
        }
    }

    pub fn fraction(&self, model: &EnergyModel) -> f64 {
        (self.wh / model.battery_max_wh).clamp(0.0, 1.0)
    }
}

/// Advances the battery by one tick.
pub fn energy_step(battery: &mut Battery, clock: &SimClock, emitting: bool, model: &EnergyModel) {
    let hours = clock.dt() * model.time_scale(clock) / 3600.0;
    let harvest = model.harvest_w(clock) * hours;
    let draw = if emitting {
        model.cost_emit_w
    } else {
        model.cost_listen_w
    };
    let cost = (model.cost_idle_w + draw) * hours;
    let raw = battery.wh + harvest - cost;
    let clamped = raw.clamp(0.0, model.battery_max_wh);
    battery.harvested_wh += harvest;
    battery.consumed_wh += cost;
    battery.clamp_loss_wh += raw - clamped;
    battery.wh = clamped;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_core::{NightWindow, TICK_SECONDS};

    fn clock(day: f64) -> SimClock {
        SimClock::new(day, 0.0, NightWindow::default())
    }

    #[test]
    fn harvest_is_zero_at_night() {
        let m = EnergyModel::default();
        let c = clock(100.0);
        assert!(m.harvest_w(&c.at(4000)) == 0.0); // 64 s, night
        assert!(m.harvest_w(&c.at(1562)) > 1.99); // ~25 s, noon
    }

    #[test]
    fn full_day_without_emission_matches_integral() {
        let m = EnergyModel {
            cost_idle_w: 0.0,
            cost_listen_w: 0.0,
            initial_battery_wh: 0.0,
            battery_max_wh: 1e9,
            ..EnergyModel::default()
        };
        let day = 240.0;
        let mut b = Battery::new(0.0);
        let mut c = clock(day);
        let ticks = (day / TICK_SECONDS) as u64;
        for _ in 0..ticks {
            energy_step(&mut b, &c, false, &m);
            c.advance();
        }
        // half-sine over 12 real hours: peak * 12 h * 2 / pi
        let expected = m.peak_harvest_w * 12.0 * 2.0 / PI;
        assert!(
            (b.wh - expected).abs() < 1e-3 * expected,
            "{} vs {expected}",
            b.wh
        );

        let capped = EnergyModel::default();
        let mut b = Battery::new(8.0);
        let mut c = clock(day);
        for _ in 0..ticks {
            energy_step(
                &mut b,
                &c,
                false,
                &EnergyModel {
                    cost_idle_w: 0.0,
                    cost_listen_w: 0.0,
                    ..capped
                },
            );
            c.advance();
        }
        assert_eq!(b.wh, capped.battery_max_wh);
    }

    #[test]
    fn night_emission_drains_monotonically() {
        let m = EnergyModel::default();
        let mut b = Battery::new(0.3);
        let mut c = clock(100.0).at(3200);
        let mut last = b.wh;
        while b.wh > 0.0 {
            energy_step(&mut b, &c, true, &m);
            c.advance();
            assert!(b.wh < last || b.wh == 0.0);
            last = b.wh;
        }
        assert_eq!(b.wh, 0.0);
    }

    #[test]
    fn ledger_balances() {
        let m = EnergyModel::default();
        let mut b = Battery::new(m.initial_battery_wh);
        let start = b.wh;
        let mut c = clock(60.0);
        for i in 0..20_000u64 {
            energy_step(&mut b, &c, i % 7 < 3, &m);
            c.advance();
        }
        let lhs = b.harvested_wh - b.consumed_wh;
        let rhs = (b.wh - start) + b.clamp_loss_wh;
        assert!((lhs - rhs).abs() < 1e-9);
        assert!(b.wh >= 0.0 && b.wh <= m.battery_max_wh);
    }

    #[test]
    fn liveliness_is_monotone_and_floored() {
        let m = EnergyModel::default();
        assert_eq!(m.liveliness(0.0), 0.0);
        assert_eq!(m.liveliness(m.emit_floor_wh * 0.99), 0.0);
        let mut last = 0.0;
        for i in 0..=100 {
            let l = m.liveliness(i as f64 * 0.1);
            assert!(l >= last);
            last = l;
        }
    }
}
