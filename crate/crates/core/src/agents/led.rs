use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedMode {
    Off,
    Emitting,
    AcquiringRed,
    AcceptedBlue,
    DisruptingModulated,
}

/// Indicator light. `expires_at` is the tick at which a timed mode lapses to off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedState {
    pub mode: LedMode,
    pub intensity: f64,
    pub expires_at: Option<u64>,
}

impl Default for LedState {
    fn default() -> Self {
        Self {
            mode: LedMode::Off,
            intensity: 0.0,
            expires_at: None,
        }
    }
}

impl LedState {
    /// Sets a mode; returns true if the mode changed.
    pub fn set(&mut self, mode: LedMode, intensity: f64, expires_at: Option<u64>) -> bool {
        let changed = self.mode != mode;
        self.mode = mode;
        self.intensity = intensity.clamp(0.0, 1.0);
        self.expires_at = expires_at;
        changed
    }

    pub fn off(&mut self) -> bool {
        self.set(LedMode::Off, 0.0, None)
    }

    /// Lapses a timed mode; returns true if it switched off.
    pub fn expire(&mut self, tick: u64) -> bool {
        match self.expires_at {
            Some(t) if tick >= t => self.off(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blue_expires() {
        let mut led = LedState::default();
        assert!(led.set(LedMode::AcceptedBlue, 1.0, Some(10)));
        assert!(!led.expire(9));
        assert_eq!(led.mode, LedMode::AcceptedBlue);
        assert!(led.expire(10));
        assert_eq!(led.mode, LedMode::Off);
    }

    #[test]
    fn intensity_is_clamped() {
        let mut led = LedState::default();
        led.set(LedMode::DisruptingModulated, 3.0, None);
        assert_eq!(led.intensity, 1.0);
    }
}
