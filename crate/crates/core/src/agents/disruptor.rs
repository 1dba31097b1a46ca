use serde::{Deserialize, Serialize};
use serde_json::json;

use super::collector::normalize_peak;
use super::energy::{Battery, EnergyModel};
use super::led::{LedMode, LedState};
use super::AgentEvent;
use crate::audio_core::{AudioFrame, SimClock};
use crate::dsp_transforms::{TransformParams, TransformSpec};
use crate::features::{OnsetDetector, OnsetParams, Recorder, RecorderParams};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisruptorParams {
    pub onset: OnsetParams,
    pub capture: RecorderParams,
    pub transforms: TransformParams,
    pub output_peak: f64,
}

impl Default for DisruptorParams {
    fn default() -> Self {
        Self {
            onset: OnsetParams::default(),
            capture: RecorderParams {
                max_seconds: 5.0,
                ..RecorderParams::default()
            },
            transforms: TransformParams::default(),
            output_peak: 0.4,
        }
    }
}

/// Disruptor: captures what it hears and re-emits it transformed.
#[derive(Debug, Clone)]
pub struct Disruptor {
    pub params: DisruptorParams,
    detector: OnsetDetector,
    recorder: Recorder,
    was_deaf: bool,
}

impl Disruptor {
    pub fn new(params: DisruptorParams) -> Self {
        Self {
            detector: OnsetDetector::new(params.onset),
            recorder: Recorder::new(params.capture),
            was_deaf: false,
            params,
        }
    }

    pub fn is_capturing(&self) -> bool {
        self.recorder.is_recording()
    }

    /// One tick; returns transformed audio to emit from the next tick on.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        frame: &AudioFrame,
        clock: &SimClock,
        spectrum: Option<&[f64]>,
        battery: &Battery,
        energy: &EnergyModel,
        led: &mut LedState,
        rng: &mut SimRng,
        events: &mut Vec<AgentEvent>,
    ) -> Option<Vec<f32>> {
        let Some(spectrum) = spectrum else {
            self.was_deaf = true;
            return None;
        };
        let onset = if self.was_deaf {
            self.was_deaf = false;
            self.detector.resync(spectrum);
            false
        } else {
            self.detector.process(spectrum)
        };
        let hop = frame.newest_hop();
        let captured = if self.recorder.is_recording() {
            self.recorder.push(hop)
        } else if onset {
            events.push(AgentEvent::new("onset", json!({})));
            self.recorder.start(hop, clock.tick)
        } else {
            self.recorder.observe(hop);
            None
        };
        let rec = captured?;

        if !energy.can_emit(battery.wh) {
            events.push(AgentEvent::new(
                "capture_only",
                json!({ "samples": rec.pcm.len() }),
            ));
            return None;
        }
        let spec = TransformSpec::draw(rng, &self.params.transforms);
        let input = normalize_peak(&rec.pcm, 1.0);
        let out = normalize_peak(&spec.apply(&input), self.params.output_peak);
        led.set(LedMode::DisruptingModulated, 0.0, None);
        events.push(AgentEvent::new(
            "disrupt",
            json!({ "transform": spec, "input_samples": rec.pcm.len(), "samples": out.len() }),
        ));
        Some(out)
    }
}
