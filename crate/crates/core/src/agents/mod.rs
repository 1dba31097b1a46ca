//! The three holon behaviours, their energy budget and indicator LED.

mod collector;
mod composer;
mod disruptor;
mod energy;
mod led;
mod profile;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use collector::{normalize_peak, spectral_flatness, Collector, CollectorParams};
pub use composer::{Composer, ComposerParams, NoteSpec, MAX_VOICES};
pub use disruptor::{Disruptor, DisruptorParams};
pub use energy::{energy_step, Battery, EnergyModel};
pub use led::{LedMode, LedState};
pub use profile::{occupancy_threshold, ProfileParams, SpectralProfile};

use crate::audio_core::{rms, AudioFrame, SimClock, SpectrumAnalyzer, HOP};
use crate::rng::{self, SimRng};

/// Something an agent wants written to the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEvent {
    pub event: &'static str,
    pub payload: Value,
}

impl AgentEvent {
    pub fn new(event: &'static str, payload: Value) -> Self {
        Self { event, payload }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Composer,
    Collector,
    Disruptor,
}

impl AgentKind {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Composer => "composer",
            AgentKind::Collector => "collector",
            AgentKind::Disruptor => "disruptor",
        }
    }
}

/// Behaviour parameters shared by every agent of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    pub energy: EnergyModel,
    pub composer: ComposerParams,
    pub collector: CollectorParams,
    pub disruptor: DisruptorParams,
}

/// Ticks after an emission during which an agent still ignores its input.
pub const GUARD_TICKS: u64 = 2;

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Behavior {
    Composer(Composer),
    Collector(Collector),
    Disruptor(Disruptor),
}

/// Audio scheduled on an agent's speaker.
#[derive(Debug, Clone)]
pub struct EmissionPort {
    /// Padded with silence to whole hops.
    pub pcm: Vec<f32>,
    /// Original length before padding.
    pub samples: usize,
    pub start_tick: u64,
    /// Last tick at which the emission is audible.
    pub end_tick: u64,
}

impl EmissionPort {
    pub fn new(mut pcm: Vec<f32>, start_tick: u64) -> Self {
        let samples = pcm.len();
        let hops = samples.div_ceil(HOP).max(1);
        pcm.resize(hops * HOP, 0.0);
        Self {
            pcm,
            samples,
            start_tick,
            end_tick: start_tick + hops as u64 - 1,
        }
    }

    pub fn hop(&self, tick: u64) -> Option<&[f32]> {
        if tick < self.start_tick || tick > self.end_tick {
            return None;
        }
        let i = (tick - self.start_tick) as usize * HOP;
        Some(&self.pcm[i..i + HOP])
    }
}

/// File an emission is stored under when it cannot be rebuilt from the log.
pub fn emission_file(agent_id: u32, start_tick: u64) -> String {
    format!("emissions/agent{agent_id:04}_t{start_tick:09}.wav")
}

/// What one agent did during one tick.
#[derive(Debug, Default)]
pub struct StepOutput {
    pub events: Vec<AgentEvent>,
    /// Set when a new emission was scheduled; the PCM is in the agent's port.
    pub scheduled: bool,
}

/// One holon.
pub struct Agent {
    pub id: u32,
    pub kind: AgentKind,
    pub position: [f64; 2],
    pub battery: Battery,
    pub led: LedState,
    pub behavior: Behavior,
    pub port: Option<EmissionPort>,
    params: AgentParams,
    rng: SimRng,
    analyzer: SpectrumAnalyzer,
}

impl Agent {
    pub fn new(
        id: u32,
        kind: AgentKind,
        position: [f64; 2],
        params: &AgentParams,
        seed: u64,
    ) -> Self {
        let behavior = match kind {
            AgentKind::Composer => Behavior::Composer(Composer::new(params.composer)),
            AgentKind::Collector => Behavior::Collector(Collector::new(params.collector)),
            AgentKind::Disruptor => Behavior::Disruptor(Disruptor::new(params.disruptor)),
        };
        Self {
            id,
            kind,
            position,
            battery: Battery::new(
                params
                    .energy
                    .initial_battery_wh
                    .clamp(0.0, params.energy.battery_max_wh),
            ),
            led: LedState::default(),
            behavior,
            port: None,
            params: *params,
            rng: rng::stream(seed, "agent", id as u64),
            analyzer: SpectrumAnalyzer::new(),
        }
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn composer(&self) -> Option<&Composer> {
        match &self.behavior {
            Behavior::Composer(c) => Some(c),
            _ => None,
        }
    }

    pub fn collector(&self) -> Option<&Collector> {
        match &self.behavior {
            Behavior::Collector(c) => Some(c),
            _ => None,
        }
    }

    /// The hop this agent's speaker plays at `tick`.
    pub fn emission_hop(&self, tick: u64) -> Option<&[f32]> {
        self.port.as_ref().and_then(|p| p.hop(tick))
    }

    fn busy(&self, tick: u64) -> bool {
        self.port.as_ref().is_some_and(|p| tick <= p.end_tick)
    }

    fn deaf(&self, tick: u64) -> bool {
        self.port
            .as_ref()
            .is_some_and(|p| tick <= p.end_tick + GUARD_TICKS)
    }

    /// Runs the behaviour on the tick's microphone frame, then books energy.
    pub fn step(&mut self, frame: &AudioFrame, clock: &SimClock) -> StepOutput {
        let tick = clock.tick;
        let mut out = StepOutput::default();
        let led_before = self.led.mode;
        self.led.expire(tick);
        if let (Some(p), LedMode::Emitting | LedMode::DisruptingModulated) =
            (&self.port, self.led.mode)
        {
            if tick > p.end_tick {
                self.led.off();
            }
        }

        let spectrum = (!self.deaf(tick)).then(|| self.analyzer.magnitude(&frame.samples));
        let busy = self.busy(tick);
        let energy = self.params.energy;
        let events = &mut out.events;
        let pcm = match &mut self.behavior {
            Behavior::Composer(c) => c
                .step(
                    clock,
                    spectrum.as_deref(),
                    busy,
                    &self.battery,
                    &energy,
                    &mut self.rng,
                    events,
                )
                .map(|note| note.synthesize()),
            Behavior::Collector(c) => c.step(
                frame,
                clock,
                spectrum.as_deref(),
                &self.battery,
                &energy,
                &mut self.led,
                &mut self.rng,
                events,
            ),
            Behavior::Disruptor(d) => d.step(
                frame,
                clock,
                spectrum.as_deref(),
                &self.battery,
                &energy,
                &mut self.led,
                &mut self.rng,
                events,
            ),
        };

        if let Some(pcm) = pcm.filter(|p| !p.is_empty()) {
            let port = EmissionPort::new(pcm, tick + 1);
            let mut extra = json!({ "start_tick": port.start_tick, "end_tick": port.end_tick });
            match self.kind {
                AgentKind::Composer => {
                    self.led.set(LedMode::Emitting, 1.0, None);
                }
                AgentKind::Collector => {
                    self.led.set(LedMode::Emitting, 1.0, None);
                    extra["file"] = json!(emission_file(self.id, port.start_tick));
                }
                AgentKind::Disruptor => {
                    extra["file"] = json!(emission_file(self.id, port.start_tick));
                }
            }
            if let Some(ev) = out.events.last_mut() {
                if let (Value::Object(dst), Value::Object(src)) = (&mut ev.payload, extra) {
                    dst.extend(src);
                }
            }
            self.port = Some(port);
            out.scheduled = true;
        }

        if self.led.mode == LedMode::DisruptingModulated {
            // the envelope of what is sounding this tick
            let level = self
                .emission_hop(tick)
                .map_or(0.0, |h| rms(h) * std::f64::consts::SQRT_2);
            self.led.intensity = (level / self.params.disruptor.output_peak).clamp(0.0, 1.0);
        }
        if self.led.mode != led_before {
            out.events
                .push(AgentEvent::new("led", json!({ "mode": self.led.mode })));
        }

        let emitting = self.emission_hop(tick).is_some();
        energy_step(&mut self.battery, clock, emitting, &self.params.energy);
        out
    }
}
