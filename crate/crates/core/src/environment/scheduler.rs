use std::collections::BTreeMap;
use std::fmt::Write;

use rayon::prelude::*;
use serde_json::json;

use super::bus::{mix_into, ActiveSource, Listener};
use super::{LogRecord, Scenario, ScenarioError, Source};
use crate::agents::{emission_file, Agent, AgentKind, StepOutput};
use crate::audio_core::{
    AudioFrame, FrameAssembler, Highpass, MelFilterbank, SimClock, SpectrumAnalyzer, HOP,
    MEL_BANDS, SAMPLE_RATE, TICK_SECONDS,
};
use crate::telemetry::{attribute, OccupationMatrix, COMPONENTS, FLOOR};

/// A `clock` record is logged every this many ticks (10 s).
pub const CLOCK_PERIOD_TICKS: u64 = 625;

/// Everything a run produces, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub ticks: u64,
    pub records: Vec<LogRecord>,
    /// Render microphone name and its recording.
    pub renders: Vec<(String, Vec<f32>)>,
    /// Played-back and transformed audio keyed by run-relative path.
    pub emissions: BTreeMap<String, Vec<f32>>,
    /// Per-window CSV of battery levels, activity and event counts.
    pub metrics_csv: String,
    /// Source-truth band energies per composer, when enabled.
    pub occupation: Option<BTreeMap<u32, OccupationMatrix>>,
}

/// Worker count: `HOLONSIM_THREADS` if set, capped by the machine.
pub fn worker_threads() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("HOLONSIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(available, |n| n.min(available))
}

/// Runs the scenario with [`worker_threads`] workers.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, ScenarioError> {
    run_scenario_with(scenario, worker_threads())
}

/// Splits what a composer hears into per-channel and noise-floor energy.
struct TruthProbe {
    filters: [Highpass; COMPONENTS],
    frames: [FrameAssembler; COMPONENTS],
    analyzer: SpectrumAnalyzer,
    mix: Vec<f64>,
    hop: Vec<f32>,
    spectrum: Vec<f64>,
    matrix: OccupationMatrix,
}

impl TruthProbe {
    fn new(window_s: f64) -> Self {
        Self {
            filters: Default::default(),
            frames: Default::default(),
            analyzer: SpectrumAnalyzer::new(),
            mix: vec![0.0; HOP],
            hop: vec![0.0; HOP],
            spectrum: Vec::new(),
            matrix: OccupationMatrix::new(window_s),
        }
    }

    fn mel(&mut self, samples: &[f32], out: &mut [f64; MEL_BANDS]) {
        self.analyzer.magnitude_into(samples, &mut self.spectrum);
        MelFilterbank::global().apply_into(&self.spectrum, out);
    }

    fn observe(
        &mut self,
        tick: u64,
        listener: &Listener,
        d_ref_m: f64,
        active: &[ActiveSource],
        frame: &AudioFrame,
    ) {
        for c in 0..COMPONENTS {
            if c == FLOOR {
                self.mix.copy_from_slice(listener.noise_hop());
            } else {
                mix_into(
                    listener.position,
                    d_ref_m,
                    active,
                    |s| s.channel.index() == c,
                    &mut self.mix,
                );
            }
            self.filters[c].process_f64(&mut self.mix);
            for (h, m) in self.hop.iter_mut().zip(&self.mix) {
                *h = *m as f32;
            }
            self.frames[c].push_hop(&self.hop);
        }
        let mut parts = [[0.0; MEL_BANDS]; COMPONENTS];
        for (c, part) in parts.iter_mut().enumerate() {
            let samples = self.frames[c].samples().to_vec();
            self.mel(&samples, part);
        }
        let mut total = [0.0; MEL_BANDS];
        self.mel(&frame.samples, &mut total);
        self.matrix.add(tick, &attribute(&total, &parts));
    }
}

struct Slot {
    agent: Agent,
    listener: Listener,
    probe: Option<TruthProbe>,
}

impl Slot {
    fn step(&mut self, clock: &SimClock, d_ref_m: f64, active: &[ActiveSource]) -> StepOutput {
        self.listener.mix_tick(d_ref_m, active);
        let frame = self.listener.frame(clock.tick);
        if let Some(p) = &mut self.probe {
            p.observe(clock.tick, &self.listener, d_ref_m, active, &frame);
        }
        self.agent.step(&frame, clock)
    }
}

const KINDS: [AgentKind; 3] = [
    AgentKind::Composer,
    AgentKind::Collector,
    AgentKind::Disruptor,
];
const COUNTED: [&str; 8] = [
    "emit", "wait", "give_up", "onset", "accept", "reject", "playback", "disrupt",
];

#[derive(Default)]
struct Window {
    emitting_ticks: [u64; 3],
    events: [u64; COUNTED.len()],
}

fn kind_index(kind: AgentKind) -> usize {
    KINDS.iter().position(|&k| k == kind).unwrap_or(0)
}

fn metrics_header() -> String {
    let mut h = String::from("window,start_s,end_s");
    for k in KINDS {
        write!(h, ",battery_wh_{}", k.name()).unwrap();
    }
    for k in KINDS {
        write!(h, ",emitting_s_{}", k.name()).unwrap();
    }
    for e in COUNTED {
        write!(h, ",{e}").unwrap();
    }
    h.push_str("\r\n");
    h
}

fn flush_window(csv: &mut String, index: u64, from: u64, to: u64, w: &Window, slots: &[Slot]) {
    write!(
        csv,
        "{index},{},{}",
        from as f64 * TICK_SECONDS,
        to as f64 * TICK_SECONDS
    )
    .unwrap();
    for k in KINDS {
        let levels: Vec<f64> = slots
            .iter()
            .filter(|s| s.agent.kind == k)
            .map(|s| s.agent.battery.wh)
            .collect();
        if levels.is_empty() {
            csv.push(',');
        } else {
            write!(csv, ",{}", levels.iter().sum::<f64>() / levels.len() as f64).unwrap();
        }
    }
    for t in w.emitting_ticks {
        write!(csv, ",{}", t as f64 * TICK_SECONDS).unwrap();
    }
    for n in w.events {
        write!(csv, ",{n}").unwrap();
    }
    csv.push_str("\r\n");
}

/// Runs the scenario on `threads` workers; the result does not depend on
/// the worker count.
pub fn run_scenario_with(scenario: &Scenario, threads: usize) -> Result<RunOutput, ScenarioError> {
    scenario.validate()?;
    let seed = scenario.seed;
    let ticks = scenario.ticks();
    let d_ref = scenario.d_ref_m;
    let params = scenario.agent_params();
    let telemetry = &scenario.telemetry;

    let sources = scenario
        .sources
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            Source::build(spec, seed, i as u64).map_err(|source| ScenarioError::Audio {
                key: format!("sources[{i}].signal.path"),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut slots: Vec<Slot> = scenario
        .roster()
        .into_iter()
        .enumerate()
        .map(|(i, (kind, position))| {
            let id = i as u32;
            Slot {
                agent: Agent::new(id, kind, position, &params, seed),
                listener: Listener::new(
                    position,
                    scenario.noise_floor_db,
                    seed,
                    "listener",
                    id as u64,
                    true,
                ),
                probe: (telemetry.occupation && kind == AgentKind::Composer)
                    .then(|| TruthProbe::new(telemetry.window_s)),
            }
        })
        .collect();
    let mut renders: Vec<Listener> = scenario
        .renders
        .iter()
        .enumerate()
        .map(|(r, spec)| {
            Listener::new(
                spec.position,
                scenario.noise_floor_db,
                seed,
                "render",
                r as u64,
                false,
            )
        })
        .collect();
    let mut rendered: Vec<Vec<f32>> = vec![Vec::with_capacity(ticks as usize * HOP); renders.len()];

    let pool = (threads > 1)
        .then(|| rayon::ThreadPoolBuilder::new().num_threads(threads).build())
        .transpose()
        .map_err(|e| ScenarioError::Invalid {
            key: "HOLONSIM_THREADS".into(),
            message: e.to_string(),
        })?;

    let mut records = vec![LogRecord::system(
        0,
        "boot",
        json!({
            "seed": seed,
            "ticks": ticks,
            "agents": slots.len(),
            "sources": sources.len(),
            "sample_rate": SAMPLE_RATE,
            "hop": HOP,
        }),
    )];
    for s in &slots {
        records.push(LogRecord {
            tick: 0,
            agent_id: Some(s.agent.id),
            kind: s.agent.kind.name().to_string(),
            event: "boot".to_string(),
            payload: json!({ "position": s.agent.position, "battery_wh": s.agent.battery.wh }),
        });
    }

    let window_of = |tick: u64| (tick as f64 * TICK_SECONDS / telemetry.window_s).floor() as u64;
    let mut window_start = 0;
    let mut metrics_csv = metrics_header();
    let mut window = Window::default();
    let mut emissions = BTreeMap::new();
    let mut source_hops: Vec<Vec<f32>> = vec![vec![0.0; HOP]; sources.len()];
    let mut agent_hops: Vec<Vec<f32>> = Vec::new();
    let base_clock = scenario.clock();

    for tick in 0..ticks {
        let clock = base_clock.at(tick);
        if tick % CLOCK_PERIOD_TICKS == 0 {
            records.push(LogRecord::system(
                tick,
                "clock",
                json!({ "seconds": clock.seconds(), "day_fraction": clock.day_fraction(), "night": clock.is_night() }),
            ));
        }

        let mut active: Vec<(usize, [f64; 2], super::Channel)> = Vec::new();
        for (i, src) in sources.iter().enumerate() {
            if src.hop(tick, &mut source_hops[i]) {
                active.push((i, src.spec.position, src.spec.channel));
            }
        }
        agent_hops.clear();
        let mut speaking = Vec::new();
        for s in &slots {
            if let Some(h) = s.agent.emission_hop(tick) {
                agent_hops.push(h.to_vec());
                speaking.push((s.agent.position, s.agent.kind));
                window.emitting_ticks[kind_index(s.agent.kind)] += 1;
            }
        }
        let mut bus: Vec<ActiveSource> = active
            .iter()
            .map(|&(i, position, channel)| ActiveSource {
                position,
                channel,
                hop: &source_hops[i],
            })
            .collect();
        bus.extend(
            speaking
                .iter()
                .zip(&agent_hops)
                .map(|(&(position, _), hop)| ActiveSource {
                    position,
                    channel: super::Channel::Cyberphony,
                    hop,
                }),
        );

        let outputs: Vec<StepOutput> = match &pool {
            Some(pool) => pool.install(|| {
                slots
                    .par_iter_mut()
                    .map(|s| s.step(&clock, d_ref, &bus))
                    .collect()
            }),
            None => slots
                .iter_mut()
                .map(|s| s.step(&clock, d_ref, &bus))
                .collect(),
        };
        for (r, l) in renders.iter_mut().enumerate() {
            l.mix_tick(d_ref, &bus);
            rendered[r].extend_from_slice(l.hop());
        }

        for (s, out) in slots.iter().zip(outputs) {
            let a = &s.agent;
            if out.scheduled && a.kind != AgentKind::Composer {
                if let Some(p) = &a.port {
                    emissions.insert(
                        emission_file(a.id, p.start_tick),
                        p.pcm[..p.samples].to_vec(),
                    );
                }
            }
            for ev in out.events {
                if let Some(k) = COUNTED.iter().position(|&e| e == ev.event) {
                    window.events[k] += 1;
                }
                records.push(LogRecord {
                    tick,
                    agent_id: Some(a.id),
                    kind: a.kind.name().to_string(),
                    event: ev.event.to_string(),
                    payload: ev.payload,
                });
            }
        }

        if tick + 1 == ticks || window_of(tick + 1) != window_of(tick) {
            flush_window(
                &mut metrics_csv,
                window_of(tick),
                window_start,
                tick + 1,
                &window,
                &slots,
            );
            window = Window::default();
            window_start = tick + 1;
        }
    }

    records.push(LogRecord::system(
        ticks,
        "clock",
        json!({ "seconds": ticks as f64 * TICK_SECONDS, "final": true }),
    ));

    let occupation = telemetry.occupation.then(|| {
        slots
            .iter_mut()
            .filter_map(|s| s.probe.take().map(|p| (s.agent.id, p.matrix)))
            .collect()
    });
    Ok(RunOutput {
        ticks,
        records,
        renders: scenario
            .renders
            .iter()
            .map(|r| r.name.clone())
            .zip(rendered)
            .collect(),
        emissions,
        metrics_csv,
        occupation,
    })
}
