use std::collections::BTreeMap;

use super::bus::{ActiveSource, Listener};
use super::{Channel, LogRecord, RunError, Scenario, ScenarioError, Source};
use crate::agents::{EmissionPort, NoteSpec};
use crate::audio_core::HOP;

fn corrupt(msg: impl Into<String>) -> RunError {
    RunError::Corrupt(msg.into())
}

/// Rebuilds every agent's speaker output from the log. Composer notes are
/// re-synthesised from their logged parameters; other emissions come from
/// `load`, keyed by the file named in the record.
type AgentPorts = BTreeMap<u32, ([f64; 2], Vec<EmissionPort>)>;

fn agent_ports(
    records: &[LogRecord],
    mut load: impl FnMut(&str) -> Result<Vec<f32>, RunError>,
) -> Result<AgentPorts, RunError> {
    let mut agents = AgentPorts::new();
    for r in records {
        let Some(id) = r.agent_id else { continue };
        let at = || format!("tick {} agent {id} {}", r.tick, r.event);
        match r.event.as_str() {
            "boot" => {
                let pos: [f64; 2] = serde_json::from_value(r.payload["position"].clone())
                    .map_err(|e| corrupt(format!("{}: {e}", at())))?;
                agents.insert(id, (pos, Vec::new()));
            }
            "emit" | "playback" | "disrupt" => {
                let start = r.payload["start_tick"]
                    .as_u64()
                    .ok_or_else(|| corrupt(format!("{}: no start_tick", at())))?;
                let pcm = if r.event == "emit" {
                    let note: NoteSpec = serde_json::from_value(r.payload["note"].clone())
                        .map_err(|e| corrupt(format!("{}: {e}", at())))?;
                    note.synthesize()
                } else {
                    let file = r.payload["file"]
                        .as_str()
                        .ok_or_else(|| corrupt(format!("{}: no file", at())))?;
                    load(file)?
                };
                agents
                    .get_mut(&id)
                    .ok_or_else(|| corrupt(format!("{}: agent never booted", at())))?
                    .1
                    .push(EmissionPort::new(pcm, start));
            }
            _ => {}
        }
    }
    Ok(agents)
}

/// Re-renders the scenario's render microphones from the log alone.
pub fn replay_renders(
    scenario: &Scenario,
    records: &[LogRecord],
    load: impl FnMut(&str) -> Result<Vec<f32>, RunError>,
) -> Result<Vec<(String, Vec<f32>)>, RunError> {
    let ticks = records
        .iter()
        .find(|r| r.is_system() && r.event == "boot")
        .and_then(|r| r.payload["ticks"].as_u64())
        .ok_or_else(|| corrupt("log has no boot record"))?;
    let seed = scenario.seed;
    let sources = scenario
        .sources
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            Source::build(spec, seed, i as u64).map_err(|source| {
                RunError::Scenario(ScenarioError::Audio {
                    key: format!("sources[{i}].signal.path"),
                    source,
                })
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let agents = agent_ports(records, load)?;
    let mut cursors = vec![0usize; agents.len()];

    let mut listeners: Vec<Listener> = scenario
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
    let mut rendered: Vec<Vec<f32>> =
        vec![Vec::with_capacity(ticks as usize * HOP); listeners.len()];
    let mut source_hops = vec![vec![0.0f32; HOP]; sources.len()];

    for tick in 0..ticks {
        let mut live = Vec::new();
        for (i, src) in sources.iter().enumerate() {
            if src.hop(tick, &mut source_hops[i]) {
                live.push(i);
            }
        }
        let mut bus: Vec<ActiveSource> = live
            .iter()
            .map(|&i| ActiveSource {
                position: sources[i].spec.position,
                channel: sources[i].spec.channel,
                hop: &source_hops[i],
            })
            .collect();
        for ((pos, ports), cur) in agents.values().zip(cursors.iter_mut()) {
            while *cur + 1 < ports.len() && ports[*cur + 1].start_tick <= tick {
                *cur += 1;
            }
            if let Some(hop) = ports.get(*cur).and_then(|p| p.hop(tick)) {
                bus.push(ActiveSource {
                    position: *pos,
                    channel: Channel::Cyberphony,
                    hop,
                });
            }
        }
        for (l, out) in listeners.iter_mut().zip(rendered.iter_mut()) {
            l.mix_tick(scenario.d_ref_m, &bus);
            out.extend_from_slice(l.hop());
        }
    }
    Ok(scenario
        .renders
        .iter()
        .map(|r| r.name.clone())
        .zip(rendered)
        .collect())
}
