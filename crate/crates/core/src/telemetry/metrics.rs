use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Serialize;

use super::OccupationMatrix;
use crate::audio_core::TICK_SECONDS;
use crate::environment::LogRecord;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SwitchCount {
    pub departures: usize,
    pub returns: usize,
}

impl SwitchCount {
    pub fn total(&self) -> usize {
        self.departures + self.returns
    }
}

/// How composers used the spectrum over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationMetrics {
    /// Share of composer emission time spent in bands already occupied by
    /// non-machine sound; `None` when there was nothing to measure.
    pub overlap_ratio: Option<f64>,
    pub emission_seconds: f64,
    pub occupied_seconds: f64,
    /// Distinct bands used by composers.
    pub niche_spread: usize,
    pub bins_used: Vec<usize>,
    /// Per composer: departures from and returns to its preferred band.
    pub switch_events: BTreeMap<u32, SwitchCount>,
    /// Set when the log was truncated or the truth matrices do not cover it.
    pub partial: bool,
}

fn field(r: &LogRecord, key: &str) -> Option<u64> {
    r.payload.get(key).and_then(|v| v.as_u64())
}

/// Computes the metrics from the event log and per-composer truth matrices.
/// `complete` is the log's completeness flag.
pub fn occupation_metrics(
    records: &[LogRecord],
    truth: Option<&BTreeMap<u32, OccupationMatrix>>,
    complete: bool,
) -> OccupationMetrics {
    let mut partial = !complete;
    let mut bins = BTreeSet::new();
    let mut switches: BTreeMap<u32, SwitchCount> = BTreeMap::new();
    let mut away: BTreeMap<u32, bool> = BTreeMap::new();
    let mut emitted_ticks = 0u64;
    let mut occupied_ticks = 0u64;
    let mut measured = false;
    // notes still sounding when the run stopped count up to its last tick
    let run_ticks = records
        .iter()
        .find(|r| r.is_system() && r.event == "boot")
        .and_then(|r| field(r, "ticks"));

    for r in records
        .iter()
        .filter(|r| r.kind == "composer" && r.event == "emit")
    {
        let (Some(id), Some(bin), Some(pref)) =
            (r.agent_id, field(r, "bin"), field(r, "preferred_bin"))
        else {
            partial = true;
            continue;
        };
        let bin = bin as usize;
        bins.insert(bin);
        let sw = switches.entry(id).or_default();
        let is_away = away.entry(id).or_insert(false);
        if bin as u64 != pref && !*is_away {
            sw.departures += 1;
            *is_away = true;
        } else if bin as u64 == pref && *is_away {
            sw.returns += 1;
            *is_away = false;
        }

        let Some(m) = truth.and_then(|t| t.get(&id)) else {
            continue;
        };
        let (Some(start), Some(end), Some(threshold)) = (
            field(r, "start_tick"),
            field(r, "end_tick"),
            r.payload.get("threshold").and_then(|v| v.as_f64()),
        ) else {
            partial = true;
            continue;
        };
        measured = true;
        let end = run_ticks.map_or(end, |n| end.min(n.saturating_sub(1)));
        for tick in start..=end {
            let w = m.window_of(tick);
            if w >= m.windows() {
                partial = true;
                continue;
            }
            emitted_ticks += 1;
            if m.non_cyberphony(w, bin) > threshold {
                occupied_ticks += 1;
            }
        }
    }

    OccupationMetrics {
        overlap_ratio: (measured && emitted_ticks > 0)
            .then(|| occupied_ticks as f64 / emitted_ticks as f64),
        emission_seconds: emitted_ticks as f64 * TICK_SECONDS,
        occupied_seconds: occupied_ticks as f64 * TICK_SECONDS,
        niche_spread: bins.len(),
        bins_used: bins.into_iter().collect(),
        switch_events: switches,
        partial,
    }
}

impl OccupationMetrics {
    /// Two-column CSV summary followed by one row per composer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\r\n");
        let ratio = self
            .overlap_ratio
            .map_or("n/a".to_string(), |r| r.to_string());
        write!(out, "overlap_ratio,{ratio}\r\n").unwrap();
        write!(out, "emission_seconds,{}\r\n", self.emission_seconds).unwrap();
        write!(out, "occupied_seconds,{}\r\n", self.occupied_seconds).unwrap();
        write!(out, "niche_spread,{}\r\n", self.niche_spread).unwrap();
        write!(out, "partial,{}\r\n", self.partial).unwrap();
        for (id, s) in &self.switch_events {
            write!(out, "switch_events.agent{id},{}\r\n", s.total()).unwrap();
        }
        out
    }
}
