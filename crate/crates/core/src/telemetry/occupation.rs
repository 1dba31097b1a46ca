use std::collections::BTreeMap;
use std::fmt::Write;

use crate::audio_core::{MEL_BANDS, TICK_SECONDS};
use crate::environment::Channel;

/// Four soundscape channels plus the listener's own noise floor.
pub const COMPONENTS: usize = 5;
pub const COMPONENT_NAMES: [&str; COMPONENTS] =
    ["biophony", "geophony", "anthrophony", "cyberphony", "floor"];
pub const FLOOR: usize = 4;

pub type BandComponents = [[f64; COMPONENTS]; MEL_BANDS];

/// Splits each band's heard energy over the components in proportion to
/// their separately measured energies, so the parts sum to the total.
pub fn attribute(
    total: &[f64; MEL_BANDS],
    parts: &[[f64; MEL_BANDS]; COMPONENTS],
) -> BandComponents {
    let mut out = [[0.0; COMPONENTS]; MEL_BANDS];
    for b in 0..MEL_BANDS {
        let sum: f64 = parts.iter().map(|p| p[b]).sum();
        if sum > 0.0 {
            for c in 0..COMPONENTS {
                out[b][c] = total[b] * parts[c][b] / sum;
            }
        } else {
            out[b][FLOOR] = total[b];
        }
    }
    out
}

/// Per-window mean band energy by component, as heard by one listener.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMatrix {
    pub window_s: f64,
    sums: Vec<BandComponents>,
    frames: Vec<u32>,
}

impl OccupationMatrix {
    pub fn new(window_s: f64) -> Self {
        Self {
            window_s,
            sums: Vec::new(),
            frames: Vec::new(),
        }
    }

    pub fn window_of(&self, tick: u64) -> usize {
        (tick as f64 * TICK_SECONDS / self.window_s).floor() as usize
    }

    pub fn windows(&self) -> usize {
        self.sums.len()
    }

    pub fn add(&mut self, tick: u64, frame: &BandComponents) {
        let w = self.window_of(tick);
        if self.sums.len() <= w {
            self.sums.resize(w + 1, [[0.0; COMPONENTS]; MEL_BANDS]);
            self.frames.resize(w + 1, 0);
        }
        for (acc, v) in self.sums[w].iter_mut().zip(frame) {
            for c in 0..COMPONENTS {
                acc[c] += v[c];
            }
        }
        self.frames[w] += 1;
    }

    /// Mean energy of `component` in `band` over window `w`.
    pub fn mean(&self, w: usize, band: usize, component: usize) -> f64 {
        match self.frames.get(w) {
            Some(&n) if n > 0 => self.sums[w][band][component] / n as f64,
            _ => 0.0,
        }
    }

    pub fn total(&self, w: usize, band: usize) -> f64 {
        (0..COMPONENTS).map(|c| self.mean(w, band, c)).sum()
    }

    /// Everything except machine sound.
    pub fn non_cyberphony(&self, w: usize, band: usize) -> f64 {
        (0..COMPONENTS)
            .filter(|&c| c != Channel::Cyberphony.index())
            .map(|c| self.mean(w, band, c))
            .sum()
    }
}

const CSV_HEADER: &str =
    "agent_id,window,band,frames,biophony,geophony,anthrophony,cyberphony,floor";

/// RFC 4180 CSV of all matrices, one row per (agent, window, band), holding sums.
pub fn occupation_to_csv(matrices: &BTreeMap<u32, OccupationMatrix>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push_str("\r\n");
    for (id, m) in matrices {
        for (w, rows) in m.sums.iter().enumerate() {
            for (b, row) in rows.iter().enumerate() {
                write!(out, "{id},{w},{b},{}", m.frames[w]).unwrap();
                for v in row {
                    write!(out, ",{v}").unwrap();
                }
                out.push_str("\r\n");
            }
        }
    }
    out
}

pub fn occupation_from_csv(
    text: &str,
    window_s: f64,
) -> Result<BTreeMap<u32, OccupationMatrix>, String> {
    let mut out: BTreeMap<u32, OccupationMatrix> = BTreeMap::new();
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err("occupation.csv: unexpected header".into());
    }
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || format!("occupation.csv line {}: malformed row", n + 2);
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 4 + COMPONENTS {
            return Err(bad());
        }
        let id: u32 = f[0].parse().map_err(|_| bad())?;
        let w: usize = f[1].parse().map_err(|_| bad())?;
        let b: usize = f[2].parse().map_err(|_| bad())?;
        let frames: u32 = f[3].parse().map_err(|_| bad())?;
        if b >= MEL_BANDS {
            return Err(bad());
        }
        let m = out
            .entry(id)
            .or_insert_with(|| OccupationMatrix::new(window_s));
        if m.sums.len() <= w {
            m.sums.resize(w + 1, [[0.0; COMPONENTS]; MEL_BANDS]);
            m.frames.resize(w + 1, 0);
        }
        m.frames[w] = frames;
        for c in 0..COMPONENTS {
            m.sums[w][b][c] = f[4 + c].parse().map_err(|_| bad())?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribution_sums_to_total() {
        let total: [f64; MEL_BANDS] = std::array::from_fn(|b| b as f64 * 0.3 + 1.0);
        let parts: [[f64; MEL_BANDS]; COMPONENTS] =
            std::array::from_fn(|c| std::array::from_fn(|b| ((b * 7 + c * 3) % 11) as f64));
        let a = attribute(&total, &parts);
        for b in 0..MEL_BANDS {
            let s: f64 = a[b].iter().sum();
            assert!((s - total[b]).abs() <= 1e-12 * total[b]);
            assert!(a[b].iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut m = OccupationMatrix::new(1.0);
        let mut frame = [[0.0; COMPONENTS]; MEL_BANDS];
        frame[3][1] = 0.125;
        frame[9][3] = 1.0 / 3.0;
        for t in 0..130 {
            m.add(t, &frame);
        }
        let mut all = BTreeMap::new();
        all.insert(4, m);
        let back = occupation_from_csv(&occupation_to_csv(&all), 1.0).unwrap();
        assert_eq!(back, all);
        assert_eq!(back[&4].windows(), 3);
        assert!((back[&4].non_cyberphony(0, 3) - 0.125).abs() < 1e-15);
        assert_eq!(back[&4].non_cyberphony(0, 9), 0.0);
    }
}
