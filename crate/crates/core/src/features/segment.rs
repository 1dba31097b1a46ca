use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::audio_core::{rms, HOP, SAMPLE_RATE};

/// Maximum recording length for collectors.
pub const MAX_RECORD_SECONDS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecorderParams {
    /// Total cap including pre-roll.
    pub max_seconds: f64,
    /// End of sound: hop RMS this far below the recording's peak...
    pub end_drop_db: f64,
    /// ...for this many consecutive hops.
    pub quiet_hops: usize,
    pub preroll_hops: usize,
}

impl Default for RecorderParams {
    fn default() -> Self {
        Self {
            max_seconds: MAX_RECORD_SECONDS,
            end_drop_db: 18.0,
            quiet_hops: 15,
            preroll_hops: 2,
        }
    }
}

impl RecorderParams {
    pub fn max_samples(&self) -> usize {
        (self.max_seconds * SAMPLE_RATE as f64).round() as usize
    }
}

#[derive(Debug, Clone)]
struct Active {
    pcm: Vec<f32>,
    peak_rms: f64,
    quiet_run: usize,
    started_at: u64,
}

/// A finished recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub pcm: Vec<f32>,
    pub started_at: u64,
    /// True if the length cap, not the end-of-sound rule, stopped it.
    pub capped: bool,
}

/// Hop-by-hop recorder that keeps a short pre-roll while idle and stops on a
/// volume drop or the length cap.
#[derive(Debug, Clone)]
pub struct Recorder {
    params: RecorderParams,
    preroll: VecDeque<Vec<f32>>,
    active: Option<Active>,
}

impl Recorder {
    pub fn new(params: RecorderParams) -> Self {
        Self {
            params,
            preroll: VecDeque::with_capacity(params.preroll_hops + 1),
            active: None,
        }
    }

    pub fn params(&self) -> &RecorderParams {
        &self.params
    }

    pub fn is_recording(&self) -> bool {
        self.active.is_some()
    }

    /// Samples captured so far in the current recording.
    pub fn recorded_len(&self) -> usize {
        self.active.as_ref().map_or(0, |a| a.pcm.len())
    }

    /// Remembers an idle hop for pre-roll.
    pub fn observe(&mut self, hop: &[f32]) {
        if self.params.preroll_hops == 0 {
            return;
        }
        if self.preroll.len() == self.params.preroll_hops {
            self.preroll.pop_front();
        }
        self.preroll.push_back(hop.to_vec());
    }

    /// Starts recording with the pre-roll followed by `hop`.
    pub fn start(&mut self, hop: &[f32], tick: u64) -> Option<Recording> {
        let mut active = Active {
            pcm: Vec::with_capacity(self.params.max_samples().min(SAMPLE_RATE as usize * 4)),
            peak_rms: 0.0,
            quiet_run: 0,
            started_at: tick,
        };
        for h in self.preroll.drain(..) {
            active.peak_rms = active.peak_rms.max(rms(&h));
            active.pcm.extend_from_slice(&h);
        }
        self.active = Some(active);
        self.push(hop)
    }

    /// Appends a hop; returns the recording once it is complete.
    pub fn push(&mut self, hop: &[f32]) -> Option<Recording> {
        let max = self.params.max_samples();
        let active = self.active.as_mut()?;
        let level = rms(hop);
        active.peak_rms = active.peak_rms.max(level);
        active.pcm.extend_from_slice(hop);

        let floor = active.peak_rms * 10f64.powf(-self.params.end_drop_db / 20.0);
        if level < floor {
            active.quiet_run += 1;
        } else {
            active.quiet_run = 0;
        }

        let capped = active.pcm.len() >= max;
        if capped || active.quiet_run >= self.params.quiet_hops {
            let mut a = self.active.take().expect("active recording");
            a.pcm.truncate(max);
            return Some(Recording {
                pcm: a.pcm,
                started_at: a.started_at,
                capped,
            });
        }
        None
    }

    /// Ends the current recording with whatever was captured.
    pub fn finish(&mut self) -> Option<Recording> {
        self.active.take().map(|a| Recording {
            pcm: a.pcm,
            started_at: a.started_at,
            capped: false,
        })
    }

    pub fn abort(&mut self) {
        self.active = None;
        self.preroll.clear();
    }
}

/// Cuts one recording out of `stream` for an onset at hop index `onset_hop`.
pub fn segment_recording(stream: &[f32], onset_hop: usize, params: RecorderParams) -> Recording {
    let hops: Vec<&[f32]> = stream.chunks(HOP).collect();
    let mut rec = Recorder::new(params);
    for h in &hops[onset_hop.saturating_sub(params.preroll_hops)..onset_hop.min(hops.len())] {
        rec.observe(h);
    }
    let Some(first) = hops.get(onset_hop) else {
        return Recording {
            pcm: Vec::new(),
            started_at: onset_hop as u64,
            capped: false,
        };
    };
    if let Some(done) = rec.start(first, onset_hop as u64) {
        return done;
    }
    for h in &hops[onset_hop + 1..] {
        if let Some(done) = rec.push(h) {
            return done;
        }
    }
    rec.finish().expect("recording in progress")
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn tone(seconds: f64, amp: f64) -> Vec<f32> {
        let n = (seconds * SAMPLE_RATE as f64) as usize;
        (0..n)
            .map(|i| (amp * (2.0 * PI * 500.0 * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
            .collect()
    }

    #[test]
    fn burst_then_silence() {
        let lead = 10 * HOP;
        let mut s = vec![0.0f32; lead];
        s.extend(tone(1.0, 0.5));
        s.extend(vec![0.0f32; SAMPLE_RATE as usize * 2]);
        let rec = segment_recording(&s, lead / HOP, RecorderParams::default());
        let secs = rec.pcm.len() as f64 / SAMPLE_RATE as f64;
        let hop_s = HOP as f64 / SAMPLE_RATE as f64;
        assert!(!rec.capped);
        // the burst ends mid-hop (62.5 hops), so its last partial hop still counts as loud
        let burst_s = (1.0 / hop_s).ceil() * hop_s;
        assert!(
            secs >= 1.0 && secs <= burst_s + 15.0 * hop_s + 2.0 * hop_s,
            "{secs}"
        );
    }

    #[test]
    fn long_tone_hits_cap_exactly() {
        let s = tone(60.0, 0.5);
        let rec = segment_recording(&s, 4, RecorderParams::default());
        assert!(rec.capped);
        assert_eq!(rec.pcm.len(), 30 * SAMPLE_RATE as usize);
    }

    #[test]
    fn sub_hop_burst_is_at_least_one_hop() {
        let mut s = vec![0.0f32; 20 * HOP];
        for v in &mut s[5 * HOP..5 * HOP + 100] {
            *v = 0.7;
        }
        let rec = segment_recording(&s, 5, RecorderParams::default());
        assert!(rec.pcm.len() >= HOP);
    }

    #[test]
    fn preroll_is_included() {
        let mut s = vec![0.0f32; 10 * HOP];
        s[3 * HOP + 7] = 0.3;
        s.extend(tone(0.5, 0.5));
        let rec = segment_recording(&s, 5, RecorderParams::default());
        // two hops of pre-roll precede the onset hop
        assert_eq!(rec.pcm[HOP + 7], 0.0);
        assert_eq!(rec.pcm[7], 0.3);
    }
}
