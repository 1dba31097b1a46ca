use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::energy::{Battery, EnergyModel};
use super::led::{LedMode, LedState};
use super::AgentEvent;
use crate::audio_core::{mel_energies, ticks_for, AudioFrame, SimClock};
use crate::features::{
    novelty_evaluate, NoveltyDecision, OnsetDetector, OnsetParams, Recorder, RecorderParams,
    SampleCollection, SoundSample, DEFAULT_CAPACITY_BYTES, DEFAULT_MAX_ITEMS,
};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectorParams {
    pub onset: OnsetParams,
    pub recorder: RecorderParams,
    pub max_items: usize,
    pub capacity_bytes: usize,
    /// Consecutive frames with the same Mel argmax that count as a composer tone.
    pub tone_frames: usize,
    pub tone_flatness: f64,
    pub playback_refractory_s: f64,
    pub playback_peak: f64,
    pub accepted_blue_s: f64,
}

impl Default for CollectorParams {
    fn default() -> Self {
        Self {
            onset: OnsetParams::default(),
            recorder: RecorderParams::default(),
            max_items: DEFAULT_MAX_ITEMS,
            capacity_bytes: DEFAULT_CAPACITY_BYTES,
            tone_frames: 20,
            tone_flatness: 0.3,
            playback_refractory_s: 10.0,
            playback_peak: 0.5,
            accepted_blue_s: 2.0,
        }
    }
}

/// Geometric over arithmetic mean of the power spectrum, DC excluded.
pub fn spectral_flatness(spectrum: &[f64]) -> f64 {
    let bins = &spectrum[1.min(spectrum.len())..];
    if bins.is_empty() {
        return 1.0;
    }
    let n = bins.len() as f64;
    let power = bins.iter().map(|m| m * m + 1e-20);
    let log_mean = power.clone().map(f64::ln).sum::<f64>() / n;
    let mean = power.sum::<f64>() / n;
    log_mean.exp() / mean
}

/// Scales `pcm` so its largest magnitude equals `peak`; silence is returned as is.
pub fn normalize_peak(pcm: &[f32], peak: f64) -> Vec<f32> {
    let max = pcm.iter().fold(0f64, |a, &v| a.max((v as f64).abs()));
    if max == 0.0 {
        return pcm.to_vec();
    }
    let g = peak / max;
    pcm.iter().map(|&v| (v as f64 * g) as f32).collect()
}

/// Collector/critic: records onsets, keeps the novel ones, and at night plays
/// one back when it hears a composer tone.
#[derive(Debug, Clone)]
pub struct Collector {
    pub params: CollectorParams,
    pub collection: SampleCollection,
    detector: OnsetDetector,
    recorder: Recorder,
    tone_bin: Option<usize>,
    tone_run: usize,
    refractory_until: u64,
    was_deaf: bool,
}

impl Collector {
    pub fn new(params: CollectorParams) -> Self {
        Self {
            collection: SampleCollection::new(params.max_items, params.capacity_bytes),
            detector: OnsetDetector::new(params.onset),
            recorder: Recorder::new(params.recorder),
            tone_bin: None,
            tone_run: 0,
            refractory_until: 0,
            was_deaf: false,
            params,
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recorder.is_recording()
    }

    /// Consecutive frames of the current narrowband peak.
    pub fn tone_run(&self) -> usize {
        self.tone_run
    }

    /// One tick; returns PCM to play back from the next tick on.
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
        let tick = clock.tick;
        let Some(spectrum) = spectrum else {
            self.was_deaf = true;
            self.tone_run = 0;
            self.tone_bin = None;
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

        if self.recorder.is_recording() {
            if let Some(rec) = self.recorder.push(hop) {
                let capped = rec.capped;
                self.offer(
                    SoundSample::new(rec.pcm, rec.started_at, None),
                    capped,
                    tick,
                    led,
                    events,
                );
            }
        } else if onset {
            events.push(AgentEvent::new("onset", json!({})));
            led.set(LedMode::AcquiringRed, 1.0, None);
            if let Some(rec) = self.recorder.start(hop, tick) {
                let capped = rec.capped;
                self.offer(
                    SoundSample::new(rec.pcm, rec.started_at, None),
                    capped,
                    tick,
                    led,
                    events,
                );
            }
        } else {
            self.recorder.observe(hop);
        }

        let mel = mel_energies(spectrum);
        let bin = mel.argmax();
        if spectral_flatness(spectrum) < self.params.tone_flatness && mel.energies[bin] > 0.0 {
            self.tone_run = if self.tone_bin == Some(bin) {
                self.tone_run + 1
            } else {
                1
            };
            self.tone_bin = Some(bin);
        } else {
            self.tone_run = 0;
            self.tone_bin = None;
        }

        let heard_composer = self.tone_run >= self.params.tone_frames;
        if !(heard_composer && clock.is_night() && tick >= self.refractory_until) {
            return None;
        }
        if self.collection.is_empty() || !energy.can_emit(battery.wh) {
            return None;
        }
        if self.recorder.is_recording() {
            self.recorder.abort();
            events.push(AgentEvent::new("record_abort", json!({})));
        }
        let index = rng.random_range(0..self.collection.len());
        let pcm = normalize_peak(&self.collection.items[index].pcm, self.params.playback_peak);
        self.refractory_until = tick + ticks_for(self.params.playback_refractory_s);
        self.tone_run = 0;
        events.push(AgentEvent::new(
            "playback",
            json!({ "index": index, "samples": pcm.len(), "tone_bin": bin }),
        ));
        Some(pcm)
    }

    fn offer(
        &mut self,
        sample: SoundSample,
        capped: bool,
        tick: u64,
        led: &mut LedState,
        events: &mut Vec<AgentEvent>,
    ) {
        let samples = sample.pcm.len();
        let eval = novelty_evaluate(&self.collection, &sample);
        match eval.decision {
            NoveltyDecision::AcceptAppend => self.collection.items.push(sample),
            NoveltyDecision::AcceptReplace(i) => self.collection.items[i] = sample,
            NoveltyDecision::Reject => {}
        }
        let payload = json!({
            "samples": samples,
            "capped": capped,
            "decision": eval.decision,
            "score_before": eval.before,
            "score_after": eval.after,
            "items": self.collection.len(),
            "bytes": self.collection.total_bytes(),
        });
        if eval.decision.accepted() {
            events.push(AgentEvent::new("accept", payload));
            led.set(
                LedMode::AcceptedBlue,
                1.0,
                Some(tick + ticks_for(self.params.accepted_blue_s)),
            );
        } else {
            events.push(AgentEvent::new("reject", payload));
            led.off();
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::audio_core::{FrameAssembler, NightWindow, SpectrumAnalyzer, HOP, SAMPLE_RATE};
    use crate::rng;

    struct Harness {
        collector: Collector,
        asm: FrameAssembler,
        analyzer: SpectrumAnalyzer,
        clock: SimClock,
        led: LedState,
        rng: SimRng,
        events: Vec<(u64, AgentEvent)>,
        playbacks: usize,
    }

    impl Harness {
        fn new(start_fraction: f64) -> Self {
            Self {
                collector: Collector::new(CollectorParams::default()),
                asm: FrameAssembler::default(),
                analyzer: SpectrumAnalyzer::new(),
                clock: SimClock::new(1000.0, start_fraction, NightWindow::default()),
                led: LedState::default(),
                rng: rng::stream(3, "collector", 0),
                events: Vec::new(),
                playbacks: 0,
            }
        }

        fn feed(&mut self, pcm: &[f32]) {
            let m = EnergyModel::default();
            let b = Battery::new(m.battery_max_wh);
            for hop in pcm.chunks(HOP) {
                let mut h = hop.to_vec();
                h.resize(HOP, 0.0);
                self.asm.push_hop(&h);
                let frame = self.asm.frame(self.clock.tick);
                let spec = self.analyzer.magnitude(&frame.samples);
                let mut ev = Vec::new();
                self.led.expire(self.clock.tick);
                if self
                    .collector
                    .step(
                        &frame,
                        &self.clock,
                        Some(&spec),
                        &b,
                        &m,
                        &mut self.led,
                        &mut self.rng,
                        &mut ev,
                    )
                    .is_some()
                {
                    self.playbacks += 1;
                }
                self.events
                    .extend(ev.into_iter().map(|e| (self.clock.tick, e)));
                self.clock.advance();
            }
        }
    }

    fn noise(seconds: f64, amp: f64, seed: u64) -> Vec<f32> {
        let mut r = rng::stream(seed, "test-noise", 0);
        (0..(seconds * SAMPLE_RATE as f64) as usize)
            .map(|_| (amp * (r.random::<f64>() * 2.0 - 1.0)) as f32)
            .collect()
    }

    fn sine(freq: f64, amp: f64, seconds: f64) -> Vec<f32> {
        (0..(seconds * SAMPLE_RATE as f64) as usize)
            .map(|i| (amp * (2.0 * PI * freq * i as f64 / SAMPLE_RATE as f64).sin()) as f32)
            .collect()
    }

    #[test]
    fn one_burst_is_collected() {
        let mut h = Harness::new(0.1);
        h.feed(&vec![0.0; SAMPLE_RATE as usize]);
        h.feed(&noise(0.5, 0.5, 1));
        h.feed(&vec![0.0; SAMPLE_RATE as usize * 2]);
        assert_eq!(h.collector.collection.len(), 1);
        assert!(h.events.iter().any(|(_, e)| e.event == "accept"));
    }

    #[test]
    fn led_goes_red_then_blue_then_off() {
        let mut h = Harness::new(0.1);
        h.feed(&vec![0.0; SAMPLE_RATE as usize]);
        h.feed(&noise(0.3, 0.5, 2));
        assert_eq!(h.led.mode, LedMode::AcquiringRed);
        h.feed(&vec![0.0; HOP * 20]);
        assert_eq!(h.led.mode, LedMode::AcceptedBlue);
        h.feed(&vec![0.0; SAMPLE_RATE as usize * 3]);
        assert_eq!(h.led.mode, LedMode::Off);
    }

    fn sustained_tone_playbacks(start_fraction: f64) -> (Harness, usize) {
        let mut h = Harness::new(start_fraction);
        h.feed(&vec![0.0; SAMPLE_RATE as usize]);
        h.feed(&noise(0.5, 0.5, 4));
        h.feed(&vec![0.0; SAMPLE_RATE as usize * 2]);
        assert_eq!(h.collector.collection.len(), 1);
        let before = h.playbacks;
        h.feed(&sine(1000.0, 0.3, 25.0));
        let n = h.playbacks - before;
        (h, n)
    }

    #[test]
    fn night_tone_triggers_playback_with_refractory() {
        let (h, n) = sustained_tone_playbacks(0.6);
        // 25 s of tone with a 10 s refractory: triggers near 0.3 s, 10.3 s and 20.3 s
        assert_eq!(n, 3);
        let ticks: Vec<u64> = h
            .events
            .iter()
            .filter(|(_, e)| e.event == "playback")
            .map(|(t, _)| *t)
            .collect();
        for w in ticks.windows(2) {
            assert!(w[1] - w[0] >= ticks_for(10.0));
        }
    }

    #[test]
    fn daytime_tone_is_ignored() {
        let (_, n) = sustained_tone_playbacks(0.1);
        assert_eq!(n, 0);
    }

    #[test]
    fn empty_collection_never_plays() {
        let mut h = Harness::new(0.6);
        h.feed(&sine(1000.0, 0.3, 3.0));
        assert_eq!(h.playbacks, 0);
    }

    #[test]
    fn flatness_extremes() {
        let mut a = SpectrumAnalyzer::new();
        let tone = a.magnitude(&sine(1000.0, 0.5, 0.032)[..1024]);
        let white = a.magnitude(&noise(0.032, 0.5, 9)[..1024]);
        assert!(spectral_flatness(&tone) < 0.05);
        assert!(spectral_flatness(&white) > 0.3);
    }
}
