use rand_distr::{Distribution, Normal};

use super::Channel;
use crate::audio_core::{db_to_amplitude, AudioFrame, FrameAssembler, Highpass, HOP};
use crate::rng::{self, SimRng};

/// Default reference distance of the attenuation law.
pub const D_REF_M: f64 = 2.0;
/// Default level of each listener's noise floor.
pub const NOISE_FLOOR_DB: f64 = -60.0;

/// Distance gain `1 / (1 + d / d_ref)`.
pub fn attenuation(distance_m: f64, d_ref_m: f64) -> f64 {
    1.0 / (1.0 + distance_m / d_ref_m)
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// One source's samples for the current tick.
#[derive(Debug, Clone, Copy)]
pub struct ActiveSource<'a> {
    pub position: [f64; 2],
    pub channel: Channel,
    pub hop: &'a [f32],
}

/// Sums the attenuated sources heard at `position` into `out`; `filter`
/// selects which sources take part.
pub fn mix_into(
    position: [f64; 2],
    d_ref_m: f64,
    sources: &[ActiveSource],
    filter: impl Fn(&ActiveSource) -> bool,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for s in sources.iter().filter(|s| filter(s)) {
        let g = attenuation(distance(position, s.position), d_ref_m);
        for (o, &x) in out.iter_mut().zip(s.hop) {
            *o += g * x as f64;
        }
    }
}

/// Per-listener mixing state: noise stream, input filter and framing.
#[derive(Debug, Clone)]
pub struct Listener {
    pub position: [f64; 2],
    noise: SimRng,
    normal: Normal<f64>,
    highpass: Option<Highpass>,
    assembler: FrameAssembler,
    mix: Vec<f64>,
    noise_hop: Vec<f64>,
    hop: Vec<f32>,
}

impl Listener {
    /// `domain`/`index` key the listener's noise stream; microphones feeding
    /// agents are highpassed, render microphones are not.
    pub fn new(
        position: [f64; 2],
        noise_floor_db: f64,
        seed: u64,
        domain: &str,
        index: u64,
        highpass: bool,
    ) -> Self {
        Self {
            position,
            noise: rng::stream(seed, domain, index),
            normal: Normal::new(0.0, db_to_amplitude(noise_floor_db)).expect("finite noise level"),
            highpass: highpass.then(Highpass::default),
            assembler: FrameAssembler::default(),
            mix: vec![0.0; HOP],
            noise_hop: vec![0.0; HOP],
            hop: vec![0.0; HOP],
        }
    }

    /// Mixes one tick: sources, plus noise, then filter, then clip to [-1, 1].
    pub fn mix_tick(&mut self, d_ref_m: f64, sources: &[ActiveSource]) {
        mix_into(self.position, d_ref_m, sources, |_| true, &mut self.mix);
        for (m, n) in self.mix.iter_mut().zip(self.noise_hop.iter_mut()) {
            *n = self.normal.sample(&mut self.noise);
            *m += *n;
        }
        if let Some(hp) = &mut self.highpass {
            hp.process_f64(&mut self.mix);
        }
        for (h, m) in self.hop.iter_mut().zip(&self.mix) {
            *h = m.clamp(-1.0, 1.0) as f32;
        }
        self.assembler.push_hop(&self.hop);
    }

    /// The newest mixed hop.
    pub fn hop(&self) -> &[f32] {
        &self.hop
    }

    /// The noise added in the newest hop, before filtering.
    pub fn noise_hop(&self) -> &[f64] {
        &self.noise_hop
    }

    pub fn frame(&self, tick: u64) -> AudioFrame {
        self.assembler.frame(tick)
    }
}

/// Sources plus listeners; produces every listener's frame for a tick.
#[derive(Debug, Clone)]
pub struct AcousticBus {
    pub d_ref_m: f64,
    pub noise_floor_db: f64,
    pub listeners: Vec<Listener>,
}

impl AcousticBus {
    pub fn new(d_ref_m: f64, noise_floor_db: f64) -> Self {
        Self {
            d_ref_m,
            noise_floor_db,
            listeners: Vec::new(),
        }
    }

    pub fn add_listener(
        &mut self,
        position: [f64; 2],
        seed: u64,
        domain: &str,
        index: u64,
        highpass: bool,
    ) -> usize {
        self.listeners.push(Listener::new(
            position,
            self.noise_floor_db,
            seed,
            domain,
            index,
            highpass,
        ));
        self.listeners.len() - 1
    }

    /// Mixes the tick for every listener and returns their frames.
    pub fn mix_tick(&mut self, tick: u64, sources: &[ActiveSource]) -> Vec<AudioFrame> {
        let d_ref = self.d_ref_m;
        self.listeners
            .iter_mut()
            .map(|l| {
                l.mix_tick(d_ref, sources);
                l.frame(tick)
            })
            .collect()
    }
}
