//! Deterministic simulator for a collective of sound-making agents that share
//! one acoustic channel: composers that seek quiet Mel bands, collectors that
//! keep a novelty-ranked sample library, and disruptors that re-emit
//! transformed sounds.

pub mod agents;
pub mod audio_core;
pub mod dsp_transforms;
pub mod environment;
pub mod features;
pub mod rng;
pub mod telemetry;
