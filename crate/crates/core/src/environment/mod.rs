//! The shared acoustic world: sources, the bus, scenarios, the scheduler and its log.

mod artifacts;
mod bus;
mod log;
mod replay;
mod scenario;
mod scheduler;
mod source;

pub use artifacts::{
    load_run, read_manifest, render_file, replay_run, sha256_hex, verify_artifacts, write_run,
    Manifest, ReplayedRender, RunError, StoredRun, ANALYSIS_DIR, EMISSIONS_DIR, EVENTS, MANIFEST,
    METRICS, OCCUPATION, RENDERS_DIR, REPLAY_DIR, RESOLVED_SCENARIO,
};
pub use bus::{
    attenuation, distance, mix_into, AcousticBus, ActiveSource, Listener, D_REF_M, NOISE_FLOOR_DB,
};
pub use log::{parse_jsonl, to_jsonl, LogRecord, ParsedLog, SYSTEM};
pub use replay::replay_renders;
pub use scenario::{RenderSpec, RosterEntry, Scenario, ScenarioError, TelemetrySpec};
pub use scheduler::{
    run_scenario, run_scenario_with, worker_threads, RunOutput, CLOCK_PERIOD_TICKS,
};
pub use source::{
    band_noise, Channel, SignalSpec, Source, SourceSpec, GATE_RAMP_S, NOISE_LOOP_LEN,
};
