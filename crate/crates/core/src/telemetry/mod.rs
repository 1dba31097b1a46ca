//! Post-run analysis: who occupied which band, and spectrogram images.

mod analyze;
mod metrics;
mod occupation;
mod spectrogram;

pub use analyze::{analyze_run, AnalysisReport};
pub use metrics::{occupation_metrics, OccupationMetrics, SwitchCount};
pub use occupation::{
    attribute, occupation_from_csv, occupation_to_csv, BandComponents, OccupationMatrix,
    COMPONENTS, COMPONENT_NAMES, FLOOR,
};
pub use spectrogram::{spectrogram, Spectrogram, IMAGE_RANGE_DB};
