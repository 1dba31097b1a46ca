//! Collector-side feature machinery: onset detection, recording segmentation,
//! the analysis vector and the novelty rule that decides what to keep.

mod descriptors;
mod novelty;
mod onset;
mod segment;
mod store;

pub use descriptors::{
    dynamic_range_db, frame_cepstrum, mfcc, zero_crossing_rate, AnalysisVector, LOG_FLOOR,
    MFCC_COEFFS, SILENCE_FLOOR, VECTOR_DIM,
};
pub use novelty::{
    novelty_accept, novelty_evaluate, spread, Normalizer, NoveltyDecision, NoveltyEvaluation,
    SampleCollection, SoundSample, BYTES_PER_SAMPLE, DEFAULT_CAPACITY_BYTES, DEFAULT_MAX_ITEMS,
    DEGENERATE_REL,
};
pub use onset::{onset_detect, OnsetDetector, OnsetParams, MIN_HISTORY};
pub use segment::{segment_recording, Recorder, RecorderParams, Recording, MAX_RECORD_SECONDS};
pub use store::{load_collection, save_collection, CollectionIndex, IndexEntry, StoreError};
