//! On-disk form of a sample collection: one float WAV per item plus `index.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::descriptors::AnalysisVector;
use super::novelty::{SampleCollection, SoundSample};
use crate::audio_core::{read_wav_native, write_wav_f32, WavError, SAMPLE_RATE};
use crate::environment::Channel;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Wav(#[from] WavError),
    #[error("index.json: {0}")]
    Index(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub captured_at: u64,
    pub source_label: Option<Channel>,
    pub samples: usize,
    pub vector: AnalysisVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionIndex {
    pub max_items: usize,
    pub capacity_bytes: usize,
    pub items: Vec<IndexEntry>,
}

pub fn save_collection(collection: &SampleCollection, dir: &Path) -> Result<(), StoreError> {
    std::fs::create_dir_all(dir)?;
    let mut items = Vec::with_capacity(collection.len());
    for (i, s) in collection.items.iter().enumerate() {
        let file = format!("sample_{i:02}.wav");
        write_wav_f32(dir.join(&file), &s.pcm, SAMPLE_RATE)?;
        items.push(IndexEntry {
            file,
            captured_at: s.captured_at,
            source_label: s.source_label,
            samples: s.pcm.len(),
            vector: s.vector,
        });
    }
    let index = CollectionIndex {
        max_items: collection.max_items,
        capacity_bytes: collection.capacity_bytes,
        items,
    };
    std::fs::write(dir.join("index.json"), serde_json::to_vec_pretty(&index)?)?;
    Ok(())
}

/// Loads a saved collection; vectors come from the index, not recomputation.
pub fn load_collection(dir: &Path) -> Result<SampleCollection, StoreError> {
    let index: CollectionIndex = serde_json::from_slice(&std::fs::read(dir.join("index.json"))?)?;
    let mut collection = SampleCollection::new(index.max_items, index.capacity_bytes);
    for e in index.items {
        let pcm = read_wav_native(dir.join(&e.file))?.samples;
        collection.items.push(SoundSample {
            pcm,
            vector: e.vector,
            captured_at: e.captured_at,
            source_label: e.source_label,
        });
    }
    Ok(collection)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saved_collection_reloads_and_vectors_recompute() {
        let mut c = SampleCollection::default();
        for (i, f) in [220.0f64, 1320.0, 5000.0].iter().enumerate() {
            let pcm: Vec<f32> = (0..8000)
                .map(|n| {
                    (0.3 * (2.0 * std::f64::consts::PI * f * n as f64 / 32_000.0).sin()) as f32
                })
                .collect();
            c.offer(SoundSample::new(
                pcm,
                i as u64 * 100,
                Some(Channel::Biophony),
            ));
        }
        let dir = tempfile::tempdir().unwrap();
        save_collection(&c, dir.path()).unwrap();
        let back = load_collection(dir.path()).unwrap();
        assert_eq!(back, c);
        for s in &back.items {
            assert_eq!(AnalysisVector::compute(&s.pcm), s.vector);
        }
    }
}
