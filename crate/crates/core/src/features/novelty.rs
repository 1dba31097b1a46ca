use serde::{Deserialize, Serialize};

use super::descriptors::{AnalysisVector, VECTOR_DIM};
use crate::environment::Channel;

/// Default number of samples a collector keeps.
pub const DEFAULT_MAX_ITEMS: usize = 32;
/// Default memory budget for stored PCM (8 MiB).
pub const DEFAULT_CAPACITY_BYTES: usize = 8 * 1024 * 1024;
/// Stored PCM is accounted as 16-bit.
pub const BYTES_PER_SAMPLE: usize = 2;

/// A recording and its analysis vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundSample {
    pub pcm: Vec<f32>,
    pub vector: AnalysisVector,
    pub captured_at: u64,
    pub source_label: Option<Channel>,
}

impl SoundSample {
    pub fn new(pcm: Vec<f32>, captured_at: u64, source_label: Option<Channel>) -> Self {
        let vector = AnalysisVector::compute(&pcm);
        Self {
            pcm,
            vector,
            captured_at,
            source_label,
        }
    }

    pub fn bytes(&self) -> usize {
        self.pcm.len() * BYTES_PER_SAMPLE
    }

    pub fn duration_s(&self) -> f64 {
        self.pcm.len() as f64 / crate::audio_core::SAMPLE_RATE as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "index", rename_all = "snake_case")]
pub enum NoveltyDecision {
    AcceptAppend,
    AcceptReplace(usize),
    Reject,
}

impl NoveltyDecision {
    pub fn accepted(&self) -> bool {
        !matches!(self, NoveltyDecision::Reject)
    }
}

/// Per-dimension z-scoring fitted on a set of vectors. Dimensions whose
/// spread is negligible relative to their magnitude map to zero.
#[derive(Debug, Clone, Copy)]
pub struct Normalizer {
    mean: [f64; VECTOR_DIM],
    std: [f64; VECTOR_DIM],
}

impl Normalizer {
    pub fn fit<'a>(vectors: impl Iterator<Item = &'a [f64; VECTOR_DIM]> + Clone) -> Self {
        let n = vectors.clone().count() as f64;
        let mut mean = [0.0; VECTOR_DIM];
        for v in vectors.clone() {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = [0.0; VECTOR_DIM];
        for v in vectors {
            for ((s, x), m) in std.iter_mut().zip(v).zip(&mean) {
                *s += (x - m).powi(2);
            }
        }
        for (s, m) in std.iter_mut().zip(&mean) {
            *s = (*s / n).sqrt();
            if *s <= DEGENERATE_REL * m.abs().max(1.0) {
                *s = 0.0;
            }
        }
        Self { mean, std }
    }

    pub fn apply(&self, v: &[f64; VECTOR_DIM]) -> [f64; VECTOR_DIM] {
        let mut out = [0.0; VECTOR_DIM];
        for (d, o) in out.iter_mut().enumerate() {
            if self.std[d] > 0.0 {
                *o = (v[d] - self.mean[d]) / self.std[d];
            }
        }
        out
    }
}

/// Relative spread below which a dimension counts as constant.
pub const DEGENERATE_REL: f64 = 1e-12;

/// Sum over dimensions of the population standard deviation.
pub fn spread(vectors: &[[f64; VECTOR_DIM]]) -> f64 {
    if vectors.is_empty() {
        return 0.0;
    }
    let n = vectors.len() as f64;
    (0..VECTOR_DIM)
        .map(|d| {
            let mean = vectors.iter().map(|v| v[d]).sum::<f64>() / n;
            (vectors.iter().map(|v| (v[d] - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum()
}

fn squared_distance(a: &[f64; VECTOR_DIM], b: &[f64; VECTOR_DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// The collector's bounded library of "interesting" sounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCollection {
    pub items: Vec<SoundSample>,
    pub max_items: usize,
    pub capacity_bytes: usize,
}

impl Default for SampleCollection {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_ITEMS, DEFAULT_CAPACITY_BYTES)
    }
}

impl SampleCollection {
    pub fn new(max_items: usize, capacity_bytes: usize) -> Self {
        Self {
            items: Vec::new(),
            max_items,
            capacity_bytes,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_bytes(&self) -> usize {
        self.items.iter().map(SoundSample::bytes).sum()
    }

    /// Decides and applies; returns the decision.
    pub fn offer(&mut self, candidate: SoundSample) -> NoveltyDecision {
        let decision = novelty_accept(self, &candidate);
        match decision {
            NoveltyDecision::AcceptAppend => self.items.push(candidate),
            NoveltyDecision::AcceptReplace(i) => self.items[i] = candidate,
            NoveltyDecision::Reject => {}
        }
        debug_assert!(self.items.len() <= self.max_items);
        debug_assert!(self.total_bytes() <= self.capacity_bytes);
        decision
    }
}

/// A decision together with the scores it compared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoveltyEvaluation {
    pub decision: NoveltyDecision,
    /// Score of the current members.
    pub before: f64,
    /// Score of the proposed set (members plus or swapped with the candidate);
    /// equal to `before` when no proposal was scored.
    pub after: f64,
}

/// Keep/replace rule. Vectors are z-scored with statistics of the members plus
/// the candidate; the novelty score is the summed per-dimension standard
/// deviation. A candidate is kept only if it raises the score: appended while
/// there is room, otherwise swapped for its nearest member.
pub fn novelty_accept(collection: &SampleCollection, candidate: &SoundSample) -> NoveltyDecision {
    novelty_evaluate(collection, candidate).decision
}

pub fn novelty_evaluate(
    collection: &SampleCollection,
    candidate: &SoundSample,
) -> NoveltyEvaluation {
    let verdict = |decision, before, after| NoveltyEvaluation {
        decision,
        before,
        after,
    };
    let cand_bytes = candidate.bytes();
    if cand_bytes > collection.capacity_bytes || collection.max_items == 0 {
        return verdict(NoveltyDecision::Reject, 0.0, 0.0);
    }
    if collection.items.is_empty() {
        return verdict(NoveltyDecision::AcceptAppend, 0.0, 0.0);
    }

    let raw_items: Vec<[f64; VECTOR_DIM]> = collection
        .items
        .iter()
        .map(|s| s.vector.to_array())
        .collect();
    let raw_cand = candidate.vector.to_array();
    let norm = Normalizer::fit(raw_items.iter().chain(std::iter::once(&raw_cand)));
    let mut normed: Vec<_> = raw_items.iter().map(|v| norm.apply(v)).collect();
    let cand = norm.apply(&raw_cand);
    let before = spread(&normed);

    let used = collection.total_bytes();
    let has_room = collection.items.len() < collection.max_items
        && used + cand_bytes <= collection.capacity_bytes;
    if has_room {
        normed.push(cand);
        let after = spread(&normed);
        let decision = if after > before {
            NoveltyDecision::AcceptAppend
        } else {
            NoveltyDecision::Reject
        };
        return verdict(decision, before, after);
    }

    let nearest = normed
        .iter()
        .enumerate()
        .map(|(i, v)| (i, squared_distance(v, &cand)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("nonempty collection");
    if used - collection.items[nearest].bytes() + cand_bytes > collection.capacity_bytes {
        return verdict(NoveltyDecision::Reject, before, before);
    }
    normed[nearest] = cand;
    let after = spread(&normed);
    let decision = if after > before {
        NoveltyDecision::AcceptReplace(nearest)
    } else {
        NoveltyDecision::Reject
    };
    verdict(decision, before, after)
}
