//! Utterance featurization and the dialog-context representation.
//!
//! The default featurizer is signed feature hashing over lowercased
//! alphanumeric tokens. Precomputed encoder embeddings can be plugged in
//! through [`EmbeddingTable`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::FeatureError;
use crate::peld::DialogTriple;

pub const DEFAULT_HASH_DIM: usize = 4096;
pub const DEFAULT_HASH_SEED: u64 = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, FeatureError> {
        if values.is_empty() {
            return Err(FeatureError::ZeroDimension);
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|x| x * x).sum())
    }
}

/// Concatenation of the encodings of the two context utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextRep {
    values: Vec<f64>,
}

impl ContextRep {
    pub fn from_parts(first: &FeatureVector, second: &FeatureVector) -> Self {
        let mut values = Vec::with_capacity(first.dim() + second.dim());
        values.extend_from_slice(first.values());
        values.extend_from_slice(second.values());
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub trait Featurizer {
    fn dim(&self) -> usize;
    fn featurize(&self, text: &str) -> Result<FeatureVector, FeatureError>;
}

/// Encodes the context `u1 ⊕ u2` of a triple. `u3` is never read.
pub fn context_representation(
    t: &DialogTriple,
    f: &(impl Featurizer + ?Sized),
) -> Result<ContextRep, FeatureError> {
    let first = f.featurize(&t.u1)?;
    let second = f.featurize(&t.u2)?;
    Ok(ContextRep::from_parts(&first, &second))
}

/// Lowercase, then split on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            current.push(ch);
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit token hash: FNV-1a over the bytes, then a splitmix finalizer.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ splitmix64(seed);
    for b in token.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashingFeaturizer {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashingFeaturizer {
    fn default() -> Self {
        Self {
            dim: DEFAULT_HASH_DIM,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl HashingFeaturizer {
    pub fn new(dim: usize, seed: u64) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(Self { dim, seed })
    }
}

pub fn featurize_hash(text: &str, dim: usize, seed: u64) -> FeatureVector {
    let mut values = vec![0.0; dim.max(1)];
    for token in tokenize(text) {
        let h = token_hash(&token, seed);
        let bucket = (h % values.len() as u64) as usize;
        values[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = libm::sqrt(values.iter().map(|x| x * x).sum());
    if norm > 0.0 {
        values.iter_mut().for_each(|x| *x /= norm);
    }
    FeatureVector { values }
}

impl Featurizer for HashingFeaturizer {
    fn dim(&self) -> usize {
        self.dim
    }

    fn featurize(&self, text: &str) -> Result<FeatureVector, FeatureError> {
        Ok(featurize_hash(text, self.dim, self.seed))
    }
}

/// Precomputed utterance embeddings keyed by exact utterance text.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, FeatureVector>,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self, FeatureError> {
        if dim == 0 {
            return Err(FeatureError::ZeroDimension);
        }
        Ok(Self {
            dim,
            ..Default::default()
        })
    }

    /// Inserts a record; a repeated key replaces the earlier vector and is
    /// counted in [`EmbeddingTable::duplicates`].
    pub fn insert(&mut self, key: String, v: FeatureVector) -> Result<(), FeatureError> {
        if v.dim() != self.dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim,
                actual: v.dim(),
            });
        }
        if self.entries.insert(key, v).is_some() {
            self.duplicates += 1;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&FeatureVector> {
        self.entries.get(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }
}

impl Featurizer for EmbeddingTable {
    fn dim(&self) -> usize {
        self.dim
    }

    fn featurize(&self, text: &str) -> Result<FeatureVector, FeatureError> {
        self.entries
            .get(text)
            .cloned()
            .ok_or_else(|| FeatureError::MissingEmbedding(text.into()))
    }
}

/// Which featurizer a model was trained with. Stored in checkpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeaturizerConfig {
    Hash { dim: usize, seed: u64 },
    Embeddings { dim: usize, source: String },
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig::Hash {
            dim: DEFAULT_HASH_DIM,
            seed: DEFAULT_HASH_SEED,
        }
    }
}

impl FeaturizerConfig {
    pub fn dim(&self) -> usize {
        match self {
            FeaturizerConfig::Hash { dim, .. } | FeaturizerConfig::Embeddings { dim, .. } => *dim,
        }
    }
}
