//! Personality-affected emotion transition for choosing the emotion of a
//! dialog response.
//!
//! A speaker's preceding emotion is placed at its anchor in
//! Valence-Arousal-Dominance space. A context encoder proposes a
//! displacement, and per-dimension weights derived from the speaker's
//! Big-Five personality scale that displacement before it is added to the
//! anchor. The resulting point is decoded into an emotion category.
//!
//! The crate is `no_std` with `alloc`; file formats and the command line
//! live in the companion `pet` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod affect;
pub mod error;
pub mod featurize;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod peld;
pub mod train;

pub use affect::{
    average_personality, emotion_to_sentiment, emotion_to_vad, temperament_prior, vad_to_emotion,
    EmotionLabel, PersonalityTraits, SentimentLabel, VadVector,
};
pub use error::{AffectError, DataError, FeatureError, ModelError, NnError, TrainError};
pub use metrics::{metrics_from_confusion, metrics_from_predictions, MetricsReport};
pub use model::{
    Checkpoint, Model, ModelConfig, ModelInput, ModelOutput, ModelVariant, PetTrace, Prediction,
    Task,
};
pub use peld::{Dataset, DialogTriple, Split};
pub use train::{evaluate, train, EpochRecord, SelectionMetric, TrainConfig, TrainHistory};
