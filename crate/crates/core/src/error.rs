use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AffectError {
    #[error("unknown emotion label `{0}`")]
    UnknownEmotion(String),
    #[error("personality trait {trait_name} = {value} is outside [0, 1]")]
    TraitOutOfRange {
        trait_name: &'static str,
        value: f64,
    },
    #[error("cannot average an empty list of personality annotations")]
    NoAnnotations,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error(transparent)]
    Affect(#[from] AffectError),
    #[error("unknown split tag `{0}`")]
    UnknownSplit(String),
    #[error("utterance `{0}` is empty")]
    EmptyUtterance(&'static str),
    #[error("role `{role}` appears with two different personalities")]
    RoleConflict { role: String },
    #[error("unknown role `{0}`")]
    UnknownRole(String),
    #[error("dispersion needs at least two matrices, got {0}")]
    TooFewMatrices(usize),
    #[error("split {0} has no triples")]
    EmptySplit(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("no embedding for utterance `{0}`")]
    MissingEmbedding(String),
    #[error("expected a {expected}-dimensional vector, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("feature dimension must be at least 1")]
    ZeroDimension,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("cache does not belong to this network")]
    StaleCache,
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("target class {target} out of range for {classes} classes")]
    BadTarget { target: usize, classes: usize },
    #[error("invalid network spec: {0}")]
    InvalidSpec(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("PET-VAD only supports the emotion task")]
    VadNeedsEmotionTask,
    #[error("the context-with-personality baseline needs a personality vector")]
    MissingPersonality,
    #[error("checkpoint holds variant {found}, expected {expected}")]
    VariantMismatch { expected: String, found: String },
    #[error("checkpoint tensor `{0}` is missing or has the wrong shape")]
    TensorMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
}
