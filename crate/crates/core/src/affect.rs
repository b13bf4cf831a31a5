//! Emotions, sentiments, VAD vectors and Big-Five personality temperament.
//!
//! Everything here is a pure function of immutable values. The canonical
//! emotion order is `Anger, Disgust, Fear, Joy, Neutral, Sadness, Surprise`
//! and every vector or matrix indexed by emotion in this crate follows it.

use core::fmt;
use core::ops::{Add, Mul, Sub};
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::AffectError;

/// One of the seven basic emotion categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EmotionLabel {
    Anger,
    Disgust,
    Fear,
    Joy,
    Neutral,
    Sadness,
    Surprise,
}

impl EmotionLabel {
    pub const COUNT: usize = 7;

    pub const ALL: [EmotionLabel; 7] = [
        EmotionLabel::Anger,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Joy,
        EmotionLabel::Neutral,
        EmotionLabel::Sadness,
        EmotionLabel::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "Anger",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Fear => "Fear",
            EmotionLabel::Joy => "Joy",
            EmotionLabel::Neutral => "Neutral",
            EmotionLabel::Sadness => "Sadness",
            EmotionLabel::Surprise => "Surprise",
        }
    }

    /// Fixed VAD anchor of this emotion.
    pub fn vad(self) -> VadVector {
        emotion_to_vad(self)
    }

    pub fn sentiment(self) -> SentimentLabel {
        emotion_to_sentiment(self)
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = AffectError;

    /// Accepts the canonical names case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AffectError::UnknownEmotion(s.into()))
    }
}

/// Three-way coarsening of the emotion categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SentimentLabel {
    Negative,
    Neutral,
    Positive,
}

impl SentimentLabel {
    pub const COUNT: usize = 3;

    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Negative,
        SentimentLabel::Neutral,
        SentimentLabel::Positive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::Negative => "Negative",
            SentimentLabel::Neutral => "Neutral",
            SentimentLabel::Positive => "Positive",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point or a displacement in Valence-Arousal-Dominance space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VadVector {
    pub v: f64,
    pub a: f64,
    pub d: f64,
}

impl VadVector {
    pub const ZERO: VadVector = VadVector::new(0.0, 0.0, 0.0);

    pub const fn new(v: f64, a: f64, d: f64) -> Self {
        Self { v, a, d }
    }

    pub fn from_array(x: [f64; 3]) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.v, self.a, self.d]
    }

    pub fn is_finite(self) -> bool {
        self.v.is_finite() && self.a.is_finite() && self.d.is_finite()
    }

    /// Componentwise (Hadamard) product.
    pub fn hadamard(self, other: VadVector) -> VadVector {
        VadVector::new(self.v * other.v, self.a * other.a, self.d * other.d)
    }

    /// Mean of the squared componentwise differences.
    pub fn mse(self, other: VadVector) -> f64 {
        let dv = self.v - other.v;
        let da = self.a - other.a;
        let dd = self.d - other.d;
        (dv * dv + da * da + dd * dd) / 3.0
    }
}

impl Add for VadVector {
    type Output = VadVector;
    fn add(self, rhs: VadVector) -> VadVector {
        VadVector::new(self.v + rhs.v, self.a + rhs.a, self.d + rhs.d)
    }
}

impl Sub for VadVector {
    type Output = VadVector;
    fn sub(self, rhs: VadVector) -> VadVector {
        VadVector::new(self.v - rhs.v, self.a - rhs.a, self.d - rhs.d)
    }
}

impl Mul<f64> for VadVector {
    type Output = VadVector;
    fn mul(self, rhs: f64) -> VadVector {
        VadVector::new(self.v * rhs, self.a * rhs, self.d * rhs)
    }
}

/// Big-Five (OCEAN) trait strengths.
///
/// Dataset-sourced traits lie in `[0, 1]`; [`PersonalityTraits::validated`]
/// enforces that. Plain construction accepts any finite value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PersonalityTraits {
    pub o: f64,
    pub c: f64,
    pub e: f64,
    pub a: f64,
    pub n: f64,
}

impl PersonalityTraits {
    pub const fn new(o: f64, c: f64, e: f64, a: f64, n: f64) -> Self {
        Self { o, c, e, a, n }
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.o, self.c, self.e, self.a, self.n]
    }

    /// Builds traits that must each lie in `[0, 1]`.
    pub fn validated(x: [f64; 5]) -> Result<Self, AffectError> {
        for (i, &value) in x.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(AffectError::TraitOutOfRange {
                    trait_name: TRAIT_NAMES[i],
                    value,
                });
            }
        }
        Ok(Self::from_array(x))
    }
}

pub const TRAIT_NAMES: [&str; 5] = ["O", "C", "E", "A", "N"];

const ANCHORS: [VadVector; 7] = [
    VadVector::new(-0.51, 0.59, 0.25),
    VadVector::new(-0.60, 0.35, 0.11),
    VadVector::new(-0.62, 0.82, -0.43),
    VadVector::new(0.81, 0.51, 0.46),
    VadVector::new(0.00, 0.00, 0.00),
    VadVector::new(-0.63, -0.27, -0.33),
    VadVector::new(0.40, 0.67, -0.13),
];

pub fn emotion_to_vad(e: EmotionLabel) -> VadVector {
    ANCHORS[e.index()]
}

/// Nearest anchor under mean squared error; ties go to the lowest index.
pub fn vad_to_emotion(p: VadVector) -> EmotionLabel {
    EmotionLabel::ALL[nearest_anchor(p, &ANCHORS)]
}

fn nearest_anchor(p: VadVector, anchors: &[VadVector]) -> usize {
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (i, anchor) in anchors.iter().enumerate() {
        let err = p.mse(*anchor);
        if err < best_err {
            best = i;
            best_err = err;
        }
    }
    best
}

pub fn emotion_to_sentiment(e: EmotionLabel) -> SentimentLabel {
    match e {
        EmotionLabel::Joy | EmotionLabel::Surprise => SentimentLabel::Positive,
        EmotionLabel::Neutral => SentimentLabel::Neutral,
        EmotionLabel::Anger
        | EmotionLabel::Disgust
        | EmotionLabel::Fear
        | EmotionLabel::Sadness => SentimentLabel::Negative,
    }
}

/// Linear temperament regression from OCEAN traits to VAD.
pub fn temperament_prior(p: PersonalityTraits) -> VadVector {
    VadVector::new(
        0.21 * p.e + 0.59 * p.a + 0.19 * p.n,
        0.15 * p.o + 0.30 * p.a - 0.57 * p.n,
        0.25 * p.o + 0.17 * p.c + 0.60 * p.e - 0.32 * p.a,
    )
}

/// Componentwise mean of several annotations of the same speaker.
pub fn average_personality(
    annotations: &[PersonalityTraits],
) -> Result<PersonalityTraits, AffectError> {
    if annotations.is_empty() {
        return Err(AffectError::NoAnnotations);
    }
    let mut sum = [0.0; 5];
    for p in annotations {
        for (acc, x) in sum.iter_mut().zip(p.to_array()) {
            *acc += x;
        }
    }
    let k = annotations.len() as f64;
    Ok(PersonalityTraits::from_array(sum.map(|s| s / k)))
}

/// Averaged personalities of the six main Friends roles.
pub const MAIN_ROLES: [(&str, PersonalityTraits); 6] = [
    (
        "Chandler",
        PersonalityTraits::new(0.648, 0.375, 0.386, 0.58, 0.477),
    ),
    (
        "Joey",
        PersonalityTraits::new(0.574, 0.614, 0.297, 0.545, 0.455),
    ),
    (
        "Monica",
        PersonalityTraits::new(0.713, 0.457, 0.457, 0.66, 0.511),
    ),
    (
        "Phoebe",
        PersonalityTraits::new(0.6, 0.48, 0.31, 0.46, 0.56),
    ),
    (
        "Rachel",
        PersonalityTraits::new(0.635, 0.354, 0.521, 0.552, 0.469),
    ),
    (
        "Ross",
        PersonalityTraits::new(0.722, 0.489, 0.6, 0.533, 0.356),
    ),
];

pub fn main_role_personality(name: &str) -> Option<PersonalityTraits> {
    MAIN_ROLES
        .iter()
        .find(|(role, _)| role.eq_ignore_ascii_case(name.trim()))
        .map(|(_, p)| *p)
}
