//! The four response-emotion models and their checkpoint form.
//!
//! * `ContextCls`: softmax over an affine map of the context encoding.
//! * `ContextPersonaCls`: the same with the OCEAN vector appended.
//! * `PetVad` / `PetCls`: personality-weighted transition in VAD space,
//!   decoded by nearest anchor or by a small classifier.
//!
//! The transition for a speaker with traits `P` and preceding emotion `e1`:
//!
//! ```text
//! prior    = temperament_prior(P)
//! weights  = A_p(prior)                  (3 -> 3 affine, identity at init)
//! delta    = E_a(context)                (three tanh heads, bounded)
//! composed = anchor(e1) + weights ⊙ delta
//! ```

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::affect::{
    emotion_to_vad, temperament_prior, vad_to_emotion, EmotionLabel, PersonalityTraits,
    SentimentLabel, VadVector,
};
use crate::error::{ModelError, NnError};
use crate::featurize::FeaturizerConfig;
use crate::nn::{
    focal_loss, mse_loss, Activation, Mlp, MlpCache, MlpSpec, OutputTransform, Tensor2,
};

pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_DELTA_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    ContextCls,
    ContextPersonaCls,
    PetVad,
    PetCls,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::ContextCls,
        ModelVariant::ContextPersonaCls,
        ModelVariant::PetVad,
        ModelVariant::PetCls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::ContextCls => "context-cls",
            ModelVariant::ContextPersonaCls => "context-persona-cls",
            ModelVariant::PetVad => "pet-vad",
            ModelVariant::PetCls => "pet-cls",
        }
    }

    pub fn is_pet(self) -> bool {
        matches!(self, ModelVariant::PetVad | ModelVariant::PetCls)
    }

    pub fn has_classifier(self) -> bool {
        self != ModelVariant::PetVad
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .iter()
            .copied()
            .find(|v| v.name() == key || v.name().replace('-', "") == key)
            .ok_or_else(|| alloc::format!("unknown model variant `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    Emotion,
    Sentiment,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Emotion => EmotionLabel::COUNT,
            Task::Sentiment => SentimentLabel::COUNT,
        }
    }

    /// Class index of an emotion under this task.
    pub fn class_of(self, e: EmotionLabel) -> usize {
        match self {
            Task::Emotion => e.index(),
            Task::Sentiment => e.sentiment().index(),
        }
    }

    pub fn class_name(self, class: usize) -> &'static str {
        match self {
            Task::Emotion => EmotionLabel::ALL[class].name(),
            Task::Sentiment => SentimentLabel::ALL[class].name(),
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        (0..self.num_classes())
            .map(|c| self.class_name(c))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Emotion => "emotion",
            Task::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "emotion" => Ok(Task::Emotion),
            "sentiment" => Ok(Task::Sentiment),
            _ => Err(alloc::format!("unknown task `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub task: Task,
    /// Length of the context encoding (twice the featurizer dimension).
    pub context_dim: usize,
    /// Hidden width of each affective-encoder head.
    pub hidden: usize,
    /// Bound on each component of the transition delta.
    pub delta_bound: f64,
}

impl ModelConfig {
    pub fn new(variant: ModelVariant, task: Task, context_dim: usize) -> Self {
        Self {
            variant,
            task,
            context_dim,
            hidden: DEFAULT_HIDDEN,
            delta_bound: DEFAULT_DELTA_BOUND,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.variant == ModelVariant::PetVad && self.task != Task::Emotion {
            return Err(ModelError::VadNeedsEmotionTask);
        }
        if self.context_dim == 0 || self.hidden == 0 {
            return Err(NnError::InvalidSpec("context and hidden widths must be positive").into());
        }
        if !(self.delta_bound.is_finite() && self.delta_bound > 0.0) {
            return Err(NnError::InvalidSpec("delta bound must be positive").into());
        }
        Ok(())
    }

    fn classifier_spec(&self) -> Result<MlpSpec, NnError> {
        let input = match self.variant {
            ModelVariant::ContextCls => self.context_dim,
            ModelVariant::ContextPersonaCls => self.context_dim + 5,
            ModelVariant::PetVad | ModelVariant::PetCls => 3,
        };
        MlpSpec::affine(input, self.task.num_classes(), OutputTransform::Softmax)
    }

    fn adaptation_spec(&self) -> Result<MlpSpec, NnError> {
        MlpSpec::affine(3, 3, OutputTransform::None)
    }

    fn head_spec(&self) -> Result<MlpSpec, NnError> {
        MlpSpec::new(
            vec![self.context_dim, self.hidden, 1],
            vec![Activation::Tanh, Activation::Identity],
            OutputTransform::ScaledTanh(self.delta_bound),
        )
    }
}

/// Everything a model reads from one triple.
#[derive(Debug, Clone, Copy)]
pub struct ModelInput<'a> {
    pub context: &'a [f64],
    pub personality: PersonalityTraits,
    pub preceding: EmotionLabel,
}

/// Intermediate VAD quantities of a transition model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetTrace {
    pub prior: VadVector,
    pub weights: VadVector,
    pub delta: VadVector,
    pub preceding: VadVector,
    pub composed: VadVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelOutput {
    Distribution(Vec<f64>),
    Vad(VadVector),
}

#[derive(Debug, Clone)]
struct ForwardCache {
    adaptation: Option<MlpCache>,
    heads: Vec<MlpCache>,
    classifier: Option<MlpCache>,
    trace: Option<PetTrace>,
}

/// Focal-loss settings for the classifier variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub gamma: f64,
    pub alpha: Vec<f64>,
}

impl LossSpec {
    pub fn uniform(classes: usize, gamma: f64) -> Self {
        Self {
            gamma,
            alpha: vec![1.0; classes],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    Emotion(EmotionLabel),
    Sentiment(SentimentLabel),
}

impl Prediction {
    pub fn name(self) -> &'static str {
        match self {
            Prediction::Emotion(e) => e.name(),
            Prediction::Sentiment(s) => s.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    adaptation: Option<Mlp>,
    heads: Vec<Mlp>,
    classifier: Option<Mlp>,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

impl Model {
    /// Fresh parameters: Xavier-uniform classifier and hidden layers,
    /// identity adaptation layer, zeroed final encoder layers.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self, ModelError> {
        config.validate()?;
        let classifier = if config.variant.has_classifier() {
            Some(Mlp::xavier(config.classifier_spec()?, rng))
        } else {
            None
        };
        let (adaptation, heads) = if config.variant.is_pet() {
            let mut a = Mlp::zeros(config.adaptation_spec()?);
            *a.weight_mut(0) = Tensor2::identity(3);
            let mut heads = Vec::with_capacity(3);
            for _ in 0..3 {
                let mut h = Mlp::xavier(config.head_spec()?, rng);
                h.weight_mut(1).fill(0.0);
                h.bias_mut(1).fill(0.0);
                heads.push(h);
            }
            (Some(a), heads)
        } else {
            (None, Vec::new())
        };
        Ok(Self {
            config,
            adaptation,
            heads,
            classifier,
        })
    }

    /// All parameters zero except the identity adaptation layer.
    pub fn zeroed(config: ModelConfig) -> Result<Self, ModelError> {
        let mut m = Self::new(
            config,
            &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0),
        )?;
        for t in m.tensors_mut() {
            t.fill(0.0);
        }
        if let Some(a) = m.adaptation.as_mut() {
            *a.weight_mut(0) = Tensor2::identity(3);
        }
        Ok(m)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn variant(&self) -> ModelVariant {
        self.config.variant
    }

    pub fn task(&self) -> Task {
        self.config.task
    }

    pub fn adaptation(&self) -> Option<&Mlp> {
        self.adaptation.as_ref()
    }

    pub fn adaptation_mut(&mut self) -> Option<&mut Mlp> {
        self.adaptation.as_mut()
    }

    pub fn heads(&self) -> &[Mlp] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [Mlp] {
        &mut self.heads
    }

    pub fn classifier(&self) -> Option<&Mlp> {
        self.classifier.as_ref()
    }

    pub fn classifier_mut(&mut self) -> Option<&mut Mlp> {
        self.classifier.as_mut()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config,
            adaptation: self.adaptation.as_ref().map(Mlp::zeros_like),
            heads: self.heads.iter().map(Mlp::zeros_like).collect(),
            classifier: self.classifier.as_ref().map(Mlp::zeros_like),
        }
    }

    fn parts(&self) -> Vec<(String, &Mlp)> {
        let mut parts = Vec::new();
        if let Some(a) = &self.adaptation {
            parts.push(("adaptation".to_string(), a));
        }
        for (h, name) in self.heads.iter().zip(["v", "a", "d"]) {
            parts.push((alloc::format!("affective.{name}"), h));
        }
        if let Some(c) = &self.classifier {
            parts.push(("classifier".to_string(), c));
        }
        parts
    }

    /// Parameter tensors in a fixed order: adaptation, heads V/A/D, classifier.
    pub fn tensors(&self) -> Vec<&Tensor2> {
        self.parts()
            .into_iter()
            .flat_map(|(_, m)| m.tensors())
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        let mut out = Vec::new();
        if let Some(a) = self.adaptation.as_mut() {
            out.extend(a.tensors_mut());
        }
        for h in self.heads.iter_mut() {
            out.extend(h.tensors_mut());
        }
        if let Some(c) = self.classifier.as_mut() {
            out.extend(c.tensors_mut());
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        self.parts()
            .into_iter()
            .flat_map(|(name, m)| m.tensor_names(&name))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn check_context(&self, context: &[f64]) -> Result<(), ModelError> {
        if context.len() != self.config.context_dim {
            return Err(NnError::Shape {
                expected: (self.config.context_dim, 1),
                actual: (context.len(), 1),
            }
            .into());
        }
        Ok(())
    }

    fn transition(
        &self,
        input: &ModelInput<'_>,
    ) -> Result<(PetTrace, MlpCache, Vec<MlpCache>), ModelError> {
        self.check_context(input.context)?;
        let adaptation = self
            .adaptation
            .as_ref()
            .ok_or(NnError::InvalidSpec("not a transition model"))?;
        let prior = temperament_prior(input.personality);
        let (w, a_cache) = adaptation.apply(&prior.to_array())?;
        let mut delta = [0.0; 3];
        let mut caches = Vec::with_capacity(3);
        for (k, head) in self.heads.iter().enumerate() {
            let (out, cache) = head.apply(input.context)?;
            delta[k] = out[0];
            caches.push(cache);
        }
        let weights = VadVector::new(w[0], w[1], w[2]);
        let delta = VadVector::from_array(delta);
        let preceding = emotion_to_vad(input.preceding);
        let trace = PetTrace {
            prior,
            weights,
            delta,
            preceding,
            composed: preceding + weights.hadamard(delta),
        };
        Ok((trace, a_cache, caches))
    }

    fn forward_cached(
        &self,
        input: &ModelInput<'_>,
    ) -> Result<(ModelOutput, ForwardCache), ModelError> {
        match self.config.variant {
            ModelVariant::ContextCls | ModelVariant::ContextPersonaCls => {
                let personality = match self.config.variant {
                    ModelVariant::ContextPersonaCls => Some(input.personality),
                    _ => None,
                };
                let (p, cache) = self.baseline_cached(input.context, personality)?;
                Ok((
                    ModelOutput::Distribution(p),
                    ForwardCache {
                        adaptation: None,
                        heads: Vec::new(),
                        classifier: Some(cache),
                        trace: None,
                    },
                ))
            }
            ModelVariant::PetVad | ModelVariant::PetCls => {
                let (trace, a_cache, heads) = self.transition(input)?;
                let (output, classifier) = match &self.classifier {
                    Some(c) => {
                        let (p, cache) = c.apply(&trace.composed.to_array())?;
                        (ModelOutput::Distribution(p), Some(cache))
                    }
                    None => (ModelOutput::Vad(trace.composed), None),
                };
                Ok((
                    output,
                    ForwardCache {
                        adaptation: Some(a_cache),
                        heads,
                        classifier,
                        trace: Some(trace),
                    },
                ))
            }
        }
    }

    fn baseline_cached(
        &self,
        context: &[f64],
        personality: Option<PersonalityTraits>,
    ) -> Result<(Vec<f64>, MlpCache), ModelError> {
        self.check_context(context)?;
        let classifier = self
            .classifier
            .as_ref()
            .ok_or(NnError::InvalidSpec("no classifier"))?;
        match self.config.variant {
            ModelVariant::ContextCls => Ok(classifier.apply(context)?),
            ModelVariant::ContextPersonaCls => {
                let p = personality.ok_or(ModelError::MissingPersonality)?;
                let mut x = Vec::with_capacity(context.len() + 5);
                x.extend_from_slice(context);
                x.extend_from_slice(&p.to_array());
                Ok(classifier.apply(&x)?)
            }
            _ => Err(NnError::InvalidSpec("not a context baseline").into()),
        }
    }

    /// Class distribution of a context baseline. The personality is ignored
    /// by `ContextCls` and required by `ContextPersonaCls`.
    pub fn baseline_forward(
        &self,
        context: &[f64],
        personality: Option<PersonalityTraits>,
    ) -> Result<Vec<f64>, ModelError> {
        Ok(self.baseline_cached(context, personality)?.0)
    }

    /// Runs a transition model, returning its output and the VAD trace.
    pub fn pet_forward(
        &self,
        input: &ModelInput<'_>,
    ) -> Result<(ModelOutput, PetTrace), ModelError> {
        let (output, cache) = self.forward_cached(input)?;
        let trace = cache
            .trace
            .ok_or(NnError::InvalidSpec("not a transition model"))?;
        Ok((output, trace))
    }

    pub fn forward(
        &self,
        input: &ModelInput<'_>,
    ) -> Result<(ModelOutput, Option<PetTrace>), ModelError> {
        let (output, cache) = self.forward_cached(input)?;
        Ok((output, cache.trace))
    }

    /// Predicted class index under the model's task.
    pub fn predict_class(&self, input: &ModelInput<'_>) -> Result<usize, ModelError> {
        Ok(match self.forward(input)?.0 {
            ModelOutput::Distribution(p) => argmax(&p),
            ModelOutput::Vad(v) => self.config.task.class_of(vad_to_emotion(v)),
        })
    }

    pub fn predict(&self, input: &ModelInput<'_>) -> Result<Prediction, ModelError> {
        let class = self.predict_class(input)?;
        Ok(match self.config.task {
            Task::Emotion => Prediction::Emotion(EmotionLabel::ALL[class]),
            Task::Sentiment => Prediction::Sentiment(SentimentLabel::ALL[class]),
        })
    }

    /// Loss of one example; its gradient is added into `grads`, which must
    /// come from [`Model::zeros_like`].
    ///
    /// Classifier variants use focal loss on the softmax output. `PetVad`
    /// regresses the composed point onto the target anchor with MSE.
    pub fn loss_and_grad(
        &self,
        input: &ModelInput<'_>,
        target: usize,
        loss: &LossSpec,
        grads: &mut Model,
    ) -> Result<f64, ModelError> {
        if target >= self.config.task.num_classes() {
            return Err(NnError::BadTarget {
                target,
                classes: self.config.task.num_classes(),
            }
            .into());
        }
        if grads.config != self.config {
            return Err(NnError::InvalidSpec("gradient buffer belongs to another model").into());
        }
        let (output, cache) = self.forward_cached(input)?;

        let (value, d_composed) = match output {
            ModelOutput::Distribution(p) => {
                let (value, d_logits) = focal_loss(&p, target, &loss.alpha, loss.gamma)?;
                let classifier = self
                    .classifier
                    .as_ref()
                    .expect("distribution implies classifier");
                let c_cache = cache.classifier.as_ref().expect("classifier ran");
                let g = grads.classifier.as_mut().expect("same config");
                let d_in = classifier.backprop_logits(
                    c_cache,
                    &d_logits,
                    g,
                    self.config.variant.is_pet(),
                )?;
                if !self.config.variant.is_pet() {
                    return Ok(value);
                }
                let d_in = d_in.expect("input gradient requested");
                (value, VadVector::new(d_in[0], d_in[1], d_in[2]))
            }
            ModelOutput::Vad(v) => {
                let anchor = emotion_to_vad(EmotionLabel::ALL[target]);
                mse_loss(v, anchor)
            }
        };

        let trace = cache.trace.expect("transition models record a trace");
        let d_weights = d_composed.hadamard(trace.delta);
        let d_delta = d_composed.hadamard(trace.weights);
        let adaptation = self.adaptation.as_ref().expect("transition model");
        adaptation.backprop(
            cache.adaptation.as_ref().expect("transition model"),
            &d_weights.to_array(),
            grads.adaptation.as_mut().expect("same config"),
            false,
        )?;
        for (k, d) in d_delta.to_array().iter().enumerate() {
            self.heads[k].backprop(&cache.heads[k], &[*d], &mut grads.heads[k], false)?;
        }
        Ok(value)
    }
}

/// A named parameter tensor as stored in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

pub const CHECKPOINT_FORMAT: &str = "pet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Serializable snapshot of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub featurizer: FeaturizerConfig,
    pub seed: u64,
    /// 1-based epoch the parameters come from; 0 for untrained.
    pub epoch: usize,
    pub valid_score: f64,
    /// Effective training configuration, when produced by training.
    pub train_config: Option<crate::train::TrainConfig>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, featurizer: FeaturizerConfig) -> Self {
        let tensors = model
            .tensor_names()
            .into_iter()
            .zip(model.tensors())
            .map(|(name, t)| NamedTensor {
                name,
                rows: t.rows(),
                cols: t.cols(),
                data: t.data().to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: *model.config(),
            featurizer,
            seed: 0,
            epoch: 0,
            valid_score: 0.0,
            train_config: None,
            tensors,
        }
    }

    /// Rebuilds the model, validating every tensor against the variant's
    /// architecture. With `expected` set, a different variant is rejected.
    pub fn to_model(&self, expected: Option<ModelVariant>) -> Result<Model, ModelError> {
        if let Some(v) = expected {
            if v != self.model.variant {
                return Err(ModelError::VariantMismatch {
                    expected: v.name().into(),
                    found: self.model.variant.name().into(),
                });
            }
        }
        if self.model.context_dim != 2 * self.featurizer.dim() {
            return Err(ModelError::TensorMismatch(
                "context width vs featurizer dimension".into(),
            ));
        }
        let mut model = Model::zeroed(self.model)?;
        let names = model.tensor_names();
        if names.len() != self.tensors.len() {
            return Err(ModelError::TensorMismatch(alloc::format!(
                "{} tensors, expected {}",
                self.tensors.len(),
                names.len()
            )));
        }
        for ((name, slot), stored) in names.iter().zip(model.tensors_mut()).zip(&self.tensors) {
            if &stored.name != name
                || (stored.rows, stored.cols) != slot.shape()
                || stored.data.len() != slot.len()
            {
                return Err(ModelError::TensorMismatch(name.clone()));
            }
            if stored.data.iter().any(|x| !x.is_finite()) {
                return Err(ModelError::TensorMismatch(alloc::format!(
                    "{name} (non-finite)"
                )));
            }
            slot.data_mut().copy_from_slice(&stored.data);
        }
        Ok(model)
    }
}
