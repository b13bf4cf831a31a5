//! Mini-batch training with validation-based model selection, and
//! evaluation of a model on a dataset split.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affect::{EmotionLabel, PersonalityTraits};
use crate::error::{DataError, FeatureError, ModelError, TrainError};
use crate::featurize::{context_representation, Featurizer, FeaturizerConfig};
use crate::metrics::{metrics_from_predictions, MetricsReport};
use crate::model::{Checkpoint, LossSpec, Model, ModelConfig, ModelInput, ModelVariant, Task};
use crate::nn::{adam_step, inverse_frequency_alpha, AdamConfig, AdamState};
use crate::peld::{Dataset, DialogTriple, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    WeightedF1,
    MacroF1,
}

impl core::str::FromStr for SelectionMetric {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "w-avg" | "weighted" | "weighted_f1" | "w-avg-f1" => Ok(SelectionMetric::WeightedF1),
            "m-avg" | "macro" | "macro_f1" | "m-avg-f1" => Ok(SelectionMetric::MacroF1),
            _ => Err(alloc::format!("unknown selection metric `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: ModelVariant,
    pub task: Task,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Focal-loss focusing parameter for the classifier variants.
    pub gamma: f64,
    pub hidden: usize,
    pub delta_bound: f64,
    pub selection: SelectionMetric,
    pub featurizer: FeaturizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: ModelVariant::PetCls,
            task: Task::Emotion,
            epochs: 50,
            batch_size: 32,
            seed: 13,
            adam: AdamConfig::default(),
            gamma: 2.0,
            hidden: crate::model::DEFAULT_HIDDEN,
            delta_bound: crate::model::DEFAULT_DELTA_BOUND,
            selection: SelectionMetric::WeightedF1,
            featurizer: FeaturizerConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be at least 1"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(TrainError::Config("focal gamma must be non-negative"));
        }
        if self.adam.lr.is_nan() || self.adam.lr <= 0.0 {
            return Err(TrainError::Config("learning rate must be positive"));
        }
        self.model_config().validate()?;
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            variant: self.variant,
            task: self.task,
            context_dim: 2 * self.featurizer.dim(),
            hidden: self.hidden,
            delta_bound: self.delta_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_macro_f1: f64,
    pub valid_weighted_f1: f64,
}

impl EpochRecord {
    pub fn score(&self, metric: SelectionMetric) -> f64 {
        match metric {
            SelectionMetric::WeightedF1 => self.valid_weighted_f1,
            SelectionMetric::MacroF1 => self.valid_macro_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Earliest epoch with the best selection score.
    pub selected_epoch: usize,
    pub selection: SelectionMetric,
    pub focal_alpha: Vec<f64>,
}

impl TrainHistory {
    pub fn best_score(&self) -> f64 {
        self.epochs
            .iter()
            .map(|e| e.score(self.selection))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A triple reduced to what the models consume, with a sparse context.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub context: Vec<(u32, f64)>,
    pub personality: PersonalityTraits,
    pub preceding: EmotionLabel,
    pub target: usize,
}

/// A triple paired with its class index under a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledTriple<'a> {
    pub triple: &'a DialogTriple,
    pub target: usize,
}

pub fn task_view(d: &Dataset, task: Task) -> Vec<LabeledTriple<'_>> {
    d.triples()
        .iter()
        .map(|t| LabeledTriple {
            triple: t,
            target: task.class_of(t.e3),
        })
        .collect()
}

/// Targets coarsened to sentiments. The preceding emotion stays a full
/// emotion so transition models keep its VAD anchor.
pub fn sentiment_view(d: &Dataset) -> Vec<LabeledTriple<'_>> {
    task_view(d, Task::Sentiment)
}

pub fn encode_samples<'a>(
    triples: impl IntoIterator<Item = &'a DialogTriple>,
    featurizer: &(impl Featurizer + ?Sized),
    task: Task,
) -> Result<Vec<EncodedSample>, FeatureError> {
    triples
        .into_iter()
        .map(|t| {
            let ctx = context_representation(t, featurizer)?;
            let context = ctx
                .values()
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect();
            Ok(EncodedSample {
                context,
                personality: t.personality,
                preceding: t.e1,
                target: task.class_of(t.e3),
            })
        })
        .collect()
}

/// Dense scratch buffer for sparse contexts.
struct ContextBuffer {
    dense: Vec<f64>,
}

impl ContextBuffer {
    fn new(dim: usize) -> Self {
        Self {
            dense: vec![0.0; dim],
        }
    }

    fn with<T>(&mut self, s: &EncodedSample, f: impl FnOnce(ModelInput<'_>) -> T) -> T {
        for &(i, v) in &s.context {
            self.dense[i as usize] = v;
        }
        let out = f(ModelInput {
            context: &self.dense,
            personality: s.personality,
            preceding: s.preceding,
        });
        for &(i, _) in &s.context {
            self.dense[i as usize] = 0.0;
        }
        out
    }
}

pub fn predict_encoded(model: &Model, samples: &[EncodedSample]) -> Result<Vec<usize>, ModelError> {
    let mut buf = ContextBuffer::new(model.config().context_dim);
    samples
        .iter()
        .map(|s| {
            if s.context
                .iter()
                .any(|(i, _)| *i as usize >= model.config().context_dim)
            {
                return Err(crate::error::NnError::Shape {
                    expected: (model.config().context_dim, 1),
                    actual: (s.context.last().map_or(0, |c| c.0 as usize + 1), 1),
                }
                .into());
            }
            buf.with(s, |input| model.predict_class(&input))
        })
        .collect()
}

pub fn evaluate_encoded(
    model: &Model,
    samples: &[EncodedSample],
) -> Result<MetricsReport, ModelError> {
    let predicted = predict_encoded(model, samples)?;
    let truth: Vec<usize> = samples.iter().map(|s| s.target).collect();
    let labels = model
        .task()
        .class_names()
        .into_iter()
        .map(ToString::to_string)
        .collect();
    Ok(metrics_from_predictions(labels, &truth, &predicted))
}

/// Metrics of `model` on one split of `d` under the model's task.
pub fn evaluate(
    model: &Model,
    d: &Dataset,
    split: Split,
    featurizer: &(impl Featurizer + ?Sized),
) -> Result<MetricsReport, TrainError> {
    let samples =
        encode_samples(d.split(split), featurizer, model.task()).map_err(ModelError::from)?;
    if samples.is_empty() {
        return Err(DataError::EmptySplit(split.name()).into());
    }
    Ok(evaluate_encoded(model, &samples)?)
}

/// Result of a training run before it is packaged as a checkpoint.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub history: TrainHistory,
}

/// Trains on pre-encoded samples, evaluating on `valid` after every epoch
/// and keeping the parameters of the best epoch.
pub fn train_encoded(
    train: &[EncodedSample],
    valid: &[EncodedSample],
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainedModel, TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(DataError::EmptySplit("train").into());
    }
    if valid.is_empty() {
        return Err(DataError::EmptySplit("valid").into());
    }
    let model_cfg = cfg.model_config();
    let k = cfg.task.num_classes();
    if train.iter().chain(valid).any(|s| s.target >= k) {
        return Err(TrainError::Config(
            "sample target outside the task's classes",
        ));
    }

    let mut counts = vec![0u64; k];
    for s in train {
        counts[s.target] += 1;
    }
    let loss_spec = LossSpec {
        gamma: cfg.gamma,
        alpha: inverse_frequency_alpha(&counts),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Model::new(model_cfg, &mut rng)?;
    let mut grads = model.zeros_like();
    let mut adam = AdamState::new(cfg.adam, &model.tensors());
    let mut buf = ContextBuffer::new(model_cfg.context_dim);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best: Option<(f64, Model)> = None;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut selected_epoch = 1;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for t in grads.tensors_mut() {
                t.fill(0.0);
            }
            for &i in batch {
                let s = &train[i];
                loss_sum += buf.with(s, |input| {
                    model.loss_and_grad(&input, s.target, &loss_spec, &mut grads)
                })?;
            }
            let scale = 1.0 / batch.len() as f64;
            for t in grads.tensors_mut() {
                t.scale(scale);
            }
            let g = grads.tensors();
            adam_step(&mut model.tensors_mut(), &g, &mut adam).map_err(ModelError::from)?;
        }

        let report = evaluate_encoded(&model, valid)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            valid_macro_f1: report.macro_f1,
            valid_weighted_f1: report.weighted_f1,
        };
        observer(&record);
        let score = record.score(cfg.selection);
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, model.clone()));
            selected_epoch = epoch;
        }
        records.push(record);
    }

    let (_, model) = best.expect("at least one epoch ran");
    Ok(TrainedModel {
        model,
        history: TrainHistory {
            epochs: records,
            selected_epoch,
            selection: cfg.selection,
            focal_alpha: loss_spec.alpha,
        },
    })
}

/// Trains `cfg.variant` on the train split of `d`, selecting on the valid split.
pub fn train(
    d: &Dataset,
    featurizer: &(impl Featurizer + ?Sized),
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord),
) -> Result<(Checkpoint, TrainHistory), TrainError> {
    cfg.validate()?;
    if featurizer.dim() != cfg.featurizer.dim() {
        return Err(TrainError::Config(
            "featurizer dimension differs from the configured one",
        ));
    }
    let encode = |split: Split| -> Result<Vec<EncodedSample>, TrainError> {
        let samples =
            encode_samples(d.split(split), featurizer, cfg.task).map_err(ModelError::from)?;
        if samples.is_empty() {
            return Err(DataError::EmptySplit(split.name()).into());
        }
        Ok(samples)
    };
    let train_set = encode(Split::Train)?;
    let valid_set = encode(Split::Valid)?;
    let trained = train_encoded(&train_set, &valid_set, cfg, observer)?;
    Ok((package(&trained, cfg), trained.history))
}

/// Checkpoint of a finished run, with the run's provenance filled in.
pub fn package(trained: &TrainedModel, cfg: &TrainConfig) -> Checkpoint {
    let mut ck = Checkpoint::from_model(&trained.model, cfg.featurizer.clone());
    ck.seed = cfg.seed;
    ck.epoch = trained.history.selected_epoch;
    ck.valid_score = trained.history.best_score();
    ck.train_config = Some(cfg.clone());
    ck
}
