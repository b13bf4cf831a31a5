//! The `pet` command line.
//!
//! Exit status: 0 on success, 1 on a usage error, 2 on a data error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use pet_core::affect::main_role_personality;
use pet_core::featurize::{
    context_representation, EmbeddingTable, Featurizer, FeaturizerConfig, HashingFeaturizer,
};
use pet_core::model::{Checkpoint, ModelInput, ModelOutput};
use pet_core::peld::{
    dataset_stats, role_transition_matrices, transition_dispersion, transition_matrix,
};
use pet_core::train::{evaluate, train, TrainConfig};
use pet_core::{Dataset, DialogTriple, EmotionLabel, PersonalityTraits, Split};
use serde::Serialize;

use crate::checkpoint::{load_model, save_checkpoint};
use crate::config::{CliConfig, FeaturizerMode, DATA_DIR_ENV};
use crate::embeddings::load_embeddings;
use crate::json::to_pretty;
use crate::table;
use crate::triples::load_triples;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pet",
    version,
    about = "Personality-affected emotion transition: corpus analytics, training and prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Triple CSV file [default: $PET_DATA_DIR/peld.csv]
    #[arg(long)]
    data: Option<PathBuf>,
    /// Config file, JSON or `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip malformed records instead of failing
    #[arg(long)]
    lenient: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// context-cls, context-persona-cls, pet-vad or pet-cls
    #[arg(long)]
    variant: Option<String>,
    /// emotion or sentiment
    #[arg(long)]
    task: Option<String>,
    /// hash or embeddings
    #[arg(long)]
    featurizer: Option<String>,
    /// Embedding TSV file; implies `--featurizer embeddings`
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    hash_dim: Option<usize>,
    #[arg(long)]
    hash_seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Focal-loss focusing parameter
    #[arg(long)]
    gamma: Option<f64>,
    /// Hidden width of each affective-encoder head
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    delta_bound: Option<f64>,
    /// w-avg or m-avg
    #[arg(long)]
    selection: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus statistics
    Stats {
        #[command(flatten)]
        common: Common,
        /// Plain-text table instead of JSON
        #[arg(long)]
        table: bool,
    },
    /// Emotion transition matrices and their spread across roles
    Transitions {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        role: Option<String>,
        #[arg(long)]
        table: bool,
    },
    /// Train a model, keeping the epoch with the best valid score
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        args: TrainArgs,
    },
    /// Evaluate a checkpoint on one split
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Embedding TSV file overriding the one recorded in the checkpoint
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        table: bool,
    },
    /// Predict the response emotion of a single exchange
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        u1: String,
        #[arg(long)]
        e1: String,
        #[arg(long)]
        u2: String,
        /// Responding role; looked up in the data file or the built-in main roles
        #[arg(long)]
        role: Option<String>,
        /// Explicit traits `O,C,E,A,N`, overriding the role lookup
        #[arg(long)]
        personality: Option<String>,
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<crate::error::FormatError> for CliError {
    fn from(e: crate::error::FormatError) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_flag<T: std::str::FromStr>(name: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| usage(format!("--{name}: {e}")))
}

/// Runs one command line and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_DATA
        }
    }
}

fn base_config(common: &Common) -> CliResult<CliConfig> {
    let mut cfg = match &common.config {
        Some(p) => CliConfig::load(p).map_err(|e| usage(e.to_string()))?,
        None => CliConfig::default(),
    };
    if let Some(d) = &common.data {
        cfg.data = Some(d.clone());
    }
    if common.lenient {
        cfg.strict = false;
    }
    Ok(cfg)
}

fn apply_train_args(cfg: &mut CliConfig, a: &TrainArgs) -> CliResult<()> {
    if let Some(v) = &a.variant {
        cfg.variant = parse_flag("variant", v)?;
    }
    if let Some(v) = &a.task {
        cfg.task = parse_flag("task", v)?;
    }
    if let Some(v) = &a.featurizer {
        cfg.featurizer = parse_flag("featurizer", v)?;
    }
    if let Some(p) = &a.embeddings {
        cfg.embeddings = Some(p.clone());
        cfg.featurizer = FeaturizerMode::Embeddings;
    }
    if let Some(v) = &a.selection {
        cfg.selection = parse_flag("selection", v)?;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = a.$field { cfg.$field = v; })*};
    }
    set!(
        hash_dim,
        hash_seed,
        epochs,
        batch_size,
        seed,
        lr,
        beta1,
        beta2,
        eps,
        gamma,
        hidden,
        delta_bound
    );
    if let Some(o) = &a.out {
        cfg.out = o.clone();
    }
    Ok(())
}

fn load_dataset(cfg: &CliConfig) -> CliResult<Dataset> {
    let path = cfg.data_path().ok_or_else(|| {
        usage(format!(
            "no data file: pass --data, set `data` in the config, or set {DATA_DIR_ENV}"
        ))
    })?;
    let loaded = load_triples(&path, cfg.strict)?;
    if !loaded.skipped.is_empty() {
        log::warn!(
            "{}: skipped {} malformed records",
            path.display(),
            loaded.skipped.len()
        );
    }
    if loaded.dataset.is_empty() {
        return Err(anyhow!("{}: no triples", path.display()).into());
    }
    Ok(loaded.dataset)
}

/// The featurizer named by a config, with the setup recorded in checkpoints.
fn build_featurizer(cfg: &CliConfig) -> CliResult<(Box<dyn Featurizer>, FeaturizerConfig)> {
    match cfg.featurizer {
        FeaturizerMode::Hash => {
            let f = HashingFeaturizer::new(cfg.hash_dim, cfg.hash_seed)
                .map_err(|e| usage(format!("--hash-dim: {e}")))?;
            Ok((
                Box::new(f),
                FeaturizerConfig::Hash {
                    dim: cfg.hash_dim,
                    seed: cfg.hash_seed,
                },
            ))
        }
        FeaturizerMode::Embeddings => {
            let path = cfg
                .embeddings
                .as_ref()
                .ok_or_else(|| usage("the embeddings featurizer needs --embeddings"))?;
            let table = load_embeddings(path)?;
            let fc = FeaturizerConfig::Embeddings {
                dim: table.dim(),
                source: path.display().to_string(),
            };
            Ok((Box::new(table), fc))
        }
    }
}

/// Rebuilds the featurizer a checkpoint was trained with.
fn checkpoint_featurizer(
    ck: &Checkpoint,
    override_path: Option<&Path>,
) -> CliResult<Box<dyn Featurizer>> {
    match &ck.featurizer {
        FeaturizerConfig::Hash { dim, seed } => Ok(Box::new(
            HashingFeaturizer::new(*dim, *seed).map_err(anyhow::Error::from)?,
        )),
        FeaturizerConfig::Embeddings { dim, source } => {
            let path = override_path
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from(source));
            let table: EmbeddingTable = load_embeddings(&path)?;
            if table.dim() != *dim {
                return Err(anyhow!(
                    "{}: embeddings have dimension {}, checkpoint expects {dim}",
                    path.display(),
                    table.dim()
                )
                .into());
            }
            Ok(Box::new(table))
        }
    }
}

/// Every artifact carries the command, effective config and seed.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    command: &'a str,
    config: &'a CliConfig,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    command: &str,
    cfg: &CliConfig,
    seed: u64,
    body: T,
) -> CliResult<String> {
    let text = to_pretty(&Artifact {
        command,
        config: cfg,
        seed,
        body,
    })
    .map_err(anyhow::Error::from)?;
    out.write_all(text.as_bytes()).context("writing output")?;
    Ok(text)
}

fn write_text(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).context("writing output")?;
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Stats { common, table } => {
            let cfg = base_config(&common)?;
            let d = load_dataset(&cfg)?;
            let stats = dataset_stats(&d);
            if table {
                write_text(out, &table::stats_table(&stats))
            } else {
                emit(out, "stats", &cfg, cfg.seed, &stats).map(drop)
            }
        }
        Command::Transitions {
            common,
            role,
            table,
        } => {
            let cfg = base_config(&common)?;
            let d = load_dataset(&cfg)?;
            let overall = transition_matrix(&d, None).map_err(anyhow::Error::from)?;
            let by_role = role_transition_matrices(&d);
            let dispersion = transition_dispersion(&by_role).ok();
            let matrices = match &role {
                Some(r) => vec![transition_matrix(&d, Some(r)).map_err(anyhow::Error::from)?],
                None => by_role,
            };
            if table {
                let mut text = String::new();
                for m in std::iter::once(&overall).chain(&matrices) {
                    text.push_str(&table::transition_table(m));
                    text.push('\n');
                }
                if let Some(rows) = &dispersion {
                    text.push_str(&table::dispersion_table(rows));
                }
                return write_text(out, &text);
            }
            #[derive(Serialize)]
            struct Body<'a> {
                role: Option<&'a str>,
                overall: &'a pet_core::peld::TransitionMatrix,
                matrices: &'a [pet_core::peld::TransitionMatrix],
                dispersion: &'a Option<Vec<pet_core::peld::RowDispersion>>,
            }
            let body = Body {
                role: role.as_deref(),
                overall: &overall,
                matrices: &matrices,
                dispersion: &dispersion,
            };
            emit(out, "transitions", &cfg, cfg.seed, body).map(drop)
        }
        Command::Train { common, args } => {
            let mut cfg = base_config(&common)?;
            apply_train_args(&mut cfg, &args)?;
            run_train(&cfg, out)
        }
        Command::Eval {
            common,
            checkpoint,
            split,
            embeddings,
            table,
        } => {
            let cfg = base_config(&common)?;
            let split: Split = parse_flag("split", &split)?;
            let (ck, model) = load_model(&checkpoint, None)?;
            let featurizer = checkpoint_featurizer(&ck, embeddings.as_deref())?;
            let d = load_dataset(&cfg)?;
            let metrics =
                evaluate(&model, &d, split, featurizer.as_ref()).map_err(anyhow::Error::from)?;
            if table {
                return write_text(
                    out,
                    &table::metrics_table(&[(model.variant().name(), &metrics)]),
                );
            }
            #[derive(Serialize)]
            struct Body<'a> {
                checkpoint: String,
                train_config: &'a Option<TrainConfig>,
                split: Split,
                metrics: &'a pet_core::MetricsReport,
            }
            let body = Body {
                checkpoint: checkpoint.display().to_string(),
                train_config: &ck.train_config,
                split,
                metrics: &metrics,
            };
            emit(out, "eval", &cfg, ck.seed, body).map(drop)
        }
        Command::Predict {
            common,
            checkpoint,
            u1,
            e1,
            u2,
            role,
            personality,
            embeddings,
        } => {
            let cfg = base_config(&common)?;
            let e1: EmotionLabel = parse_flag("e1", &e1)?;
            let personality = resolve_personality(&cfg, role.as_deref(), personality.as_deref())?;
            let (ck, model) = load_model(&checkpoint, None)?;
            let featurizer = checkpoint_featurizer(&ck, embeddings.as_deref())?;
            let triple = DialogTriple {
                role: role.clone().unwrap_or_default(),
                personality,
                u1: u1.clone(),
                e1,
                u2: u2.clone(),
                e2: None,
                u3: String::new(),
                e3: EmotionLabel::Neutral,
                split: Split::Test,
            };
            let ctx = context_representation(&triple, featurizer.as_ref())
                .map_err(anyhow::Error::from)?;
            let input = ModelInput {
                context: ctx.values(),
                personality,
                preceding: e1,
            };
            let (output, trace) = model.forward(&input).map_err(anyhow::Error::from)?;
            let prediction = model.predict(&input).map_err(anyhow::Error::from)?;
            let distribution = match &output {
                ModelOutput::Distribution(p) => Some(
                    model
                        .task()
                        .class_names()
                        .into_iter()
                        .zip(p.iter().copied())
                        .collect::<std::collections::BTreeMap<_, _>>(),
                ),
                ModelOutput::Vad(_) => None,
            };
            #[derive(Serialize)]
            struct Input<'a> {
                role: Option<&'a str>,
                personality: PersonalityTraits,
                u1: &'a str,
                e1: EmotionLabel,
                u2: &'a str,
            }
            #[derive(Serialize)]
            struct Body<'a> {
                checkpoint: String,
                train_config: &'a Option<TrainConfig>,
                input: Input<'a>,
                prediction: &'a str,
                distribution: Option<std::collections::BTreeMap<&'static str, f64>>,
                trace: Option<pet_core::PetTrace>,
            }
            let body = Body {
                checkpoint: checkpoint.display().to_string(),
                train_config: &ck.train_config,
                input: Input {
                    role: role.as_deref(),
                    personality,
                    u1: &u1,
                    e1,
                    u2: &u2,
                },
                prediction: prediction.name(),
                distribution,
                trace,
            };
            emit(out, "predict", &cfg, ck.seed, body).map(drop)
        }
    }
}

fn resolve_personality(
    cfg: &CliConfig,
    role: Option<&str>,
    explicit: Option<&str>,
) -> CliResult<PersonalityTraits> {
    if let Some(text) = explicit {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| usage("--personality expects five comma-separated numbers"))?;
        let arr: [f64; 5] = parts
            .try_into()
            .map_err(|_| usage("--personality expects five comma-separated numbers"))?;
        return PersonalityTraits::validated(arr).map_err(|e| usage(format!("--personality: {e}")));
    }
    let role = role.ok_or_else(|| usage("pass --role or --personality"))?;
    if cfg.data_path().is_some_and(|p| p.exists()) {
        let d = load_dataset(cfg)?;
        if let Some(p) = d.role_table().get(role) {
            return Ok(*p);
        }
    }
    main_role_personality(role)
        .ok_or_else(|| CliError::Data(anyhow!("unknown role `{role}`; pass --personality")))
}

fn run_train(cfg: &CliConfig, out: &mut dyn Write) -> CliResult<()> {
    let d = load_dataset(cfg)?;
    let (featurizer, fc) = build_featurizer(cfg)?;
    let tc = cfg.train_config(fc);
    tc.validate().map_err(|e| match e {
        pet_core::TrainError::Config(m) => usage(m),
        pet_core::TrainError::Model(pet_core::ModelError::VadNeedsEmotionTask) => {
            usage("pet-vad only supports the emotion task")
        }
        other => CliError::Data(other.into()),
    })?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;

    let (ck, history) = train(&d, featurizer.as_ref(), &tc, &mut |r| {
        log::info!(
            "epoch {:>3}  loss {:.5}  valid m-avg {:.4}  w-avg {:.4}",
            r.epoch,
            r.train_loss,
            r.valid_macro_f1,
            r.valid_weighted_f1
        );
    })
    .map_err(anyhow::Error::from)?;
    let model = ck.to_model(Some(tc.variant)).map_err(anyhow::Error::from)?;
    let valid =
        evaluate(&model, &d, Split::Valid, featurizer.as_ref()).map_err(anyhow::Error::from)?;
    let test = match evaluate(&model, &d, Split::Test, featurizer.as_ref()) {
        Ok(m) => Some(m),
        Err(pet_core::TrainError::Data(pet_core::DataError::EmptySplit(_))) => None,
        Err(e) => return Err(anyhow::Error::from(e).into()),
    };

    let ck_path = cfg.out.join("checkpoint.json");
    save_checkpoint(&ck, &ck_path)?;

    #[derive(Serialize)]
    struct Body<'a> {
        train_config: &'a TrainConfig,
        checkpoint: String,
        history: &'a pet_core::TrainHistory,
        valid: &'a pet_core::MetricsReport,
        test: &'a Option<pet_core::MetricsReport>,
    }
    let body = Body {
        train_config: &tc,
        checkpoint: ck_path.display().to_string(),
        history: &history,
        valid: &valid,
        test: &test,
    };
    let text = emit(out, "train", cfg, tc.seed, body)?;
    let history_path = cfg.out.join("history.json");
    std::fs::write(&history_path, text)
        .with_context(|| format!("writing {}", history_path.display()))?;
    let config_path = cfg.out.join("config.json");
    let config_text = to_pretty(cfg).map_err(anyhow::Error::from)?;
    std::fs::write(&config_path, config_text)
        .with_context(|| format!("writing {}", config_path.display()))?;
    Ok(())
}
