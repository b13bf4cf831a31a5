use std::fs;
use std::path::Path;

use pet_core::model::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
use pet_core::{Model, ModelVariant};

use crate::error::FormatError;
use crate::json::to_full_precision;

pub fn checkpoint_bytes(ck: &Checkpoint) -> Result<Vec<u8>, FormatError> {
    Ok(to_full_precision(ck)?)
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint, FormatError> {
    let ck: Checkpoint =
        serde_json::from_slice(bytes).map_err(|e| FormatError::CorruptCheckpoint(e.to_string()))?;
    if ck.format != CHECKPOINT_FORMAT {
        return Err(FormatError::CorruptCheckpoint(format!(
            "unexpected format tag `{}`",
            ck.format
        )));
    }
    if ck.version != CHECKPOINT_VERSION {
        return Err(FormatError::CorruptCheckpoint(format!(
            "unsupported version {}",
            ck.version
        )));
    }
    Ok(ck)
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let path = path.as_ref();
    fs::write(path, checkpoint_bytes(ck)?).map_err(|e| FormatError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, FormatError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| FormatError::io(path, e))?;
    parse_checkpoint(&bytes)
}

/// Loads a checkpoint and rebuilds its model, checking every tensor.
pub fn load_model(
    path: impl AsRef<Path>,
    expected: Option<ModelVariant>,
) -> Result<(Checkpoint, Model), FormatError> {
    let ck = load_checkpoint(path)?;
    let model = ck.to_model(expected)?;
    Ok((ck, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pet_core::featurize::FeaturizerConfig;
    use pet_core::{ModelConfig, Task};
    use rand::SeedableRng;

    fn sample() -> Checkpoint {
        let cfg = ModelConfig {
            hidden: 4,
            ..ModelConfig::new(ModelVariant::PetCls, Task::Emotion, 6)
        };
        let model = Model::new(cfg, &mut rand_chacha::ChaCha8Rng::seed_from_u64(3)).unwrap();
        Checkpoint::from_model(&model, FeaturizerConfig::Hash { dim: 3, seed: 1 })
    }

    #[test]
    fn byte_exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let ck = sample();
        save_checkpoint(&ck, &a).unwrap();
        let loaded = load_checkpoint(&a).unwrap();
        assert_eq!(loaded, ck);
        save_checkpoint(&loaded, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn truncated_and_mismatched() {
        let bytes = checkpoint_bytes(&sample()).unwrap();
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(
            parse_checkpoint(cut),
            Err(FormatError::CorruptCheckpoint(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ck.json");
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(
            load_model(&p, Some(ModelVariant::PetVad)),
            Err(FormatError::Model(
                pet_core::ModelError::VariantMismatch { .. }
            ))
        ));
        assert!(load_model(&p, Some(ModelVariant::PetCls)).is_ok());
    }
}
