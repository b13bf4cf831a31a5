mod common;

use std::collections::BTreeSet;
use std::fs::File;

use pet::embeddings::{load_embeddings, write_embeddings};
use pet::triples::{load_triples, save_triples};
use pet_core::featurize::{featurize_hash, Featurizer};

#[test]
fn triple_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut triples = common::surrogate_triples(200, 8);
    triples[0].u1 = "She said, \"no\", twice.".into();
    triples[1].u2 = "line one\nline two".into();
    let path = dir.path().join("t.csv");
    save_triples(&path, &triples).unwrap();
    let loaded = load_triples(&path, true).unwrap();
    assert!(loaded.skipped.is_empty());
    assert_eq!(loaded.dataset.triples(), &triples[..]);
}

#[test]
fn training_from_an_embedding_file() {
    let dir = tempfile::tempdir().unwrap();
    let triples = common::surrogate_triples(150, 9);
    let data = dir.path().join("d.csv");
    save_triples(&data, &triples).unwrap();

    // Any utterance encoder works; here a small hashed one stands in.
    let utterances: BTreeSet<&str> = triples
        .iter()
        .flat_map(|t| [t.u1.as_str(), t.u2.as_str()])
        .collect();
    let vectors: Vec<(&str, Vec<f64>)> = utterances
        .iter()
        .map(|u| (*u, featurize_hash(u, 16, 3).values().to_vec()))
        .collect();
    let emb = dir.path().join("e.tsv");
    write_embeddings(
        File::create(&emb).unwrap(),
        16,
        vectors.iter().map(|(k, v)| (*k, v.as_slice())),
    )
    .unwrap();
    let table = load_embeddings(&emb).unwrap();
    assert_eq!(table.dim(), 16);
    assert_eq!(table.len(), utterances.len());

    let out = dir.path().join("run");
    let (code, stdout, err) = common::run_cli(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--embeddings",
        emb.to_str().unwrap(),
        "--epochs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["train_config"]["featurizer"]["mode"], "embeddings");
    assert_eq!(v["train_config"]["featurizer"]["dim"], 16);

    // An utterance missing from the table is a data error.
    let ck = out.join("checkpoint.json");
    let (code, _, err) = common::run_cli(&[
        "predict",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--u1",
        "never seen before",
        "--e1",
        "Joy",
        "--u2",
        &triples[0].u2,
        "--role",
        "Ross",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("never seen before"), "{err}");
    let (code, _, err) = common::run_cli(&[
        "predict",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--u1",
        &triples[0].u1,
        "--e1",
        "Joy",
        "--u2",
        &triples[0].u2,
        "--role",
        "Ross",
    ]);
    assert_eq!(code, 0, "{err}");
}
