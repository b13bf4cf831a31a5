//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use pet_core::affect::{main_role_personality, MAIN_ROLES};
use pet_core::{DialogTriple, EmotionLabel, Split};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CUES: [&[&str]; 7] = [
    &[
        "furious", "angry", "hate", "shut", "stupid", "yell", "damn", "enough",
    ],
    &[
        "gross",
        "ew",
        "disgusting",
        "yuck",
        "nasty",
        "smell",
        "sick",
        "filthy",
    ],
    &[
        "scared",
        "afraid",
        "terrified",
        "nervous",
        "help",
        "dark",
        "panic",
        "worried",
    ],
    &[
        "great",
        "happy",
        "love",
        "awesome",
        "yay",
        "wonderful",
        "fun",
        "thanks",
    ],
    &[
        "okay", "so", "well", "sure", "maybe", "yeah", "right", "then",
    ],
    &[
        "sad", "sorry", "miss", "cry", "lonely", "lost", "hurt", "alone",
    ],
    &[
        "wow",
        "what",
        "really",
        "whoa",
        "seriously",
        "unbelievable",
        "no way",
        "oh",
    ],
];

const FILLER: [&str; 24] = [
    "the",
    "a",
    "you",
    "i",
    "we",
    "it",
    "is",
    "was",
    "to",
    "and",
    "coffee",
    "apartment",
    "monica",
    "tonight",
    "date",
    "work",
    "just",
    "know",
    "think",
    "going",
    "about",
    "this",
    "that",
    "there",
];

/// Rough class shares of the response emotions in the real corpus.
const SHARES: [f64; 7] = [0.10, 0.03, 0.03, 0.17, 0.43, 0.08, 0.16];

fn draw_emotion(rng: &mut ChaCha8Rng) -> EmotionLabel {
    let mut x: f64 = rng.random();
    for (e, s) in EmotionLabel::ALL.iter().zip(SHARES) {
        if x < s {
            return *e;
        }
        x -= s;
    }
    EmotionLabel::Neutral
}

fn sentence(rng: &mut ChaCha8Rng, cue: EmotionLabel, cues: usize) -> String {
    let mut words: Vec<&str> = (0..rng.random_range(3..8))
        .map(|_| *FILLER.choose(rng).unwrap())
        .collect();
    for _ in 0..cues {
        let w = *CUES[cue.index()].choose(rng).unwrap();
        let at = rng.random_range(0..=words.len());
        words.insert(at, w);
    }
    let mut s = words.join(" ");
    s.push('.');
    s
}

/// Synthetic stand-in for the corpus: the main roles with their annotated
/// traits, emotion cues in the utterances, and a persistence probability
/// for the preceding emotion that depends on the speaker's traits.
pub fn surrogate_triples(n: usize, seed: u64) -> Vec<DialogTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (role, _) = *MAIN_ROLES.choose(&mut rng).unwrap();
            let p = main_role_personality(role).unwrap();
            let e1 = draw_emotion(&mut rng);
            let cue = draw_emotion(&mut rng);
            let persist = match e1.sentiment() {
                pet_core::SentimentLabel::Negative => 0.15 + 0.8 * p.n,
                pet_core::SentimentLabel::Positive => 0.15 + 0.6 * p.e,
                pet_core::SentimentLabel::Neutral => 0.3,
            };
            let e3 = if rng.random_bool(persist.min(0.95)) {
                e1
            } else {
                cue
            };
            let split = match rng.random_range(0..100) {
                0..81 => Split::Train,
                81..90 => Split::Valid,
                _ => Split::Test,
            };
            DialogTriple {
                role: role.to_string(),
                personality: p,
                u1: sentence(&mut rng, e1, 1),
                e1,
                u2: sentence(&mut rng, cue, 2),
                e2: Some(cue),
                u3: sentence(&mut rng, e3, 1),
                e3,
                split,
            }
        })
        .collect()
}

pub fn write_surrogate(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let path = dir.join("surrogate.csv");
    pet::triples::save_triples(&path, &surrogate_triples(n, seed)).unwrap();
    path
}

/// Runs the command line in-process, returning (status, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pet").chain(args.iter().copied());
    let code = pet::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}
