//! Dialog triples, dataset statistics and per-role emotion transition analytics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::affect::{EmotionLabel, PersonalityTraits, SentimentLabel};
use crate::error::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "valid" | "dev" | "validation" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            _ => Err(DataError::UnknownSplit(s.into())),
        }
    }
}

/// One dyadic exchange: the responder says `u1` with emotion `e1`, the
/// other speaker answers with `u2`, and the responder replies with `u3`
/// carrying the target emotion `e3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogTriple {
    pub role: String,
    pub personality: PersonalityTraits,
    pub u1: String,
    pub e1: EmotionLabel,
    pub u2: String,
    pub e2: Option<EmotionLabel>,
    pub u3: String,
    pub e3: EmotionLabel,
    pub split: Split,
}

impl DialogTriple {
    /// Checks that all three utterances are non-blank.
    pub fn validate(&self) -> Result<(), DataError> {
        for (name, text) in [("u1", &self.u1), ("u2", &self.u2), ("u3", &self.u3)] {
            if text.trim().is_empty() {
                return Err(DataError::EmptyUtterance(name));
            }
        }
        Ok(())
    }
}

/// An ordered collection of triples plus the personality of every role.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    triples: Vec<DialogTriple>,
    roles: BTreeMap<String, PersonalityTraits>,
}

impl Dataset {
    pub fn new(triples: Vec<DialogTriple>) -> Result<Self, DataError> {
        let mut d = Dataset::default();
        for t in triples {
            d.push(t)?;
        }
        Ok(d)
    }

    /// Appends a triple, registering its role. A role seen earlier with a
    /// different personality is rejected.
    pub fn push(&mut self, t: DialogTriple) -> Result<(), DataError> {
        t.validate()?;
        match self.roles.get(&t.role) {
            Some(p) if *p != t.personality => {
                return Err(DataError::RoleConflict {
                    role: t.role.clone(),
                })
            }
            Some(_) => {}
            None => {
                self.roles.insert(t.role.clone(), t.personality);
            }
        }
        self.triples.push(t);
        Ok(())
    }

    pub fn triples(&self) -> &[DialogTriple] {
        &self.triples
    }

    pub fn role_table(&self) -> &BTreeMap<String, PersonalityTraits> {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &DialogTriple> {
        self.triples.iter().filter(move |t| t.split == split)
    }

    /// A new dataset holding only the triples accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&DialogTriple) -> bool) -> Dataset {
        let triples: Vec<_> = self.triples.iter().filter(|t| keep(t)).cloned().collect();
        let roles = self
            .roles
            .iter()
            .filter(|(r, _)| triples.iter().any(|t| &t.role == *r))
            .map(|(r, p)| (r.clone(), *p))
            .collect();
        Dataset { triples, roles }
    }
}

/// Counts broken down by split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts<T> {
    pub train: T,
    pub valid: T,
    pub test: T,
    pub total: T,
}

impl<T: Copy> SplitCounts<T> {
    pub fn get(&self, split: Split) -> T {
        match split {
            Split::Train => self.train,
            Split::Valid => self.valid,
            Split::Test => self.test,
        }
    }

    fn get_mut(&mut self, split: Split) -> &mut T {
        match split {
            Split::Train => &mut self.train,
            Split::Valid => &mut self.valid,
            Split::Test => &mut self.test,
        }
    }
}

impl SplitCounts<u64> {
    fn bump(&mut self, split: Split) {
        *self.get_mut(split) += 1;
        self.total += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PositionCounts {
    /// Emotion of the first utterance.
    pub e_i: BTreeMap<String, u64>,
    /// Emotion of the response utterance.
    pub e_r: BTreeMap<String, u64>,
    pub s_i: BTreeMap<String, u64>,
    pub s_r: BTreeMap<String, u64>,
}

/// Corpus statistics. Emotion-keyed maps serialize in canonical order
/// because the canonical names happen to sort alphabetically.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total_triples: u64,
    pub triples: SplitCounts<u64>,
    pub unique_utterances: SplitCounts<u64>,
    /// Mean whitespace-token count over the unique utterances of each split.
    pub avg_utterance_length: SplitCounts<f64>,
    /// Tally of `e1`, `e2` and `e3` of every triple.
    pub emotion_counts: BTreeMap<String, SplitCounts<u64>>,
    pub sentiment_counts: BTreeMap<String, SplitCounts<u64>>,
    /// Tally of `e1` and `e3` only.
    pub emotion_counts_e1_e3: BTreeMap<String, SplitCounts<u64>>,
    pub role_triples: BTreeMap<String, SplitCounts<u64>>,
    pub positions: PositionCounts,
}

fn emotion_map() -> BTreeMap<String, SplitCounts<u64>> {
    EmotionLabel::ALL
        .iter()
        .map(|e| (e.name().to_string(), SplitCounts::default()))
        .collect()
}

fn sentiment_map() -> BTreeMap<String, SplitCounts<u64>> {
    SentimentLabel::ALL
        .iter()
        .map(|s| (s.name().to_string(), SplitCounts::default()))
        .collect()
}

fn bump_emotion(
    emotions: &mut BTreeMap<String, SplitCounts<u64>>,
    sentiments: Option<&mut BTreeMap<String, SplitCounts<u64>>>,
    e: EmotionLabel,
    split: Split,
) {
    if let Some(c) = emotions.get_mut(e.name()) {
        c.bump(split);
    }
    if let Some(c) = sentiments.and_then(|s| s.get_mut(e.sentiment().name())) {
        c.bump(split);
    }
}

pub fn dataset_stats(d: &Dataset) -> StatsReport {
    let mut report = StatsReport {
        emotion_counts: emotion_map(),
        sentiment_counts: sentiment_map(),
        emotion_counts_e1_e3: emotion_map(),
        ..Default::default()
    };
    for e in EmotionLabel::ALL {
        report.positions.e_i.insert(e.name().into(), 0);
        report.positions.e_r.insert(e.name().into(), 0);
    }
    for s in SentimentLabel::ALL {
        report.positions.s_i.insert(s.name().into(), 0);
        report.positions.s_r.insert(s.name().into(), 0);
    }

    let mut unique: [BTreeSet<&str>; 3] = Default::default();
    let mut unique_all = BTreeSet::new();

    for t in d.triples() {
        let split = t.split;
        report.triples.bump(split);
        report
            .role_triples
            .entry(t.role.clone())
            .or_default()
            .bump(split);

        for e in [Some(t.e1), t.e2, Some(t.e3)].into_iter().flatten() {
            bump_emotion(
                &mut report.emotion_counts,
                Some(&mut report.sentiment_counts),
                e,
                split,
            );
        }
        bump_emotion(&mut report.emotion_counts_e1_e3, None, t.e1, split);
        bump_emotion(&mut report.emotion_counts_e1_e3, None, t.e3, split);

        *report.positions.e_i.entry(t.e1.name().into()).or_default() += 1;
        *report.positions.e_r.entry(t.e3.name().into()).or_default() += 1;
        *report
            .positions
            .s_i
            .entry(t.e1.sentiment().name().into())
            .or_default() += 1;
        *report
            .positions
            .s_r
            .entry(t.e3.sentiment().name().into())
            .or_default() += 1;

        let slot = Split::ALL.iter().position(|s| *s == split).unwrap_or(0);
        for u in [&t.u1, &t.u2, &t.u3] {
            unique[slot].insert(u.trim());
            unique_all.insert(u.trim());
        }
    }
    report.total_triples = report.triples.total;

    let mean_len = |set: &BTreeSet<&str>| -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let tokens: usize = set.iter().map(|u| u.split_whitespace().count()).sum();
        tokens as f64 / set.len() as f64
    };
    for (slot, split) in Split::ALL.iter().enumerate() {
        *report.unique_utterances.get_mut(*split) = unique[slot].len() as u64;
        *report.avg_utterance_length.get_mut(*split) = mean_len(&unique[slot]);
    }
    report.unique_utterances.total = unique_all.len() as u64;
    report.avg_utterance_length.total = mean_len(&unique_all);
    report
}

const K: usize = EmotionLabel::COUNT;

/// Row-stochastic emotion transition matrix: row = preceding emotion,
/// column = response emotion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub role: Option<String>,
    pub counts: [[u64; K]; K],
    pub ratios: [[f64; K]; K],
    /// Rows with no observations; their ratios are all zero.
    pub empty_rows: [bool; K],
}

impl TransitionMatrix {
    pub fn from_counts(role: Option<String>, counts: [[u64; K]; K]) -> Self {
        let mut ratios = [[0.0; K]; K];
        let mut empty_rows = [false; K];
        for i in 0..K {
            let total: u64 = counts[i].iter().sum();
            if total == 0 {
                empty_rows[i] = true;
                continue;
            }
            for j in 0..K {
                ratios[i][j] = counts[i][j] as f64 / total as f64;
            }
        }
        Self {
            role,
            counts,
            ratios,
            empty_rows,
        }
    }

    pub fn ratio(&self, from: EmotionLabel, to: EmotionLabel) -> f64 {
        self.ratios[from.index()][to.index()]
    }

    pub fn count(&self, from: EmotionLabel, to: EmotionLabel) -> u64 {
        self.counts[from.index()][to.index()]
    }

    pub fn row_inf_norm(&self, row: usize) -> f64 {
        self.ratios[row].iter().cloned().fold(0.0, f64::max)
    }

    pub fn row_l2_norm(&self, row: usize) -> f64 {
        libm::sqrt(self.ratios[row].iter().map(|x| x * x).sum())
    }
}

/// Counts `e1 -> e3` transitions, optionally restricted to one role.
pub fn transition_matrix(d: &Dataset, role: Option<&str>) -> Result<TransitionMatrix, DataError> {
    if let Some(r) = role {
        if !d.role_table().contains_key(r) {
            return Err(DataError::UnknownRole(r.into()));
        }
    }
    let mut counts = [[0u64; K]; K];
    for t in d.triples() {
        if role.is_some_and(|r| r != t.role) {
            continue;
        }
        counts[t.e1.index()][t.e3.index()] += 1;
    }
    Ok(TransitionMatrix::from_counts(role.map(Into::into), counts))
}

/// One matrix per role in the role table, in role-name order.
pub fn role_transition_matrices(d: &Dataset) -> Vec<TransitionMatrix> {
    d.role_table()
        .keys()
        .map(|r| transition_matrix(d, Some(r)).expect("role comes from the role table"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowDispersion {
    pub emotion: EmotionLabel,
    /// Matrices in which this row is non-empty.
    pub contributors: usize,
    /// Population std of the row's infinity norm across matrices.
    pub inf_norm_std: Option<f64>,
    /// Population std of the row's L2 norm across matrices.
    pub l2_norm_std: Option<f64>,
}

fn population_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    libm::sqrt(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

/// Spread of each emotion row across several transition matrices.
pub fn transition_dispersion(ms: &[TransitionMatrix]) -> Result<Vec<RowDispersion>, DataError> {
    if ms.len() < 2 {
        return Err(DataError::TooFewMatrices(ms.len()));
    }
    let rows = EmotionLabel::ALL
        .iter()
        .map(|&emotion| {
            let i = emotion.index();
            let live: Vec<&TransitionMatrix> = ms.iter().filter(|m| !m.empty_rows[i]).collect();
            let (inf_norm_std, l2_norm_std) = if live.len() < 2 {
                (None, None)
            } else {
                let inf: Vec<f64> = live.iter().map(|m| m.row_inf_norm(i)).collect();
                let l2: Vec<f64> = live.iter().map(|m| m.row_l2_norm(i)).collect();
                (Some(population_std(&inf)), Some(population_std(&l2)))
            };
            RowDispersion {
                emotion,
                contributors: live.len(),
                inf_norm_std,
                l2_norm_std,
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::affect::EmotionLabel::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn triple(role: &str, e1: EmotionLabel, e3: EmotionLabel, split: Split) -> DialogTriple {
        DialogTriple {
            role: role.into(),
            personality: crate::affect::main_role_personality(role)
                .unwrap_or(PersonalityTraits::new(0.5, 0.5, 0.5, 0.5, 0.5)),
            u1: alloc::format!("{role} says {e1}"),
            e1,
            u2: "ok then".into(),
            e2: Some(Neutral),
            u3: alloc::format!("{role} replies {e3}"),
            e3,
            split,
        }
    }

    #[test]
    fn empty_dataset_stats() {
        let s = dataset_stats(&Dataset::default());
        assert_eq!(s.total_triples, 0);
        assert!(s.emotion_counts.values().all(|c| c.total == 0));
        assert!(s.sentiment_counts.values().all(|c| c.total == 0));
        assert_eq!(s.unique_utterances.total, 0);
        assert_eq!(s.avg_utterance_length.total, 0.0);
    }

    #[test]
    fn rejects_blank_and_conflicting_rows() {
        let mut t = triple("Ross", Joy, Joy, Split::Train);
        t.u2 = "   ".into();
        assert_eq!(
            Dataset::new(alloc::vec![t]),
            Err(DataError::EmptyUtterance("u2"))
        );

        let a = triple("Ross", Joy, Joy, Split::Train);
        let mut b = a.clone();
        b.personality.o = 0.1;
        assert!(matches!(
            Dataset::new(alloc::vec![a, b]),
            Err(DataError::RoleConflict { .. })
        ));
    }

    #[test]
    fn stats_counts() {
        let d = Dataset::new(alloc::vec![
            triple("Ross", Anger, Joy, Split::Train),
            triple("Ross", Joy, Neutral, Split::Valid),
            triple("Rachel", Sadness, Surprise, Split::Test),
        ])
        .unwrap();
        let s = dataset_stats(&d);
        assert_eq!(s.total_triples, 3);
        assert_eq!(
            (s.triples.train, s.triples.valid, s.triples.test),
            (1, 1, 1)
        );
        // e2 is Neutral in every triple.
        assert_eq!(s.emotion_counts["Neutral"].total, 4);
        assert_eq!(s.emotion_counts_e1_e3["Neutral"].total, 1);
        assert_eq!(s.emotion_counts["Joy"].total, 2);
        assert_eq!(s.sentiment_counts["Positive"].total, 3);
        assert_eq!(s.positions.e_i["Anger"], 1);
        assert_eq!(s.positions.e_r["Surprise"], 1);
        assert_eq!(s.positions.s_r["Neutral"], 1);
        assert_eq!(s.role_triples["Ross"].total, 2);
        // "ok then" is shared by every triple.
        assert_eq!(s.unique_utterances.total, 7);
        assert_eq!(s.unique_utterances.train, 3);
    }

    #[test]
    fn transition_examples() {
        let d = Dataset::new(alloc::vec![triple("Ross", Anger, Joy, Split::Train)]).unwrap();
        let m = transition_matrix(&d, None).unwrap();
        assert_eq!(m.count(Anger, Joy), 1);
        assert_eq!(m.ratio(Anger, Joy), 1.0);
        assert!(m.empty_rows[Joy.index()]);
        assert!(m.ratios[Joy.index()].iter().all(|&r| r == 0.0));

        let d = Dataset::new(alloc::vec![
            triple("Ross", Anger, Joy, Split::Train),
            triple("Ross", Anger, Neutral, Split::Train),
        ])
        .unwrap();
        let m = transition_matrix(&d, Some("Ross")).unwrap();
        assert_eq!(m.ratio(Anger, Joy), 0.5);
        assert_eq!(
            transition_matrix(&d, Some("Gunther")),
            Err(DataError::UnknownRole("Gunther".into()))
        );
    }

    #[test]
    fn dispersion_examples() {
        let d = Dataset::new(alloc::vec![triple("Ross", Anger, Joy, Split::Train)]).unwrap();
        let m = transition_matrix(&d, None).unwrap();
        let same = transition_dispersion(&[m.clone(), m.clone()]).unwrap();
        assert_eq!(same[Anger.index()].inf_norm_std, Some(0.0));
        assert_eq!(same[Anger.index()].l2_norm_std, Some(0.0));
        assert_eq!(same[Joy.index()].inf_norm_std, None);

        let mut a = [[0u64; K]; K];
        a[0][0] = 4;
        let mut b = [[0u64; K]; K];
        b[0][0] = 3;
        b[0][1] = 3;
        let rows = transition_dispersion(&[
            TransitionMatrix::from_counts(None, a),
            TransitionMatrix::from_counts(None, b),
        ])
        .unwrap();
        assert_abs_diff_eq!(rows[0].inf_norm_std.unwrap(), 0.25, epsilon = 1e-15);
        // population std of {1, 1/sqrt(2)}
        let l2 = (1.0 - core::f64::consts::FRAC_1_SQRT_2) / 2.0;
        assert_abs_diff_eq!(rows[0].l2_norm_std.unwrap(), l2, epsilon = 1e-15);
        assert_abs_diff_eq!(rows[0].l2_norm_std.unwrap(), 0.1464, epsilon = 1e-4);

        assert_eq!(
            transition_dispersion(&[m]),
            Err(DataError::TooFewMatrices(1))
        );
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        let roles = ["Chandler", "Joey", "Monica", "Phoebe", "Rachel", "Ross"];
        proptest::collection::vec((0usize..6, 0usize..7, 0usize..7, 0usize..3), 0..120).prop_map(
            move |rows| {
                let triples = rows
                    .into_iter()
                    .map(|(r, a, b, s)| {
                        triple(
                            roles[r],
                            EmotionLabel::ALL[a],
                            EmotionLabel::ALL[b],
                            Split::ALL[s],
                        )
                    })
                    .collect();
                Dataset::new(triples).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn ratio_rows_are_stochastic(d in arb_dataset()) {
            let m = transition_matrix(&d, None).unwrap();
            for i in 0..K {
                let sum: f64 = m.ratios[i].iter().sum();
                if m.empty_rows[i] {
                    prop_assert_eq!(sum, 0.0);
                } else {
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                }
                prop_assert!(m.ratios[i].iter().all(|r| (0.0..=1.0).contains(r)));
            }
        }

        #[test]
        fn unfiltered_matrix_is_sum_of_role_matrices(d in arb_dataset()) {
            let all = transition_matrix(&d, None).unwrap();
            let mut sum = [[0u64; K]; K];
            for m in role_transition_matrices(&d) {
                for i in 0..K { for j in 0..K { sum[i][j] += m.counts[i][j]; } }
            }
            prop_assert_eq!(all.counts, sum);
        }

        #[test]
        fn stats_are_consistent(d in arb_dataset()) {
            let s = dataset_stats(&d);
            for c in s.emotion_counts.values().chain(s.sentiment_counts.values()) {
                prop_assert_eq!(c.total, c.train + c.valid + c.test);
            }
            let e = |name: &str| s.emotion_counts[name].total;
            prop_assert_eq!(s.sentiment_counts["Positive"].total, e("Joy") + e("Surprise"));
            prop_assert_eq!(s.sentiment_counts["Neutral"].total, e("Neutral"));
            prop_assert_eq!(
                s.sentiment_counts["Negative"].total,
                e("Anger") + e("Disgust") + e("Fear") + e("Sadness")
            );
            prop_assert_eq!(s.positions.e_i.values().sum::<u64>(), s.total_triples);
        }
    }
}
