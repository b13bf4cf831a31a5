//! Plain-text tables for terminal output.

use std::fmt::Write;

use pet_core::peld::{RowDispersion, StatsReport, TransitionMatrix};
use pet_core::{EmotionLabel, MetricsReport, Split};

fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{cell:<w$}");
            } else {
                let _ = write!(s, "  {cell:>w$}");
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// One row per method: per-class F1, then m-avg and w-avg, three decimals.
pub fn metrics_table(rows: &[(&str, &MetricsReport)]) -> String {
    let labels = rows
        .first()
        .map(|(_, r)| r.labels.clone())
        .unwrap_or_default();
    let mut header = vec!["Methods".to_string()];
    header.extend(labels);
    header.push("m-avg".into());
    header.push("w-avg".into());
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            let mut row = vec![name.to_string()];
            row.extend(r.per_class.iter().map(|m| format!("{:.3}", m.f1)));
            row.push(format!("{:.3}", r.macro_f1));
            row.push(format!("{:.3}", r.weighted_f1));
            row
        })
        .collect();
    render(&header, &body)
}

pub fn transition_table(m: &TransitionMatrix) -> String {
    let mut header = vec![format!(
        "{} (E_i \\ E_r)",
        m.role.as_deref().unwrap_or("all")
    )];
    header.extend(EmotionLabel::ALL.iter().map(|e| e.name().to_string()));
    let body: Vec<Vec<String>> = EmotionLabel::ALL
        .iter()
        .map(|&from| {
            let mut row = vec![from.name().to_string()];
            row.extend(
                EmotionLabel::ALL
                    .iter()
                    .map(|&to| format!("{:.2}", m.ratio(from, to))),
            );
            row
        })
        .collect();
    render(&header, &body)
}

pub fn dispersion_table(rows: &[RowDispersion]) -> String {
    let header = ["Emotion", "roles", "std(inf-norm)", "std(L2-norm)"].map(String::from);
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.emotion.name().to_string(),
                r.contributors.to_string(),
                fmt(r.inf_norm_std),
                fmt(r.l2_norm_std),
            ]
        })
        .collect();
    render(&header, &body)
}

pub fn stats_table(s: &StatsReport) -> String {
    let mut header = vec![String::new()];
    header.extend(Split::ALL.iter().map(|x| x.name().to_string()));
    header.push("total".into());
    let counts = |name: &str, c: &pet_core::peld::SplitCounts<u64>| {
        vec![
            name.to_string(),
            c.train.to_string(),
            c.valid.to_string(),
            c.test.to_string(),
            c.total.to_string(),
        ]
    };
    let mut body = vec![
        counts("Triples", &s.triples),
        counts("Unique utterances", &s.unique_utterances),
    ];
    let l = &s.avg_utterance_length;
    body.push(
        ["Avg. utterance length".to_string()]
            .into_iter()
            .chain([l.train, l.valid, l.test, l.total].map(|x| format!("{x:.2}")))
            .collect(),
    );
    for (name, c) in &s.emotion_counts {
        body.push(counts(name, c));
    }
    for (name, c) in &s.sentiment_counts {
        body.push(counts(name, c));
    }
    render(&header, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pet_core::metrics::metrics_from_predictions;

    #[test]
    fn metrics_layout() {
        let labels = vec!["Negative".to_string(), "Neutral".into(), "Positive".into()];
        let r = metrics_from_predictions(labels, &[0, 1, 2, 1], &[0, 1, 1, 1]);
        let text = metrics_table(&[("PET-CLS", &r)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("Methods"));
        assert!(lines[0].ends_with("m-avg  w-avg"));
        assert!(lines[2].starts_with("PET-CLS"));
        assert!(lines[2].contains("1.000"));
    }
}
