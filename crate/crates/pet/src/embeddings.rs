//! Precomputed utterance embeddings in a line-oriented TSV file.
//!
//! ```text
//! #dim 3
//! Hello there.\t0.1\t-0.2\t0.7
//! ```
//!
//! Keys are the exact utterance text with tab, newline and backslash
//! written as `\t`, `\n` and `\\`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use pet_core::featurize::{EmbeddingTable, FeatureVector};

use crate::error::FormatError;

pub fn escape_key(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_key(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

pub fn read_embeddings<R: Read>(reader: R) -> Result<EmbeddingTable, FormatError> {
    let err = |line: usize, message: String| FormatError::Embedding { line, message };
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?
        .map_err(|e| err(1, e.to_string()))?;
    let dim: usize = header
        .trim()
        .strip_prefix("#dim")
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(|| err(1, format!("expected `#dim <D>`, found `{header}`")))?;
    let mut table = EmbeddingTable::new(dim).map_err(|e| err(1, e.to_string()))?;

    for (i, line) in lines.enumerate() {
        let number = i + 2;
        let line = line.map_err(|e| err(number, e.to_string()))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let key = unescape_key(fields.next().unwrap_or("")).map_err(|m| err(number, m))?;
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| err(number, format!("bad float `{f}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != dim {
            return Err(err(
                number,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        let v = FeatureVector::new(values).map_err(|e| err(number, e.to_string()))?;
        table
            .insert(key, v)
            .map_err(|e| err(number, e.to_string()))?;
    }
    if table.duplicates() > 0 {
        log::warn!(
            "{} duplicate embedding keys; the last record wins",
            table.duplicates()
        );
    }
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable, FormatError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    read_embeddings(file)
}

pub fn write_embeddings<'a, W: Write>(
    mut w: W,
    dim: usize,
    records: impl IntoIterator<Item = (&'a str, &'a [f64])>,
) -> std::io::Result<()> {
    writeln!(w, "#dim {dim}")?;
    for (key, values) in records {
        write!(w, "{}", escape_key(key))?;
        for v in values {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
