//! CSV dialog-triple files.
//!
//! Header: `role,O,C,E,A,N,split,u1,e1,u2,e2,u3,e3`. Columns are matched by
//! name, so their order is free. `e2` may be empty.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use pet_core::{Dataset, DialogTriple, EmotionLabel, PersonalityTraits, Split};

use crate::error::FormatError;

pub const COLUMNS: [&str; 13] = [
    "role", "O", "C", "E", "A", "N", "split", "u1", "e1", "u2", "e2", "u3", "e3",
];

/// A parsed file and the records dropped in lenient mode.
#[derive(Debug, Clone)]
pub struct LoadedTriples {
    pub dataset: Dataset,
    pub skipped: Vec<(u64, String)>,
}

/// Parses triples. In strict mode the first bad record is an error;
/// otherwise bad records are skipped and reported.
pub fn read_triples<R: Read>(reader: R, strict: bool) -> Result<LoadedTriples, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| FormatError::Record {
        record: 0,
        message: e.to_string(),
    })?;
    let mut index = [0usize; 13];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or(FormatError::MissingColumn(name))?;
    }

    let mut dataset = Dataset::default();
    let mut skipped = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let number = i as u64 + 1;
        let result = rec
            .map_err(|e| e.to_string())
            .and_then(|r| parse_record(&r, &index).map_err(|e| e.to_string()))
            .and_then(|t| dataset.push(t).map_err(|e| e.to_string()));
        if let Err(message) = result {
            if strict {
                return Err(FormatError::Record {
                    record: number,
                    message,
                });
            }
            log::warn!("skipping record {number}: {message}");
            skipped.push((number, message));
        }
    }
    Ok(LoadedTriples { dataset, skipped })
}

fn parse_record(r: &csv::StringRecord, index: &[usize; 13]) -> Result<DialogTriple, FormatError> {
    let field = |c: usize| r.get(index[c]).unwrap_or("");
    let mut traits = [0.0; 5];
    for (k, t) in traits.iter_mut().enumerate() {
        let raw = field(1 + k).trim();
        *t = raw.parse().map_err(|_| FormatError::Record {
            record: 0,
            message: format!("trait {} is not a number: `{raw}`", COLUMNS[1 + k]),
        })?;
    }
    let personality = PersonalityTraits::validated(traits).map_err(pet_core::DataError::from)?;
    let emotion = |c: usize| -> Result<EmotionLabel, FormatError> {
        Ok(field(c)
            .parse::<EmotionLabel>()
            .map_err(pet_core::DataError::from)?)
    };
    let e2 = if field(10).trim().is_empty() {
        None
    } else {
        Some(emotion(10)?)
    };
    let t = DialogTriple {
        role: field(0).trim().to_string(),
        personality,
        u1: field(7).to_string(),
        e1: emotion(8)?,
        u2: field(9).to_string(),
        e2,
        u3: field(11).to_string(),
        e3: emotion(12)?,
        split: field(6).parse::<Split>()?,
    };
    if t.role.is_empty() {
        return Err(FormatError::Record {
            record: 0,
            message: "empty role".into(),
        });
    }
    t.validate()?;
    Ok(t)
}

pub fn load_triples(path: impl AsRef<Path>, strict: bool) -> Result<LoadedTriples, FormatError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FormatError::io(path, e))?;
    read_triples(file, strict)
}

/// Writes triples with the canonical header and column order.
pub fn write_triples<W: Write>(writer: W, triples: &[DialogTriple]) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| FormatError::Record {
        record: 0,
        message: e.to_string(),
    };
    w.write_record(COLUMNS).map_err(wrap)?;
    for t in triples {
        let p = t.personality.to_array();
        let mut row = vec![t.role.clone()];
        row.extend(p.iter().map(|x| x.to_string()));
        row.push(t.split.name().into());
        row.push(t.u1.clone());
        row.push(t.e1.name().into());
        row.push(t.u2.clone());
        row.push(t.e2.map(|e| e.name().to_string()).unwrap_or_default());
        row.push(t.u3.clone());
        row.push(t.e3.name().into());
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| FormatError::io("<writer>", e))?;
    Ok(())
}

pub fn save_triples(path: impl AsRef<Path>, triples: &[DialogTriple]) -> Result<(), FormatError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| FormatError::io(path, e))?;
    write_triples(std::io::BufWriter::new(file), triples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "role,O,C,E,A,N,split,u1,e1,u2,e2,u3,e3\n";

    #[test]
    fn parses_quoted_fields_and_empty_e2() {
        let text = format!(
            "{HEADER}Ross,0.722,0.489,0.6,0.533,0.356,train,\"Hi, Rachel.\",neutral,Hey.,,\"Well, okay.\",Joy\n"
        );
        let loaded = read_triples(text.as_bytes(), true).unwrap();
        let t = &loaded.dataset.triples()[0];
        assert_eq!(t.u1, "Hi, Rachel.");
        assert_eq!(t.e1, EmotionLabel::Neutral);
        assert_eq!(t.e2, None);
        assert_eq!(t.e3, EmotionLabel::Joy);
    }

    #[test]
    fn column_order_is_free() {
        let text = "e3,u3,e2,u2,e1,u1,split,N,A,E,C,O,role\nSadness,c,,b,Fear,a,test,0.5,0.4,0.3,0.2,0.1,Joey\n";
        let loaded = read_triples(text.as_bytes(), true).unwrap();
        let t = &loaded.dataset.triples()[0];
        assert_eq!(
            t.personality,
            PersonalityTraits::new(0.1, 0.2, 0.3, 0.4, 0.5)
        );
        assert_eq!(
            (t.e1, t.e3, t.split),
            (EmotionLabel::Fear, EmotionLabel::Sadness, Split::Test)
        );
    }

    #[test]
    fn lenient_mode_skips_and_counts() {
        let text = format!(
            "{HEADER}R,0.5,0.5,0.5,0.5,0.5,train,a,Joy,b,,c,Bored\nR,0.5,0.5,0.5,0.5,1.5,train,a,Joy,b,,c,Joy\nR,0.5,0.5,0.5,0.5,0.5,holdout,a,Joy,b,,c,Joy\nR,0.5,0.5,0.5,0.5,0.5,train,a,Joy,b,,c,Joy\n"
        );
        let loaded = read_triples(text.as_bytes(), false).unwrap();
        assert_eq!(loaded.dataset.len(), 1);
        assert_eq!(
            loaded.skipped.iter().map(|s| s.0).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        let err = read_triples(text.as_bytes(), true).unwrap_err();
        assert!(
            matches!(err, FormatError::Record { record: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn missing_column() {
        let err =
            read_triples("role,O,C,E,A,split,u1,e1,u2,e2,u3,e3\n".as_bytes(), true).unwrap_err();
        assert!(matches!(err, FormatError::MissingColumn("N")));
    }
}
