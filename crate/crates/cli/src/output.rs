use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::Outcome;

/// A file produced by a check, kept in memory until the run is written out.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

impl Artifact {
    pub fn json(name: impl Into<String>, value: &Value) -> Self {
        let mut contents = serde_json::to_vec_pretty(value).expect("json values serialize");
        contents.push(b'\n');
        Self { name: name.into(), contents }
    }

    pub fn csv<T: Serialize>(name: impl Into<String>, rows: &[T], header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        if rows.is_empty() {
            w.write_record(header).expect("in-memory writer");
        }
        for r in rows {
            w.serialize(r).expect("flat rows serialize");
        }
        Self { name: name.into(), contents: w.into_inner().expect("in-memory writer") }
    }
}

/// File-name friendly label.
pub fn slug(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| p.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("-")
}

pub fn write_outcome(outcome: &Outcome, out: &Path) -> io::Result<()> {
    std::fs::create_dir_all(out)?;
    let report = Artifact::json(format!("{}.json", outcome.command.name()), &outcome.report);
    for a in std::iter::once(&report).chain(&outcome.artifacts) {
        std::fs::write(out.join(&a.name), &a.contents)?;
    }
    Ok(())
}
