use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;

use super::{content_lines, read_to_string};
use crate::error::{Error, Result};

/// Per-pair values keyed by pair id.
pub type ScoreMap = HashMap<String, f64>;

/// Scores one metric assigned to each pair, in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub metric: String,
    pub scores: IndexMap<String, f64>,
}

impl ScoreTable {
    pub fn new(metric: impl Into<String>) -> Self {
        ScoreTable { metric: metric.into(), scores: IndexMap::new() }
    }

    pub fn from_pairs<I, S>(metric: impl Into<String>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut t = ScoreTable::new(metric);
        for (id, v) in pairs {
            let id = id.into();
            if !v.is_finite() {
                return Err(Error::NonFinite { id, value: v });
            }
            if t.scores.insert(id.clone(), v).is_some() {
                return Err(Error::DuplicateId { path: t.metric.clone().into(), id });
            }
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<f64> {
        self.get(id).ok_or_else(|| Error::MissingId { table: self.metric.clone(), id: id.to_string() })
    }

    pub fn to_map(&self) -> ScoreMap {
        self.scores.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }
}

pub fn load_score_table(path: impl AsRef<Path>, metric: &str) -> Result<ScoreTable> {
    let path = path.as_ref();
    read_score_table(&read_to_string(path)?, path, metric)
}

/// Reads `id<TAB>score`. A leading `id<TAB>...` row is treated as a header.
pub fn read_score_table(text: &str, path: &Path, metric: &str) -> Result<ScoreTable> {
    let mut t = ScoreTable::new(metric);
    for (idx, (line_no, line)) in content_lines(text).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if idx == 0 && fields[0] == "id" {
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::parse(path, line_no, "expected `id<TAB>score`"));
        }
        let id = fields[0].trim();
        let raw = fields[1].trim();
        let v: f64 = raw.parse().map_err(|_| Error::parse(path, line_no, format!("non-numeric score `{raw}`")))?;
        if !v.is_finite() {
            return Err(Error::parse(path, line_no, format!("non-finite score `{raw}`")));
        }
        if t.scores.insert(id.to_string(), v).is_some() {
            return Err(Error::DuplicateId { path: path.into(), id: id.into() });
        }
    }
    Ok(t)
}

pub fn write_score_table(table: &ScoreTable) -> String {
    let mut out = String::from("id\tscore\n");
    for (id, v) in &table.scores {
        let _ = writeln!(out, "{id}\t{v}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<ScoreTable> {
        read_score_table(s, Path::new("s.tsv"), "m")
    }

    #[test]
    fn three_rows() {
        let t = read("a\t0.76\nb\t-1\nc\t3e-2\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.get("a"), Some(0.76));
        assert_eq!(t.get("c"), Some(0.03));
    }

    #[test]
    fn rejects_non_finite_and_duplicates() {
        assert!(read("a\tNaN\n").is_err());
        assert!(read("a\tinf\n").is_err());
        assert!(matches!(read("a\t1\na\t2\n"), Err(Error::DuplicateId { .. })));
    }

    #[test]
    fn write_read_round_trip() {
        let t = read("id\tscore\nx\t0.1\ny\t0.30000000000000004\n").unwrap();
        let back = read(&write_score_table(&t)).unwrap();
        assert_eq!(t, back);
    }
}
