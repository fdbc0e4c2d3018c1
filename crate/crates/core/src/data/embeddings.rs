use std::collections::HashMap;
use std::path::Path;

use log::warn;

use super::read_to_string;
use crate::error::{Error, Result};

/// Word to dense vector map with a fixed dimension. Rows are stored
/// contiguously in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable { dim, words: Vec::new(), index: HashMap::new(), data: Vec::new(), duplicates: 0 }
    }

    /// Inserts `word` unless already present. Returns whether it was inserted.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Invalid(format!(
                "vector for `{word}` has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(v) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { id: word.to_string(), value: *v });
        }
        if self.index.contains_key(word) {
            self.duplicates += 1;
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows skipped at load time because the word was already present.
    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates
    }

    /// Lowercased copy; when two words fold together the first row wins.
    pub fn casefolded(&self) -> EmbeddingTable {
        let mut out = EmbeddingTable::new(self.dim);
        for (i, w) in self.words.iter().enumerate() {
            // dimension and finiteness were checked on the way in
            let _ = out.insert(&w.to_lowercase(), self.row(i));
        }
        out.duplicates += self.duplicates;
        out
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    read_embeddings(&read_to_string(path)?, path)
}

/// Reads the FastText `.vec` text layout: an optional `count dim` header,
/// then `word v1 ... vdim` per line.
pub fn read_embeddings(text: &str, path: &Path) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    let mut declared = None;
    let mut buf = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches(['\r', ' ']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if line_no == 1 && rest.len() == 1 {
            if let (Ok(count), Ok(dim)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                if dim == 0 {
                    return Err(Error::parse(path, line_no, "declared dimension is 0"));
                }
                declared = Some(count);
                table = Some(EmbeddingTable::new(dim));
                continue;
            }
        }
        buf.clear();
        for f in &rest {
            let v: f64 = f.parse().map_err(|_| Error::parse(path, line_no, format!("bad component `{f}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line_no, format!("non-finite component `{f}`")));
            }
            buf.push(v);
        }
        if buf.is_empty() {
            return Err(Error::parse(path, line_no, format!("no vector for `{word}`")));
        }
        let t = table.get_or_insert_with(|| EmbeddingTable::new(buf.len()));
        if buf.len() != t.dim {
            return Err(Error::parse(path, line_no, format!("expected {} components, found {}", t.dim, buf.len())));
        }
        t.insert(word, &buf).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
    }
    let table = table.ok_or_else(|| Error::parse(path, 1, "no vectors"))?;
    if table.duplicates > 0 {
        warn!("{}: kept first of {} duplicate words", path.display(), table.duplicates);
    }
    if let Some(c) = declared {
        if c != table.len() + table.duplicates {
            warn!("{}: header declares {c} rows, found {}", path.display(), table.len() + table.duplicates);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<EmbeddingTable> {
        read_embeddings(s, Path::new("t.vec"))
    }

    #[test]
    fn headerless_and_header_agree() {
        let a = read("cat 1 0 0.5\ndog 0 1 -0.5\n").unwrap();
        let b = read("2 3\ncat 1 0 0.5\ndog 0 1 -0.5\n").unwrap();
        assert_eq!(a.dim(), 3);
        assert_eq!(a.len(), 2);
        assert_eq!(a, b);
        assert_eq!(a.get("dog"), Some(&[0.0, 1.0, -0.5][..]));
    }

    #[test]
    fn wrong_component_count() {
        match read("cat 1 0 0.5\ndog 0 1\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        assert!(read("2 3\ncat 1 0\n").is_err());
    }

    #[test]
    fn duplicates_keep_first() {
        let t = read("cat 1 0\ncat 0 1\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.duplicates_skipped(), 1);
        assert_eq!(t.get("cat"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn casefold_keeps_first() {
        let t = read("The 1 0\nthe 0 1\n").unwrap().casefolded();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("the"), Some(&[1.0, 0.0][..]));
    }

    #[test]
    fn rejects_nan() {
        assert!(read("cat NaN 0\n").is_err());
    }
}
