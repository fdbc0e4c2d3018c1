use std::fmt::Write as _;
use std::path::Path;

use super::{read_to_string, DependencyTree};
use crate::error::{Error, Result};

pub fn parse_conllu(path: impl AsRef<Path>) -> Result<Vec<DependencyTree>> {
    let path = path.as_ref();
    read_conllu(&read_to_string(path)?, path)
}

/// Reads CoNLL-U sentence blocks. Only ID, FORM, FEATS and HEAD are used;
/// multiword ranges (`1-2`) and empty nodes (`1.1`) are skipped.
pub fn read_conllu(text: &str, path: &Path) -> Result<Vec<DependencyTree>> {
    let mut trees = Vec::new();
    let mut block = Block::default();
    for line in text.lines().map(|l| l.trim_end_matches('\r')) {
        if line.trim().is_empty() {
            if !block.is_empty() {
                trees.push(block.finish(path, trees.len() + 1)?);
                block = Block::default();
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                let id = id.trim_start().trim_start_matches('=').trim();
                block.sent_id = Some(id.to_string());
            }
            continue;
        }
        block.lines.push(line.to_string());
    }
    if !block.is_empty() {
        trees.push(block.finish(path, trees.len() + 1)?);
    }
    Ok(trees)
}

#[derive(Default)]
struct Block {
    sent_id: Option<String>,
    lines: Vec<String>,
}

impl Block {
    fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    fn finish(self, path: &Path, sentence: usize) -> Result<DependencyTree> {
        let err = |msg: String| Error::Conllu { path: path.into(), sentence, msg };
        let mut heads = Vec::new();
        let mut forms = Vec::new();
        let mut feats = Vec::new();
        for line in &self.lines {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 7 {
                return Err(err(format!("expected 10 columns, found {}: `{line}`", cols.len())));
            }
            let id = cols[0];
            if id.contains('-') || id.contains('.') {
                continue;
            }
            let id: usize = id.parse().map_err(|_| err(format!("bad token id `{id}`")))?;
            if id != heads.len() + 1 {
                return Err(err(format!("token id {id} out of sequence")));
            }
            let head: usize = cols[6].parse().map_err(|_| err(format!("bad head `{}` for token {id}", cols[6])))?;
            heads.push(head);
            forms.push(cols[1].to_string());
            feats.push(match cols[5] {
                "_" | "" => None,
                f => Some(f.to_string()),
            });
        }
        let n = heads.len();
        let mut parents = Vec::with_capacity(n);
        for (i, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(err(format!("token {} references nonexistent head {h}", i + 1)));
            }
            parents.push(h.checked_sub(1));
        }
        DependencyTree::with_tokens(parents, forms, feats).map(|t| t.with_sent_id(self.sent_id)).map_err(|e| match e {
            Error::InvalidTree(msg) => err(msg),
            other => other,
        })
    }
}

/// Serializes trees as minimal CoNLL-U (unused columns written as `_`).
pub fn write_conllu(trees: &[DependencyTree]) -> String {
    let mut out = String::new();
    for t in trees {
        if let Some(id) = t.sent_id() {
            let _ = writeln!(out, "# sent_id = {id}");
        }
        for i in 0..t.len() {
            let head = t.parent(i).map_or(0, |p| p + 1);
            let feats = t.feats()[i].as_deref().unwrap_or("_");
            let _ = writeln!(out, "{}\t{}\t_\t_\t_\t{}\t{}\t_\t_\t_", i + 1, t.forms()[i], feats, head);
        }
        out.push('\n');
    }
    out
}
