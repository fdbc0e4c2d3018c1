//! Core datatypes and loaders for every external artifact: pair datasets,
//! CoNLL-U parses, `.vec` embeddings, metric score tables and tagged words.

mod conllu;
mod embeddings;
mod pairs;
mod scores;
mod table;
mod tree;

use std::fs;
use std::path::Path;

pub use conllu::{parse_conllu, read_conllu, write_conllu};
pub use embeddings::{load_embeddings, read_embeddings, EmbeddingTable};
pub use pairs::{load_pair_dataset, read_pair_dataset, PairOptions, SentencePair};
pub use scores::{load_score_table, read_score_table, write_score_table, ScoreMap, ScoreTable};
pub use table::{join_factors, Column, Factor, FactorTable};
pub use tree::DependencyTree;

use crate::error::{Error, Result};

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Content lines with their 1-based line numbers; blank and `#` lines skipped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}
