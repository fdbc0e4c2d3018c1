use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{content_lines, read_to_string};
use crate::error::{Error, Result};

/// One (x, y) sentence pair: x is the reference or source, y the hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub x_tokens: Vec<String>,
    pub y_tokens: Vec<String>,
    /// Human score on its raw scale (DA for WMT, similarity for STS).
    pub sem: Option<f64>,
    pub lang_x: String,
    pub lang_y: String,
}

#[derive(Clone, Debug)]
pub struct PairOptions {
    pub lang_x: String,
    pub lang_y: String,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions { lang_x: "en".into(), lang_y: "en".into() }
    }
}

pub fn load_pair_dataset(path: impl AsRef<Path>, opts: &PairOptions) -> Result<Vec<SentencePair>> {
    let path = path.as_ref();
    read_pair_dataset(&read_to_string(path)?, path, opts)
}

/// Parses `id<TAB>x<TAB>y[<TAB>sem[<TAB>pretokenized]]`.
///
/// A first row whose id field is literally `id` is a header. Text is split on
/// any whitespace; rows flagged pretokenized are split on ASCII spaces only,
/// so tokens may carry other whitespace such as U+00A0.
pub fn read_pair_dataset(text: &str, path: &Path, opts: &PairOptions) -> Result<Vec<SentencePair>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut pretok_col = None;
    for (idx, (line_no, line)) in content_lines(text).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if idx == 0 && fields[0] == "id" {
            pretok_col = fields.iter().position(|f| *f == "pretokenized");
            continue;
        }
        if fields.len() < 3 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected at least 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(Error::parse(path, line_no, "empty id"));
        }
        let pretok = match pretok_col.and_then(|c| fields.get(c)) {
            None => false,
            Some(v) => match v.trim() {
                "" | "0" | "false" => false,
                "1" | "true" => true,
                other => return Err(Error::parse(path, line_no, format!("bad pretokenized flag `{other}`"))),
            },
        };
        let tokenize = |s: &str| -> Vec<String> {
            if pretok {
                s.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect()
            } else {
                s.split_whitespace().map(str::to_string).collect()
            }
        };
        let x_tokens = tokenize(fields[1]);
        let y_tokens = tokenize(fields[2]);
        if x_tokens.is_empty() || y_tokens.is_empty() {
            return Err(Error::parse(path, line_no, "empty sentence"));
        }
        let sem = match fields.get(3).map(|s| s.trim()) {
            None | Some("") => None,
            Some(s) => {
                let v: f64 =
                    s.parse().map_err(|_| Error::parse(path, line_no, format!("non-numeric sem score `{s}`")))?;
                if !v.is_finite() {
                    return Err(Error::parse(path, line_no, format!("non-finite sem score `{s}`")));
                }
                Some(v)
            }
        };
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateId { path: path.into(), id: id.into() });
        }
        out.push(SentencePair {
            id: id.to_string(),
            x_tokens,
            y_tokens,
            sem,
            lang_x: opts.lang_x.clone(),
            lang_y: opts.lang_y.clone(),
        });
    }
    Ok(out)
}
