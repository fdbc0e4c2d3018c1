//! The linguistic regressors: SEM, SYN, LEX, MOR and the CLB proxy.

mod lex;
mod morph;
mod ted;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use lex::{lex_factor, lex_score, LexDirection, LexOptions};
pub use morph::{
    build_morph_lexicon, canonical_feats, load_tagged_words, mor_score, morph_overlap, retrofit_embeddings,
    tagged_words_from_trees, MorphLexicon, Retrofitter, DEFAULT_PAIR_CAP, DEFAULT_RETROFIT_ITERATIONS,
};
pub use ted::{syn_score, tree_edit_distance};

pub use crate::data::Factor;
use crate::data::{content_lines, DependencyTree, EmbeddingTable, ScoreMap, ScoreTable, SentencePair};
use crate::error::{Error, Result};
use crate::par::Exec;

/// One raw (pre-normalization) factor value for one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorScore {
    pub pair_id: String,
    pub kind: Factor,
    pub value: f64,
}

/// The human score, unchanged.
pub fn sem_score(pair: &SentencePair) -> Result<f64> {
    pair.sem.ok_or_else(|| Error::MissingSem(pair.id.clone()))
}

/// The metric's own scores on (source, translation) pairs, used as a regressor.
pub fn clb_scores(parallel: &ScoreTable) -> ScoreMap {
    parallel.to_map()
}

/// Everything per-pair scoring needs. Trees are aligned with `pairs` by index.
pub struct FactorInputs<'a> {
    pub pairs: &'a [SentencePair],
    pub trees_x: Option<&'a [DependencyTree]>,
    pub trees_y: Option<&'a [DependencyTree]>,
    /// Retrofitted vectors, already casefolded when `casefold` is set.
    pub embeddings: Option<&'a EmbeddingTable>,
}

#[derive(Clone, Debug)]
pub struct ScoringOptions {
    pub active: BTreeSet<Factor>,
    pub lex: LexOptions,
    pub casefold: bool,
}

/// Per-factor values in pair order, plus the pairs each factor could not score.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorRun {
    pub scores: BTreeMap<Factor, IndexMap<String, f64>>,
    pub failures: BTreeMap<Factor, Vec<(String, String)>>,
}

pub fn score_pairs(inputs: &FactorInputs<'_>, opts: &ScoringOptions, exec: Exec) -> Result<FactorRun> {
    if opts.active.contains(&Factor::Clb) {
        return Err(Error::Invalid("CLB comes from a metric's parallel-data scores, not from pair scoring".into()));
    }
    let n = inputs.pairs.len();
    let trees = if opts.active.contains(&Factor::Syn) {
        match (inputs.trees_x, inputs.trees_y) {
            (Some(tx), Some(ty)) if tx.len() == n && ty.len() == n => Some((tx, ty)),
            (Some(tx), Some(ty)) => {
                return Err(Error::Invalid(format!("{n} pairs but {} x-side and {} y-side parses", tx.len(), ty.len())))
            }
            _ => return Err(Error::Invalid("SYN needs parses for both sides".into())),
        }
    } else {
        None
    };
    if opts.active.contains(&Factor::Mor) && inputs.embeddings.is_none() {
        return Err(Error::Invalid("MOR needs retrofitted embeddings".into()));
    }

    let rows: Vec<Vec<(Factor, Result<f64>)>> = exec.map_range(n, |i| {
        let p = &inputs.pairs[i];
        let fold = |ts: &[String]| -> Vec<String> {
            if opts.casefold {
                ts.iter().map(|t| t.to_lowercase()).collect()
            } else {
                ts.to_vec()
            }
        };
        let needs_tokens = opts.active.contains(&Factor::Lex) || opts.active.contains(&Factor::Mor);
        let (x, y) = if needs_tokens { (fold(&p.x_tokens), fold(&p.y_tokens)) } else { (vec![], vec![]) };
        opts.active
            .iter()
            .map(|&f| {
                let v = match f {
                    Factor::Sem => sem_score(p),
                    Factor::Syn => {
                        let (tx, ty) = trees.expect("checked above");
                        Ok(syn_score(&tx[i], &ty[i]))
                    }
                    Factor::Lex => lex_factor(&x, &y, opts.lex),
                    Factor::Mor => mor_score(&x, &y, inputs.embeddings.expect("checked above")),
                    Factor::Clb => unreachable!(),
                };
                (f, v.map_err(|e| e.for_pair(&p.id)))
            })
            .collect()
    });

    let mut run = FactorRun::default();
    for f in &opts.active {
        run.scores.insert(*f, IndexMap::new());
    }
    for (p, row) in inputs.pairs.iter().zip(rows) {
        for (f, v) in row {
            match v {
                Ok(v) => {
                    run.scores.get_mut(&f).expect("active").insert(p.id.clone(), v);
                }
                Err(e) => run.failures.entry(f).or_default().push((p.id.clone(), e.to_string())),
            }
        }
    }
    Ok(run)
}

/// `id<TAB>factor<TAB>value` rows.
pub fn write_factor_scores(factor: Factor, values: &IndexMap<String, f64>) -> String {
    let mut out = String::from("id\tfactor\tvalue\n");
    for (id, v) in values {
        let _ = writeln!(out, "{id}\t{factor}\t{v}");
    }
    out
}

pub fn read_factor_scores(text: &str, path: &Path) -> Result<(Factor, IndexMap<String, f64>)> {
    let mut factor = None;
    let mut values = IndexMap::new();
    for (idx, (ln, line)) in content_lines(text).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if idx == 0 && fields[0] == "id" {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::parse(path, ln, "expected `id<TAB>factor<TAB>value`"));
        }
        let f: Factor = fields[1].parse().map_err(|e: Error| Error::parse(path, ln, e.to_string()))?;
        if *factor.get_or_insert(f) != f {
            return Err(Error::parse(path, ln, "mixed factors in one file"));
        }
        let v: f64 = fields[2].parse().map_err(|_| Error::parse(path, ln, format!("bad value `{}`", fields[2])))?;
        if values.insert(fields[0].to_string(), v).is_some() {
            return Err(Error::DuplicateId { path: path.into(), id: fields[0].into() });
        }
    }
    let factor = factor.ok_or_else(|| Error::parse(path, 1, "no rows"))?;
    Ok((factor, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: &str, x: &str, y: &str, sem: Option<f64>) -> SentencePair {
        SentencePair {
            id: id.into(),
            x_tokens: x.split_whitespace().map(String::from).collect(),
            y_tokens: y.split_whitespace().map(String::from).collect(),
            sem,
            lang_x: "en".into(),
            lang_y: "en".into(),
        }
    }

    #[test]
    fn sem_passthrough() {
        assert_eq!(sem_score(&pair("a", "Some men are fighting.", "Two men are fighting.", Some(4.25))).unwrap(), 4.25);
        assert_eq!(sem_score(&pair("b", "A woman is writing.", "Eine Frau schwimmt.", Some(0.1))).unwrap(), 0.1);
        match sem_score(&pair("c", "x", "y", None)) {
            Err(Error::MissingSem(id)) => assert_eq!(id, "c"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pipeline_scores_and_records_failures() {
        let pairs = vec![pair("a", "The cat", "the cat", Some(1.0)), pair("b", "dog", "cat", None)];
        let mut emb = EmbeddingTable::new(2);
        emb.insert("the", &[1.0, 0.0]).unwrap();
        emb.insert("cat", &[0.0, 1.0]).unwrap();
        let inputs = FactorInputs { pairs: &pairs, trees_x: None, trees_y: None, embeddings: Some(&emb) };
        let opts = ScoringOptions {
            active: [Factor::Sem, Factor::Lex, Factor::Mor].into_iter().collect(),
            lex: LexOptions::default(),
            casefold: true,
        };
        for exec in [Exec::Sequential, Exec::Parallel] {
            let run = score_pairs(&inputs, &opts, exec).unwrap();
            assert_eq!(run.scores[&Factor::Lex]["a"], 1.0);
            assert_eq!(run.scores[&Factor::Lex]["b"], 0.0);
            assert!((run.scores[&Factor::Mor]["a"] - 1.0).abs() < 1e-15);
            assert!(!run.scores[&Factor::Mor].contains_key("b"));
            assert_eq!(run.failures[&Factor::Sem].len(), 1);
            assert_eq!(run.failures[&Factor::Mor][0].0, "b");
        }
    }

    #[test]
    fn factor_file_round_trip() {
        let values: IndexMap<String, f64> =
            [("a".to_string(), 0.1), ("b".to_string(), 1.0 / 3.0)].into_iter().collect();
        let text = write_factor_scores(Factor::Syn, &values);
        let (f, back) = read_factor_scores(&text, Path::new("SYN.tsv")).unwrap();
        assert_eq!(f, Factor::Syn);
        assert_eq!(back, values);
    }
}
