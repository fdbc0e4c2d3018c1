use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{content_lines, ScoreMap, ScoreTable, SentencePair};
use crate::error::{Error, Result};
use crate::regression::z_normalize;

/// Regressor kinds, ordered the way report tables list them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Factor {
    Sem,
    Syn,
    Lex,
    Mor,
    Clb,
}

impl Factor {
    pub const ALL: [Factor; 5] = [Factor::Sem, Factor::Syn, Factor::Lex, Factor::Mor, Factor::Clb];

    pub fn as_str(self) -> &'static str {
        match self {
            Factor::Sem => "SEM",
            Factor::Syn => "SYN",
            Factor::Lex => "LEX",
            Factor::Mor => "MOR",
            Factor::Clb => "CLB",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Factor::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown factor `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl Column {
    fn raw(values: Vec<f64>) -> Self {
        Column { values, normalized: false }
    }
}

/// The regression design: one row per pair, one column per active factor,
/// plus the metric score being explained.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorTable {
    pub ids: Vec<String>,
    pub factors: IndexMap<Factor, Column>,
    pub target_name: String,
    pub target: Column,
    /// Ids present in both pairs and target but missing an active factor.
    pub dropped: Vec<String>,
}

impl FactorTable {
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn active(&self) -> Vec<Factor> {
        self.factors.keys().copied().collect()
    }

    pub fn row(&self, i: usize) -> BTreeMap<Factor, f64> {
        self.factors.iter().map(|(f, c)| (*f, c.values[i])).collect()
    }

    /// z-normalizes every factor column and the target.
    pub fn normalized(&self) -> Result<FactorTable> {
        let mut out = self.clone();
        for (f, col) in out.factors.iter_mut() {
            if !col.normalized {
                col.values = z_normalize(&col.values).map_err(|e| rename(e, f.as_str()))?;
                col.normalized = true;
            }
        }
        if !out.target.normalized {
            out.target.values = z_normalize(&out.target.values).map_err(|e| rename(e, &self.target_name))?;
            out.target.normalized = true;
        }
        Ok(out)
    }

    /// Tab-separated dump. A `# normalized:` comment carries the per-column flags.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# normalized:");
        for (f, c) in &self.factors {
            let _ = write!(out, " {}={}", f, u8::from(c.normalized));
        }
        let _ = writeln!(out, " target={}", u8::from(self.target.normalized));
        out.push_str("id");
        for f in self.factors.keys() {
            let _ = write!(out, "\t{f}");
        }
        let _ = writeln!(out, "\t{}", self.target_name);
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for c in self.factors.values() {
                let _ = write!(out, "\t{}", c.values[i]);
            }
            let _ = writeln!(out, "\t{}", self.target.values[i]);
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<FactorTable> {
        let mut flags: BTreeMap<String, bool> = BTreeMap::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# normalized:") {
                for kv in rest.split_whitespace() {
                    let (k, v) = kv.split_once('=').unwrap_or((kv, "0"));
                    flags.insert(k.to_string(), v == "1");
                }
            }
        }
        let mut lines = content_lines(text);
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "missing header"))?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 2 || cols[0] != "id" {
            return Err(Error::parse(path, hl, "header must start with `id` and name the target last"));
        }
        let factors: Vec<Factor> = cols[1..cols.len() - 1]
            .iter()
            .map(|c| c.parse())
            .collect::<Result<_>>()
            .map_err(|e| Error::parse(path, hl, e.to_string()))?;
        let target_name = cols[cols.len() - 1].to_string();
        let mut ids = Vec::new();
        let mut values = vec![Vec::new(); factors.len() + 1];
        for (ln, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(Error::parse(path, ln, format!("expected {} fields, found {}", cols.len(), fields.len())));
            }
            ids.push(fields[0].to_string());
            for (k, f) in fields[1..].iter().enumerate() {
                let v: f64 = f.parse().map_err(|_| Error::parse(path, ln, format!("bad value `{f}`")))?;
                values[k].push(v);
            }
        }
        let target = Column {
            values: values.pop().unwrap_or_default(),
            normalized: flags.get("target").copied().unwrap_or(false),
        };
        let factors = factors
            .into_iter()
            .zip(values)
            .map(|(f, v)| {
                let normalized = flags.get(f.as_str()).copied().unwrap_or(false);
                (f, Column { values: v, normalized })
            })
            .collect();
        Ok(FactorTable { ids, factors, target_name, target, dropped: Vec::new() })
    }
}

fn rename(e: Error, name: &str) -> Error {
    match e {
        Error::ZeroVariance => Error::ConstantColumn(name.to_string()),
        other => other,
    }
}

/// Inner-joins pairs with the target scores, then attaches every factor map.
/// Rows missing any active factor are dropped and listed in `dropped`.
pub fn join_factors(
    pairs: &[SentencePair],
    factor_maps: &BTreeMap<Factor, ScoreMap>,
    target: &ScoreTable,
) -> Result<FactorTable> {
    let mut ids = Vec::new();
    let mut dropped = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); factor_maps.len()];
    let mut tgt = Vec::new();
    let mut matched = 0usize;
    for p in pairs {
        let Some(t) = target.get(&p.id) else { continue };
        matched += 1;
        let row: Option<Vec<f64>> = factor_maps.values().map(|m| m.get(&p.id).copied()).collect();
        match row {
            Some(row) => {
                for (c, v) in cols.iter_mut().zip(row) {
                    c.push(v);
                }
                tgt.push(t);
                ids.push(p.id.clone());
            }
            None => dropped.push(p.id.clone()),
        }
    }
    if matched == 0 || ids.is_empty() {
        return Err(Error::EmptyJoin);
    }
    Ok(FactorTable {
        ids,
        factors: factor_maps.keys().copied().zip(cols.into_iter().map(Column::raw)).collect(),
        target_name: target.metric.clone(),
        target: Column::raw(tgt),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(id: &str) -> SentencePair {
        SentencePair {
            id: id.into(),
            x_tokens: vec!["a".into()],
            y_tokens: vec!["b".into()],
            sem: Some(1.0),
            lang_x: "en".into(),
            lang_y: "en".into(),
        }
    }

    fn map(kv: &[(&str, f64)]) -> ScoreMap {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn complete_join() {
        let pairs = [pair("a"), pair("b"), pair("c")];
        let mut fm = BTreeMap::new();
        fm.insert(Factor::Lex, map(&[("a", 0.1), ("b", 0.2), ("c", 0.3)]));
        fm.insert(Factor::Sem, map(&[("a", 1.), ("b", 2.), ("c", 3.)]));
        let target = ScoreTable::from_pairs("m", [("a", 0.5), ("b", 0.6), ("c", 0.7)]).unwrap();
        let t = join_factors(&pairs, &fm, &target).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.active(), vec![Factor::Sem, Factor::Lex]);
        assert!(t.dropped.is_empty());
    }

    #[test]
    fn missing_mor_drops_row() {
        let pairs = [pair("a"), pair("b"), pair("c")];
        let mut fm = BTreeMap::new();
        fm.insert(Factor::Lex, map(&[("a", 0.1), ("b", 0.2), ("c", 0.3)]));
        fm.insert(Factor::Mor, map(&[("a", 0.1), ("c", 0.3)]));
        let target = ScoreTable::from_pairs("m", [("a", 0.5), ("b", 0.6), ("c", 0.7)]).unwrap();
        let t = join_factors(&pairs, &fm, &target).unwrap();
        assert_eq!(t.ids, ["a", "c"]);
        assert_eq!(t.dropped, ["b"]);
    }

    #[test]
    fn disjoint_is_error() {
        let pairs = [pair("a")];
        let fm = BTreeMap::new();
        let target = ScoreTable::from_pairs("m", [("z", 0.5)]).unwrap();
        assert!(matches!(join_factors(&pairs, &fm, &target), Err(Error::EmptyJoin)));
    }

    #[test]
    fn constant_column_named() {
        let pairs = [pair("a"), pair("b"), pair("c")];
        let mut fm = BTreeMap::new();
        fm.insert(Factor::Syn, map(&[("a", 1.0), ("b", 1.0), ("c", 1.0)]));
        let target = ScoreTable::from_pairs("m", [("a", 0.5), ("b", 0.6), ("c", 0.7)]).unwrap();
        let t = join_factors(&pairs, &fm, &target).unwrap();
        match t.normalized() {
            Err(Error::ConstantColumn(c)) => assert_eq!(c, "SYN"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn join_row_count(present in prop::collection::vec((any::<bool>(), any::<bool>()), 1..40)) {
            // (in target, has MOR)
            let pairs: Vec<_> = (0..present.len()).map(|i| pair(&format!("p{i}"))).collect();
            let mut fm = BTreeMap::new();
            fm.insert(Factor::Lex, pairs.iter().map(|p| (p.id.clone(), 0.5)).collect::<ScoreMap>());
            fm.insert(Factor::Mor, pairs.iter().zip(&present).filter(|(_, f)| f.1).map(|(p, _)| (p.id.clone(), 0.1)).collect::<ScoreMap>());
            let target = ScoreTable::from_pairs("m", pairs.iter().zip(&present).filter(|(_, f)| f.0).map(|(p, _)| (p.id.clone(), 1.0))).unwrap();
            let inter = present.iter().filter(|f| f.0).count();
            let missing = present.iter().filter(|f| f.0 && !f.1).count();
            match join_factors(&pairs, &fm, &target) {
                Ok(t) => {
                    prop_assert_eq!(t.n_rows(), inter - missing);
                    prop_assert_eq!(t.dropped.len(), missing);
                }
                Err(Error::EmptyJoin) => prop_assert_eq!(inter - missing, 0),
                Err(e) => prop_assert!(false, "{}", e),
            }
        }

        #[test]
        fn tsv_round_trip(rows in prop::collection::vec((any::<f64>(), -1e6f64..1e6, any::<bool>()), 1..30)) {
            let rows: Vec<_> = rows.into_iter().filter(|r| r.0.is_finite()).collect();
            prop_assume!(!rows.is_empty());
            let t = FactorTable {
                ids: (0..rows.len()).map(|i| format!("id{i}")).collect(),
                factors: [
                    (Factor::Syn, Column { values: rows.iter().map(|r| r.0).collect(), normalized: rows[0].2 }),
                    (Factor::Lex, Column { values: rows.iter().map(|r| r.1).collect(), normalized: false }),
                ].into_iter().collect(),
                target_name: "BERTScore".into(),
                target: Column { values: rows.iter().map(|r| r.1 * 0.5).collect(), normalized: true },
                dropped: vec![],
            };
            let back = FactorTable::from_tsv(&t.to_tsv(), Path::new("t")).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
