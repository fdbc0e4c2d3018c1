//! Metric ensembles by score averaging, judged by segment-level Pearson r.

use std::collections::HashSet;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::data::ScoreTable;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::regression::{mean, z_normalize};

/// Sample Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
    }
    if xs.len() < 3 {
        return Err(Error::TooFew { needed: 3, got: xs.len() });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ids present in every table, in the first table's order.
fn common_ids<'a>(tables: &[&'a ScoreTable]) -> Vec<&'a str> {
    let Some(first) = tables.first() else { return Vec::new() };
    first
        .scores
        .keys()
        .filter(|id| tables[1..].iter().all(|t| t.scores.contains_key(*id)))
        .map(String::as_str)
        .collect()
}

/// Member columns over `ids`, z-normalized when asked.
fn member_columns(tables: &[&ScoreTable], ids: &[&str], normalize_first: bool) -> Result<Vec<Vec<f64>>> {
    tables
        .iter()
        .map(|t| {
            let col: Vec<f64> = ids.iter().map(|id| t.scores[*id]).collect();
            if normalize_first {
                z_normalize(&col).map_err(|e| match e {
                    Error::ZeroVariance => Error::ConstantColumn(t.metric.clone()),
                    e => e,
                })
            } else {
                Ok(col)
            }
        })
        .collect()
}

fn average_columns(cols: &[Vec<f64>]) -> Vec<f64> {
    let k = cols.len() as f64;
    (0..cols[0].len()).map(|i| cols.iter().map(|c| c[i]).sum::<f64>() / k).collect()
}

/// Per-id mean of the member scores over the ids all members share.
pub fn average_metrics(tables: &[&ScoreTable], normalize_first: bool) -> Result<ScoreTable> {
    if tables.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: tables.len() });
    }
    let ids = common_ids(tables);
    if ids.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let cols = member_columns(tables, &ids, normalize_first)?;
    let avg = average_columns(&cols);
    let name = tables.iter().map(|t| t.metric.as_str()).collect::<Vec<_>>().join("+");
    ScoreTable::from_pairs(name, ids.into_iter().zip(avg))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub members: Vec<String>,
    pub n: usize,
    pub member_r: IndexMap<String, f64>,
    pub ensemble_r: f64,
    pub best_member_r: f64,
    /// `(ensemble r − best member r) / |best member r| · 100`.
    pub improvement_pct: f64,
}

fn improvement(ensemble: f64, best: f64) -> f64 {
    (ensemble - best) / best.abs() * 100.0
}

/// Evaluates one combination on the ids shared by all members and the human scores.
///
/// Member correlations are taken on the same (possibly normalized) columns
/// that get averaged; Pearson r is affine-invariant so this only removes
/// rounding differences.
pub fn evaluate_combo(members: &[&ScoreTable], human: &ScoreTable, normalize_first: bool) -> Result<EnsembleReport> {
    if members.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: members.len() });
    }
    let mut all: Vec<&ScoreTable> = members.to_vec();
    all.push(human);
    let ids = common_ids(&all);
    if ids.is_empty() {
        return Err(Error::EmptyJoin);
    }
    let cols = member_columns(members, &ids, normalize_first)?;
    let h: Vec<f64> = ids.iter().map(|id| human.scores[*id]).collect();
    let mut member_r = IndexMap::new();
    for (t, c) in members.iter().zip(&cols) {
        member_r.insert(t.metric.clone(), pearson(c, &h)?);
    }
    let ensemble_r = pearson(&average_columns(&cols), &h)?;
    let best_member_r = member_r.values().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EnsembleReport {
        members: members.iter().map(|t| t.metric.clone()).collect(),
        n: ids.len(),
        member_r,
        ensemble_r,
        best_member_r,
        improvement_pct: improvement(ensemble_r, best_member_r),
    })
}

pub fn evaluate_ensembles(
    members: &[ScoreTable],
    human: &ScoreTable,
    combos: &[Vec<String>],
    normalize_first: bool,
    exec: Exec,
) -> Result<Vec<EnsembleReport>> {
    let known: HashSet<&str> = members.iter().map(|m| m.metric.as_str()).collect();
    for combo in combos {
        if combo.len() < 2 {
            return Err(Error::Invalid(format!("combo [{}] needs at least two members", combo.join(", "))));
        }
        if let Some(unknown) = combo.iter().find(|m| !known.contains(m.as_str())) {
            return Err(Error::UnknownMember(unknown.clone()));
        }
    }
    exec.map(combos, |combo| {
        let tables: Vec<&ScoreTable> =
            combo.iter().map(|name| members.iter().find(|m| &m.metric == name).expect("validated")).collect();
        evaluate_combo(&tables, human, normalize_first)
    })
    .into_iter()
    .collect()
}

/// One labelled dataset's reports, e.g. one language pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelledReports {
    pub label: String,
    pub reports: Vec<EnsembleReport>,
}

/// Wide TSV: one row per combo, `r` and improvement per dataset, then the
/// mean improvement.
pub fn render_ensemble_table(sets: &[LabelledReports]) -> String {
    let mut out = String::from("combo");
    for s in sets {
        let _ = write!(out, "\t{0}_r\t{0}_impr%", s.label);
    }
    out.push_str("\tavg_impr%\n");
    let Some(first) = sets.first() else { return out };
    for (i, rep) in first.reports.iter().enumerate() {
        out.push_str(&rep.members.join("+"));
        let mut total = 0.0;
        for s in sets {
            let r = &s.reports[i];
            total += r.improvement_pct;
            let _ = write!(out, "\t{:.4}\t{:.2}", r.ensemble_r, r.improvement_pct);
        }
        let _ = writeln!(out, "\t{:.2}", total / sets.len() as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(name: &str, vals: &[f64]) -> ScoreTable {
        ScoreTable::from_pairs(name, vals.iter().enumerate().map(|(i, v)| (format!("s{i}"), *v))).unwrap()
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        // Σdxdy = 6.5, Σdx² = 5, Σdy² = 8.75
        let r = pearson(&xs, &[1.0, 2.0, 3.0, 5.0]).unwrap();
        assert!((r - 6.5 / (5.0f64 * 8.75).sqrt()).abs() < 1e-15);
        assert!((r - 0.9827).abs() < 5e-5);
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn averaging_examples() {
        let a = table("a", &[0.2, 0.4, 0.9]);
        let same = average_metrics(&[&a, &a], false).unwrap();
        assert_eq!(same.scores.values().copied().collect::<Vec<_>>(), vec![0.2, 0.4, 0.9]);

        let x = ScoreTable::from_pairs("x", [("id", 0.2)]).unwrap();
        let y = ScoreTable::from_pairs("y", [("id", 0.8)]).unwrap();
        assert_eq!(average_metrics(&[&x, &y], false).unwrap().get("id"), Some(0.5));

        let m1 = table("m1", &[1.0, 2.0, 6.0]);
        let m2 = table("m2", &[4.0, 0.0, 3.0]);
        let m3 = table("m3", &[1.0, 1.0, 0.0]);
        let avg = average_metrics(&[&m1, &m2, &m3], false).unwrap();
        assert_eq!(avg.scores.values().copied().collect::<Vec<_>>(), vec![2.0, 1.0, 3.0]);
        assert_eq!(avg.metric, "m1+m2+m3");

        let z = ScoreTable::from_pairs("z", [("other", 0.8)]).unwrap();
        assert!(matches!(average_metrics(&[&x, &z], false), Err(Error::EmptyJoin)));
    }

    #[test]
    fn anti_correlated_members_cancel() {
        let a = table("a", &[0.1, 0.7, 0.3, 0.9]);
        let b = table("b", &[-0.1, -0.7, -0.3, -0.9]);
        let avg = average_metrics(&[&a, &b], true).unwrap();
        assert!(avg.scores.values().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn duplicate_member_is_zero_improvement() {
        let m = table("m", &[0.3, 0.1, 0.8, 0.5, 0.2]);
        let h = table("human", &[0.2, 0.0, 0.9, 0.7, 0.1]);
        for norm in [true, false] {
            let r = evaluate_combo(&[&m, &m], &h, norm).unwrap();
            assert_eq!(r.improvement_pct, 0.0);
        }
    }

    #[test]
    fn unknown_member_rejected() {
        let m = table("m", &[0.3, 0.1, 0.8]);
        let h = table("human", &[0.2, 0.0, 0.9]);
        let combos = vec![vec!["m".to_string(), "nope".to_string()]];
        assert!(matches!(
            evaluate_ensembles(&[m], &h, &combos, true, Exec::Sequential),
            Err(Error::UnknownMember(n)) if n == "nope"
        ));
    }
}
