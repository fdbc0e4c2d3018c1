//! Linear disentanglement: `m(x, y) = α·sem + β·syn + γ·lex + δ·morph (+ CLB) + ε`,
//! fitted by OLS on z-normalized variables, with t-test significance and R².

use std::collections::BTreeMap;
use std::fmt::Write as _;

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{Factor, FactorTable};
use crate::error::{Error, Result};

/// p-values at or above this are reported as non-significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Condition number (after column equilibration) above which XᵀX is
/// treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Subtracts the mean and divides by the population standard deviation.
pub fn z_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: values.len() });
    }
    let m = mean(values);
    let sd = std_dev(values);
    if sd.is_nan() || sd <= 1e-12 * m.abs().max(1.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

/// `1 - SSE/SST`.
pub fn r_squared(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: targets.len() });
    }
    if targets.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: targets.len() });
    }
    let m = mean(targets);
    let sst: f64 = targets.iter().map(|y| (y - m) * (y - m)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sse: f64 = targets.iter().zip(predictions).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(1.0 - sse / sst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub metric: String,
    pub coefficients: IndexMap<Factor, Coefficient>,
    pub intercept: Coefficient,
    pub r_squared: f64,
    pub n_rows: usize,
    pub dropped_rows: usize,
    pub residual_df: usize,
}

impl RegressionFit {
    pub fn factors(&self) -> Vec<Factor> {
        self.coefficients.keys().copied().collect()
    }

    /// Residuals `target - prediction` over the rows of `table`.
    pub fn residuals(&self, table: &FactorTable) -> Result<Vec<f64>> {
        (0..table.n_rows()).map(|i| predict(self, &table.row(i)).map(|p| table.target.values[i] - p)).collect()
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            metric: self.metric.clone(),
            n: self.n_rows,
            dropped: self.dropped_rows,
            coefficients: self
                .coefficients
                .iter()
                .map(|(f, c)| {
                    (
                        f.as_str().to_string(),
                        CoefficientReport { value: c.value, p: c.p_value, significant: c.significant },
                    )
                })
                .collect(),
            intercept: self.intercept.value,
            r2: self.r_squared,
        }
    }
}

/// Machine-readable summary of one fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub metric: String,
    pub n: usize,
    pub dropped: usize,
    pub coefficients: IndexMap<String, CoefficientReport>,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub value: f64,
    pub p: f64,
    pub significant: bool,
}

fn column_names(table: &FactorTable) -> Vec<String> {
    std::iter::once("intercept".to_string()).chain(table.factors.keys().map(|f| f.as_str().to_string())).collect()
}

/// Ordinary least squares with an intercept, solved from the normal equations.
///
/// Standard errors come from `σ̂²·(XᵀX)⁻¹` with `σ̂² = SSE/(n − k − 1)`;
/// p-values are two-sided under Student's t with `n − k − 1` degrees of freedom.
pub fn fit_ols(table: &FactorTable) -> Result<RegressionFit> {
    let n = table.n_rows();
    let k = table.factors.len();
    if n < k + 2 {
        return Err(Error::TooFew { needed: k + 2, got: n });
    }
    let p = k + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { table.factors[j - 1].values[i] });
    let y = DVector::from_column_slice(&table.target.values);
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * &y;

    let names = column_names(table);
    check_conditioning(&xtx, &names)?;
    let chol =
        xtx.clone().cholesky().ok_or_else(|| Error::Singular { condition: f64::INFINITY, columns: names.clone() })?;
    let beta = chol.solve(&xty);

    let fitted = &x * &beta;
    let r2 = r_squared(fitted.as_slice(), y.as_slice()).map_err(|e| match e {
        Error::ZeroVariance => Error::ConstantColumn(table.target_name.clone()),
        e => e,
    })?;
    let sse: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    let df = n - p;
    let sigma2 = sse / df as f64;
    let inv = chol.inverse();
    let t_dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Invalid(e.to_string()))?;

    let coef = |j: usize| -> Coefficient {
        let value = beta[j];
        let std_error = (sigma2 * inv[(j, j)]).max(0.0).sqrt();
        let (t_stat, p_value) = if std_error > 0.0 {
            let t = value / std_error;
            (t, (2.0 * t_dist.sf(t.abs())).min(1.0))
        } else if value == 0.0 {
            (0.0, 1.0)
        } else {
            (value.signum() * f64::INFINITY, 0.0)
        };
        Coefficient { value, std_error, t_stat, p_value, significant: p_value < SIGNIFICANCE_LEVEL }
    };

    Ok(RegressionFit {
        metric: table.target_name.clone(),
        coefficients: table.factors.keys().enumerate().map(|(j, f)| (*f, coef(j + 1))).collect(),
        intercept: coef(0),
        r_squared: r2,
        n_rows: n,
        dropped_rows: table.dropped.len(),
        residual_df: df,
    })
}

fn check_conditioning(xtx: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let p = xtx.nrows();
    for j in 0..p {
        if xtx[(j, j)] == 0.0 {
            return Err(Error::Singular { condition: f64::INFINITY, columns: vec![names[j].clone()] });
        }
    }
    let scale: Vec<f64> = (0..p).map(|j| xtx[(j, j)].sqrt().recip()).collect();
    let scaled = DMatrix::from_fn(p, p, |i, j| xtx[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(scaled);
    let (imin, min) =
        eig.eigenvalues.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let max = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        let v = eig.eigenvectors.column(imin);
        let columns = (0..p).filter(|&j| v[j].abs() > 0.1).map(|j| names[j].clone()).collect();
        return Err(Error::Singular { condition, columns });
    }
    Ok(())
}

/// `intercept + Σ coefficient·value`.
pub fn predict(fit: &RegressionFit, row: &BTreeMap<Factor, f64>) -> Result<f64> {
    let mut y = fit.intercept.value;
    for (f, c) in &fit.coefficients {
        let v = row.get(f).ok_or_else(|| Error::MissingFactor(f.as_str().to_string()))?;
        y += c.value * v;
    }
    Ok(y)
}

/// Two decimals, `*` appended when not significant. Negative zero prints as `0.00`.
pub fn format_coefficient(c: &Coefficient) -> String {
    let mut s = format_2dp(c.value);
    if !c.significant {
        s.push('*');
    }
    s
}

fn format_2dp(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Header for a results table over `factors` (listed in canonical order).
pub fn table_header(factors: &[Factor]) -> String {
    let mut fs = factors.to_vec();
    fs.sort();
    let mut s = String::from("Metric");
    for f in fs {
        let _ = write!(s, "\t{f}");
    }
    s.push_str("\tR2");
    s
}

pub fn table_row(fit: &RegressionFit) -> String {
    let mut fs = fit.factors();
    fs.sort();
    let mut s = fit.metric.clone();
    for f in fs {
        let _ = write!(s, "\t{}", format_coefficient(&fit.coefficients[&f]));
    }
    let _ = write!(s, "\t{}", format_2dp(fit.r_squared));
    s
}

/// Header plus one row per fit. Every fit must share the same factor set.
pub fn render_table(fits: &[RegressionFit]) -> Result<String> {
    let Some(first) = fits.first() else { return Ok(String::new()) };
    let factors = first.factors();
    let mut out = table_header(&factors);
    out.push('\n');
    for f in fits {
        if f.factors().iter().collect::<std::collections::BTreeSet<_>>() != factors.iter().collect() {
            return Err(Error::Invalid(format!("fit `{}` uses a different factor set", f.metric)));
        }
        out.push_str(&table_row(f));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;

    fn table(cols: Vec<(Factor, Vec<f64>)>, target: Vec<f64>) -> FactorTable {
        FactorTable {
            ids: (0..target.len()).map(|i| i.to_string()).collect(),
            factors: cols.into_iter().map(|(f, v)| (f, Column { values: v, normalized: true })).collect(),
            target_name: "m".into(),
            target: Column { values: target, normalized: true },
            dropped: vec![],
        }
    }

    #[test]
    fn z_examples() {
        let z = z_normalize(&[1.0, 2.0, 3.0]).unwrap();
        let e = (1.5f64).sqrt();
        assert!((z[0] + e).abs() < 1e-12 && z[1].abs() < 1e-12 && (z[2] - e).abs() < 1e-12);
        let again = z_normalize(&z).unwrap();
        for (a, b) in z.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(z_normalize(&[5.0, 5.0, 5.0]), Err(Error::ZeroVariance)));
        assert!(z_normalize(&[5.0]).is_err());
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r_squared(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(r_squared(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(r_squared(&[2.0, 1.0, 0.0], &[0.0, 1.0, 2.0]).unwrap(), -3.0);
        assert!(r_squared(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn self_regression() {
        let z = z_normalize(&[0.3, 1.2, -0.7, 2.2, 0.0, 1.1]).unwrap();
        let fit = fit_ols(&table(vec![(Factor::Lex, z.clone())], z)).unwrap();
        assert!((fit.coefficients[&Factor::Lex].value - 1.0).abs() < 1e-12);
        assert!(fit.intercept.value.abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_named() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 1.0).collect();
        let c = vec![0.5, -1.0, 2.0, 0.1, 0.0, 1.0];
        let y = vec![1.0, 0.0, 2.0, 3.0, 1.0, 5.0];
        match fit_ols(&table(vec![(Factor::Sem, a), (Factor::Syn, b), (Factor::Lex, c)], y)) {
            Err(Error::Singular { columns, .. }) => {
                assert!(columns.contains(&"SEM".to_string()) && columns.contains(&"SYN".to_string()));
                assert!(!columns.contains(&"LEX".to_string()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            fit_ols(&table(vec![(Factor::Sem, vec![1.0, 2.0]), (Factor::Syn, vec![0.0, 1.0])], vec![1.0, 0.0])),
            Err(Error::TooFew { .. })
        ));
    }

    #[test]
    fn predict_examples() {
        let c = |v: f64| Coefficient { value: v, std_error: 0.1, t_stat: 0.0, p_value: 0.0, significant: true };
        let fit = RegressionFit {
            metric: "m".into(),
            coefficients: [(Factor::Sem, c(0.28)), (Factor::Lex, c(0.64))].into_iter().collect(),
            intercept: c(0.0),
            r_squared: 0.5,
            n_rows: 10,
            dropped_rows: 0,
            residual_df: 7,
        };
        let row = |s: f64, l: f64| [(Factor::Sem, s), (Factor::Lex, l)].into_iter().collect::<BTreeMap<_, _>>();
        assert_eq!(predict(&fit, &row(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(predict(&fit, &row(0.0, 1.0)).unwrap(), 0.64);
        let partial: BTreeMap<_, _> = [(Factor::Sem, 1.0)].into_iter().collect();
        assert!(matches!(predict(&fit, &partial), Err(Error::MissingFactor(_))));
    }

    #[test]
    fn perfect_fit_predicts_training_rows() {
        let a = vec![0.1, 0.5, -0.3, 1.2, 0.8, -1.0, 0.0];
        let b = vec![1.0, 0.0, 1.0, 0.5, -0.5, 0.2, 0.3];
        let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| 0.3 * a - 0.2 * b + 0.05).collect();
        let t = table(vec![(Factor::Sem, a), (Factor::Syn, b)], y);
        let fit = fit_ols(&t).unwrap();
        for i in 0..t.n_rows() {
            assert!((predict(&fit, &t.row(i)).unwrap() - t.target.values[i]).abs() < 1e-12);
        }
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_formatting() {
        let c =
            |v: f64, sig: bool| Coefficient { value: v, std_error: 0.0, t_stat: 0.0, p_value: 0.0, significant: sig };
        assert_eq!(format_coefficient(&c(0.284, true)), "0.28");
        assert_eq!(format_coefficient(&c(-0.0149, false)), "-0.01*");
        assert_eq!(format_coefficient(&c(-0.001, false)), "0.00*");
    }
}
