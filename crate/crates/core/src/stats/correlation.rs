use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;
use crate::cohort::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided, from `t = r sqrt((n - 2) / (1 - r^2))` on `n - 2` df.
    pub p_value: f64,
    pub n: usize,
}

/// Two-sided p-value for a correlation of `r` over `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Invalid(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::Invalid(format!("need at least 3 pairs, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation { r, p_value: correlation_p_value(r, n), n })
}

/// Pairwise correlations; `cells[i][j]` is filled for `j <= i` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub cells: Vec<Vec<Correlation>>,
}

fn columns(m: &FeatureMatrix, names: &[&str]) -> Result<Vec<Vec<f64>>, StatsError> {
    names
        .iter()
        .map(|n| {
            let j = m.names.iter().position(|c| c == n).ok_or_else(|| StatsError::UnknownColumn(n.to_string()))?;
            Ok(m.values.column(j).iter().copied().collect())
        })
        .collect()
}

/// Lower-triangular Pearson matrix over the named columns.
pub fn correlation_matrix(m: &FeatureMatrix, names: &[&str]) -> Result<CorrelationMatrix, StatsError> {
    let cols = columns(m, names)?;
    let mut cells = Vec::with_capacity(cols.len());
    for i in 0..cols.len() {
        let row = (0..=i)
            .map(|j| {
                pearson_r(&cols[i], &cols[j]).map_err(|e| match e {
                    StatsError::ZeroVariance => StatsError::ZeroVarianceColumn(names[if j == i { i } else { j }].to_string()),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        cells.push(row);
    }
    Ok(CorrelationMatrix { names: names.iter().map(|s| s.to_string()).collect(), cells })
}

/// Rectangular block: each of `rows` against each of `cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<Correlation>>,
}

pub fn correlation_block(m: &FeatureMatrix, rows: &[&str], cols: &[&str]) -> Result<CorrelationBlock, StatsError> {
    let (a, b) = (columns(m, rows)?, columns(m, cols)?);
    let cells = a
        .iter()
        .map(|x| b.iter().map(|y| pearson_r(x, y)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CorrelationBlock { rows: rows.iter().map(|s| s.to_string()).collect(), cols: cols.iter().map(|s| s.to_string()).collect(), cells })
}

impl CorrelationMatrix {
    /// Lower triangle as CSV; cells above the diagonal are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), StatsError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![String::new()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header)?;
        for (i, row) in self.cells.iter().enumerate() {
            let mut rec = vec![self.names[i].clone()];
            rec.extend((0..self.names.len()).map(|j| row.get(j).map_or(String::new(), |c| format!("{:.4}", c.r))));
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn hand_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(pearson_r(&x, &x).unwrap().r, 1.0);
        let y: Vec<f64> = x.iter().map(|v| -2.0 * v + 7.0).collect();
        assert_relative_eq!(pearson_r(&x, &y).unwrap().r, -1.0);
        assert_relative_eq!(pearson_r(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap().r, 0.8, epsilon = 1e-12);
        assert!(matches!(pearson_r(&x, &[2.0; 4]), Err(StatsError::ZeroVariance)));
    }

    #[test]
    fn t_transform_p() {
        // r = 0.8 on n = 4: t = 0.8 * sqrt(2 / 0.36) = 1.8856, two-sided p on 2 df.
        let p = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap().p_value;
        assert_relative_eq!(p, 0.2, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn affine_invariance(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..50), a in 0.1f64..10.0, b in -50.0f64..50.0) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let Ok(c) = pearson_r(&x, &y) {
                let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let neg: Vec<f64> = y.iter().map(|v| -v).collect();
                prop_assert!((pearson_r(&xs, &y).unwrap().r - c.r).abs() < 1e-9);
                prop_assert_eq!(pearson_r(&x, &neg).unwrap().r, -c.r);
            }
        }
    }
}
