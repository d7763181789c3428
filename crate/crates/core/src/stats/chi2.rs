use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::StatsError;
use crate::cohort::{Participant, Post};
use crate::Group;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// `ln P(a, x)` by the power series; converges quickly for `x < a + 1`.
fn ln_lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..MAX_ITER {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum.ln() - x + a * x.ln() - ln_gamma(a)
}

/// `ln Q(a, x)` by the Lentz continued fraction; for `x >= a + 1`.
fn ln_upper_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h.ln() - x + a * x.ln() - ln_gamma(a)
}

/// Natural log of the chi-squared upper tail; stays finite far past f64 underflow.
pub fn ln_chi2_upper_tail(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (a, h) = (df / 2.0, x / 2.0);
    if h < a + 1.0 {
        (-ln_lower_series(a, h).exp()).ln_1p()
    } else {
        ln_upper_fraction(a, h)
    }
}

/// `P(X > x)` for `X ~ chi2(df)`: the regularized upper incomplete gamma `Q(df/2, x/2)`.
pub fn chi2_upper_tail(x: f64, df: f64) -> f64 {
    ln_chi2_upper_tail(x, df).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `counts[row][col]`.
    pub counts: Vec<Vec<f64>>,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, counts: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if row_labels.len() < 2 || col_labels.len() < 2 {
            return Err(StatsError::Invalid("a contingency table needs at least 2 rows and 2 columns".into()));
        }
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(StatsError::Invalid("counts do not match the label dimensions".into()));
        }
        if counts.iter().flatten().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(StatsError::Invalid("counts must be finite and non-negative".into()));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.iter().sum::<f64>() == 0.0 {
                return Err(StatsError::ZeroMarginal { axis: "row", label: row_labels[i].clone() });
            }
        }
        for (j, label) in col_labels.iter().enumerate() {
            if counts.iter().map(|r| r[j]).sum::<f64>() == 0.0 {
                return Err(StatsError::ZeroMarginal { axis: "column", label: label.clone() });
            }
        }
        Ok(Self { row_labels, col_labels, counts })
    }

    /// Filter-by-group post counts; columns are depressed then healthy, rows
    /// are filter names in sorted order. Posts of unknown participants are ignored.
    pub fn filter_usage(posts: &[Post], participants: &[Participant]) -> Result<Self, StatsError> {
        let group: BTreeMap<&str, Group> = participants.iter().map(|p| (p.id.as_str(), p.group)).collect();
        let mut counts: BTreeMap<&str, [f64; 2]> = BTreeMap::new();
        for p in posts {
            let Some(g) = group.get(p.participant_id.as_str()) else { continue };
            counts.entry(p.filter_name.as_str()).or_default()[usize::from(*g == Group::Healthy)] += 1.0;
        }
        Self::new(
            counts.keys().map(|s| s.to_string()).collect(),
            vec![Group::Depressed.label().to_lowercase(), Group::Healthy.label().to_lowercase()],
            counts.values().map(|c| c.to_vec()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Natural log of the p-value; informative where `p_value` underflows.
    pub ln_p_value: f64,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub expected: Vec<Vec<f64>>,
    /// Observed minus expected.
    pub differences: Vec<Vec<f64>>,
}

/// Pearson's test of independence on a validated table.
pub fn chi2_independence(table: &ContingencyTable) -> Chi2Result {
    let rows: Vec<f64> = table.counts.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table.col_labels.len()).map(|j| table.counts.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = rows.iter().sum();
    let expected: Vec<Vec<f64>> = rows.iter().map(|r| cols.iter().map(|c| r * c / total).collect()).collect();
    let differences: Vec<Vec<f64>> = table
        .counts
        .iter()
        .zip(&expected)
        .map(|(o, e)| o.iter().zip(e).map(|(o, e)| o - e).collect())
        .collect();
    let statistic: f64 =
        differences.iter().zip(&expected).flat_map(|(d, e)| d.iter().zip(e).map(|(d, e)| d * d / e)).sum();
    let df = (rows.len() - 1) * (cols.len() - 1);
    let ln_p = ln_chi2_upper_tail(statistic, df as f64);
    Chi2Result {
        statistic,
        df,
        p_value: ln_p.exp(),
        ln_p_value: ln_p,
        row_labels: table.row_labels.clone(),
        col_labels: table.col_labels.clone(),
        expected,
        differences,
    }
}

impl Chi2Result {
    /// One row per cell: filter (row), group (column), observed, expected, difference.
    pub fn write_csv<W: Write>(&self, table: &ContingencyTable, w: W) -> Result<(), StatsError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["filter", "group", "observed", "expected", "difference"])?;
        for (i, r) in self.row_labels.iter().enumerate() {
            for (j, c) in self.col_labels.iter().enumerate() {
                out.write_record([
                    r.clone(),
                    c.clone(),
                    table.counts[i][j].to_string(),
                    self.expected[i][j].to_string(),
                    self.differences[i][j].to_string(),
                ])?;
            }
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
