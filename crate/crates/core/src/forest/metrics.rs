use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ForestError;

pub const METRIC_NAMES: [&str; 5] = ["recall", "specificity", "precision", "npv", "f1"];

/// Confusion counts with class 1 as positive. A metric whose denominator is
/// zero is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: f64,
    /// Accuracy of always predicting the majority class. Accuracy near this
    /// value says little about the model.
    pub majority_baseline: f64,
    /// Set when the positive share is outside [0.4, 0.6].
    pub imbalanced: bool,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl ConfusionMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        let n = tp + fp + fn_ + tn;
        let pos = tp + fn_;
        let share = if n > 0 { pos as f64 / n as f64 } else { 0.0 };
        ConfusionMetrics {
            tp,
            fp,
            fn_,
            tn,
            recall,
            specificity: ratio(tn, tn + fp),
            precision,
            npv: ratio(tn, tn + fn_),
            f1,
            accuracy: ratio(tp + tn, n).unwrap_or(0.0),
            majority_baseline: share.max(1.0 - share),
            imbalanced: !(0.4..=0.6).contains(&share),
        }
    }

    /// The five reported metrics in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [Option<f64>; 5] {
        [self.recall, self.specificity, self.precision, self.npv, self.f1]
    }
}

pub fn evaluate(truth: &[u8], predicted: &[u8]) -> Result<ConfusionMetrics, ForestError> {
    if truth.len() != predicted.len() {
        return Err(ForestError::LengthMismatch(format!("{} labels, {} predictions", truth.len(), predicted.len())));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            (0, 0) => tn += 1,
            _ => return Err(ForestError::Invalid(format!("labels must be 0 or 1, got ({t}, {p})"))),
        }
    }
    Ok(ConfusionMetrics::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    /// Over the runs where the metric is defined.
    pub mean: Option<f64>,
    /// Population sd over the same runs.
    pub sd: Option<f64>,
    pub defined_runs: usize,
}

impl MetricStat {
    pub fn from_values(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return MetricStat { mean: None, sd: None, defined_runs: 0 };
        }
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        MetricStat { mean: Some(m), sd: Some(sd), defined_runs: v.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub runs: Vec<ConfusionMetrics>,
    /// Per metric in [`METRIC_NAMES`] order.
    pub stats: Vec<MetricStat>,
    pub seeds: Vec<u64>,
}

impl RunReport {
    pub fn from_runs(runs: Vec<ConfusionMetrics>, seeds: Vec<u64>) -> Self {
        let stats = (0..5).map(|k| MetricStat::from_values(runs.iter().map(|r| r.values()[k]))).collect();
        RunReport { runs, stats, seeds }
    }

    pub fn stat(&self, metric: &str) -> Option<&MetricStat> {
        METRIC_NAMES.iter().position(|m| *m == metric).map(|k| &self.stats[k])
    }

    /// One row per run plus `mean` and `sd` rows; undefined cells are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ForestError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["run", "seed", "tp", "fp", "fn", "tn"];
        header.extend(METRIC_NAMES);
        header.push("accuracy");
        out.write_record(&header)?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for (i, r) in self.runs.iter().enumerate() {
            let mut rec = vec![i.to_string(), self.seeds[i].to_string()];
            rec.extend([r.tp, r.fp, r.fn_, r.tn].map(|c| c.to_string()));
            rec.extend(r.values().map(cell));
            rec.push(format!("{:.6}", r.accuracy));
            out.write_record(&rec)?;
        }
        for (label, pick) in [("mean", 0), ("sd", 1)] {
            let mut rec = vec![label.to_string(), String::new(), String::new(), String::new(), String::new(), String::new()];
            rec.extend(self.stats.iter().map(|s| cell(if pick == 0 { s.mean } else { s.sd })));
            rec.push(String::new());
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Published average accuracy of general practitioners diagnosing depression
/// without assistance, for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConstants {
    pub recall: f64,
    pub specificity: f64,
    pub precision: f64,
    pub npv: f64,
    pub f1: f64,
}

impl BenchmarkConstants {
    pub const GENERAL_PRACTITIONER: BenchmarkConstants =
        BenchmarkConstants { recall: 0.510, specificity: 0.813, precision: 0.42, npv: 0.858, f1: 0.461 };

    pub fn values(&self) -> [f64; 5] {
        [self.recall, self.specificity, self.precision, self.npv, self.f1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 5e-4)
    }

    #[test]
    fn quoted_confusion_counts() {
        let m = ConfusionMetrics::from_counts(37, 23, 17, 23);
        assert!(close(m.recall, 0.685));
        assert!(close(m.specificity, 0.500));
        assert!(close(m.precision, 0.617));
        assert!(close(m.npv, 0.575));
        assert!(close(m.f1, 0.649));
    }

    #[test]
    fn perfect_and_all_negative() {
        let m = evaluate(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert!(m.values().iter().all(|v| *v == Some(1.0)));
        let m = evaluate(&[1, 0, 1, 0], &[0, 0, 0, 0]).unwrap();
        assert_eq!((m.recall, m.specificity, m.precision, m.f1), (Some(0.0), Some(1.0), None, None));
        assert!(evaluate(&[1], &[1, 0]).is_err());
        assert!(evaluate(&[2], &[1]).is_err());
    }

    #[test]
    fn imbalance_flag() {
        let m = ConfusionMetrics::from_counts(0, 0, 10, 90);
        assert_eq!(m.accuracy, 0.9);
        assert_eq!(m.majority_baseline, 0.9);
        assert!(m.imbalanced);
    }

    #[test]
    fn report_stats_use_population_sd() {
        let runs = vec![ConfusionMetrics::from_counts(1, 0, 1, 2), ConfusionMetrics::from_counts(2, 0, 0, 2)];
        let r = RunReport::from_runs(runs, vec![0, 1]);
        let recall = r.stat("recall").unwrap();
        assert_eq!(recall.mean, Some(0.75));
        assert_eq!(recall.sd, Some(0.25));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn metric_identities(tp in 0usize..60, fp in 0usize..60, fn_ in 0usize..60, tn in 0usize..60) {
            let m = ConfusionMetrics::from_counts(tp, fp, fn_, tn);
            let exact = |v: Option<f64>, a: usize, b: usize| match v {
                Some(v) => b > 0 && v == a as f64 / b as f64 && (0.0..=1.0).contains(&v),
                None => b == 0,
            };
            prop_assert!(exact(m.recall, tp, tp + fn_));
            prop_assert!(exact(m.specificity, tn, tn + fp));
            prop_assert!(exact(m.precision, tp, tp + fp));
            prop_assert!(exact(m.npv, tn, tn + fn_));
            match (m.precision, m.recall, m.f1) {
                (Some(p), Some(r), Some(f)) => prop_assert!(f == 2.0 * p * r / (p + r) && (0.0..=1.0).contains(&f)),
                (_, _, None) => prop_assert!(tp == 0),
                _ => prop_assert!(false),
            }
        }
    }
}
