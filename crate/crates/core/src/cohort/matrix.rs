use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CohortError, UserDay};

/// Computational columns, in model order.
pub const COMPUTATIONAL_FEATURES: [&str; 9] = [
    "hue",
    "saturation",
    "brightness",
    "comments",
    "likes",
    "posts_per_day",
    "has_filter",
    "has_face",
    "face_count",
];

pub const RATING_FEATURES: [&str; 4] = ["happy", "sad", "likable", "interesting"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    Computational,
    /// Human ratings only; observations without ratings are dropped.
    Ratings,
}

impl FeatureSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureSet::Computational => &COMPUTATIONAL_FEATURES,
            FeatureSet::Ratings => &RATING_FEATURES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    /// Population (1/n) standard deviation.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
    /// 1 = depressed, 0 = healthy.
    pub targets: Vec<u8>,
    /// Present once [`FeatureMatrix::standardize`] has been applied.
    pub scale: Option<Vec<ColumnScale>>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<String>, names: Vec<String>, values: DMatrix<f64>, targets: Vec<u8>) -> Result<Self, CohortError> {
        if values.nrows() != ids.len() || values.nrows() != targets.len() {
            return Err(CohortError::Invalid(format!(
                "matrix has {} rows but {} ids and {} targets",
                values.nrows(),
                ids.len(),
                targets.len()
            )));
        }
        if values.ncols() != names.len() {
            return Err(CohortError::Invalid(format!("matrix has {} columns but {} names", values.ncols(), names.len())));
        }
        if let Some(t) = targets.iter().find(|&&t| t > 1) {
            return Err(CohortError::Invalid(format!("target {t} is not 0 or 1")));
        }
        Ok(Self { ids, names, values, targets, scale: None })
    }

    /// Row ids are `<participant>/<date>`.
    pub fn from_user_days(days: &[UserDay], set: FeatureSet) -> Self {
        let rows: Vec<(&UserDay, Vec<f64>)> = days
            .iter()
            .filter_map(|d| {
                let v = match set {
                    FeatureSet::Computational => vec![
                        d.mean_hue,
                        d.mean_saturation,
                        d.mean_brightness,
                        d.comments,
                        d.likes,
                        f64::from(d.posts_per_day),
                        f64::from(d.filtered_count),
                        f64::from(d.face_post_count),
                        d.mean_face_count,
                    ],
                    FeatureSet::Ratings => d.ratings?.values().to_vec(),
                };
                Some((d, v))
            })
            .collect();
        let names = set.names();
        let values = DMatrix::from_fn(rows.len(), names.len(), |i, j| rows[i].1[j]);
        Self {
            ids: rows.iter().map(|(d, _)| format!("{}/{}", d.participant_id, d.date)).collect(),
            names: names.iter().map(|s| s.to_string()).collect(),
            values,
            targets: rows.iter().map(|(d, _)| d.target.target()).collect(),
            scale: None,
        }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Keeps the named rows subset, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            names: self.names.clone(),
            values: self.values.select_rows(rows),
            targets: rows.iter().map(|&i| self.targets[i]).collect(),
            scale: self.scale.clone(),
        }
    }

    /// Z-scores every column with the population sd and records the scale.
    pub fn standardize(&self) -> Result<Self, CohortError> {
        let n = self.nrows() as f64;
        let mut values = self.values.clone();
        let mut scale = Vec::with_capacity(self.ncols());
        for (j, name) in self.names.iter().enumerate() {
            let col = self.values.column(j);
            let mean = col.sum() / n;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            if !(sd > 0.0) || !sd.is_finite() || sd < 1e-12 * mean.abs().max(1.0) {
                return Err(CohortError::ZeroVariance(name.clone()));
            }
            for x in values.column_mut(j).iter_mut() {
                *x = (*x - mean) / sd;
            }
            scale.push(ColumnScale { mean, sd });
        }
        Ok(Self { values, scale: Some(scale), ..self.clone() })
    }

    /// Maps standardized values back to the original units.
    pub fn unstandardize(&self) -> Self {
        let Some(scale) = &self.scale else { return self.clone() };
        let mut values = self.values.clone();
        for (j, s) in scale.iter().enumerate() {
            for x in values.column_mut(j).iter_mut() {
                *x = *x * s.sd + s.mean;
            }
        }
        Self { values, scale: None, ..self.clone() }
    }

    /// CSV: `id`, the feature columns, then `target`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CohortError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("target".into());
        out.write_record(&header)?;
        for i in 0..self.nrows() {
            let mut rec = vec![self.ids[i].clone()];
            rec.extend(self.values.row(i).iter().map(|v| v.to_string()));
            rec.push(self.targets[i].to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| CohortError::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(r: R, source: &str) -> Result<Self, CohortError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < 2 || cols[0] != "id" || cols[cols.len() - 1] != "target" {
            return Err(CohortError::Parse {
                path: source.into(),
                line: 1,
                message: "header must start with id and end with target".into(),
            });
        }
        let names: Vec<String> = cols[1..cols.len() - 1].iter().map(|s| s.to_string()).collect();
        let (mut ids, mut flat, mut targets) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |message: String| CohortError::Parse { path: source.into(), line, message };
            ids.push(rec[0].to_string());
            for j in 1..cols.len() - 1 {
                flat.push(rec[j].parse::<f64>().map_err(|e| bad(format!("{}: {e}", cols[j])))?);
            }
            let t = &rec[cols.len() - 1];
            targets.push(match t {
                "0" => 0,
                "1" => 1,
                _ => return Err(bad(format!("target {t:?} is not 0 or 1"))),
            });
        }
        let values = DMatrix::from_row_slice(ids.len(), names.len(), &flat);
        Self::new(ids, names, values, targets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(col: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(
            (0..col.len()).map(|i| i.to_string()).collect(),
            vec!["x".into()],
            DMatrix::from_column_slice(col.len(), 1, col),
            vec![0; col.len()],
        )
        .unwrap()
    }

    #[test]
    fn zscore_population_sd() {
        let z = single(&[1.0, 2.0, 3.0]).standardize().unwrap();
        let sd = (2.0f64 / 3.0).sqrt();
        let expect = [-1.0 / sd, 0.0, 1.0 / sd];
        for (a, b) in z.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn idempotent_and_constant_rejected() {
        let z = single(&[3.0, 7.0, 1.0, 9.0]).standardize().unwrap();
        let zz = z.standardize().unwrap();
        assert!((z.values.clone() - zz.values).abs().max() < 1e-12);
        assert!(matches!(single(&[2.0; 4]).standardize(), Err(CohortError::ZeroVariance(n)) if n == "x"));
    }

    #[test]
    fn csv_roundtrip() {
        let m = FeatureMatrix::new(
            vec!["a/2015-01-01".into(), "b/2015-01-02".into()],
            vec!["hue".into(), "likes".into()],
            DMatrix::from_row_slice(2, 2, &[0.25, 3.0, 0.125, 7.5]),
            vec![1, 0],
        )
        .unwrap();
        let text = m.to_csv_string();
        assert!(text.starts_with("id,hue,likes,target\n"));
        assert_eq!(FeatureMatrix::read_csv(text.as_bytes(), "m").unwrap(), m);
    }

    #[test]
    fn csv_errors_carry_line() {
        let err = FeatureMatrix::read_csv("id,x,target\na,1,0\nb,zz,1\n".as_bytes(), "m.csv").unwrap_err().to_string();
        assert!(err.starts_with("m.csv:3:"), "{err}");
    }

    proptest! {
        #[test]
        fn standardize_inverts(col in prop::collection::vec(-1e3f64..1e3, 3..40)) {
            let m = single(&col);
            let spread = col.iter().cloned().fold(f64::MIN, f64::max) - col.iter().cloned().fold(f64::MAX, f64::min);
            prop_assume!(spread > 1e-3);
            let z = m.standardize().unwrap();
            let n = col.len() as f64;
            let mean = z.values.sum() / n;
            let sd = (z.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
            let back = z.unstandardize();
            for (a, b) in back.values.iter().zip(&col) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
