//! Detector accuracy against hand-coded photos: a group x detected/undetected
//! table plus the mean and spread of (detected - actual) face counts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Group;

/// Human coding of one photo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceAnnotation {
    pub group: Group,
    pub has_face: bool,
    pub face_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhotoDetection {
    pub photo_id: String,
    pub detected_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub group: Group,
    pub face_detected: bool,
    pub photos: usize,
    pub accurate: usize,
    /// `None` when the cell holds no photos.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCountDiff {
    pub group: Group,
    pub photos: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; `None` below two photos.
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorAccuracyReport {
    pub cells: Vec<AccuracyCell>,
    pub count_difference: Vec<GroupCountDiff>,
    /// Photos with a detection but no annotation.
    pub excluded: Vec<String>,
}

/// A photo counts as accurate when detected face presence matches the coder's.
pub fn detector_accuracy_report(
    detections: &[PhotoDetection],
    annotations: &BTreeMap<String, FaceAnnotation>,
) -> DetectorAccuracyReport {
    let mut cells: BTreeMap<(Group, bool), (usize, usize)> = BTreeMap::new();
    let mut diffs: BTreeMap<Group, Vec<f64>> = BTreeMap::new();
    let mut excluded = Vec::new();
    for d in detections {
        let Some(a) = annotations.get(&d.photo_id) else {
            excluded.push(d.photo_id.clone());
            continue;
        };
        let detected = d.detected_count >= 1;
        let cell = cells.entry((a.group, detected)).or_default();
        cell.0 += 1;
        if detected == a.has_face {
            cell.1 += 1;
        }
        diffs.entry(a.group).or_default().push(f64::from(d.detected_count) - f64::from(a.face_count));
    }

    let groups = [Group::Depressed, Group::Healthy];
    let mut out_cells = Vec::new();
    for detected in [false, true] {
        for group in groups {
            let (photos, accurate) = cells.get(&(group, detected)).copied().unwrap_or((0, 0));
            out_cells.push(AccuracyCell {
                group,
                face_detected: detected,
                photos,
                accurate,
                accuracy: (photos > 0).then(|| accurate as f64 / photos as f64),
            });
        }
    }
    let count_difference = groups
        .iter()
        .map(|&group| {
            let v = diffs.get(&group).map(Vec::as_slice).unwrap_or(&[]);
            let n = v.len();
            let mean = (n > 0).then(|| v.iter().sum::<f64>() / n as f64);
            let sd = mean.filter(|_| n > 1).map(|m| {
                (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            });
            GroupCountDiff { group, photos: n, mean, sd }
        })
        .collect();
    DetectorAccuracyReport { cells: out_cells, count_difference, excluded }
}

impl fmt::Display for DetectorAccuracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Face detection accuracy:")?;
        for c in &self.cells {
            let what = if c.face_detected { "1+ faces detected" } else { "No face detected" };
            match c.accuracy {
                Some(a) => writeln!(f, "{}, {what}: {:.0}% accurate", c.group.label(), a * 100.0)?,
                None => writeln!(f, "{}, {what}: n/a", c.group.label())?,
            }
        }
        writeln!(f, "Mean difference in counted faces (detected - actual):")?;
        for d in &self.count_difference {
            match (d.mean, d.sd) {
                (Some(m), Some(s)) => writeln!(f, "{}: mu = {m:.3}, sigma = {s:.2} (n = {})", d.group.label(), d.photos)?,
                (Some(m), None) => writeln!(f, "{}: mu = {m:.3} (n = {})", d.group.label(), d.photos)?,
                _ => writeln!(f, "{}: no photos", d.group.label())?,
            }
        }
        if !self.excluded.is_empty() {
            writeln!(f, "Excluded (no annotation): {}", self.excluded.len())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(group: Group, count: u32) -> FaceAnnotation {
        FaceAnnotation { group, has_face: count > 0, face_count: count }
    }

    #[test]
    fn perfect_detector() {
        let mut a = BTreeMap::new();
        let mut d = Vec::new();
        for (i, (g, c)) in [(Group::Depressed, 0), (Group::Depressed, 2), (Group::Healthy, 0), (Group::Healthy, 1)]
            .into_iter()
            .enumerate()
        {
            a.insert(format!("p{i}"), ann(g, c));
            d.push(PhotoDetection { photo_id: format!("p{i}"), detected_count: c });
        }
        let r = detector_accuracy_report(&d, &a);
        assert!(r.cells.iter().all(|c| c.accuracy == Some(1.0)));
        assert!(r.count_difference.iter().all(|g| g.mean == Some(0.0)));
    }

    #[test]
    fn undercount_by_one() {
        let mut a = BTreeMap::new();
        let mut d = Vec::new();
        for i in 0..7 {
            a.insert(format!("p{i}"), ann(Group::Healthy, 2));
            d.push(PhotoDetection { photo_id: format!("p{i}"), detected_count: 1 });
        }
        d.push(PhotoDetection { photo_id: "stray".into(), detected_count: 1 });
        let r = detector_accuracy_report(&d, &a);
        let h = r.count_difference.iter().find(|g| g.group == Group::Healthy).unwrap();
        assert_eq!(h.mean, Some(-1.0));
        assert_eq!(h.sd, Some(0.0));
        assert_eq!(r.excluded, vec!["stray".to_string()]);
    }

    #[test]
    fn display_format() {
        let mut a = BTreeMap::new();
        a.insert("x".to_string(), ann(Group::Depressed, 1));
        let d = vec![PhotoDetection { photo_id: "x".into(), detected_count: 0 }];
        let text = detector_accuracy_report(&d, &a).to_string();
        assert!(text.contains("Depressed, No face detected: 0% accurate"), "{text}");
        assert!(text.contains("Healthy, 1+ faces detected: n/a"), "{text}");
    }
}
