//! Multi-pass sliding-window face detection.
//!
//! Each scale factor runs an independent pass: the cascade window grows by the
//! factor per pyramid level, features are evaluated on variance-normalized
//! windows, and raw hits are grouped by overlap. The passes are then merged,
//! collapsing boxes that two passes found for the same face.

use serde::{Deserialize, Serialize};

use super::{luma_plane, CascadeModel, ImagingError, IntegralImage, RgbImage};

/// Intersection-over-union at or above which two boxes belong to one group.
pub const GROUPING_IOU: f64 = 0.3;

/// Windows whose luminance standard deviation falls below this are skipped.
const MIN_WINDOW_STDDEV: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    pub scale_factors: Vec<f64>,
    pub min_neighbors: usize,
    pub min_size: (u32, u32),
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self { scale_factors: vec![1.05, 1.4], min_neighbors: 4, min_size: (20, 20) }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<(), ImagingError> {
        if self.scale_factors.is_empty() {
            return Err(ImagingError::Params("at least one scale factor is required".into()));
        }
        if let Some(f) = self.scale_factors.iter().find(|f| !(f.is_finite() && **f > 1.0)) {
            return Err(ImagingError::Params(format!("scale factor {f} must be greater than 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaceBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl FaceBox {
    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }
}

pub fn iou(a: &FaceBox, b: &FaceBox) -> f64 {
    let x0 = a.x.max(b.x);
    let y0 = a.y.max(b.y);
    let x1 = (a.x + a.w).min(b.x + b.w);
    let y1 = (a.y + a.h).min(b.y + b.h);
    if x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let inter = u64::from(x1 - x0) * u64::from(y1 - y0);
    inter as f64 / (a.area() + b.area() - inter) as f64
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Clusters boxes into connected components of the `iou >= GROUPING_IOU`
/// relation. Returns `(mean box, member count)` per component, ordered by the
/// first member's position in the input.
pub fn group_boxes(boxes: &[FaceBox]) -> Vec<(FaceBox, usize)> {
    let n = boxes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if iou(&boxes[i], &boxes[j]) >= GROUPING_IOU {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut sums: Vec<Option<([f64; 4], usize)>> = vec![None; n];
    let mut order = Vec::new();
    for (i, b) in boxes.iter().enumerate() {
        let root = find(&mut parent, i);
        let entry = sums[root].get_or_insert_with(|| {
            order.push(root);
            ([0.0; 4], 0)
        });
        entry.0[0] += f64::from(b.x);
        entry.0[1] += f64::from(b.y);
        entry.0[2] += f64::from(b.w);
        entry.0[3] += f64::from(b.h);
        entry.1 += 1;
    }
    order
        .into_iter()
        .map(|root| {
            let (s, count) = sums[root].expect("root has members");
            let c = count as f64;
            let mean = FaceBox {
                x: (s[0] / c).round() as u32,
                y: (s[1] / c).round() as u32,
                w: (s[2] / c).round() as u32,
                h: (s[3] / c).round() as u32,
            };
            (mean, count)
        })
        .collect()
}

struct ScaledRect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
    weight: f64,
}

struct ScaledWeak {
    rects: Vec<ScaledRect>,
    threshold: f64,
    left: f64,
    right: f64,
}

/// The cascade with rectangles scaled to one pyramid level.
struct ScaledCascade {
    win_w: usize,
    win_h: usize,
    norm: (usize, usize, usize, usize),
    stages: Vec<(f64, Vec<ScaledWeak>)>,
}

impl ScaledCascade {
    fn new(cascade: &CascadeModel, scale: f64) -> Self {
        let (bw, bh) = cascade.window();
        let r = |v: u32| (f64::from(v) * scale).round() as usize;
        let (win_w, win_h) = (r(bw), r(bh));
        let norm = if bw > 2 && bh > 2 {
            (scale.round() as usize, scale.round() as usize, r(bw - 2), r(bh - 2))
        } else {
            (0, 0, win_w, win_h)
        };
        let norm_area = (norm.2 * norm.3) as f64;
        let stages = cascade
            .stages()
            .iter()
            .map(|stage| {
                let weak = stage
                    .weak
                    .iter()
                    .map(|wc| {
                        let mut rects: Vec<ScaledRect> = wc
                            .rects
                            .iter()
                            .map(|rect| {
                                let x = r(rect.x).min(win_w - 1);
                                let y = r(rect.y).min(win_h - 1);
                                ScaledRect {
                                    x,
                                    y,
                                    w: r(rect.w).clamp(1, win_w - x),
                                    h: r(rect.h).clamp(1, win_h - y),
                                    weight: rect.weight / norm_area,
                                }
                            })
                            .collect();
                        // Rounding can unbalance a zero-sum feature; re-balance
                        // through the first rectangle as the base one does.
                        let base_balance: f64 =
                            wc.rects.iter().map(|r| r.weight * f64::from(r.w * r.h)).sum();
                        if rects.len() > 1 && base_balance.abs() < 1e-6 {
                            let rest: f64 = rects[1..].iter().map(|r| r.weight * (r.w * r.h) as f64).sum();
                            rects[0].weight = -rest / (rects[0].w * rects[0].h) as f64;
                        }
                        ScaledWeak { rects, threshold: wc.threshold, left: wc.left, right: wc.right }
                    })
                    .collect();
                (stage.threshold, weak)
            })
            .collect();
        Self { win_w, win_h, norm, stages }
    }

    fn accepts(&self, ii: &IntegralImage, x0: usize, y0: usize) -> bool {
        let (nx, ny, nw, nh) = self.norm;
        let area = (nw * nh) as f64;
        let sum = ii.rect_sum(x0 + nx, y0 + ny, nw, nh) as f64;
        let sq = ii.rect_sq_sum(x0 + nx, y0 + ny, nw, nh) as f64;
        let mean = sum / area;
        let var = sq / area - mean * mean;
        if var < MIN_WINDOW_STDDEV * MIN_WINDOW_STDDEV {
            return false;
        }
        let sd = var.sqrt();
        for (stage_threshold, weak) in &self.stages {
            let mut total = 0.0;
            for wc in weak {
                let mut value = 0.0;
                for r in &wc.rects {
                    value += r.weight * ii.rect_sum(x0 + r.x, y0 + r.y, r.w, r.h) as f64;
                }
                total += if value < wc.threshold * sd { wc.left } else { wc.right };
            }
            if total < *stage_threshold {
                return false;
            }
        }
        true
    }
}

/// Raw window hits for one scale factor.
fn raw_hits(ii: &IntegralImage, cascade: &CascadeModel, factor: f64, min_size: (u32, u32)) -> Vec<FaceBox> {
    let (img_w, img_h) = (ii.width(), ii.height());
    let mut hits = Vec::new();
    let mut scale = 1.0f64;
    loop {
        let scaled = ScaledCascade::new(cascade, scale);
        if scaled.win_w > img_w || scaled.win_h > img_h {
            break;
        }
        if scaled.win_w >= min_size.0 as usize && scaled.win_h >= min_size.1 as usize {
            let step = (scale.round() as usize).max(1);
            for y in (0..=img_h - scaled.win_h).step_by(step) {
                for x in (0..=img_w - scaled.win_w).step_by(step) {
                    if scaled.accepts(ii, x, y) {
                        hits.push(FaceBox { x: x as u32, y: y as u32, w: scaled.win_w as u32, h: scaled.win_h as u32 });
                    }
                }
            }
        }
        scale *= factor;
    }
    hits
}

/// Detects faces, returning merged boxes sorted by `(x, y, w, h)`.
///
/// Images smaller than `min_size` yield no boxes.
pub fn detect_faces(image: &RgbImage, cascade: &CascadeModel, params: &DetectionParams) -> Vec<FaceBox> {
    if (image.width() as u32) < params.min_size.0 || (image.height() as u32) < params.min_size.1 {
        return Vec::new();
    }
    let ii = IntegralImage::new(&luma_plane(image));
    let mut per_pass = Vec::new();
    for &factor in &params.scale_factors {
        let hits = raw_hits(&ii, cascade, factor, params.min_size);
        per_pass.extend(
            group_boxes(&hits)
                .into_iter()
                .filter(|(b, n)| *n >= params.min_neighbors && b.w >= params.min_size.0 && b.h >= params.min_size.1)
                .map(|(b, _)| b),
        );
    }
    let mut merged: Vec<FaceBox> = group_boxes(&per_pass).into_iter().map(|(b, _)| b).collect();
    merged.sort();
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_basics() {
        let a = FaceBox { x: 0, y: 0, w: 10, h: 10 };
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &FaceBox { x: 10, y: 0, w: 10, h: 10 }), 0.0);
        let half = FaceBox { x: 5, y: 0, w: 10, h: 10 };
        assert!((iou(&a, &half) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn grouping_is_transitive_and_averages() {
        let boxes = [
            FaceBox { x: 0, y: 0, w: 10, h: 10 },
            FaceBox { x: 2, y: 0, w: 10, h: 10 },
            FaceBox { x: 4, y: 0, w: 10, h: 10 },
            FaceBox { x: 50, y: 50, w: 10, h: 10 },
        ];
        let groups = group_boxes(&boxes);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0], (FaceBox { x: 2, y: 0, w: 10, h: 10 }, 3));
        assert_eq!(groups[1].1, 1);
    }

    #[test]
    fn flat_image_has_no_faces() {
        let cascade = CascadeModel::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/frontalface_default.json")).unwrap();
        let gray = RgbImage::from_fn(64, 64, |_, _| [120, 120, 120]);
        assert!(detect_faces(&gray, &cascade, &DetectionParams::default()).is_empty());
    }

    #[test]
    fn params_validation() {
        assert!(DetectionParams::default().validate().is_ok());
        let bad = DetectionParams { scale_factors: vec![1.0], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
