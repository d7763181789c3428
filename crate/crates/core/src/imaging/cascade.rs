//! Haar cascade model and its JSON loader.
//!
//! File layout:
//!
//! ```json
//! {"window": [24, 24],
//!  "stages": [{"threshold": -5.04,
//!              "weak": [{"rects": [[6, 4, 12, 9, -1.0], [6, 7, 12, 3, 3.0]],
//!                        "threshold": -0.0315, "left": 2.08, "right": -2.21}]}]}
//! ```
//!
//! A weak classifier votes `left` when its normalized feature value is below
//! `threshold`, else `right`. A stage passes when its votes sum to at least the
//! stage threshold.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ImagingError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakClassifier {
    pub rects: Vec<WeightedRect>,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub threshold: f64,
    pub weak: Vec<WeakClassifier>,
}

/// An immutable, validated cascade. Share it freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    window_width: u32,
    window_height: u32,
    stages: Vec<Stage>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCascade {
    window: (u32, u32),
    stages: Vec<RawStage>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawStage {
    threshold: f64,
    weak: Vec<RawWeak>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawWeak {
    rects: Vec<(u32, u32, u32, u32, f64)>,
    threshold: f64,
    left: f64,
    right: f64,
}

fn invalid(path: String, message: impl Into<String>) -> ImagingError {
    ImagingError::Cascade { path, message: message.into() }
}

impl CascadeModel {
    /// Builds a cascade, checking that every rectangle fits the base window.
    pub fn new(window_width: u32, window_height: u32, stages: Vec<Stage>) -> Result<Self, ImagingError> {
        if window_width == 0 || window_height == 0 {
            return Err(invalid("window".into(), "window dimensions must be positive"));
        }
        if stages.is_empty() {
            return Err(invalid("stages".into(), "cascade has no stages"));
        }
        for (si, stage) in stages.iter().enumerate() {
            if !stage.threshold.is_finite() {
                return Err(invalid(format!("stages[{si}].threshold"), "not finite"));
            }
            if stage.weak.is_empty() {
                return Err(invalid(format!("stages[{si}].weak"), "stage has no weak classifiers"));
            }
            for (wi, weak) in stage.weak.iter().enumerate() {
                let at = format!("stages[{si}].weak[{wi}]");
                if ![weak.threshold, weak.left, weak.right].iter().all(|v| v.is_finite()) {
                    return Err(invalid(at, "threshold and leaf values must be finite"));
                }
                if weak.rects.is_empty() {
                    return Err(invalid(format!("{at}.rects"), "no rectangles"));
                }
                for (ri, r) in weak.rects.iter().enumerate() {
                    let at = format!("{at}.rects[{ri}]");
                    if r.w == 0 || r.h == 0 {
                        return Err(invalid(at, "empty rectangle"));
                    }
                    if r.x + r.w > window_width || r.y + r.h > window_height {
                        return Err(invalid(
                            at,
                            format!(
                                "rectangle ({}, {}, {}, {}) extends outside the {}x{} window",
                                r.x, r.y, r.w, r.h, window_width, window_height
                            ),
                        ));
                    }
                    if !r.weight.is_finite() {
                        return Err(invalid(at, "weight not finite"));
                    }
                }
            }
        }
        Ok(Self { window_width, window_height, stages })
    }

    /// Parses and validates cascade JSON. Syntax and type errors carry the
    /// line and column; semantic errors carry the field path.
    pub fn from_json(text: &str) -> Result<Self, ImagingError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawCascade = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(path, e.into_inner().to_string())
        })?;
        let stages = raw
            .stages
            .into_iter()
            .map(|s| Stage {
                threshold: s.threshold,
                weak: s
                    .weak
                    .into_iter()
                    .map(|w| WeakClassifier {
                        rects: w
                            .rects
                            .into_iter()
                            .map(|(x, y, w, h, weight)| WeightedRect { x, y, w, h, weight })
                            .collect(),
                        threshold: w.threshold,
                        left: w.left,
                        right: w.right,
                    })
                    .collect(),
            })
            .collect();
        Self::new(raw.window.0, raw.window.1, stages)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ImagingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ImagingError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            ImagingError::Cascade { path: field, message } => {
                ImagingError::Cascade { path: format!("{}: {field}", path.display()), message }
            }
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawCascade {
            window: (self.window_width, self.window_height),
            stages: self
                .stages
                .iter()
                .map(|s| RawStage {
                    threshold: s.threshold,
                    weak: s
                        .weak
                        .iter()
                        .map(|w| RawWeak {
                            rects: w.rects.iter().map(|r| (r.x, r.y, r.w, r.h, r.weight)).collect(),
                            threshold: w.threshold,
                            left: w.left,
                            right: w.right,
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("cascade serializes")
    }

    pub fn window(&self) -> (u32, u32) {
        (self.window_width, self.window_height)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{"window": [4, 4], "stages": [
        {"threshold": 0.5, "weak": [
            {"rects": [[0,0,4,2,-1.0],[0,2,4,2,1.0]], "threshold": 0.0, "left": 0.0, "right": 1.0}
        ]}
    ]}"#;

    #[test]
    fn loads_and_round_trips() {
        let c = CascadeModel::from_json(TINY).unwrap();
        assert_eq!(c.window(), (4, 4));
        assert_eq!(c.stages().len(), 1);
        assert_eq!(CascadeModel::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn rect_outside_window_names_field() {
        let bad = TINY.replace("[0,2,4,2,1.0]", "[0,3,4,2,1.0]");
        let err = CascadeModel::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("stages[0].weak[0].rects[1]"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let bad = TINY.replace("\"left\": 0.0", "\"left\": oops");
        let err = CascadeModel::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn type_error_reports_path() {
        let bad = TINY.replace("\"threshold\": 0.5", "\"threshold\": \"high\"");
        let err = CascadeModel::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("stages[0].threshold"), "{err}");
    }

    #[test]
    fn empty_stages_rejected() {
        assert!(CascadeModel::from_json(r#"{"window": [4, 4], "stages": []}"#).is_err());
    }
}
