//! Runs the two-pass face detector over the bundled annotated corpus and
//! prints the accuracy table.
//!
//! ```bash
//! cargo run -p depscreen --example face_detection
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use depscreen::imaging::{
    detect_faces, detector_accuracy_report, CascadeModel, DetectionParams, FaceAnnotation, PhotoDetection, RgbImage,
};
use depscreen::Group;
use serde::Deserialize;

#[derive(Deserialize)]
struct Record {
    file: String,
    group: Group,
    face_count: u32,
}

#[derive(Deserialize)]
struct Annotations {
    corpus: Vec<Record>,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let cascade = CascadeModel::load(fixtures.join("frontalface_default.json"))?;
    let params = DetectionParams::default();
    let annotations: Annotations = serde_json::from_str(&std::fs::read_to_string(fixtures.join("faces/annotations.json"))?)?;

    let mut coded = BTreeMap::new();
    let mut detections = Vec::new();
    for rec in &annotations.corpus {
        let image = RgbImage::open(fixtures.join("faces").join(&rec.file))?;
        let boxes = detect_faces(&image, &cascade, &params);
        println!("{:<14} annotated {}  detected {}  {:?}", rec.file, rec.face_count, boxes.len(), boxes);
        coded.insert(
            rec.file.clone(),
            FaceAnnotation { group: rec.group, has_face: rec.face_count > 0, face_count: rec.face_count },
        );
        detections.push(PhotoDetection { photo_id: rec.file.clone(), detected_count: boxes.len() as u32 });
    }
    println!();
    print!("{}", detector_accuracy_report(&detections, &coded));
    Ok(())
}
