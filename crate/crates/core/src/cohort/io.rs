//! JSON-lines readers and writers with line-precise errors.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{CohortError, Participant, ParticipantRecord, Post, Rating};

fn io_err(path: &Path, source: std::io::Error) -> CohortError {
    CohortError::Io { path: path.display().to_string(), source }
}

/// Parses JSON-lines text; blank lines are skipped. Returns `(line, value)` pairs.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, source: &str) -> Result<Vec<(usize, T)>, CohortError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(line).map_err(|e| CohortError::Parse {
            path: source.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CohortError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_jsonl(&text, &path.display().to_string())
}

pub fn parse_participants(text: &str, source: &str) -> Result<Vec<Participant>, CohortError> {
    let mut seen = BTreeSet::new();
    parse_jsonl::<ParticipantRecord>(text, source)?
        .into_iter()
        .map(|(line, rec)| {
            let at = |message: String| CohortError::Parse { path: source.to_string(), line, message };
            if !seen.insert(rec.id.clone()) {
                return Err(at(format!("duplicate participant id {:?}", rec.id)));
            }
            Participant::try_from(rec).map_err(|e| at(e.to_string()))
        })
        .collect()
}

/// Parses posts, assigning `<participant_id>-<ordinal>` ids where absent.
pub fn parse_posts(text: &str, source: &str) -> Result<Vec<Post>, CohortError> {
    let mut ordinals: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    parse_jsonl::<Post>(text, source)?
        .into_iter()
        .map(|(line, mut post)| {
            let at = |message: String| CohortError::Parse { path: source.to_string(), line, message };
            if post.participant_id.is_empty() {
                return Err(at("participant_id is empty".into()));
            }
            let ordinal = ordinals.entry(post.participant_id.clone()).or_default();
            if post.post_id.is_empty() {
                post.post_id = format!("{}-{}", post.participant_id, ordinal);
            }
            *ordinal += 1;
            if !seen.insert(post.post_id.clone()) {
                return Err(at(format!("duplicate post id {:?}", post.post_id)));
            }
            if let Some(f) = &post.features {
                let in_unit = |v: f64| (0.0..=1.0).contains(&v);
                if !(in_unit(f.mean_hue) && in_unit(f.mean_saturation) && in_unit(f.mean_brightness)) {
                    return Err(at("features outside [0, 1]".into()));
                }
                if f.has_face != (f.face_count >= 1) {
                    return Err(at("features.has_face disagrees with face_count".into()));
                }
            }
            Ok(post)
        })
        .collect()
}

pub fn parse_ratings(text: &str, source: &str) -> Result<Vec<Rating>, CohortError> {
    parse_jsonl::<Rating>(text, source)?
        .into_iter()
        .map(|(line, r)| {
            r.validate().map_err(|e| CohortError::Parse { path: source.to_string(), line, message: e.to_string() })?;
            Ok(r)
        })
        .collect()
}

fn read_text(path: &Path) -> Result<String, CohortError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn read_participants(path: &Path) -> Result<Vec<Participant>, CohortError> {
    parse_participants(&read_text(path)?, &path.display().to_string())
}

pub fn read_posts(path: &Path) -> Result<Vec<Post>, CohortError> {
    parse_posts(&read_text(path)?, &path.display().to_string())
}

pub fn read_ratings(path: &Path) -> Result<Vec<Rating>, CohortError> {
    parse_ratings(&read_text(path)?, &path.display().to_string())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CohortError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_carry_line_numbers() {
        let text = "{\"id\":\"a\",\"group\":\"healthy\"}\n\n{\"id\":\"b\",\"group\":\"sad\"}\n";
        let err = parse_participants(text, "p.jsonl").unwrap_err().to_string();
        assert!(err.starts_with("p.jsonl:3:"), "{err}");
    }

    #[test]
    fn depressed_needs_diagnosis() {
        let text = "{\"id\":\"a\",\"group\":\"depressed\",\"cesd_score\":30}\n";
        let err = parse_participants(text, "p").unwrap_err().to_string();
        assert!(err.contains("diagnosis_date"), "{err}");
    }

    #[test]
    fn cesd_responses_are_scored() {
        let text = format!(
            "{{\"id\":\"a\",\"group\":\"depressed\",\"diagnosis_date\":\"2015-01-02\",\"cesd_responses\":{:?}}}\n",
            [3u8; 20]
        );
        let p = parse_participants(&text, "p").unwrap();
        assert_eq!(p[0].cesd_score, Some(48));
    }

    #[test]
    fn post_ids_assigned_per_participant() {
        let text = concat!(
            "{\"participant_id\":\"u1\",\"timestamp\":\"2015-01-01T10:00:00Z\",\"like_count\":3,\"comment_count\":0,\"filter\":\"Normal\"}\n",
            "{\"participant_id\":\"u2\",\"timestamp\":\"2015-01-01T10:00:00Z\",\"like_count\":3,\"comment_count\":0,\"filter\":\"Inkwell\"}\n",
            "{\"participant_id\":\"u1\",\"timestamp\":\"2015-01-02T10:00:00+05:00\",\"like_count\":3,\"comment_count\":1,\"filter\":\"Normal\"}\n",
        );
        let posts = parse_posts(text, "posts").unwrap();
        let ids: Vec<_> = posts.iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["u1-0", "u2-0", "u1-1"]);
        assert!(posts[1].has_filter());
        assert_eq!(posts[2].date().to_string(), "2015-01-02");
    }

    #[test]
    fn ratings_range_checked() {
        let text = "{\"post_id\":\"p\",\"rater_id\":\"r\",\"happy\":5.5,\"sad\":1,\"likable\":1,\"interesting\":1}\n";
        assert!(parse_ratings(text, "r").unwrap_err().to_string().contains("happy"));
    }
}
