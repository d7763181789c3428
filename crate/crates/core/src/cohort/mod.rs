//! Participants, posts and ratings: admission, per-person per-day aggregation,
//! the All-data / Pre-diagnosis split, feature matrices and synthetic cohorts.

mod aggregate;
pub mod io;
mod matrix;
mod model;
mod ratings;
mod summary;
pub mod synth;

use thiserror::Error;

pub use aggregate::{aggregate_user_days, split_pre_diagnosis, Aggregation, SkippedRecord};
pub use matrix::{ColumnScale, FeatureMatrix, FeatureSet, COMPUTATIONAL_FEATURES, RATING_FEATURES};
pub use model::{
    Participant, ParticipantRecord, Post, Rating, RatingMeans, UserDay, NO_FILTER, RATING_CATEGORIES,
};
pub use ratings::{aggregate_ratings, select_rating_subset, RatingAggregation, MIN_RATERS, RATING_SUBSET_SIZE};
pub use summary::{summary_stats, user_day_counts, GroupSummary, SummaryStats, UserDayCounts};

use crate::Group;

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("{0}")]
    Invalid(String),
    #[error("CES-D: expected 20 responses, got {0}")]
    CesdCount(usize),
    #[error("CES-D item {item}: response {value} outside 0-3")]
    CesdItem { item: usize, value: u8 },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("column {0:?} has zero variance")]
    ZeroVariance(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// CES-D items scored in reverse (1-based): the positively worded ones.
pub const CESD_REVERSED_ITEMS: [usize; 4] = [4, 8, 12, 16];

/// Scores the 20-item CES-D, reverse-scoring items 4, 8, 12 and 16.
pub fn score_cesd(responses: &[u8]) -> Result<u8, CohortError> {
    if responses.len() != 20 {
        return Err(CohortError::CesdCount(responses.len()));
    }
    let mut total = 0u8;
    for (i, &value) in responses.iter().enumerate() {
        let item = i + 1;
        if value > 3 {
            return Err(CohortError::CesdItem { item, value });
        }
        total += if CESD_REVERSED_ITEMS.contains(&item) { 3 - value } else { value };
    }
    Ok(total)
}

/// Minimum lifetime posts for admission.
pub const MIN_POSTS: usize = 5;
/// Depressed participants need a CES-D score strictly above this.
pub const CESD_CUTOFF: u8 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    MinPosts,
    Cesd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admission {
    Admitted,
    Excluded(ExclusionReason),
}

pub fn admit_participant(p: &Participant, post_count: usize) -> Admission {
    if post_count < MIN_POSTS {
        return Admission::Excluded(ExclusionReason::MinPosts);
    }
    if p.group == Group::Depressed && p.cesd_score.is_none_or(|s| s <= CESD_CUTOFF) {
        return Admission::Excluded(ExclusionReason::Cesd);
    }
    Admission::Admitted
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    #[test]
    fn cesd_scoring() {
        assert_eq!(score_cesd(&[0; 20]).unwrap(), 12);
        assert_eq!(score_cesd(&[3; 20]).unwrap(), 48);
        let mut max = [3u8; 20];
        for item in CESD_REVERSED_ITEMS {
            max[item - 1] = 0;
        }
        assert_eq!(score_cesd(&max).unwrap(), 60);
    }

    #[test]
    fn cesd_errors_name_the_item() {
        assert!(matches!(score_cesd(&[0; 19]), Err(CohortError::CesdCount(19))));
        let mut bad = [0u8; 20];
        bad[6] = 4;
        assert!(matches!(score_cesd(&bad), Err(CohortError::CesdItem { item: 7, value: 4 })));
    }

    fn depressed(cesd: u8) -> Participant {
        Participant {
            id: "d".into(),
            group: Group::Depressed,
            diagnosis_date: NaiveDate::from_ymd_opt(2014, 3, 1),
            cesd_score: Some(cesd),
            age: None,
            participation_date: None,
        }
    }

    #[test]
    fn admission_rules() {
        assert_eq!(admit_participant(&depressed(22), 5), Admission::Admitted);
        assert_eq!(admit_participant(&depressed(21), 200), Admission::Excluded(ExclusionReason::Cesd));
        let healthy = Participant { group: Group::Healthy, diagnosis_date: None, cesd_score: None, ..depressed(0) };
        assert_eq!(admit_participant(&healthy, 4), Admission::Excluded(ExclusionReason::MinPosts));
        assert_eq!(admit_participant(&healthy, 5), Admission::Admitted);
    }

    #[test]
    fn admission_is_monotone() {
        for cesd in 0..=60u8 {
            for posts in 0..12 {
                if admit_participant(&depressed(cesd), posts) == Admission::Admitted {
                    assert_eq!(admit_participant(&depressed(cesd.saturating_add(1).min(60)), posts), Admission::Admitted);
                    assert_eq!(admit_participant(&depressed(cesd), posts + 1), Admission::Admitted);
                }
            }
        }
    }
}
