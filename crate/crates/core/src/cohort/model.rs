use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{score_cesd, CohortError};
use crate::imaging::ImageFeatures;
use crate::Group;

/// Filter name Instagram-style exports use for an unfiltered photo.
pub const NO_FILTER: &str = "Normal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnosis_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cesd_score: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<f64>,
    /// Day the participant shared their history; bounds the healthy ratings subset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participation_date: Option<NaiveDate>,
}

impl Participant {
    pub fn validate(&self) -> Result<(), CohortError> {
        if self.id.is_empty() {
            return Err(CohortError::Invalid("participant id is empty".into()));
        }
        if let Some(score) = self.cesd_score {
            if score > 60 {
                return Err(CohortError::Invalid(format!("participant {}: CES-D score {score} exceeds 60", self.id)));
            }
        }
        if self.group == Group::Depressed {
            if self.diagnosis_date.is_none() {
                return Err(CohortError::Invalid(format!("depressed participant {} has no diagnosis_date", self.id)));
            }
            if self.cesd_score.is_none() {
                return Err(CohortError::Invalid(format!("depressed participant {} has no CES-D score", self.id)));
            }
        }
        Ok(())
    }
}

/// Participant as it appears in the JSON-lines input: the CES-D may be given
/// as the 20 raw item responses instead of a score.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticipantRecord {
    pub id: String,
    pub group: Group,
    #[serde(default)]
    pub diagnosis_date: Option<NaiveDate>,
    #[serde(default)]
    pub cesd_responses: Option<Vec<u8>>,
    #[serde(default)]
    pub cesd_score: Option<u8>,
    #[serde(default)]
    pub age: Option<f64>,
    #[serde(default)]
    pub participation_date: Option<NaiveDate>,
}

impl TryFrom<ParticipantRecord> for Participant {
    type Error = CohortError;

    fn try_from(r: ParticipantRecord) -> Result<Self, Self::Error> {
        let cesd_score = match (r.cesd_responses, r.cesd_score) {
            (Some(_), Some(_)) => {
                return Err(CohortError::Invalid(format!(
                    "participant {}: give cesd_responses or cesd_score, not both",
                    r.id
                )))
            }
            (Some(responses), None) => Some(score_cesd(&responses)?),
            (None, score) => score,
        };
        let p = Participant {
            id: r.id,
            group: r.group,
            diagnosis_date: r.diagnosis_date,
            cesd_score,
            age: r.age,
            participation_date: r.participation_date,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    /// Optional in input files; when absent the reader assigns
    /// `<participant_id>-<ordinal>` in file order.
    #[serde(default)]
    pub post_id: String,
    pub participant_id: String,
    pub timestamp: DateTime<Utc>,
    pub like_count: u32,
    pub comment_count: u32,
    #[serde(rename = "filter")]
    pub filter_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<ImageFeatures>,
}

impl Post {
    pub fn has_filter(&self) -> bool {
        self.filter_name != NO_FILTER
    }

    /// UTC calendar day of the post.
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub post_id: String,
    pub rater_id: String,
    pub happy: f64,
    pub sad: f64,
    pub likable: f64,
    pub interesting: f64,
}

impl Rating {
    pub fn values(&self) -> [f64; 4] {
        [self.happy, self.sad, self.likable, self.interesting]
    }

    pub fn validate(&self) -> Result<(), CohortError> {
        for (name, v) in RATING_CATEGORIES.iter().zip(self.values()) {
            if !(0.0..=5.0).contains(&v) {
                return Err(CohortError::Invalid(format!(
                    "rating of post {} by {}: {name} = {v} outside [0, 5]",
                    self.post_id, self.rater_id
                )));
            }
        }
        Ok(())
    }
}

pub const RATING_CATEGORIES: [&str; 4] = ["happy", "sad", "likable", "interesting"];

/// Mean ratings of one post (or one user-day), in [`RATING_CATEGORIES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingMeans {
    pub happy: f64,
    pub sad: f64,
    pub likable: f64,
    pub interesting: f64,
}

impl RatingMeans {
    pub fn from_array(v: [f64; 4]) -> Self {
        Self { happy: v[0], sad: v[1], likable: v[2], interesting: v[3] }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.happy, self.sad, self.likable, self.interesting]
    }
}

/// All of one participant's posts on one UTC calendar day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDay {
    pub participant_id: String,
    pub date: NaiveDate,
    pub target: Group,
    pub posts_per_day: u32,
    pub mean_hue: f64,
    pub mean_saturation: f64,
    pub mean_brightness: f64,
    /// Mean comments per post.
    pub comments: f64,
    /// Mean likes per post.
    pub likes: f64,
    pub filtered_count: u32,
    pub face_post_count: u32,
    pub mean_face_count: f64,
    /// Means over the day's rated posts, when any were rated.
    pub ratings: Option<RatingMeans>,
}
