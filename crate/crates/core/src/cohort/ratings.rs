use std::collections::BTreeMap;

use chrono::Months;
use serde::{Deserialize, Serialize};

use super::{Participant, Post, Rating, RatingMeans};
use crate::Group;

/// Posts rated per participant.
pub const RATING_SUBSET_SIZE: usize = 100;
/// Posts with fewer ratings than this are flagged and left out of the means.
pub const MIN_RATERS: usize = 3;

/// Picks the posts to send for rating.
///
/// Depressed: posts dated within the year before diagnosis (strictly before the
/// diagnosis day), the latest [`RATING_SUBSET_SIZE`] of them. Healthy: the latest
/// [`RATING_SUBSET_SIZE`] posts before `participation_date`, or overall when the
/// participant has none. Returned ids are grouped by participant, newest first.
pub fn select_rating_subset(posts: &[Post], participants: &[Participant]) -> Vec<String> {
    let mut by_owner: BTreeMap<&str, Vec<&Post>> = BTreeMap::new();
    for p in posts {
        by_owner.entry(p.participant_id.as_str()).or_default().push(p);
    }
    let mut out = Vec::new();
    for person in participants {
        let Some(own) = by_owner.get(person.id.as_str()) else { continue };
        let mut eligible: Vec<&Post> = match person.group {
            Group::Depressed => {
                let Some(diag) = person.diagnosis_date else { continue };
                let from = diag.checked_sub_months(Months::new(12)).unwrap_or(diag);
                own.iter().copied().filter(|p| p.date() >= from && p.date() < diag).collect()
            }
            Group::Healthy => own
                .iter()
                .copied()
                .filter(|p| person.participation_date.is_none_or(|cut| p.date() < cut))
                .collect(),
        };
        eligible.sort_by(|a, b| b.timestamp.cmp(&a.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
        out.extend(eligible.into_iter().take(RATING_SUBSET_SIZE).map(|p| p.post_id.clone()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RatingAggregation {
    /// Per-post category means, for posts with at least [`MIN_RATERS`] ratings.
    pub means: BTreeMap<String, RatingMeans>,
    /// Posts rated by fewer than [`MIN_RATERS`] raters, with their rating count.
    pub flagged: BTreeMap<String, usize>,
}

pub fn aggregate_ratings(ratings: &[Rating]) -> RatingAggregation {
    let mut sums: BTreeMap<&str, (usize, [f64; 4])> = BTreeMap::new();
    for r in ratings {
        let e = sums.entry(r.post_id.as_str()).or_insert((0, [0.0; 4]));
        e.0 += 1;
        for (s, v) in e.1.iter_mut().zip(r.values()) {
            *s += v;
        }
    }
    let mut agg = RatingAggregation::default();
    for (post, (n, s)) in sums {
        if n < MIN_RATERS {
            agg.flagged.insert(post.to_string(), n);
        } else {
            agg.means.insert(post.to_string(), RatingMeans::from_array(s.map(|x| x / n as f64)));
        }
    }
    agg
}
