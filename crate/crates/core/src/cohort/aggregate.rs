use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Participant, Post, RatingMeans, UserDay};
use crate::Group;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub post_id: String,
    pub participant_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregation {
    /// Sorted by participant id, then date.
    pub user_days: Vec<UserDay>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Default)]
struct DayAcc {
    posts: u32,
    hue: f64,
    saturation: f64,
    brightness: f64,
    comments: f64,
    likes: f64,
    filtered: u32,
    face_posts: u32,
    faces: f64,
    rated: u32,
    ratings: [f64; 4],
}

/// Collapses posts into one observation per participant per UTC calendar day.
///
/// Hue, saturation, brightness, likes, comments and face count are averaged over
/// the day's posts; filtered and face-bearing posts are counted. When `ratings`
/// is given, the day's rated posts contribute mean ratings. Posts without
/// features or with an unknown participant are reported in `skipped`.
pub fn aggregate_user_days(
    posts: &[Post],
    participants: &[Participant],
    ratings: Option<&BTreeMap<String, RatingMeans>>,
) -> Aggregation {
    let groups: BTreeMap<&str, Group> = participants.iter().map(|p| (p.id.as_str(), p.group)).collect();
    let mut days: BTreeMap<(&str, NaiveDate), DayAcc> = BTreeMap::new();
    let mut skipped = Vec::new();
    for post in posts {
        let skip = |reason: &str| SkippedRecord {
            post_id: post.post_id.clone(),
            participant_id: post.participant_id.clone(),
            reason: reason.to_string(),
        };
        if !groups.contains_key(post.participant_id.as_str()) {
            skipped.push(skip("unknown participant"));
            continue;
        }
        let Some(f) = &post.features else {
            skipped.push(skip("no extracted features"));
            continue;
        };
        let acc = days.entry((post.participant_id.as_str(), post.date())).or_default();
        acc.posts += 1;
        acc.hue += f.mean_hue;
        acc.saturation += f.mean_saturation;
        acc.brightness += f.mean_brightness;
        acc.comments += f64::from(post.comment_count);
        acc.likes += f64::from(post.like_count);
        acc.filtered += u32::from(post.has_filter());
        acc.face_posts += u32::from(f.face_count >= 1);
        acc.faces += f64::from(f.face_count);
        if let Some(m) = ratings.and_then(|r| r.get(&post.post_id)) {
            acc.rated += 1;
            for (sum, v) in acc.ratings.iter_mut().zip(m.values()) {
                *sum += v;
            }
        }
    }

    let user_days = days
        .into_iter()
        .map(|((pid, date), a)| {
            let n = f64::from(a.posts);
            UserDay {
                participant_id: pid.to_string(),
                date,
                target: groups[pid],
                posts_per_day: a.posts,
                mean_hue: a.hue / n,
                mean_saturation: a.saturation / n,
                mean_brightness: a.brightness / n,
                comments: a.comments / n,
                likes: a.likes / n,
                filtered_count: a.filtered,
                face_post_count: a.face_posts,
                mean_face_count: a.faces / n,
                ratings: (a.rated > 0).then(|| RatingMeans::from_array(a.ratings.map(|s| s / f64::from(a.rated)))),
            }
        })
        .collect();
    Aggregation { user_days, skipped }
}

/// Keeps every healthy observation and the depressed ones dated strictly before
/// the participant's diagnosis. Observations of unknown participants are dropped.
pub fn split_pre_diagnosis(user_days: &[UserDay], participants: &[Participant]) -> Vec<UserDay> {
    let by_id: BTreeMap<&str, &Participant> = participants.iter().map(|p| (p.id.as_str(), p)).collect();
    user_days
        .iter()
        .filter(|d| match by_id.get(d.participant_id.as_str()) {
            Some(p) if p.group == Group::Healthy => true,
            Some(p) => p.diagnosis_date.is_some_and(|diag| d.date < diag),
            None => false,
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ImageFeatures;
    use chrono::{TimeZone, Utc};

    fn participant(id: &str, group: Group) -> Participant {
        Participant {
            id: id.into(),
            group,
            diagnosis_date: (group == Group::Depressed).then(|| NaiveDate::from_ymd_opt(2015, 6, 10).unwrap()),
            cesd_score: (group == Group::Depressed).then_some(30),
            age: None,
            participation_date: None,
        }
    }

    fn post(id: &str, pid: &str, day: u32, hour: u32, faces: u32, filter: &str) -> Post {
        Post {
            post_id: id.into(),
            participant_id: pid.into(),
            timestamp: Utc.with_ymd_and_hms(2015, 6, day, hour, 0, 0).unwrap(),
            like_count: 10,
            comment_count: 2,
            filter_name: filter.into(),
            image_path: None,
            features: Some(ImageFeatures {
                mean_hue: 0.2,
                mean_saturation: 0.4,
                mean_brightness: 0.6,
                face_count: faces,
                has_face: faces > 0,
            }),
        }
    }

    #[test]
    fn singleton_day_equals_post() {
        let agg = aggregate_user_days(&[post("a", "u", 1, 9, 1, "Normal")], &[participant("u", Group::Healthy)], None);
        let d = &agg.user_days[0];
        assert_eq!(d.posts_per_day, 1);
        assert_eq!((d.mean_hue, d.mean_saturation, d.mean_brightness), (0.2, 0.4, 0.6));
        assert_eq!((d.likes, d.comments, d.filtered_count, d.face_post_count, d.mean_face_count), (10.0, 2.0, 0, 1, 1.0));
    }

    #[test]
    fn face_counts_within_a_day() {
        let posts = [post("a", "u", 1, 9, 0, "Inkwell"), post("b", "u", 1, 23, 2, "Normal")];
        let agg = aggregate_user_days(&posts, &[participant("u", Group::Healthy)], None);
        assert_eq!(agg.user_days.len(), 1);
        let d = &agg.user_days[0];
        assert_eq!((d.posts_per_day, d.face_post_count, d.mean_face_count, d.filtered_count), (2, 1, 1.0, 1));
    }

    #[test]
    fn distinct_days_and_skips() {
        let mut bare = post("x", "u", 4, 1, 0, "Normal");
        bare.features = None;
        let posts = [post("a", "u", 1, 9, 0, "Normal"), post("b", "u", 2, 9, 0, "Normal"), post("c", "u", 3, 9, 0, "Normal"), bare, post("y", "ghost", 1, 1, 0, "Normal")];
        let agg = aggregate_user_days(&posts, &[participant("u", Group::Healthy)], None);
        assert_eq!(agg.user_days.len(), 3);
        let reasons: Vec<_> = agg.skipped.iter().map(|s| (s.post_id.as_str(), s.reason.as_str())).collect();
        assert_eq!(reasons, [("x", "no extracted features"), ("y", "unknown participant")]);
    }

    #[test]
    fn ratings_average_over_rated_posts() {
        let posts = [post("a", "u", 1, 9, 0, "Normal"), post("b", "u", 1, 10, 0, "Normal")];
        let mut r = BTreeMap::new();
        r.insert("a".to_string(), RatingMeans::from_array([2.0, 1.0, 3.0, 4.0]));
        let agg = aggregate_user_days(&posts, &[participant("u", Group::Healthy)], Some(&r));
        assert_eq!(agg.user_days[0].ratings.unwrap().values(), [2.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn pre_diagnosis_is_strict() {
        let people = [participant("d", Group::Depressed), participant("h", Group::Healthy)];
        let posts = [
            post("1", "d", 9, 9, 0, "Normal"),
            post("2", "d", 10, 9, 0, "Normal"),
            post("3", "h", 10, 9, 0, "Normal"),
            post("4", "h", 20, 9, 0, "Normal"),
        ];
        let all = aggregate_user_days(&posts, &people, None).user_days;
        let pre = split_pre_diagnosis(&all, &people);
        let kept: Vec<_> = pre.iter().map(|d| (d.participant_id.as_str(), d.date.to_string())).collect();
        assert_eq!(kept, [("d", "2015-06-09".to_string()), ("h", "2015-06-10".into()), ("h", "2015-06-20".into())]);
    }
}
