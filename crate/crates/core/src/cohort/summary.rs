use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Participant, Post, UserDay};
use crate::Group;

/// One row of the posts-per-user table. `group` is `None` for the total row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: Option<Group>,
    pub users: usize,
    pub posts: usize,
    pub mean_posts: f64,
    /// Sample standard deviation of posts per user.
    pub sd_posts: f64,
    pub median_posts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    /// Total, depressed, healthy.
    pub rows: Vec<GroupSummary>,
}

fn summarize(group: Option<Group>, counts: &[usize]) -> GroupSummary {
    let n = counts.len();
    let posts: usize = counts.iter().sum();
    let mean = if n == 0 { 0.0 } else { posts as f64 / n as f64 };
    let sd = if n < 2 {
        0.0
    } else {
        (counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => sorted[n / 2] as f64,
        _ => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    };
    GroupSummary { group, users: n, posts, mean_posts: mean, sd_posts: sd, median_posts: median }
}

/// Posts-per-user statistics for the given (already admitted) participants.
pub fn summary_stats(participants: &[Participant], posts: &[Post]) -> SummaryStats {
    let mut per_user: BTreeMap<&str, usize> = participants.iter().map(|p| (p.id.as_str(), 0)).collect();
    for post in posts {
        if let Some(c) = per_user.get_mut(post.participant_id.as_str()) {
            *c += 1;
        }
    }
    let counts = |g: Option<Group>| -> Vec<usize> {
        participants.iter().filter(|p| g.is_none_or(|g| p.group == g)).map(|p| per_user[p.id.as_str()]).collect()
    };
    SummaryStats {
        rows: [None, Some(Group::Depressed), Some(Group::Healthy)]
            .into_iter()
            .map(|g| summarize(g, &counts(g)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDayCounts {
    pub observations: usize,
    pub depressed: usize,
    pub depressed_share: f64,
    pub posts: usize,
    pub depressed_posts: usize,
}

pub fn user_day_counts(days: &[UserDay]) -> UserDayCounts {
    let observations = days.len();
    let dep: Vec<_> = days.iter().filter(|d| d.target == Group::Depressed).collect();
    UserDayCounts {
        observations,
        depressed: dep.len(),
        depressed_share: if observations == 0 { 0.0 } else { dep.len() as f64 / observations as f64 },
        posts: days.iter().map(|d| d.posts_per_day as usize).sum(),
        depressed_posts: dep.iter().map(|d| d.posts_per_day as usize).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_posts_one_user() {
        let s = summarize(Some(Group::Healthy), &[2, 4]);
        assert_eq!((s.mean_posts, s.median_posts), (3.0, 3.0));
        let one = summarize(None, &[2]);
        assert_eq!((one.mean_posts, one.median_posts, one.sd_posts), (2.0, 2.0, 0.0));
    }

    #[test]
    fn skew_pulls_mean_above_median() {
        let s = summarize(None, &[5, 6, 7, 8, 400]);
        assert!(s.median_posts < s.mean_posts);
    }
}
