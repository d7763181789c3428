//! Seeded synthetic cohorts with known group differences.
//!
//! Algorithm, per participant `i` (stream `i + 1` of a ChaCha8 generator seeded
//! with the cohort seed; stream 0 draws the post counts):
//!
//! 1. Post count from a lognormal with the group's mean and median, optionally
//!    rescaled so the group total is exact; never below the admission minimum.
//! 2. History walks backwards from a collection day in early 2016. Each active
//!    day carries `1 + Poisson(posts_per_day - 1)` posts; gaps between active
//!    days are `1 + Geometric(1 / gap_days)`.
//! 3. Each photo draws hue, saturation and brightness from truncated normals
//!    around the group mean plus a per-participant offset; likes and comments
//!    are gamma-Poisson; a face is present with the group probability and the
//!    count is `1 + Poisson(extra_faces)`; the filter comes from the group's
//!    weighted vocabulary.
//! 4. Depressed participants are diagnosed at a random quantile of their
//!    history, so about `pre_diagnosis_share` of posts come before it.
//! 5. With a rating spec, the posts chosen by the rating-subset rule are scored
//!    by raters who share a per-post latent value; the correlation between two
//!    raters' scores is `rho` before clamping to [0, 5].

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Geometric, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{select_rating_subset, CohortError, Participant, Post, Rating, MIN_POSTS, NO_FILTER};
use crate::imaging::ImageFeatures;
use crate::Group;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

const fn ms(mean: f64, sd: f64) -> MeanSd {
    MeanSd { mean, sd }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub users: usize,
    pub posts_mean: f64,
    pub posts_median: f64,
    /// Forces the group's post total when set.
    #[serde(default)]
    pub total_posts: Option<usize>,
    pub posts_per_day: f64,
    pub hue: MeanSd,
    pub saturation: MeanSd,
    pub brightness: MeanSd,
    pub likes: MeanSd,
    pub comments: MeanSd,
    pub face_probability: f64,
    pub extra_faces: f64,
    /// Relative weights; "Normal" means unfiltered.
    pub filters: BTreeMap<String, f64>,
    /// Mean per-category ratings: happy, sad, likable, interesting.
    pub rating_means: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSpec {
    pub raters_per_post: usize,
    pub rater_pool: usize,
    /// Between-rater correlation per category.
    pub rho: [f64; 4],
    /// Rating sd per category.
    pub sd: [f64; 4],
}

impl Default for RatingSpec {
    fn default() -> Self {
        Self { raters_per_post: 3, rater_pool: 200, rho: [0.4; 4], sd: [1.0, 0.6, 0.9, 0.9] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub name: String,
    pub depressed: GroupSpec,
    pub healthy: GroupSpec,
    /// Per-participant offset of the colour means, in units of each feature's sd.
    pub user_effect_sd: f64,
    /// Mean days between active days.
    pub gap_days: f64,
    pub pre_diagnosis_share: f64,
    #[serde(default)]
    pub ratings: Option<RatingSpec>,
}

fn filters(normal: f64, inkwell: f64, valencia: f64) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert(NO_FILTER.to_string(), normal);
    m.insert("Inkwell".to_string(), inkwell);
    m.insert("Valencia".to_string(), valencia);
    for (name, w) in [("Amaro", 0.06), ("Rise", 0.05), ("Hudson", 0.05), ("X-Pro II", 0.05), ("Lo-fi", 0.05), ("Mayfair", 0.04)] {
        m.insert(name.to_string(), w);
    }
    m
}

impl CohortSpec {
    /// Full-size cohort: 71 depressed / 95 healthy users, 24,811 / 19,139 posts,
    /// photo statistics patterned on the observed group means.
    pub fn replica() -> Self {
        Self {
            name: "replica".into(),
            depressed: GroupSpec {
                users: 71,
                posts_mean: 349.45,
                posts_median: 196.0,
                total_posts: Some(24_811),
                posts_per_day: 1.875,
                hue: ms(0.345, 0.162),
                saturation: ms(0.338, 0.157),
                brightness: ms(0.535, 0.138),
                likes: ms(16.168, 34.874),
                comments: ms(1.077, 2.150),
                face_probability: 0.41,
                extra_faces: 0.54,
                filters: filters(0.56, 0.10, 0.04),
                rating_means: [2.300, 0.840, 2.393, 2.4],
            },
            healthy: GroupSpec {
                users: 95,
                posts_mean: 201.46,
                posts_median: 100.0,
                total_posts: Some(19_139),
                posts_per_day: 1.667,
                hue: ms(0.338, 0.157),
                saturation: ms(0.347, 0.155),
                brightness: ms(0.547, 0.145),
                likes: ms(18.939, 34.214),
                comments: ms(0.992, 2.013),
                face_probability: 0.37,
                extra_faces: 0.68,
                filters: filters(0.48, 0.04, 0.10),
                rating_means: [2.511, 0.757, 2.514, 2.4],
            },
            user_effect_sd: 0.25,
            gap_days: 3.0,
            pre_diagnosis_share: 0.53,
            ratings: Some(RatingSpec::default()),
        }
    }

    /// 20 + 20 users with about 100 user-days each and the replica's statistics.
    pub fn desk() -> Self {
        let mut s = Self::replica();
        s.name = "desk".into();
        for g in [&mut s.depressed, &mut s.healthy] {
            g.users = 20;
            g.total_posts = None;
            g.posts_median = 160.0;
            g.posts_mean = 185.0;
        }
        s
    }

    /// Desk scale with every photo feature of the depressed group shifted by
    /// about one sd: bluer, greyer, darker, fewer likes, more faces.
    pub fn planted() -> Self {
        let mut s = Self::desk();
        s.name = "planted".into();
        let h = s.healthy.clone();
        let d = &mut s.depressed;
        d.hue = ms(h.hue.mean + h.hue.sd, h.hue.sd);
        d.saturation = ms(h.saturation.mean - h.saturation.sd, h.saturation.sd);
        d.brightness = ms(h.brightness.mean - h.brightness.sd, h.brightness.sd);
        d.likes = ms(h.likes.mean * 0.35, h.likes.sd * 0.35);
        d.comments = ms(h.comments.mean * 2.0, h.comments.sd);
        d.face_probability = 0.75;
        d.filters = filters(0.55, 0.30, 0.02);
        s.healthy.face_probability = 0.25;
        s
    }

    /// Desk scale with identical groups and no per-participant offsets.
    pub fn null() -> Self {
        let mut s = Self::desk();
        s.name = "null".into();
        s.depressed = s.healthy.clone();
        s.user_effect_sd = 0.0;
        s
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "replica" => Some(Self::replica()),
            "desk" => Some(Self::desk()),
            "planted" => Some(Self::planted()),
            "null" => Some(Self::null()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), CohortError> {
        let bad = |m: String| Err(CohortError::Invalid(format!("cohort spec {}: {m}", self.name)));
        for (label, g) in [("depressed", &self.depressed), ("healthy", &self.healthy)] {
            for (f, v) in [("hue", g.hue), ("saturation", g.saturation), ("brightness", g.brightness), ("likes", g.likes), ("comments", g.comments)] {
                if !(v.sd >= 0.0) || !v.mean.is_finite() {
                    return bad(format!("{label}.{f}: sd must be >= 0 and mean finite"));
                }
            }
            if g.likes.mean < 0.0 || g.comments.mean < 0.0 {
                return bad(format!("{label}: count means must be >= 0"));
            }
            if g.users == 0 {
                return bad(format!("{label}.users must be positive"));
            }
            if !(g.posts_median > 0.0 && g.posts_mean >= g.posts_median) {
                return bad(format!("{label}: need 0 < posts_median <= posts_mean"));
            }
            if let Some(t) = g.total_posts {
                if t < g.users * MIN_POSTS {
                    return bad(format!("{label}.total_posts below {MIN_POSTS} per user"));
                }
            }
            if !(g.posts_per_day >= 1.0) {
                return bad(format!("{label}.posts_per_day must be >= 1"));
            }
            if !(0.0..=1.0).contains(&g.face_probability) || !(g.extra_faces >= 0.0) {
                return bad(format!("{label}: face_probability in [0, 1], extra_faces >= 0"));
            }
            if g.filters.values().any(|w| !(*w >= 0.0)) || g.filters.values().sum::<f64>() <= 0.0 {
                return bad(format!("{label}.filters: weights must be >= 0 with a positive sum"));
            }
        }
        if !(self.user_effect_sd >= 0.0) || !(self.gap_days >= 1.0) || !(0.0..=1.0).contains(&self.pre_diagnosis_share) {
            return bad("user_effect_sd >= 0, gap_days >= 1, pre_diagnosis_share in [0, 1]".into());
        }
        if let Some(r) = &self.ratings {
            if r.raters_per_post < 1 || r.rater_pool < r.raters_per_post {
                return bad("ratings: need 1 <= raters_per_post <= rater_pool".into());
            }
            if r.rho.iter().any(|p| !(0.0..=1.0).contains(p)) || r.sd.iter().any(|s| !(*s >= 0.0)) {
                return bad("ratings: rho in [0, 1], sd >= 0".into());
            }
        }
        Ok(())
    }
}

/// Differences the generator planted, depressed minus healthy, per photo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: String,
    pub seed: u64,
    pub labels: BTreeMap<String, Group>,
    pub planted_effects: BTreeMap<String, f64>,
    /// Planted difference divided by the healthy sd, where one applies.
    pub standardized_effects: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohort {
    pub participants: Vec<Participant>,
    pub posts: Vec<Post>,
    pub ratings: Vec<Rating>,
    pub truth: GroundTruth,
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u32
}

/// Gamma-Poisson draw with the given mean and sd (sd² > mean for overdispersion).
fn count(rng: &mut ChaCha8Rng, m: MeanSd) -> u32 {
    if m.mean <= 0.0 {
        return 0;
    }
    let excess = m.sd * m.sd - m.mean;
    if excess <= 1e-9 {
        return poisson(rng, m.mean);
    }
    let shape = m.mean * m.mean / excess;
    let rate = Gamma::new(shape, m.mean / shape).expect("valid gamma").sample(rng);
    poisson(rng, rate)
}

fn unit_normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let v = if sd > 0.0 { Normal::new(mean, sd).expect("sd >= 0").sample(rng) } else { mean };
    v.clamp(0.0, 1.0 - 1e-9)
}

fn post_counts(rng: &mut ChaCha8Rng, g: &GroupSpec) -> Vec<usize> {
    let sigma = (2.0 * (g.posts_mean / g.posts_median).ln()).sqrt();
    let dist = LogNormal::new(g.posts_median.ln(), sigma).expect("valid lognormal");
    let raw: Vec<f64> = (0..g.users).map(|_| dist.sample(rng).max(MIN_POSTS as f64)).collect();
    let Some(total) = g.total_posts else {
        return raw.iter().map(|x| x.round() as usize).collect();
    };
    // Largest-remainder apportionment of the fixed total, each at least MIN_POSTS.
    let spare = (total - MIN_POSTS * g.users) as f64;
    let weights: Vec<f64> = raw.iter().map(|x| x - MIN_POSTS as f64 + 1e-6).collect();
    let wsum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / wsum * spare).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..g.users).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = spare as usize - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts.iter().map(|c| c + MIN_POSTS).collect()
}

fn pick_filter(rng: &mut ChaCha8Rng, filters: &BTreeMap<String, f64>) -> String {
    let total: f64 = filters.values().sum();
    let mut u = rng.random::<f64>() * total;
    for (name, w) in filters {
        if u < *w {
            return name.clone();
        }
        u -= w;
    }
    filters.keys().next_back().cloned().unwrap_or_else(|| NO_FILTER.to_string())
}

fn participant_posts(
    rng: &mut ChaCha8Rng,
    id: &str,
    group: Group,
    g: &GroupSpec,
    spec: &CohortSpec,
    n_posts: usize,
) -> (Participant, Vec<Post>) {
    let offset = |rng: &mut ChaCha8Rng, sd: f64| {
        if spec.user_effect_sd > 0.0 && sd > 0.0 {
            Normal::new(0.0, spec.user_effect_sd * sd).expect("sd > 0").sample(rng)
        } else {
            0.0
        }
    };
    let (oh, os, ob) = (offset(rng, g.hue.sd), offset(rng, g.saturation.sd), offset(rng, g.brightness.sd));
    let collected = NaiveDate::from_ymd_opt(2016, 2, 1).unwrap() + Duration::days(rng.random_range(0..65));
    let gap = Geometric::new(1.0 / spec.gap_days).expect("gap_days >= 1");

    // Build the history backwards as (date, posts) pairs.
    let mut days = Vec::new();
    let mut remaining = n_posts;
    let mut date = collected - Duration::days(1);
    while remaining > 0 {
        let k = (1 + poisson(rng, g.posts_per_day - 1.0) as usize).min(remaining);
        days.push((date, k));
        remaining -= k;
        date -= Duration::days(1 + gap.sample(rng) as i64);
    }
    days.reverse();

    let mut posts = Vec::with_capacity(n_posts);
    for (date, k) in &days {
        let mut minutes: Vec<u32> = (0..*k).map(|_| rng.random_range(0..24 * 60)).collect();
        minutes.sort_unstable();
        for m in minutes {
            let has_face = rng.random::<f64>() < g.face_probability;
            let face_count = if has_face { 1 + poisson(rng, g.extra_faces) } else { 0 };
            let features = ImageFeatures {
                mean_hue: unit_normal(rng, g.hue.mean + oh, g.hue.sd),
                mean_saturation: unit_normal(rng, g.saturation.mean + os, g.saturation.sd),
                mean_brightness: unit_normal(rng, g.brightness.mean + ob, g.brightness.sd),
                face_count,
                has_face,
            };
            posts.push(Post {
                post_id: format!("{id}-{}", posts.len()),
                participant_id: id.to_string(),
                timestamp: Utc.from_utc_datetime(&date.and_hms_opt(m / 60, m % 60, 0).unwrap()),
                like_count: count(rng, g.likes),
                comment_count: count(rng, g.comments),
                filter_name: pick_filter(rng, &g.filters),
                image_path: None,
                features: Some(features),
            });
        }
    }

    let diagnosis_date = (group == Group::Depressed).then(|| {
        let spread = spec.pre_diagnosis_share.min(1.0 - spec.pre_diagnosis_share).min(0.25);
        let q = (spec.pre_diagnosis_share + rng.random_range(-spread..=spread)).clamp(0.0, 1.0);
        let idx = ((q * n_posts as f64).round() as usize).min(n_posts);
        match posts.get(idx) {
            Some(p) if idx > 0 => p.date().max(posts[idx - 1].date() + Duration::days(1)),
            Some(p) => p.date(),
            None => collected,
        }
    });
    let cesd_score = Some(match group {
        Group::Depressed => rng.random_range(22..=60),
        Group::Healthy => rng.random_range(0..=30),
    });
    let participant = Participant {
        id: id.to_string(),
        group,
        diagnosis_date,
        cesd_score,
        age: Some(rng.random_range(19.0..55.0f64).round()),
        participation_date: Some(collected),
    };
    (participant, posts)
}

/// Ratings sharing a per-post latent value. Each category's rater-to-rater
/// correlation is `rho` (before clamping to [0, 5]).
pub fn latent_ratings(
    post_means: &[(String, [f64; 4])],
    spec: &RatingSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<Rating> {
    let mut out = Vec::with_capacity(post_means.len() * spec.raters_per_post);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    for (post_id, means) in post_means {
        let latent: Vec<f64> = (0..4).map(|c| spec.sd[c] * spec.rho[c].sqrt() * std.sample(rng)).collect();
        let raters = rand::seq::index::sample(rng, spec.rater_pool, spec.raters_per_post);
        for r in raters.iter() {
            let v: Vec<f64> = (0..4)
                .map(|c| (means[c] + latent[c] + spec.sd[c] * (1.0 - spec.rho[c]).sqrt() * std.sample(rng)).clamp(0.0, 5.0))
                .collect();
            out.push(Rating {
                post_id: post_id.clone(),
                rater_id: format!("r{r:03}"),
                happy: v[0],
                sad: v[1],
                likable: v[2],
                interesting: v[3],
            });
        }
    }
    out
}

pub fn generate_cohort(spec: &CohortSpec, seed: u64) -> Result<SyntheticCohort, CohortError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dep_counts = post_counts(&mut rng, &spec.depressed);
    let healthy_counts = post_counts(&mut rng, &spec.healthy);

    let mut participants = Vec::new();
    let mut posts = Vec::new();
    let plan = dep_counts
        .iter()
        .enumerate()
        .map(|(i, &n)| (format!("d{i:03}"), Group::Depressed, &spec.depressed, n))
        .chain(healthy_counts.iter().enumerate().map(|(i, &n)| (format!("h{i:03}"), Group::Healthy, &spec.healthy, n)));
    for (stream, (id, group, g, n)) in plan.enumerate() {
        let mut prng = ChaCha8Rng::seed_from_u64(seed);
        prng.set_stream(stream as u64 + 1);
        let (p, mut ps) = participant_posts(&mut prng, &id, group, g, spec, n);
        participants.push(p);
        posts.append(&mut ps);
    }

    let ratings = match &spec.ratings {
        None => Vec::new(),
        Some(rs) => {
            let group_of: BTreeMap<&str, Group> = participants.iter().map(|p| (p.id.as_str(), p.group)).collect();
            let owner: BTreeMap<&str, &str> = posts.iter().map(|p| (p.post_id.as_str(), p.participant_id.as_str())).collect();
            let chosen: Vec<(String, [f64; 4])> = select_rating_subset(&posts, &participants)
                .into_iter()
                .map(|id| {
                    let g = match group_of[owner[id.as_str()]] {
                        Group::Depressed => &spec.depressed,
                        Group::Healthy => &spec.healthy,
                    };
                    (id, g.rating_means)
                })
                .collect();
            let mut rrng = ChaCha8Rng::seed_from_u64(seed);
            rrng.set_stream(u64::MAX);
            latent_ratings(&chosen, rs, &mut rrng)
        }
    };

    Ok(SyntheticCohort { truth: ground_truth(spec, seed, &participants), participants, posts, ratings })
}

fn ground_truth(spec: &CohortSpec, seed: u64, participants: &[Participant]) -> GroundTruth {
    let (d, h) = (&spec.depressed, &spec.healthy);
    let mut planted = BTreeMap::new();
    let mut standardized = BTreeMap::new();
    for (name, a, b) in [
        ("hue", d.hue, h.hue),
        ("saturation", d.saturation, h.saturation),
        ("brightness", d.brightness, h.brightness),
        ("likes", d.likes, h.likes),
        ("comments", d.comments, h.comments),
    ] {
        planted.insert(name.to_string(), a.mean - b.mean);
        if b.sd > 0.0 {
            standardized.insert(name.to_string(), (a.mean - b.mean) / b.sd);
        }
    }
    planted.insert("posts_per_day".into(), d.posts_per_day - h.posts_per_day);
    planted.insert("face_probability".into(), d.face_probability - h.face_probability);
    planted.insert("faces_per_post".into(), d.face_probability * (1.0 + d.extra_faces) - h.face_probability * (1.0 + h.extra_faces));
    let share = |g: &GroupSpec, f: &str| g.filters.get(f).copied().unwrap_or(0.0) / g.filters.values().sum::<f64>();
    for f in d.filters.keys().chain(h.filters.keys()) {
        planted.insert(format!("filter:{f}"), share(d, f) - share(h, f));
    }
    for (c, name) in super::RATING_CATEGORIES.iter().enumerate() {
        planted.insert(format!("rating:{name}"), d.rating_means[c] - h.rating_means[c]);
    }
    GroundTruth {
        spec: spec.name.clone(),
        seed,
        labels: participants.iter().map(|p| (p.id.clone(), p.group)).collect(),
        planted_effects: planted,
        standardized_effects: standardized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::io::to_jsonl;

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_cohort(&CohortSpec::null(), 7).unwrap();
        let b = generate_cohort(&CohortSpec::null(), 7).unwrap();
        assert_eq!(to_jsonl(&a.posts), to_jsonl(&b.posts));
        assert_eq!(to_jsonl(&a.ratings), to_jsonl(&b.ratings));
        let c = generate_cohort(&CohortSpec::null(), 8).unwrap();
        assert_ne!(to_jsonl(&a.posts), to_jsonl(&c.posts));
    }

    #[test]
    fn replica_totals_exact() {
        let c = generate_cohort(&CohortSpec::replica(), 1).unwrap();
        assert_eq!(c.participants.len(), 166);
        assert_eq!(c.posts.len(), 43_950);
        let dep = c.posts.iter().filter(|p| p.participant_id.starts_with('d')).count();
        assert_eq!(dep, 24_811);
    }

    #[test]
    fn negative_sd_rejected() {
        let mut s = CohortSpec::desk();
        s.healthy.hue.sd = -0.1;
        assert!(generate_cohort(&s, 0).unwrap_err().to_string().contains("healthy.hue"));
    }

    #[test]
    fn diagnosis_splits_history() {
        let c = generate_cohort(&CohortSpec::desk(), 3).unwrap();
        for p in c.participants.iter().filter(|p| p.group == Group::Depressed) {
            let diag = p.diagnosis_date.unwrap();
            let own: Vec<_> = c.posts.iter().filter(|x| x.participant_id == p.id).collect();
            let before = own.iter().filter(|x| x.date() < diag).count() as f64 / own.len() as f64;
            assert!((0.2..=0.85).contains(&before), "{} {before}", p.id);
        }
    }

    #[test]
    fn latent_ratings_hit_rho() {
        let spec = RatingSpec { raters_per_post: 2, rater_pool: 10, rho: [0.4, 0.0, 1.0, 0.4], sd: [0.5; 4] };
        let posts: Vec<_> = (0..4000).map(|i| (format!("p{i}"), [2.5; 4])).collect();
        let r = latent_ratings(&posts, &spec, &mut ChaCha8Rng::seed_from_u64(1));
        let pair = |c: usize| -> (Vec<f64>, Vec<f64>) {
            r.chunks(2).map(|w| (w[0].values()[c], w[1].values()[c])).unzip()
        };
        let corr = |(x, y): (Vec<f64>, Vec<f64>)| {
            let n = x.len() as f64;
            let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            sxy / (sxx * syy).sqrt()
        };
        assert!((corr(pair(0)) - 0.4).abs() < 0.05);
        assert!(corr(pair(1)).abs() < 0.05);
        assert!((corr(pair(2)) - 1.0).abs() < 1e-12);
    }
}
