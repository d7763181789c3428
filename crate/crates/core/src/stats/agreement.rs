use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correlation::{correlation_p_value, pearson_r};
use super::StatsError;
use crate::cohort::{Rating, RATING_CATEGORIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAgreement {
    pub category: String,
    /// Mean of the per-fold correlations.
    pub r: f64,
    /// p-value of the mean r over `photos` pairs.
    pub p_value: f64,
    pub fold_r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub categories: Vec<CategoryAgreement>,
    pub photos: usize,
    /// Photos with fewer than two raters.
    pub excluded: usize,
    pub folds: usize,
}

/// For each fold, picks two of each photo's raters at random and correlates
/// the two resulting score vectors per category; correlations are averaged
/// over folds.
pub fn interrater_agreement(ratings: &[Rating], n_folds: usize, seed: u64) -> Result<AgreementReport, StatsError> {
    if n_folds == 0 {
        return Err(StatsError::Invalid("n_folds must be at least 1".into()));
    }
    let mut by_photo: BTreeMap<&str, Vec<[f64; 4]>> = BTreeMap::new();
    for r in ratings {
        by_photo.entry(r.post_id.as_str()).or_default().push(r.values());
    }
    let total = by_photo.len();
    let photos: Vec<&Vec<[f64; 4]>> = by_photo.values().filter(|v| v.len() >= 2).collect();
    if photos.len() < 3 {
        return Err(StatsError::Invalid(format!("{} photos have two or more raters; need at least 3", photos.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_r = vec![Vec::with_capacity(n_folds); 4];
    for _ in 0..n_folds {
        let mut a = vec![Vec::with_capacity(photos.len()); 4];
        let mut b = vec![Vec::with_capacity(photos.len()); 4];
        for raters in &photos {
            let pick = rand::seq::index::sample(&mut rng, raters.len(), 2);
            let (x, y) = (raters[pick.index(0)], raters[pick.index(1)]);
            for c in 0..4 {
                a[c].push(x[c]);
                b[c].push(y[c]);
            }
        }
        for c in 0..4 {
            fold_r[c].push(pearson_r(&a[c], &b[c])?.r);
        }
    }
    let categories = RATING_CATEGORIES
        .iter()
        .zip(fold_r)
        .map(|(name, rs)| {
            let r = rs.iter().sum::<f64>() / rs.len() as f64;
            CategoryAgreement { category: name.to_string(), r, p_value: correlation_p_value(r, photos.len()), fold_r: rs }
        })
        .collect();
    Ok(AgreementReport { categories, photos: photos.len(), excluded: total - photos.len(), folds: n_folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rating(post: usize, rater: usize, v: f64) -> Rating {
        Rating { post_id: format!("p{post}"), rater_id: format!("r{rater}"), happy: v, sad: v / 2.0, likable: 5.0 - v, interesting: v }
    }

    #[test]
    fn identical_raters_agree_perfectly() {
        let r: Vec<Rating> = (0..30).flat_map(|p| (0..3).map(move |k| rating(p, k, (p % 6) as f64 * 0.7))).collect();
        let mut with_single = r.clone();
        with_single.push(rating(99, 0, 1.0));
        let rep = interrater_agreement(&with_single, 5, 1).unwrap();
        assert!(rep.categories.iter().all(|c| (c.r - 1.0).abs() < 1e-12));
        assert_eq!((rep.photos, rep.excluded), (30, 1));
    }

    #[test]
    fn no_pairs_is_an_error() {
        assert!(interrater_agreement(&[rating(0, 0, 1.0)], 5, 1).is_err());
    }
}
