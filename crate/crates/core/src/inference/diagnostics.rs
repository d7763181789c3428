use serde::{Deserialize, Serialize};

use super::InferenceError;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Shortest interval covering `ceil(level * n)` sorted samples; ties go to the
/// lowest start.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<(f64, f64), InferenceError> {
    if samples.len() < 10 {
        return Err(InferenceError::TooFewSamples { need: 10, got: samples.len() });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(InferenceError::Config(format!("HPD level {level} outside (0, 1)")));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(hpd_sorted(&s, level))
}

fn window(n: usize, level: f64) -> usize {
    // Tolerance keeps 0.95 * 100 from rounding up to 96.
    ((level * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

pub(crate) fn hpd_sorted(s: &[f64], level: f64) -> (f64, f64) {
    let m = window(s.len(), level);
    let mut best = 0;
    let mut width = f64::INFINITY;
    for i in 0..=s.len() - m {
        let w = s[i + m - 1] - s[i];
        if w < width {
            width = w;
            best = i;
        }
    }
    (s[best], s[best + m - 1])
}

/// Levels tried by [`max_excluding_zero_level`]: .30 to .95 by .05, then .99.
pub const HPD_LEVEL_GRID: [f64; 15] =
    [0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.99];

/// Largest grid level whose HPD interval excludes zero, with that interval.
/// `None` when every level's interval contains zero.
pub fn max_excluding_zero_level(samples: &[f64]) -> Result<Option<(f64, (f64, f64))>, InferenceError> {
    if samples.len() < 10 {
        return Err(InferenceError::TooFewSamples { need: 10, got: samples.len() });
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(HPD_LEVEL_GRID.iter().rev().find_map(|&level| {
        let (lo, hi) = hpd_sorted(&s, level);
        (lo > 0.0 || hi < 0.0).then_some((level, (lo, hi)))
    }))
}

/// Potential scale reduction without the degrees-of-freedom correction:
/// `sqrt(((n-1)/n W + B/n) / W)`.
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<f64, InferenceError> {
    let n = chains.first().map_or(0, |c| c.len());
    if chains.len() < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(InferenceError::Chains);
    }
    if n < 10 {
        return Err(InferenceError::TooFewSamples { need: 10, got: n });
    }
    let w = chains.iter().map(|c| sample_var(c)).sum::<f64>() / chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b_over_n = sample_var(&means);
    let nf = n as f64;
    Ok((((nf - 1.0) / nf * w + b_over_n) / w).sqrt())
}

/// Variance of a segment mean from non-overlapping batch means.
fn batch_mean_var(x: &[f64], batches: usize) -> f64 {
    let b = batches.min(x.len());
    let size = x.len() / b;
    let means: Vec<f64> = (0..b).map(|i| mean(&x[i * size..(i + 1) * size])).collect();
    sample_var(&means) / b as f64
}

/// Monte-Carlo standard error of the mean by batch means with `floor(sqrt(n))` batches.
pub fn mcse(x: &[f64]) -> f64 {
    let b = ((x.len() as f64).sqrt() as usize).max(2);
    batch_mean_var(x, b).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GewekeResult {
    /// `None` when both segment variances are zero.
    pub z: Option<f64>,
    pub first_mean: f64,
    pub last_mean: f64,
}

/// Compares the means of the first and last fractions of a chain, each
/// segment's variance estimated from 20 batch means.
pub fn geweke(chain: &[f64], first: f64, last: f64) -> Result<GewekeResult, InferenceError> {
    if chain.len() < 100 {
        return Err(InferenceError::TooFewSamples { need: 100, got: chain.len() });
    }
    if !(first > 0.0 && last > 0.0 && first + last <= 1.0) {
        return Err(InferenceError::Config(format!("Geweke fractions {first}, {last}")));
    }
    let n = chain.len();
    let a = &chain[..((first * n as f64) as usize).max(2)];
    let b = &chain[n - ((last * n as f64) as usize).max(2)..];
    let (ma, mb) = (mean(a), mean(b));
    let v = batch_mean_var(a, 20) + batch_mean_var(b, 20);
    let z = if v > 0.0 {
        Some((ma - mb) / v.sqrt())
    } else if ma == mb {
        None
    } else {
        Some(f64::INFINITY.copysign(ma - mb))
    };
    Ok(GewekeResult { z, first_mean: ma, last_mean: mb })
}

/// Biased autocorrelation estimates for lags `0..=max_lag`.
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Result<Vec<f64>, InferenceError> {
    let n = chain.len();
    if 2 * max_lag >= n {
        return Err(InferenceError::TooFewSamples { need: 2 * max_lag + 1, got: n });
    }
    let m = mean(chain);
    let c: Vec<f64> = chain.iter().map(|v| v - m).collect();
    let c0: f64 = c.iter().map(|v| v * v).sum();
    Ok((0..=max_lag)
        .map(|k| match k {
            0 => 1.0,
            _ if c0 == 0.0 => 0.0,
            _ => c.iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c0,
        })
        .collect())
}
