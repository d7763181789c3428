use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logit::{log_likelihood, log_prior, posterior_mode, sigmoid};
use super::{InferenceError, LogitData, LogitSpec, McmcChain};

/// Laplace approximation to the log marginal likelihood:
/// `log p(D|m) + log p(m) + d/2 ln 2pi - 1/2 ln det H` at the posterior mode `m`.
pub fn log_marginal_laplace(data: &LogitData, spec: &LogitSpec) -> Result<f64, InferenceError> {
    let (mode, h) = posterior_mode(data, spec)?;
    let chol = h.cholesky().ok_or(InferenceError::NotPositiveDefinite("negative Hessian at the mode"))?;
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let d = data.dim() as f64;
    Ok(log_likelihood(&mode, data) + log_prior(&mode, spec) + 0.5 * d * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * log_det)
}

/// Evidence bands for a Bayes factor; each band includes its lower edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JeffreysBand {
    Negative,
    BarelyWorthMentioning,
    Substantial,
    Strong,
    VeryStrong,
    Decisive,
}

impl JeffreysBand {
    pub fn from_k(k: f64) -> Self {
        Self::from_log10(k.log10(), Some(k))
    }

    fn from_log10(log10_k: f64, k: Option<f64>) -> Self {
        let edges = [1.0, 10f64.sqrt(), 10.0, 10f64.powf(1.5), 100.0];
        let bands = [Self::BarelyWorthMentioning, Self::Substantial, Self::Strong, Self::VeryStrong, Self::Decisive];
        let mut band = Self::Negative;
        for (edge, b) in edges.iter().zip(bands) {
            let above = match k.filter(|k| k.is_finite() && *k > 0.0) {
                Some(k) => k >= *edge,
                None => log10_k >= edge.log10(),
            };
            if above {
                band = b;
            }
        }
        band
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Negative => "Negative",
            Self::BarelyWorthMentioning => "Barely worth mentioning",
            Self::Substantial => "Substantial",
            Self::Strong => "Strong",
            Self::VeryStrong => "Very strong",
            Self::Decisive => "Decisive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorResult {
    pub log_marginal_full: f64,
    pub log_marginal_null: f64,
    pub log_k: f64,
    /// May be infinite when `log_k` is large; `log_k` stays exact.
    #[serde(rename = "K", deserialize_with = "infinite_if_null")]
    pub k: f64,
    pub band: JeffreysBand,
    pub label: String,
}

// JSON writes an infinite K as null.
fn infinite_if_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// `K = exp(log m_full - log m_null)` with its evidence band.
pub fn bayes_factor(log_marginal_full: f64, log_marginal_null: f64) -> BayesFactorResult {
    let log_k = log_marginal_full - log_marginal_null;
    let k = log_k.exp();
    let band = JeffreysBand::from_log10(log_k / std::f64::consts::LN_10, Some(k));
    BayesFactorResult { log_marginal_full, log_marginal_null, log_k, k, band, label: band.label().to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcResult {
    pub p_value: f64,
    pub observed_proportion: f64,
    pub replicated_proportion: f64,
    pub replicates: usize,
}

/// Fraction of posterior replicates whose proportion of positive outcomes is at
/// least the observed proportion. Each replicate draws one coefficient vector
/// from the pooled chains.
pub fn posterior_predictive_pvalue(
    chains: &[McmcChain],
    data: &LogitData,
    n_rep: usize,
    seed: u64,
) -> Result<PpcResult, InferenceError> {
    let total: usize = chains.iter().map(McmcChain::len).sum();
    if total == 0 || n_rep == 0 {
        return Err(InferenceError::TooFewSamples { need: 1, got: total.min(n_rep) });
    }
    let n = data.nobs() as f64;
    let observed = data.y.sum() / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    let mut rep_sum = 0.0;
    for _ in 0..n_rep {
        let mut idx = rng.random_range(0..total);
        let chain = chains.iter().find(|c| {
            if idx < c.len() {
                true
            } else {
                idx -= c.len();
                false
            }
        });
        let beta = chain.expect("index within pooled draws").draws.row(idx).transpose();
        let eta = &data.x * beta;
        let ones = eta.iter().filter(|&&e| rng.random::<f64>() < sigmoid(e)).count() as f64;
        let prop = ones / n;
        rep_sum += prop;
        hits += usize::from(prop >= observed);
    }
    Ok(PpcResult {
        p_value: hits as f64 / n_rep as f64,
        observed_proportion: observed,
        replicated_proportion: rep_sum / n_rep as f64,
        replicates: n_rep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn jeffreys_bands() {
        assert_eq!(JeffreysBand::from_k(157.5), JeffreysBand::Decisive);
        assert_eq!(JeffreysBand::from_k(20.0), JeffreysBand::Strong);
        assert_eq!(JeffreysBand::from_k(1.0), JeffreysBand::BarelyWorthMentioning);
        assert_eq!(JeffreysBand::from_k(100.0), JeffreysBand::Decisive);
        assert_eq!(JeffreysBand::from_k(10.0), JeffreysBand::Strong);
        assert_eq!(JeffreysBand::from_k(0.5), JeffreysBand::Negative);
        assert_eq!(bayes_factor(3.0, 3.0).label, "Barely worth mentioning");
        assert_eq!(bayes_factor(5000.0, 0.0).band, JeffreysBand::Decisive);
    }

    #[test]
    fn bayes_factor_reciprocal() {
        let ab = bayes_factor(-1234.5, -1240.25);
        let ba = bayes_factor(-1240.25, -1234.5);
        assert!((ab.log_k + ba.log_k).abs() < 1e-12);
        assert_eq!(bayes_factor(-7.0, -7.0).k, 1.0);
    }

    fn one_param(n: usize, ones: usize) -> LogitData {
        let y = (0..n).map(|i| f64::from(i < ones)).collect();
        LogitData::new(DMatrix::from_element(n, 1, 1.0), y, vec!["intercept".into()]).unwrap()
    }

    #[test]
    fn laplace_matches_quadrature_one_dim() {
        let data = one_param(2000, 700);
        let spec = LogitSpec::default_for(1);
        let laplace = log_marginal_laplace(&data, &spec).unwrap();
        // Trapezoid rule in log space around the mode.
        let f = |b: f64| {
            let beta = nalgebra::DVector::from_vec(vec![b]);
            log_likelihood(&beta, &data) + log_prior(&beta, &spec)
        };
        let (lo, hi, steps) = (-1.5, 0.3, 20_000);
        let h = (hi - lo) / steps as f64;
        let vals: Vec<f64> = (0..=steps).map(|i| f(lo + i as f64 * h)).collect();
        let m = vals.iter().cloned().fold(f64::MIN, f64::max);
        let s: f64 = vals.iter().enumerate().map(|(i, v)| {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * (v - m).exp()
        }).sum();
        let quad = m + (s * h).ln();
        assert!((laplace - quad).abs() < 0.1, "{laplace} vs {quad}");
        assert_eq!(laplace, log_marginal_laplace(&data, &spec).unwrap());
    }

    fn fixed_chain(value: f64) -> McmcChain {
        McmcChain { names: vec!["intercept".into()], draws: DMatrix::from_element(50, 1, value), acceptance_rate: 0.0, seed: 0 }
    }

    #[test]
    fn ppc_degenerate_cases() {
        let data = one_param(100, 50);
        assert_eq!(posterior_predictive_pvalue(&[fixed_chain(800.0)], &data, 200, 1).unwrap().p_value, 1.0);
        assert_eq!(posterior_predictive_pvalue(&[fixed_chain(-800.0)], &data, 200, 1).unwrap().p_value, 0.0);
    }
}
