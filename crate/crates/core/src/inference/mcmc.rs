use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logit::{log_likelihood, log_prior, newton};
use super::{InferenceError, LogitData, LogitSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcConfig {
    pub chains: usize,
    /// Total iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { chains: 2, iterations: 100_000, burn_in: 10_000, thin: 1, seed: 0 }
    }
}

impl McmcConfig {
    /// 20,000 iterations with a 2,000 burn-in: quick enough for a laptop run.
    pub fn desk(seed: u64) -> Self {
        Self { chains: 2, iterations: 20_000, burn_in: 2_000, thin: 1, seed }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.chains == 0 || self.thin == 0 {
            return Err(InferenceError::Config("chains and thin must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(InferenceError::Config(format!(
                "burn_in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcChain {
    pub names: Vec<String>,
    /// Retained draws, one row per draw.
    pub draws: DMatrix<f64>,
    /// Accepted proposals over all iterations, burn-in included.
    pub acceptance_rate: f64,
    pub seed: u64,
}

impl McmcChain {
    pub fn param(&self, j: usize) -> &[f64] {
        let n = self.draws.nrows();
        &self.draws.as_slice()[j * n..(j + 1) * n]
    }

    pub fn len(&self) -> usize {
        self.draws.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.nrows() == 0
    }
}

/// Random-walk Metropolis on an arbitrary log density with proposal `start + L z`.
pub(crate) fn random_walk<F: Fn(&DVector<f64>) -> f64>(
    log_target: F,
    start: DVector<f64>,
    chol: &DMatrix<f64>,
    config: &McmcConfig,
    rng: &mut ChaCha8Rng,
) -> (DMatrix<f64>, f64) {
    let d = start.len();
    let mut out = Vec::with_capacity(config.retained() * d);
    let mut current = start;
    let mut current_lp = log_target(&current);
    let mut accepted = 0usize;
    let mut z = DVector::zeros(d);
    for i in 0..config.iterations {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let proposal = &current + chol * &z;
        let lp = log_target(&proposal);
        let u: f64 = rand::Rng::random(rng);
        if u.ln() < lp - current_lp {
            current = proposal;
            current_lp = lp;
            accepted += 1;
        }
        if i >= config.burn_in && (i - config.burn_in + 1) % config.thin == 0 {
            out.extend(current.iter());
        }
    }
    let n = out.len() / d;
    (DMatrix::from_row_slice(n, d, &out), accepted as f64 / config.iterations as f64)
}

/// Runs `config.chains` independent chains, seeded `seed + chain_index`.
///
/// The proposal covariance is `(2.38^2 / d)` times the inverse information at
/// the MLE. Each chain starts at the MLE plus a draw from twice that spread.
pub fn run_metropolis(data: &LogitData, spec: &LogitSpec, config: &McmcConfig) -> Result<Vec<McmcChain>, InferenceError> {
    config.validate()?;
    spec.check(data.dim())?;
    let (mle, info, _, converged) = newton(data, None, 100);
    if !converged {
        return Err(InferenceError::NoMode);
    }
    let cov = info.try_inverse().ok_or(InferenceError::NotPositiveDefinite("information matrix"))?;
    let d = data.dim();
    let scaled = cov * (2.38f64.powi(2) / d as f64);
    let chol = match scaled.clone().cholesky() {
        Some(c) => c.l(),
        None => (scaled + DMatrix::identity(d, d) * 1e-8)
            .cholesky()
            .ok_or(InferenceError::NotPositiveDefinite("proposal covariance"))?
            .l(),
    };
    let start_spread = &chol * (2.0 * (d as f64).sqrt() / 2.38);

    let target = |b: &DVector<f64>| log_likelihood(b, data) + log_prior(b, spec);
    Ok((0..config.chains)
        .into_par_iter()
        .map(|c| {
            let seed = config.seed.wrapping_add(c as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let start = &mle + &start_spread * z;
            let (draws, acceptance_rate) = random_walk(target, start, &chol, config, &mut rng);
            McmcChain { names: data.names.clone(), draws, acceptance_rate, seed }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_target() {
        let cfg = McmcConfig { chains: 1, iterations: 210_000, burn_in: 10_000, thin: 1, seed: 11 };
        let chol = DMatrix::from_element(1, 1, 2.4);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (draws, acc) = random_walk(|b| -0.5 * b[0] * b[0], DVector::zeros(1), &chol, &cfg, &mut rng);
        let n = draws.nrows() as f64;
        let mean = draws.sum() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert_eq!(draws.nrows(), 200_000);
        assert!(mean.abs() < 0.02, "{mean}");
        assert!((var - 1.0).abs() < 0.05, "{var}");
        assert!((0.1..0.7).contains(&acc));
    }

    #[test]
    fn draw_count_with_thinning() {
        let cfg = McmcConfig { chains: 1, iterations: 1000, burn_in: 100, thin: 3, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (draws, _) = random_walk(|b| -0.5 * b[0] * b[0], DVector::zeros(1), &DMatrix::identity(1, 1), &cfg, &mut rng);
        assert_eq!(draws.nrows(), cfg.retained());
        assert!(McmcConfig { burn_in: 1000, ..cfg }.validate().is_err());
    }

    fn balanced(n: usize) -> LogitData {
        let y = (0..n).map(|i| f64::from(i % 2 == 0)).collect();
        LogitData::new(DMatrix::from_element(n, 1, 1.0), y, vec!["intercept".into()]).unwrap()
    }

    #[test]
    fn intercept_only_centred_and_seeded() {
        let data = balanced(400);
        let spec = LogitSpec::default_for(1);
        let cfg = McmcConfig { chains: 2, iterations: 20_000, burn_in: 1_000, thin: 1, seed: 5 };
        let a = run_metropolis(&data, &spec, &cfg).unwrap();
        let b = run_metropolis(&data, &spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].draws, a[1].draws);
        for c in &a {
            let m = c.param(0).iter().sum::<f64>() / c.len() as f64;
            assert!(m.abs() < 0.05, "{m}");
        }
    }
}
