use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{InferenceError, LogitData, LogitSpec};
use crate::stats::chi2_upper_tail;

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Bernoulli log-likelihood under the logistic link.
pub fn log_likelihood(beta: &DVector<f64>, data: &LogitData) -> f64 {
    let eta = &data.x * beta;
    eta.iter().zip(data.y.iter()).map(|(&e, &y)| y * e - softplus(e)).sum()
}

/// Normalized log density of the normal prior.
pub(crate) fn log_prior(beta: &DVector<f64>, spec: &LogitSpec) -> f64 {
    let d = beta - &spec.b0;
    let quad = (spec.precision.clone() * &d).dot(&d);
    let log_det = match spec.precision.clone().cholesky() {
        Some(c) => 2.0 * c.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    };
    -0.5 * quad + 0.5 * log_det - 0.5 * spec.dim() as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Log-likelihood plus the normalized log prior.
pub fn log_posterior(beta: &DVector<f64>, data: &LogitData, spec: &LogitSpec) -> Result<f64, InferenceError> {
    spec.check(data.dim())?;
    if beta.len() != data.dim() {
        return Err(InferenceError::Dimension(format!("beta has {} entries, design {}", beta.len(), data.dim())));
    }
    Ok(log_likelihood(beta, data) + log_prior(beta, spec))
}

/// Gradient and information matrix `X'WX` of the log-likelihood.
fn score_and_information(beta: &DVector<f64>, data: &LogitData) -> (DVector<f64>, DMatrix<f64>) {
    let eta = &data.x * beta;
    let p = eta.map(sigmoid);
    let w = p.map(|v| v * (1.0 - v));
    let grad = data.x.tr_mul(&(&data.y - &p));
    let mut xw = data.x.clone();
    for mut col in xw.column_iter_mut() {
        col.component_mul_assign(&w);
    }
    (grad, data.x.tr_mul(&xw))
}

/// Names the first column that lies in the span of the earlier ones.
fn check_rank(data: &LogitData) -> Result<(), InferenceError> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for (j, col) in data.x.column_iter().enumerate() {
        let mut v: DVector<f64> = col.into_owned();
        let norm0 = v.norm();
        for q in &basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let norm = v.norm();
        if norm0 == 0.0 || norm <= 1e-9 * norm0 {
            return Err(InferenceError::RankDeficient(data.names[j].clone()));
        }
        basis.push(v / norm);
    }
    Ok(())
}

/// Newton ascent on `loglik - 0.5 (b - b0)' P (b - b0)`; `prior = None` gives the MLE.
/// Returns the optimum, the negative Hessian there, the iteration count and convergence.
pub(crate) fn newton(
    data: &LogitData,
    prior: Option<&LogitSpec>,
    max_iter: usize,
) -> (DVector<f64>, DMatrix<f64>, usize, bool) {
    let d = data.dim();
    let objective = |b: &DVector<f64>| {
        let ll = log_likelihood(b, data);
        match prior {
            Some(s) => {
                let r = b - &s.b0;
                ll - 0.5 * (s.precision.clone() * &r).dot(&r)
            }
            None => ll,
        }
    };
    let mut beta = DVector::zeros(d);
    let mut value = objective(&beta);
    for it in 0..max_iter {
        let (mut g, mut h) = score_and_information(&beta, data);
        if let Some(s) = prior {
            g -= &s.precision * (&beta - &s.b0);
            h += &s.precision;
        }
        if g.norm() < 1e-8 {
            return (beta, h, it, true);
        }
        let Some(chol) = h.clone().cholesky() else {
            return (beta, h, it, false);
        };
        let step = chol.solve(&g);
        let mut t = 1.0;
        loop {
            let cand = &beta + &step * t;
            let v = objective(&cand);
            if v >= value - 1e-12 * value.abs() || t < 1e-10 {
                beta = cand;
                value = v;
                break;
            }
            t *= 0.5;
        }
    }
    let (mut g, mut h) = score_and_information(&beta, data);
    if let Some(s) = prior {
        g -= &s.precision * (&beta - &s.b0);
        h += &s.precision;
    }
    let ok = g.norm() < 1e-8;
    (beta, h, max_iter, ok)
}

/// Posterior mode and the negative Hessian of the log posterior there.
pub fn posterior_mode(data: &LogitData, spec: &LogitSpec) -> Result<(DVector<f64>, DMatrix<f64>), InferenceError> {
    spec.check(data.dim())?;
    let (beta, h, _, ok) = newton(data, Some(spec), 200);
    if !ok {
        return Err(InferenceError::NoMode);
    }
    Ok((beta, h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub z: Vec<f64>,
    pub p_value: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub n_obs: usize,
    pub df_model: usize,
    pub df_resid: usize,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    /// McFadden: `1 - LL / LL_null`.
    pub pseudo_r2: f64,
    pub llr_p_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warning: Option<String>,
}

const Z_975: f64 = 1.959964;

/// Maximum-likelihood logit by IRLS. The first column is taken to be the
/// intercept when computing the null log-likelihood.
pub fn fit_logit_mle(data: &LogitData) -> Result<FreqFit, InferenceError> {
    let n = data.nobs();
    let k = data.dim();
    let ones = data.y.sum();
    if ones == 0.0 || ones == n as f64 {
        return Err(InferenceError::SingleClass);
    }
    check_rank(data)?;
    let (beta, info, iterations, mut converged) = newton(data, None, 100);
    let mut warning = None;
    if beta.amax() > 30.0 {
        converged = false;
    }
    if !converged {
        warning = Some("maximum likelihood did not converge; the classes may be perfectly separated".into());
    }
    let cov = info.clone().try_inverse().ok_or(InferenceError::NotPositiveDefinite("information matrix"))?;
    let std_err: Vec<f64> = cov.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
    let coef: Vec<f64> = beta.iter().copied().collect();
    let z: Vec<f64> = coef.iter().zip(&std_err).map(|(c, s)| c / s).collect();
    let normal = Normal::standard();
    let p_value = z.iter().map(|z| 2.0 * normal.sf(z.abs())).collect();
    let ll = log_likelihood(&beta, data);
    let pbar = ones / n as f64;
    let ll0 = ones * pbar.ln() + (n as f64 - ones) * (1.0 - pbar).ln();
    let df_model = k - 1;
    Ok(FreqFit {
        names: data.names.clone(),
        ci_low: coef.iter().zip(&std_err).map(|(c, s)| c - Z_975 * s).collect(),
        ci_high: coef.iter().zip(&std_err).map(|(c, s)| c + Z_975 * s).collect(),
        coef,
        std_err,
        z,
        p_value,
        n_obs: n,
        df_model,
        df_resid: n - k,
        log_likelihood: ll,
        null_log_likelihood: ll0,
        pseudo_r2: 1.0 - ll / ll0,
        llr_p_value: if df_model == 0 { 1.0 } else { chi2_upper_tail((2.0 * (ll - ll0)).max(0.0), df_model as f64) },
        converged,
        iterations,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn data(x: &[f64], y: &[f64], cols: usize) -> LogitData {
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        LogitData::new(DMatrix::from_row_slice(y.len(), cols, x), y.to_vec(), names).unwrap()
    }

    #[test]
    fn single_observation_loglik() {
        let d = data(&[1.0], &[1.0], 1);
        let ll = log_likelihood(&DVector::from_vec(vec![3f64.ln()]), &d);
        assert_relative_eq!(ll, 0.75f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn zero_beta_is_half() {
        let d = data(&[1.0, 0.3, 1.0, -2.0, 1.0, 5.0], &[1.0, 0.0, 1.0], 2);
        let spec = LogitSpec::default_for(2);
        let b = DVector::zeros(2);
        let lp = log_posterior(&b, &d, &spec).unwrap();
        let prior = 1e-4f64.ln() - (2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(lp, 3.0 * 0.5f64.ln() + prior, epsilon = 1e-12);
    }

    #[test]
    fn extreme_linear_predictor_is_finite() {
        let d = data(&[1000.0, -1000.0], &[1.0, 0.0], 1);
        let ll = log_likelihood(&DVector::from_vec(vec![1.0]), &d);
        assert!(ll.is_finite() && ll.abs() < 1e-300);
        let bad = data(&[1000.0], &[0.0], 1);
        assert_relative_eq!(log_likelihood(&DVector::from_vec(vec![1.0]), &bad), -1000.0);
    }

    #[test]
    fn intercept_only_balanced() {
        let y: Vec<f64> = (0..50).map(|i| f64::from(i % 2)).collect();
        let fit = fit_logit_mle(&data(&vec![1.0; 50], &y, 1)).unwrap();
        assert!(fit.coef[0].abs() < 1e-8 && fit.converged);
        assert_eq!(fit.llr_p_value, 1.0);
    }

    #[test]
    fn duplicated_column_named() {
        let x: Vec<f64> = (0..20).flat_map(|i| [1.0, i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from(i % 3 == 0)).collect();
        match fit_logit_mle(&data(&x, &y, 3)) {
            Err(InferenceError::RankDeficient(c)) => assert_eq!(c, "x2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn separation_flagged() {
        let x: Vec<f64> = (0..20).flat_map(|i| [1.0, i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from(i >= 10)).collect();
        let fit = fit_logit_mle(&data(&x, &y, 2)).unwrap();
        assert!(!fit.converged && fit.warning.is_some());
    }

    #[test]
    fn output_identities() {
        let x: Vec<f64> = (0..40).flat_map(|i| [1.0, (i as f64 * 0.37).sin()]).collect();
        let y: Vec<f64> = (0..40).map(|i| f64::from((i * 7) % 5 < 2)).collect();
        let fit = fit_logit_mle(&data(&x, &y, 2)).unwrap();
        assert_relative_eq!(fit.pseudo_r2, 1.0 - fit.log_likelihood / fit.null_log_likelihood);
        for j in 0..2 {
            assert_relative_eq!(fit.ci_high[j], fit.coef[j] + 1.959964 * fit.std_err[j]);
        }
    }
}
