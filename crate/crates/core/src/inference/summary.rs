use std::io::Write;

use serde::{Deserialize, Serialize};

use super::diagnostics::{autocorrelation, gelman_rubin, geweke, hpd_interval, max_excluding_zero_level, mcse};
use super::{InferenceError, McmcChain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpdBand {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// `exp(mean)`.
    pub odds: f64,
    pub mcse: f64,
    pub hpd: Vec<HpdBand>,
    /// Highest grid level whose interval excludes zero.
    pub exclusion: Option<HpdBand>,
    /// `None` for a single chain.
    pub rhat: Option<f64>,
    /// Per chain; `None` when degenerate or too short.
    pub geweke_z: Vec<Option<f64>>,
    /// Pooled over chains at the lags in [`ACF_LAGS`].
    pub acf: Vec<f64>,
}

pub const ACF_LAGS: [usize; 5] = [1, 5, 10, 30, 50];
pub const HPD_LEVELS: [f64; 3] = [0.90, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub params: Vec<ParamSummary>,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub acceptance_rates: Vec<f64>,
}

impl PosteriorSummary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

/// Pooled mean, sd, HPD intervals, odds and diagnostics per parameter.
pub fn summarize_posterior(chains: &[McmcChain]) -> Result<PosteriorSummary, InferenceError> {
    let first = chains.first().ok_or(InferenceError::Chains)?;
    let n = first.len();
    if chains.iter().any(|c| c.len() != n || c.names != first.names) {
        return Err(InferenceError::Chains);
    }
    if n < 10 {
        return Err(InferenceError::TooFewSamples { need: 10, got: n });
    }
    let mut params = Vec::new();
    for (j, name) in first.names.iter().enumerate() {
        let per_chain: Vec<&[f64]> = chains.iter().map(|c| c.param(j)).collect();
        let pooled: Vec<f64> = per_chain.iter().flat_map(|c| c.iter().copied()).collect();
        let m = pooled.iter().sum::<f64>() / pooled.len() as f64;
        let sd = (pooled.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (pooled.len() - 1) as f64).sqrt();
        let hpd = HPD_LEVELS
            .iter()
            .map(|&level| hpd_interval(&pooled, level).map(|(lo, hi)| HpdBand { level, lo, hi }))
            .collect::<Result<_, _>>()?;
        let exclusion = max_excluding_zero_level(&pooled)?.map(|(level, (lo, hi))| HpdBand { level, lo, hi });
        let rhat = if chains.len() >= 2 { Some(gelman_rubin(&per_chain)?) } else { None };
        let geweke_z = per_chain.iter().map(|c| geweke(c, 0.1, 0.5).ok().and_then(|g| g.z)).collect();
        let max_lag = *ACF_LAGS.last().unwrap();
        let acf = if 2 * max_lag < n {
            let sums = per_chain.iter().map(|c| autocorrelation(c, max_lag)).collect::<Result<Vec<_>, _>>()?;
            ACF_LAGS.iter().map(|&k| sums.iter().map(|a| a[k]).sum::<f64>() / sums.len() as f64).collect()
        } else {
            Vec::new()
        };
        let chain_mcse: f64 = per_chain.iter().map(|c| mcse(c).powi(2)).sum::<f64>().sqrt() / chains.len() as f64;
        params.push(ParamSummary {
            name: name.clone(),
            mean: m,
            sd,
            odds: m.exp(),
            mcse: chain_mcse,
            hpd,
            exclusion,
            rhat,
            geweke_z,
            acf,
        });
    }
    Ok(PosteriorSummary {
        params,
        chains: chains.len(),
        draws_per_chain: n,
        acceptance_rates: chains.iter().map(|c| c.acceptance_rate).collect(),
    })
}

/// CSV with `chain`, `draw` and one column per parameter.
pub fn write_draws_csv<W: Write>(chains: &[McmcChain], w: W) -> Result<(), InferenceError> {
    let mut out = csv::Writer::from_writer(w);
    if let Some(c) = chains.first() {
        let mut header = vec!["chain".to_string(), "draw".to_string()];
        header.extend(c.names.iter().cloned());
        out.write_record(&header)?;
    }
    for (ci, c) in chains.iter().enumerate() {
        for (i, row) in c.draws.row_iter().enumerate() {
            let mut rec = vec![ci.to_string(), i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn chain(values: Vec<f64>) -> McmcChain {
        McmcChain { names: vec!["hue".into()], draws: DMatrix::from_vec(values.len(), 1, values), acceptance_rate: 0.3, seed: 0 }
    }

    #[test]
    fn constant_draws() {
        let s = summarize_posterior(&[chain(vec![0.325; 200])]).unwrap();
        let p = &s.params[0];
        assert!((p.mean - 0.325).abs() < 1e-12);
        assert!((p.odds - 1.384).abs() < 1e-3);
        assert_eq!(p.exclusion.unwrap().level, 0.99);
        assert_eq!(p.rhat, None);
        let z = summarize_posterior(&[chain(vec![0.0; 200])]).unwrap();
        assert_eq!(z.params[0].odds, 1.0);
    }

    #[test]
    fn identical_chains_pool_like_one() {
        let v: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 / 50.0 - 1.0).collect();
        let one = summarize_posterior(&[chain(v.clone())]).unwrap().params.remove(0);
        let two = summarize_posterior(&[chain(v.clone()), chain(v)]).unwrap().params.remove(0);
        assert!((one.mean - two.mean).abs() < 1e-12);
        assert_eq!(one.hpd, two.hpd);
        assert!((one.odds > 1.0) == (one.mean > 0.0));
    }

    #[test]
    fn draws_csv_shape() {
        let mut buf = Vec::new();
        write_draws_csv(&[chain(vec![1.0, 2.0]), chain(vec![3.0, 4.0])], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "chain,draw,hue\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n");
    }
}
