//! Monte Carlo backtest of the relative bias between realized and predicted
//! risk of noise-subband portfolios.
//!
//! Portfolios are fixed once from the exact model's eigenvectors. Every
//! trial samples an in-sample panel, cleans its empirical correlation, and
//! predicts Ω_p² = wᵀC_clean w; an independent out-of-sample panel of the
//! same model gives the realized Ω_r² = wᵀC_out w. The bias per trial is
//! δr = (Ω_r² − Ω_p²)/Ω_p².
//!
//! Trial i draws from `SimRng::for_trial(seed, i)`, in-sample panel first.
//! Trials run in parallel; results are summed in trial order.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clean::{clean_with, flat_value_rules, CleanOptions};
use super::risk::{assign_subbands, merge_subbands, portfolio_risk, subband_portfolio, Subband};
use crate::error::{Error, Result};
use crate::panel::{empirical_correlation, standardize, ReturnPanel};
use crate::simulate::{build_sampler, correlation_factor, SimConfig, SimRng};
use crate::spectral::eigendecompose;
use crate::structure::{expand_block_model, BlockModel, G23_MINUS, G23_PLUS};

pub const ALL_NOISE: &str = "all";
pub const MIN_TRIALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandMerge {
    pub name: String,
    pub parts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub t_in: usize,
    pub t_out: usize,
    pub trials: usize,
    pub seed: u64,
    /// Eigenpairs kept by the cleaning.
    pub k_signal: usize,
    /// Registered flat-value rule (`trace` or `sigma2`).
    pub flat_value: String,
    pub renormalize: bool,
    /// Registered sampler (`gaussian` or `stochvol`).
    pub sampler: String,
    pub nu: f64,
    /// Predict with the exact model matrix instead of the cleaned estimate.
    pub predict_with_model: bool,
    pub merges: Vec<SubbandMerge>,
}

impl BacktestConfig {
    /// Defaults for `m`: windows of 3N, 50 trials, one kept eigenpair per
    /// group, trace-preserving cleaning, Gaussian returns, and the two
    /// strongly correlated groups' subbands merged into `K23`.
    pub fn for_model(m: &BlockModel) -> Self {
        let n = m.n_assets();
        let names: Vec<&str> = m.groups().iter().map(|g| g.name.as_str()).collect();
        let merges = if names.contains(&G23_PLUS) && names.contains(&G23_MINUS) {
            vec![SubbandMerge {
                name: "K23".into(),
                parts: vec!["K23+".into(), "K23-".into()],
            }]
        } else {
            Vec::new()
        };
        Self {
            t_in: 3 * n,
            t_out: 3 * n,
            trials: 50,
            seed: 0,
            k_signal: m.groups().len(),
            flat_value: "trace".into(),
            renormalize: false,
            sampler: "gaussian".into(),
            nu: 3.0,
            predict_with_model: false,
            merges,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandSummary {
    pub name: String,
    pub size: usize,
    /// 1-based eigenvalue ranks of the exact model.
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBiasReport {
    pub subbands: Vec<SubbandSummary>,
    pub delta_r: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub delta_r_all: f64,
    pub stderr_all: f64,
    pub trials: usize,
    pub t_in: usize,
    pub t_out: usize,
    pub seed: u64,
    pub k_signal: usize,
    pub flat_value: String,
    pub sampler: String,
}

impl RiskBiasReport {
    pub fn delta(&self, subband: &str) -> Option<f64> {
        if subband == ALL_NOISE {
            return Some(self.delta_r_all);
        }
        self.delta_r.get(subband).copied()
    }

    pub fn stderr_of(&self, subband: &str) -> Option<f64> {
        if subband == ALL_NOISE {
            return Some(self.stderr_all);
        }
        self.stderr.get(subband).copied()
    }
}

/// Subbands of the exact model after the configured merges.
pub fn model_subbands(m: &BlockModel, merges: &[SubbandMerge]) -> Result<(crate::spectral::EigenSystem, Vec<Subband>)> {
    let es = eigendecompose(&expand_block_model(m))?;
    let mut subbands = assign_subbands(&es, &m.partition(), m.groups().len())?;
    for merge in merges {
        let parts: Vec<&str> = merge.parts.iter().map(String::as_str).collect();
        subbands = merge_subbands(&subbands, &merge.name, &parts)?;
    }
    Ok((es, subbands))
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let ss: f64 = xs.map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

pub fn risk_bias_backtest(m: &BlockModel, cfg: &BacktestConfig) -> Result<RiskBiasReport> {
    let n = m.n_assets();
    for (label, t) in [("t_in", cfg.t_in), ("t_out", cfg.t_out)] {
        if 4 * t < n || t < 2 {
            return Err(Error::InvalidParameter(format!(
                "{label} = {t} must be at least N/4 = {}",
                n.div_ceil(4)
            )));
        }
    }
    if cfg.trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {}",
            cfg.trials
        )));
    }
    let rules = flat_value_rules();
    let rule = rules.get(&cfg.flat_value)?;
    let sim = SimConfig {
        t_steps: cfg.t_in,
        nu: cfg.nu,
        seed: cfg.seed,
        mode: cfg.sampler.clone(),
    };
    let sampler = build_sampler(&sim)?;

    let model = expand_block_model(m);
    let factor = correlation_factor(&model)?;
    let (model_es, subbands) = model_subbands(m, &cfg.merges)?;
    let noise: Vec<usize> = (m.groups().len()..n).collect();
    let mut names: Vec<String> = subbands.iter().map(|s| s.name.clone()).collect();
    names.push(ALL_NOISE.to_string());
    let portfolios: Vec<DVector<f64>> = subbands
        .iter()
        .map(|s| subband_portfolio(&model_es, &s.members))
        .chain(std::iter::once(subband_portfolio(&model_es, &noise)))
        .collect::<Result<_>>()?;
    let weights = DMatrix::from_columns(&portfolios);
    let assets = model.assets().to_vec();
    let opts = CleanOptions {
        renormalize: cfg.renormalize,
    };

    let trial = |i: usize| -> Result<Vec<f64>> {
        let mut rng = SimRng::for_trial(cfg.seed, i);
        let x_in = ReturnPanel::with_index(assets.clone(), sampler.sample(&factor, cfg.t_in, &mut rng))?;
        let predicted: Vec<f64> = if cfg.predict_with_model {
            portfolios
                .iter()
                .map(|w| portfolio_risk(w, model.entries()))
                .collect::<Result<_>>()?
        } else {
            let es = eigendecompose(&empirical_correlation(&x_in)?)?;
            let cleaned = clean_with(&es, cfg.k_signal, rule, opts)?;
            portfolios
                .iter()
                .map(|w| portfolio_risk(w, cleaned.entries()))
                .collect::<Result<_>>()?
        };
        let y = ReturnPanel::with_index(assets.clone(), sampler.sample(&factor, cfg.t_out, &mut rng))?;
        // wᵀ C_out w = |Ŷw|²/T for the standardized out-of-sample panel Ŷ
        let proj = standardize(&y)?.values() * &weights;
        let t_out = cfg.t_out as f64;
        Ok(predicted
            .iter()
            .enumerate()
            .map(|(s, &p)| {
                let realized = proj.column(s).norm_squared() / t_out;
                (realized - p) / p
            })
            .collect())
    };
    let per_trial: Vec<Vec<f64>> = (0..cfg.trials)
        .into_par_iter()
        .map(trial)
        .collect::<Result<_>>()?;

    let mut delta_r = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    let mut all = (0.0, 0.0);
    for (s, name) in names.iter().enumerate() {
        let stats = mean_and_stderr(per_trial.iter().map(|row| row[s]));
        if name == ALL_NOISE {
            all = stats;
        } else {
            delta_r.insert(name.clone(), stats.0);
            stderr.insert(name.clone(), stats.1);
        }
    }
    Ok(RiskBiasReport {
        subbands: subbands
            .iter()
            .map(|s| SubbandSummary {
                name: s.name.clone(),
                size: s.members.len(),
                ranks: s.members.iter().map(|k| k + 1).collect(),
            })
            .collect(),
        delta_r,
        stderr,
        delta_r_all: all.0,
        stderr_all: all.1,
        trials: cfg.trials,
        t_in: cfg.t_in,
        t_out: cfg.t_out,
        seed: cfg.seed,
        k_signal: cfg.k_signal,
        flat_value: cfg.flat_value.clone(),
        sampler: cfg.sampler.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::BlockGroup;

    fn pure_noise(n: usize) -> BlockModel {
        BlockModel::new(
            vec![BlockGroup {
                name: "Gall".into(),
                degeneracy: n,
                rho: 0.0,
            }],
            vec![vec![0.0]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_short_windows_and_few_trials() {
        let m = pure_noise(40);
        let mut cfg = BacktestConfig::for_model(&m);
        cfg.t_in = 9;
        assert!(risk_bias_backtest(&m, &cfg).is_err());
        let mut cfg = BacktestConfig::for_model(&m);
        cfg.trials = 5;
        assert!(risk_bias_backtest(&m, &cfg).is_err());
        let mut cfg = BacktestConfig::for_model(&m);
        cfg.flat_value = "nope".into();
        assert!(matches!(risk_bias_backtest(&m, &cfg), Err(Error::UnknownStrategy { .. })));
    }

    #[test]
    fn pure_noise_is_unbiased() {
        let m = pure_noise(60);
        let mut cfg = BacktestConfig::for_model(&m);
        cfg.trials = 30;
        cfg.seed = 3;
        let r = risk_bias_backtest(&m, &cfg).unwrap();
        let d = r.delta("Kall").unwrap();
        let se = r.stderr_of("Kall").unwrap();
        assert!(d.abs() < 2.0 * se + 1e-12, "{d} ± {se}");
        assert!(r.delta_r_all.abs() < 2.0 * r.stderr_all + 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let m = pure_noise(30);
        let mut cfg = BacktestConfig::for_model(&m);
        cfg.trials = 10;
        cfg.seed = 9;
        assert_eq!(risk_bias_backtest(&m, &cfg).unwrap(), risk_bias_backtest(&m, &cfg).unwrap());
    }
}
