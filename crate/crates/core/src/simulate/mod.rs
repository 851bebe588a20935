//! Synthetic return panels.

mod rng;
mod sampler;

use nalgebra::DMatrix;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use rng::SimRng;
pub use sampler::{
    build_sampler, correlation_factor, sampler_registry, CorrelationFactor, GaussianSampler,
    ReturnSampler, SamplerFactory, StochVolSampler,
};

use crate::error::{Error, Result};
use crate::panel::{CorrelationMatrix, ReturnPanel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_steps: usize,
    /// Tail index of the inverse-gamma volatility mixing.
    pub nu: f64,
    pub seed: u64,
    /// Registered sampler name (`gaussian` or `stochvol`).
    pub mode: String,
}

impl SimConfig {
    pub fn new(t_steps: usize, nu: f64, seed: u64, mode: impl Into<String>) -> Result<Self> {
        if t_steps < 2 {
            return Err(Error::TooFewRows { rows: t_steps, min: 2 });
        }
        if !(nu > 2.0) {
            return Err(Error::InvalidNu(nu));
        }
        Ok(Self {
            t_steps,
            nu,
            seed,
            mode: mode.into(),
        })
    }
}

/// Samples a panel from `c` with the configured sampler on stream 0.
pub fn simulate_panel(c: &CorrelationMatrix, cfg: &SimConfig) -> Result<ReturnPanel> {
    let sampler = build_sampler(cfg)?;
    let factor = correlation_factor(c)?;
    let mut rng = SimRng::new(cfg.seed, 0);
    let values = sampler.sample(&factor, cfg.t_steps, &mut rng);
    ReturnPanel::with_index(c.assets().to_vec(), values)
}

pub fn gaussian_panel(c: &CorrelationMatrix, t: usize, seed: u64) -> Result<ReturnPanel> {
    simulate_panel(c, &SimConfig::new(t, f64::INFINITY, seed, "gaussian")?)
}

pub fn stochvol_panel(c: &CorrelationMatrix, cfg: &SimConfig) -> Result<ReturnPanel> {
    if !(cfg.nu > 2.0 && cfg.nu.is_finite()) {
        return Err(Error::InvalidNu(cfg.nu));
    }
    let cfg = SimConfig {
        mode: "stochvol".into(),
        ..cfg.clone()
    };
    simulate_panel(c, &cfg)
}

/// I.i.d. standard normal n-asset panel of length t.
pub fn mp_null_panel(n: usize, t: usize, seed: u64) -> Result<ReturnPanel> {
    let mut rng = SimRng::new(seed, 0);
    let data: Vec<f64> = (0..t * n).map(|_| rng.sample(&StandardNormal)).collect();
    let assets = (0..n).map(|i| format!("A{i}")).collect();
    ReturnPanel::with_index(assets, DMatrix::from_row_slice(t, n, &data))
}

/// Hill estimate of the tail index from the k largest |x|.
pub fn hill_estimator(x: &[f64], k: usize) -> Result<f64> {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    if k == 0 || k >= a.len() {
        return Err(Error::InvalidParameter(format!(
            "Hill estimator needs 0 < k < {}, got {k}",
            a.len()
        )));
    }
    a.sort_by(|p, q| q.total_cmp(p));
    let threshold = a[k];
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter("Hill threshold is zero".into()));
    }
    let s: f64 = a[..k].iter().map(|v| (v / threshold).ln()).sum();
    Ok(k as f64 / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::empirical_correlation;
    use approx::assert_abs_diff_eq;

    fn rho_pair(r: f64) -> CorrelationMatrix {
        CorrelationMatrix::from_entries(DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0])).unwrap()
    }

    #[test]
    fn factor_of_identity_and_pair() {
        let f = correlation_factor(&CorrelationMatrix::from_entries(DMatrix::identity(3, 3)).unwrap()).unwrap();
        assert_eq!(f.lower(), &DMatrix::<f64>::identity(3, 3));
        let f = correlation_factor(&rho_pair(0.5)).unwrap();
        let l = f.lower();
        assert_abs_diff_eq!(l[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(0, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)], 0.75f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn factor_rejects_indefinite() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let c = CorrelationMatrix::from_entries(m).unwrap();
        assert!(matches!(correlation_factor(&c), Err(Error::NotPositiveDefinite(v)) if v < 0.0));
    }

    #[test]
    fn same_seed_same_panel() {
        let c = rho_pair(0.3);
        let a = gaussian_panel(&c, 50, 11).unwrap();
        let b = gaussian_panel(&c, 50, 11).unwrap();
        let d = gaussian_panel(&c, 50, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, d);
        let cfg = SimConfig::new(50, 3.0, 5, "stochvol").unwrap();
        assert_eq!(stochvol_panel(&c, &cfg).unwrap(), stochvol_panel(&c, &cfg).unwrap());
        assert_eq!(mp_null_panel(3, 20, 1).unwrap(), mp_null_panel(3, 20, 1).unwrap());
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(SimConfig::new(10, 2.0, 0, "stochvol"), Err(Error::InvalidNu(_))));
        assert!(SimConfig::new(1, 3.0, 0, "gaussian").is_err());
        let cfg = SimConfig::new(10, 3.0, 0, "lognormal").unwrap();
        assert!(matches!(
            simulate_panel(&rho_pair(0.1), &cfg),
            Err(Error::UnknownStrategy { .. })
        ));
        assert!(StochVolSampler::new(1.5).is_err());
    }

    #[test]
    fn gaussian_pair_correlation_converges() {
        let p = gaussian_panel(&rho_pair(0.5), 20_000, 3).unwrap();
        let c = empirical_correlation(&p).unwrap();
        assert!((c.entries()[(0, 1)] - 0.5).abs() < 0.03);
    }

    #[test]
    fn hill_on_exact_pareto() {
        // Pareto(α = 2) quantiles: x_i = (i/n)^(-1/2)
        let n = 100_000;
        let x: Vec<f64> = (1..=n).map(|i| (i as f64 / n as f64).powf(-0.5)).collect();
        let alpha = hill_estimator(&x, 1000).unwrap();
        assert!((alpha - 2.0).abs() < 0.05, "{alpha}");
        assert!(hill_estimator(&x, 0).is_err());
    }
}
