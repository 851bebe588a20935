//! Return samplers.
//!
//! Every sampler produces rows x_t = s_t·L·z_t with z_t standard normal and
//! L the Cholesky factor of the target correlation. The Gaussian sampler
//! uses s_t = 1. The stochastic-volatility sampler draws one common variance
//! s_t² per time step from an inverse-gamma law with shape ν/2 and scale
//! (ν−2)/2, so E[s_t²] = 1 and every marginal is a unit-variance Student-t
//! with ν degrees of freedom.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Gamma, StandardNormal};

use super::rng::SimRng;
use super::SimConfig;
use crate::error::{Error, Result};
use crate::panel::CorrelationMatrix;
use crate::registry::Registry;
use crate::spectral::symmetric_eigenvalues;

/// Lower-triangular L with L·Lᵀ = C.
#[derive(Debug, Clone)]
pub struct CorrelationFactor {
    assets: Vec<String>,
    lower: DMatrix<f64>,
    upper: DMatrix<f64>,
}

impl CorrelationFactor {
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Z·Lᵀ: maps i.i.d. standard normal rows to correlated rows.
    pub fn correlate(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        z * &self.upper
    }
}

pub fn correlation_factor(c: &CorrelationMatrix) -> Result<CorrelationFactor> {
    let chol = c.entries().clone().cholesky().ok_or_else(|| {
        let min = symmetric_eigenvalues(c.entries()).last().copied().unwrap_or(f64::NAN);
        Error::NotPositiveDefinite(min)
    })?;
    let lower = chol.unpack();
    let upper = lower.transpose();
    Ok(CorrelationFactor {
        assets: c.assets().to_vec(),
        lower,
        upper,
    })
}

pub trait ReturnSampler: Send + Sync {
    fn name(&self) -> &'static str;

    /// Draws a t×N return matrix with cross-correlation L·Lᵀ.
    fn sample(&self, factor: &CorrelationFactor, t: usize, rng: &mut SimRng) -> DMatrix<f64>;
}

/// Row-major standard normals, t rows of n.
fn standard_normals(t: usize, n: usize, rng: &mut SimRng) -> DMatrix<f64> {
    let data: Vec<f64> = (0..t * n).map(|_| rng.sample(&StandardNormal)).collect();
    DMatrix::from_row_slice(t, n, &data)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianSampler;

impl ReturnSampler for GaussianSampler {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn sample(&self, factor: &CorrelationFactor, t: usize, rng: &mut SimRng) -> DMatrix<f64> {
        factor.correlate(&standard_normals(t, factor.dim(), rng))
    }
}

#[derive(Debug, Clone)]
pub struct StochVolSampler {
    nu: f64,
    mixing: Gamma<f64>,
}

impl StochVolSampler {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 2.0 && nu.is_finite()) {
            return Err(Error::InvalidNu(nu));
        }
        // 1/g with g ~ Gamma(ν/2, scale 2/(ν−2)) is inverse-gamma(ν/2, (ν−2)/2)
        let mixing = Gamma::new(0.5 * nu, 2.0 / (nu - 2.0))
            .map_err(|e| Error::InvalidParameter(format!("gamma mixing law: {e}")))?;
        Ok(Self { nu, mixing })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

impl ReturnSampler for StochVolSampler {
    fn name(&self) -> &'static str {
        "stochvol"
    }

    fn sample(&self, factor: &CorrelationFactor, t: usize, rng: &mut SimRng) -> DMatrix<f64> {
        let n = factor.dim();
        let mut scale = DVector::zeros(t);
        let mut data = Vec::with_capacity(t * n);
        for step in 0..t {
            let g: f64 = rng.sample(&self.mixing);
            scale[step] = (1.0 / g).sqrt();
            data.extend((0..n).map(|_| rng.sample::<f64, _>(&StandardNormal)));
        }
        let mut x = factor.correlate(&DMatrix::from_row_slice(t, n, &data));
        for (step, mut row) in x.row_iter_mut().enumerate() {
            row *= scale[step];
        }
        x
    }
}

pub type SamplerFactory = dyn Fn(&SimConfig) -> Result<Box<dyn ReturnSampler>> + Send + Sync;

/// Registry with the built-in `gaussian` and `stochvol` samplers.
pub fn sampler_registry() -> Registry<SamplerFactory> {
    let mut reg: Registry<SamplerFactory> = Registry::new("sampler");
    reg.register(
        "gaussian",
        Box::new(|_: &SimConfig| Ok(Box::new(GaussianSampler) as Box<dyn ReturnSampler>)),
    );
    reg.register(
        "stochvol",
        Box::new(|cfg: &SimConfig| {
            Ok(Box::new(StochVolSampler::new(cfg.nu)?) as Box<dyn ReturnSampler>)
        }),
    );
    reg
}

/// Builds the sampler named by `cfg.mode`.
pub fn build_sampler(cfg: &SimConfig) -> Result<Box<dyn ReturnSampler>> {
    let reg = sampler_registry();
    let factory = reg.get(&cfg.mode)?;
    factory(cfg)
}
