//! Marcenko–Pastur law for the spectrum of a noise correlation matrix.
//!
//! `q` is the ratio T/N of observations to assets (q > 1) and `sigma` the
//! noise scale. The density is supported on the hard-edge band
//! [σ²(1 − √(1/q))², σ²(1 + √(1/q))²].

use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_params(q: f64, sigma: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("q must exceed 1, got {q}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(())
}

/// Band edges (λ−, λ+).
pub fn mp_band_edges(q: f64, sigma: f64) -> Result<(f64, f64)> {
    check_params(q, sigma)?;
    Ok(edges_unchecked(q, sigma))
}

fn edges_unchecked(q: f64, sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let r = (1.0 / q).sqrt();
    (s2 * (1.0 - r).powi(2), s2 * (1.0 + r).powi(2))
}

pub fn mp_density(lambda: f64, q: f64, sigma: f64) -> Result<f64> {
    check_params(q, sigma)?;
    let (lo, hi) = edges_unchecked(q, sigma);
    if lambda <= lo || lambda >= hi {
        return Ok(0.0);
    }
    Ok(q / (2.0 * PI * sigma * sigma) * ((hi - lambda) * (lambda - lo)).sqrt() / lambda)
}

/// Closed-form cumulative distribution of the MP law.
pub fn mp_cdf(lambda: f64, q: f64, sigma: f64) -> Result<f64> {
    check_params(q, sigma)?;
    Ok(MpCdf::new(q, sigma).eval(lambda))
}

/// Precomputed constants for repeated CDF evaluations at fixed (q, σ).
#[derive(Debug, Clone, Copy)]
pub(crate) struct MpCdf {
    lo: f64,
    hi: f64,
    half_sum: f64,
    geo: f64,
    base: f64,
    norm: f64,
}

impl MpCdf {
    pub(crate) fn new(q: f64, sigma: f64) -> Self {
        let (lo, hi) = edges_unchecked(q, sigma);
        let half_sum = 0.5 * (lo + hi);
        let geo = (lo * hi).sqrt();
        // antiderivative at the lower edge, where both arcsines equal -π/2
        let base = -0.5 * PI * (half_sum - geo);
        let norm = 2.0 * PI * sigma * sigma / q;
        Self {
            lo,
            hi,
            half_sum,
            geo,
            base,
            norm,
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        let (a, b) = (self.lo, self.hi);
        let width = b - a;
        let r = ((b - x) * (x - a)).sqrt();
        let s1 = ((2.0 * x - a - b) / width).clamp(-1.0, 1.0).asin();
        let s2 = (((a + b) * x - 2.0 * a * b) / (width * x)).clamp(-1.0, 1.0).asin();
        let g = r + self.half_sum * s1 - self.geo * s2;
        ((g - self.base) / self.norm).clamp(0.0, 1.0)
    }
}
