//! Flat-band cleaning in the empirical eigenbasis.
//!
//! The top k eigenpairs are kept and the remaining N − k eigenvalues are
//! replaced by a single flat value. How that value is chosen is a pluggable
//! rule: `trace` keeps the trace at N, `sigma2` uses σ_eff² from an MP fit
//! of the noise eigenvalues.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::spectral::{fit_mp, EigenSystem};

pub trait FlatValueRule: Send + Sync {
    fn name(&self) -> &'static str;

    /// Common value for the N − k noise eigenvalues.
    fn flat_value(&self, es: &EigenSystem, k: usize) -> Result<f64>;
}

/// (N − Σ_{j≤k} λ_j)/(N − k): trace-preserving.
#[derive(Debug, Clone, Copy, Default)]
pub struct TracePreserving;

impl FlatValueRule for TracePreserving {
    fn name(&self) -> &'static str {
        "trace"
    }

    fn flat_value(&self, es: &EigenSystem, k: usize) -> Result<f64> {
        let n = es.dim() as f64;
        let signal: f64 = es.values()[..k].iter().sum();
        Ok((n - signal) / (n - k as f64))
    }
}

/// σ_eff² of an MP fit to the noise eigenvalues with k excluded as signal.
#[derive(Debug, Clone, Copy, Default)]
pub struct FittedSigmaSquared;

impl FlatValueRule for FittedSigmaSquared {
    fn name(&self) -> &'static str {
        "sigma2"
    }

    fn flat_value(&self, es: &EigenSystem, k: usize) -> Result<f64> {
        let fit = fit_mp(es.values(), Some(k))?;
        Ok(fit.sigma_eff * fit.sigma_eff)
    }
}

pub fn flat_value_rules() -> Registry<dyn FlatValueRule> {
    let mut reg: Registry<dyn FlatValueRule> = Registry::new("flat-value rule");
    reg.register("trace", Box::new(TracePreserving));
    reg.register("sigma2", Box::new(FittedSigmaSquared));
    reg
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanOptions {
    /// Rescale to unit diagonal after reconstruction. Off by default: the
    /// rescaling changes the trace and the eigenvectors.
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanedCorrelation {
    basis: EigenSystem,
    kept: usize,
    flat_value: f64,
    entries: DMatrix<f64>,
}

impl CleanedCorrelation {
    pub fn basis(&self) -> &EigenSystem {
        &self.basis
    }

    pub fn kept(&self) -> usize {
        self.kept
    }

    pub fn flat_value(&self) -> f64 {
        self.flat_value
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues of the cleaned matrix in the empirical basis order.
    pub fn cleaned_values(&self) -> Vec<f64> {
        cleaned_spectrum(&self.basis, self.kept, self.flat_value)
    }
}

fn cleaned_spectrum(es: &EigenSystem, k: usize, flat: f64) -> Vec<f64> {
    es.values()
        .iter()
        .enumerate()
        .map(|(j, &v)| if j < k { v } else { flat })
        .collect()
}

/// Trace-preserving flat-band cleaning keeping the top `k` eigenpairs.
pub fn clean_flat_band(es: &EigenSystem, k: usize) -> Result<CleanedCorrelation> {
    clean_with(es, k, &TracePreserving, CleanOptions::default())
}

pub fn clean_with(
    es: &EigenSystem,
    k: usize,
    rule: &dyn FlatValueRule,
    opts: CleanOptions,
) -> Result<CleanedCorrelation> {
    let n = es.dim();
    if k < 1 || k >= n {
        return Err(Error::InvalidK { k, n });
    }
    let flat = rule.flat_value(es, k)?;
    if !(flat > 0.0) {
        return Err(Error::NegativeFlatValue(flat));
    }
    let mut entries = es.reconstruct_with(&cleaned_spectrum(es, k, flat));
    if opts.renormalize {
        let d: Vec<f64> = (0..n).map(|i| entries[(i, i)].sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                entries[(i, j)] /= d[i] * d[j];
            }
            entries[(i, i)] = 1.0;
        }
    }
    Ok(CleanedCorrelation {
        basis: es.clone(),
        kept: k,
        flat_value: flat,
        entries,
    })
}
