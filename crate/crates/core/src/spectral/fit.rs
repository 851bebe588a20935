//! Fitting the MP law to the noise part of an empirical spectrum.
//!
//! The discrepancy between the empirical CDF of the noise eigenvalues
//! (evaluated at mid-ranks) and the MP CDF is minimized in two stages: an
//! exhaustive grid over (σ, q) followed by Nelder–Mead refinement from the
//! best grid point. When no signal count is supplied, eigenvalues above the
//! fitted upper edge are peeled off as signal and the fit is repeated until
//! the signal count stops changing.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mp::{mp_band_edges, MpCdf};
use crate::error::{Error, Result};

pub const MIN_NOISE_EIGENVALUES: usize = 20;
const MAX_SIGNAL_ITERATIONS: usize = 10;

const SIGMA_MIN: f64 = 0.2;
const SIGMA_STEP: f64 = 0.01;
const SIGMA_COUNT: usize = 131; // 0.20 ..= 1.50
const Q_MIN: f64 = 1.05;
const Q_STEP: f64 = 0.05;
const Q_COUNT: usize = 180; // 1.05 ..= 10.00

const REFINE_XTOL: f64 = 1e-6;
const REFINE_MAX_ITER: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpFit {
    pub sigma_eff: f64,
    pub q_eff: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub n_signal: usize,
    pub objective: f64,
}

impl MpFit {
    /// Assembles a fit record, deriving the band edges from (σ, q).
    pub fn from_params(sigma_eff: f64, q_eff: f64, n_signal: usize, objective: f64) -> Result<Self> {
        let (lambda_minus, lambda_plus) = mp_band_edges(q_eff, sigma_eff)?;
        Ok(Self {
            sigma_eff,
            q_eff,
            lambda_minus,
            lambda_plus,
            n_signal,
            objective,
        })
    }
}

/// Mean squared gap between the MP CDF and the mid-rank empirical CDF.
/// `noise` must be sorted ascending.
fn cdf_discrepancy(noise: &[f64], sigma: f64, q: f64) -> f64 {
    if !(q > 1.0 && sigma > 0.0) || !q.is_finite() || !sigma.is_finite() {
        return f64::INFINITY;
    }
    let cdf = MpCdf::new(q, sigma);
    let m = noise.len() as f64;
    noise
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let d = cdf.eval(x) - (i as f64 + 0.5) / m;
            d * d
        })
        .sum::<f64>()
        / m
}

fn grid_sigma(i: usize) -> f64 {
    SIGMA_MIN + SIGMA_STEP * i as f64
}

fn grid_q(j: usize) -> f64 {
    Q_MIN + Q_STEP * j as f64
}

/// Exhaustive grid search. Ties go to the smallest σ, then the smallest q.
fn grid_search(noise: &[f64]) -> (usize, usize, f64) {
    let rows: Vec<Vec<f64>> = (0..SIGMA_COUNT)
        .into_par_iter()
        .map(|i| {
            let s = grid_sigma(i);
            (0..Q_COUNT).map(|j| cdf_discrepancy(noise, s, grid_q(j))).collect()
        })
        .collect();
    let mut best = (0, 0, f64::INFINITY);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Plain Nelder–Mead on two parameters.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], step: [f64; 2]) -> ([f64; 2], f64) {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut vals = simplex.map(&f);
    for _ in 0..REFINE_MAX_ITER {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);

        let size = (1..3)
            .map(|k| {
                (simplex[k][0] - simplex[0][0])
                    .abs()
                    .max((simplex[k][1] - simplex[0][1]).abs())
            })
            .fold(0.0, f64::max);
        if size < REFINE_XTOL {
            break;
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = along(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                vals[2] = fe;
            } else {
                simplex[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted = if fr < vals[2] { along(-0.5) } else { along(0.5) };
            let fc = f(contracted);
            if fc < vals[2].min(fr) {
                simplex[2] = contracted;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    (simplex[best], vals[best])
}

/// Fits (σ, q) to `noise` (ascending order).
fn fit_noise(noise: &[f64], n_signal: usize) -> Result<MpFit> {
    let (i, j, grid_val) = grid_search(noise);
    if !grid_val.is_finite() || i == 0 || i == SIGMA_COUNT - 1 || j == 0 || j == Q_COUNT - 1 {
        return Err(Error::FitDegenerate {
            sigma: grid_sigma(i),
            q: grid_q(j),
        });
    }
    let (p, val) = nelder_mead(
        |p| cdf_discrepancy(noise, p[0], p[1]),
        [grid_sigma(i), grid_q(j)],
        [SIGMA_STEP, Q_STEP],
    );
    let (sigma, q, objective) = if val <= grid_val {
        (p[0], p[1], val)
    } else {
        (grid_sigma(i), grid_q(j), grid_val)
    };
    MpFit::from_params(sigma, q, n_signal, objective)
}

/// Fits the MP law to an eigenvalue spectrum.
///
/// The top `n_signal_hint` eigenvalues are excluded from the fit; without a
/// hint the signal count is detected iteratively (at most 10 refits).
pub fn fit_mp(eigenvalues: &[f64], n_signal_hint: Option<usize>) -> Result<MpFit> {
    let mut sorted: Vec<f64> = eigenvalues.to_vec();
    if sorted.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite eigenvalue".into()));
    }
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let noise_of = |n_signal: usize| -> Result<Vec<f64>> {
        let have = n.saturating_sub(n_signal);
        if have < MIN_NOISE_EIGENVALUES {
            return Err(Error::TooFewEigenvalues {
                have,
                need: MIN_NOISE_EIGENVALUES,
            });
        }
        let mut noise = sorted[n_signal..].to_vec();
        noise.reverse();
        Ok(noise)
    };

    if let Some(hint) = n_signal_hint {
        return fit_noise(&noise_of(hint)?, hint);
    }

    let mut n_signal = 0;
    let mut fit = fit_noise(&noise_of(0)?, 0)?;
    for _ in 0..MAX_SIGNAL_ITERATIONS {
        let above = sorted.iter().take_while(|&&x| x > fit.lambda_plus).count();
        if above == n_signal {
            return Ok(fit);
        }
        n_signal = above;
        fit = fit_noise(&noise_of(n_signal)?, n_signal)?;
    }
    Ok(fit)
}
