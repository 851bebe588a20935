//! Random-matrix analysis of correlation noise in asset return panels.
//!
//! - [`panel`]: ingestion, log returns, standardization, empirical correlation
//! - [`spectral`]: eigendecomposition, Marcenko–Pastur law and fit, participation ratios
//! - [`structure`]: outlier groups, clustering split, block effective models
//! - [`cleanrisk`]: flat-band cleaning, portfolio risk, risk-bias backtest
//! - [`simulate`]: Gaussian and stochastic-volatility panels
//! - [`pipeline`]: the end-to-end analysis
//! - [`series`]: CSV files of the plot-ready series

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cleanrisk;
pub mod error;
pub mod format;
pub mod panel;
pub mod pipeline;
pub mod registry;
pub mod series;
pub mod simulate;
pub mod spectral;
pub mod structure;

pub use error::{Error, ErrorCategory, Result};
