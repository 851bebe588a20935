//! Flat-band cleaning, portfolio risk and the subband risk-bias backtest.

mod backtest;
mod clean;
mod risk;

pub use backtest::{
    model_subbands, risk_bias_backtest, BacktestConfig, RiskBiasReport, SubbandMerge, SubbandSummary,
    ALL_NOISE, MIN_TRIALS,
};
pub use clean::{
    clean_flat_band, clean_with, flat_value_rules, CleanOptions, CleanedCorrelation, FittedSigmaSquared,
    FlatValueRule, TracePreserving,
};
pub use risk::{
    assign_subbands, merge_subbands, portfolio_risk, subband_name, subband_portfolio, subband_portfolios,
    Subband,
};
