//! End-to-end analysis of a return panel: correlation, spectrum, MP fit,
//! localization diagnostics, group extraction, clustering split and block
//! model estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCategory};
use crate::panel::{empirical_correlation, CorrelationMatrix, ReturnPanel};
use crate::spectral::{
    eigendecompose, fit_mp, mp_density, participation_series, relative_ipr_series, EigenSystem, MpFit,
    ParticipationPoint, RelativeIprPoint,
};
use crate::structure::{
    estimate_block_model, overlap_report, partition_from_raw, raw_outlier_groups, split_group, BlockModel,
    GroupPartition, DEFAULT_THRESHOLD_MULT, G23, G23_MINUS, G23_PLUS,
};

/// Pipeline stage names used in error reports.
pub mod stage {
    pub const INGEST: &str = "ingest";
    pub const CORRELATION: &str = "correlation";
    pub const EIGEN: &str = "eigen";
    pub const MP_FIT: &str = "mp-fit";
    pub const IPR: &str = "ipr";
    pub const GROUPS: &str = "groups";
    pub const SPLIT: &str = "split";
    pub const BLOCK_MODEL: &str = "block-model";
    pub const CLEAN: &str = "clean";
    pub const SIMULATE: &str = "simulate";
    pub const BACKTEST: &str = "backtest";
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn category(&self) -> ErrorCategory {
        self.source.category()
    }
}

/// Attaches a stage name to a library error.
pub trait InStage<T> {
    fn in_stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> InStage<T> for crate::error::Result<T> {
    fn in_stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Factors 2..=k_factors define the strongly correlated group.
    pub k_factors: usize,
    pub threshold_mult: f64,
    /// Signal count for the MP fit; detected from the spectrum when absent.
    pub n_signal: Option<usize>,
    /// Split the strongly correlated group in two by clustering.
    pub split: bool,
    /// Number of leading eigenvalues listed in the report.
    pub top: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            k_factors: 3,
            threshold_mult: DEFAULT_THRESHOLD_MULT,
            n_signal: None,
            split: true,
            top: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub degeneracy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub first_timestamp: String,
    pub last_timestamp: String,
    pub n_assets: usize,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub mp_fit: MpFit,
    pub top_eigenvalues: Vec<f64>,
    pub partition_summary: Vec<GroupSummary>,
    pub overlap: usize,
    pub g1_fallback: bool,
    pub block_model: BlockModel,
    pub config: AnalysisConfig,
    pub provenance: Provenance,
}

/// Spectral part of the analysis, available even when group extraction fails.
#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    pub correlation: CorrelationMatrix,
    pub eigen: EigenSystem,
    pub mp_fit: MpFit,
    pub participation: Vec<ParticipationPoint>,
}

#[derive(Debug, Clone)]
pub struct StructureAnalysis {
    pub partition: GroupPartition,
    pub overlap: usize,
    pub g1_fallback: bool,
    pub relative_ipr: Vec<RelativeIprPoint>,
    pub block_model: BlockModel,
}

pub fn analyze_spectrum(panel: &ReturnPanel, cfg: &AnalysisConfig) -> Result<SpectralAnalysis, StageError> {
    let correlation = empirical_correlation(panel).in_stage(stage::CORRELATION)?;
    let eigen = eigendecompose(&correlation).in_stage(stage::EIGEN)?;
    let mp_fit = fit_mp(eigen.values(), cfg.n_signal).in_stage(stage::MP_FIT)?;
    let participation = participation_series(&eigen).in_stage(stage::IPR)?;
    Ok(SpectralAnalysis {
        correlation,
        eigen,
        mp_fit,
        participation,
    })
}

/// Group extraction uses only factors the MP fit classifies as signal, so a
/// spectrum with fewer than two signal eigenvalues has no strongly
/// correlated group.
pub fn analyze_structure(s: &SpectralAnalysis, cfg: &AnalysisConfig) -> Result<StructureAnalysis, StageError> {
    let k_factors = cfg.k_factors.min(s.mp_fit.n_signal);
    if k_factors < 2 {
        return Err(StageError {
            stage: stage::GROUPS,
            source: Error::EmptyGroup(format!(
                "{G23} ({} signal eigenvalues above the fitted noise band, at least 2 needed)",
                s.mp_fit.n_signal
            )),
        });
    }
    let raw = raw_outlier_groups(&s.eigen, k_factors, cfg.threshold_mult).in_stage(stage::GROUPS)?;
    let mut partition = partition_from_raw(&raw).in_stage(stage::GROUPS)?;
    if cfg.split {
        partition = split_group(&s.correlation, &partition, G23, &[G23_PLUS, G23_MINUS]).in_stage(stage::SPLIT)?;
    }
    let relative_ipr = relative_ipr_series(&s.eigen, &partition).in_stage(stage::IPR)?;
    let block_model = estimate_block_model(&s.correlation, &partition).in_stage(stage::BLOCK_MODEL)?;
    Ok(StructureAnalysis {
        partition,
        overlap: overlap_report(&raw),
        g1_fallback: raw.g1_fallback,
        relative_ipr,
        block_model,
    })
}

pub fn build_report(
    s: &SpectralAnalysis,
    g: &StructureAnalysis,
    cfg: &AnalysisConfig,
    provenance: Provenance,
) -> AnalysisReport {
    AnalysisReport {
        mp_fit: s.mp_fit.clone(),
        top_eigenvalues: s.eigen.values().iter().take(cfg.top).copied().collect(),
        partition_summary: g
            .partition
            .groups()
            .iter()
            .map(|grp| GroupSummary {
                name: grp.name.clone(),
                degeneracy: grp.degeneracy(),
            })
            .collect(),
        overlap: g.overlap,
        g1_fallback: g.g1_fallback,
        block_model: g.block_model.clone(),
        config: cfg.clone(),
        provenance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
    /// Empirical density of all eigenvalues (count / (N · width)).
    pub density: f64,
    /// Fitted MP density at the bin centre, weighted by the noise fraction.
    pub mp_density: f64,
}

/// Equal-width histogram of the eigenvalues between 0 and `upper`, with the
/// fitted MP density for overlay. Eigenvalues above `upper` are not binned.
pub fn eigenvalue_histogram(values: &[f64], fit: &MpFit, bins: usize, upper: f64) -> Vec<HistogramBin> {
    let n = values.len() as f64;
    let width = upper / bins as f64;
    let noise_weight = (n - fit.n_signal as f64) / n;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if (0.0..upper).contains(&v) {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        } else if v == upper {
            counts[bins - 1] += 1;
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| {
            let left = b as f64 * width;
            let centre = left + 0.5 * width;
            HistogramBin {
                left,
                right: left + width,
                count,
                density: count as f64 / (n * width),
                mp_density: noise_weight * mp_density(centre, fit.q_eff, fit.sigma_eff).unwrap_or(0.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{gaussian_panel, mp_null_panel};
    use crate::structure::{expand_block_model, BlockGroup, G1, G_PERP};

    fn three_block_model() -> BlockModel {
        let groups = vec![
            BlockGroup { name: G23_PLUS.into(), degeneracy: 12, rho: 0.6 },
            BlockGroup { name: G23_MINUS.into(), degeneracy: 14, rho: 0.45 },
            BlockGroup { name: G_PERP.into(), degeneracy: 90, rho: 0.3 },
            BlockGroup { name: G1.into(), degeneracy: 14, rho: 0.1 },
        ];
        let inter = vec![
            vec![0.6, 0.35, 0.25, 0.05],
            vec![0.35, 0.45, 0.2, 0.05],
            vec![0.25, 0.2, 0.3, 0.05],
            vec![0.05, 0.05, 0.05, 0.1],
        ];
        BlockModel::new(groups, inter).unwrap()
    }

    #[test]
    fn null_panel_has_no_groups() {
        let p = mp_null_panel(100, 300, 4).unwrap();
        let cfg = AnalysisConfig::default();
        let s = analyze_spectrum(&p, &cfg).unwrap();
        assert!(s.mp_fit.n_signal < 2);
        let err = analyze_structure(&s, &cfg).unwrap_err();
        assert_eq!(err.stage, stage::GROUPS);
        assert_eq!(err.category(), ErrorCategory::EmptyGroup);
    }

    #[test]
    fn block_panel_yields_partition_and_model() {
        let m = three_block_model();
        let p = gaussian_panel(&expand_block_model(&m), 5 * m.n_assets(), 1).unwrap();
        let cfg = AnalysisConfig::default();
        let s = analyze_spectrum(&p, &cfg).unwrap();
        let g = analyze_structure(&s, &cfg).unwrap();
        let names: Vec<&str> = g.partition.groups().iter().map(|x| x.name.as_str()).collect();
        assert_eq!(names, [G23_PLUS, G23_MINUS, G_PERP, G1]);
        assert_eq!(g.block_model.n_assets(), m.n_assets());
        let report = build_report(
            &s,
            &g,
            &cfg,
            Provenance {
                input_sha256: String::new(),
                tool_version: String::new(),
                seeds: vec![1],
                first_timestamp: "0".into(),
                last_timestamp: "1".into(),
                n_assets: m.n_assets(),
                n_steps: p.n_steps(),
            },
        );
        assert_eq!(report.top_eigenvalues.len(), 10);
        assert_eq!(report.partition_summary.iter().map(|x| x.degeneracy).sum::<usize>(), 130);
    }

    #[test]
    fn histogram_counts_everything_in_range() {
        let fit = MpFit::from_params(1.0, 4.0, 0, 0.0).unwrap();
        let values = [0.3, 0.5, 1.0, 2.0, 2.5];
        let h = eigenvalue_histogram(&values, &fit, 5, 2.5);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 5);
        assert_eq!(h[4].count, 2);
        let area: f64 = h.iter().map(|b| b.density * (b.right - b.left)).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }
}
