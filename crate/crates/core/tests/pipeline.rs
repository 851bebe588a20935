use noiseband::pipeline::{analyze_spectrum, analyze_structure, stage, AnalysisConfig};
use noiseband::simulate::{gaussian_panel, mp_null_panel};
use noiseband::structure::{expand_block_model, BlockModel};
use noiseband::ErrorCategory;

#[test]
fn reference_panel_recovers_group_correlations() {
    let m = BlockModel::four_group_reference();
    let c = expand_block_model(&m);
    let cfg = AnalysisConfig::default();
    for seed in [7, 8, 9] {
        let p = gaussian_panel(&c, 3 * m.n_assets(), seed).unwrap();
        let s = analyze_spectrum(&p, &cfg).unwrap();
        assert!(s.mp_fit.n_signal >= 4, "seed {seed}: {}", s.mp_fit.n_signal);
        let g = analyze_structure(&s, &cfg).unwrap();
        assert_eq!(g.overlap, 0);
        for truth in m.groups() {
            let est = g
                .block_model
                .groups()
                .iter()
                .find(|b| b.name == truth.name)
                .unwrap_or_else(|| panic!("seed {seed}: missing {}", truth.name));
            assert!(
                (est.rho - truth.rho).abs() <= 0.03,
                "seed {seed} {}: {} vs {}",
                truth.name,
                est.rho,
                truth.rho
            );
        }
    }
}

#[test]
fn null_panel_fails_in_group_stage() {
    let cfg = AnalysisConfig::default();
    let s = analyze_spectrum(&mp_null_panel(200, 600, 1).unwrap(), &cfg).unwrap();
    let err = analyze_structure(&s, &cfg).unwrap_err();
    assert_eq!(err.stage, stage::GROUPS);
    assert_eq!(err.category(), ErrorCategory::EmptyGroup);
}

#[test]
fn spectral_stage_is_deterministic() {
    let cfg = AnalysisConfig::default();
    let p = mp_null_panel(50, 150, 2).unwrap();
    let a = analyze_spectrum(&p, &cfg).unwrap();
    let b = analyze_spectrum(&p, &cfg).unwrap();
    assert_eq!(a.mp_fit, b.mp_fit);
    assert_eq!(a.eigen.values(), b.eigen.values());
}
