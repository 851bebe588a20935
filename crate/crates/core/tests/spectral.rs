use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use noiseband::panel::{empirical_correlation, CorrelationMatrix};
use noiseband::simulate::mp_null_panel;
use noiseband::spectral::{
    eigendecompose, fit_mp, grmt_participation_baseline, mp_band_edges, mp_cdf, mp_density, participation,
};

/// Adaptive Simpson quadrature, independent of the closed-form CDF.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// ∫ρ over the support after the substitution λ = c + h·sin θ, which removes
/// the square-root endpoint singularities.
fn density_integral(q: f64, sigma: f64) -> f64 {
    let (lo, hi) = mp_band_edges(q, sigma).unwrap();
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let f = |t: f64| {
        let lambda = c + h * t.sin();
        mp_density(lambda, q, sigma).unwrap() * h * t.cos()
    };
    let half = std::f64::consts::FRAC_PI_2;
    adaptive_simpson(&f, -half, half, 1e-12)
}

#[test]
fn density_integrates_to_one() {
    for &(q, sigma) in &[(1.05, 0.2), (1.5, 1.0), (2.25, 0.67), (3.0, 1.0), (10.0, 1.5), (50.0, 0.9)] {
        let total = density_integral(q, sigma);
        assert!((total - 1.0).abs() < 1e-6, "q={q} σ={sigma}: {total}");
    }
}

#[test]
fn cdf_matches_quadrature_of_density() {
    let (q, sigma) = (2.25, 0.67);
    let (lo, hi) = mp_band_edges(q, sigma).unwrap();
    for frac in [0.1, 0.3, 0.5, 0.8, 0.95] {
        let x = lo + frac * (hi - lo);
        let f = |t: f64| mp_density(t, q, sigma).unwrap();
        let numeric = adaptive_simpson(&f, lo, x, 1e-11);
        assert!((numeric - mp_cdf(x, q, sigma).unwrap()).abs() < 1e-5, "x={x}");
    }
}

#[test]
fn support_matches_band_edges() {
    let (q, sigma) = (2.25, 0.67);
    let (lo, hi) = mp_band_edges(q, sigma).unwrap();
    assert_relative_eq!(lo, 0.04988, epsilon = 1e-5);
    assert_relative_eq!(hi, 1.24694, epsilon = 1e-5);
    assert_eq!(mp_density(lo, q, sigma).unwrap(), 0.0);
    assert_eq!(mp_density(hi, q, sigma).unwrap(), 0.0);
    assert!(mp_density(lo + 1e-9, q, sigma).unwrap() > 0.0);
    assert!(mp_density(hi - 1e-9, q, sigma).unwrap() > 0.0);
    assert_eq!(mp_density(lo - 1e-9, q, sigma).unwrap(), 0.0);
    assert_eq!(mp_density(hi + 1e-9, q, sigma).unwrap(), 0.0);
}

#[test]
fn null_spectra_stay_in_the_mp_support() {
    let (lo, hi) = mp_band_edges(3.0, 1.0).unwrap();
    let p = mp_null_panel(200, 600, 31).unwrap();
    let es = eigendecompose(&empirical_correlation(&p).unwrap()).unwrap();
    let inside = es.values().iter().filter(|&&v| v >= lo - 0.05 && v <= hi + 0.05).count();
    assert!(inside as f64 >= 0.99 * 200.0, "{inside}/200");
}

#[test]
fn null_fits_recover_sigma_and_q() {
    let mut hits = 0;
    for seed in 100..120 {
        let p = mp_null_panel(200, 600, seed).unwrap();
        let es = eigendecompose(&empirical_correlation(&p).unwrap()).unwrap();
        let fit = fit_mp(es.values(), None).unwrap();
        if (fit.sigma_eff - 1.0).abs() <= 0.03 && (fit.q_eff / 3.0 - 1.0).abs() <= 0.10 {
            hits += 1;
        }
        assert_relative_eq!(fit.lambda_plus, mp_band_edges(fit.q_eff, fit.sigma_eff).unwrap().1, epsilon = 1e-15);
    }
    assert!(hits >= 18, "{hits}/20");
}

#[test]
fn null_participation_near_grmt_baseline() {
    let p = mp_null_panel(200, 600, 5).unwrap();
    let es = eigendecompose(&empirical_correlation(&p).unwrap()).unwrap();
    let mean = (0..200)
        .map(|k| participation(&es.vector(k).iter().copied().collect::<Vec<_>>()).unwrap())
        .sum::<f64>()
        / 200.0;
    let baseline = grmt_participation_baseline(200);
    assert!((mean / baseline - 1.0).abs() < 0.10, "{mean} vs {baseline}");
}

fn random_correlation(n: usize, seed: u64) -> CorrelationMatrix {
    empirical_correlation(&mp_null_panel(n, 2 * n, seed).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigendecomposition_reconstructs(n in 2usize..40, seed in any::<u64>()) {
        let c = random_correlation(n, seed);
        let es = eigendecompose(&c).unwrap();
        let err = (es.reconstruct() - c.entries()).amax();
        prop_assert!(err < 1e-8, "{}", err);
        prop_assert!(es.orthonormality_error() < 1e-10);
        prop_assert!(es.values().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn mp_cdf_is_a_distribution(q in 1.01f64..50.0, sigma in 0.1f64..2.0, u in 0.0f64..1.0) {
        let (lo, hi) = mp_band_edges(q, sigma).unwrap();
        prop_assert_eq!(mp_cdf(lo - 1.0, q, sigma).unwrap(), 0.0);
        prop_assert!((mp_cdf(hi + 1.0, q, sigma).unwrap() - 1.0).abs() < 1e-12);
        let x = lo + u * (hi - lo);
        let f = mp_cdf(x, q, sigma).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn participation_bounds(v in prop::collection::vec(-1.0f64..1.0, 1..60)) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let e: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let p = participation(&e).unwrap();
        prop_assert!(p >= 1.0 - 1e-9 && p <= e.len() as f64 + 1e-9);
    }
}

#[test]
fn identity_spectrum_is_flat() {
    let es = eigendecompose(&CorrelationMatrix::from_entries(DMatrix::identity(7, 7)).unwrap()).unwrap();
    assert!(es.values().iter().all(|&v| (v - 1.0).abs() < 1e-14));
}
