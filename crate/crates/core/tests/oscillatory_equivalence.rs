use hrl_core::experiments::{hermite_equivalence, stationary_phase_ladder, twisted_equivalence};
use hrl_core::oscillatory::{WindowFunction, WindowProfile};

#[test]
fn hermite_time_integral_matches_spectral_side() {
    let w = WindowFunction::new(0.95, 0.9, WindowProfile::Gaussian).unwrap();
    for lambda in [21.0, 41.0, 81.0] {
        let row = hermite_equivalence(&w, lambda, &[0.5], &[-0.4]).unwrap();
        assert!(row.rel_err < 1e-6, "{row:?}");
    }
}

#[test]
fn twisted_time_integral_matches_spectral_side() {
    let w = WindowFunction::new(0.55, 0.54, WindowProfile::Gaussian).unwrap();
    let row = twisted_equivalence(&w, 22.0, &[0.3, 0.1], &[-0.5, 0.7]).unwrap();
    assert!(row.rel_err < 1e-4, "{row:?}");
}

#[test]
fn leading_term_error_gains_one_power() {
    let rows = stationary_phase_ladder(&[0.5], &[-0.4], 0.9, &[40.0, 80.0, 160.0, 320.0]).unwrap();
    for pair in rows.windows(2) {
        let ratio = pair[1].rel_err / pair[0].rel_err;
        assert!((0.35..=0.7).contains(&ratio), "{} -> {}: {ratio}", pair[0].lambda, pair[1].lambda);
    }
}

#[test]
fn window_reaching_a_singular_time_is_rejected() {
    assert!(stationary_phase_ladder(&[0.5], &[-0.4], 1.5, &[40.0]).is_err());
}
