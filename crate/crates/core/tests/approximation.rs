use sobonet_core::approximator::{
    build_approximant, calibrated_grid_density, fit_complexity_exponent, least_squares_slope, localized_error,
    ApproxConfig, Mode,
};
use sobonet_core::functions::{polynomial, sin_wave, DifferentiableFunction};
use sobonet_core::lb_probe::{probe_lower_bound, BumpFamily};
use sobonet_core::metrics::{wsp_error, Difference, FunctionField, NetworkField, Sampler};
use sobonet_core::taylor::{build_patches, LocalizedSum};
use sobonet_core::MultiIndex;

#[test]
fn localized_sum_decays_at_taylor_rate() {
    let f = sin_wave();
    let grids = [8usize, 16, 32];
    for n in [2usize, 3] {
        let mut cfg = ApproxConfig::new(n, 0.0, 1.0);
        cfg.budget = 20_000;
        let pts: Vec<(f64, f64)> = grids
            .iter()
            .map(|&g| ((g as f64).ln(), localized_error(&f, &cfg, g).unwrap().1.value.ln()))
            .collect();
        let slope = least_squares_slope(&pts);
        assert!((slope + n as f64).abs() <= 0.15 * n as f64, "n={n}: {slope}");
    }
}

#[test]
fn polynomials_of_low_degree_are_reproduced() {
    // degree 1 < n = 2: the averaged Taylor polynomial is the function itself
    let f = polynomial(1, vec![(MultiIndex(vec![0]), 0.5), (MultiIndex(vec![1]), -2.0)]);
    let sum = LocalizedSum::new(build_patches(&f, 2, 5, 20).unwrap(), 5).unwrap();
    for i in 0..=40 {
        let x = i as f64 / 40.0;
        assert!((sum.eval(&[x]) - f.value(&[x])).abs() <= 1e-12);
    }
}

#[test]
fn calibrated_density_matches_linear_scan() {
    let f = sin_wave();
    let mut cfg = ApproxConfig::new(2, 0.0, f.sobolev_bound(2).unwrap());
    cfg.budget = 20_000;
    let target = 1e-2;
    let (found, err) = calibrated_grid_density(&f, &cfg, target).unwrap();
    let scan = (1..)
        .find(|&g| localized_error(&f, &cfg, g).unwrap().1.value <= target)
        .unwrap();
    assert_eq!(found, scan);
    assert!(err <= target);
}

#[test]
fn calibrated_build_meets_tolerance() {
    let f = sin_wave();
    for (n, s, eps) in [(2usize, 0.0, 0.05), (3, 1.0, 0.5)] {
        let mut cfg = ApproxConfig::new(n, s, f.sobolev_bound(n).unwrap());
        cfg.budget = 20_000;
        let (net, audit) = build_approximant(&f, &cfg, eps).unwrap();
        assert!(audit.error_total <= eps);
        assert_eq!(audit.weights, net.weight_count());
        assert_eq!(audit.layers, net.num_layers());
        // independent re-measurement on a different shifted grid
        let again = wsp_error(&net, &f, s, f64::INFINITY, 20_000, 99).unwrap();
        assert!(again.value <= 1.05 * eps, "{} > {eps}", again.value);
    }
}

#[test]
fn theoretical_mode_uses_the_formula() {
    let f = sin_wave();
    let mut cfg = ApproxConfig::new(2, 0.0, f.sobolev_bound(2).unwrap());
    cfg.budget = 10_000;
    cfg.mode = Mode::Theoretical { constant: 0.01 };
    let (_, audit) = build_approximant(&f, &cfg, 0.1).unwrap();
    assert_eq!(audit.attempts, 1);
    assert!(audit.n_grid >= 1);
}

#[test]
fn exponent_fit_on_synthetic_rows() {
    // M/L = eps^{-1/2}
    let rows: Vec<(f64, usize, usize)> = [1e-2, 1e-4, 1e-6].iter().map(|&e: &f64| (e, (10.0 * e.powf(-0.5)) as usize, 10)).collect();
    assert!((fit_complexity_exponent(&rows) - 0.5).abs() < 1e-3);
}

#[test]
fn shared_sampling_equals_difference_field() {
    let f = sin_wave();
    let mut cfg = ApproxConfig::new(2, 0.0, f.sobolev_bound(2).unwrap());
    cfg.budget = 5_000;
    let (net, _) = build_approximant(&f, &cfg, 0.2).unwrap();
    let g = NetworkField::new(&net).unwrap();
    for s in [0.0, 0.5, 1.0] {
        let sampler = Sampler::for_order(1, s, f64::INFINITY, 5_000, 7).unwrap();
        let shared = sampler
            .sample(&g)
            .unwrap()
            .minus(&sampler.sample(&FunctionField(&f)).unwrap());
        let direct = sampler.sample(&Difference(&g, FunctionField(&f))).unwrap();
        assert_eq!(sampler.wsp_norm(&shared, s).unwrap().value, sampler.wsp_norm(&direct, s).unwrap().value);
    }
}

#[test]
fn single_bump_is_decoded() {
    let family = BumpFamily::new(1, 2, 4, 1.0).unwrap();
    let mut cfg = ApproxConfig::new(2, 1.0, 1.0);
    cfg.budget = 2000;
    let y = vec![false, true, false, false];
    let report = probe_lower_bound(&family, &cfg, std::slice::from_ref(&y)).unwrap();
    assert!(report.all_decoded());
    assert_eq!(report.outcomes[0].decoded, y);
    assert!(report.min_margin() > 0.0);
    assert!(report.outcomes[0].error <= report.eps);
}
