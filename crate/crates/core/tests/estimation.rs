mod common;

use multicause::binary::{ignorance_region, BinaryParams};
use multicause::estimation::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generator() -> BinaryParams {
    BinaryParams::with_logistic_outcome(6, 0.3, 0.3, 0.7, 0.5, 2.0).unwrap()
}

fn target() -> Vec<bool> {
    vec![true, true, true, true, true, false]
}

fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

#[test]
fn penalized_gradient_matches_finite_differences() {
    let p = BinaryParams::with_logistic_outcome(4, 0.4, 0.25, 0.65, 0.5, 1.0).unwrap();
    let data = sample_dataset(&p, Some(&ProxyParams::default()), 50, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for with_proxies in [false, true] {
        let stats = SufficientStats::from_dataset(&data, with_proxies).unwrap();
        let obj = PenalizedObjective::new(&stats, 0.7, 1.5, 3).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..obj.layout.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let (_, grad) = obj.value_and_gradient(&x).unwrap();
            let f = |z: &[f64]| obj.value(z).unwrap();
            for (i, g) in grad.iter().enumerate() {
                let fd = central_difference(&f, &x, i, 1e-5);
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1.0);
                assert!(rel < 1e-4, "coordinate {i}: analytic {g} vs numeric {fd}");
            }
        }
    }
}

#[test]
fn fits_are_reproducible() {
    let data = sample_dataset(&generator(), Some(&ProxyParams::default()), 2_000, 8).unwrap();
    let cfg = FitConfig::new(target(), 1.0, 77);
    assert_eq!(fit(&data, &cfg, true).unwrap(), fit(&data, &cfg, true).unwrap());
    let bare = data.without_proxies();
    assert_eq!(fit(&bare, &cfg, false).unwrap(), fit(&bare, &cfg, false).unwrap());
}

#[test]
fn ascent_never_decreases_the_objective() {
    let data = sample_dataset(&generator(), Some(&ProxyParams::default()), 3_000, 4).unwrap();
    let stats = SufficientStats::from_dataset(&data, true).unwrap();
    let obj = PenalizedObjective::new(&stats, 0.1, -2.0, 5).unwrap();
    let x0 = vec![0.3; obj.layout.dim()];
    let out = maximize(
        |x| obj.value_and_gradient(x).unwrap(),
        x0,
        &AscentOptions { max_iters: 300, step_size: 5.0, tol: 1e-6 },
    );
    assert!(out.history.len() > 2);
    assert!(out.history.windows(2).all(|w| w[1] >= w[0]), "{:?}", out.history);
}

#[test]
fn per_row_likelihood_matches_entropy_rate() {
    let p = generator();
    let z = ProxyParams::default();
    let n = 100_000;
    let data = sample_dataset(&p, Some(&z), n, 21).unwrap();
    for proxies in [None, Some(&z)] {
        let (mean, var) = common::row_log_likelihood_moments(&p, proxies);
        let d = if proxies.is_some() { data.clone() } else { data.without_proxies() };
        let avg = log_likelihood(&p, proxies, &d).unwrap() / n as f64;
        let se = (var / n as f64).sqrt();
        assert!((avg - mean).abs() < 3.0 * se, "{avg} vs {mean} (se {se})");
    }
}

#[test]
fn sample_moments_match_enumeration() {
    let p = generator();
    let n = 15_000;
    let data = sample_dataset(&p, None, n, 5).unwrap();
    let (ey, es) = common::outcome_and_sum_moments(&p);
    let y_bar = data.rows().iter().filter(|r| r.y).count() as f64 / n as f64;
    let s_vals: Vec<f64> = data.rows().iter().map(|r| r.s() as f64).collect();
    let s_bar = s_vals.iter().sum::<f64>() / n as f64;
    let s_var = s_vals.iter().map(|s| (s - es).powi(2)).sum::<f64>() / n as f64;
    assert!((y_bar - ey).abs() < 3.0 * (ey * (1.0 - ey) / n as f64).sqrt(), "{y_bar} vs {ey}");
    assert!((s_bar - es).abs() < 3.0 * (s_var / n as f64).sqrt(), "{s_bar} vs {es}");
}

#[test]
fn fixed_empty_latent_class_recovers_the_observed_model() {
    let p = BinaryParams::with_logistic_outcome(4, 0.0, 0.35, 0.8, 0.6, 1.0).unwrap();
    let n = 20_000;
    let data = sample_dataset(&p, None, n, 9).unwrap();
    let mut cfg = FitConfig::new(vec![true, true, false, false], 0.0, 1);
    cfg.fixed_pi_u = Some(0.0);
    cfg.lambda = 0.0;
    let f = fit(&data, &cfg, false).unwrap();
    assert_eq!(f.params_hat.pi_u(), 0.0);
    let se_a = (0.35 * 0.65 / (4.0 * n as f64)).sqrt();
    assert!((f.params_hat.p_a0() - 0.35).abs() < 4.0 * se_a, "{}", f.params_hat.p_a0());
    for s in 0..=4 {
        let rows: Vec<_> = data.rows().iter().filter(|r| r.s() == s).collect();
        let q = p.p_y(0, s);
        let se = (q * (1.0 - q) / rows.len() as f64).sqrt();
        assert!((f.params_hat.p_y(0, s) - q).abs() < 4.0 * se, "s = {s}");
    }
}

#[test]
fn standard_estimates_stay_in_the_ignorance_region() {
    let p = generator();
    let iv = ignorance_region(&p, 5).unwrap();
    let reps = 4;
    for gamma in [-4.0, 4.0] {
        let estimates: Vec<f64> = (0..reps)
            .filter_map(|rep| {
                let data = sample_dataset(&p, None, 15_000, 100 + rep).unwrap();
                let f = fit(&data, &FitConfig::new(target(), gamma, rep), false).unwrap();
                f.converged.then_some(f.pi_do_hat)
            })
            .collect();
        assert!(!estimates.is_empty());
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        let sd = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (estimates.len() - 1) as f64).sqrt();
        for e in &estimates {
            assert!(*e >= iv.lo - 3.0 * sd && *e <= iv.hi + 3.0 * sd, "{e} outside [{}, {}] ± {}", iv.lo, iv.hi, 3.0 * sd);
        }
    }
}

#[test]
fn proxies_make_the_profile_informative() {
    let p = generator();
    let data = sample_dataset(&p, Some(&ProxyParams::default()), 15_000, 31).unwrap();
    let base = FitConfig::new(target(), 0.0, 5);
    let gammas = [-3.0, -1.5, 0.0, 1.5, 3.0];
    let range = |v: &[f64]| {
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let standard = profile_log_likelihood(&data.without_proxies(), &base, false, &gammas, 100.0).unwrap();
    let proxy = profile_log_likelihood(&data, &base, true, &gammas, 100.0).unwrap();
    let (rs, rp) = (range(&standard), range(&proxy));
    // Flat to within sampling noise without proxies; sharply curved with them.
    assert!(rs < 10.0, "standard profile range {rs}");
    assert!(rs < rp, "standard {rs} vs proxy {rp}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn likelihood_is_label_invariant(
        pi_u in 0.05..0.95f64, p_a0 in 0.05..0.95f64, p_a1 in 0.05..0.95f64,
        kappa in -1.0..1.0f64, eta in -2.0..2.0f64, seed in 0u64..1000,
    ) {
        prop_assume!((p_a0 - p_a1).abs() > 1e-3);
        let p = BinaryParams::with_logistic_outcome(3, pi_u, p_a0, p_a1, kappa, eta).unwrap();
        let z = ProxyParams::new([0.3, 0.6], [0.1, 0.9]).unwrap();
        let data = sample_dataset(&p, Some(&z), 40, seed).unwrap();
        let (q, zq) = relabel(&p, Some(&z)).unwrap();
        let a = log_likelihood(&p, Some(&z), &data).unwrap();
        let b = log_likelihood(&q, zq.as_ref(), &data).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        prop_assert!(a <= 0.0);
        let s = 2;
        prop_assert!((implied_log_odds_ratio(&p, s).unwrap() - implied_log_odds_ratio(&q, s).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn zero_lambda_objective_is_the_likelihood(seed in 0u64..1000, gamma_target in -3.0..3.0f64) {
        let p = generator();
        let data = sample_dataset(&p, None, 30, seed).unwrap();
        let mut cfg = FitConfig::new(target(), gamma_target, seed);
        cfg.lambda = 0.0;
        let a = penalized_objective(&p, None, &data, &cfg).unwrap();
        let b = log_likelihood(&p, None, &data).unwrap();
        prop_assert_eq!(a, b);
    }
}
