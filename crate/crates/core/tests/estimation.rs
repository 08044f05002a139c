use bapcs::asymptotic::{
    delta_gradient, delta_method_variance, fit_with_intervals, observed_information, z_quantile, DeltaTarget,
};
use bapcs::censoring::{BapcsSample, FacilitySample};
use bapcs::distributions::IepParams;
use bapcs::gof::DataSet;
use bapcs::harness::StudyConfig;
use bapcs::mle::{
    alpha_closed_form, log_likelihood, log_likelihood_gradient, log_likelihood_hessian, profile_score, rc_estimates,
    solve_mle, solve_mle_with_guess, weighted_alpha, MleFit,
};
use proptest::prelude::*;

fn sample(setup: u8, plan: u8, rep: usize) -> BapcsSample {
    StudyConfig::new(setup, plan, 777).replication_sample(rep).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Golden-section maximiser on [lo, hi].
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo) > 1e-13 * (lo.abs() + hi.abs()) {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn closed_form_alpha_matches_numeric_argmax() {
    for rep in 0..10 {
        let s = sample(1, 1 + (rep % 3) as u8, rep);
        let beta = 1.5 + 0.2 * rep as f64;
        for i in 0..s.k() {
            let closed = alpha_closed_form(&s.facilities[i], beta).unwrap();
            let numeric = golden_max(
                |a| {
                    let mut alphas = vec![3.5; s.k()];
                    alphas[i] = a;
                    log_likelihood(&s, &alphas, beta).unwrap()
                },
                1e-3,
                100.0,
            );
            assert!(rel(closed, numeric) < 1e-6, "{closed} vs {numeric}");
        }
    }
}

#[test]
fn loglik_is_symmetric_in_facilities() {
    let s = sample(4, 2, 0);
    let alphas = [2.0, 3.0, 4.0, 5.0, 6.0];
    let v = log_likelihood(&s, &alphas, 2.0).unwrap();
    let mut rev = s.facilities.clone();
    rev.reverse();
    let mut ra = alphas.to_vec();
    ra.reverse();
    let w = log_likelihood(&BapcsSample::new(rev).unwrap(), &ra, 2.0).unwrap();
    assert!((v - w).abs() < 1e-10 * v.abs());
}

#[test]
fn carbon_fibre_loglik_at_reported_estimates() {
    let d = DataSet::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/carbon_fibres.txt")).unwrap();
    let s = BapcsSample::new(vec![FacilitySample::complete(d.sorted().to_vec()).unwrap()]).unwrap();
    let ll = log_likelihood(&s, &[43.8478], 7.6876).unwrap();
    assert!((-2.0 * ll - 104.6455).abs() < 0.01, "{}", -2.0 * ll);
    let fit = solve_mle(&s).unwrap();
    assert!(rel(fit.alpha_hats[0], 43.8478) < 1e-4 && rel(fit.beta_hat, 7.6876) < 1e-4);
}

#[test]
fn profile_score_brackets_and_diverges() {
    let s = sample(1, 1, 3);
    let fit = solve_mle(&s).unwrap();
    assert!(profile_score(fit.beta_hat / 2.0, &s).unwrap() > 0.0);
    assert!(profile_score(fit.beta_hat * 2.0, &s).unwrap() < 0.0);
    let small: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8].iter().map(|&b| profile_score(b, &s).unwrap()).collect();
    assert!(small.windows(2).all(|w| w[1] > 10.0 * w[0]), "{small:?}");
    assert!(small[3] > 1e8);
}

#[test]
fn plug_in_estimates_are_exact() {
    let s = sample(2, 1, 4);
    let fit = solve_mle(&s).unwrap();
    let rc = rc_estimates(&fit, 0.75).unwrap();
    let p = IepParams::new(fit.alpha_weighted, fit.beta_hat).unwrap();
    assert_eq!(rc.r_hat, p.reliability(0.75).unwrap());
    assert_eq!(rc.h_hat, p.hazard(0.75).unwrap());
    assert_eq!(rc.mtf_hat, p.mtf());
    assert!(rc.r_hat > 0.0 && rc.r_hat < 1.0);
}

fn fd_gradient(s: &BapcsSample, theta: &[f64]) -> Vec<f64> {
    let f = |th: &[f64]| log_likelihood(s, &th[1..], th[0]).unwrap();
    (0..theta.len())
        .map(|i| {
            let h = 1e-6 * theta[i].abs().max(1.0);
            let (mut up, mut dn) = (theta.to_vec(), theta.to_vec());
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradient_matches_finite_differences_and_vanishes_at_the_fit() {
    for rep in 0..5 {
        let s = sample(1 + rep as u8, 1, rep);
        let fit = solve_mle(&s).unwrap();
        let g = log_likelihood_gradient(&s, &fit.alpha_hats, fit.beta_hat).unwrap();
        for gi in &g[1..] {
            assert!(gi.abs() < 1e-8, "{gi}");
        }
        assert!(g[0].abs() < 1e-7, "{}", g[0]);
        let theta: Vec<f64> = std::iter::once(1.7).chain(fit.alpha_hats.iter().map(|a| a * 1.1)).collect();
        let analytic = log_likelihood_gradient(&s, &theta[1..], theta[0]).unwrap();
        let fd = fd_gradient(&s, &theta);
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

#[test]
fn hessian_matches_differences_of_the_gradient() {
    for rep in 0..5 {
        let s = sample(3, 1 + (rep % 3) as u8, rep);
        let fit = solve_mle(&s).unwrap();
        let mut theta = vec![fit.beta_hat];
        theta.extend(&fit.alpha_hats);
        let h = log_likelihood_hessian(&s, &fit.alpha_hats, fit.beta_hat).unwrap();
        let grad = |th: &[f64]| log_likelihood_gradient(&s, &th[1..], th[0]).unwrap();
        for j in 0..theta.len() {
            let step = 1e-5 * theta[j].abs().max(1.0);
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[j] += step;
            dn[j] -= step;
            let (gu, gd) = (grad(&up), grad(&dn));
            for i in 0..theta.len() {
                let fd = (gu[i] - gd[i]) / (2.0 * step);
                assert!((h[i][j] - fd).abs() <= 1e-5 * h[i][j].abs().max(1e-3), "({i},{j}) {} vs {fd}", h[i][j]);
            }
        }
        let info = observed_information(&s, &fit).unwrap();
        for (i, f) in s.facilities.iter().enumerate() {
            let expect = f.m() as f64 / (fit.alpha_hats[i] * fit.alpha_hats[i]);
            assert!(rel(info.matrix[i + 1][i + 1], expect) < 1e-12);
            for j in 0..s.k() {
                if j != i {
                    assert_eq!(info.matrix[i + 1][j + 1], 0.0);
                }
            }
        }
        for i in 0..theta.len() {
            for j in 0..theta.len() {
                assert!((info.matrix[i][j] - info.matrix[j][i]).abs() <= 1e-9 * info.matrix[i][j].abs());
                let v: f64 = (0..theta.len()).map(|l| info.matrix[i][l] * info.inverse[l][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }
}

fn target_value(target: DeltaTarget, alpha: f64, beta: f64) -> f64 {
    let p = IepParams::new(alpha, beta).unwrap();
    match target {
        DeltaTarget::AlphaWeighted => alpha,
        DeltaTarget::Reliability(t) => p.reliability(t).unwrap(),
        DeltaTarget::Hazard(t) => p.hazard(t).unwrap(),
        DeltaTarget::Mtf => p.mtf(),
    }
}

#[test]
fn delta_gradients_match_finite_differences_on_50_fits() {
    for rep in 0..50 {
        let s = sample(1 + (rep % 6) as u8, 1 + (rep % 3) as u8, rep);
        let fit = solve_mle(&s).unwrap();
        let info = observed_information(&s, &fit).unwrap();
        let w: Vec<f64> = info.alpha_variances().iter().map(|v| 1.0 / v).collect();
        let total: f64 = w.iter().sum();
        for target in [
            DeltaTarget::AlphaWeighted,
            DeltaTarget::Reliability(0.75),
            DeltaTarget::Hazard(0.75),
            DeltaTarget::Mtf,
        ] {
            let g = delta_gradient(&fit, &info.inverse, target).unwrap();
            let phi = |th: &[f64]| {
                let a = th[1..].iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / total;
                target_value(target, a, th[0])
            };
            let mut theta = vec![fit.beta_hat];
            theta.extend(&fit.alpha_hats);
            for j in 0..theta.len() {
                let h = 1e-6 * theta[j].abs();
                let (mut up, mut dn) = (theta.clone(), theta.clone());
                up[j] += h;
                dn[j] -= h;
                let fd = (phi(&up) - phi(&dn)) / (2.0 * h);
                let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!((g[j] - fd).abs() <= 1e-6 * scale, "{target:?} {j}: {} vs {fd}", g[j]);
            }
        }
    }
}

#[test]
fn weighted_alpha_matches_information_weights() {
    for rep in 0..10 {
        let s = sample(5, 2, rep);
        let fit = solve_mle(&s).unwrap();
        let info = observed_information(&s, &fit).unwrap();
        let again = weighted_alpha(&fit.alpha_hats, &info.alpha_variances()).unwrap();
        assert!((again - fit.alpha_weighted).abs() <= 1e-12 * again);
        let v = delta_method_variance(&fit, &info.inverse, DeltaTarget::AlphaWeighted).unwrap();
        let total: f64 = info.alpha_variances().iter().map(|v| 1.0 / v).sum();
        // Fixed weights: the variance is w' V w with w_i = (1/v_ii) / sum(1/v_jj).
        let w: Vec<f64> = info.alpha_variances().iter().map(|v| 1.0 / v / total).collect();
        let expect: f64 = (0..w.len())
            .flat_map(|i| (0..w.len()).map(move |j| (i, j)))
            .map(|(i, j)| w[i] * w[j] * info.inverse[i + 1][j + 1])
            .sum();
        assert!(rel(v, expect) < 1e-12);
    }
}

#[test]
fn intervals_are_centred_with_normal_half_width() {
    let z = z_quantile(0.975).unwrap();
    for rep in 0..10 {
        let s = sample(6, 3, rep);
        let r = fit_with_intervals(&s, 0.05, 0.75).unwrap();
        let all = [&r.beta, &r.alpha, &r.reliability, &r.hazard, &r.mtf]
            .into_iter()
            .chain(r.alpha_i.iter());
        for t in all {
            let i = &t.interval;
            assert!(i.lower <= t.estimate && t.estimate <= i.upper);
            assert!((0.5 * (i.lower + i.upper) - t.estimate).abs() <= 1e-12 * t.estimate.abs());
            assert!((i.length - 2.0 * z * t.variance.sqrt()).abs() <= 1e-12 * i.length.max(1e-12));
            assert_eq!(i.length, i.upper - i.lower);
        }
    }
}

#[test]
fn beta_interval_coverage_is_near_nominal() {
    let cfg = StudyConfig::new(1, 1, 99);
    let reps = 2000;
    let mut covered = 0;
    for rep in 0..reps {
        let s = cfg.replication_sample(rep).unwrap();
        let r = fit_with_intervals(&s, 0.05, 0.75).unwrap();
        if r.beta.interval.contains(2.25) {
            covered += 1;
        }
    }
    let freq = covered as f64 / reps as f64;
    assert!((0.91..=0.99).contains(&freq), "coverage {freq}");
}

fn fit_invariants(s: &BapcsSample, fit: &MleFit) -> std::result::Result<(), TestCaseError> {
    prop_assert!(fit.score_residual.abs() <= 1e-8);
    prop_assert!(fit.alpha_hats.iter().all(|a| *a > 0.0));
    let lo = profile_score(fit.beta_hat * 0.5, s).unwrap();
    let hi = profile_score(fit.beta_hat * 2.0, s).unwrap();
    prop_assert!(lo > 0.0 && hi < 0.0);
    let profile = |b: f64| {
        let a: Vec<f64> = s.facilities.iter().map(|f| alpha_closed_form(f, b).unwrap()).collect();
        log_likelihood(s, &a, b).unwrap()
    };
    let best = profile(fit.beta_hat);
    for k in -10..=10 {
        let b = fit.beta_hat * (1.0 + 0.02 * k as f64);
        prop_assert!(profile(b) <= best + 1e-9);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn root_is_unique_and_guess_independent(setup in 1u8..=6, plan in 1u8..=3, rep in 0usize..100_000) {
        let s = sample(setup, plan, rep);
        let fit = solve_mle(&s).unwrap();
        fit_invariants(&s, &fit)?;
        let low = solve_mle_with_guess(&s, 0.1).unwrap();
        let high = solve_mle_with_guess(&s, 10.0).unwrap();
        prop_assert!(rel(low.beta_hat, fit.beta_hat) < 1e-8);
        prop_assert!(rel(high.beta_hat, fit.beta_hat) < 1e-8);
    }
}
