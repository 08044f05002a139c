use bapcs::distributions::{
    max_order_stat_cdf, min_order_stat_cdf, order_stat_cdf, order_stat_pdf, IepParams,
};
use proptest::prelude::*;

/// Adaptive Simpson quadrature on [a, b].
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral over (0, inf) through t = u / (1 - u).
fn integrate_half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    let g = |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            let t = u / (1.0 - u);
            f(t) / ((1.0 - u) * (1.0 - u))
        }
    };
    simpson(&g, 0.0, 1.0, 1e-12)
}

#[test]
fn density_integrates_to_one() {
    for (a, b) in [(3.5, 2.25), (0.7, 1.3), (43.8478, 7.6876), (1.0, 0.8)] {
        let p = IepParams::new(a, b).unwrap();
        let total = integrate_half_line(|t| p.pdf(t).unwrap());
        assert!((total - 1.0).abs() < 1e-8, "({a}, {b}): {total}");
    }
}

#[test]
fn order_statistic_density_integrates_to_one() {
    let p = IepParams::new(3.5, 2.25).unwrap();
    let total = integrate_half_line(|t| order_stat_pdf(3, 5, t, &p).unwrap());
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn order_statistic_cdf_is_integral_of_density() {
    let p = IepParams::new(3.5, 2.25).unwrap();
    for t in [0.2, 0.75, 1.5, 4.0] {
        let integral = simpson(&|s: f64| if s > 0.0 { order_stat_pdf(2, 6, s, &p).unwrap() } else { 0.0 }, 0.0, t, 1e-13);
        let cdf = order_stat_cdf(2, 6, t, &p).unwrap();
        assert!((integral - cdf).abs() < 1e-9, "t = {t}: {integral} vs {cdf}");
    }
}

fn params() -> impl Strategy<Value = IepParams> {
    (0.2f64..60.0, 0.2f64..12.0).prop_map(|(a, b)| IepParams::new(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_is_a_probability_and_increasing(p in params(), t in 0.01f64..20.0, dt in 1e-3f64..1.0) {
        let (c1, c2) = (p.cdf(t).unwrap(), p.cdf(t + dt).unwrap());
        prop_assert!((0.0..=1.0).contains(&c1));
        prop_assert!(c2 >= c1);
    }

    #[test]
    fn hazard_times_reliability_is_density(p in params(), t in 0.05f64..10.0) {
        let f = p.pdf(t).unwrap();
        let hr = p.hazard(t).unwrap() * p.reliability(t).unwrap();
        prop_assume!(f > 1e-250);
        prop_assert!((hr - f).abs() <= 1e-12 * f, "{} vs {}", hr, f);
    }

    #[test]
    fn density_is_derivative_of_cdf(p in params(), t in 0.1f64..5.0) {
        let h = 1e-5 * t;
        // Difference the smaller tail to avoid cancellation near 0 or 1.
        let fd = if p.cdf(t).unwrap() < 0.5 {
            (p.cdf(t + h).unwrap() - p.cdf(t - h).unwrap()) / (2.0 * h)
        } else {
            (p.reliability(t - h).unwrap() - p.reliability(t + h).unwrap()) / (2.0 * h)
        };
        let f = p.pdf(t).unwrap();
        prop_assume!(f > 1e-6);
        prop_assert!((fd - f).abs() <= 1e-6 * f, "{} vs {}", fd, f);
    }

    #[test]
    fn quantile_inverts_cdf(p in params(), u in 0.001f64..0.999) {
        let t = p.quantile(u).unwrap();
        prop_assert!((p.cdf(t).unwrap() - u).abs() < 1e-10);
    }

    #[test]
    fn mtf_is_the_median(p in params()) {
        prop_assert!((p.cdf(p.mtf()).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn extreme_order_statistics(p in params(), t in 0.05f64..5.0, n in 1usize..30) {
        let lo = order_stat_cdf(1, n, t, &p).unwrap();
        let hi = order_stat_cdf(n, n, t, &p).unwrap();
        prop_assert!((lo - min_order_stat_cdf(n, t, &p).unwrap()).abs() < 1e-12);
        prop_assert!((hi - max_order_stat_cdf(n, t, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn order_statistic_cdf_decreases_in_rank(p in params(), t in 0.05f64..5.0, n in 2usize..25, r in 1usize..24) {
        prop_assume!(r < n);
        prop_assert!(order_stat_cdf(r, n, t, &p).unwrap() + 1e-15 >= order_stat_cdf(r + 1, n, t, &p).unwrap());
    }
}
