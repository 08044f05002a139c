//! Small numerically careful helpers shared by the model code.

use std::f64::consts::LN_2;

/// `ln(1 - e^x)` for `x <= 0`.
pub(crate) fn ln_1m_exp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(t / (1 + t))` for `t > 0`.
pub(crate) fn ln_odds_ratio(t: f64) -> f64 {
    -(1.0 / t).ln_1p()
}

/// `ln(-ln(1 - e^x))` for `x <= 0`, stable when `e^x` underflows.
pub(crate) fn ln_neg_ln_1m_exp(x: f64) -> f64 {
    if x < -20.0 {
        // -ln(1 - s) = s + s^2/2 + s^3/3 + ...
        let s = x.exp();
        x + (s * (0.5 + s / 3.0)).ln_1p()
    } else {
        (-ln_1m_exp(x)).ln()
    }
}

/// Natural log of the binomial coefficient `C(n, k)`.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}
