//! Observed information, dense inversion, delta-method variances and
//! normal-approximation confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::censoring::BapcsSample;
use crate::distributions::IepParams;
use crate::gof::csv_err;
use crate::mle::{self, rc_estimates, MleFit, RcEstimates};
use crate::numeric::{ln_1m_exp, ln_odds_ratio};
use crate::{Error, Result};

const INVERSE_RESIDUAL_TOL: f64 = 1e-8;

/// Observed information ordered `(beta, alpha_1, ..., alpha_k)` and its inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedInfo {
    pub matrix: Vec<Vec<f64>>,
    pub inverse: Vec<Vec<f64>>,
}

impl ObservedInfo {
    pub fn beta_variance(&self) -> f64 {
        self.inverse[0][0]
    }

    /// `v_{(i+1)(i+1)}` for every facility.
    pub fn alpha_variances(&self) -> Vec<f64> {
        (1..self.inverse.len()).map(|i| self.inverse[i][i]).collect()
    }
}

/// A two-sided interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    #[serde(default)]
    pub target: String,
    pub lower: f64,
    pub upper: f64,
    pub length: f64,
    pub level: f64,
}

impl IntervalEstimate {
    pub fn new(lower: f64, upper: f64, level: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::domain(format!("interval bounds out of order: ({lower}, {upper})")));
        }
        Ok(Self {
            target: String::new(),
            lower,
            upper,
            length: upper - lower,
            level,
        })
    }

    pub fn named(mut self, target: impl Into<String>) -> Self {
        self.target = target.into();
        self
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Negative Hessian of the log-likelihood at `(beta, alphas)` with its inverse.
pub fn observed_information_at(sample: &BapcsSample, beta: f64, alphas: &[f64]) -> Result<ObservedInfo> {
    let h = mle::log_likelihood_hessian(sample, alphas, beta)?;
    let matrix: Vec<Vec<f64>> = h.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
    for (i, row) in matrix.iter().enumerate() {
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                facility: i.saturating_sub(1),
                message: format!("information entry is {v}"),
            });
        }
    }
    let inverse = invert_spd(&matrix)?;
    Ok(ObservedInfo { matrix, inverse })
}

pub fn observed_information(sample: &BapcsSample, fit: &MleFit) -> Result<ObservedInfo> {
    observed_information_at(sample, fit.beta_hat, &fit.alpha_hats)
}

/// Inverse of a symmetric positive definite matrix by Gauss-Jordan
/// elimination with partial pivoting, checked by its residual.
pub fn invert_spd(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = matrix.len();
    if d == 0 || matrix.iter().any(|r| r.len() != d) {
        return Err(Error::domain("matrix must be square and non-empty"));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return Err(Error::NonPositiveDefinite("matrix is singular".into()));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..d {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..d {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col];
                for j in 0..d {
                    a[row][j] -= factor * a[col][j];
                    inv[row][j] -= factor * inv[col][j];
                }
            }
        }
    }
    let mut residual: f64 = 0.0;
    for (i, row) in matrix.iter().enumerate() {
        for j in 0..d {
            let v: f64 = row.iter().zip(&inv).map(|(m, r)| m * r[j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((v - target).abs());
        }
    }
    if !(residual < INVERSE_RESIDUAL_TOL) {
        return Err(Error::NonPositiveDefinite(format!("inversion residual {residual:e}")));
    }
    if let Some(i) = (0..d).find(|&i| !(inv[i][i] > 0.0)) {
        return Err(Error::NonPositiveDefinite(format!(
            "diagonal entry {i} of the inverse is {}",
            inv[i][i]
        )));
    }
    Ok(inv)
}

/// Inverse of the standard normal CDF.
pub fn z_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0,1), got {p}")));
    }
    Ok(Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma must lie in (0,1), got {gamma}")))
    }
}

/// `estimate -/+ z_{gamma/2} sqrt(variance)`. A zero variance gives a
/// degenerate interval.
pub fn aci_parameter(estimate: f64, variance: f64, gamma: f64) -> Result<IntervalEstimate> {
    check_gamma(gamma)?;
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::domain(format!("variance must be finite and nonnegative, got {variance}")));
    }
    let half = z_quantile(1.0 - gamma / 2.0)? * variance.sqrt();
    IntervalEstimate::new(estimate - half, estimate + half, 1.0 - gamma)
}

/// Functions of the parameters handled by [`delta_method_variance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaTarget {
    AlphaWeighted,
    Reliability(f64),
    Hazard(f64),
    Mtf,
}

impl DeltaTarget {
    pub fn name(&self) -> &'static str {
        match self {
            DeltaTarget::AlphaWeighted => "alpha",
            DeltaTarget::Reliability(_) => "reliability",
            DeltaTarget::Hazard(_) => "hazard",
            DeltaTarget::Mtf => "mtf",
        }
    }
}

/// `(d phi / d alpha, d phi / d beta)` at `(alpha, beta)`.
pub fn target_partials(target: DeltaTarget, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let p = IepParams::new(alpha, beta)?;
    let check_t = |t: f64| {
        if t.is_finite() && t > 0.0 {
            Ok(t)
        } else {
            Err(Error::domain(format!("evaluation time must be finite and positive, got {t}")))
        }
    };
    Ok(match target {
        DeltaTarget::AlphaWeighted => (1.0, 0.0),
        DeltaTarget::Reliability(t) => {
            let t = check_t(t)?;
            let ln_x = ln_odds_ratio(t);
            let lns = beta * ln_x;
            let r = p.reliability(t)?;
            let l = ln_1m_exp(lns);
            let ratio = lns.exp() / -lns.exp_m1();
            (r * l, -r * alpha * ratio * ln_x)
        }
        DeltaTarget::Hazard(t) => {
            let t = check_t(t)?;
            let ln_x = ln_odds_ratio(t);
            let h = p.hazard(t)?;
            let one_minus_s = -(beta * ln_x).exp_m1();
            (h / alpha, h * (1.0 / beta + ln_x / one_minus_s))
        }
        DeltaTarget::Mtf => {
            let two_pow = (-std::f64::consts::LN_2 / alpha).exp();
            let c = -(-std::f64::consts::LN_2 / alpha).exp_m1();
            let c_pow = (-c.ln() / beta).exp();
            let d = c_pow - 1.0;
            let dc_dalpha = -two_pow * std::f64::consts::LN_2 / (alpha * alpha);
            let dd_dalpha = c_pow * (-1.0 / beta) * dc_dalpha / c;
            let dd_dbeta = c_pow * c.ln() / (beta * beta);
            (-dd_dalpha / (d * d), -dd_dbeta / (d * d))
        }
    })
}

/// Gradient of the target in `(beta, alpha_1, ..., alpha_k)`, with the
/// weights `1 / v_{(i+1)(i+1)}` of the weighted alpha held fixed.
pub fn delta_gradient(fit: &MleFit, vcov: &[Vec<f64>], target: DeltaTarget) -> Result<Vec<f64>> {
    let k = fit.alpha_hats.len();
    if vcov.len() != k + 1 || vcov.iter().any(|r| r.len() != k + 1) {
        return Err(Error::domain(format!("covariance matrix must be {0}x{0}", k + 1)));
    }
    let weights: Vec<f64> = (1..=k).map(|i| 1.0 / vcov[i][i]).collect();
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::NonPositiveDefinite("alpha variances must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    let (d_alpha, d_beta) = target_partials(target, fit.alpha_weighted, fit.beta_hat)?;
    let mut grad = Vec::with_capacity(k + 1);
    grad.push(d_beta);
    grad.extend(weights.iter().map(|w| d_alpha * w / total));
    if let Some(g) = grad.iter().find(|g| !g.is_finite()) {
        return Err(Error::Numeric {
            facility: 0,
            message: format!("delta-method gradient entry is {g}"),
        });
    }
    Ok(grad)
}

/// `grad' V grad` for the chosen target.
pub fn delta_method_variance(fit: &MleFit, vcov: &[Vec<f64>], target: DeltaTarget) -> Result<f64> {
    let g = delta_gradient(fit, vcov, target)?;
    let v: f64 = g
        .iter()
        .enumerate()
        .map(|(i, gi)| gi * g.iter().zip(&vcov[i]).map(|(gj, vij)| gj * vij).sum::<f64>())
        .sum();
    if !(v >= 0.0) {
        return Err(Error::NonPositiveDefinite(format!("delta-method variance is {v}")));
    }
    Ok(v)
}

/// Point estimate, variance and interval for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub estimate: f64,
    pub variance: f64,
    pub interval: IntervalEstimate,
}

/// Everything the likelihood route produces for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub fit: MleFit,
    pub rc: RcEstimates,
    pub info: ObservedInfo,
    pub beta: TargetEstimate,
    pub alpha_i: Vec<TargetEstimate>,
    pub alpha: TargetEstimate,
    pub reliability: TargetEstimate,
    pub hazard: TargetEstimate,
    pub mtf: TargetEstimate,
}

impl FitResult {
    /// All targets in a fixed order: beta, alpha_i, alpha, R, H, MTF.
    pub fn targets(&self) -> Vec<&TargetEstimate> {
        let mut out = vec![&self.beta];
        out.extend(&self.alpha_i);
        out.extend([&self.alpha, &self.reliability, &self.hazard, &self.mtf]);
        out
    }

    pub fn intervals(&self) -> Vec<&IntervalEstimate> {
        self.targets().into_iter().map(|t| &t.interval).collect()
    }
}

pub const ESTIMATES_HEADER: [&str; 7] = ["target", "estimate", "variance", "lower", "upper", "length", "level"];

/// One CSV row per target under [`ESTIMATES_HEADER`].
pub fn write_estimates_csv<W: std::io::Write>(targets: &[&TargetEstimate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATES_HEADER).map_err(csv_err)?;
    for t in targets {
        let i = &t.interval;
        let nums = [t.estimate, t.variance, i.lower, i.upper, i.length, i.level].map(|v| v.to_string());
        w.write_record(std::iter::once(i.target.clone()).chain(nums)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn target_estimate(name: String, estimate: f64, variance: f64, gamma: f64) -> Result<TargetEstimate> {
    Ok(TargetEstimate {
        estimate,
        variance,
        interval: aci_parameter(estimate, variance, gamma)?.named(name),
    })
}

/// Fits the sample and attaches asymptotic intervals for `beta`, each
/// `alpha_i`, the weighted alpha and the characteristics at `t`.
pub fn fit_with_intervals(sample: &BapcsSample, gamma: f64, t: f64) -> Result<FitResult> {
    check_gamma(gamma)?;
    let fit = mle::solve_mle(sample)?;
    intervals_for_fit(sample, fit, gamma, t)
}

pub fn intervals_for_fit(sample: &BapcsSample, fit: MleFit, gamma: f64, t: f64) -> Result<FitResult> {
    let info = observed_information(sample, &fit)?;
    let rc = rc_estimates(&fit, t)?;
    let v = &info.inverse;
    let beta = target_estimate("beta".into(), fit.beta_hat, v[0][0], gamma)?;
    let alpha_i = fit
        .alpha_hats
        .iter()
        .enumerate()
        .map(|(i, &a)| target_estimate(format!("alpha_{}", i + 1), a, v[i + 1][i + 1], gamma))
        .collect::<Result<Vec<_>>>()?;
    let delta = |target: DeltaTarget, estimate: f64| {
        let var = delta_method_variance(&fit, v, target)?;
        target_estimate(target.name().into(), estimate, var, gamma)
    };
    let alpha = delta(DeltaTarget::AlphaWeighted, fit.alpha_weighted)?;
    let reliability = delta(DeltaTarget::Reliability(t), rc.r_hat)?;
    let hazard = delta(DeltaTarget::Hazard(t), rc.h_hat)?;
    let mtf = delta(DeltaTarget::Mtf, rc.mtf_hat)?;
    Ok(FitResult {
        fit,
        rc,
        info,
        beta,
        alpha_i,
        alpha,
        reliability,
        hazard,
        mtf,
    })
}
