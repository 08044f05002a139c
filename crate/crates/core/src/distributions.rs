//! Closed-form IEP distribution functions, order statistics of IEP samples and
//! the four competitor lifetime models used in the real-data comparison.
//!
//! All powers of the odds ratio `t / (1 + t)` are evaluated in log space, so
//! large shape values (the carbon-fibre fit has `alpha` near 44) do not
//! underflow.

use serde::{Deserialize, Serialize};

use crate::numeric::{ln_1m_exp, ln_binomial, ln_odds_ratio};
use crate::{Error, Result};

/// Shape pair `(alpha, beta)` of the IEP law with
/// `F(t) = 1 - (1 - (t / (1 + t))^beta)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct IepParams {
    alpha: f64,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawParams> for IepParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        IepParams::new(raw.alpha, raw.beta)
    }
}

impl From<IepParams> for RawParams {
    fn from(p: IepParams) -> Self {
        RawParams {
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and positive, got {v}")))
    }
}

impl IepParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `ln(1 - (t/(1+t))^beta)`, i.e. `ln R(t) / alpha`. Requires `t > 0`.
    pub(crate) fn ln_base(&self, t: f64) -> f64 {
        ln_1m_exp(self.beta * ln_odds_ratio(t))
    }

    /// Log survival `ln R(t)`, valid for `t >= 0`.
    pub fn ln_reliability(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.alpha * self.ln_base(t))
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        let ln_r = self.ln_reliability(t)?;
        Ok(-ln_r.exp_m1())
    }

    /// Density. Defined for `t > 0`.
    pub fn pdf(&self, t: f64) -> Result<f64> {
        Ok(self.ln_pdf(t)?.exp())
    }

    pub fn ln_pdf(&self, t: f64) -> Result<f64> {
        check_open_time(t)?;
        if t.is_infinite() {
            return Ok(f64::NEG_INFINITY);
        }
        let (a, b) = (self.alpha, self.beta);
        Ok(a.ln() + b.ln() + (b - 1.0) * t.ln() - (b + 1.0) * t.ln_1p()
            + (a - 1.0) * self.ln_base(t))
    }

    pub fn reliability(&self, t: f64) -> Result<f64> {
        check_open_time(t)?;
        Ok(self.ln_reliability(t)?.exp())
    }

    pub fn hazard(&self, t: f64) -> Result<f64> {
        check_open_time(t)?;
        if t.is_infinite() {
            return Ok(0.0);
        }
        let (a, b) = (self.alpha, self.beta);
        let ln_h = a.ln() + b.ln() + (b - 1.0) * t.ln() - (b + 1.0) * t.ln_1p() - self.ln_base(t);
        Ok(ln_h.exp())
    }

    /// Closed-form inverse of the CDF.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!("probability must lie in (0,1), got {u}")));
        }
        Ok(self.quantile_from_ln_reliability((-u).ln_1p()))
    }

    /// Time `t` with `ln R(t) = ln_s`, for `ln_s < 0`.
    pub fn quantile_from_ln_reliability(&self, ln_s: f64) -> f64 {
        // (t/(1+t))^beta = 1 - exp(ln_s / alpha)
        let ln_pow = (-(ln_s / self.alpha).exp_m1()).ln();
        let ln_x = ln_pow / self.beta;
        ln_x.exp() / -ln_x.exp_m1()
    }

    /// Median time to failure.
    pub fn mtf(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        // {(1 - 2^{-1/a})^{-1/b} - 1}^{-1}
        let c = -(-std::f64::consts::LN_2 / a).exp_m1();
        let ln_x = c.ln() / b;
        ln_x.exp() / -ln_x.exp_m1()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::domain(format!("time must be non-negative, got {t}")))
    } else {
        Ok(())
    }
}

fn check_open_time(t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        Err(Error::domain(format!("time must be positive, got {t}")))
    } else {
        Ok(())
    }
}

fn check_rank(r: usize, n: usize) -> Result<()> {
    if n == 0 || r == 0 || r > n {
        Err(Error::domain(format!("order statistic rank {r} outside [1, {n}]")))
    } else {
        Ok(())
    }
}

/// CDF of the `r`-th smallest of `n` iid IEP lifetimes, via the binomial sum.
pub fn order_stat_cdf(r: usize, n: usize, t: f64, p: &IepParams) -> Result<f64> {
    check_rank(r, n)?;
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let ln_r = p.ln_reliability(t)?;
    let ln_f = ln_1m_exp(ln_r);
    let total: f64 = (r..=n)
        .map(|j| {
            let ln_term = ln_binomial(n as u64, j as u64)
                + j as f64 * ln_f
                + if j == n { 0.0 } else { (n - j) as f64 * ln_r };
            ln_term.exp()
        })
        .sum();
    Ok(total.min(1.0))
}

/// Density of the `r`-th smallest of `n` iid IEP lifetimes.
pub fn order_stat_pdf(r: usize, n: usize, t: f64, p: &IepParams) -> Result<f64> {
    check_rank(r, n)?;
    let ln_f = p.ln_pdf(t)?;
    let ln_r = p.ln_reliability(t)?;
    let ln_cdf = ln_1m_exp(ln_r);
    // n! / ((r-1)! (n-r)!) = n * C(n-1, r-1)
    let mut ln = (n as f64).ln() + ln_binomial((n - 1) as u64, (r - 1) as u64) + ln_f;
    if r > 1 {
        ln += (r - 1) as f64 * ln_cdf;
    }
    if r < n {
        ln += (n - r) as f64 * ln_r;
    }
    Ok(ln.exp())
}

/// CDF of the sample minimum: `1 - (1 - (t/(1+t))^beta)^(n alpha)`.
pub fn min_order_stat_cdf(n: usize, t: f64, p: &IepParams) -> Result<f64> {
    check_rank(1, n)?;
    Ok(-(n as f64 * p.ln_reliability(t)?).exp_m1())
}

pub fn min_order_stat_pdf(n: usize, t: f64, p: &IepParams) -> Result<f64> {
    check_rank(1, n)?;
    check_open_time(t)?;
    let (a, b) = (p.alpha, p.beta);
    let na = n as f64 * a;
    let ln = na.ln() + b.ln() + (b - 1.0) * t.ln() - (b + 1.0) * t.ln_1p() + (na - 1.0) * p.ln_base(t);
    Ok(ln.exp())
}

/// CDF of the sample maximum: `F(t)^n`.
pub fn max_order_stat_cdf(n: usize, t: f64, p: &IepParams) -> Result<f64> {
    check_rank(1, n)?;
    Ok(p.cdf(t)?.powi(n as i32))
}

pub fn max_order_stat_pdf(n: usize, t: f64, p: &IepParams) -> Result<f64> {
    check_rank(1, n)?;
    Ok(n as f64 * p.pdf(t)? * p.cdf(t)?.powi(n as i32 - 1))
}

/// Threshold below which a generalized Pareto shape is treated as exactly 0.
pub const GP_ZERO_SHAPE: f64 = 1e-12;

/// The competitor lifetime models compared against the IEP fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum CompetitorModel {
    /// Generalized Pareto, `f = (1/sigma) (1 - k x / sigma)^(1/k - 1)`.
    #[serde(rename = "GP")]
    GeneralizedPareto { k: f64, sigma: f64 },
    /// Exponentiated Pareto, `F = [1 - (1 + x)^-lambda]^theta`.
    #[serde(rename = "EP")]
    ExponentiatedPareto { lambda: f64, theta: f64 },
    /// Inverted exponentiated Rayleigh, `F = 1 - [1 - exp(-beta / x^2)]^alpha`.
    #[serde(rename = "IER")]
    InvertedExpRayleigh { alpha: f64, beta: f64 },
    /// Inverse Lomax, `F = (1 + 1/(theta x))^-alpha`.
    #[serde(rename = "IL")]
    InverseLomax { alpha: f64, theta: f64 },
}

impl CompetitorModel {
    pub fn generalized_pareto(k: f64, sigma: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::domain(format!("GP shape must be finite, got {k}")));
        }
        check_positive("sigma", sigma)?;
        Ok(Self::GeneralizedPareto { k, sigma })
    }

    pub fn exponentiated_pareto(lambda: f64, theta: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("theta", theta)?;
        Ok(Self::ExponentiatedPareto { lambda, theta })
    }

    pub fn inverted_exp_rayleigh(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self::InvertedExpRayleigh { alpha, beta })
    }

    pub fn inverse_lomax(alpha: f64, theta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("theta", theta)?;
        Ok(Self::InverseLomax { alpha, theta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GeneralizedPareto { .. } => "GP",
            Self::ExponentiatedPareto { .. } => "EP",
            Self::InvertedExpRayleigh { .. } => "IER",
            Self::InverseLomax { .. } => "IL",
        }
    }

    pub fn params(&self) -> [f64; 2] {
        match *self {
            Self::GeneralizedPareto { k, sigma } => [k, sigma],
            Self::ExponentiatedPareto { lambda, theta } => [lambda, theta],
            Self::InvertedExpRayleigh { alpha, beta } => [alpha, beta],
            Self::InverseLomax { alpha, theta } => [alpha, theta],
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        if !(x > 0.0) || x.is_infinite() {
            return false;
        }
        match *self {
            Self::GeneralizedPareto { k, sigma } if k.abs() >= GP_ZERO_SHAPE => 1.0 - k * x / sigma > 0.0,
            _ => true,
        }
    }

    /// Log density at a point inside the support; `-inf` outside it.
    pub fn ln_pdf_or_neg_inf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::GeneralizedPareto { k, sigma } => {
                if k.abs() < GP_ZERO_SHAPE {
                    -sigma.ln() - x / sigma
                } else {
                    -sigma.ln() + (1.0 / k - 1.0) * (-k * x / sigma).ln_1p()
                }
            }
            Self::ExponentiatedPareto { lambda, theta } => {
                let ln1px = x.ln_1p();
                lambda.ln() + theta.ln() + (theta - 1.0) * ln_1m_exp(-lambda * ln1px)
                    - (lambda + 1.0) * ln1px
            }
            Self::InvertedExpRayleigh { alpha, beta } => {
                let z = -beta / (x * x);
                (2.0 * alpha * beta).ln() - 3.0 * x.ln() + z + (alpha - 1.0) * ln_1m_exp(z)
            }
            Self::InverseLomax { alpha, theta } => {
                (alpha / theta).ln() - 2.0 * x.ln() - (alpha + 1.0) * (1.0 / (theta * x)).ln_1p()
            }
        }
    }

    /// Density; a point outside the support is reported as an error.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::domain("density argument is NaN"));
        }
        if !self.in_support(x) {
            return Err(Error::OutsideSupport(format!("{} density at x = {x}", self.name())));
        }
        Ok(self.ln_pdf_or_neg_inf(x).exp())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::domain("cdf argument is NaN"));
        }
        if x <= 0.0 {
            return Ok(0.0);
        }
        if x.is_infinite() {
            return Ok(1.0);
        }
        Ok(match *self {
            Self::GeneralizedPareto { k, sigma } => {
                if k.abs() < GP_ZERO_SHAPE {
                    -(-x / sigma).exp_m1()
                } else {
                    let z = 1.0 - k * x / sigma;
                    if z <= 0.0 {
                        1.0
                    } else {
                        -((-k * x / sigma).ln_1p() / k).exp_m1()
                    }
                }
            }
            Self::ExponentiatedPareto { lambda, theta } => {
                (theta * ln_1m_exp(-lambda * x.ln_1p())).exp()
            }
            Self::InvertedExpRayleigh { alpha, beta } => {
                -(alpha * ln_1m_exp(-beta / (x * x))).exp_m1()
            }
            Self::InverseLomax { alpha, theta } => (-alpha * (1.0 / (theta * x)).ln_1p()).exp(),
        })
    }

    /// Inverse CDF for `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!("probability must lie in (0,1), got {u}")));
        }
        Ok(match *self {
            Self::GeneralizedPareto { k, sigma } => {
                let ln_s = (-u).ln_1p();
                if k.abs() < GP_ZERO_SHAPE {
                    -sigma * ln_s
                } else {
                    -sigma * (k * ln_s).exp_m1() / k
                }
            }
            Self::ExponentiatedPareto { lambda, theta } => {
                // (1+x)^-lambda = 1 - u^(1/theta)
                let ln_base = ln_1m_exp(u.ln() / theta);
                (-ln_base / lambda).exp_m1()
            }
            Self::InvertedExpRayleigh { alpha, beta } => {
                // exp(-beta/x^2) = 1 - (1-u)^(1/alpha)
                let ln_e = ln_1m_exp((-u).ln_1p() / alpha);
                (beta / -ln_e).sqrt()
            }
            Self::InverseLomax { alpha, theta } => {
                1.0 / (theta * (-u.ln() / alpha).exp_m1())
            }
        })
    }
}

/// `sum(ln f(x_i))`; observations outside the support contribute `-inf`.
pub fn competitor_loglik(data: &[f64], model: &CompetitorModel) -> f64 {
    data.iter().map(|&x| model.ln_pdf_or_neg_inf(x)).sum()
}
