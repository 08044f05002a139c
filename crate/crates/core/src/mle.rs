//! Log-likelihood and exact-profile maximum likelihood estimation of
//! `(beta, alpha_1, ..., alpha_k)` from a block adaptive progressive sample.
//!
//! Write `x_j = t_j / (1 + t_j)`, `L_j = ln(1 - x_j^beta)` and let `r_j` be the
//! executed withdrawals of a facility. With `A_i(beta) = sum_j (1 + r_j) L_j`
//! the log-likelihood of facility `i` (normalising constants dropped) is
//!
//! ```text
//! m_i (ln alpha_i + ln beta) + sum_j [(beta - 1) ln t_j - (beta + 1) ln(1 + t_j) - L_j]
//!     + alpha_i A_i(beta)
//! ```
//!
//! so `alpha_i` has the closed-form maximiser `-m_i / A_i(beta)` and `beta` is
//! the root of the profile score.

use serde::{Deserialize, Serialize};

use crate::asymptotic;
use crate::censoring::{BapcsSample, FacilitySample};
use crate::distributions::IepParams;
use crate::numeric::{ln_1m_exp, ln_neg_ln_1m_exp};
use crate::optim::{brent, expand_bracket, RootTolerance};
use crate::{Error, Result};

/// Tolerance on the profile score at the reported root.
pub const SCORE_TOLERANCE: f64 = 1e-10;
/// Relative width of the final root bracket.
pub const BETA_REL_TOLERANCE: f64 = 1e-12;
/// Starting point of the geometric bracket search.
pub const DEFAULT_BETA_GUESS: f64 = 1.0;
const BRACKET_FACTOR: f64 = 4.0;
const BETA_MIN: f64 = 1e-6;
const BETA_MAX: f64 = 1e6;

/// Maximum likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleFit {
    pub beta_hat: f64,
    pub alpha_hats: Vec<f64>,
    /// Inverse-variance weighted combination of `alpha_hats`.
    pub alpha_weighted: f64,
    #[serde(rename = "loglik")]
    pub loglik_at_max: f64,
    /// Profile score at `beta_hat`.
    pub score_residual: f64,
}

impl MleFit {
    pub fn params(&self) -> Result<IepParams> {
        IepParams::new(self.alpha_weighted, self.beta_hat)
    }
}

/// Plug-in reliability characteristics at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcEstimates {
    pub t: f64,
    pub r_hat: f64,
    pub h_hat: f64,
    pub mtf_hat: f64,
}

/// Per-facility sums at a given beta.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FacilityTerms {
    /// `sum_j (1 + r_j) L_j` (negative).
    pub a: f64,
    /// `sum_j (1 + r_j) g_j` with `g_j = x_j^beta ln x_j / (1 - x_j^beta)`.
    pub b: f64,
    /// `b / a`, computed with a common scale factor so it survives underflow.
    pub b_over_a: f64,
    pub sum_l: f64,
    pub sum_g: f64,
    /// `sum_j (1 + r_j) h_j` with `h_j = dg_j / dbeta = (ln x_j)^2 x_j^beta / (1 - x_j^beta)^2`.
    pub h_weighted: f64,
    pub sum_h: f64,
}

pub(crate) fn facility_terms(f: &FacilitySample, beta: f64) -> FacilityTerms {
    let ln_x = f.ln_odds();
    let r = f.effective_removals();
    let shift = ln_x.iter().map(|&l| beta * l).fold(f64::NEG_INFINITY, f64::max);
    let mut t = FacilityTerms {
        a: 0.0,
        b: 0.0,
        b_over_a: 0.0,
        sum_l: 0.0,
        sum_g: 0.0,
        h_weighted: 0.0,
        sum_h: 0.0,
    };
    let (mut a_sc, mut b_sc) = (0.0, 0.0);
    for (&lx, &rj) in ln_x.iter().zip(r) {
        let w = 1.0 + rj as f64;
        let lns = beta * lx;
        let one_minus_s = -lns.exp_m1();
        let s = lns.exp();
        let l = ln_1m_exp(lns);
        let g = lx * s / one_minus_s;
        let h = lx * lx * s / (one_minus_s * one_minus_s);
        t.a += w * l;
        t.b += w * g;
        t.sum_l += l;
        t.sum_g += g;
        t.h_weighted += w * h;
        t.sum_h += h;
        a_sc -= w * (ln_neg_ln_1m_exp(lns) - shift).exp();
        b_sc += w * lx * (lns - shift).exp() / one_minus_s;
    }
    t.b_over_a = b_sc / a_sc;
    t
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("beta must be finite and positive, got {beta}")))
    }
}

fn check_alphas(sample: &BapcsSample, alphas: &[f64]) -> Result<()> {
    if alphas.len() != sample.k() {
        return Err(Error::domain(format!(
            "{} alpha values for {} facilities",
            alphas.len(),
            sample.k()
        )));
    }
    match alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        Some(a) => Err(Error::domain(format!("alpha must be finite and positive, got {a}"))),
        None => Ok(()),
    }
}

/// Log-likelihood of the block sample at `(alphas, beta)`, normalising
/// constants omitted.
pub fn log_likelihood(sample: &BapcsSample, alphas: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_alphas(sample, alphas)?;
    let mut total = 0.0;
    for (f, &alpha) in sample.facilities.iter().zip(alphas) {
        let terms = facility_terms(f, beta);
        let m = f.m() as f64;
        let time_part: f64 = f
            .times()
            .iter()
            .map(|&t| (beta - 1.0) * t.ln() - (beta + 1.0) * t.ln_1p())
            .sum();
        total += m * (alpha.ln() + beta.ln()) + time_part - terms.sum_l + alpha * terms.a;
    }
    Ok(total)
}

/// Analytic gradient ordered `(beta, alpha_1, ..., alpha_k)`.
pub fn log_likelihood_gradient(sample: &BapcsSample, alphas: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    check_alphas(sample, alphas)?;
    let mut grad = vec![0.0; sample.k() + 1];
    for (i, (f, &alpha)) in sample.facilities.iter().zip(alphas).enumerate() {
        let terms = facility_terms(f, beta);
        let m = f.m() as f64;
        let sum_ln_x: f64 = f.ln_odds().iter().sum();
        grad[0] += m / beta + sum_ln_x + terms.sum_g - alpha * terms.b;
        grad[i + 1] = m / alpha + terms.a;
    }
    Ok(grad)
}

/// Analytic Hessian ordered `(beta, alpha_1, ..., alpha_k)`.
pub fn log_likelihood_hessian(sample: &BapcsSample, alphas: &[f64], beta: f64) -> Result<Vec<Vec<f64>>> {
    check_beta(beta)?;
    check_alphas(sample, alphas)?;
    let d = sample.k() + 1;
    let mut h = vec![vec![0.0; d]; d];
    for (i, (f, &alpha)) in sample.facilities.iter().zip(alphas).enumerate() {
        let terms = facility_terms(f, beta);
        let m = f.m() as f64;
        h[0][0] += -m / (beta * beta) + terms.sum_h - alpha * terms.h_weighted;
        h[0][i + 1] = -terms.b;
        h[i + 1][0] = -terms.b;
        h[i + 1][i + 1] = -m / (alpha * alpha);
    }
    Ok(h)
}

/// Closed-form maximiser of the log-likelihood in `alpha_i` at fixed `beta`.
pub fn alpha_closed_form(f: &FacilitySample, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let a = facility_terms(f, beta).a;
    if !(a < 0.0) || !a.is_finite() {
        return Err(Error::DegenerateSample(format!(
            "log-survival sum is {a} at beta = {beta}; alpha is not identifiable"
        )));
    }
    let alpha = -(f.m() as f64) / a;
    if !alpha.is_finite() {
        return Err(Error::DegenerateSample(format!("alpha estimate overflows at beta = {beta}")));
    }
    Ok(alpha)
}

/// Profile score: derivative in `beta` of the log-likelihood with every
/// `alpha_i` replaced by its closed-form maximiser.
pub fn profile_score(beta: f64, sample: &BapcsSample) -> Result<f64> {
    check_beta(beta)?;
    let mut score = 0.0;
    for (i, f) in sample.facilities.iter().enumerate() {
        let terms = facility_terms(f, beta);
        let m = f.m() as f64;
        let sum_ln_x: f64 = f.ln_odds().iter().sum();
        let part = m / beta + sum_ln_x + terms.sum_g + m * terms.b_over_a;
        if !part.is_finite() {
            return Err(Error::Numeric {
                facility: i,
                message: format!("profile score term is {part} at beta = {beta}"),
            });
        }
        score += part;
    }
    Ok(score)
}

fn check_fit_preconditions(sample: &BapcsSample) -> Result<()> {
    if sample.facilities.iter().all(|f| f.m() < 2) {
        return Err(Error::DegenerateSample(
            "at least one facility needs two or more observed failures".into(),
        ));
    }
    Ok(())
}

/// Root of the profile score from a geometric bracket search around
/// `beta_guess` followed by Brent's method.
pub fn solve_beta(sample: &BapcsSample, beta_guess: f64) -> Result<(f64, f64)> {
    check_beta(beta_guess)?;
    check_fit_preconditions(sample)?;
    let score = |b: f64| profile_score(b, sample);
    let (lo, hi, flo, fhi) = expand_bracket(score, beta_guess, BRACKET_FACTOR, BETA_MIN, BETA_MAX)
        .map_err(|e| match e {
            Error::Convergence(msg) => Error::Convergence(format!("profile score: {msg}")),
            other => other,
        })?;
    if lo == hi {
        return Ok((lo, flo));
    }
    let root = brent(
        score,
        lo,
        hi,
        flo,
        fhi,
        RootTolerance {
            f_tol: SCORE_TOLERANCE,
            x_rel_tol: BETA_REL_TOLERANCE,
            max_iter: 200,
        },
    )?;
    Ok((root.x, root.fx))
}

/// Inverse-variance weighted mean of the facility estimates.
pub fn weighted_alpha(alpha_hats: &[f64], variances: &[f64]) -> Result<f64> {
    if alpha_hats.is_empty() || alpha_hats.len() != variances.len() {
        return Err(Error::domain("need one variance per alpha estimate"));
    }
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0) || v.is_nan()) {
        return Err(Error::domain(format!("variances must be positive, got {v}")));
    }
    let (num, den) = alpha_hats
        .iter()
        .zip(variances)
        .fold((0.0, 0.0), |(n, d), (a, v)| (n + a / v, d + 1.0 / v));
    Ok(num / den)
}

pub fn solve_mle(sample: &BapcsSample) -> Result<MleFit> {
    solve_mle_with_guess(sample, DEFAULT_BETA_GUESS)
}

/// Full fit: profile root, closed-form `alpha_i`, and the weighted `alpha`
/// from the observed-information variances.
pub fn solve_mle_with_guess(sample: &BapcsSample, beta_guess: f64) -> Result<MleFit> {
    let (beta_hat, score_residual) = solve_beta(sample, beta_guess)?;
    let alpha_hats = sample
        .facilities
        .iter()
        .map(|f| alpha_closed_form(f, beta_hat))
        .collect::<Result<Vec<_>>>()?;
    let info = asymptotic::observed_information_at(sample, beta_hat, &alpha_hats)?;
    let alpha_weighted = weighted_alpha(&alpha_hats, &info.alpha_variances())?;
    let loglik_at_max = log_likelihood(sample, &alpha_hats, beta_hat)?;
    Ok(MleFit {
        beta_hat,
        alpha_hats,
        alpha_weighted,
        loglik_at_max,
        score_residual,
    })
}

pub fn rc_estimates(fit: &MleFit, t: f64) -> Result<RcEstimates> {
    let p = fit.params()?;
    Ok(RcEstimates {
        t,
        r_hat: p.reliability(t)?,
        h_hat: p.hazard(t)?,
        mtf_hat: p.mtf(),
    })
}
