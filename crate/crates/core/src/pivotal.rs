//! Pivotal quantities, inversion of the beta pivot, and the Monte Carlo
//! pivotal estimator with percentile generalized confidence intervals.
//!
//! For facility `i` with executed withdrawals `r_l` let
//!
//! ```text
//! W_j(beta) = sum_{l<j} (r_l + 1) q_l + (n - sum_{l<j} (r_l + 1)) q_j,
//! q_l = -ln(1 - x_l^beta),  x_l = t_l / (1 + t_l).
//! ```
//!
//! Then `2 alpha_i W_m(beta)` is chi-square with `2 m` degrees of freedom, and
//! `P_i(beta) = -2 sum_{j<m} ln(W_j / W_m)` is chi-square with `2 (m - 1)`
//! degrees of freedom at the true `beta`, independently of `alpha_i`.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{IntervalEstimate, TargetEstimate};
use crate::censoring::{BapcsSample, FacilitySample};
use crate::distributions::IepParams;
use crate::gof::csv_err;
use crate::numeric::{ln_1m_exp, ln_neg_ln_1m_exp};
use crate::optim::{brent, RootTolerance};
use crate::rng::SeedStream;
use crate::{Error, Result};

/// Search range for the pivot inversion.
pub const BETA_RANGE: (f64, f64) = (1e-8, 1e8);
/// Relative width of the final bracket in [`solve_pivot`].
pub const PIVOT_REL_TOLERANCE: f64 = 1e-10;
/// Fresh chi-square draws allowed after a failed inversion.
pub const MAX_RETRIES: usize = 10;
/// Smallest accepted number of Monte Carlo draws.
pub const MIN_DRAWS: usize = 1000;
/// Draws used when the caller does not choose.
pub const DEFAULT_DRAWS: usize = 10_000;
const GRID_POINTS: usize = 161;
/// Below this the direct evaluation of `q_l` may underflow.
const FAST_PATH_LIMIT: f64 = -700.0;

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Fills `out` with `ln W_1 .. ln W_m` at `beta`.
fn ln_w_all(f: &FacilitySample, beta: f64, out: &mut Vec<f64>) {
    out.clear();
    let ln_x = f.ln_odds();
    let r = f.effective_removals();
    let n = f.n() as f64;
    let min_lns = beta * ln_x[0];
    if min_lns > FAST_PATH_LIMIT {
        let mut used = 0.0;
        let mut acc = 0.0;
        for (&lx, &rj) in ln_x.iter().zip(r) {
            let q = -ln_1m_exp(beta * lx);
            out.push((acc + (n - used) * q).ln());
            acc += (rj as f64 + 1.0) * q;
            used += rj as f64 + 1.0;
        }
    } else {
        let mut used = 0.0;
        let mut ln_acc = f64::NEG_INFINITY;
        for (&lx, &rj) in ln_x.iter().zip(r) {
            let ln_q = ln_neg_ln_1m_exp(beta * lx);
            out.push(log_add_exp(ln_acc, (n - used).ln() + ln_q));
            ln_acc = log_add_exp(ln_acc, (rj as f64 + 1.0).ln() + ln_q);
            used += rj as f64 + 1.0;
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("beta must be finite and positive, got {beta}")))
    }
}

/// `W_j(beta)` for `1 <= j <= m`.
pub fn w_partial(f: &FacilitySample, beta: f64, j: usize) -> Result<f64> {
    check_beta(beta)?;
    if j == 0 || j > f.m() {
        return Err(Error::domain(format!("index {j} outside 1..={}", f.m())));
    }
    let mut buf = Vec::with_capacity(f.m());
    ln_w_all(f, beta, &mut buf);
    Ok(buf[j - 1].exp())
}

/// `W_m(beta)`, the scale of the alpha pivot.
pub fn phi(f: &FacilitySample, beta: f64) -> Result<f64> {
    w_partial(f, beta, f.m())
}

fn facility_pivot_from(ln_w: &[f64]) -> f64 {
    let m = ln_w.len();
    let last = ln_w[m - 1];
    2.0 * ln_w[..m - 1].iter().map(|lw| last - lw).sum::<f64>()
}

/// `P_i(beta)` of one facility. Requires `m >= 2`.
pub fn facility_pivot(f: &FacilitySample, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if f.m() < 2 {
        return Err(Error::Design(format!("the pivot needs m >= 2, facility has m = {}", f.m())));
    }
    let mut buf = Vec::with_capacity(f.m());
    ln_w_all(f, beta, &mut buf);
    Ok(facility_pivot_from(&buf))
}

fn check_pivot_design(sample: &BapcsSample) -> Result<()> {
    match sample.facilities.iter().position(|f| f.m() < 2) {
        Some(i) => Err(Error::Design(format!(
            "the pivot needs m >= 2 in every facility, facility {} has m = {}",
            i + 1,
            sample.facilities[i].m()
        ))),
        None => Ok(()),
    }
}

fn pivot_with_buffer(beta: f64, sample: &BapcsSample, buf: &mut Vec<f64>) -> f64 {
    sample
        .facilities
        .iter()
        .map(|f| {
            ln_w_all(f, beta, buf);
            facility_pivot_from(buf)
        })
        .sum()
}

/// `P(beta) = sum_i P_i(beta)`.
pub fn pivot_p(beta: f64, sample: &BapcsSample) -> Result<f64> {
    check_beta(beta)?;
    check_pivot_design(sample)?;
    let mut buf = Vec::new();
    Ok(pivot_with_buffer(beta, sample, &mut buf))
}

/// Degrees of freedom `2 sum_i (m_i - 1)` of the beta pivot.
pub fn pivot_df(sample: &BapcsSample) -> usize {
    2 * sample.facilities.iter().map(|f| f.m().saturating_sub(1)).sum::<usize>()
}

/// Inverts `P` for many targets on one sample. A geometric table of `P`
/// over the search range locates the cell containing each root, and Brent's
/// method finishes inside that cell.
#[derive(Debug, Clone)]
pub struct PivotSolver<'a> {
    sample: &'a BapcsSample,
    betas: Vec<f64>,
    values: Vec<f64>,
    increasing: bool,
}

impl<'a> PivotSolver<'a> {
    pub fn new(sample: &'a BapcsSample) -> Result<Self> {
        check_pivot_design(sample)?;
        let (lo, hi) = (BETA_RANGE.0.ln(), BETA_RANGE.1.ln());
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        let mut betas: Vec<f64> = (0..GRID_POINTS).map(|i| (lo + step * i as f64).exp()).collect();
        betas[0] = BETA_RANGE.0;
        betas[GRID_POINTS - 1] = BETA_RANGE.1;
        let mut buf = Vec::new();
        let values: Vec<f64> = betas.iter().map(|&b| pivot_with_buffer(b, sample, &mut buf)).collect();
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Numeric {
                facility: 0,
                message: format!("pivot is NaN at beta = {}", betas[i]),
            });
        }
        let increasing = values[GRID_POINTS - 1] >= values[0];
        Ok(Self {
            sample,
            betas,
            values,
            increasing,
        })
    }

    /// Range of `P` over the search interval.
    pub fn range(&self) -> (f64, f64) {
        let (a, b) = (self.values[0], self.values[GRID_POINTS - 1]);
        (a.min(b), a.max(b))
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    pub fn solve(&self, target: f64) -> Result<f64> {
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::domain(format!("pivot target must be finite and positive, got {target}")));
        }
        let (lo, hi) = self.range();
        if !(target >= lo && target <= hi) {
            return Err(Error::NoSolution(format!(
                "target {target} outside the pivot range [{lo}, {hi}] over beta in [{}, {}]",
                BETA_RANGE.0, BETA_RANGE.1
            )));
        }
        let sign = if self.increasing { 1.0 } else { -1.0 };
        let g = |v: f64| sign * (v - target);
        // First grid index with g >= 0.
        let idx = self.values.partition_point(|&v| g(v) < 0.0);
        let cell = if idx == 0 {
            0
        } else if idx < GRID_POINTS && g(self.values[idx - 1]) < 0.0 && g(self.values[idx]) >= 0.0 {
            idx - 1
        } else {
            (0..GRID_POINTS - 1)
                .find(|&i| g(self.values[i]) * g(self.values[i + 1]) <= 0.0)
                .ok_or_else(|| Error::NoSolution(format!("no sign change for target {target}")))?
        };
        let (a, b) = (self.betas[cell], self.betas[cell + 1]);
        let (fa, fb) = (self.values[cell] - target, self.values[cell + 1] - target);
        if fa == 0.0 {
            return Ok(a);
        }
        if fb == 0.0 {
            return Ok(b);
        }
        let mut buf = Vec::new();
        let sample = self.sample;
        let root = brent(
            |beta| Ok(pivot_with_buffer(beta, sample, &mut buf) - target),
            a,
            b,
            fa,
            fb,
            RootTolerance {
                f_tol: 0.0,
                x_rel_tol: PIVOT_REL_TOLERANCE,
                max_iter: 200,
            },
        )?;
        Ok(root.x)
    }
}

/// The unique `beta` with `P(beta) = target`.
pub fn solve_pivot(target: f64, sample: &BapcsSample) -> Result<f64> {
    PivotSolver::new(sample)?.solve(target)
}

/// One chi-square variate.
pub fn chi_square_draw<R: Rng + ?Sized>(df: usize, rng: &mut R) -> Result<f64> {
    if df == 0 {
        return Err(Error::domain("degrees of freedom must be at least 1"));
    }
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::domain(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Every Monte Carlo draw, in draw order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotalDraws {
    pub beta: Vec<f64>,
    /// `alpha_i[i][s]` is the draw `s` of facility `i`.
    pub alpha_i: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub reliability: Vec<f64>,
    pub hazard: Vec<f64>,
    pub mtf: Vec<f64>,
}

impl PivotalDraws {
    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// One row per draw: `draw, beta, alpha_1..alpha_k, alpha, reliability, hazard, mtf`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["draw".to_string(), "beta".to_string()];
        header.extend((1..=self.alpha_i.len()).map(|i| format!("alpha_{i}")));
        header.extend(["alpha", "reliability", "hazard", "mtf"].map(String::from));
        w.write_record(&header).map_err(csv_err)?;
        for s in 0..self.len() {
            let mut row = vec![s.to_string(), self.beta[s].to_string()];
            row.extend(self.alpha_i.iter().map(|a| a[s].to_string()));
            row.extend([self.alpha[s], self.reliability[s], self.hazard[s], self.mtf[s]].map(|v| v.to_string()));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Point estimates, variances and percentile intervals from the draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotalSummary {
    pub method: String,
    pub n_draws: usize,
    pub t: f64,
    /// Chi-square draws discarded because the pivot could not be inverted.
    pub retries: usize,
    pub beta: TargetEstimate,
    pub alpha_i: Vec<TargetEstimate>,
    pub alpha: TargetEstimate,
    pub reliability: TargetEstimate,
    pub hazard: TargetEstimate,
    pub mtf: TargetEstimate,
}

impl PivotalSummary {
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

/// Mean and mean squared deviation.
pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// 1-based order-statistic ranks `([N gamma / 2], [N (1 - gamma / 2)])`
/// with `[x]` the floor, clamped to `1..=N`.
pub fn percentile_ranks(n: usize, gamma: f64) -> (usize, usize) {
    let rank = |x: f64| ((x + 1e-9).floor() as usize).clamp(1, n);
    let nf = n as f64;
    (rank(nf * gamma / 2.0), rank(nf * (1.0 - gamma / 2.0)))
}

/// Percentile interval from the draws.
pub fn percentile_interval(draws: &[f64], gamma: f64) -> Result<IntervalEstimate> {
    if draws.is_empty() {
        return Err(Error::domain("no draws"));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = percentile_ranks(sorted.len(), gamma);
    IntervalEstimate::new(sorted[lo - 1], sorted[hi - 1], 1.0 - gamma)
}

fn summarize(name: String, draws: &[f64], gamma: f64) -> Result<TargetEstimate> {
    let (estimate, variance) = mean_and_variance(draws);
    Ok(TargetEstimate {
        estimate,
        variance,
        interval: percentile_interval(draws, gamma)?.named(name),
    })
}

struct RawDraw {
    beta: f64,
    alphas: Vec<f64>,
    retries: usize,
}

fn one_draw(solver: &PivotSolver, sample: &BapcsSample, df: usize, stream: SeedStream, s: usize) -> Result<RawDraw> {
    let mut rng = stream.rng();
    let mut last_err = None;
    for attempt in 0..=MAX_RETRIES {
        let target = chi_square_draw(df, &mut rng)?;
        match solver.solve(target) {
            Ok(beta) => {
                let alphas = sample
                    .facilities
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let rho = chi_square_draw(2 * f.m(), &mut rng)?;
                        let a = rho / (2.0 * phi(f, beta)?);
                        if a.is_finite() && a > 0.0 {
                            Ok(a)
                        } else {
                            Err(Error::Numeric {
                                facility: i,
                                message: format!("alpha draw {a} at beta = {beta}"),
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>();
                match alphas {
                    Ok(alphas) => {
                        return Ok(RawDraw {
                            beta,
                            alphas,
                            retries: attempt,
                        })
                    }
                    Err(e) => last_err = Some(e),
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::NoSolution(format!(
        "draw {s}: {} attempts failed; last error: {}",
        MAX_RETRIES + 1,
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Monte Carlo pivotal estimation with `n_draws` draws. Draw `s` uses the
/// substream `stream.child(s)`, so results do not depend on thread count.
///
/// The facility weights of the combined alpha are the inverse variances of
/// the full set of facility draws, fixed before any combined draw is formed.
pub fn algorithm1(
    sample: &BapcsSample,
    n_draws: usize,
    gamma: f64,
    t: f64,
    stream: SeedStream,
) -> Result<(PivotalDraws, PivotalSummary)> {
    if n_draws < MIN_DRAWS {
        return Err(Error::domain(format!("need at least {MIN_DRAWS} draws, got {n_draws}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::domain(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("evaluation time must be finite and positive, got {t}")));
    }
    let solver = PivotSolver::new(sample)?;
    let df = pivot_df(sample);
    let raw: Vec<RawDraw> = (0..n_draws)
        .into_par_iter()
        .map(|s| one_draw(&solver, sample, df, stream.child(s as u64), s))
        .collect::<Result<Vec<_>>>()?;

    let k = sample.k();
    let beta: Vec<f64> = raw.iter().map(|d| d.beta).collect();
    let alpha_i: Vec<Vec<f64>> = (0..k).map(|i| raw.iter().map(|d| d.alphas[i]).collect()).collect();
    let weights: Vec<f64> = alpha_i.iter().map(|a| 1.0 / mean_and_variance(a).1).collect();
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::DegenerateSample("a facility's alpha draws have zero variance".into()));
    }
    let total: f64 = weights.iter().sum();
    let alpha: Vec<f64> = (0..n_draws)
        .map(|s| (0..k).map(|i| weights[i] * alpha_i[i][s]).sum::<f64>() / total)
        .collect();
    let mut reliability = Vec::with_capacity(n_draws);
    let mut hazard = Vec::with_capacity(n_draws);
    let mut mtf = Vec::with_capacity(n_draws);
    for (&a, &b) in alpha.iter().zip(&beta) {
        let p = IepParams::new(a, b)?;
        reliability.push(p.reliability(t)?);
        hazard.push(p.hazard(t)?);
        mtf.push(p.mtf());
    }
    let summary = PivotalSummary {
        method: "pivotal".into(),
        n_draws,
        t,
        retries: raw.iter().map(|d| d.retries).sum(),
        beta: summarize("beta".into(), &beta, gamma)?,
        alpha_i: alpha_i
            .iter()
            .enumerate()
            .map(|(i, a)| summarize(format!("alpha_{}", i + 1), a, gamma))
            .collect::<Result<Vec<_>>>()?,
        alpha: summarize("alpha".into(), &alpha, gamma)?,
        reliability: summarize("reliability".into(), &reliability, gamma)?,
        hazard: summarize("hazard".into(), &hazard, gamma)?,
        mtf: summarize("mtf".into(), &mtf, gamma)?,
    };
    let draws = PivotalDraws {
        beta,
        alpha_i,
        alpha,
        reliability,
        hazard,
        mtf,
    };
    Ok((draws, summary))
}
