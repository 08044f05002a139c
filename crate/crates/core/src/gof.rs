//! Complete-sample model comparison: maximum likelihood fits of the IEP law
//! and four competitors, Kolmogorov-Smirnov tests, information criteria and
//! plot data.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::censoring::{BapcsSample, FacilitySample};
use crate::distributions::{competitor_loglik, CompetitorModel, IepParams};
use crate::mle;
use crate::optim::{nelder_mead, SimplexOptions};
use crate::{Error, Result};

/// A complete sample of positive observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl DataSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain(format!("need at least 2 observations, got {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::domain(format!("observations must be finite and positive, got {v}")));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    /// Parses decimals separated by whitespace, commas or newlines. Text after
    /// `#` on a line is ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (li, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("");
            let mut start = None;
            let chars: Vec<(usize, char)> = content.char_indices().collect();
            for idx in 0..=chars.len() {
                let sep = idx == chars.len() || {
                    let c = chars[idx].1;
                    c.is_whitespace() || c == ','
                };
                match (sep, start) {
                    (false, None) => start = Some(idx),
                    (true, Some(s)) => {
                        let from = chars[s].0;
                        let to = if idx == chars.len() { content.len() } else { chars[idx].0 };
                        let token = &content[from..to];
                        let parse_err = |message: String| Error::Parse {
                            line: li + 1,
                            column: s + 1,
                            message,
                        };
                        let v: f64 = token
                            .parse()
                            .map_err(|_| parse_err(format!("`{token}` is not a number")))?;
                        if !(v.is_finite() && v > 0.0) {
                            return Err(parse_err(format!("`{token}` is not a positive finite value")));
                        }
                        values.push(v);
                        start = None;
                    }
                    _ => {}
                }
            }
        }
        Self::new(values)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Observations in input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Candidate lifetime families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    #[serde(rename = "IEP")]
    Iep,
    #[serde(rename = "GP")]
    Gp,
    #[serde(rename = "EP")]
    Ep,
    #[serde(rename = "IER")]
    Ier,
    #[serde(rename = "IL")]
    Il,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [Self::Iep, Self::Gp, Self::Ep, Self::Ier, Self::Il];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Iep => "IEP",
            Self::Gp => "GP",
            Self::Ep => "EP",
            Self::Ier => "IER",
            Self::Il => "IL",
        }
    }

    pub fn param_names(&self) -> [&'static str; 2] {
        match self {
            Self::Iep => ["alpha", "beta"],
            Self::Gp => ["k", "sigma"],
            Self::Ep => ["lambda", "theta"],
            Self::Ier => ["alpha", "beta"],
            Self::Il => ["alpha", "theta"],
        }
    }
}

/// A fitted member of one of the candidate families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FittedModel {
    Iep(IepParams),
    Competitor(CompetitorModel),
}

impl FittedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            Self::Iep(_) => ModelFamily::Iep,
            Self::Competitor(c) => match c {
                CompetitorModel::GeneralizedPareto { .. } => ModelFamily::Gp,
                CompetitorModel::ExponentiatedPareto { .. } => ModelFamily::Ep,
                CompetitorModel::InvertedExpRayleigh { .. } => ModelFamily::Ier,
                CompetitorModel::InverseLomax { .. } => ModelFamily::Il,
            },
        }
    }

    pub fn params(&self) -> [f64; 2] {
        match self {
            Self::Iep(p) => [p.alpha(), p.beta()],
            Self::Competitor(c) => c.params(),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            Self::Iep(p) => {
                if x <= 0.0 {
                    Ok(0.0)
                } else {
                    p.cdf(x)
                }
            }
            Self::Competitor(c) => c.cdf(x),
        }
    }

    /// Density, zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::Iep(p) => p.pdf(x).unwrap_or(0.0),
            Self::Competitor(c) => c.ln_pdf_or_neg_inf(x).exp(),
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            Self::Iep(p) => p.quantile(u),
            Self::Competitor(c) => c.quantile(u),
        }
    }

    pub fn loglik(&self, data: &[f64]) -> f64 {
        match self {
            Self::Iep(p) => data.iter().map(|&x| p.ln_pdf(x).unwrap_or(f64::NEG_INFINITY)).sum(),
            Self::Competitor(c) => competitor_loglik(data, c),
        }
    }
}

/// Starting points of the simplex search, in log-parameter space.
const STARTS: [[f64; 2]; 5] = [[0.0, 0.0], [1.0, 1.0], [1.5, 3.0], [3.0, 3.0], [-1.0, 1.0]];
/// Gain in log-likelihood needed to prefer a heavy-tailed GP over `k = 0`.
const GP_IMPROVEMENT: f64 = 1e-9;
/// Log-parameters beyond this magnitude are rejected.
const LOG_PARAM_LIMIT: f64 = 40.0;

fn simplex_fit<F>(objective: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let bounded = |u: &[f64]| {
        if u.iter().any(|v| v.abs() > LOG_PARAM_LIMIT) {
            f64::INFINITY
        } else {
            objective(u)
        }
    };
    let opts = SimplexOptions::default();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut failures = Vec::new();
    for start in STARTS {
        let first = nelder_mead(bounded, &start, opts);
        // A restart from the first optimum guards against a collapsed simplex.
        let second = nelder_mead(bounded, &first.x, opts);
        if !(second.converged && second.fx.is_finite()) {
            failures.push(format!("start {start:?}: f = {}, {} iterations", second.fx, second.iterations));
            continue;
        }
        if best.as_ref().is_none_or(|(_, f)| second.fx < *f) {
            best = Some((second.x, second.fx));
        }
    }
    best.map(|(x, _)| x).ok_or_else(|| {
        Error::Convergence(format!("every simplex start failed: {}", failures.join("; ")))
    })
}

/// Maximum likelihood fit of one family.
///
/// The IEP fit uses the profile-likelihood root of the censored-data code on
/// a single complete block. The competitors are fitted by a simplex search
/// over log-parameters from several starts. The generalized Pareto shape is
/// restricted to `k <= 0`: its likelihood is unbounded for `k > 1`, and the
/// `k = 0` member (exponential) has the closed-form scale `mean(x)`.
pub fn fit_model(data: &DataSet, family: ModelFamily) -> Result<FittedModel> {
    let x = data.sorted();
    match family {
        ModelFamily::Iep => {
            let sample = BapcsSample::new(vec![FacilitySample::complete(x.to_vec())?])?;
            let fit = mle::solve_mle(&sample)?;
            Ok(FittedModel::Iep(IepParams::new(fit.alpha_hats[0], fit.beta_hat)?))
        }
        ModelFamily::Gp => {
            let mean = x.iter().sum::<f64>() / x.len() as f64;
            let exponential = CompetitorModel::generalized_pareto(0.0, mean)?;
            let neg_ll = |u: &[f64]| match CompetitorModel::generalized_pareto(-u[0].exp(), u[1].exp()) {
                Ok(m) => -competitor_loglik(x, &m),
                Err(_) => f64::INFINITY,
            };
            let best = match simplex_fit(neg_ll) {
                Ok(u) => {
                    let heavy = CompetitorModel::generalized_pareto(-u[0].exp(), u[1].exp())?;
                    if competitor_loglik(x, &heavy) > competitor_loglik(x, &exponential) + GP_IMPROVEMENT {
                        heavy
                    } else {
                        exponential
                    }
                }
                Err(_) => exponential,
            };
            Ok(FittedModel::Competitor(best))
        }
        ModelFamily::Ep | ModelFamily::Ier | ModelFamily::Il => {
            let build = move |a: f64, b: f64| match family {
                ModelFamily::Ep => CompetitorModel::exponentiated_pareto(a, b),
                ModelFamily::Ier => CompetitorModel::inverted_exp_rayleigh(a, b),
                _ => CompetitorModel::inverse_lomax(a, b),
            };
            let neg_ll = |u: &[f64]| match build(u[0].exp(), u[1].exp()) {
                Ok(m) => -competitor_loglik(x, &m),
                Err(_) => f64::INFINITY,
            };
            let u = simplex_fit(neg_ll)
                .map_err(|e| Error::Convergence(format!("{} fit: {e}", family.name())))?;
            Ok(FittedModel::Competitor(build(u[0].exp(), u[1].exp())?))
        }
    }
}

/// `max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)` over sorted data.
pub fn ks_statistic<F>(sorted: &[f64], mut cdf: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let i = i as f64;
            ((i + 1.0) / n - f).max(f - i / n)
        })
        .fold(0.0, f64::max)
}

/// Survival function of the limiting Kolmogorov distribution at `lambda`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Complementary theta-function form, accurate for small lambda.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let o = (2 * k - 1) as f64;
                (c * o * o).exp()
            })
            .sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// K-S p-value from the limiting Kolmogorov distribution at `sqrt(n) d`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    if d >= 1.0 {
        return 0.0;
    }
    kolmogorov_sf((n as f64).sqrt() * d)
}

fn mat_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let ail = a[i * m + l];
            if ail != 0.0 {
                for j in 0..m {
                    c[i * m + j] += ail * b[l * m + j];
                }
            }
        }
    }
    c
}

/// Scaled matrix power: returns `(Q, e)` with `A^p = Q * 10^e`.
fn mat_pow(a: &[f64], m: usize, p: usize) -> (Vec<f64>, i32) {
    if p == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e_half) = mat_pow(a, m, p / 2);
    let mut q = mat_mul(&half, &half, m);
    let mut e = 2 * e_half;
    if p % 2 == 1 {
        q = mat_mul(a, &q, m);
    }
    if q[(m / 2) * m + m / 2] > 1e140 {
        q.iter_mut().for_each(|v| *v *= 1e-140);
        e += 140;
    }
    (q, e)
}

/// K-S p-value from the exact finite-sample distribution of the statistic
/// (matrix-power method of Marsaglia, Tsang and Wang).
pub fn ks_pvalue_exact(d: f64, n: usize) -> f64 {
    if d <= 0.0 || n == 0 {
        return 1.0;
    }
    if d >= 1.0 {
        return 0.0;
    }
    let nf = n as f64;
    let k = (nf * d).floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nf * d;
    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                hm[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                let g: f64 = (1..=(i + 1 - j)).map(|v| v as f64).product();
                hm[i * m + j] /= g;
            }
        }
    }
    let (q, mut e) = mat_pow(&hm, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s *= i as f64 / nf;
        if s < 1e-140 {
            s *= 1e140;
            e -= 140;
        }
    }
    let cdf = s * 10f64.powi(e);
    (1.0 - cdf).clamp(0.0, 1.0)
}

/// Information criteria of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoCriteria {
    pub aic: f64,
    pub bic: f64,
    pub caic: f64,
    pub hqic: f64,
}

/// AIC, BIC, CAIC and HQIC for `p` parameters and `n` observations.
pub fn info_criteria(loglik: f64, p: usize, n: usize) -> Result<InfoCriteria> {
    if n < 2 || p < 1 {
        return Err(Error::domain(format!("need n >= 2 and p >= 1, got n = {n}, p = {p}")));
    }
    Ok(criteria_from_ln_n(loglik, p as f64, (n as f64).ln()))
}

fn criteria_from_ln_n(loglik: f64, p: f64, ln_n: f64) -> InfoCriteria {
    let dev = -2.0 * loglik;
    InfoCriteria {
        aic: dev + 2.0 * p,
        bic: dev + p * ln_n,
        caic: dev + p * (ln_n + 1.0),
        hqic: dev + 2.0 * p * ln_n.ln(),
    }
}

/// One row of the model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub model: ModelFamily,
    pub fitted: FittedModel,
    pub params: [f64; 2],
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub caic: f64,
    pub hqic: f64,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
}

pub fn report(data: &DataSet, fitted: FittedModel) -> Result<GofReport> {
    let loglik = fitted.loglik(data.sorted());
    let ic = info_criteria(loglik, 2, data.n())?;
    let mut cdf_err = None;
    let ks_stat = ks_statistic(data.sorted(), |x| {
        fitted.cdf(x).unwrap_or_else(|e| {
            cdf_err = Some(e);
            f64::NAN
        })
    });
    if let Some(e) = cdf_err {
        return Err(e);
    }
    let all = [loglik, ic.aic, ic.bic, ic.caic, ic.hqic, ks_stat];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence(format!(
            "{} fit produced non-finite criteria",
            fitted.family().name()
        )));
    }
    Ok(GofReport {
        model: fitted.family(),
        fitted,
        params: fitted.params(),
        loglik,
        aic: ic.aic,
        bic: ic.bic,
        caic: ic.caic,
        hqic: ic.hqic,
        ks_stat,
        ks_pvalue: ks_pvalue(ks_stat, data.n()),
    })
}

/// Fits and reports every family in table order.
pub fn fit_all(data: &DataSet) -> Result<Vec<GofReport>> {
    ModelFamily::ALL
        .iter()
        .map(|&f| report(data, fit_model(data, f)?))
        .collect()
}

/// Column names of the comparison table.
pub const REPORT_HEADER: [&str; 9] = ["Model", "Pars.", "MLE", "AIC", "BIC", "CAIC", "HQIC", "K-S", "p-value"];

/// Writes the comparison table as CSV.
pub fn write_report_csv<W: std::io::Write>(reports: &[GofReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER).map_err(csv_err)?;
    for r in reports {
        let names = r.model.param_names();
        w.write_record([
            r.model.name().to_string(),
            format!("({}, {})", names[0], names[1]),
            format!("({}, {})", r.params[0], r.params[1]),
            r.aic.to_string(),
            r.bic.to_string(),
            r.caic.to_string(),
            r.hqic.to_string(),
            r.ks_stat.to_string(),
            r.ks_pvalue.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Internal(format!("csv: {other:?}")),
    }
}

/// Tabular series behind the diagnostic plots.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub models: Vec<ModelFamily>,
    /// `(x, ecdf(x), F_model(x)...)` at each distinct observation.
    pub ecdf: Vec<Vec<f64>>,
    /// `(lower, upper, density)` per histogram bin.
    pub hist: Vec<[f64; 3]>,
    /// `(x, f_model(x)...)` on an even grid over the data range.
    pub pdf: Vec<Vec<f64>>,
    /// Per model: `(i / (n + 1), F(x_(i)))`.
    pub pp: Vec<Vec<[f64; 2]>>,
    /// Per model: `(x_(i), F^{-1}(i / (n + 1)))`.
    pub qq: Vec<Vec<[f64; 2]>>,
    /// Scaled total time on test `(i / n, T_i / T_n)`.
    pub ttt: Vec<[f64; 2]>,
}

pub const PDF_GRID_POINTS: usize = 200;

/// Number of histogram bins, `ceil(1 + log2 n)`.
pub fn sturges_bins(n: usize) -> usize {
    (1.0 + (n as f64).log2()).ceil() as usize
}

/// Scaled TTT transform of sorted data.
pub fn scaled_ttt(sorted: &[f64]) -> Vec<[f64; 2]> {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    let mut partial = 0.0;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            partial += x;
            let rank = i + 1;
            let value = if rank == n { 1.0 } else { (partial + (n - rank) as f64 * x) / total };
            [rank as f64 / n as f64, value]
        })
        .collect()
}

pub fn plot_data(data: &DataSet, fits: &[GofReport]) -> Result<PlotData> {
    let x = data.sorted();
    let n = x.len();
    let nf = n as f64;
    let models: Vec<ModelFamily> = fits.iter().map(|r| r.model).collect();

    let mut ecdf = Vec::new();
    for (i, &v) in x.iter().enumerate() {
        if i + 1 < n && x[i + 1] == v {
            continue;
        }
        let mut row = vec![v, (i + 1) as f64 / nf];
        for r in fits {
            row.push(r.fitted.cdf(v)?);
        }
        ecdf.push(row);
    }

    let (lo, hi) = (x[0], x[n - 1]);
    let bins = sturges_bins(n);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in x {
        let b = if width > 0.0 { (((v - lo) / width) as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    let hist = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let l = lo + b as f64 * width;
            let u = if b + 1 == bins { hi } else { lo + (b + 1) as f64 * width };
            let density = if width > 0.0 { c as f64 / (nf * width) } else { f64::INFINITY };
            [l, u, density]
        })
        .collect();

    let pdf = (0..PDF_GRID_POINTS)
        .map(|g| {
            let v = lo + (hi - lo) * g as f64 / (PDF_GRID_POINTS - 1) as f64;
            let mut row = vec![v];
            row.extend(fits.iter().map(|r| r.fitted.density(v)));
            row
        })
        .collect();

    let mut pp = Vec::new();
    let mut qq = Vec::new();
    for r in fits {
        let mut p_rows = Vec::with_capacity(n);
        let mut q_rows = Vec::with_capacity(n);
        for (i, &v) in x.iter().enumerate() {
            let u = (i + 1) as f64 / (nf + 1.0);
            p_rows.push([u, r.fitted.cdf(v)?]);
            q_rows.push([v, r.fitted.quantile(u)?]);
        }
        pp.push(p_rows);
        qq.push(q_rows);
    }

    Ok(PlotData {
        models,
        ecdf,
        hist,
        pdf,
        pp,
        qq,
        ttt: scaled_ttt(x),
    })
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.as_ref().iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Writes `ecdf.csv`, `hist.csv`, `pdf.csv`, `pp_<model>.csv`,
/// `qq_<model>.csv` and `ttt.csv` under `dir`.
pub fn write_plot_data(plot: &PlotData, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut ecdf_header = header(&["x", "ecdf"]);
    ecdf_header.extend(plot.models.iter().map(|m| format!("F_{}", m.name())));
    write_rows(&dir.join("ecdf.csv"), &ecdf_header, &plot.ecdf)?;
    write_rows(&dir.join("hist.csv"), &header(&["lower", "upper", "density"]), &plot.hist)?;
    let mut pdf_header = header(&["x"]);
    pdf_header.extend(plot.models.iter().map(|m| format!("f_{}", m.name())));
    write_rows(&dir.join("pdf.csv"), &pdf_header, &plot.pdf)?;
    for (i, m) in plot.models.iter().enumerate() {
        write_rows(
            &dir.join(format!("pp_{}.csv", m.name())),
            &header(&["empirical", "fitted"]),
            &plot.pp[i],
        )?;
        write_rows(
            &dir.join(format!("qq_{}.csv", m.name())),
            &header(&["observed", "fitted"]),
            &plot.qq[i],
        )?;
    }
    write_rows(&dir.join("ttt.csv"), &header(&["u", "ttt"]), &plot.ttt)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_separators_and_errors() {
        let d = DataSet::parse("0.312, 0.314").unwrap();
        assert_eq!(d.values(), &[0.312, 0.314]);
        let d = DataSet::parse("# header\n1.5 2.5\n\n3.5,4.5 # tail\n").unwrap();
        assert_eq!(d.n(), 4);
        match DataSet::parse("1.0 2.0\n3.0 -1.0") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
        match DataSet::parse("1.0 abc") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("{other:?}"),
        }
        assert!(DataSet::parse("1.0").is_err());
        assert!(DataSet::parse("1.0 0").is_err());
    }

    #[test]
    fn sorted_copy_is_kept() {
        let d = DataSet::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.values(), &[3.0, 1.0, 2.0]);
        assert_eq!(d.sorted(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn ks_at_midpoint_quantiles() {
        let n = 20;
        let x: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_statistic(&x, |v| v);
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn pvalue_limits() {
        assert_eq!(ks_pvalue(0.0, 69), 1.0);
        assert_eq!(ks_pvalue(1.0, 69), 0.0);
        assert_eq!(ks_pvalue_exact(0.0, 69), 1.0);
        assert_eq!(ks_pvalue_exact(1.0, 69), 0.0);
    }

    // Reference values from scipy.stats.kstwobign / kstwo.
    #[test]
    fn pvalue_oracles() {
        assert!((kolmogorov_sf(0.0755 * 69f64.sqrt()) - 0.826_425_291_551_254_7).abs() < 1e-10);
        assert!((kolmogorov_sf(0.5) - 0.963_945_243_664_875_1).abs() < 1e-10);
        assert!((kolmogorov_sf(1.0) - 0.269_999_671_677_354_6).abs() < 1e-10);
        assert!((kolmogorov_sf(1.18) - 0.123_453_809_429_765_7).abs() < 1e-10);
        assert!((kolmogorov_sf(2.0) - 0.000_670_925_255_779_695_3).abs() < 1e-12);
        assert!((ks_pvalue_exact(0.0755, 69) - 0.798_390_075_217_051_6).abs() < 1e-9);
        assert!((ks_pvalue_exact(0.3, 10) - 0.270_535_574_799_999_5).abs() < 1e-9);
    }

    #[test]
    fn criteria_examples() {
        let ic = info_criteria(0.0, 2, 1).err();
        assert!(ic.is_some());
        let ic = criteria_from_ln_n(0.0, 2.0, std::f64::consts::E);
        assert!((ic.hqic - 4.0).abs() < 1e-12);
        let ic = info_criteria(-52.3228, 2, 69).unwrap();
        assert!(ic.aic < ic.hqic && ic.hqic < ic.bic && ic.bic < ic.caic);
    }

    #[test]
    fn ttt_ends_at_one() {
        let t = scaled_ttt(&[0.5, 1.0, 1.5, 4.0]);
        assert_eq!(t.last().copied(), Some([1.0, 1.0]));
        // First point: n * x_(1) / sum.
        assert!((t[0][1] - 4.0 * 0.5 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn sturges() {
        assert_eq!(sturges_bins(69), 8);
        assert_eq!(sturges_bins(64), 7);
        assert_eq!(sturges_bins(2), 2);
    }
}
