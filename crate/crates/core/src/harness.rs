//! Simulation-study driver: built-in block designs, replicated estimation
//! with both the likelihood and the pivotal route, and summary tables.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{fit_with_intervals, TargetEstimate};
use crate::censoring::{plan_from_template, simulate_block, BapcsSample, BlockDesign, FacilityDesign};
use crate::distributions::IepParams;
use crate::gof::csv_err;
use crate::pivotal::{algorithm1, DEFAULT_DRAWS};
use crate::rng::SeedStream;
use crate::{Error, Result};

/// Facility sizes, failure counts and threshold of a built-in design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub id: u8,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub threshold: f64,
    pub total_n: usize,
}

impl Setup {
    pub fn k(&self) -> usize {
        self.n.len()
    }
}

pub const SETUP_IDS: [u8; 6] = [1, 2, 3, 4, 5, 6];
pub const PLAN_TEMPLATES: [u8; 3] = [1, 2, 3];

/// One of the six built-in block designs.
pub fn builtin_setup(setup_id: u8) -> Result<Setup> {
    let (n, m, threshold, total_n): (&[usize], &[usize], f64, usize) = match setup_id {
        1 => (&[55, 45, 46, 54], &[45, 36, 34, 45], 0.75, 200),
        2 => (&[55, 60, 50, 60], &[44, 50, 40, 46], 0.75, 225),
        3 => (&[60, 65, 65, 60], &[53, 57, 58, 52], 0.75, 250),
        4 => (&[38, 42, 43, 37, 40], &[32, 32, 38, 28, 30], 0.5, 200),
        5 => (&[44, 48, 40, 45, 48], &[33, 39, 32, 36, 40], 0.5, 225),
        6 => (&[50, 57, 45, 50, 48], &[45, 51, 39, 45, 40], 0.5, 250),
        _ => return Err(Error::Design(format!("unknown setup {setup_id}; expected 1 to 6"))),
    };
    Ok(Setup {
        id: setup_id,
        n: n.to_vec(),
        m: m.to_vec(),
        threshold,
        total_n,
    })
}

/// Built-in setup with every facility using the given withdrawal template.
pub fn design(setup_id: u8, template: u8) -> Result<BlockDesign> {
    let s = builtin_setup(setup_id)?;
    let facilities = s
        .n
        .iter()
        .zip(&s.m)
        .map(|(&n, &m)| {
            Ok(FacilityDesign {
                plan: plan_from_template(template, n, m)?,
                threshold: s.threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BlockDesign::with_total(facilities, s.total_n)
}

/// Replications used by the reduced-scale mode.
pub const FAST_REPLICATIONS: usize = 250;
pub const DEFAULT_REPLICATIONS: usize = 2500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub setup_id: u8,
    pub plan_template: u8,
    pub replications: usize,
    pub true_alpha: f64,
    pub true_beta: f64,
    pub t_eval: f64,
    pub gamma: f64,
    pub pivotal_draws: usize,
    pub master_seed: u64,
    pub run_mle: bool,
    pub run_pivotal: bool,
}

impl StudyConfig {
    pub fn new(setup_id: u8, plan_template: u8, master_seed: u64) -> Self {
        Self {
            setup_id,
            plan_template,
            replications: DEFAULT_REPLICATIONS,
            true_alpha: 3.5,
            true_beta: 2.25,
            t_eval: 0.75,
            gamma: 0.05,
            pivotal_draws: DEFAULT_DRAWS,
            master_seed,
            run_mle: true,
            run_pivotal: true,
        }
    }

    /// The same study at reduced scale.
    pub fn fast(mut self) -> Self {
        self.replications = FAST_REPLICATIONS;
        self
    }

    pub fn validate(&self) -> Result<()> {
        builtin_setup(self.setup_id)?;
        if !PLAN_TEMPLATES.contains(&self.plan_template) {
            return Err(Error::Design(format!("unknown plan template {}", self.plan_template)));
        }
        if self.replications == 0 {
            return Err(Error::Design("replications must be at least 1".into()));
        }
        IepParams::new(self.true_alpha, self.true_beta)?;
        if !(self.t_eval.is_finite() && self.t_eval > 0.0) {
            return Err(Error::domain("t_eval must be finite and positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::domain("gamma must lie in (0,1)"));
        }
        Ok(())
    }

    /// Seed stream of replication `rep`.
    pub fn replication_stream(&self, rep: usize) -> SeedStream {
        SeedStream::new(self.master_seed).descend(&[self.setup_id as u64, self.plan_template as u64, rep as u64])
    }

    /// The simulated sample of replication `rep`.
    pub fn replication_sample(&self, rep: usize) -> Result<BapcsSample> {
        let d = design(self.setup_id, self.plan_template)?;
        let p = IepParams::new(self.true_alpha, self.true_beta)?;
        simulate_block(&vec![p; d.k()], &d, self.replication_stream(rep).child(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MLE")]
    Mle,
    #[serde(rename = "pivotal")]
    Pivotal,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mle => "MLE",
            Method::Pivotal => "pivotal",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "MLE" => Ok(Method::Mle),
            "pivotal" => Ok(Method::Pivotal),
            _ => Err(Error::domain(format!("unknown method `{s}`"))),
        }
    }
}

/// Aggregate over replications for one method and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub target: String,
    pub estimate: f64,
    pub bias: f64,
    /// Mean squared deviation of the replication estimates.
    pub variance: f64,
    pub lower: f64,
    pub upper: f64,
    /// Mean of `upper - lower` over replications.
    pub length: f64,
    pub replications: usize,
    pub dropped: usize,
}

/// Output of [`run_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub rows: Vec<SummaryRow>,
    pub dropped_mle: usize,
    pub dropped_pivotal: usize,
    /// First few failure messages, by replication.
    pub failures: Vec<String>,
}

impl StudyResult {
    pub fn row(&self, method: Method, target: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method && r.target == target)
    }
}

const MAX_FAILURE_MESSAGES: usize = 20;

/// `(estimate, lower, upper)` per target, in target order.
type Outcome = Vec<[f64; 3]>;

fn to_outcome(targets: &[&TargetEstimate]) -> Outcome {
    targets
        .iter()
        .map(|t| [t.estimate, t.interval.lower, t.interval.upper])
        .collect()
}

fn target_names(k: usize) -> Vec<String> {
    let mut names = vec!["beta".to_string()];
    names.extend((1..=k).map(|i| format!("alpha_{i}")));
    names.extend(["alpha", "reliability", "hazard", "mtf"].map(String::from));
    names
}

struct RepResult {
    mle: std::result::Result<Outcome, String>,
    pivotal: std::result::Result<Outcome, String>,
}

fn run_replication(cfg: &StudyConfig, rep: usize) -> RepResult {
    let fail = |e: Error| Err(format!("replication {rep}: {e}"));
    let sample = match cfg.replication_sample(rep) {
        Ok(s) => s,
        Err(e) => {
            let msg = format!("replication {rep}: simulation failed: {e}");
            return RepResult {
                mle: Err(msg.clone()),
                pivotal: Err(msg),
            };
        }
    };
    let mle = if cfg.run_mle {
        match fit_with_intervals(&sample, cfg.gamma, cfg.t_eval) {
            Ok(f) => {
                let mut t = vec![&f.beta];
                t.extend(&f.alpha_i);
                t.extend([&f.alpha, &f.reliability, &f.hazard, &f.mtf]);
                Ok(to_outcome(&t))
            }
            Err(e) => fail(e),
        }
    } else {
        Err(String::new())
    };
    let pivotal = if cfg.run_pivotal {
        let stream = cfg.replication_stream(rep).child(1);
        match algorithm1(&sample, cfg.pivotal_draws, cfg.gamma, cfg.t_eval, stream) {
            Ok((_, s)) => {
                let mut t = vec![&s.beta];
                t.extend(&s.alpha_i);
                t.extend([&s.alpha, &s.reliability, &s.hazard, &s.mtf]);
                Ok(to_outcome(&t))
            }
            Err(e) => fail(e),
        }
    } else {
        Err(String::new())
    };
    RepResult { mle, pivotal }
}

fn aggregate(method: Method, names: &[String], truths: &[f64], outcomes: &[&Outcome], dropped: usize) -> Vec<SummaryRow> {
    let r = outcomes.len() as f64;
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mean = |f: &dyn Fn(&[f64; 3]) -> f64| outcomes.iter().map(|o| f(&o[j])).sum::<f64>() / r;
            let estimate = mean(&|v| v[0]);
            let variance = mean(&|v| (v[0] - estimate) * (v[0] - estimate));
            SummaryRow {
                method,
                target: name.clone(),
                estimate,
                bias: estimate - truths[j],
                variance,
                lower: mean(&|v| v[1]),
                upper: mean(&|v| v[2]),
                length: mean(&|v| v[2] - v[1]),
                replications: outcomes.len(),
                dropped,
            }
        })
        .collect()
}

/// Runs every replication of the configured study. Replications run in
/// parallel on the current rayon pool; each owns the seed stream
/// `(master_seed, setup, plan, rep)`, so the output does not depend on the
/// number of threads.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let k = builtin_setup(cfg.setup_id)?.k();
    let reps: Vec<RepResult> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep))
        .collect();

    let truth = IepParams::new(cfg.true_alpha, cfg.true_beta)?;
    let mut truths = vec![cfg.true_beta];
    truths.extend(std::iter::repeat_n(cfg.true_alpha, k + 1));
    truths.extend([truth.reliability(cfg.t_eval)?, truth.hazard(cfg.t_eval)?, truth.mtf()]);
    let names = target_names(k);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut dropped = [0usize; 2];
    for (mi, (method, enabled)) in [(Method::Mle, cfg.run_mle), (Method::Pivotal, cfg.run_pivotal)]
        .into_iter()
        .enumerate()
    {
        if !enabled {
            continue;
        }
        let mut ok = Vec::new();
        for rep in &reps {
            match if mi == 0 { &rep.mle } else { &rep.pivotal } {
                Ok(o) => ok.push(o),
                Err(msg) => {
                    dropped[mi] += 1;
                    if failures.len() < MAX_FAILURE_MESSAGES {
                        failures.push(format!("{}: {msg}", method.name()));
                    }
                }
            }
        }
        if ok.is_empty() {
            return Err(Error::Convergence(format!(
                "every {} replication failed: {}",
                method.name(),
                failures.join("; ")
            )));
        }
        rows.extend(aggregate(method, &names, &truths, &ok, dropped[mi]));
    }
    Ok(StudyResult {
        config: cfg.clone(),
        rows,
        dropped_mle: dropped[0],
        dropped_pivotal: dropped[1],
        failures,
    })
}

/// Header of the summary CSV.
pub const TABLE_HEADER: &str = "method,target,estimate,bias,variance,lower,upper,length,replications,dropped";

/// File name of the summary table of one configuration.
pub fn table_file_name(setup_id: u8, plan_template: u8) -> String {
    format!("setup{setup_id}_plan{plan_template}.csv")
}

pub fn emit_table<W: std::io::Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::domain("no rows to write"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER.split(',')).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.target.clone(),
            r.estimate.to_string(),
            r.bias.to_string(),
            r.variance.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.length.to_string(),
            r.replications.to_string(),
            r.dropped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_table_to_path(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    emit_table(rows, std::io::BufWriter::new(file))
}

pub fn parse_table(text: &str) -> Result<Vec<SummaryRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| Error::domain("empty table"))?
        .map_err(csv_err)?;
    if header.iter().collect::<Vec<_>>().join(",") != TABLE_HEADER {
        return Err(Error::domain("unexpected table header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        if rec.len() != 10 {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected 10 fields, got {}", rec.len()),
            });
        }
        let num = |c: usize| -> Result<f64> {
            rec[c].parse().map_err(|_| Error::Parse {
                line,
                column: c + 1,
                message: format!("`{}` is not a number", &rec[c]),
            })
        };
        let int = |c: usize| -> Result<usize> {
            rec[c].parse().map_err(|_| Error::Parse {
                line,
                column: c + 1,
                message: format!("`{}` is not a count", &rec[c]),
            })
        };
        rows.push(SummaryRow {
            method: Method::parse(&rec[0])?,
            target: rec[1].to_string(),
            estimate: num(2)?,
            bias: num(3)?,
            variance: num(4)?,
            lower: num(5)?,
            upper: num(6)?,
            length: num(7)?,
            replications: int(8)?,
            dropped: int(9)?,
        });
    }
    Ok(rows)
}

/// Run description written next to the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub runs: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub config: StudyConfig,
    pub dropped_mle: usize,
    pub dropped_pivotal: usize,
    pub failures: Vec<String>,
}

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// Writes one table per result and a `manifest.json` under `dir`.
pub fn write_study_outputs(results: &[StudyResult], dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let mut runs = Vec::new();
    for res in results {
        let file = table_file_name(res.config.setup_id, res.config.plan_template);
        emit_table_to_path(&res.rows, &dir.join(&file))?;
        runs.push(ManifestEntry {
            file,
            config: res.config.clone(),
            dropped_mle: res.dropped_mle,
            dropped_pivotal: res.dropped_pivotal,
            failures: res.failures.clone(),
        });
    }
    let manifest = Manifest {
        version: version_string(),
        runs,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
