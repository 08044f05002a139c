use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bapcs::asymptotic::{fit_with_intervals, write_estimates_csv};
use bapcs::censoring::{simulate_block, BapcsSample, BlockDesign};
use bapcs::distributions::IepParams;
use bapcs::gof::{fit_all, plot_data, write_plot_data, write_report_csv, DataSet};
use bapcs::harness::{self, run_study, write_study_outputs, StudyConfig, PLAN_TEMPLATES, SETUP_IDS};
use bapcs::pivotal::{algorithm1, DEFAULT_DRAWS, MIN_DRAWS};
use bapcs::rng::SeedStream;
use clap::{Args, Parser, Subcommand};

const SCHEMAS: &str = "\
FILE FORMATS

Design file (JSON, input of `simulate --design`):
  {\"total_n\": 200,                      optional consistency check
   \"facilities\": [{\"n\": 55, \"m\": 45,
                   \"removals\": [R_1, ..., R_m],   planned withdrawals, sum = n - m
                   \"threshold\": 0.75}, ...]}     null means no threshold

Sample file (JSON, output of `simulate`, input of `estimate` and `pivotal`):
  {\"facilities\": [{\"n\", \"m\", \"removals\", \"threshold\",
                   \"j_count\": failures observed before the threshold,
                   \"times\": [t_1, ..., t_m] increasing}, ...]}

Data file (input of `fit-data` and `plot-data`):
  positive decimals separated by whitespace, newlines or commas; `#` starts a comment.

estimate/pivotal outputs:
  fit.json | summary.json   full result as JSON
  intervals.csv             target,estimate,variance,lower,upper,length,level
  draws.csv                 (pivotal --save-draws) draw,beta,alpha_1..alpha_k,alpha,reliability,hazard,mtf

simstudy outputs:
  setup<i>_plan<j>.csv      method,target,estimate,bias,variance,lower,upper,length,replications,dropped
  manifest.json             version, configurations and dropped-replication counts

fit-data outputs:
  gof_table.csv             Model,Pars.,MLE,AIC,BIC,CAIC,HQIC,K-S,p-value
  fits.json                 one report per model

plot-data outputs:
  ecdf.csv, hist.csv, pdf.csv, pp_<model>.csv, qq_<model>.csv, ttt.csv

EXIT STATUS
  0 success, 1 computational or output failure, 2 usage error or missing input file";

/// Estimation and simulation for the inverted exponentiated Pareto model
/// under block adaptive progressive Type-II censoring.
#[derive(Parser, Debug)]
#[command(name = "bapcs", version, after_long_help = SCHEMAS)]
struct Cli {
    /// Worker threads for parallel commands (default: all cores).
    #[arg(long, env = "BAPCS_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one censored block sample.
    Simulate(SimulateArgs),
    /// Maximum likelihood fit with asymptotic intervals.
    Estimate(EstimateArgs),
    /// Monte Carlo pivotal estimation with generalized intervals.
    Pivotal(PivotalArgs),
    /// Replicated simulation study over the built-in setups.
    Simstudy(SimstudyArgs),
    /// Fit the five candidate models to a complete data set.
    FitData(DataArgs),
    /// Emit the series behind the diagnostic plots as CSV.
    PlotData(DataArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Design file (JSON); alternatively use --setup and --plan.
    #[arg(long, conflicts_with_all = ["setup", "plan"], required_unless_present = "setup")]
    design: Option<PathBuf>,
    /// Built-in setup 1..6.
    #[arg(long, requires = "plan")]
    setup: Option<u8>,
    /// Built-in removal template 1..3.
    #[arg(long, requires = "setup")]
    plan: Option<u8>,
    /// Shape alpha: one value for all facilities or a comma list, one per facility.
    #[arg(long, value_delimiter = ',', default_value = "3.5")]
    alpha: Vec<f64>,
    /// Common shape beta.
    #[arg(long, default_value_t = 2.25)]
    beta: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output sample file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Sample file (JSON).
    #[arg(long)]
    sample: PathBuf,
    /// Interval level is 1 - gamma.
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Time at which reliability and hazard are estimated.
    #[arg(long, default_value_t = 0.75)]
    t: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PivotalArgs {
    /// Sample file (JSON).
    #[arg(long)]
    sample: PathBuf,
    /// Monte Carlo draws (at least 1000).
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 0.75)]
    t: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write every draw to draws.csv.
    #[arg(long)]
    save_draws: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimstudyArgs {
    /// Setup 1..6 (default: all).
    #[arg(long)]
    setup: Option<u8>,
    /// Removal template 1..3 (default: all).
    #[arg(long)]
    plan: Option<u8>,
    /// Replications per configuration.
    #[arg(long, default_value_t = harness::DEFAULT_REPLICATIONS, conflicts_with = "fast")]
    reps: usize,
    /// Reduced run with the fast replication count.
    #[arg(long)]
    fast: bool,
    /// Pivotal draws per replication.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Data file of positive values.
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out_dir: PathBuf,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

/// Unreadable or malformed input is a usage error.
fn bad_input(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

impl From<bapcs::Error> for Failure {
    fn from(e: bapcs::Error) -> Self {
        Failure { code: 1, error: e.into() }
    }
}

fn usage(msg: String) -> Failure {
    Failure {
        code: 2,
        error: anyhow::anyhow!(msg),
    }
}

fn check_gamma_t(gamma: f64, t: f64) -> std::result::Result<(), Failure> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(usage(format!("--gamma must lie in (0,1), got {gamma}")));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(usage(format!("--t must be finite and positive, got {t}")));
    }
    Ok(())
}

fn check_setup_plan(setup: u8, plan: u8) -> std::result::Result<(), Failure> {
    if !SETUP_IDS.contains(&setup) {
        return Err(usage(format!("--setup must be one of 1..6, got {setup}")));
    }
    if !PLAN_TEMPLATES.contains(&plan) {
        return Err(usage(format!("--plan must be one of 1..3, got {plan}")));
    }
    Ok(())
}

fn require_file(path: &Path) -> std::result::Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            error: anyhow::anyhow!("input file {} does not exist", path.display()),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn read_sample(path: &Path) -> Result<BapcsSample> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    BapcsSample::from_json(&text).with_context(|| format!("invalid sample file {}", path.display()))
}

fn read_data(path: &Path) -> Result<DataSet> {
    DataSet::from_path(path).with_context(|| format!("invalid data file {}", path.display()))
}

fn make_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn simulate(a: SimulateArgs) -> std::result::Result<(), Failure> {
    let design = match &a.design {
        Some(path) => {
            require_file(path)?;
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(bad_input)?;
            serde_json::from_str::<BlockDesign>(&text)
                .with_context(|| format!("invalid design file {}", path.display()))
                .map_err(bad_input)?
        }
        None => {
            let (setup, plan) = (a.setup.unwrap_or_default(), a.plan.unwrap_or_default());
            check_setup_plan(setup, plan)?;
            harness::design(setup, plan)?
        }
    };
    let alphas = match a.alpha.len() {
        1 => vec![a.alpha[0]; design.k()],
        n if n == design.k() => a.alpha.clone(),
        n => return Err(usage(format!("{n} alpha values for {} facilities", design.k()))),
    };
    let params = alphas
        .iter()
        .map(|&al| IepParams::new(al, a.beta))
        .collect::<bapcs::Result<Vec<_>>>()?;
    let sample = simulate_block(&params, &design, SeedStream::new(a.seed))?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        make_dir(parent)?;
    }
    fs::write(&a.out, sample.to_json()? + "\n").with_context(|| format!("cannot write {}", a.out.display()))?;
    Ok(())
}

fn estimate(a: EstimateArgs) -> std::result::Result<(), Failure> {
    check_gamma_t(a.gamma, a.t)?;
    require_file(&a.sample)?;
    let sample = read_sample(&a.sample).map_err(bad_input)?;
    let result = fit_with_intervals(&sample, a.gamma, a.t)?;
    make_dir(&a.out)?;
    write_json(&a.out.join("fit.json"), &result)?;
    write_estimates_csv(&result.targets(), create(&a.out.join("intervals.csv"))?)?;
    Ok(())
}

fn pivotal(a: PivotalArgs) -> std::result::Result<(), Failure> {
    check_gamma_t(a.gamma, a.t)?;
    if a.draws < MIN_DRAWS {
        return Err(usage(format!("--draws must be at least {MIN_DRAWS}, got {}", a.draws)));
    }
    require_file(&a.sample)?;
    let sample = read_sample(&a.sample).map_err(bad_input)?;
    let (draws, summary) = algorithm1(&sample, a.draws, a.gamma, a.t, SeedStream::new(a.seed))?;
    make_dir(&a.out)?;
    write_json(&a.out.join("summary.json"), &summary)?;
    write_estimates_csv(&summary.targets(), create(&a.out.join("intervals.csv"))?)?;
    if a.save_draws {
        draws.write_csv(create(&a.out.join("draws.csv"))?)?;
    }
    Ok(())
}

fn simstudy(a: SimstudyArgs) -> std::result::Result<(), Failure> {
    check_setup_plan(a.setup.unwrap_or(1), a.plan.unwrap_or(1))?;
    if a.draws < MIN_DRAWS {
        return Err(usage(format!("--draws must be at least {MIN_DRAWS}, got {}", a.draws)));
    }
    let setups: Vec<u8> = a.setup.map_or(SETUP_IDS.to_vec(), |s| vec![s]);
    let plans: Vec<u8> = a.plan.map_or(PLAN_TEMPLATES.to_vec(), |p| vec![p]);
    let mut configs = Vec::new();
    for &s in &setups {
        for &p in &plans {
            let mut cfg = StudyConfig::new(s, p, a.seed);
            cfg.replications = a.reps;
            if a.fast {
                cfg = cfg.fast();
            }
            cfg.pivotal_draws = a.draws;
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            configs.push(cfg);
        }
    }
    let mut results = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let res = run_study(cfg)?;
        eprintln!(
            "setup {} plan {}: {} replications, dropped {} (MLE) and {} (pivotal)",
            cfg.setup_id, cfg.plan_template, cfg.replications, res.dropped_mle, res.dropped_pivotal
        );
        results.push(res);
    }
    write_study_outputs(&results, &a.out_dir)?;
    Ok(())
}

fn fit_data(a: DataArgs) -> std::result::Result<(), Failure> {
    require_file(&a.data)?;
    let data = read_data(&a.data).map_err(bad_input)?;
    let reports = fit_all(&data)?;
    make_dir(&a.out_dir)?;
    write_report_csv(&reports, create(&a.out_dir.join("gof_table.csv"))?)?;
    write_json(&a.out_dir.join("fits.json"), &reports)?;
    Ok(())
}

fn plot(a: DataArgs) -> std::result::Result<(), Failure> {
    require_file(&a.data)?;
    let data = read_data(&a.data).map_err(bad_input)?;
    let reports = fit_all(&data)?;
    let plot = plot_data(&data, &reports)?;
    make_dir(&a.out_dir)?;
    write_plot_data(&plot, &a.out_dir)?;
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Pivotal(a) => pivotal(a),
        Command::Simstudy(a) => simstudy(a),
        Command::FitData(a) => fit_data(a),
        Command::PlotData(a) => plot(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
