//! Censoring plans, block designs and sequential simulation of adaptive
//! progressive Type-II censored samples.
//!
//! In each facility `n` units go on test and `m` failures are observed. After
//! the `j`-th failure `R_j` surviving units are withdrawn, but only while the
//! failure happened strictly before the facility's threshold time `T`. Once
//! `T` has passed no intermediate withdrawals take place and every surviving
//! unit is withdrawn at the `m`-th failure.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::distributions::IepParams;
use crate::numeric::ln_odds_ratio;
use crate::rng::SeedStream;
use crate::{Error, Result};

/// Planned withdrawals for one facility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPlan", into = "RawPlan")]
pub struct CensoringPlan {
    n: usize,
    m: usize,
    removals: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPlan {
    n: usize,
    m: usize,
    removals: Vec<usize>,
}

impl TryFrom<RawPlan> for CensoringPlan {
    type Error = Error;
    fn try_from(r: RawPlan) -> Result<Self> {
        CensoringPlan::new(r.n, r.m, r.removals)
    }
}

impl From<CensoringPlan> for RawPlan {
    fn from(p: CensoringPlan) -> Self {
        RawPlan {
            n: p.n,
            m: p.m,
            removals: p.removals,
        }
    }
}

impl CensoringPlan {
    pub fn new(n: usize, m: usize, removals: Vec<usize>) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Design(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
        }
        if removals.len() != m {
            return Err(Error::Design(format!(
                "removal vector has length {}, expected m = {m}",
                removals.len()
            )));
        }
        let total: usize = removals.iter().sum();
        if total != n - m {
            return Err(Error::Design(format!(
                "removals sum to {total}, expected n - m = {}",
                n - m
            )));
        }
        Ok(Self { n, m, removals })
    }

    /// A plan with no withdrawals (`n = m`).
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, n, vec![0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn removals(&self) -> &[usize] {
        &self.removals
    }
}

/// One of the three withdrawal templates used in the simulation study.
///
/// With `c = ceil((n - m) / 2)`:
/// 1. `c` at failure `floor(3m/4)`, the rest at failure `m`;
/// 2. `c` at failure `floor(m/4)`, the rest at failure `floor(3m/4)`;
/// 3. `c` at failure `floor(m/4)`, the rest at failure `m`.
pub fn plan_from_template(template: u8, n: usize, m: usize) -> Result<CensoringPlan> {
    if m == 0 || m > n {
        return Err(Error::Design(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    let quarter = m / 4;
    let three_quarter = 3 * m / 4;
    let (first, second) = match template {
        1 => (three_quarter, m),
        2 => (quarter, three_quarter),
        3 => (quarter, m),
        _ => return Err(Error::Design(format!("unknown censoring template {template}"))),
    };
    if first == 0 || second == 0 {
        return Err(Error::Design(format!(
            "template {template} is degenerate for m = {m}: a withdrawal index is 0"
        )));
    }
    let spare = n - m;
    let head = spare.div_ceil(2);
    let mut removals = vec![0; m];
    removals[first - 1] += head;
    removals[second - 1] += spare - head;
    CensoringPlan::new(n, m, removals)
}

/// Withdrawals actually executed given `j_count` failures before the threshold.
///
/// When `j_count < m - 1` the planned withdrawals after the threshold are
/// suppressed and everything left is withdrawn at the last failure; otherwise
/// the plan is executed as written.
pub fn effective_removals(plan: &CensoringPlan, j_count: usize) -> Result<Vec<usize>> {
    let m = plan.m;
    if j_count > m {
        return Err(Error::domain(format!("j_count {j_count} exceeds m = {m}")));
    }
    if j_count + 1 >= m {
        return Ok(plan.removals.clone());
    }
    let mut r = vec![0; m];
    r[..j_count].copy_from_slice(&plan.removals[..j_count]);
    let executed: usize = plan.removals[..j_count].iter().sum();
    r[m - 1] = plan.n - m - executed;
    Ok(r)
}

/// Units on test just before the `j`-th failure (1-based `j`).
pub fn risk_set_size(j: usize, plan: &CensoringPlan, j_count: usize) -> Result<usize> {
    if j == 0 || j > plan.m {
        return Err(Error::domain(format!("failure index {j} outside [1, {}]", plan.m)));
    }
    let upto = j_count.min(j - 1);
    let withdrawn: usize = plan.removals[..upto].iter().sum();
    let size = (plan.n + 1)
        .checked_sub(j + withdrawn)
        .filter(|&s| s >= 1)
        .ok_or_else(|| Error::Internal(format!("risk set before failure {j} is empty")))?;
    Ok(size)
}

mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        if t.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(t)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t.is_nan() || t <= 0.0 {
        Err(Error::Design(format!("threshold must be positive, got {t}")))
    } else {
        Ok(())
    }
}

/// One facility of a block design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityDesign {
    #[serde(flatten)]
    pub plan: CensoringPlan,
    /// `null` in JSON encodes an infinite threshold.
    #[serde(with = "threshold_serde")]
    pub threshold: f64,
}

/// `k` facilities, each with its own plan and threshold time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDesign", into = "RawDesign")]
pub struct BlockDesign {
    facilities: Vec<FacilityDesign>,
}

#[derive(Serialize, Deserialize)]
struct RawDesign {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_n: Option<usize>,
    facilities: Vec<FacilityDesign>,
}

impl TryFrom<RawDesign> for BlockDesign {
    type Error = Error;
    fn try_from(r: RawDesign) -> Result<Self> {
        match r.total_n {
            Some(total) => BlockDesign::with_total(r.facilities, total),
            None => BlockDesign::new(r.facilities),
        }
    }
}

impl From<BlockDesign> for RawDesign {
    fn from(d: BlockDesign) -> Self {
        RawDesign {
            total_n: Some(d.total_units()),
            facilities: d.facilities,
        }
    }
}

impl BlockDesign {
    pub fn new(facilities: Vec<FacilityDesign>) -> Result<Self> {
        if facilities.is_empty() {
            return Err(Error::Design("a block design needs at least one facility".into()));
        }
        for f in &facilities {
            check_threshold(f.threshold)?;
        }
        Ok(Self { facilities })
    }

    /// Like [`BlockDesign::new`], also checking the declared total unit count.
    pub fn with_total(facilities: Vec<FacilityDesign>, total_n: usize) -> Result<Self> {
        let d = Self::new(facilities)?;
        if d.total_units() != total_n {
            return Err(Error::Design(format!(
                "facility sizes sum to {}, declared total is {total_n}",
                d.total_units()
            )));
        }
        Ok(d)
    }

    pub fn facilities(&self) -> &[FacilityDesign] {
        &self.facilities
    }

    pub fn k(&self) -> usize {
        self.facilities.len()
    }

    pub fn total_units(&self) -> usize {
        self.facilities.iter().map(|f| f.plan.n).sum()
    }
}

/// Observed failure times of one facility together with its design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FacilityRecord", into = "FacilityRecord")]
pub struct FacilitySample {
    plan: CensoringPlan,
    threshold: f64,
    j_count: usize,
    times: Vec<f64>,
    effective: Vec<usize>,
    ln_odds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FacilityRecord {
    n: usize,
    m: usize,
    removals: Vec<usize>,
    #[serde(with = "threshold_serde")]
    threshold: f64,
    j_count: usize,
    times: Vec<f64>,
}

impl TryFrom<FacilityRecord> for FacilitySample {
    type Error = Error;
    fn try_from(r: FacilityRecord) -> Result<Self> {
        let plan = CensoringPlan::new(r.n, r.m, r.removals)?;
        FacilitySample::new(plan, r.threshold, r.j_count, r.times)
    }
}

impl From<FacilitySample> for FacilityRecord {
    fn from(s: FacilitySample) -> Self {
        FacilityRecord {
            n: s.plan.n,
            m: s.plan.m,
            removals: s.plan.removals,
            threshold: s.threshold,
            j_count: s.j_count,
            times: s.times,
        }
    }
}

impl FacilitySample {
    /// Validates the record. Times must be positive and nondecreasing; ties
    /// are accepted because recorded lifetimes are rounded.
    pub fn new(plan: CensoringPlan, threshold: f64, j_count: usize, times: Vec<f64>) -> Result<Self> {
        check_threshold(threshold)?;
        if times.len() != plan.m {
            return Err(Error::Design(format!(
                "{} failure times recorded, plan expects m = {}",
                times.len(),
                plan.m
            )));
        }
        if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::domain(format!("failure times must be finite and positive, got {t}")));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("failure times must be sorted"));
        }
        if j_count > plan.m {
            return Err(Error::domain(format!("j_count {j_count} exceeds m = {}", plan.m)));
        }
        let before = times.iter().take_while(|&&t| t < threshold).count();
        if before != j_count {
            return Err(Error::domain(format!(
                "j_count {j_count} disagrees with the {before} failures before the threshold {threshold}"
            )));
        }
        let effective = effective_removals(&plan, j_count)?;
        let ln_odds = times.iter().map(|&t| ln_odds_ratio(t)).collect();
        Ok(Self {
            plan,
            threshold,
            j_count,
            times,
            effective,
            ln_odds,
        })
    }

    /// Builds the sample and counts the failures before `threshold`.
    pub fn from_times(plan: CensoringPlan, threshold: f64, times: Vec<f64>) -> Result<Self> {
        let j = times.iter().take_while(|&&t| t < threshold).count();
        Self::new(plan, threshold, j, times)
    }

    /// An uncensored sample: `n = m`, no withdrawals, no threshold.
    pub fn complete(mut times: Vec<f64>) -> Result<Self> {
        times.sort_by(f64::total_cmp);
        let plan = CensoringPlan::complete(times.len())
            .map_err(|_| Error::domain("a complete sample needs at least one observation"))?;
        Self::from_times(plan, f64::INFINITY, times)
    }

    pub fn plan(&self) -> &CensoringPlan {
        &self.plan
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn j_count(&self) -> usize {
        self.j_count
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    pub fn m(&self) -> usize {
        self.plan.m
    }

    /// Executed withdrawals `r_1..r_m`.
    pub fn effective_removals(&self) -> &[usize] {
        &self.effective
    }

    /// `ln(t_j / (1 + t_j))` for every observed time.
    pub(crate) fn ln_odds(&self) -> &[f64] {
        &self.ln_odds
    }

    pub fn risk_set_size(&self, j: usize) -> Result<usize> {
        risk_set_size(j, &self.plan, self.j_count)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.times.windows(2).all(|w| w[0] < w[1])
    }
}

/// The combined sample of every facility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BapcsSample {
    pub facilities: Vec<FacilitySample>,
}

impl BapcsSample {
    pub fn new(facilities: Vec<FacilitySample>) -> Result<Self> {
        if facilities.is_empty() {
            return Err(Error::Design("a sample needs at least one facility".into()));
        }
        Ok(Self { facilities })
    }

    pub fn k(&self) -> usize {
        self.facilities.len()
    }

    pub fn total_failures(&self) -> usize {
        self.facilities.iter().map(|f| f.m()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sample: BapcsSample = serde_json::from_str(s)?;
        Self::new(sample.facilities)
    }
}

/// A simulated facility with the bookkeeping recorded along the way.
#[derive(Debug, Clone)]
pub struct FacilityTrace {
    pub sample: FacilitySample,
    /// Units on test just before each failure.
    pub risk_sets: Vec<usize>,
    /// Units withdrawn right after each failure.
    pub withdrawn: Vec<usize>,
}

/// Runs the adaptive scheme on caller-supplied uniforms, one per failure.
///
/// At failure `j` with `g` units on test, `ln R(t_j) = ln R(t_{j-1}) + ln(V_j) / g`,
/// i.e. `t_j = F^{-1}(1 - (1 - F(t_{j-1})) V_j^{1/g})`.
pub fn simulate_facility_with_uniforms(
    p: &IepParams,
    plan: &CensoringPlan,
    threshold: f64,
    uniforms: &[f64],
) -> Result<FacilityTrace> {
    check_threshold(threshold)?;
    let m = plan.m;
    if uniforms.len() != m {
        return Err(Error::domain(format!("need {m} uniforms, got {}", uniforms.len())));
    }
    let mut alive = plan.n;
    let mut ln_surv = 0.0;
    let mut prev = 0.0f64;
    let mut times = Vec::with_capacity(m);
    let mut risk_sets = Vec::with_capacity(m);
    let mut withdrawn = Vec::with_capacity(m);
    for (j, &v) in uniforms.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(format!("uniform draw {v} outside (0,1)")));
        }
        risk_sets.push(alive);
        ln_surv += v.ln() / alive as f64;
        let mut t = p.quantile_from_ln_reliability(ln_surv);
        if t <= prev {
            t = prev.next_up();
        }
        prev = t;
        times.push(t);
        alive -= 1;
        let out = if j + 1 == m {
            alive
        } else if t < threshold {
            let planned = plan.removals[j];
            let spare = alive - (m - j - 1);
            if planned > spare {
                return Err(Error::Internal(format!(
                    "planned withdrawal {planned} at failure {} exceeds the {spare} spare units",
                    j + 1
                )));
            }
            planned
        } else {
            0
        };
        alive -= out;
        withdrawn.push(out);
    }
    let sample = FacilitySample::from_times(plan.clone(), threshold, times)?;
    Ok(FacilityTrace {
        sample,
        risk_sets,
        withdrawn,
    })
}

pub fn simulate_facility<R: Rng + ?Sized>(
    p: &IepParams,
    plan: &CensoringPlan,
    threshold: f64,
    rng: &mut R,
) -> Result<FacilitySample> {
    let uniforms: Vec<f64> = (0..plan.m).map(|_| rng.sample(Open01)).collect();
    Ok(simulate_facility_with_uniforms(p, plan, threshold, &uniforms)?.sample)
}

/// Simulates every facility independently; facility `i` draws from
/// `stream.child(i)`.
pub fn simulate_block(params: &[IepParams], design: &BlockDesign, stream: SeedStream) -> Result<BapcsSample> {
    if params.len() != design.k() {
        return Err(Error::Design(format!(
            "{} parameter sets for {} facilities",
            params.len(),
            design.k()
        )));
    }
    let beta = params[0].beta();
    if params.iter().any(|p| p.beta() != beta) {
        return Err(Error::Design("all facilities must share the same beta".into()));
    }
    let facilities = params
        .iter()
        .zip(design.facilities())
        .enumerate()
        .map(|(i, (p, f))| {
            let mut rng = stream.child(i as u64).rng();
            simulate_facility(p, &f.plan, f.threshold, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    BapcsSample::new(facilities)
}
