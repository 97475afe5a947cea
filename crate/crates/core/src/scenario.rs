//! Random user drops, AP failure masks and experiment statistics.
//!
//! Drops come from `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha 0.3). One
//! stream is shared by all drops of a plan; each drop runs a partial
//! Fisher-Yates shuffle of `0..grid_size` with `gen_range(i..grid_size)`, so
//! users land on distinct locations, uniformly without replacement.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocator::{self, AllocError, AssignmentMode, AssignmentSolution, ProblemInstance};
use crate::channel::ChannelTensor;
use crate::exec::Executor;
use crate::linkmetrics::{to_db, Link, SinrParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{n_users} users do not fit on {grid_size} locations")]
    TooManyUsers { n_users: usize, grid_size: usize },
    #[error("location index {index} outside a grid of {grid_size}")]
    LocationOutOfRange { index: usize, grid_size: usize },
    #[error("failed AP index {index} outside 0..{n_aps}")]
    UnknownAp { index: usize, n_aps: usize },
    #[error("unknown failure scenario {0:?}")]
    UnknownScenario(String),
    #[error("drop {drop}: {source}")]
    Solver { drop: usize, source: AllocError },
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

pub type Result<T> = core::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropPlan {
    pub seed: u64,
    pub n_users: usize,
    pub n_drops: usize,
    /// Number of candidate locations.
    pub grid_size: usize,
}

impl DropPlan {
    pub fn new(seed: u64, n_users: usize, n_drops: usize, grid_size: usize) -> Result<Self> {
        if n_users > grid_size {
            return Err(ScenarioError::TooManyUsers { n_users, grid_size });
        }
        Ok(DropPlan { seed, n_users, n_drops, grid_size })
    }
}

/// Grid indices of the users of one drop; user `i` sits at `locations[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserDrop {
    pub id: usize,
    pub locations: Vec<usize>,
}

pub fn generate_drops(plan: &DropPlan) -> Result<Vec<UserDrop>> {
    let DropPlan { seed, n_users, n_drops, grid_size } = *plan;
    if n_users > grid_size {
        return Err(ScenarioError::TooManyUsers { n_users, grid_size });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drops = Vec::with_capacity(n_drops);
    for id in 0..n_drops {
        let mut pool: Vec<usize> = (0..grid_size).collect();
        for i in 0..n_users {
            let j = rng.gen_range(i..grid_size);
            pool.swap(i, j);
        }
        pool.truncate(n_users);
        drops.push(UserDrop { id, locations: pool });
    }
    Ok(drops)
}

/// A set of failed APs, by zero-based index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FailureScenario {
    pub name: String,
    pub failed_aps: Vec<usize>,
}

impl FailureScenario {
    pub const PRESETS: [&'static str; 4] = ["none", "ap1", "ap5", "ap1_and_ap5"];

    pub fn new(name: impl Into<String>, mut failed_aps: Vec<usize>) -> Self {
        failed_aps.sort_unstable();
        failed_aps.dedup();
        FailureScenario { name: name.into(), failed_aps }
    }

    pub fn none() -> Self {
        Self::new("none", vec![])
    }

    /// Presets count APs from 1, in the order of the default AP list.
    pub fn preset(name: &str) -> Result<Self> {
        let failed = match name {
            "none" => vec![],
            "ap1" => vec![0],
            "ap5" => vec![4],
            "ap1_and_ap5" => vec![0, 4],
            other => return Err(ScenarioError::UnknownScenario(other.to_string())),
        };
        Ok(Self::new(name, failed))
    }

    pub fn presets() -> Vec<Self> {
        Self::PRESETS.iter().map(|p| Self::preset(p).expect("preset names are valid")).collect()
    }

    pub fn availability(&self, n_aps: usize) -> Result<Vec<bool>> {
        let mut mask = vec![true; n_aps];
        for &index in &self.failed_aps {
            *mask.get_mut(index).ok_or(ScenarioError::UnknownAp { index, n_aps })? = false;
        }
        Ok(mask)
    }
}

/// Optimisation constants shared by every instance of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub sigma: f64,
    pub sinr: SinrParams,
}

pub fn build_instance(
    channel: &ChannelTensor,
    locations: &[usize],
    failure: &FailureScenario,
    mode: AssignmentMode,
    params: InstanceParams,
) -> Result<ProblemInstance> {
    let grid_size = channel.dims()[0];
    if let Some(&index) = locations.iter().find(|&&i| i >= grid_size) {
        return Err(ScenarioError::LocationOutOfRange { index, grid_size });
    }
    let r = channel.r.select_rows(locations).expect("rows checked above");
    let n = channel.n.select_rows(locations).expect("rows checked above");
    let mask = failure.availability(channel.dims()[2])?;
    Ok(ProblemInstance::new(r, n, params.sigma, params.sinr, mask, mode)?)
}

/// How several links of one user become one SINR figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrCombiner {
    /// dB of the linear mean.
    #[default]
    LinearMean,
    MaxLink,
    MinLink,
}

impl SinrCombiner {
    pub fn name(self) -> &'static str {
        match self {
            SinrCombiner::LinearMean => "linear_mean",
            SinrCombiner::MaxLink => "max_link",
            SinrCombiner::MinLink => "min_link",
        }
    }

    /// Linear SINR of a user from the linear SINRs of their links, `None`
    /// when there are none.
    pub fn combine(self, gammas: &[f64]) -> Option<f64> {
        if gammas.is_empty() {
            return None;
        }
        Some(match self {
            SinrCombiner::LinearMean => gammas.iter().sum::<f64>() / gammas.len() as f64,
            SinrCombiner::MaxLink => gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            SinrCombiner::MinLink => gammas.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

/// dB value reported for a user with no link.
pub const UNASSIGNED_SINR_DB: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserResult {
    pub user: usize,
    pub location: usize,
    pub n_aps: usize,
    /// Combined SINR, or [`UNASSIGNED_SINR_DB`].
    pub sinr_db: f64,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropResult {
    pub drop: UserDrop,
    pub solution: AssignmentSolution,
    pub users: Vec<UserResult>,
    pub avg_sinr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub n_users: usize,
    pub n_drops: usize,
    pub per_drop_avg_sinr_db: Vec<f64>,
    pub overall_avg_sinr_db: f64,
    /// Distinct APs per user, over every (drop, user) pair.
    pub ap_count_histogram: BTreeMap<usize, usize>,
    pub ap_count_mode: usize,
    pub max_ap_count: usize,
    pub unassigned_user_fraction: f64,
}

impl ExperimentStats {
    pub fn from_drops(n_users: usize, drops: &[DropResult]) -> Self {
        let per_drop_avg_sinr_db: Vec<f64> = drops.iter().map(|d| d.avg_sinr_db).collect();
        let overall_avg_sinr_db = mean(&per_drop_avg_sinr_db);
        let mut ap_count_histogram = BTreeMap::new();
        let mut unassigned = 0usize;
        for user in drops.iter().flat_map(|d| &d.users) {
            *ap_count_histogram.entry(user.n_aps).or_insert(0) += 1;
            if user.n_aps == 0 {
                unassigned += 1;
            }
        }
        let total = n_users * drops.len();
        ExperimentStats {
            n_users,
            n_drops: drops.len(),
            per_drop_avg_sinr_db,
            overall_avg_sinr_db,
            ap_count_mode: histogram_mode(&ap_count_histogram),
            max_ap_count: ap_count_histogram.keys().next_back().copied().unwrap_or(0),
            ap_count_histogram,
            unassigned_user_fraction: if total == 0 { 0.0 } else { unassigned as f64 / total as f64 },
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Most frequent key; the smallest key wins ties.
pub fn histogram_mode(hist: &BTreeMap<usize, usize>) -> usize {
    let mut best = (0, 0);
    for (&k, &count) in hist {
        if count > best.1 {
            best = (k, count);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub params: InstanceParams,
    pub combiner: SinrCombiner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub failure: FailureScenario,
    pub mode: AssignmentMode,
    pub drops: Vec<DropResult>,
    pub stats: ExperimentStats,
}

fn summarize_drop(drop: &UserDrop, solution: AssignmentSolution, combiner: SinrCombiner) -> DropResult {
    let links = solution.links();
    let users: Vec<UserResult> = drop
        .locations
        .iter()
        .enumerate()
        .map(|(user, &location)| {
            let mine: Vec<Link> = links.iter().copied().filter(|l| l.user == user).collect();
            let gammas: Vec<f64> = mine.iter().map(|l| solution.gamma.get(l.user, l.branch, l.ap, l.wavelength)).collect();
            let sinr_db = combiner
                .combine(&gammas)
                .map_or(UNASSIGNED_SINR_DB, |g| to_db(g).expect("assigned links have positive SINR"));
            UserResult { user, location, n_aps: solution.per_user_ap_count[user], sinr_db, links: mine }
        })
        .collect();
    let avg_sinr_db = mean(&users.iter().map(|u| u.sinr_db).collect::<Vec<_>>());
    DropResult { drop: drop.clone(), solution, users, avg_sinr_db }
}

/// Solves every drop exactly. Drops may run concurrently; statistics are
/// aggregated in drop order.
pub fn run_experiment<E: Executor>(
    channel: &ChannelTensor,
    drops: &[UserDrop],
    failure: &FailureScenario,
    mode: AssignmentMode,
    settings: &ExperimentSettings,
    exec: &E,
) -> Result<ExperimentOutcome> {
    let n_users = drops.first().map_or(0, |d| d.locations.len());
    let results = exec.map_indexed(drops.len(), |i| -> Result<DropResult> {
        let drop = &drops[i];
        let inst = build_instance(channel, &drop.locations, failure, mode, settings.params)?;
        let solution = allocator::solve_exact(&inst).map_err(|source| ScenarioError::Solver { drop: drop.id, source })?;
        Ok(summarize_drop(drop, solution, settings.combiner))
    });
    let drops = results.into_iter().collect::<Result<Vec<_>>>()?;
    let stats = ExperimentStats::from_drops(n_users, &drops);
    Ok(ExperimentOutcome { failure: failure.clone(), mode, drops, stats })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeComparison {
    pub single_ap: ExperimentOutcome,
    pub multi_ap: ExperimentOutcome,
    /// Multi-AP minus single-AP average SINR, per drop.
    pub per_drop_sinr_delta_db: Vec<f64>,
    /// Multi-AP minus single-AP objective, per drop.
    pub per_drop_objective_delta: Vec<f64>,
}

impl ModeComparison {
    pub fn avg_sinr_delta_db(&self) -> f64 {
        self.multi_ap.stats.overall_avg_sinr_db - self.single_ap.stats.overall_avg_sinr_db
    }
}

/// Runs both modes on the same drops.
pub fn compare_modes<E: Executor>(
    channel: &ChannelTensor,
    drops: &[UserDrop],
    failure: &FailureScenario,
    settings: &ExperimentSettings,
    exec: &E,
) -> Result<ModeComparison> {
    let single_ap = run_experiment(channel, drops, failure, AssignmentMode::SingleAp, settings, exec)?;
    let multi_ap = run_experiment(channel, drops, failure, AssignmentMode::MultiAp, settings, exec)?;
    let pair = |f: &dyn Fn(&DropResult) -> f64| -> Vec<f64> {
        single_ap.drops.iter().zip(&multi_ap.drops).map(|(s, m)| f(m) - f(s)).collect()
    };
    let per_drop_sinr_delta_db = pair(&|d| d.avg_sinr_db);
    let per_drop_objective_delta = pair(&|d| d.solution.objective);
    Ok(ModeComparison { single_ap, multi_ap, per_drop_sinr_delta_db, per_drop_objective_delta })
}
