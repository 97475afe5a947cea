//! Channel tracing and the user-drop experiment grid.

use std::path::{Path, PathBuf};

use owcsim_core::allocator::AssignmentMode;
use owcsim_core::channel::{build_channel_tensor, ChannelTensor};
use owcsim_core::scenario::{
    generate_drops, run_experiment, DropPlan, ExperimentOutcome, ExperimentSettings, ExperimentStats, FailureScenario, ScenarioError,
    UNASSIGNED_SINR_DB,
};
use owcsim_core::Executor;
use serde::Serialize;

use crate::artifact;
use crate::config::{hex, RunConfig};
use crate::error::{Error, Result};
use crate::output::{self, num, Provenance, SOFTWARE};

pub const CHANNEL_FILE: &str = "channel.owcchan";

#[derive(Debug, Clone, PartialEq)]
pub struct TraceOutcome {
    pub path: PathBuf,
    pub fingerprint: [u8; 32],
    /// False when a matching artifact was already present.
    pub traced: bool,
    pub channel: ChannelTensor,
}

/// Traces the configured room into `out_dir`, reusing an artifact with the
/// same fingerprint.
pub fn trace<E: Executor>(cfg: &RunConfig, out_dir: &Path, exec: &E) -> Result<TraceOutcome> {
    let fingerprint = cfg.channel_fingerprint()?;
    let path = out_dir.join(CHANNEL_FILE);
    if artifact::read_fingerprint(&path) == Some(fingerprint) {
        let (channel, _) = artifact::read(&path)?;
        return Ok(TraceOutcome { path, fingerprint, traced: false, channel });
    }
    let scene = cfg.scene()?;
    let (_, channel) = build_channel_tensor(&scene, cfg.illumination_scale, exec).map_err(|e| Error::Config(e.to_string()))?;
    output::create_dir(out_dir)?;
    artifact::write(&path, &channel, &fingerprint)?;
    Ok(TraceOutcome { path, fingerprint, traced: true, channel })
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub n_users: usize,
    pub outcome: ExperimentOutcome,
}

impl GridCell {
    pub fn mode(&self) -> AssignmentMode {
        self.outcome.mode
    }

    pub fn failure(&self) -> &str {
        &self.outcome.failure.name
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityCheck {
    pub n_users: usize,
    pub mode: AssignmentMode,
    pub baseline: String,
    pub degraded: String,
    pub drops: usize,
    /// Drops whose optimal objective rose under the extra failure.
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub cells: Vec<GridCell>,
    pub monotonicity: Vec<MonotonicityCheck>,
}

impl ExperimentGrid {
    pub fn cell(&self, n_users: usize, mode: AssignmentMode, failure: &str) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.n_users == n_users && c.mode() == mode && c.failure() == failure)
    }
}

/// Failure pairs where the second masks a superset of the first.
const NESTED: [(&str, &str); 4] = [("none", "ap1"), ("none", "ap5"), ("ap1", "ap1_and_ap5"), ("ap5", "ap1_and_ap5")];

/// Every configured (user count, failure, mode) combination. All cells with
/// the same user count share one drop sequence.
pub fn run_grid<E: Executor>(cfg: &RunConfig, channel: &ChannelTensor, exec: &E) -> Result<ExperimentGrid> {
    let settings = ExperimentSettings { params: cfg.instance_params()?, combiner: cfg.experiment.combiner };
    let failures = cfg.failures()?;
    let grid_size = channel.dims()[0];
    let mut cells = Vec::new();
    for &n_users in &cfg.experiment.n_users {
        let plan = DropPlan::new(cfg.experiment.seed, n_users, cfg.experiment.n_drops, grid_size).map_err(|e| Error::Config(e.to_string()))?;
        let drops = generate_drops(&plan).map_err(|e| Error::Config(e.to_string()))?;
        for failure in &failures {
            for &mode in &cfg.experiment.modes {
                let outcome = run_experiment(channel, &drops, failure, mode, &settings, exec).map_err(|e| guard(e, n_users, mode, failure, &drops))?;
                cells.push(GridCell { n_users, outcome });
            }
        }
    }
    let mut grid = ExperimentGrid { cells, monotonicity: Vec::new() };
    grid.monotonicity = monotonicity(&grid, cfg);
    Ok(grid)
}

fn guard(e: ScenarioError, n_users: usize, mode: AssignmentMode, failure: &FailureScenario, drops: &[owcsim_core::scenario::UserDrop]) -> Error {
    let detail = match &e {
        ScenarioError::Solver { drop, .. } => format!(" locations {:?}", drops[*drop].locations),
        _ => String::new(),
    };
    Error::Guard(format!("{e} (n_users {n_users}, mode {}, failure {}){detail}", mode.name(), failure.name))
}

fn monotonicity(grid: &ExperimentGrid, cfg: &RunConfig) -> Vec<MonotonicityCheck> {
    let mut out = Vec::new();
    for &n_users in &cfg.experiment.n_users {
        for &mode in &cfg.experiment.modes {
            for (base, worse) in NESTED {
                let (Some(b), Some(w)) = (grid.cell(n_users, mode, base), grid.cell(n_users, mode, worse)) else { continue };
                let violations = b
                    .outcome
                    .drops
                    .iter()
                    .zip(&w.outcome.drops)
                    .filter(|(x, y)| y.solution.objective > x.solution.objective)
                    .map(|(x, _)| x.drop.id)
                    .collect();
                out.push(MonotonicityCheck {
                    n_users,
                    mode,
                    baseline: base.into(),
                    degraded: worse.into(),
                    drops: b.outcome.drops.len(),
                    violations,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub per_user_sinr: String,
    pub unassigned_user_sinr_db: f64,
    pub per_drop_average: &'static str,
    pub grid_layout: String,
    pub ap_numbering: &'static str,
    pub drop_generator: &'static str,
    pub assigned_format: &'static str,
}

impl Conventions {
    pub fn new(cfg: &RunConfig) -> Self {
        Conventions {
            per_user_sinr: format!("{} of linear SINR over the user's assigned links, then dB", cfg.experiment.combiner.name()),
            unassigned_user_sinr_db: UNASSIGNED_SINR_DB,
            per_drop_average: "arithmetic mean of per-user dB values; overall = mean over drops",
            grid_layout: format!("{} x {} cell centres, index = ix * {} + iy", cfg.grid.nx, cfg.grid.ny, cfg.grid.ny),
            ap_numbering: "zero-based in config order; ap1 = index 0, ap5 = index 4",
            drop_generator: "ChaCha8Rng::seed_from_u64(seed), partial Fisher-Yates with gen_range, one stream per user count",
            assigned_format: "semicolon-separated fF/aA/wW triples (branch, AP, wavelength; zero-based)",
        }
    }

    fn csv_notes(&self) -> Vec<String> {
        vec![
            format!("per-user SINR: {}", self.per_user_sinr),
            format!("unassigned users: {} dB", self.unassigned_user_sinr_db),
            format!("grid: {}", self.grid_layout),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub n_users: usize,
    pub mode: AssignmentMode,
    pub failure: String,
    pub mean_objective: f64,
    pub stats: ExperimentStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub fingerprint: String,
    pub channel_fingerprint: String,
    pub software: &'static str,
    pub seed: u64,
    pub n_drops: usize,
    pub conventions: Conventions,
    pub cells: Vec<CellSummary>,
    pub monotonicity: Vec<MonotonicityCheck>,
}

pub const DROPS_HEADER: [&str; 9] =
    ["n_users", "mode", "failure", "drop_id", "user_id", "location_index", "n_assigned_aps", "sinr_db", "assigned"];
pub const AP_COUNTS_HEADER: [&str; 5] = ["n_users", "mode", "failure", "n_aps", "count"];
pub const FIG4_HEADER: [&str; 5] = ["drop_id", "single_ap_sinr_db", "multi_ap_sinr_db", "single_ap_n_aps", "multi_ap_n_aps"];
pub const FIG5_HEADER: [&str; 6] = ["drop_id", "user_id", "single_ap_sinr_db", "multi_ap_sinr_db", "single_ap_n_aps", "multi_ap_n_aps"];
pub const FIG6_HEADER: [&str; 6] = ["n_users", "mode", "avg_sinr_db", "ap_count_mode", "max_ap_count", "unassigned_user_fraction"];
pub const FIG7_HEADER: [&str; 6] = ["n_users", "failure", "mode", "avg_sinr_db", "unassigned_user_fraction", "mean_objective"];

fn mean_objective(o: &ExperimentOutcome) -> f64 {
    if o.drops.is_empty() {
        0.0
    } else {
        o.drops.iter().map(|d| d.solution.objective).sum::<f64>() / o.drops.len() as f64
    }
}

fn assigned(links: &[owcsim_core::linkmetrics::Link]) -> String {
    links.iter().map(|l| format!("f{}/a{}/w{}", l.branch, l.ap, l.wavelength)).collect::<Vec<_>>().join(";")
}

/// Files written by [`write_outputs`], relative to the output directory.
pub const OUTPUT_FILES: [&str; 7] = ["drops.csv", "ap_counts.csv", "fig4.csv", "fig5.csv", "fig6.csv", "fig7.csv", "summary.json"];

pub fn write_outputs(cfg: &RunConfig, channel_fp: &[u8; 32], grid: &ExperimentGrid, out_dir: &Path) -> Result<RunSummary> {
    output::create_dir(out_dir)?;
    let conventions = Conventions::new(cfg);
    let fingerprint = hex(&cfg.fingerprint());
    let prov = Provenance { fingerprint: fingerprint.clone(), notes: conventions.csv_notes() };

    let mut drops = Vec::new();
    let mut counts = Vec::new();
    for c in &grid.cells {
        let key = [c.n_users.to_string(), c.mode().name().to_string(), c.failure().to_string()];
        for d in &c.outcome.drops {
            for u in &d.users {
                let mut row = key.to_vec();
                row.extend([
                    d.drop.id.to_string(),
                    u.user.to_string(),
                    u.location.to_string(),
                    u.n_aps.to_string(),
                    num(u.sinr_db),
                    assigned(&u.links),
                ]);
                drops.push(row);
            }
        }
        for (n, count) in &c.outcome.stats.ap_count_histogram {
            let mut row = key.to_vec();
            row.extend([n.to_string(), count.to_string()]);
            counts.push(row);
        }
    }
    output::write_csv(&out_dir.join("drops.csv"), &prov, &DROPS_HEADER, &drops)?;
    output::write_csv(&out_dir.join("ap_counts.csv"), &prov, &AP_COUNTS_HEADER, &counts)?;

    let paired = |n_users: usize| {
        grid.cell(n_users, AssignmentMode::SingleAp, "none").zip(grid.cell(n_users, AssignmentMode::MultiAp, "none"))
    };
    let mut fig4 = Vec::new();
    if let Some((s, m)) = paired(1) {
        for (ds, dm) in s.outcome.drops.iter().zip(&m.outcome.drops) {
            fig4.push(vec![
                ds.drop.id.to_string(),
                num(ds.users[0].sinr_db),
                num(dm.users[0].sinr_db),
                ds.users[0].n_aps.to_string(),
                dm.users[0].n_aps.to_string(),
            ]);
        }
    }
    output::write_csv(&out_dir.join("fig4.csv"), &prov.clone().note("one user, no failure"), &FIG4_HEADER, &fig4)?;

    let mut fig5 = Vec::new();
    if let Some((s, m)) = paired(2) {
        for (ds, dm) in s.outcome.drops.iter().zip(&m.outcome.drops) {
            for (us, um) in ds.users.iter().zip(&dm.users) {
                fig5.push(vec![
                    ds.drop.id.to_string(),
                    us.user.to_string(),
                    num(us.sinr_db),
                    num(um.sinr_db),
                    us.n_aps.to_string(),
                    um.n_aps.to_string(),
                ]);
            }
        }
    }
    output::write_csv(&out_dir.join("fig5.csv"), &prov.clone().note("two users, no failure"), &FIG5_HEADER, &fig5)?;

    let fig6: Vec<Vec<String>> = grid
        .cells
        .iter()
        .filter(|c| c.failure() == "none")
        .map(|c| {
            let s = &c.outcome.stats;
            vec![
                c.n_users.to_string(),
                c.mode().name().into(),
                num(s.overall_avg_sinr_db),
                s.ap_count_mode.to_string(),
                s.max_ap_count.to_string(),
                num(s.unassigned_user_fraction),
            ]
        })
        .collect();
    output::write_csv(&out_dir.join("fig6.csv"), &prov.clone().note("no failure"), &FIG6_HEADER, &fig6)?;

    let fig7: Vec<Vec<String>> = grid
        .cells
        .iter()
        .filter(|c| cfg.experiment.failure_users.contains(&c.n_users))
        .map(|c| {
            let s = &c.outcome.stats;
            vec![
                c.n_users.to_string(),
                c.failure().into(),
                c.mode().name().into(),
                num(s.overall_avg_sinr_db),
                num(s.unassigned_user_fraction),
                num(mean_objective(&c.outcome)),
            ]
        })
        .collect();
    output::write_csv(&out_dir.join("fig7.csv"), &prov, &FIG7_HEADER, &fig7)?;

    let summary = RunSummary {
        fingerprint,
        channel_fingerprint: hex(channel_fp),
        software: SOFTWARE,
        seed: cfg.experiment.seed,
        n_drops: cfg.experiment.n_drops,
        conventions,
        cells: grid
            .cells
            .iter()
            .map(|c| CellSummary {
                n_users: c.n_users,
                mode: c.mode(),
                failure: c.failure().into(),
                mean_objective: mean_objective(&c.outcome),
                stats: c.outcome.stats.clone(),
            })
            .collect(),
        monotonicity: grid.monotonicity.clone(),
    };
    output::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
