//! Self-check suite: exact solver against the brute-force oracle plus
//! closed-form channel and noise values.

use std::f64::consts::PI;
use std::fmt::Write as _;

use owcsim_core::allocator::{self, AllocError, AssignmentMode, AssignmentSolution, ProblemInstance};
use owcsim_core::channel::los_gain;
use owcsim_core::linkmetrics::{from_db, SinrParams};
use owcsim_core::{Tensor4, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};

pub type Solver = fn(&ProblemInstance) -> std::result::Result<AssignmentSolution, AllocError>;

pub const ORACLE_DIMS: [usize; 4] = [2, 2, 2, 2];
pub const DEFAULT_INSTANCES: usize = 600;
pub const OBJECTIVE_REL_TOL: f64 = 1e-9;

/// Random instance with entries spread over a decade either side of the
/// threshold, some entries zero and some APs masked.
pub fn random_instance(rng: &mut ChaCha8Rng, dims: [usize; 4], sigma: f64, params: SinrParams) -> ProblemInstance {
    let len = dims.iter().product();
    let mut r = Vec::with_capacity(len);
    let mut n = Vec::with_capacity(len);
    for _ in 0..len {
        let v = if rng.gen_bool(0.8) { sigma * params.z * 10f64.powf(rng.gen_range(-1.0..1.0)) } else { 0.0 };
        r.push(v);
        n.push(v * rng.gen_range(0.0..1.5));
    }
    let mask = (0..dims[2]).map(|_| rng.gen_bool(0.85)).collect();
    let mode = if rng.gen_bool(0.5) { AssignmentMode::SingleAp } else { AssignmentMode::MultiAp };
    ProblemInstance::new(Tensor4::from_vec(dims, r).unwrap(), Tensor4::from_vec(dims, n).unwrap(), sigma, params, mask, mode)
        .expect("generated instance is well formed")
}

pub fn rel_delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub max_objective_rel_delta: f64,
    /// Description of each disagreeing instance.
    pub mismatches: Vec<String>,
}

fn dump(i: usize, inst: &ProblemInstance, a: &str, b: &str) -> String {
    let mut s = format!("instance {i}: dims {:?} mode {} mask {:?}\n", inst.dims(), inst.mode().name(), inst.ap_available());
    let _ = writeln!(s, "  r = {:?}", inst.r().as_slice());
    let _ = writeln!(s, "  n = {:?}", inst.n().as_slice());
    let _ = writeln!(s, "  exact: {a}");
    let _ = write!(s, "  brute: {b}");
    s
}

fn describe(sol: &std::result::Result<AssignmentSolution, AllocError>) -> String {
    match sol {
        Ok(s) => format!("objective {} links {:?}", s.objective, s.links()),
        Err(e) => format!("error {e}"),
    }
}

pub fn oracle_suite(seed: u64, instances: usize, sigma: f64, params: SinrParams, exact: Solver, brute: Solver) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport { instances, max_objective_rel_delta: 0.0, mismatches: Vec::new() };
    for i in 0..instances {
        let inst = random_instance(&mut rng, ORACLE_DIMS, sigma, params);
        let (a, b) = (exact(&inst), brute(&inst));
        let agree = match (&a, &b) {
            (Ok(x), Ok(y)) => {
                let d = rel_delta(x.objective, y.objective);
                report.max_objective_rel_delta = report.max_objective_rel_delta.max(d);
                d <= OBJECTIVE_REL_TOL && x.s == y.s && allocator::validate(&inst, x).passed
            }
            _ => false,
        };
        if !agree {
            report.mismatches.push(dump(i, &inst, &describe(&a), &describe(&b)));
        }
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueCheck {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub rel_tol: f64,
    pub passed: bool,
}

impl ValueCheck {
    fn new(name: &'static str, value: f64, expected: f64, rel_tol: f64) -> Self {
        ValueCheck { name, value, expected, rel_tol, passed: rel_delta(value, expected) <= rel_tol }
    }
}

/// Axial LOS gain: emitter 2 m above a 20 mm² collector, Lambertian order 1.
pub fn axial_los_gain() -> f64 {
    los_gain(Vec3::new(2.0, 2.0, 3.0), Vec3::new(0.0, 0.0, -1.0), 1.0, Vec3::new(2.0, 2.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 20e-6, 25.0)
        .expect("fixed geometry is valid")
}

/// Each quantity is checked against its closed form at 1e-6 and against the
/// five printed significant digits at half a unit in the last place.
pub fn closed_form_checks(cfg: &RunConfig) -> Result<Vec<ValueCheck>> {
    let los = axial_los_gain();
    let sigma = cfg.sigma()?;
    let z = cfg.sinr_params()?.z;
    let r = &cfg.receiver;
    Ok(vec![
        ValueCheck::new("los_axial_closed_form", los, 2.0 * 20e-6 / (2.0 * PI * 4.0), 1e-6),
        ValueCheck::new("los_axial_printed", los, 1.5915e-6, 0.5e-4 / 1.5915),
        ValueCheck::new("sigma_closed_form", sigma, r.noise_density_a_per_sqrt_hz.powi(2) * r.bandwidth_hz, 1e-12),
        ValueCheck::new("sigma_printed", sigma, 3.4965e-14, 1e-4),
        ValueCheck::new("z_closed_form", z, from_db(cfg.sinr.threshold_db), 1e-6),
        ValueCheck::new("z_closed_form_literal", z, 10f64.powf(1.38), 1e-6),
        ValueCheck::new("z_printed", z, 23.988, 0.5e-3 / 23.988),
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub oracle: OracleReport,
    pub checks: Vec<ValueCheck>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "oracle: {} instances, {} mismatches, max objective rel delta {:.3e}\n",
            self.oracle.instances,
            self.oracle.mismatches.len(),
            self.oracle.max_objective_rel_delta
        );
        for c in &self.checks {
            let _ = writeln!(s, "{}: {} {:.6e} (expected {:.6e}, rel tol {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.expected, c.rel_tol);
        }
        s
    }
}

pub fn run_suite(cfg: &RunConfig, seed: u64, instances: usize, exact: Solver, brute: Solver) -> Result<SuiteReport> {
    let params = cfg.sinr_params()?;
    let oracle = oracle_suite(seed, instances, cfg.sigma()?, params, exact, brute);
    let checks = closed_form_checks(cfg)?;
    let passed = oracle.mismatches.is_empty() && checks.iter().all(|c| c.passed);
    Ok(SuiteReport { oracle, checks, passed })
}

/// Fails with [`Error::Validation`] listing every failing check and instance.
pub fn cmd_validate(cfg: &RunConfig, seed: u64, instances: usize, exact: Solver, brute: Solver) -> Result<SuiteReport> {
    let report = run_suite(cfg, seed, instances, exact, brute)?;
    if report.passed {
        return Ok(report);
    }
    let mut msg = report.summary();
    for m in &report.oracle.mismatches {
        msg.push_str(m);
        msg.push('\n');
    }
    Err(Error::Validation(msg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_suite_passes() {
        let report = cmd_validate(&RunConfig::reference(), 3, 100, allocator::solve_exact, allocator::solve_brute_force).unwrap();
        assert!(report.checks.iter().all(|c| c.passed));
        assert_eq!(report.oracle.max_objective_rel_delta, 0.0);
    }

    fn greedy_first(inst: &ProblemInstance) -> std::result::Result<AssignmentSolution, AllocError> {
        // Drops every link after the first one the exact solver picks.
        let mut sol = allocator::solve_exact(inst)?;
        let links = sol.links();
        for l in links.iter().skip(1) {
            sol.s.set(l.user, l.branch, l.ap, l.wavelength, false);
        }
        if links.len() > 1 {
            sol.objective -= (links.len() - 1) as f64 * inst.params().k;
        }
        Ok(sol)
    }

    #[test]
    fn injected_bug_is_reported_with_instance() {
        let err = cmd_validate(&RunConfig::reference(), 3, 100, greedy_first, allocator::solve_brute_force).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        let msg = err.to_string();
        assert!(msg.contains("instance ") && msg.contains("r = ["), "{msg}");
    }

    #[test]
    fn generator_straddles_threshold() {
        let p = SinrParams::reference();
        let sigma = RunConfig::reference().sigma().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mut above, mut below) = (0, 0);
        for _ in 0..50 {
            let inst = random_instance(&mut rng, ORACLE_DIMS, sigma, p);
            for &v in inst.r().as_slice().iter().filter(|&&v| v > 0.0) {
                if v / sigma >= p.z { above += 1 } else { below += 1 }
            }
        }
        assert!(above > 100 && below > 100);
    }
}
