//! Backhaul topology manifests, resilience sweeps and the design comparison.
//!
//! A manifest is the JSON form of [`Topology`]: `nodes` (id, name, kind,
//! ports, forwarding, capacity_gbps), `edges` (port references, fiber count,
//! capacity_gbps, wavelengths), `ap_ids`, `olt_id`, `n_wavelengths`,
//! `rate_gbps` and the `params` the builder was called with, tagged by
//! `design`. A `null` capacity means unconstrained.

use std::fs;
use std::path::Path;

use owcsim_core::pon::{build_awgr_pon, build_p2p_pon, build_switch_baseline, NodeKind, ResilienceReport, Topology};
use serde::Serialize;

use crate::config::{hex, RunConfig};
use crate::error::{Error, Result};
use crate::output::{self, num, Provenance};

/// Single failures that should leave the surviving APs connected.
pub const CORE_KINDS: [NodeKind; 3] = [NodeKind::Ap, NodeKind::Awgr, NodeKind::Switch];

fn pon_err(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("topology: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub design: String,
    pub n_aps: usize,
    /// `None` when no finite cut separates the APs.
    pub bisection_gbps: Option<f64>,
    pub core: ResilienceReport,
    pub all: ResilienceReport,
    pub min_disjoint_ap_olt: usize,
    pub min_disjoint_ap_pair: usize,
}

pub fn analyze(design: &str, topo: &Topology) -> Result<DesignReport> {
    topo.validate().map_err(pon_err)?;
    let b = topo.bisection_bandwidth().map_err(pon_err)?;
    let core = topo.failure_sweep(&CORE_KINDS).map_err(pon_err)?;
    let all = topo.failure_sweep(&NodeKind::ALL).map_err(pon_err)?;
    let aps = &topo.ap_ids;
    let mut min_olt = usize::MAX;
    let mut min_pair = usize::MAX;
    for (i, &a) in aps.iter().enumerate() {
        min_olt = min_olt.min(topo.disjoint_paths(a, topo.olt_id).map_err(pon_err)?);
        for &c in &aps[i + 1..] {
            min_pair = min_pair.min(topo.disjoint_paths(a, c).map_err(pon_err)?);
        }
    }
    Ok(DesignReport {
        design: design.into(),
        n_aps: aps.len(),
        bisection_gbps: b.is_finite().then_some(b),
        core,
        all,
        min_disjoint_ap_olt: if min_olt == usize::MAX { 0 } else { min_olt },
        min_disjoint_ap_pair: if min_pair == usize::MAX { 0 } else { min_pair },
    })
}

pub fn build_all(cfg: &RunConfig) -> Result<Vec<(&'static str, Topology)>> {
    Ok(vec![
        ("awgr_pon", build_awgr_pon(&cfg.pon.awgr).map_err(pon_err)?),
        ("p2p_pon", build_p2p_pon(&cfg.pon.p2p).map_err(pon_err)?),
        ("switch_baseline", build_switch_baseline(&cfg.pon.switch).map_err(pon_err)?),
    ])
}

pub fn manifest(topo: &Topology) -> String {
    let mut s = serde_json::to_string_pretty(topo).expect("topology serializes");
    s.push('\n');
    s
}

pub fn import_manifest(path: &Path) -> Result<Topology> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let topo: Topology = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    topo.validate().map_err(pon_err)?;
    Ok(topo)
}

pub const RESILIENCE_HEADER: [&str; 7] =
    ["failed_node", "kind", "n_disconnected", "disconnected_aps", "affected_aps", "ap_to_olt_survival", "ap_pair_survival"];
pub const COMPARISON_HEADER: [&str; 9] = [
    "design",
    "n_aps",
    "bisection_gbps",
    "max_disconnected_core",
    "max_disconnected_any",
    "ap_to_olt_survival",
    "ap_pair_survival",
    "min_disjoint_ap_olt",
    "min_disjoint_ap_pair",
];

fn names(topo: &Topology, ids: &[usize]) -> String {
    ids.iter().map(|&i| topo.nodes[i].name.as_str()).collect::<Vec<_>>().join(";")
}

pub fn resilience_rows(topo: &Topology, report: &ResilienceReport) -> Vec<Vec<String>> {
    report
        .failures
        .iter()
        .map(|f| {
            vec![
                f.failed_name.clone(),
                f.kind.name().into(),
                f.disconnected_aps.len().to_string(),
                names(topo, &f.disconnected_aps),
                names(topo, &f.affected_aps),
                num(f.ap_to_olt_survival),
                num(f.ap_pair_survival),
            ]
        })
        .collect()
}

pub fn comparison_row(r: &DesignReport) -> Vec<String> {
    vec![
        r.design.clone(),
        r.n_aps.to_string(),
        r.bisection_gbps.map_or("inf".into(), num),
        r.core.max_disconnected.to_string(),
        r.all.max_disconnected.to_string(),
        num(r.all.ap_to_olt_survival_fraction),
        num(r.all.ap_pair_survival_fraction),
        r.min_disjoint_ap_olt.to_string(),
        r.min_disjoint_ap_pair.to_string(),
    ]
}

/// Builds the three designs, writes `<design>.manifest.json`,
/// `<design>.resilience.csv`, `pon_comparison.csv` and `pon_summary.json`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<DesignReport>> {
    output::create_dir(out_dir)?;
    let prov = Provenance::new(hex(&cfg.fingerprint()))
        .note("core failures: single ap, awgr and switch nodes; any: every node kind, including the olt")
        .note("a failed node carries no traffic; disconnected counts exclude the failed node itself");
    let mut reports = Vec::new();
    for (design, topo) in build_all(cfg)? {
        let path = out_dir.join(format!("{design}.manifest.json"));
        fs::write(&path, manifest(&topo)).map_err(|e| Error::io(&path, e))?;
        let report = analyze(design, &topo)?;
        output::write_csv(&out_dir.join(format!("{design}.resilience.csv")), &prov, &RESILIENCE_HEADER, &resilience_rows(&topo, &report.all))?;
        reports.push(report);
    }
    let rows: Vec<_> = reports.iter().map(comparison_row).collect();
    output::write_csv(&out_dir.join("pon_comparison.csv"), &prov, &COMPARISON_HEADER, &rows)?;
    output::write_json(&out_dir.join("pon_summary.json"), &reports)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_comparison() {
        let cfg = RunConfig::reference();
        let reports: Vec<_> = build_all(&cfg).unwrap().iter().map(|(d, t)| analyze(d, t).unwrap()).collect();
        assert_eq!(reports[0].bisection_gbps, Some(200.0));
        assert_eq!(reports[0].core.max_disconnected, 0);
        assert_eq!(reports[1].core.max_disconnected, 0);
        assert_eq!(reports[2].core.max_disconnected, 4);
        assert!(reports[0].min_disjoint_ap_olt >= 2);
    }

    #[test]
    fn manifest_reimport_gives_identical_report() {
        let dir = tempfile::tempdir().unwrap();
        for (design, topo) in build_all(&RunConfig::reference()).unwrap() {
            let path = dir.path().join("m.json");
            fs::write(&path, manifest(&topo)).unwrap();
            let back = import_manifest(&path).unwrap();
            assert_eq!(back, topo);
            assert_eq!(analyze(design, &back).unwrap(), analyze(design, &topo).unwrap());
        }
    }
}
