//! Wavelength-aware graph models of optical backhaul fabrics.
//!
//! Three builders cover the AWGR-based PON, the point-to-point PON and an
//! electronic-switch baseline. Fibers are undirected [`Edge`]s between node
//! ports and carry a set of wavelengths.
//!
//! Traversal rules, used by every query:
//!
//! * passive nodes (couplers, splitters, AWGs) pass a wavelength unchanged
//!   from any port to any other port;
//! * an AWGR entered on port `p` with wavelength `w` exits on
//!   `(p + w) mod N`; since fibers are bidirectional the reverse lightpath
//!   `(p - w) mod N` is also allowed;
//! * forwarding nodes (switches, the OLT, and APs in designs where they
//!   relay) terminate the signal and may re-emit it on any wavelength;
//! * other APs are endpoints only.
//!
//! Capacities are in Gbps. Access links between an AP and its first passive
//! or electronic element are ideal (unbounded); fabric fibers carry
//! `fibers * wavelengths * rate`.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PonError {
    #[error("invalid topology parameters: {0}")]
    InvalidParams(String),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
    #[error("index out of range: {what} = {value}, limit {limit}")]
    OutOfRange { what: &'static str, value: usize, limit: usize },
    #[error("source and destination are the same node")]
    SameEndpoints,
    #[error("bisection needs an even, nonzero AP count, got {0}")]
    OddApCount(usize),
    #[error("more than {0} simple paths; refusing to enumerate")]
    PathLimit(usize),
}

pub type Result<T> = core::result::Result<T, PonError>;

fn invalid(msg: String) -> PonError {
    PonError::InvalidParams(msg)
}

/// Output port of an `size x size` cyclic AWGR.
pub fn awgr_output_port(input_port: usize, wavelength: usize, size: usize) -> Result<usize> {
    if input_port >= size {
        return Err(PonError::OutOfRange { what: "input port", value: input_port, limit: size });
    }
    if wavelength >= size {
        return Err(PonError::OutOfRange { what: "wavelength", value: wavelength, limit: size });
    }
    Ok((input_port + wavelength) % size)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Ap,
    Coupler,
    Splitter,
    Awgr,
    Awg,
    Olt,
    Switch,
}

impl NodeKind {
    pub const ALL: [NodeKind; 7] =
        [NodeKind::Ap, NodeKind::Coupler, NodeKind::Splitter, NodeKind::Awgr, NodeKind::Awg, NodeKind::Olt, NodeKind::Switch];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Ap => "ap",
            NodeKind::Coupler => "coupler",
            NodeKind::Splitter => "splitter",
            NodeKind::Awgr => "awgr",
            NodeKind::Awg => "awg",
            NodeKind::Olt => "olt",
            NodeKind::Switch => "switch",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    fn is_passive(self) -> bool {
        matches!(self, NodeKind::Coupler | NodeKind::Splitter | NodeKind::Awg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub name: String,
    pub kind: NodeKind,
    pub ports: usize,
    /// Terminates and re-emits traffic on any wavelength.
    pub forwarding: bool,
    /// Throughput limit of the node itself; `None` is unbounded.
    pub capacity_gbps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub node: usize,
    pub port: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: PortRef,
    pub b: PortRef,
    /// Parallel fibers bundled in this link.
    pub fibers: u32,
    /// `None` for ideal access links.
    pub capacity_gbps: Option<f64>,
    pub wavelengths: Vec<usize>,
}

impl Edge {
    fn carries(&self, w: usize) -> bool {
        self.wavelengths.contains(&w)
    }
}

/// Parameters a topology was built from, kept for its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum BuildParams {
    AwgrPon(AwgrPonParams),
    P2pPon(P2pPonParams),
    SwitchBaseline(SwitchParams),
    SharedBus { n_aps: usize, rate_gbps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub ap_ids: Vec<usize>,
    pub olt_id: usize,
    pub n_wavelengths: usize,
    pub rate_gbps: f64,
    pub params: BuildParams,
}

struct Builder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    used_ports: Vec<usize>,
    wavelengths: Vec<usize>,
    rate: f64,
}

impl Builder {
    fn new(n_wavelengths: usize, rate: f64) -> Self {
        Builder { nodes: Vec::new(), edges: Vec::new(), used_ports: Vec::new(), wavelengths: (0..n_wavelengths).collect(), rate }
    }

    fn node(&mut self, name: String, kind: NodeKind, forwarding: bool) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node { id, name, kind, ports: 0, forwarding, capacity_gbps: None });
        self.used_ports.push(0);
        id
    }

    fn next_port(&mut self, node: usize) -> usize {
        let p = self.used_ports[node];
        self.used_ports[node] += 1;
        p
    }

    fn link(&mut self, a: PortRef, b: PortRef, fibers: Option<u32>) {
        let capacity_gbps = fibers.map(|f| f as f64 * self.wavelengths.len() as f64 * self.rate);
        self.edges.push(Edge { a, b, fibers: fibers.unwrap_or(1), capacity_gbps, wavelengths: self.wavelengths.clone() });
    }

    /// Ideal access link on the next free ports.
    fn access(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.next_port(a), self.next_port(b));
        self.link(PortRef { node: a, port: pa }, PortRef { node: b, port: pb }, None);
    }

    /// Fabric link; an explicit port pins an AWGR side.
    fn fabric(&mut self, a: usize, pa: Option<usize>, b: usize, pb: Option<usize>, fibers: u32) {
        let pa = pa.unwrap_or_else(|| self.next_port(a));
        let pb = pb.unwrap_or_else(|| self.next_port(b));
        self.link(PortRef { node: a, port: pa }, PortRef { node: b, port: pb }, Some(fibers));
    }

    fn finish(mut self, ap_ids: Vec<usize>, olt_id: usize, params: BuildParams) -> Topology {
        for node in &mut self.nodes {
            if node.kind != NodeKind::Awgr {
                node.ports = self.used_ports[node.id];
            }
        }
        Topology {
            nodes: self.nodes,
            edges: self.edges,
            ap_ids,
            olt_id,
            n_wavelengths: self.wavelengths.len(),
            rate_gbps: self.rate,
            params,
        }
    }
}

fn check_rate(rate: f64, n_wavelengths: usize) -> Result<()> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(invalid(format!("rate must be positive, got {rate}")));
    }
    if n_wavelengths == 0 {
        return Err(invalid("at least one wavelength is needed".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwgrPonParams {
    pub n_aps: usize,
    pub n_sets: usize,
    pub awgr_size: usize,
    pub rate_gbps: f64,
    pub n_wavelengths: usize,
    /// Fibers from each set's glue splitter to its domain AWG.
    pub splitter_awg_fibers: u32,
    /// Fibers from each AWG to the AWGR of the other domain.
    pub awg_awgr_fibers: u32,
}

impl Default for AwgrPonParams {
    fn default() -> Self {
        AwgrPonParams { n_aps: 8, n_sets: 4, awgr_size: 4, rate_gbps: 10.0, n_wavelengths: 4, splitter_awg_fibers: 2, awg_awgr_fibers: 3 }
    }
}

/// AWGR-based PON.
///
/// APs form `n_sets` sets joined by a direct intra-set mesh. The sets split
/// into two domains, one per AWGR. Each set has a coupler on a dedicated
/// port of its domain AWGR. The OLT sits on the next port of both AWGRs. For
/// multi-hop paths, each set also has a glue splitter feeding its domain's
/// AWG, and that AWG feeds the last used port of the other domain's AWGR.
pub fn build_awgr_pon(p: &AwgrPonParams) -> Result<Topology> {
    check_rate(p.rate_gbps, p.n_wavelengths)?;
    if p.n_sets == 0 || !p.n_sets.is_multiple_of(2) {
        return Err(invalid(format!("n_sets must be even and nonzero, got {}", p.n_sets)));
    }
    if p.n_aps == 0 || !p.n_aps.is_multiple_of(p.n_sets) {
        return Err(invalid(format!("{} APs do not split into {} sets", p.n_aps, p.n_sets)));
    }
    let per_domain = p.n_sets / 2;
    let olt_port = per_domain;
    let glue_port = per_domain + 1;
    if glue_port >= p.awgr_size {
        return Err(invalid(format!("{} sets per AWGR need {} ports, AWGR has {}", per_domain, per_domain + 2, p.awgr_size)));
    }
    if p.n_wavelengths > p.awgr_size {
        return Err(invalid(format!("{} wavelengths exceed AWGR size {}", p.n_wavelengths, p.awgr_size)));
    }
    if p.splitter_awg_fibers == 0 || p.awg_awgr_fibers == 0 {
        return Err(invalid("glue fan-outs must be at least 1".into()));
    }

    let mut b = Builder::new(p.n_wavelengths, p.rate_gbps);
    let ap_ids: Vec<usize> = (0..p.n_aps).map(|i| b.node(format!("ap{i}"), NodeKind::Ap, false)).collect();
    let olt = b.node("olt".into(), NodeKind::Olt, true);
    let awgrs: Vec<usize> = (0..2).map(|d| b.node(format!("awgr{d}"), NodeKind::Awgr, false)).collect();
    let awgs: Vec<usize> = (0..2).map(|d| b.node(format!("awg{d}"), NodeKind::Awg, false)).collect();
    for &r in &awgrs {
        b.nodes[r].ports = p.awgr_size;
        b.fabric(olt, None, r, Some(olt_port), 1);
    }

    let set_size = p.n_aps / p.n_sets;
    for s in 0..p.n_sets {
        let domain = s / per_domain;
        let members = &ap_ids[s * set_size..(s + 1) * set_size];
        let coupler = b.node(format!("coupler{s}"), NodeKind::Coupler, false);
        let splitter = b.node(format!("splitter{s}"), NodeKind::Splitter, false);
        for (i, &ap) in members.iter().enumerate() {
            b.access(ap, coupler);
            b.access(ap, splitter);
            for &other in &members[i + 1..] {
                b.access(ap, other);
            }
        }
        b.fabric(coupler, None, awgrs[domain], Some(s % per_domain), 1);
        b.fabric(splitter, None, awgs[domain], None, p.splitter_awg_fibers);
    }
    for d in 0..2 {
        b.fabric(awgs[d], None, awgrs[1 - d], Some(glue_port), p.awg_awgr_fibers);
    }
    Ok(b.finish(ap_ids, olt, BuildParams::AwgrPon(*p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2pPonParams {
    pub n_aps: usize,
    pub n_groups: usize,
    pub n_subgroups: usize,
    pub rate_gbps: f64,
    pub n_wavelengths: usize,
}

impl Default for P2pPonParams {
    fn default() -> Self {
        P2pPonParams { n_aps: 8, n_groups: 2, n_subgroups: 2, rate_gbps: 10.0, n_wavelengths: 4 }
    }
}

/// Point-to-point PON.
///
/// Each subgroup's APs share a coupler. Coupler `k` of a group links to
/// coupler `k` of every other group, and coupler 0 of each group links to
/// the OLT. A passive star per group connects all of the group's APs. APs
/// relay transit traffic.
pub fn build_p2p_pon(p: &P2pPonParams) -> Result<Topology> {
    check_rate(p.rate_gbps, p.n_wavelengths)?;
    let cells = p.n_groups * p.n_subgroups;
    if cells == 0 || p.n_aps == 0 || !p.n_aps.is_multiple_of(cells) {
        return Err(invalid(format!("{} APs do not split into {} groups of {} subgroups", p.n_aps, p.n_groups, p.n_subgroups)));
    }
    let per_sub = p.n_aps / cells;
    let mut b = Builder::new(p.n_wavelengths, p.rate_gbps);
    let ap_ids: Vec<usize> = (0..p.n_aps).map(|i| b.node(format!("ap{i}"), NodeKind::Ap, true)).collect();
    let olt = b.node("olt".into(), NodeKind::Olt, true);

    let mut couplers: Vec<Vec<usize>> = Vec::with_capacity(p.n_groups);
    for g in 0..p.n_groups {
        let star = b.node(format!("star{g}"), NodeKind::Coupler, false);
        let mut group = Vec::with_capacity(p.n_subgroups);
        for k in 0..p.n_subgroups {
            let c = b.node(format!("coupler{g}_{k}"), NodeKind::Coupler, false);
            group.push(c);
            let first = (g * p.n_subgroups + k) * per_sub;
            for &ap in &ap_ids[first..first + per_sub] {
                b.access(ap, c);
                b.access(ap, star);
            }
        }
        b.fabric(group[0], None, olt, None, 1);
        couplers.push(group);
    }
    for (g, group) in couplers.iter().enumerate() {
        for other in &couplers[g + 1..] {
            for (&x, &y) in group.iter().zip(other) {
                b.fabric(x, None, y, None, 1);
            }
        }
    }
    Ok(b.finish(ap_ids, olt, BuildParams::P2pPon(*p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    pub n_aps: usize,
    pub aps_per_switch: usize,
    pub rate_gbps: f64,
    pub n_wavelengths: usize,
}

impl Default for SwitchParams {
    fn default() -> Self {
        SwitchParams { n_aps: 8, aps_per_switch: 4, rate_gbps: 10.0, n_wavelengths: 4 }
    }
}

/// One electronic switch per `aps_per_switch` APs. The switches form a full
/// mesh, and each switch has an uplink to the OLT.
pub fn build_switch_baseline(p: &SwitchParams) -> Result<Topology> {
    check_rate(p.rate_gbps, p.n_wavelengths)?;
    if p.aps_per_switch == 0 || p.n_aps == 0 || !p.n_aps.is_multiple_of(p.aps_per_switch) {
        return Err(invalid(format!("{} APs do not split into switches of {}", p.n_aps, p.aps_per_switch)));
    }
    let mut b = Builder::new(p.n_wavelengths, p.rate_gbps);
    let ap_ids: Vec<usize> = (0..p.n_aps).map(|i| b.node(format!("ap{i}"), NodeKind::Ap, false)).collect();
    let olt = b.node("olt".into(), NodeKind::Olt, true);
    let switches: Vec<usize> =
        (0..p.n_aps / p.aps_per_switch).map(|s| b.node(format!("switch{s}"), NodeKind::Switch, true)).collect();
    for (s, &sw) in switches.iter().enumerate() {
        for &ap in &ap_ids[s * p.aps_per_switch..(s + 1) * p.aps_per_switch] {
            b.access(ap, sw);
        }
        b.fabric(sw, None, olt, None, 1);
    }
    for i in 0..switches.len() {
        for j in i + 1..switches.len() {
            b.fabric(switches[i], None, switches[j], None, 1);
        }
    }
    Ok(b.finish(ap_ids, olt, BuildParams::SwitchBaseline(*p)))
}

/// Every AP and the OLT hang off one shared medium of capacity `rate`.
pub fn build_shared_bus(n_aps: usize, rate_gbps: f64) -> Result<Topology> {
    check_rate(rate_gbps, 1)?;
    let mut b = Builder::new(1, rate_gbps);
    let ap_ids: Vec<usize> = (0..n_aps).map(|i| b.node(format!("ap{i}"), NodeKind::Ap, false)).collect();
    let olt = b.node("olt".into(), NodeKind::Olt, true);
    let bus = b.node("bus".into(), NodeKind::Coupler, false);
    b.nodes[bus].capacity_gbps = Some(rate_gbps);
    for &ap in &ap_ids {
        b.access(ap, bus);
    }
    b.access(olt, bus);
    Ok(b.finish(ap_ids, olt, BuildParams::SharedBus { n_aps, rate_gbps }))
}

/// Incident edge seen from one node.
#[derive(Debug, Clone, Copy)]
struct Incidence {
    edge: usize,
    port: usize,
    to: PortRef,
}

impl Topology {
    pub fn node(&self, id: usize) -> Result<&Node> {
        self.nodes.get(id).ok_or(PonError::UnknownNode(id))
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn ids_of(&self, kind: NodeKind) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.kind == kind).map(|n| n.id).collect()
    }

    pub fn by_name(&self, name: &str) -> Option<usize> {
        self.nodes.iter().find(|n| n.name == name).map(|n| n.id)
    }

    /// Structural checks for imported manifests.
    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(invalid(format!("node at position {i} has id {}", n.id)));
            }
        }
        let mut awgr_ports = BTreeSet::new();
        for e in &self.edges {
            for end in [e.a, e.b] {
                let node = self.node(end.node)?;
                if node.kind == NodeKind::Awgr && (end.port >= node.ports || !awgr_ports.insert((end.node, end.port))) {
                    return Err(invalid(format!("AWGR {} port {} misused", node.name, end.port)));
                }
            }
            if e.wavelengths.is_empty() || e.wavelengths.iter().any(|&w| w >= self.n_wavelengths) {
                return Err(invalid("edge wavelength set empty or out of range".into()));
            }
            if e.capacity_gbps.is_some_and(|c| c.is_nan() || c < 0.0) {
                return Err(invalid("negative edge capacity".into()));
            }
        }
        for &id in self.ap_ids.iter().chain([&self.olt_id]) {
            self.node(id)?;
        }
        Ok(())
    }

    fn incidence(&self) -> Vec<Vec<Incidence>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.a.node].push(Incidence { edge: i, port: e.a.port, to: e.b });
            if e.a.node != e.b.node {
                adj[e.b.node].push(Incidence { edge: i, port: e.b.port, to: e.a });
            }
        }
        adj
    }

    /// Next hops `(incidence, wavelength)` after arriving at `node` on
    /// `port` via `edge` with wavelength `w`.
    fn next_hops<'a>(&self, adj: &'a [Incidence], node: &Node, arrival: Option<(usize, usize, usize)>) -> Vec<(&'a Incidence, usize)> {
        let mut out = Vec::new();
        let all_wavelengths = |inc: &'a Incidence, out: &mut Vec<(&'a Incidence, usize)>| {
            for &w in &self.edges[inc.edge].wavelengths {
                out.push((inc, w));
            }
        };
        match arrival {
            None => adj.iter().for_each(|inc| all_wavelengths(inc, &mut out)),
            Some((edge, port, w)) => {
                if node.forwarding {
                    adj.iter().filter(|i| i.edge != edge).for_each(|inc| all_wavelengths(inc, &mut out));
                } else if node.kind == NodeKind::Awgr {
                    let n = node.ports;
                    let shift = w % n;
                    let exits = [(port + shift) % n, (port + n - shift) % n];
                    for inc in adj.iter().filter(|i| i.port != port && exits.contains(&i.port)) {
                        if self.edges[inc.edge].carries(w) {
                            out.push((inc, w));
                        }
                    }
                } else if node.kind.is_passive() {
                    for inc in adj.iter().filter(|i| i.edge != edge) {
                        if self.edges[inc.edge].carries(w) {
                            out.push((inc, w));
                        }
                    }
                }
            }
        }
        out
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        ids.iter().try_for_each(|&id| self.node(id).map(|_| ()))
    }

    /// Nodes a signal from `src` can reach while avoiding `failed`.
    pub fn reachable_from(&self, src: usize, failed: &[usize]) -> Result<Vec<bool>> {
        self.check_ids(&[src])?;
        self.check_ids(failed)?;
        let adj = self.incidence();
        let n_w = self.n_wavelengths;
        let mut dead = vec![false; self.nodes.len()];
        failed.iter().for_each(|&f| dead[f] = true);
        let mut reached = vec![false; self.nodes.len()];
        if dead[src] {
            return Ok(reached);
        }
        reached[src] = true;
        // State: arrived over edge e at its end `to` with wavelength w.
        let mut seen = vec![false; self.edges.len() * 2 * n_w];
        let mut queue = VecDeque::new();
        let mut push = |inc: &Incidence, w: usize, queue: &mut VecDeque<(usize, PortRef, usize)>, reached: &mut Vec<bool>| {
            if dead[inc.to.node] {
                return;
            }
            let side = usize::from(self.edges[inc.edge].b == inc.to && self.edges[inc.edge].a != inc.to);
            let key = (inc.edge * 2 + side) * n_w + w;
            if !seen[key] {
                seen[key] = true;
                reached[inc.to.node] = true;
                queue.push_back((inc.edge, inc.to, w));
            }
        };
        for (inc, w) in self.next_hops(&adj[src], &self.nodes[src], None) {
            push(inc, w, &mut queue, &mut reached);
        }
        while let Some((edge, at, w)) = queue.pop_front() {
            let node = &self.nodes[at.node];
            for (inc, w2) in self.next_hops(&adj[at.node], node, Some((edge, at.port, w))) {
                push(inc, w2, &mut queue, &mut reached);
            }
        }
        Ok(reached)
    }

    /// A wavelength-feasible path from `src` to `dst` avoids `failed`.
    pub fn reachable(&self, src: usize, dst: usize, failed: &[usize]) -> Result<bool> {
        self.check_ids(&[src, dst])?;
        if failed.contains(&src) || failed.contains(&dst) {
            return Ok(false);
        }
        if src == dst {
            return Ok(true);
        }
        Ok(self.reachable_from(src, failed)?[dst])
    }

    /// Intermediate node sets of every wavelength-feasible simple path.
    fn simple_paths(&self, src: usize, dst: usize, limit: usize) -> Result<BTreeSet<Vec<usize>>> {
        struct Walk<'t> {
            topo: &'t Topology,
            adj: Vec<Vec<Incidence>>,
            dst: usize,
            on_path: Vec<bool>,
            stack: Vec<usize>,
            found: BTreeSet<Vec<usize>>,
            visits: usize,
            limit: usize,
        }
        impl Walk<'_> {
            fn go(&mut self, node: usize, arrival: Option<(usize, usize, usize)>) -> Result<()> {
                self.visits += 1;
                if self.visits > self.limit {
                    return Err(PonError::PathLimit(self.limit));
                }
                let hops: Vec<(Incidence, usize)> =
                    self.topo.next_hops(&self.adj[node], &self.topo.nodes[node], arrival).into_iter().map(|(i, w)| (*i, w)).collect();
                for (inc, w) in hops {
                    let next = inc.to.node;
                    if next == self.dst {
                        let mut inner = self.stack.clone();
                        inner.sort_unstable();
                        self.found.insert(inner);
                    } else if !self.on_path[next] {
                        self.on_path[next] = true;
                        self.stack.push(next);
                        self.go(next, Some((inc.edge, inc.to.port, w)))?;
                        self.stack.pop();
                        self.on_path[next] = false;
                    }
                }
                Ok(())
            }
        }
        let mut walk = Walk {
            topo: self,
            adj: self.incidence(),
            dst,
            on_path: vec![false; self.nodes.len()],
            stack: Vec::new(),
            found: BTreeSet::new(),
            visits: 0,
            limit,
        };
        walk.on_path[src] = true;
        walk.go(src, None)?;
        Ok(walk.found)
    }

    /// Maximum number of internally node-disjoint, wavelength-feasible paths.
    pub fn disjoint_paths(&self, src: usize, dst: usize) -> Result<usize> {
        self.check_ids(&[src, dst])?;
        if src == dst {
            return Err(PonError::SameEndpoints);
        }
        let paths: Vec<Vec<usize>> = {
            let mut v: Vec<Vec<usize>> = self.simple_paths(src, dst, PATH_VISIT_LIMIT)?.into_iter().collect();
            v.sort_by_key(Vec::len);
            v
        };
        // Unit node capacities without wavelength rules bound the answer.
        let bound = self.unit_node_flow(src, dst);
        let mut used = vec![false; self.nodes.len()];
        let mut best = 0;
        pack(&paths, 0, 0, &mut used, bound, &mut best);
        Ok(best)
    }

    fn unit_node_flow(&self, src: usize, dst: usize) -> usize {
        let mut net = FlowNet::new(2 * self.nodes.len());
        for n in &self.nodes {
            let transit = if n.id == src || n.id == dst { f64::INFINITY } else { 1.0 };
            net.arc(2 * n.id, 2 * n.id + 1, transit);
        }
        for e in &self.edges {
            net.arc(2 * e.a.node + 1, 2 * e.b.node, 1.0);
            net.arc(2 * e.b.node + 1, 2 * e.a.node, 1.0);
        }
        let f = net.max_flow(2 * src + 1, 2 * dst);
        if f.is_finite() {
            f as usize
        } else {
            usize::MAX
        }
    }

    /// Minimum over balanced AP bipartitions of the max flow between the two
    /// halves.
    pub fn bisection_bandwidth(&self) -> Result<f64> {
        let n = self.ap_ids.len();
        if n == 0 || !n.is_multiple_of(2) {
            return Err(PonError::OddApCount(n));
        }
        let mut best = f64::INFINITY;
        // The first AP always sits on side A, so each cut is seen once.
        let mut side = vec![false; n];
        side[0] = true;
        let mut cut = |side: &[bool]| {
            let f = self.cut_flow(side);
            if f < best {
                best = f;
            }
        };
        choose(&mut side, 1, n / 2 - 1, &mut cut);
        Ok(best)
    }

    fn cut_flow(&self, side_a: &[bool]) -> f64 {
        let v = self.nodes.len();
        let (s, t) = (2 * v, 2 * v + 1);
        let mut net = FlowNet::new(2 * v + 2);
        for n in &self.nodes {
            let transit = if n.forwarding || n.kind.is_passive() || n.kind == NodeKind::Awgr {
                n.capacity_gbps.unwrap_or(f64::INFINITY)
            } else {
                0.0
            };
            net.arc(2 * n.id, 2 * n.id + 1, transit);
        }
        for e in &self.edges {
            let c = e.capacity_gbps.unwrap_or(f64::INFINITY);
            net.arc(2 * e.a.node + 1, 2 * e.b.node, c);
            net.arc(2 * e.b.node + 1, 2 * e.a.node, c);
        }
        for (i, &ap) in self.ap_ids.iter().enumerate() {
            if side_a[i] {
                net.arc(s, 2 * ap + 1, f64::INFINITY);
            } else {
                net.arc(2 * ap, t, f64::INFINITY);
            }
        }
        net.max_flow(s, t)
    }

    /// Single failures of every node of the requested kinds, in id order.
    pub fn failure_sweep(&self, kinds: &[NodeKind]) -> Result<ResilienceReport> {
        let mut failures = Vec::new();
        for node in self.nodes.iter().filter(|n| kinds.contains(&n.kind)) {
            failures.push(self.single_failure(node.id)?);
        }
        let n = failures.len().max(1) as f64;
        let ap_to_olt_survival_fraction = if failures.is_empty() { 1.0 } else { failures.iter().map(|f| f.ap_to_olt_survival).sum::<f64>() / n };
        let ap_pair_survival_fraction = if failures.is_empty() { 1.0 } else { failures.iter().map(|f| f.ap_pair_survival).sum::<f64>() / n };
        let max_disconnected = failures.iter().map(|f| f.disconnected_aps.len()).max().unwrap_or(0);
        Ok(ResilienceReport {
            kinds: kinds.to_vec(),
            failures,
            max_disconnected,
            ap_to_olt_survival_fraction,
            ap_pair_survival_fraction,
        })
    }

    fn single_failure(&self, failed: usize) -> Result<FailureOutcome> {
        let failed_set = [failed];
        let alive: Vec<usize> = self.ap_ids.iter().copied().filter(|&a| a != failed).collect();
        let from_olt = self.reachable_from(self.olt_id, &failed_set)?;
        let disconnected_aps: Vec<usize> = alive.iter().copied().filter(|&a| !from_olt[a] || failed == self.olt_id).collect();
        let ap_to_olt_survival = if alive.is_empty() { 1.0 } else { 1.0 - disconnected_aps.len() as f64 / alive.len() as f64 };

        let mut pairs = 0usize;
        let mut ok = 0usize;
        for (i, &a) in alive.iter().enumerate() {
            let reach = self.reachable_from(a, &failed_set)?;
            for &b in &alive[i + 1..] {
                pairs += 1;
                ok += usize::from(reach[b]);
            }
        }
        let adjacent = self.incidence()[failed].iter().map(|inc| inc.to.node).collect::<BTreeSet<_>>();
        let affected_aps = alive.iter().copied().filter(|a| adjacent.contains(a)).collect();
        Ok(FailureOutcome {
            failed,
            failed_name: self.nodes[failed].name.clone(),
            kind: self.nodes[failed].kind,
            affected_aps,
            disconnected_aps,
            ap_to_olt_survival,
            ap_pair_survival: if pairs == 0 { 1.0 } else { ok as f64 / pairs as f64 },
        })
    }
}

/// Upper limit on search steps when enumerating simple paths.
pub const PATH_VISIT_LIMIT: usize = 2_000_000;

fn pack(paths: &[Vec<usize>], from: usize, count: usize, used: &mut [bool], bound: usize, best: &mut usize) {
    if count > *best {
        *best = count;
    }
    if *best >= bound || count + (paths.len() - from) <= *best {
        return;
    }
    for i in from..paths.len() {
        if paths[i].iter().any(|&n| used[n]) {
            continue;
        }
        paths[i].iter().for_each(|&n| used[n] = true);
        pack(paths, i + 1, count + 1, used, bound, best);
        paths[i].iter().for_each(|&n| used[n] = false);
        if *best >= bound {
            return;
        }
    }
}

/// Calls `visit` for every way of marking `k` more entries of `side[from..]`.
fn choose(side: &mut [bool], from: usize, k: usize, visit: &mut impl FnMut(&[bool])) {
    if k == 0 {
        visit(side);
        return;
    }
    for i in from..=side.len() - k {
        side[i] = true;
        choose(side, i + 1, k - 1, visit);
        side[i] = false;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureOutcome {
    pub failed: usize,
    pub failed_name: String,
    pub kind: NodeKind,
    /// Surviving APs attached directly to the failed node.
    pub affected_aps: Vec<usize>,
    /// Surviving APs that lost every path to the OLT.
    pub disconnected_aps: Vec<usize>,
    pub ap_to_olt_survival: f64,
    pub ap_pair_survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceReport {
    pub kinds: Vec<NodeKind>,
    pub failures: Vec<FailureOutcome>,
    pub max_disconnected: usize,
    /// Mean over failures.
    pub ap_to_olt_survival_fraction: f64,
    /// Mean over failures.
    pub ap_pair_survival_fraction: f64,
}

/// Edmonds-Karp on a dense residual matrix; desk-scale graphs only.
struct FlowNet {
    n: usize,
    cap: Vec<f64>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet { n, cap: vec![0.0; n * n] }
    }

    fn arc(&mut self, u: usize, v: usize, c: f64) {
        self.cap[u * self.n + v] += c;
    }

    #[allow(clippy::needless_range_loop)]
    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        const EPS: f64 = 1e-12;
        let n = self.n;
        let mut total = 0.0;
        loop {
            let mut prev = vec![usize::MAX; n];
            prev[s] = s;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if prev[v] == usize::MAX && self.cap[u * n + v] > EPS {
                        prev[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if prev[t] == usize::MAX {
                return total;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let u = prev[v];
                push = push.min(self.cap[u * n + v]);
                v = u;
            }
            if push.is_infinite() {
                return f64::INFINITY;
            }
            let mut v = t;
            while v != s {
                let u = prev[v];
                self.cap[u * n + v] -= push;
                self.cap[v * n + u] += push;
                v = u;
            }
            total += push;
        }
    }
}
