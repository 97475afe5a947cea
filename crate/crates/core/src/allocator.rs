//! Exact assignment of users to `(branch, AP, wavelength)` links.
//!
//! Maximise `sum (gamma + K * S)` subject to
//!
//! * each user takes at most one link per AP,
//! * each `(AP, wavelength)` slot is used by at most one link,
//! * every assigned link reaches the SINR threshold `Z`,
//! * in single-AP mode, each user takes at most one link overall.
//!
//! Because SINRs share denominators, candidate links are not independent.
//! [`solve_exact`] is a depth-first branch and bound over slots in
//! `(AP, wavelength)` order. The bound for an assigned link uses the best
//! possible denominator given the undecided slots; the bound for undecided
//! slots is a max-weight matching over interference-free link values.
//! [`solve_brute_force`] enumerates every feasible `S` on tiny instances.
//!
//! Ties in the objective go to the lexicographically smallest `S` in
//! flattened `(u, f, a, w)` order.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkmetrics::{self, Link, LinkError, Occupancy, SinrParams};
use crate::tensor::{AssignmentTensor, Tensor4};

/// Largest tuple count [`solve_brute_force`] accepts.
pub const BRUTE_FORCE_MAX_TUPLES: usize = 20;

/// Relative tolerance for the solution consistency checks in [`validate`].
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("AP availability mask has {got} entries, instance has {expected} APs")]
    MaskLength { expected: usize, got: usize },
    #[error("brute force refuses {tuples} candidate tuples (limit {limit})")]
    TooLarge { tuples: usize, limit: usize },
}

pub type Result<T> = core::result::Result<T, AllocError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    /// A user may hold links to several APs.
    MultiAp,
    /// A user holds at most one link.
    SingleAp,
}

impl AssignmentMode {
    pub fn name(self) -> &'static str {
        match self {
            AssignmentMode::MultiAp => "multi_ap",
            AssignmentMode::SingleAp => "single_ap",
        }
    }
}

/// Channel slices for the users of one drop plus optimisation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    r: Tensor4,
    n: Tensor4,
    sigma: f64,
    params: SinrParams,
    ap_available: Vec<bool>,
    mode: AssignmentMode,
}

impl ProblemInstance {
    /// An unavailable AP cannot carry links but keeps lighting the room, so
    /// its `N` still counts as illumination noise.
    pub fn new(r: Tensor4, n: Tensor4, sigma: f64, params: SinrParams, ap_available: Vec<bool>, mode: AssignmentMode) -> Result<Self> {
        if r.dims() != n.dims() {
            return Err(LinkError::ShapeMismatch(r.dims(), n.dims()).into());
        }
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(LinkError::NonPositive { what: "sigma", value: sigma }.into());
        }
        let na = r.dims()[2];
        if ap_available.len() != na {
            return Err(AllocError::MaskLength { expected: na, got: ap_available.len() });
        }
        Ok(ProblemInstance { r, n, sigma, params, ap_available, mode })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.r.dims()
    }

    pub fn n_users(&self) -> usize {
        self.r.dims()[0]
    }

    pub fn r(&self) -> &Tensor4 {
        &self.r
    }

    pub fn n(&self) -> &Tensor4 {
        &self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn params(&self) -> SinrParams {
        self.params
    }

    pub fn ap_available(&self) -> &[bool] {
        &self.ap_available
    }

    pub fn mode(&self) -> AssignmentMode {
        self.mode
    }

    pub fn with_mode(&self, mode: AssignmentMode) -> Self {
        ProblemInstance { mode, ..self.clone() }
    }

    /// SINR of `link` under the most favourable assignment of every other
    /// slot: each co-wavelength AP contributes `min(R, N)`.
    pub fn interference_free_sinr(&self, link: Link) -> f64 {
        let Link { user: u, branch: f, ap: a, wavelength: w } = link;
        let mut denom = 0.0;
        for b in (0..self.dims()[2]).filter(|&b| b != a) {
            denom += self.r.get(u, f, b, w).min(self.n.get(u, f, b, w));
        }
        self.r.get(u, f, a, w) / (denom + self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Globally optimal with at least one link.
    Optimal,
    /// No link can meet the threshold; the empty assignment is optimal.
    InfeasibleEmpty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentSolution {
    pub s: AssignmentTensor,
    pub gamma: Tensor4,
    pub objective: f64,
    pub status: SolveStatus,
    /// Distinct APs serving each user.
    pub per_user_ap_count: Vec<usize>,
}

impl AssignmentSolution {
    pub fn links(&self) -> Vec<Link> {
        self.s.ones().map(|(u, f, a, w)| Link::new(u, f, a, w)).collect()
    }

    pub fn user_links(&self, user: usize) -> Vec<Link> {
        self.links().into_iter().filter(|l| l.user == user).collect()
    }
}

fn ap_counts(s: &AssignmentTensor) -> Vec<usize> {
    let [nu, _, na, _] = s.dims();
    let mut seen = vec![false; nu * na];
    for (u, _, a, _) in s.ones() {
        seen[u * na + a] = true;
    }
    (0..nu).map(|u| seen[u * na..(u + 1) * na].iter().filter(|x| **x).count()).collect()
}

/// Recomputes SINRs and the objective of `s` with the term-by-term evaluator.
fn finalize(inst: &ProblemInstance, s: AssignmentTensor) -> Result<AssignmentSolution> {
    let gamma = linkmetrics::sinr_tensor(&inst.r, &inst.n, &s, inst.sigma)?;
    let objective = linkmetrics::objective_value(&gamma, &s, inst.params.k)?;
    let status = if s.count_ones() == 0 { SolveStatus::InfeasibleEmpty } else { SolveStatus::Optimal };
    let per_user_ap_count = ap_counts(&s);
    Ok(AssignmentSolution { s, gamma, objective, status, per_user_ap_count })
}

/// Maximum-weight bipartite matching value; `weights[i][j] <= 0` never helps
/// and behaves like leaving `i` and `j` unmatched.
pub(crate) fn max_weight_matching(weights: &[Vec<f64>]) -> f64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return 0.0;
    }
    let w = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            weights[i][j].max(0.0)
        } else {
            0.0
        }
    };
    // Hungarian method (shortest augmenting paths with potentials) on the
    // square cost matrix -w, 1-based as is customary for this formulation.
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = -w(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=n).filter(|&j| p[j] != 0).map(|j| w(p[j] - 1, j - 1)).sum()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    user: usize,
    branch: usize,
    /// `K + interference-free SINR`.
    value: f64,
}

#[derive(Debug, Clone)]
struct Slot {
    ap: usize,
    wavelength: usize,
    candidates: Vec<Candidate>,
}

/// `a` is lexicographically smaller than `b`, both being sorted lists of the
/// flat indices of set bits.
fn lex_less(a: &[usize], b: &[usize]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            // The list with the earlier one has a 1 where the other has a 0.
            return x > y;
        }
    }
    a.len() < b.len()
}

struct Search<'a> {
    inst: &'a ProblemInstance,
    single: bool,
    slots: Vec<Slot>,
    /// Search position of each `(ap, wavelength)` slot, if it has candidates.
    slot_pos: Vec<Option<usize>>,
    /// Matching bound of APs whose slots all lie at or after a position.
    suffix_ap_bound: Vec<f64>,
    occ: Occupancy,
    user_ap: Vec<bool>,
    user_links: Vec<usize>,
    chosen: Vec<Link>,
    best_objective: f64,
    best: Vec<usize>,
    flat: AssignmentTensor,
}

impl<'a> Search<'a> {
    fn new(inst: &'a ProblemInstance) -> Self {
        let [nu, nf, na, nw] = inst.dims();
        let z = inst.params.z;
        let mut slots = Vec::new();
        let mut slot_pos = vec![None; na * nw];
        for a in (0..na).filter(|&a| inst.ap_available[a]) {
            for w in 0..nw {
                let mut candidates = Vec::new();
                for u in 0..nu {
                    for f in 0..nf {
                        if inst.r.get(u, f, a, w) <= 0.0 {
                            continue;
                        }
                        let g = inst.interference_free_sinr(Link::new(u, f, a, w));
                        if g >= z {
                            candidates.push(Candidate { user: u, branch: f, value: inst.params.k + g });
                        }
                    }
                }
                if candidates.is_empty() {
                    continue;
                }
                candidates.sort_by(|x, y| y.value.total_cmp(&x.value).then((x.user, x.branch).cmp(&(y.user, y.branch))));
                slot_pos[a * nw + w] = Some(slots.len());
                slots.push(Slot { ap: a, wavelength: w, candidates });
            }
        }

        let mut search = Search {
            inst,
            single: inst.mode == AssignmentMode::SingleAp,
            slots,
            slot_pos,
            suffix_ap_bound: Vec::new(),
            occ: Occupancy::empty(na, nw),
            user_ap: vec![false; nu * na],
            user_links: vec![0; nu],
            chosen: Vec::new(),
            best_objective: 0.0,
            best: Vec::new(),
            flat: AssignmentTensor::zeros(inst.dims()),
        };
        search.suffix_ap_bound = search.ap_bounds_by_position();
        search
    }

    /// For every search position `k`, the sum of per-AP matching bounds over
    /// APs whose first slot is at or after `k`.
    fn ap_bounds_by_position(&self) -> Vec<f64> {
        let n = self.slots.len();
        let mut out = vec![0.0; n + 1];
        let mut k = n;
        while k > 0 {
            let ap = self.slots[k - 1].ap;
            let mut start = k - 1;
            while start > 0 && self.slots[start - 1].ap == ap {
                start -= 1;
            }
            let bound = self.ap_matching(start, k, |_| true);
            for i in start..k {
                out[i] = out[k];
            }
            out[start] = out[k] + bound;
            k = start;
        }
        out
    }

    /// Matching bound over slots `from..to` (all on one AP) for users passing
    /// `allowed`.
    fn ap_matching(&self, from: usize, to: usize, allowed: impl Fn(usize) -> bool) -> f64 {
        let nu = self.inst.n_users();
        let mut weights = vec![vec![0.0; to - from]; nu];
        for (j, slot) in self.slots[from..to].iter().enumerate() {
            for c in slot.candidates.iter().filter(|c| allowed(c.user)) {
                let w = &mut weights[c.user][j];
                *w = f64::max(*w, c.value);
            }
        }
        max_weight_matching(&weights)
    }

    fn allowed(&self, user: usize, ap: usize) -> bool {
        let na = self.inst.dims()[2];
        !self.user_ap[user * na + ap] && (!self.single || self.user_links[user] == 0)
    }

    /// Best SINR `link` can still reach once slots `k..` are decided.
    fn link_bound(&self, link: Link, k: usize) -> f64 {
        let Link { user: u, branch: f, ap: a, wavelength: w } = link;
        let (r, n) = (&self.inst.r, &self.inst.n);
        let mut denom = 0.0;
        for b in (0..self.inst.dims()[2]).filter(|&b| b != a) {
            let undecided = matches!(self.slot_pos[b * self.inst.dims()[3] + w], Some(p) if p >= k);
            denom += if undecided {
                r.get(u, f, b, w).min(n.get(u, f, b, w))
            } else {
                match self.occ.holder(b, w) {
                    Some(m) if m != u => r.get(u, f, b, w),
                    _ => n.get(u, f, b, w),
                }
            };
        }
        r.get(u, f, a, w) / (denom + self.inst.sigma)
    }

    fn future_bound(&self, k: usize) -> f64 {
        if self.single {
            let nu = self.inst.n_users();
            let cols = self.slots.len() - k;
            let mut weights = vec![vec![0.0; cols]; nu];
            for (j, slot) in self.slots[k..].iter().enumerate() {
                for c in slot.candidates.iter().filter(|c| self.user_links[c.user] == 0) {
                    let w = &mut weights[c.user][j];
                    *w = f64::max(*w, c.value);
                }
            }
            return max_weight_matching(&weights);
        }
        // The AP of slot k may be partly decided; later APs are untouched.
        let ap = self.slots[k].ap;
        let mut end = k;
        while end < self.slots.len() && self.slots[end].ap == ap {
            end += 1;
        }
        let current = self.ap_matching(k, end, |u| self.allowed(u, ap));
        current + self.suffix_ap_bound[end]
    }

    fn tolerance(&self) -> f64 {
        1e-9 * self.best_objective.abs().max(1.0)
    }

    fn dfs(&mut self, k: usize) {
        let z = self.inst.params.z;
        let kw = self.inst.params.k;
        let mut bound = 0.0;
        for &link in &self.chosen {
            let g = self.link_bound(link, k);
            if g < z {
                return;
            }
            bound += g + kw;
        }
        if k == self.slots.len() {
            self.leaf();
            return;
        }
        bound += self.future_bound(k);
        if bound < self.best_objective - self.tolerance() {
            return;
        }

        let (ap, w) = (self.slots[k].ap, self.slots[k].wavelength);
        let na = self.inst.dims()[2];
        for i in 0..self.slots[k].candidates.len() {
            let c = self.slots[k].candidates[i];
            if !self.allowed(c.user, ap) {
                continue;
            }
            let link = Link::new(c.user, c.branch, ap, w);
            self.occ.set(ap, w, Some(c.user));
            self.user_ap[c.user * na + ap] = true;
            self.user_links[c.user] += 1;
            self.chosen.push(link);

            self.dfs(k + 1);

            self.chosen.pop();
            self.user_links[c.user] -= 1;
            self.user_ap[c.user * na + ap] = false;
            self.occ.set(ap, w, None);
        }
        self.dfs(k + 1);
    }

    fn leaf(&mut self) {
        let (r, n, sigma) = (&self.inst.r, &self.inst.n, self.inst.sigma);
        let mut indexed: Vec<(usize, Link)> = self
            .chosen
            .iter()
            .map(|l| (self.flat.offset(l.user, l.branch, l.ap, l.wavelength), *l))
            .collect();
        indexed.sort_unstable_by_key(|(o, _)| *o);
        let mut objective = 0.0;
        for (_, link) in &indexed {
            let g = self.occ.link_sinr(r, n, sigma, *link);
            if g < self.inst.params.z {
                return;
            }
            objective += g + self.inst.params.k;
        }
        let offsets: Vec<usize> = indexed.iter().map(|(o, _)| *o).collect();
        let better = match objective.total_cmp(&self.best_objective) {
            Ordering::Greater => true,
            Ordering::Equal => lex_less(&offsets, &self.best),
            Ordering::Less => false,
        };
        if better {
            self.best_objective = objective;
            self.best = offsets;
        }
    }
}

/// Globally optimal assignment for `inst`.
pub fn solve_exact(inst: &ProblemInstance) -> Result<AssignmentSolution> {
    let mut search = Search::new(inst);
    if !search.slots.is_empty() {
        search.dfs(0);
    }
    let mut s = AssignmentTensor::zeros(inst.dims());
    for &o in &search.best {
        let (u, f, a, w) = s.unravel(o);
        s.set(u, f, a, w, true);
    }
    finalize(inst, s)
}

/// Exhaustive search over every `S` satisfying the slot, per-AP, mode and
/// availability constraints. Refuses instances with more than
/// [`BRUTE_FORCE_MAX_TUPLES`] tuples.
pub fn solve_brute_force(inst: &ProblemInstance) -> Result<AssignmentSolution> {
    let dims = inst.dims();
    let tuples: usize = dims.iter().product();
    if tuples > BRUTE_FORCE_MAX_TUPLES {
        return Err(AllocError::TooLarge { tuples, limit: BRUTE_FORCE_MAX_TUPLES });
    }
    let [nu, _, na, nw] = dims;
    let mut s = AssignmentTensor::zeros(dims);
    let mut best = s.clone();
    let mut best_objective = 0.0;
    let mut user_ap = vec![0usize; nu * na];
    let mut slot = vec![0usize; na * nw];
    let mut per_user = vec![0usize; nu];

    'masks: for mask in 1u32..(1u32 << tuples) {
        user_ap.iter_mut().for_each(|c| *c = 0);
        slot.iter_mut().for_each(|c| *c = 0);
        per_user.iter_mut().for_each(|c| *c = 0);
        for o in 0..tuples {
            let on = mask & (1 << o) != 0;
            let (u, f, a, w) = s.unravel(o);
            s.set(u, f, a, w, on);
            if on {
                if !inst.ap_available[a] {
                    continue 'masks;
                }
                user_ap[u * na + a] += 1;
                slot[a * nw + w] += 1;
                per_user[u] += 1;
            }
        }
        if user_ap.iter().any(|&c| c > 1) || slot.iter().any(|&c| c > 1) {
            continue;
        }
        if inst.mode == AssignmentMode::SingleAp && per_user.iter().any(|&c| c > 1) {
            continue;
        }
        let gamma = linkmetrics::sinr_tensor(&inst.r, &inst.n, &s, inst.sigma)?;
        for (u, f, a, w) in s.ones() {
            if gamma.get(u, f, a, w) < inst.params.z {
                continue 'masks;
            }
        }
        let objective = linkmetrics::objective_value(&gamma, &s, inst.params.k)?;
        let better = match objective.total_cmp(&best_objective) {
            Ordering::Greater => true,
            Ordering::Equal => s.lex_cmp(&best) == Ordering::Less,
            Ordering::Less => false,
        };
        if better {
            best_objective = objective;
            best = s.clone();
        }
    }
    finalize(inst, best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    /// Solution tensors match the instance shape.
    Shape,
    /// At most one link per (user, AP).
    OneLinkPerUserAp,
    /// At most one link per (AP, wavelength).
    OneLinkPerSlot,
    /// Every assigned link reaches the SINR threshold.
    SinrThreshold,
    /// Single-AP mode: at most one link per user.
    SingleAp,
    /// No link on an unavailable AP.
    ApAvailability,
    /// Stored SINRs match a recomputation.
    GammaConsistency,
    /// Stored objective matches a recomputation.
    ObjectiveConsistency,
    /// Stored per-user AP counts match `S`.
    ApCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub id: ConstraintId,
    pub passed: bool,
    /// Number of offending entries.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConstraintCheck>,
    pub max_gamma_rel_delta: f64,
    pub objective_rel_delta: f64,
    pub passed: bool,
}

impl ValidationReport {
    pub fn failed(&self) -> impl Iterator<Item = ConstraintId> + '_ {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id)
    }

    pub fn check(&self, id: ConstraintId) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn rel_delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Re-checks every constraint of `sol` against `inst`.
pub fn validate(inst: &ProblemInstance, sol: &AssignmentSolution) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |id, violations: usize| checks.push(ConstraintCheck { id, passed: violations == 0, violations });
    let dims = inst.dims();
    if sol.s.dims() != dims || sol.gamma.dims() != dims || sol.per_user_ap_count.len() != dims[0] {
        push(ConstraintId::Shape, 1);
        return ValidationReport { checks, max_gamma_rel_delta: f64::INFINITY, objective_rel_delta: f64::INFINITY, passed: false };
    }
    push(ConstraintId::Shape, 0);

    let [nu, _, na, nw] = dims;
    let s = &sol.s;
    let mut user_ap = vec![0usize; nu * na];
    let mut slot = vec![0usize; na * nw];
    let mut per_user = vec![0usize; nu];
    let mut masked = 0;
    for (u, _, a, w) in s.ones() {
        user_ap[u * na + a] += 1;
        slot[a * nw + w] += 1;
        per_user[u] += 1;
        if !inst.ap_available[a] {
            masked += 1;
        }
    }
    push(ConstraintId::OneLinkPerUserAp, user_ap.iter().filter(|&&c| c > 1).count());
    push(ConstraintId::OneLinkPerSlot, slot.iter().filter(|&&c| c > 1).count());
    if inst.mode == AssignmentMode::SingleAp {
        push(ConstraintId::SingleAp, per_user.iter().filter(|&&c| c > 1).count());
    }
    push(ConstraintId::ApAvailability, masked);

    let (mut gamma_delta, mut objective_delta) = (f64::INFINITY, f64::INFINITY);
    match linkmetrics::sinr_tensor(&inst.r, &inst.n, s, inst.sigma) {
        Ok(gamma) => {
            let below = s.ones().filter(|&(u, f, a, w)| gamma.get(u, f, a, w) < inst.params.z).count();
            push(ConstraintId::SinrThreshold, below);
            gamma_delta = gamma
                .as_slice()
                .iter()
                .zip(sol.gamma.as_slice())
                .map(|(&x, &y)| rel_delta(x, y))
                .fold(0.0, f64::max);
            push(ConstraintId::GammaConsistency, usize::from(gamma_delta.is_nan() || gamma_delta >= CONSISTENCY_TOLERANCE));
            if let Ok(obj) = linkmetrics::objective_value(&gamma, s, inst.params.k) {
                objective_delta = rel_delta(obj, sol.objective);
            }
            push(ConstraintId::ObjectiveConsistency, usize::from(objective_delta.is_nan() || objective_delta >= CONSISTENCY_TOLERANCE));
        }
        Err(_) => {
            push(ConstraintId::SinrThreshold, 1);
            push(ConstraintId::GammaConsistency, 1);
            push(ConstraintId::ObjectiveConsistency, 1);
        }
    }
    let counts = ap_counts(s);
    push(ConstraintId::ApCount, counts.iter().zip(&sol.per_user_ap_count).filter(|(a, b)| a != b).count());

    let passed = checks.iter().all(|c| c.passed);
    ValidationReport { checks, max_gamma_rel_delta: gamma_delta, objective_rel_delta: objective_delta, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkmetrics::receiver_noise_variance;

    fn sigma() -> f64 {
        receiver_noise_variance(4.47e-12, 1.75e9).unwrap()
    }

    fn single_link(r: f64) -> ProblemInstance {
        let mut rt = Tensor4::zeros([1, 1, 1, 1]);
        rt.set(0, 0, 0, 0, r);
        ProblemInstance::new(rt.clone(), rt, sigma(), SinrParams::reference(), vec![true], AssignmentMode::MultiAp).unwrap()
    }

    #[test]
    fn single_candidate_above_threshold() {
        let sol = solve_exact(&single_link(1e-12)).unwrap();
        assert!(sol.s.get(0, 0, 0, 0));
        assert!((sol.gamma.get(0, 0, 0, 0) - 28.60).abs() < 5e-3);
        assert!((sol.objective - 1028.60).abs() < 5e-3);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.per_user_ap_count, vec![1]);
    }

    #[test]
    fn single_candidate_below_threshold() {
        let sol = solve_exact(&single_link(5e-13)).unwrap();
        assert_eq!(sol.s.count_ones(), 0);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.status, SolveStatus::InfeasibleEmpty);
    }

    #[test]
    fn all_zero_channel() {
        let dims = [2, 2, 2, 2];
        let inst = ProblemInstance::new(Tensor4::zeros(dims), Tensor4::zeros(dims), sigma(), SinrParams::reference(), vec![true; 2], AssignmentMode::MultiAp).unwrap();
        let exact = solve_exact(&inst).unwrap();
        assert_eq!(exact.s.count_ones(), 0);
        assert_eq!(exact, solve_brute_force(&inst).unwrap());
    }

    #[test]
    fn empty_instance() {
        let dims = [0, 2, 2, 2];
        let inst = ProblemInstance::new(Tensor4::zeros(dims), Tensor4::zeros(dims), sigma(), SinrParams::reference(), vec![true; 2], AssignmentMode::MultiAp).unwrap();
        assert_eq!(solve_brute_force(&inst).unwrap().objective, 0.0);
        assert_eq!(solve_exact(&inst).unwrap().objective, 0.0);
    }

    #[test]
    fn one_user_two_aps_disjoint_wavelengths() {
        // AP 0 only on wavelength 0, AP 1 only on wavelength 1: no interference.
        let dims = [1, 1, 2, 2];
        let mut r = Tensor4::zeros(dims);
        r.set(0, 0, 0, 0, 1e-12);
        r.set(0, 0, 1, 1, 2e-12);
        let inst = ProblemInstance::new(r.clone(), r, sigma(), SinrParams::reference(), vec![true; 2], AssignmentMode::MultiAp).unwrap();
        let sol = solve_brute_force(&inst).unwrap();
        assert_eq!(sol.s.count_ones(), 2);
        let expected = 2000.0 + 1e-12 / sigma() + 2e-12 / sigma();
        assert!((sol.objective - expected).abs() < 1e-9 * expected);
        assert_eq!(sol, solve_exact(&inst).unwrap());
        assert_eq!(sol.per_user_ap_count, vec![2]);

        let single = solve_exact(&inst.with_mode(AssignmentMode::SingleAp)).unwrap();
        assert_eq!(single.s.count_ones(), 1);
        assert!(single.s.get(0, 0, 1, 1));
    }

    #[test]
    fn brute_force_guard() {
        let dims = [3, 2, 2, 2];
        let inst = ProblemInstance::new(Tensor4::zeros(dims), Tensor4::zeros(dims), sigma(), SinrParams::reference(), vec![true; 2], AssignmentMode::MultiAp).unwrap();
        assert_eq!(solve_brute_force(&inst), Err(AllocError::TooLarge { tuples: 24, limit: 20 }).map(|_: ()| unreachable!()));
    }

    #[test]
    fn masked_ap_is_never_used() {
        let dims = [1, 1, 2, 1];
        let mut r = Tensor4::zeros(dims);
        r.set(0, 0, 0, 0, 4e-12);
        r.set(0, 0, 1, 0, 1e-12);
        let mut n = Tensor4::zeros(dims);
        n.set(0, 0, 0, 0, 5e-15);
        let inst = ProblemInstance::new(r, n, sigma(), SinrParams::reference(), vec![false, true], AssignmentMode::MultiAp).unwrap();
        let sol = solve_exact(&inst).unwrap();
        assert!(sol.s.get(0, 0, 1, 0) && !sol.s.get(0, 0, 0, 0));
        // The failed AP still lights the room.
        let expected = 1e-12 / (5e-15 + sigma());
        assert!((sol.gamma.get(0, 0, 1, 0) - expected).abs() < 1e-12);
        assert!(validate(&inst, &sol).passed);
    }

    #[test]
    fn validate_flags_slot_reuse() {
        let dims = [2, 1, 1, 1];
        let mut r = Tensor4::zeros(dims);
        r.set(0, 0, 0, 0, 1e-12);
        r.set(1, 0, 0, 0, 1e-12);
        let inst = ProblemInstance::new(r.clone(), r, sigma(), SinrParams::reference(), vec![true], AssignmentMode::MultiAp).unwrap();
        let good = solve_exact(&inst).unwrap();
        assert!(validate(&inst, &good).passed);

        let mut bad = good.clone();
        bad.s.set(0, 0, 0, 0, true);
        bad.s.set(1, 0, 0, 0, true);
        let report = validate(&inst, &bad);
        assert!(!report.passed);
        assert!(report.failed().any(|id| id == ConstraintId::OneLinkPerSlot));
    }

    #[test]
    fn validate_flags_low_sinr() {
        // gamma = 20 < Z.
        let inst = single_link(20.0 * sigma());
        let mut s = AssignmentTensor::zeros([1, 1, 1, 1]);
        s.set(0, 0, 0, 0, true);
        let mut gamma = Tensor4::zeros([1, 1, 1, 1]);
        gamma.set(0, 0, 0, 0, 20.0);
        let sol = AssignmentSolution { s, gamma, objective: 1020.0, status: SolveStatus::Optimal, per_user_ap_count: vec![1] };
        let report = validate(&inst, &sol);
        assert!(!report.passed);
        assert_eq!(report.failed().collect::<Vec<_>>(), vec![ConstraintId::SinrThreshold]);
    }

    #[test]
    fn matching_value() {
        let w = vec![vec![3.0, 2.0, 0.0], vec![3.0, 0.0, 0.0]];
        assert_eq!(max_weight_matching(&w), 5.0);
        assert_eq!(max_weight_matching(&[]), 0.0);
        let w = vec![vec![1.0], vec![4.0], vec![2.0]];
        assert_eq!(max_weight_matching(&w), 4.0);
    }

    #[test]
    fn lex_helper() {
        assert!(lex_less(&[3], &[1]));
        assert!(lex_less(&[], &[0]));
        assert!(lex_less(&[1, 5], &[1, 4]));
        assert!(!lex_less(&[1, 4], &[1, 4]));
        assert!(lex_less(&[1, 4], &[1, 4, 6]));
    }
}
