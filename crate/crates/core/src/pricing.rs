//! Column generation subproblem: an elementary shortest path with
//! resource constraints, solved by forward labeling.
//!
//! A label is a partial trip from the origin depot together with its least
//! schedule. Because later ride-time and route-duration limits can still
//! push earlier service times, each label records, for every node that a
//! future constraint may push (the origin and the pickups of on-board
//! requests), how far the push travels to the current node (`delta`) and
//! how far it can go before some window breaks (`latest`). These give an
//! exact dominance test; see [`dominates`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::reqset::ReqSet;
use crate::robustness::LoadSums;
use crate::schedule::{check_trip, delays_of, travel_of, Reject, TimeGraph, TIME_EPS};

/// Columns with reduced cost below `-RC_TOL` are returned.
pub const RC_TOL: f64 = 1e-6;
const COST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    #[default]
    Standard,
    Probabilistic,
}

impl Dominance {
    pub fn as_str(self) -> &'static str {
        match self {
            Dominance::Standard => "standard",
            Dominance::Probabilistic => "probabilistic",
        }
    }
}

impl std::str::FromStr for Dominance {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "sdr" => Ok(Dominance::Standard),
            "probabilistic" | "pdr" => Ok(Dominance::Probabilistic),
            other => Err(crate::Error::Config(format!("unknown dominance rule '{other}'"))),
        }
    }
}

/// A feasible depot-to-depot trip, i.e. one column of the master problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub sequence: Vec<usize>,
    /// Travel plus delay penalty under the least schedule.
    pub cost: f64,
    pub covered: ReqSet,
    /// Checked against the chance constraint (robust modes).
    pub robust: bool,
    pub max_gamma: f64,
    pub times: Vec<f64>,
    pub delays: Vec<f64>,
}

impl Trip {
    /// Validate a sequence and build the trip with its least schedule.
    pub fn from_sequence(inst: &Instance, seq: &[usize]) -> Result<Trip, Reject> {
        let c = check_trip(inst, seq)?;
        Ok(Trip {
            sequence: seq.to_vec(),
            cost: c.schedule.cost(),
            covered: c.covered,
            robust: inst.robust(),
            max_gamma: c.max_gamma,
            times: c.schedule.times,
            delays: c.schedule.delays,
        })
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sequence.windows(2).map(|p| (p[0], p[1]))
    }
}

/// Dual information as seen by the subproblem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PricingDuals {
    /// `p̄_i` per request.
    pub request: Vec<f64>,
    /// `q̄` of the fleet row.
    pub vehicle: f64,
    /// Row-major `(2n+2)²` adjustments added to arc costs; empty when none.
    pub arc: Vec<f64>,
    /// Row-major arc bans from branching; empty when none.
    pub forbidden: Vec<bool>,
}

impl PricingDuals {
    pub fn zero(inst: &Instance) -> Self {
        PricingDuals { request: vec![0.0; inst.requests], ..Default::default() }
    }

    fn arc_adj(&self, m: usize, i: usize, j: usize) -> f64 {
        if self.arc.is_empty() {
            0.0
        } else {
            self.arc[i * m + j]
        }
    }

    fn banned(&self, m: usize, i: usize, j: usize) -> bool {
        !self.forbidden.is_empty() && self.forbidden[i * m + j]
    }

    fn has_arc_terms(&self) -> bool {
        self.arc.iter().any(|&a| a != 0.0)
    }

    /// Reduced cost of a trip under these duals.
    pub fn reduced_cost(&self, inst: &Instance, trip: &Trip) -> f64 {
        let m = inst.nodes.len();
        let arcs: f64 = trip.arcs().map(|(i, j)| self.arc_adj(m, i, j)).sum();
        trip.cost + arcs - trip.covered.iter().map(|r| self.request[r]).sum::<f64>() - self.vehicle
    }
}

/// A node that a future constraint may push later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    /// `None` for the origin depot.
    pub request: Option<usize>,
    pub pos: usize,
    /// Longest constraint path from the source to the current node.
    pub delta: f64,
    /// Largest service time the source can be pushed to.
    pub latest: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub node: usize,
    /// Cost so far plus dual terms.
    pub reduced_cost: f64,
    /// Travel plus delay penalty of the least schedule.
    pub cost: f64,
    pub earliest: f64,
    /// Latest service start here that still lets every on-board passenger
    /// reach its drop-off in time.
    pub latest_start: f64,
    /// Requests picked up and dropped off.
    pub served: ReqSet,
    /// Requests on board.
    pub open: ReqSet,
    /// Visited requests plus those whose pickup can no longer be reached.
    pub blocked: ReqSet,
    pub open_pickup_time: Vec<(usize, f64)>,
    pub open_deadline: Vec<(usize, f64)>,
    pub gamma: f64,
    pub max_gamma: f64,
    pub accumulated_delay_cost: f64,
    /// Extra penalty if every source is pushed to its latest time.
    pub push_penalty: f64,
    pub sources: Vec<Source>,
    pub path: Vec<usize>,
    pub predecessor: Option<usize>,
}

impl Label {
    pub fn visited(&self) -> ReqSet {
        self.served.union(self.open)
    }

    fn source(&self, request: Option<usize>) -> Option<&Source> {
        self.sources.iter().find(|s| s.request == request)
    }
}

/// Cheapest reduced-cost arc into every node: travel plus arc duals, minus
/// the prize at pickups, over the predecessors a trip can actually use.
fn cheapest_entry(inst: &Instance, duals: &PricingDuals) -> Vec<f64> {
    let m = inst.nodes.len();
    let n = inst.requests;
    let o = inst.origin();
    let dest = inst.destination();
    let mut out = vec![0.0; m];
    for j in 0..m {
        if j == o {
            continue;
        }
        let mut best = f64::INFINITY;
        for k in 0..m {
            let ok = if j == dest {
                inst.is_dropoff(k)
            } else if inst.is_pickup(j) {
                k != j && k != dest && k != j + n
            } else {
                k != j && k != dest && k != o
            };
            if ok && !duals.banned(m, k, j) {
                best = best.min(inst.travel_cost[k][j] + duals.arc_adj(m, k, j));
            }
        }
        if inst.is_pickup(j) {
            best -= duals.request[j - 1];
        }
        out[j] = best;
    }
    out
}

/// Lower bound on the reduced cost still to come after `label`: the open
/// passengers must be dropped and the depot reached, and only requests
/// outside `blocked` can still earn their prize. Delay penalties are
/// nonnegative and left out.
fn completion_bound(inst: &Instance, entry: &[f64], label: &Label) -> f64 {
    let mut lb = entry[inst.destination()];
    for r in label.open.iter() {
        lb += entry[inst.dropoff(r)];
    }
    for r in 0..inst.requests {
        if !label.blocked.contains(r) {
            lb += (entry[inst.pickup(r)] + entry[inst.dropoff(r)]).min(0.0);
        }
    }
    lb
}

/// Travel times and costs obey the triangle inequality, so dropping a
/// request from a trip never makes the rest later or dearer.
fn metric(inst: &Instance) -> bool {
    let m = inst.nodes.len();
    let (t, c) = (&inst.travel_time, &inst.travel_cost);
    (0..m).all(|i| {
        (0..m).all(|j| (0..m).all(|k| t[i][k] <= t[i][j] + t[j][k] + 1e-9 && c[i][k] <= c[i][j] + c[j][k] + 1e-9))
    })
}

/// Block requests no completion of `label` can profit from: the prize does
/// not cover the lateness their own two nodes would already incur. A trip
/// with such a request does no better than the same trip without it.
fn block_unprofitable(inst: &Instance, duals: &PricingDuals, label: &mut Label) {
    let i = label.node;
    let depart = label.earliest + inst.nodes[i].service_duration;
    for r in 0..inst.requests {
        if label.blocked.contains(r) {
            continue;
        }
        let (p, d) = (inst.pickup(r), inst.dropoff(r));
        let (np, nd) = (&inst.nodes[p], &inst.nodes[d]);
        let at_p = (depart + inst.travel_time[i][p]).max(np.earliest);
        let at_d = (at_p + np.service_duration + inst.travel_time[p][d]).max(nd.earliest);
        let late = |at: f64, flexible: bool, latest: f64| if flexible { (at - latest).max(0.0) } else { 0.0 };
        let penalty = inst.delay_rate * (late(at_p, np.flexible, np.latest) + late(at_d, nd.flexible, nd.latest));
        if at_d > inst.upper(d) + TIME_EPS || duals.request[r] <= penalty {
            label.blocked.insert(r);
        }
    }
}

/// Label at the origin depot.
pub fn root_label(inst: &Instance, duals: &PricingDuals) -> Label {
    let o = inst.origin();
    let e = inst.nodes[o].earliest;
    Label {
        node: o,
        reduced_cost: -duals.vehicle,
        cost: 0.0,
        earliest: e,
        latest_start: inst.upper(o),
        served: ReqSet::EMPTY,
        open: ReqSet::EMPTY,
        blocked: ReqSet::EMPTY,
        open_pickup_time: Vec::new(),
        open_deadline: Vec::new(),
        gamma: 0.0,
        max_gamma: 0.0,
        accumulated_delay_cost: 0.0,
        push_penalty: 0.0,
        sources: vec![Source { request: None, pos: 0, delta: 0.0, latest: inst.upper(o) }],
        path: vec![o],
        predecessor: None,
    }
}

fn onboard_sums(inst: &Instance, open: ReqSet) -> LoadSums {
    let loads: Vec<_> = open.iter().map(|r| inst.load(r)).collect();
    LoadSums::of(loads.iter())
}

/// Extend `label` to `next`. Completing at the destination depot closes
/// the route (duration limit applied) and the returned label carries the
/// exact trip cost.
pub fn extend(inst: &Instance, label: &Label, next: usize, duals: &PricingDuals) -> Result<Label, Reject> {
    let n = inst.requests;
    let m = inst.nodes.len();
    let cur = label.node;
    let dest = inst.destination();
    if next == cur || next == inst.origin() || duals.banned(m, cur, next) {
        return Err(Reject::Elementarity);
    }
    let mut open = label.open;
    let mut served = label.served;
    let mut pickup_dual = 0.0;
    let is_dest = next == dest;
    if is_dest {
        if !open.is_empty() || served.is_empty() {
            return Err(Reject::Elementarity);
        }
    } else {
        let r = (next - 1) % n;
        if inst.is_pickup(next) {
            if label.visited().contains(r) {
                return Err(Reject::Elementarity);
            }
            open.insert(r);
            pickup_dual = duals.request[r];
        } else {
            if !open.contains(r) {
                return Err(Reject::Elementarity);
            }
            open.remove(r);
            served.insert(r);
        }
    }

    let arrive = label.earliest + inst.nodes[cur].service_duration + inst.travel_time[cur][next];
    let ns = &inst.nodes[next];
    if arrive.max(ns.earliest) > inst.upper(next) + TIME_EPS {
        return Err(if is_dest { Reject::Horizon } else { Reject::Window });
    }

    let mut gamma = label.gamma;
    if open != label.open {
        let sums = onboard_sums(inst, open);
        if inst.is_pickup(next) && !sums.feasible(inst.capacity, &inst.robust_params()) {
            return Err(Reject::CapacityRisk);
        }
        gamma = sums.gamma(inst.capacity);
    }

    let mut path = Vec::with_capacity(label.path.len() + 1);
    path.extend_from_slice(&label.path);
    path.push(next);
    let g = TimeGraph::new(inst, &path, is_dest);
    let times = g.least()?;
    let last = path.len() - 1;
    let earliest = times[last];

    let travel = travel_of(inst, &path);
    let delays = delays_of(inst, &path, &times);
    let base_penalty = inst.delay_rate * delays.iter().sum::<f64>();
    let cost = travel + base_penalty;
    let arc_terms = label.reduced_cost - label.cost + duals.arc_adj(m, cur, next);
    let reduced_cost = cost + arc_terms - pickup_dual;

    let mut out = Label {
        node: next,
        reduced_cost,
        cost,
        earliest,
        latest_start: inst.upper(next),
        served,
        open,
        blocked: served.union(open),
        open_pickup_time: Vec::new(),
        open_deadline: Vec::new(),
        gamma,
        max_gamma: label.max_gamma.max(gamma),
        accumulated_delay_cost: base_penalty,
        push_penalty: 0.0,
        sources: Vec::new(),
        path,
        predecessor: None,
    };
    if is_dest {
        return Ok(out);
    }

    // sources that future constraints may push: origin and open pickups
    let mut src: Vec<(Option<usize>, usize)> = vec![(None, 0)];
    for (k, &v) in out.path.iter().enumerate() {
        if inst.is_pickup(v) && open.contains(v - 1) {
            src.push((Some(v - 1), k));
        }
    }
    let any_flexible = out.path.iter().any(|&v| inst.nodes[v].flexible);
    let mut pushed = if any_flexible { times.clone() } else { Vec::new() };
    for &(request, pos) in &src {
        let d = g.longest_from(pos);
        let mut latest = f64::INFINITY;
        for k in 0..d.len() {
            if d[k] > f64::NEG_INFINITY {
                latest = latest.min(g.upper[k] - d[k]);
            }
        }
        if any_flexible {
            for k in 0..d.len() {
                if d[k] > f64::NEG_INFINITY {
                    pushed[k] = pushed[k].max(latest + d[k]);
                }
            }
        }
        out.sources.push(Source { request, pos, delta: d[last], latest });
    }
    if any_flexible {
        let worst = inst.delay_rate * delays_of(inst, &out.path, &pushed).iter().sum::<f64>();
        out.push_penalty = (worst - base_penalty).max(0.0);
    }

    // Every completion still has to drop the open requests and return.
    let sc = ns.service_duration;
    let tail = |r: usize| {
        let d = inst.dropoff(r);
        inst.travel_time[next][d] + inst.nodes[d].service_duration + inst.travel_time[d][dest]
    };
    let mut to_end = inst.travel_time[next][dest];
    for r in open.iter() {
        let d = inst.dropoff(r);
        if earliest + sc + inst.travel_time[next][d] > inst.upper(d) + TIME_EPS {
            return Err(Reject::Window);
        }
        to_end = to_end.max(tail(r));
    }
    if earliest + sc + to_end > inst.upper(dest) + TIME_EPS {
        return Err(Reject::Horizon);
    }
    // least pushes satisfying those future limits; the region is a box
    let mut lam: Vec<f64> = out.sources.iter().map(|s| times[s.pos]).collect();
    let mut feasible = false;
    for _ in 0..2 * out.sources.len() + 4 {
        let t_cur = out.sources.iter().zip(&lam).fold(earliest, |a, (s, &l)| a.max(l + s.delta));
        let mut changed = false;
        for (s, l) in out.sources.iter().zip(lam.iter_mut()) {
            let need = match s.request {
                None => t_cur + sc + to_end - inst.horizon,
                Some(r) => t_cur + sc + inst.travel_time[next][inst.dropoff(r)] - inst.max_ride[r],
            };
            if need > *l + TIME_EPS {
                *l = need;
                changed = true;
            }
        }
        if out.sources.iter().zip(&lam).any(|(s, &l)| l > s.latest + TIME_EPS) {
            let ride = out.sources.iter().zip(&lam).any(|(s, &l)| s.request.is_some() && l > s.latest + TIME_EPS);
            return Err(if ride { Reject::RideTime } else { Reject::Horizon });
        }
        if !changed {
            feasible = true;
            break;
        }
    }
    if !feasible {
        return Err(Reject::RideTime);
    }

    let mut latest_start = inst.upper(next);
    for s in &out.sources {
        if let Some(r) = s.request {
            let deadline = s.latest + inst.max_ride[r];
            out.open_pickup_time.push((r, times[s.pos]));
            out.open_deadline.push((r, deadline));
            latest_start = latest_start.min(deadline - sc - inst.travel_time[next][inst.dropoff(r)]);
        }
    }
    out.latest_start = latest_start.max(earliest);
    let depart = earliest + sc;
    for r in 0..n {
        let p = inst.pickup(r);
        if !out.blocked.contains(r) && depart + inst.travel_time[next][p] > inst.upper(p) + TIME_EPS {
            out.blocked.insert(r);
        }
    }
    Ok(out)
}

/// Does `a` dominate `b`? Both must sit at the same node.
///
/// The standard rule is exact: whatever completes `b` also completes `a`
/// (after dropping fewer passengers) at no higher reduced cost. The
/// probabilistic rule additionally lets a strictly less risky label
/// dominate without comparing ride-time slack.
pub fn dominates(a: &Label, b: &Label, rule: Dominance) -> bool {
    dominates_with(a, b, rule, false)
}

fn standard(a: &Label, b: &Label, same_open: bool) -> bool {
    if !a.blocked.is_subset(b.blocked) || !a.open.is_subset(b.open) {
        return false;
    }
    if same_open && a.open != b.open {
        return false;
    }
    if a.reduced_cost + a.push_penalty > b.reduced_cost + COST_EPS || a.earliest > b.earliest + TIME_EPS {
        return false;
    }
    a.sources.iter().all(|sa| match b.source(sa.request) {
        Some(sb) => {
            sa.latest + TIME_EPS >= sb.latest
                && (sa.delta <= sb.delta + TIME_EPS || sb.latest + sa.delta <= b.earliest + TIME_EPS)
        }
        None => false,
    })
}

fn relaxed(a: &Label, b: &Label, same_open: bool) -> bool {
    a.blocked.is_subset(b.blocked)
        && a.open.is_subset(b.open)
        && (!same_open || a.open == b.open)
        && a.reduced_cost <= b.reduced_cost + COST_EPS
        && a.earliest <= b.earliest + TIME_EPS
}

pub(crate) fn dominates_with(a: &Label, b: &Label, rule: Dominance, same_open: bool) -> bool {
    assert_eq!(a.node, b.node, "dominance compares labels at the same node");
    match rule {
        Dominance::Standard => standard(a, b, same_open),
        Dominance::Probabilistic => {
            (a.gamma <= b.gamma + 1e-12 && standard(a, b, same_open))
                || (a.gamma < b.gamma - 1e-12 && relaxed(a, b, same_open))
        }
    }
}

/// Compact copy of the fields every dominance rule compares, kept
/// contiguous per node so most pairs are rejected without touching labels.
#[derive(Debug, Clone, Copy)]
struct Entry {
    blocked: ReqSet,
    open: ReqSet,
    reduced_cost: f64,
    earliest: f64,
    id: usize,
}

impl Entry {
    fn of(l: &Label, id: usize) -> Self {
        Entry { blocked: l.blocked, open: l.open, reduced_cost: l.reduced_cost, earliest: l.earliest, id }
    }

    /// Necessary for `self` to dominate `other` under either rule.
    fn may_dominate(&self, other: &Entry) -> bool {
        self.reduced_cost <= other.reduced_cost + COST_EPS
            && self.earliest <= other.earliest + TIME_EPS
            && self.open.is_subset(other.open)
            && self.blocked.is_subset(other.blocked)
    }
}

#[derive(Debug, Clone)]
pub struct PricingConfig {
    pub dominance: Dominance,
    /// Stop once this many negative columns are found (heuristic pass).
    pub max_columns: Option<usize>,
    /// Skip dominance entirely (testing aid).
    pub no_dominance: bool,
    /// Heuristic pass: compare only sets, cost and time. May miss columns,
    /// so the result is never reported complete.
    pub relaxed: bool,
    /// Record one line per label.
    pub trace: bool,
    pub deadline: Option<Instant>,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            dominance: Dominance::Standard,
            max_columns: None,
            no_dominance: false,
            relaxed: false,
            trace: false,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PricingResult {
    /// Negative reduced-cost trips, best first, paired with their reduced cost.
    pub trips: Vec<(Trip, f64)>,
    /// Labels kept after dominance.
    pub labels_explored: usize,
    /// False when stopped early by the column cap or the deadline.
    pub complete: bool,
    pub timed_out: bool,
    pub trace: Vec<String>,
}

#[derive(PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (earliest, id)
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Find trips with negative reduced cost.
pub fn price(inst: &Instance, duals: &PricingDuals, cfg: &PricingConfig) -> PricingResult {
    let m = inst.nodes.len();
    let n = inst.requests;
    let dest = inst.destination();
    let same_open = duals.has_arc_terms();
    let mut res = PricingResult { complete: true, ..Default::default() };
    let mut labels: Vec<Label> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut buckets: Vec<Vec<Entry>> = vec![Vec::new(); m];
    let mut heap = BinaryHeap::new();

    // request removal must not lose arc rewards or leave an empty trip with negative reduced cost
    let prune_unprofitable = !cfg.no_dominance && !same_open && duals.vehicle <= 0.0 && metric(inst);
    let mut root = root_label(inst, duals);
    if prune_unprofitable {
        block_unprofitable(inst, duals, &mut root);
    }
    heap.push(Queued(root.earliest, 0));
    labels.push(root);
    alive.push(true);
    buckets[0].push(Entry::of(&labels[0], 0));
    res.labels_explored = 1;

    let entry = if cfg.no_dominance { Vec::new() } else { cheapest_entry(inst, duals) };
    let mut found: Vec<(Trip, f64)> = Vec::new();
    let mut pops = 0usize;
    'outer: while let Some(Queued(_, id)) = heap.pop() {
        if !alive[id] {
            continue;
        }
        pops += 1;
        if pops.is_multiple_of(256) {
            if let Some(d) = cfg.deadline {
                if Instant::now() >= d {
                    res.complete = false;
                    res.timed_out = true;
                    break;
                }
            }
        }
        let cur = labels[id].node;
        let mut cands: Vec<usize> = Vec::with_capacity(2 * n + 1);
        for r in 0..n {
            if !labels[id].blocked.contains(r) {
                cands.push(inst.pickup(r));
            }
        }
        for r in labels[id].open.iter() {
            cands.push(inst.dropoff(r));
        }
        if labels[id].open.is_empty() && !labels[id].served.is_empty() {
            cands.push(dest);
        }
        cands.sort_unstable();
        for next in cands {
            if next == cur {
                continue;
            }
            let ext = extend(inst, &labels[id], next, duals);
            let mut lab = match ext {
                Ok(l) => l,
                Err(why) => {
                    if cfg.trace {
                        res.trace.push(format!("{next} - - - {why}"));
                    }
                    continue;
                }
            };
            lab.predecessor = Some(id);
            if prune_unprofitable && next != dest {
                block_unprofitable(inst, duals, &mut lab);
            }
            if next == dest {
                if lab.reduced_cost < -RC_TOL {
                    if let Ok(trip) = Trip::from_sequence(inst, &lab.path) {
                        let rc = duals.reduced_cost(inst, &trip);
                        if rc < -RC_TOL {
                            found.push((trip, rc));
                        }
                    }
                }
                if cfg.trace {
                    res.trace.push(format!("{} {:.6} {:.6} {:.6e} complete", next, lab.reduced_cost, lab.earliest, lab.gamma));
                }
                if let Some(cap) = cfg.max_columns {
                    if found.len() >= cap {
                        res.complete = false;
                        break 'outer;
                    }
                }
                continue;
            }
            if !cfg.no_dominance {
                if lab.reduced_cost + completion_bound(inst, &entry, &lab) >= -RC_TOL + COST_EPS {
                    if cfg.trace {
                        res.trace.push(format!("{} {:.6} {:.6} {:.6e} bounded", next, lab.reduced_cost, lab.earliest, lab.gamma));
                    }
                    continue;
                }
                let key = Entry::of(&lab, 0);
                let dominated = buckets[next].iter().any(|e| {
                    alive[e.id] && e.may_dominate(&key) && if cfg.relaxed { e.open == lab.open } else { dominates_with(&labels[e.id], &lab, cfg.dominance, same_open) }
                });
                if dominated {
                    if cfg.trace {
                        res.trace.push(format!(
                            "{} {:.6} {:.6} {:.6e} dominated",
                            next, lab.reduced_cost, lab.earliest, lab.gamma
                        ));
                    }
                    continue;
                }
                let bucket = &mut buckets[next];
                bucket.retain(|e| {
                    if !alive[e.id] {
                        return false;
                    }
                    if key.may_dominate(e) && if cfg.relaxed { e.open == lab.open } else { dominates_with(&lab, &labels[e.id], cfg.dominance, same_open) } {
                        alive[e.id] = false;
                        false
                    } else {
                        true
                    }
                });
            }
            if cfg.trace {
                res.trace.push(format!("{} {:.6} {:.6} {:.6e} kept", next, lab.reduced_cost, lab.earliest, lab.gamma));
            }
            let nid = labels.len();
            heap.push(Queued(lab.earliest, nid));
            buckets[next].push(Entry::of(&lab, nid));
            labels.push(lab);
            alive.push(true);
            res.labels_explored += 1;
        }
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.sequence.cmp(&b.0.sequence)));
    res.trips = found;
    if cfg.relaxed {
        res.complete = false;
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{apply_mode, parse_instance, Mode, ModeConfig};

    fn line(n: usize, pick: (f64, f64), drop: (f64, f64)) -> Instance {
        let mut s = format!("1 {n} 480 6 60\n0 0 0 0 0 0 500\n");
        for r in 0..n {
            s.push_str(&format!("{} {} 0 0 1 {} {}\n", r + 1, 2 * r + 1, pick.0, pick.1));
        }
        for r in 0..n {
            s.push_str(&format!("{} {} 0 0 -1 {} {}\n", n + r + 1, 2 * r + 2, drop.0, drop.1));
        }
        parse_instance(&s).unwrap()
    }

    #[test]
    fn hard_window_rejects() {
        let text = "1 1 480 6 60\n0 0 0 0 0 0 500\n1 25 0 0 1 10 20\n2 26 0 0 -1 0 500\n";
        let inst = parse_instance(text).unwrap();
        let duals = PricingDuals::zero(&inst);
        let mut root = root_label(&inst, &duals);
        root.earliest = 0.0;
        assert_eq!(extend(&inst, &root, 1, &duals).unwrap_err(), Reject::Window);
    }

    #[test]
    fn soft_window_penalty() {
        let text = "1 1 480 6 60\n0 0 0 0 0 0 500\n1 25 0 0 1 10 20\n2 26 0 0 -1 0 500\n";
        let mut inst = parse_instance(text).unwrap();
        inst.nodes[0].earliest = 0.0;
        let mut inst = apply_mode(&inst, &ModeConfig::new(Mode::TF).flex(0.0)).unwrap();
        inst.nodes[1].flexible = true;
        let duals = PricingDuals::zero(&inst);
        let root = root_label(&inst, &duals);
        let l = extend(&inst, &root, 1, &duals).unwrap();
        assert_eq!(l.earliest, 25.0);
        assert_eq!(l.accumulated_delay_cost, 5.0);
        assert_eq!(l.cost, 30.0);
    }

    #[test]
    fn capacity_risk() {
        let text = "1 2 480 6 60\n0 0 0 0 0 0 500\n1 1 0 0 3 0 500\n2 2 0 0 3 0 500\n3 3 0 0 -3 0 500\n4 4 0 0 -3 0 500\n";
        let inst = parse_instance(text).unwrap();
        let r = apply_mode(&inst, &ModeConfig::new(Mode::R).psi(0.01).capacity(7.0)).unwrap();
        let mut r6 = r.clone();
        r6.capacity = 6.0;
        let duals = PricingDuals::zero(&r6);
        let root = root_label(&r6, &duals);
        // 3 + 1.517427 * 2 = 6.03 > 6
        assert_eq!(extend(&r6, &root, 1, &duals).unwrap_err(), Reject::CapacityRisk);
        let a = extend(&r, &root, 1, &duals).unwrap();
        assert_eq!(extend(&r, &a, 2, &duals).unwrap_err(), Reject::CapacityRisk);
        let c = apply_mode(&inst, &ModeConfig::new(Mode::C)).unwrap();
        let a = extend(&c, &root, 1, &duals).unwrap();
        assert!(extend(&c, &a, 2, &duals).is_ok());
    }

    #[test]
    fn elementarity() {
        let inst = line(2, (0.0, 500.0), (0.0, 500.0));
        let duals = PricingDuals::zero(&inst);
        let root = root_label(&inst, &duals);
        assert_eq!(extend(&inst, &root, 3, &duals).unwrap_err(), Reject::Elementarity);
        assert_eq!(extend(&inst, &root, 5, &duals).unwrap_err(), Reject::Elementarity);
        let a = extend(&inst, &root, 1, &duals).unwrap();
        assert_eq!(extend(&inst, &a, 1, &duals).unwrap_err(), Reject::Elementarity);
        assert_eq!(extend(&inst, &a, 5, &duals).unwrap_err(), Reject::Elementarity);
        let b = extend(&inst, &a, 3, &duals).unwrap();
        assert_eq!(extend(&inst, &b, 1, &duals).unwrap_err(), Reject::Elementarity);
        assert_eq!(b.served, ReqSet::single(0));
        assert!(b.open.is_empty());
    }

    #[test]
    fn no_negative_columns_without_duals() {
        let inst = line(3, (0.0, 500.0), (0.0, 500.0));
        let res = price(&inst, &PricingDuals::zero(&inst), &PricingConfig::default());
        assert!(res.trips.is_empty());
        assert!(res.complete);
    }

    #[test]
    fn single_request_column() {
        // 0 -> 1 -> 2 -> 3 on a line: 1 + 1 + 2 = 4
        let inst = line(1, (0.0, 500.0), (0.0, 500.0));
        let mut duals = PricingDuals::zero(&inst);
        duals.request[0] = 5.0;
        let res = price(&inst, &duals, &PricingConfig::default());
        assert_eq!(res.trips.len(), 1);
        assert_eq!(res.trips[0].0.sequence, vec![0, 1, 2, 3]);
        assert!((res.trips[0].0.cost - 4.0).abs() < 1e-12);
        assert!((res.trips[0].1 + 1.0).abs() < 1e-12);
        duals.request[0] = 4.0;
        assert!(price(&inst, &duals, &PricingConfig::default()).trips.is_empty());
    }

    fn sample_label(gamma: f64) -> Label {
        Label {
            node: 3,
            reduced_cost: -1.0,
            cost: 4.0,
            earliest: 10.0,
            latest_start: 20.0,
            served: ReqSet::single(0),
            open: ReqSet::single(1),
            blocked: [0, 1].into_iter().collect(),
            open_pickup_time: vec![(1, 5.0)],
            open_deadline: vec![(1, 40.0)],
            gamma,
            max_gamma: gamma,
            accumulated_delay_cost: 0.0,
            push_penalty: 0.0,
            sources: vec![
                Source { request: None, pos: 0, delta: 10.0, latest: 50.0 },
                Source { request: Some(1), pos: 2, delta: 3.0, latest: 15.0 },
            ],
            path: vec![0, 1, 4, 2],
            predecessor: None,
        }
    }

    #[test]
    fn dominance_examples() {
        let a = sample_label(0.002);
        for rule in [Dominance::Standard, Dominance::Probabilistic] {
            assert!(dominates(&a, &a, rule));
        }
        let b = sample_label(0.004);
        assert!(dominates(&a, &b, Dominance::Standard));
        assert!(dominates(&a, &b, Dominance::Probabilistic));
        assert!(dominates(&b, &a, Dominance::Standard));
        assert!(!dominates(&b, &a, Dominance::Probabilistic));

        let mut c = sample_label(0.002);
        c.served = ReqSet::single(2);
        c.blocked = [1, 2].into_iter().collect();
        assert!(!dominates(&c, &a, Dominance::Standard));
        assert!(!dominates(&c, &a, Dominance::Probabilistic));
    }

    #[test]
    fn dominance_slack_conditions() {
        let a = sample_label(0.0);
        let mut b = sample_label(0.0);
        // b can push its open pickup further: a no longer dominates
        b.sources[1].latest = 16.0;
        assert!(!dominates(&a, &b, Dominance::Standard));
        // unless a's push never reaches the current time anyway
        let mut a2 = a.clone();
        a2.sources[1].latest = 16.0;
        a2.sources[1].delta = 4.0;
        assert!(!dominates(&a2, &b, Dominance::Standard));
        b.earliest = 20.0;
        assert!(dominates(&a2, &b, Dominance::Standard));
        // push penalty counts against the dominating label
        let mut a3 = sample_label(0.0);
        a3.push_penalty = 2.0;
        let b3 = sample_label(0.0);
        assert!(!dominates(&a3, &b3, Dominance::Standard));
    }

    #[test]
    fn label_invariants_hold_along_paths() {
        let inst = line(3, (0.0, 100.0), (0.0, 120.0));
        let duals = PricingDuals::zero(&inst);
        let root = root_label(&inst, &duals);
        let mut l = root;
        for next in [1, 2, 4, 3, 5, 6] {
            l = extend(&inst, &l, next, &duals).unwrap();
            assert!(!l.served.intersects(l.open));
            assert!(l.earliest <= l.latest_start + 1e-9);
            assert!(l.latest_start <= inst.upper(inst.destination()) + 1e-9);
        }
        let end = extend(&inst, &l, 7, &duals).unwrap();
        let trip = Trip::from_sequence(&inst, &end.path).unwrap();
        assert!((trip.cost - end.cost).abs() < 1e-12);
    }
}
