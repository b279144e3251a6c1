//! Separation of robust capacity cuts, infeasible path inequalities and
//! two-path cuts against a fractional master solution.
//!
//! All three are arc-additive rows, see [`crate::master::ArcFamily`].

use std::collections::BTreeSet;

use serde::Serialize;

use crate::instance::Instance;
use crate::lp::Sense;
use crate::master::{ArcFamily, ArcRow, MasterState};
use crate::pricing::{price, Dominance, PricingConfig, PricingDuals};
use crate::reqset::ReqSet;
use crate::robustness::LoadSums;
use crate::schedule::least_schedule;

pub const VIOLATION_TOL: f64 = 1e-4;
pub const MAX_CAPACITY_SET: usize = 8;
pub const MAX_TWO_PATH_SET: usize = 6;
pub const MAX_PATH_ARCS: usize = 6;
/// Deactivate a cut after this many consecutive slack LP solves.
pub const AGING_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutKind {
    RobustCapacity,
    InfeasiblePath,
    TwoPath,
}

impl CutKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CutKind::RobustCapacity => "robust-capacity",
            CutKind::InfeasiblePath => "infeasible-path",
            CutKind::TwoPath => "two-path",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cut {
    pub kind: CutKind,
    pub row: ArcRow,
    pub violation: f64,
}

/// Columns with `λ > 0`, paired with their value.
fn support(st: &MasterState) -> Vec<(usize, f64)> {
    st.lambda.iter().enumerate().filter(|(_, &l)| l > 1e-9).map(|(i, &l)| (i, l)).collect()
}

/// Candidate request sets: components of the fractional co-service graph,
/// and greedy growth from every request (heaviest first).
pub fn candidate_sets(st: &MasterState, inst: &Instance, max_size: usize) -> Vec<ReqSet> {
    let n = inst.requests;
    let sup = support(st);
    let mut w = vec![vec![0.0; n]; n];
    for &(c, l) in &sup {
        if l >= 1.0 - 1e-9 {
            continue;
        }
        let cov: Vec<usize> = st.columns[c].covered.iter().collect();
        for &a in &cov {
            for &b in &cov {
                if a != b {
                    w[a][b] += l;
                }
            }
        }
    }
    let mut out: BTreeSet<ReqSet> = BTreeSet::new();

    // components
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = ReqSet::EMPTY;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            comp.insert(u);
            for v in 0..n {
                if !seen[v] && w[u][v] > 1e-9 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if comp.len() >= 2 && comp.len() <= max_size {
            out.insert(comp);
        }
    }

    // greedy growth
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.load(b).mean.total_cmp(&inst.load(a).mean).then(a.cmp(&b)));
    for &s in &order {
        let mut set = ReqSet::single(s);
        while set.len() < max_size {
            let best = (0..n)
                .filter(|&v| !set.contains(v))
                .map(|v| (set.iter().map(|u| w[u][v]).sum::<f64>(), v))
                .filter(|&(x, _)| x > 1e-9)
                .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
            match best {
                Some((_, v)) => {
                    set.insert(v);
                    out.insert(set);
                }
                None => break,
            }
        }
    }
    out.into_iter().collect()
}

fn crossing_value(st: &MasterState, fam: &ArcFamily) -> f64 {
    support(st).iter().map(|&(c, l)| l * fam.trip_coef(&st.columns[c])).sum()
}

/// Vehicles a request set needs if its pickups form one uninterrupted block.
pub fn kappa(inst: &Instance, set: ReqSet) -> u8 {
    let loads: Vec<_> = set.iter().map(|r| inst.load(r)).collect();
    if LoadSums::of(&loads).feasible(inst.capacity, &inst.robust_params()) {
        1
    } else {
        2
    }
}

/// Crossing cuts on the pickup nodes of request sets whose combined
/// (inflated) load cannot be on board at once: `x(δ(S)) ≥ 2κ`.
pub fn separate_robust_capacity(st: &MasterState, inst: &Instance) -> Vec<Cut> {
    let mut cuts = Vec::new();
    for set in candidate_sets(st, inst, MAX_CAPACITY_SET) {
        let k = kappa(inst, set);
        if k < 2 {
            continue;
        }
        let nodes: Vec<usize> = set.iter().map(|r| inst.pickup(r)).collect();
        let fam = ArcFamily::Crossing(nodes);
        let rhs = 2.0 * k as f64;
        let v = rhs - crossing_value(st, &fam);
        if v > VIOLATION_TOL {
            cuts.push(Cut { kind: CutKind::RobustCapacity, row: ArcRow::new(fam, Sense::Ge, rhs), violation: v });
        }
    }
    cuts
}

/// Whether no feasible trip can traverse `path` consecutively.
pub fn path_infeasible(inst: &Instance, path: &[usize]) -> bool {
    let from_origin = path[0] == inst.origin();
    let mut picked = ReqSet::EMPTY;
    let mut dropped = ReqSet::EMPTY;
    let mut onboard = LoadSums::default();
    let params = inst.robust_params();
    for (k, &v) in path.iter().enumerate() {
        if (v == inst.origin() && k > 0) || (v == inst.destination() && k + 1 < path.len()) {
            return true;
        }
        if let Some(r) = inst.request_of(v) {
            if inst.is_pickup(v) {
                if picked.contains(r) || dropped.contains(r) {
                    return true;
                }
                picked.insert(r);
                onboard.add(&inst.load(r));
                if !onboard.feasible(inst.capacity, &params) {
                    return true;
                }
            } else {
                if dropped.contains(r) || (from_origin && !picked.contains(r)) {
                    return true;
                }
                dropped.insert(r);
                if picked.contains(r) {
                    onboard.remove(&inst.load(r));
                }
            }
        }
        if v == inst.destination() && from_origin && !picked.is_subset(dropped) {
            return true;
        }
    }
    let closed = from_origin && *path.last().unwrap() == inst.destination();
    least_schedule(inst, path, closed).is_err()
}

/// Infeasible path inequalities `Σ_{(i,j)∈P} x_ij ≤ |P| − 1` over support paths.
pub fn separate_infeasible_path(st: &MasterState, inst: &Instance) -> Vec<Cut> {
    let m = inst.nodes.len();
    let flows = st.arc_flows();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for &((i, j), x) in &flows {
        adj[i].push((j, x));
    }
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut cuts = Vec::new();
    let mut path = Vec::new();
    for s in 0..m {
        path.clear();
        path.push(s);
        dfs_paths(inst, &adj, &mut path, 0.0, &mut found, &mut cuts);
    }
    cuts
}

fn dfs_paths(
    inst: &Instance,
    adj: &[Vec<(usize, f64)>],
    path: &mut Vec<usize>,
    sum: f64,
    found: &mut BTreeSet<Vec<usize>>,
    cuts: &mut Vec<Cut>,
) {
    let arcs = path.len() - 1;
    if arcs >= MAX_PATH_ARCS {
        return;
    }
    let u = *path.last().unwrap();
    for &(v, x) in &adj[u] {
        if path.contains(&v) {
            continue;
        }
        let s = sum + x;
        let k = arcs + 1;
        // any extension must stay above |P| − 1
        if s <= (k - 1) as f64 + VIOLATION_TOL {
            continue;
        }
        path.push(v);
        if path_infeasible(inst, path) {
            // minimal infeasible paths only: skip if a shorter suffix is already cut
            if !found.contains(path.as_slice()) {
                found.insert(path.clone());
                let list: Vec<(usize, usize)> = path.windows(2).map(|p| (p[0], p[1])).collect();
                cuts.push(Cut {
                    kind: CutKind::InfeasiblePath,
                    row: ArcRow::new(ArcFamily::Arcs(list), Sense::Le, (k - 1) as f64),
                    violation: s - (k - 1) as f64,
                });
            }
        } else {
            dfs_paths(inst, adj, path, s, found, cuts);
        }
        path.pop();
    }
}

/// Whether a single trip can serve every request in `set`.
pub fn one_trip_serves(inst: &Instance, set: ReqSet) -> bool {
    let reqs: Vec<usize> = set.iter().collect();
    let sub = inst.restrict(&reqs);
    let mut duals = PricingDuals::zero(&sub);
    // each request is worth more than any trip can cost
    let prize = 10.0 * (sub.max_arc_cost() * (2 * reqs.len() + 2) as f64 + 1.0) + 1e3;
    duals.request = vec![prize; reqs.len()];
    let cfg = PricingConfig { dominance: Dominance::Standard, ..Default::default() };
    let res = price(&sub, &duals, &cfg);
    res.trips.iter().any(|(t, _)| t.covered.len() == reqs.len())
}

/// Crossing cuts `x(δ(S)) ≥ 4` on all nodes of request sets no single trip can serve.
pub fn separate_two_path(st: &MasterState, inst: &Instance) -> Vec<Cut> {
    let mut cuts = Vec::new();
    for set in candidate_sets(st, inst, MAX_TWO_PATH_SET) {
        let mut nodes: Vec<usize> = set.iter().map(|r| inst.pickup(r)).collect();
        nodes.extend(set.iter().map(|r| inst.dropoff(r)));
        nodes.sort_unstable();
        let fam = ArcFamily::Crossing(nodes);
        let v = 4.0 - crossing_value(st, &fam);
        if v <= VIOLATION_TOL {
            continue;
        }
        if !one_trip_serves(inst, set) {
            cuts.push(Cut { kind: CutKind::TwoPath, row: ArcRow::new(fam, Sense::Ge, 4.0), violation: v });
        }
    }
    cuts
}

/// Run every separator; cuts already in the pool are skipped. Ordered by
/// kind, then violation (largest first), then support.
pub fn separate_all(st: &MasterState, inst: &Instance, limit: usize) -> Vec<Cut> {
    let mut cuts = separate_robust_capacity(st, inst);
    cuts.extend(separate_infeasible_path(st, inst));
    cuts.extend(separate_two_path(st, inst));
    cuts.retain(|c| !st.cuts.iter().any(|p| p.row == c.row));
    cuts.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(b.violation.total_cmp(&a.violation))
            .then_with(|| format!("{:?}", a.row.family).cmp(&format!("{:?}", b.row.family)))
    });
    cuts.dedup_by(|a, b| a.row == b.row);
    cuts.truncate(limit);
    cuts
}
