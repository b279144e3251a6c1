//! Best-bound branch-and-cut-and-price.
//!
//! Each tree node runs column generation to convergence, then cut rounds,
//! then branches: first on the fleet size, then on the outflow of a node
//! set, and as a last resort on a single arc.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::construct::greedy_routes;
use crate::cuts::{separate_all, AGING_LIMIT, VIOLATION_TOL};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::Sense;
use crate::master::{init_master, ArcFamily, ArcRow, MasterState, INTEGRALITY_TOL};
use crate::pricing::{price, Dominance, PricingConfig, Trip, RC_TOL};

pub const BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub dominance: Dominance,
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    pub node_limit: usize,
    /// Column cap of the heuristic pricing pass, which prunes with the
    /// relaxed rule and may miss columns (0 disables it).
    pub heuristic_columns: usize,
    pub cuts: bool,
    pub max_cuts_per_round: usize,
    pub root_cut_rounds: usize,
    pub node_cut_rounds: usize,
    /// Stop at the first integral solution.
    pub feasibility_only: bool,
    /// Report wall time (off gives byte-identical reports).
    pub timing: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            dominance: Dominance::Standard,
            time_limit: 3600.0,
            node_limit: 1_000_000,
            heuristic_columns: 50,
            cuts: true,
            max_cuts_per_round: 50,
            root_cut_rounds: 20,
            node_cut_rounds: 3,
            feasibility_only: false,
            timing: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub sequence: Vec<usize>,
    pub times: Vec<f64>,
    pub delays: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Stopped by the time or node limit.
    Limit,
    /// Stopped at the first feasible solution on request.
    Feasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub instance: String,
    pub mode: String,
    pub psi: f64,
    pub flex_ratio: f64,
    pub objective: Option<f64>,
    pub optimal: bool,
    pub gap: Option<f64>,
    pub vehicles_used: usize,
    pub routes: Vec<RouteReport>,
    pub labels_explored: usize,
    pub cuts_added: usize,
    pub nodes_explored: usize,
    pub wall_seconds: f64,
    pub status: SolveStatus,
    /// Infinite (written as null) once infeasibility is proven.
    #[serde(with = "unbounded")]
    pub lower_bound: f64,
    pub root_bound: f64,
    /// Requests no single trip can serve.
    pub unservable: Vec<usize>,
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A branching decision.
#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    /// Fleet size `≤ floor` / `≥ ceil` of the fractional vehicle count.
    Fleet(f64),
    /// Outflow of a node set `≤ 1` / `≥ 2`.
    Outflow(Vec<usize>, f64),
    /// Single arc forbidden / forced.
    Arc(usize, usize, f64),
}

impl Branch {
    fn children(&self) -> [ArcRow; 2] {
        match self {
            Branch::Fleet(x) => [
                ArcRow::new(ArcFamily::Vehicles, Sense::Le, x.floor()),
                ArcRow::new(ArcFamily::Vehicles, Sense::Ge, x.ceil()),
            ],
            Branch::Outflow(s, _) => [
                ArcRow::new(ArcFamily::Outflow(s.clone()), Sense::Le, 1.0),
                ArcRow::new(ArcFamily::Outflow(s.clone()), Sense::Ge, 2.0),
            ],
            Branch::Arc(i, j, _) => [
                ArcRow::new(ArcFamily::Arcs(vec![(*i, *j)]), Sense::Le, 0.0),
                ArcRow::new(ArcFamily::Arcs(vec![(*i, *j)]), Sense::Ge, 1.0),
            ],
        }
    }
}

/// Pick a branching rule for a fractional master solution.
pub fn choose_branch(st: &MasterState, inst: &Instance) -> Option<Branch> {
    if st.is_integral() {
        return None;
    }
    let xv = st.vehicles_used();
    if (xv - xv.round()).abs() > INTEGRALITY_TOL {
        return Some(Branch::Fleet(xv));
    }
    let flows = st.arc_flows();
    let m = inst.nodes.len();
    let mut x = vec![0.0; m * m];
    for &((i, j), f) in &flows {
        x[i * m + j] = f;
    }
    let inner = |v: usize| v != inst.origin() && v != inst.destination();
    let outflow = |set: &[bool]| -> f64 {
        flows.iter().filter(|((i, j), _)| set[*i] && !set[*j]).map(|(_, f)| f).sum()
    };
    let mut fractional: Vec<((usize, usize), f64)> =
        flows.iter().copied().filter(|&(_, f)| (f - f.round()).abs() > INTEGRALITY_TOL).collect();
    fractional.sort_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()).then(a.0.cmp(&b.0)));

    let mut best: Option<(f64, Vec<usize>, f64)> = None;
    for &((i, j), _) in &fractional {
        if !inner(i) || !inner(j) {
            continue;
        }
        let mut set = vec![false; m];
        set[i] = true;
        set[j] = true;
        let mut size = 2;
        loop {
            let val = outflow(&set);
            if (1.1..=1.9).contains(&val) {
                let score = (val - 1.5).abs();
                let members: Vec<usize> = (0..m).filter(|&v| set[v]).collect();
                let better = match &best {
                    None => true,
                    Some((s, mem, _)) => score < s - 1e-12 || (score <= s + 1e-12 && members < *mem),
                };
                if better {
                    best = Some((score, members, val));
                }
            }
            if size >= m.saturating_sub(3) {
                break;
            }
            // add the outside node exchanging the most flow with the set
            let cand = (0..m)
                .filter(|&v| inner(v) && !set[v])
                .map(|v| {
                    let w: f64 = (0..m).filter(|&u| set[u]).map(|u| x[u * m + v] + x[v * m + u]).sum();
                    (w, v)
                })
                .filter(|&(w, _)| w > 1e-9)
                .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
            match cand {
                Some((_, v)) => {
                    set[v] = true;
                    size += 1;
                }
                None => break,
            }
        }
    }
    if let Some((_, set, val)) = best {
        return Some(Branch::Outflow(set, val));
    }
    fractional.first().map(|&((i, j), f)| Branch::Arc(i, j, f))
}

#[derive(Debug, Clone)]
struct OpenNode {
    bound: f64,
    depth: usize,
    id: usize,
    rows: Vec<ArcRow>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // max-heap: smaller bound first, then deeper, then older
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

enum NodeResult {
    Pruned(f64),
    Infeasible,
    Integral(f64, Vec<Trip>),
    Fractional(f64, Branch),
    Stopped,
}

struct Solver<'a> {
    inst: &'a Instance,
    cfg: &'a SolveConfig,
    st: MasterState,
    deadline: Instant,
    labels: usize,
    cuts_added: usize,
    incumbent: Option<(f64, Vec<Trip>)>,
}

impl<'a> Solver<'a> {
    fn upper(&self) -> f64 {
        self.incumbent.as_ref().map(|i| i.0).unwrap_or(f64::INFINITY)
    }

    fn out_of_time(&self) -> bool {
        Instant::now() >= self.deadline
    }

    /// Column generation to convergence. Returns the LP value and a valid
    /// lower bound for the node, or None when stopped by the deadline.
    fn column_generation(&mut self) -> Result<Option<(f64, f64)>> {
        let k = self.inst.vehicles as f64;
        loop {
            let z = self.st.solve_lp()?;
            if self.out_of_time() {
                return Ok(None);
            }
            let duals = self.st.pricing_duals(self.inst);
            let base = PricingConfig { dominance: self.cfg.dominance, deadline: Some(self.deadline), ..Default::default() };
            if self.cfg.heuristic_columns > 0 {
                let pc = PricingConfig { max_columns: Some(self.cfg.heuristic_columns), relaxed: true, ..base.clone() };
                let r = price(self.inst, &duals, &pc);
                self.labels += r.labels_explored;
                if r.timed_out {
                    return Ok(None);
                }
                if self.st.add_columns(r.trips.into_iter().map(|t| t.0).collect()) > 0 {
                    continue;
                }
            }
            let res = price(self.inst, &duals, &base);
            self.labels += res.labels_explored;
            if res.timed_out {
                return Ok(None);
            }
            if res.trips.is_empty() {
                return Ok(Some((z, z)));
            }
            debug_assert!(res.trips[0].1 < -RC_TOL);
            let lag = z + k * res.trips[0].1;
            let added = self.st.add_columns(res.trips.into_iter().map(|t| t.0).collect());
            if added == 0 {
                // numerical stall: keep only the Lagrangian bound
                log::warn!("pricing returned only pooled columns; stopping column generation");
                return Ok(Some((z, lag.min(z))));
            }
            if lag >= self.upper() - BOUND_TOL {
                return Ok(Some((z, lag)));
            }
        }
    }

    fn process(&mut self, node: &OpenNode) -> Result<NodeResult> {
        self.st.set_branch_rows(&node.rows);
        self.st.reset_basis();
        let rounds = if node.depth == 0 { self.cfg.root_cut_rounds } else { self.cfg.node_cut_rounds };
        let mut round = 0;
        let mut last_z = f64::NEG_INFINITY;
        loop {
            let (z, lb) = match self.column_generation()? {
                Some(v) => v,
                None => return Ok(NodeResult::Stopped),
            };
            let bound = lb.max(node.bound);
            if bound >= self.upper() - BOUND_TOL {
                return Ok(NodeResult::Pruned(bound));
            }
            if self.st.uses_artificial() {
                return Ok(NodeResult::Infeasible);
            }
            if self.st.is_integral() {
                let trips: Vec<Trip> = self
                    .st
                    .columns
                    .iter()
                    .zip(&self.st.lambda)
                    .filter(|(_, &l)| l > 0.5)
                    .map(|(t, _)| t.clone())
                    .collect();
                let cost: f64 = trips.iter().map(|t| t.cost).sum();
                return Ok(NodeResult::Integral(cost, trips));
            }
            if self.cfg.cuts && round < rounds && z > last_z + 1e-6 {
                last_z = z;
                round += 1;
                let mut changed = self.st.reactivate_violated(VIOLATION_TOL);
                if changed == 0 {
                    let cuts = separate_all(&self.st, self.inst, self.cfg.max_cuts_per_round);
                    for c in cuts {
                        self.st.add_cut(c.row, c.kind.as_str());
                        self.cuts_added += 1;
                        changed += 1;
                    }
                }
                if changed > 0 {
                    continue;
                }
            }
            return match choose_branch(&self.st, self.inst) {
                Some(b) => Ok(NodeResult::Fractional(bound, b)),
                None => Err(Error::Domain("fractional master solution without a branching candidate".into())),
            };
        }
    }
}

/// Solve an instance to optimality (or until a limit is hit).
pub fn solve_bcp(inst: &Instance, cfg: &SolveConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(cfg.time_limit.clamp(0.0, 1e9));
    let st = init_master(inst);
    let unservable = st.unservable.clone();
    let mut solver = Solver { inst, cfg, st, deadline, labels: 0, cuts_added: 0, incumbent: None };

    let mut heap = BinaryHeap::new();
    let mut next_id = 1;
    let mut nodes_explored = 0;
    let mut root_bound = f64::NEG_INFINITY;
    let mut stopped = false;
    let mut found_feasible = false;
    if unservable.is_empty() && inst.requests > 0 {
        let (routes, complete) = greedy_routes(inst);
        if complete {
            solver.incumbent = Some((routes.iter().map(|t| t.cost).sum(), routes.clone()));
            found_feasible = cfg.feasibility_only;
        }
        solver.st.add_columns(routes);
        heap.push(OpenNode { bound: f64::NEG_INFINITY, depth: 0, id: 0, rows: Vec::new() });
    }

    while !found_feasible {
        let Some(node) = heap.pop() else { break };
        if node.bound >= solver.upper() - BOUND_TOL {
            continue;
        }
        if nodes_explored >= cfg.node_limit || solver.out_of_time() {
            heap.push(node);
            stopped = true;
            break;
        }
        nodes_explored += 1;
        if nodes_explored % 256 == 0 {
            solver.st.age_cuts(AGING_LIMIT);
        }
        let res = solver.process(&node)?;
        if node.depth == 0 {
            root_bound = match &res {
                NodeResult::Pruned(b) | NodeResult::Fractional(b, _) => *b,
                NodeResult::Integral(c, _) => *c,
                NodeResult::Infeasible => f64::INFINITY,
                NodeResult::Stopped => f64::NEG_INFINITY,
            };
        }
        match res {
            NodeResult::Stopped => {
                heap.push(node);
                stopped = true;
                break;
            }
            NodeResult::Pruned(_) | NodeResult::Infeasible => {}
            NodeResult::Integral(cost, trips) => {
                log::debug!("node {}: integral solution {cost:.4}", node.id);
                if cost < solver.upper() - 1e-9 {
                    solver.incumbent = Some((cost, trips));
                }
                if cfg.feasibility_only {
                    found_feasible = true;
                    break;
                }
            }
            NodeResult::Fractional(bound, branch) => {
                log::debug!("node {} depth {}: bound {bound:.4}, branch {:?}", node.id, node.depth, branch);
                for row in branch.children() {
                    let mut rows = node.rows.clone();
                    rows.push(row);
                    heap.push(OpenNode { bound, depth: node.depth + 1, id: next_id, rows });
                    next_id += 1;
                }
            }
        }
    }

    let upper = solver.upper();
    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let lower = if stopped || found_feasible { open_bound.min(upper) } else { upper };
    let (status, optimal) = if found_feasible {
        (SolveStatus::Feasible, heap.is_empty())
    } else if stopped {
        (SolveStatus::Limit, false)
    } else if solver.incumbent.is_some() {
        (SolveStatus::Optimal, true)
    } else {
        (SolveStatus::Infeasible, false)
    };
    let gap = match solver.incumbent {
        Some((c, _)) if lower.is_finite() => Some(((c - lower) / c.abs().max(1e-9)).max(0.0)),
        _ => None,
    };
    let mut routes: Vec<RouteReport> = solver
        .incumbent
        .as_ref()
        .map(|(_, t)| {
            t.iter()
                .map(|t| RouteReport { sequence: t.sequence.clone(), times: t.times.clone(), delays: t.delays.clone() })
                .collect()
        })
        .unwrap_or_default();
    routes.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    Ok(SolveReport {
        instance: inst.name.clone(),
        mode: inst.mode.as_str().to_string(),
        psi: inst.psi,
        flex_ratio: inst.flex_ratio,
        objective: solver.incumbent.as_ref().map(|i| i.0),
        optimal,
        gap,
        vehicles_used: routes.len(),
        routes,
        labels_explored: solver.labels,
        cuts_added: solver.cuts_added,
        nodes_explored,
        wall_seconds: if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        status,
        lower_bound: if lower.is_finite() { lower } else { root_bound.max(0.0) },
        root_bound: if root_bound.is_finite() { root_bound } else { 0.0 },
        unservable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    fn line() -> Instance {
        parse_instance(
            "2 2 480 6 60\n0 0 0 0 0 0 500\n1 5 0 0 1 0 500\n2 6 0 0 1 0 500\n3 10 0 0 -1 0 500\n4 9 0 0 -1 0 500\n",
        )
        .unwrap()
    }

    #[test]
    fn shared_trip_is_optimal() {
        let rep = solve_bcp(&line(), &SolveConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        assert!((rep.objective.unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(rep.routes.len(), 1);
        // both drop-off orders cost 20
        assert_eq!(rep.routes[0].sequence.len(), 6);
        assert_eq!(rep.vehicles_used, 1);
        assert!(rep.optimal);
        assert_eq!(rep.gap, Some(0.0));
    }

    #[test]
    fn unservable_is_infeasible() {
        let bad = parse_instance("1 1 480 6 60\n0 0 0 0 0 0 500\n1 50 0 0 1 0 10\n2 51 0 0 -1 0 500\n").unwrap();
        let rep = solve_bcp(&bad, &SolveConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Infeasible);
        assert_eq!(rep.objective, None);
        assert_eq!(rep.unservable, vec![0]);
        let back: SolveReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn fleet_too_small_is_infeasible() {
        // two requests with the same tight pickup time at opposite ends
        let text = "1 2 480 6 60\n0 0 0 0 0 0 500\n1 5 0 0 1 5 5\n2 -5 0 0 1 5 5\n3 6 0 0 -1 0 500\n4 -6 0 0 -1 0 500\n";
        let inst = parse_instance(text).unwrap();
        let rep = solve_bcp(&inst, &SolveConfig::default()).unwrap();
        assert_eq!(rep.status, SolveStatus::Infeasible);
    }

    #[test]
    fn fleet_branch_candidates() {
        let inst = line();
        let mut st = init_master(&inst);
        st.add_columns(vec![Trip::from_sequence(&inst, &[0, 1, 2, 4, 3, 5]).unwrap()]);
        st.lambda = vec![0.5, 0.5, 0.5];
        // Σλ = 1.5
        let b = choose_branch(&st, &inst).unwrap();
        assert_eq!(b, Branch::Fleet(1.5));
        let [lo, hi] = b.children();
        assert_eq!((lo.sense, lo.rhs), (Sense::Le, 1.0));
        assert_eq!((hi.sense, hi.rhs), (Sense::Ge, 2.0));
        st.lambda = vec![1.0, 1.0, 0.0];
        assert_eq!(choose_branch(&st, &inst), None);
    }

    #[test]
    fn zero_time_limit_stops() {
        let cfg = SolveConfig { time_limit: 0.0, ..Default::default() };
        let rep = solve_bcp(&line(), &cfg).unwrap();
        assert_eq!(rep.status, SolveStatus::Limit);
        assert!(!rep.optimal);
    }
}
