//! Brute force for tiny instances.
//!
//! Every precedence-valid node sequence is enumerated; each one's cheapest
//! schedule comes from a small LP over service and delay times, solved with
//! the dense simplex in [`dense_lp`]. The best trip per covered request set
//! then feeds an exhaustive exact cover with at most `|K|` trips. Nothing
//! here reuses the labeling, the schedule evaluator, or the revised simplex.

pub mod dense_lp;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::Sense;
use crate::pricing::Trip;
use crate::reqset::ReqSet;
use crate::robustness::{is_robust_feasible, violation_probability, UncertainLoad};
use dense_lp::{solve_dense, DenseOutcome};

/// Largest instance the oracle accepts.
pub const ORACLE_MAX_REQUESTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSolution {
    pub feasible: bool,
    pub objective: Option<f64>,
    pub routes: Vec<Trip>,
    pub trips_enumerated: usize,
}

fn guard(inst: &Instance) -> Result<()> {
    if inst.requests > ORACLE_MAX_REQUESTS {
        return Err(Error::TooLarge { n: inst.requests, limit: ORACLE_MAX_REQUESTS });
    }
    Ok(())
}

/// Cheapest schedule of a fixed sequence, as `(penalty, times, delays)`.
fn schedule_lp(inst: &Instance, seq: &[usize]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let m = seq.len();
    let flex: Vec<usize> = (0..m).filter(|&k| inst.nodes[seq[k]].flexible).collect();
    let nv = m + flex.len();
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    let row = |pairs: &[(usize, f64)]| {
        let mut a = vec![0.0; nv];
        for &(j, v) in pairs {
            a[j] += v;
        }
        a
    };
    for k in 0..m {
        let nd = &inst.nodes[seq[k]];
        rows.push((row(&[(k, 1.0)]), Sense::Ge, nd.earliest));
        let ub = if nd.flexible { inst.nodes[inst.destination()].latest.max(nd.latest) } else { nd.latest };
        rows.push((row(&[(k, 1.0)]), Sense::Le, ub));
        if k + 1 < m {
            let w = nd.service_duration + inst.travel_time[seq[k]][seq[k + 1]];
            rows.push((row(&[(k + 1, 1.0), (k, -1.0)]), Sense::Ge, w));
        }
    }
    for (f, &k) in flex.iter().enumerate() {
        rows.push((row(&[(m + f, 1.0), (k, -1.0)]), Sense::Ge, -inst.nodes[seq[k]].latest));
    }
    let n = inst.requests;
    for p in 0..m {
        if inst.is_pickup(seq[p]) {
            let r = seq[p] - 1;
            let q = seq.iter().position(|&v| v == r + 1 + n).unwrap();
            rows.push((row(&[(q, 1.0), (p, -1.0)]), Sense::Le, inst.max_ride[r]));
        }
    }
    rows.push((row(&[(m - 1, 1.0), (0, -1.0)]), Sense::Le, inst.horizon));
    let mut c = vec![0.0; nv];
    for f in 0..flex.len() {
        c[m + f] = inst.delay_rate;
    }
    match solve_dense(&c, &rows) {
        DenseOutcome::Optimal { objective, x } => {
            let times = x[..m].to_vec();
            let mut delays = vec![0.0; m];
            for (f, &k) in flex.iter().enumerate() {
                delays[k] = x[m + f];
            }
            Some((objective, times, delays))
        }
        _ => None,
    }
}

struct Dfs<'a> {
    inst: &'a Instance,
    best: BTreeMap<ReqSet, Trip>,
    count: usize,
}

impl Dfs<'_> {
    fn go(&mut self, seq: &mut Vec<usize>, t: f64, open: &mut Vec<usize>, seen: ReqSet) {
        let inst = self.inst;
        let n = inst.requests;
        let cur = *seq.last().unwrap();
        let step = |v: usize| t + inst.nodes[cur].service_duration + inst.travel_time[cur][v];
        let upper = |v: usize| {
            let nd = &inst.nodes[v];
            if nd.flexible {
                inst.nodes[inst.destination()].latest.max(nd.latest)
            } else {
                nd.latest
            }
        };
        if open.is_empty() && !seen.is_empty() {
            let d = inst.destination();
            let a = step(d).max(inst.nodes[d].earliest);
            if a <= upper(d) + 1e-9 {
                seq.push(d);
                self.finish(seq, seen);
                seq.pop();
            }
        }
        for r in 0..n {
            if seen.contains(r) {
                continue;
            }
            let v = r + 1;
            let a = step(v).max(inst.nodes[v].earliest);
            if a > upper(v) + 1e-9 {
                continue;
            }
            open.push(r);
            let loads: Vec<UncertainLoad> = open.iter().map(|&o| inst.load(o)).collect();
            if is_robust_feasible(&loads, inst.capacity, &inst.robust_params()) {
                seq.push(v);
                self.go(seq, a, open, seen.with(r));
                seq.pop();
            }
            open.pop();
        }
        for i in 0..open.len() {
            let r = open[i];
            let v = r + 1 + n;
            let a = step(v).max(inst.nodes[v].earliest);
            if a > upper(v) + 1e-9 {
                continue;
            }
            open.remove(i);
            seq.push(v);
            self.go(seq, a, open, seen);
            seq.pop();
            open.insert(i, r);
        }
    }

    fn finish(&mut self, seq: &[usize], covered: ReqSet) {
        let inst = self.inst;
        let Some((pen, times, delays)) = schedule_lp(inst, seq) else { return };
        self.count += 1;
        let travel: f64 = seq.windows(2).map(|p| inst.travel_cost[p[0]][p[1]]).sum();
        let cost = travel + pen;
        let mut open: Vec<UncertainLoad> = Vec::new();
        let mut max_gamma: f64 = 0.0;
        for &v in seq {
            if inst.is_pickup(v) {
                open.push(inst.load(v - 1));
                max_gamma = max_gamma.max(violation_probability(&open, inst.capacity));
            } else if inst.is_dropoff(v) {
                let l = inst.load(v - 1 - inst.requests);
                if let Some(i) = open.iter().position(|x| *x == l) {
                    open.remove(i);
                }
            }
        }
        let trip = Trip {
            sequence: seq.to_vec(),
            cost,
            covered,
            robust: inst.robust(),
            max_gamma,
            times,
            delays,
        };
        match self.best.get(&covered) {
            Some(b) if b.cost <= cost => {}
            _ => {
                self.best.insert(covered, trip);
            }
        }
    }
}

/// Every feasible trip, reduced to the cheapest one per covered request set.
///
/// The count of feasible sequences examined is returned alongside.
pub fn enumerate_trips(inst: &Instance) -> Result<(Vec<Trip>, usize)> {
    guard(inst)?;
    let mut dfs = Dfs { inst, best: BTreeMap::new(), count: 0 };
    let o = inst.origin();
    let mut seq = vec![o];
    dfs.go(&mut seq, inst.nodes[o].earliest, &mut Vec::new(), ReqSet::EMPTY);
    let count = dfs.count;
    Ok((dfs.best.into_values().collect(), count))
}

/// Cheapest exact cover of all requests by at most `|K|` trips.
pub fn solve_exact(inst: &Instance) -> Result<OracleSolution> {
    let (trips, count) = enumerate_trips(inst)?;
    let n = inst.requests;
    let full = if n == 0 { 0u128 } else { (1u128 << n) - 1 };
    let size = 1usize << n;
    // best[k][mask]: cheapest cover of `mask` with exactly k trips
    let mut best = vec![vec![f64::INFINITY; size]; inst.vehicles + 1];
    let mut choice = vec![vec![usize::MAX; size]; inst.vehicles + 1];
    best[0][0] = 0.0;
    for k in 1..=inst.vehicles {
        for mask in 0..size {
            if best[k - 1][mask].is_infinite() {
                continue;
            }
            // extend with a trip containing the lowest uncovered request, keeps covers canonical
            let free = !(mask as u128) & full;
            if free == 0 {
                continue;
            }
            let low = free.trailing_zeros() as usize;
            for (ti, t) in trips.iter().enumerate() {
                if !t.covered.contains(low) || t.covered.0 & mask as u128 != 0 {
                    continue;
                }
                let nm = mask | t.covered.0 as usize;
                let c = best[k - 1][mask] + t.cost;
                if c < best[k][nm] {
                    best[k][nm] = c;
                    choice[k][nm] = ti;
                }
            }
        }
    }
    let mut arg: Option<(usize, f64)> = None;
    for (k, row) in best.iter().enumerate() {
        let c = row[full as usize];
        if c.is_finite() && arg.is_none_or(|(_, b)| c < b) {
            arg = Some((k, c));
        }
    }
    let Some((k, obj)) = arg else {
        return Ok(OracleSolution { feasible: n == 0, objective: if n == 0 { Some(0.0) } else { None }, routes: vec![], trips_enumerated: count });
    };
    let mut routes = Vec::new();
    let mut mask = full as usize;
    for kk in (1..=k).rev() {
        let t = &trips[choice[kk][mask]];
        routes.push(t.clone());
        mask &= !(t.covered.0 as usize);
    }
    routes.sort_by(|a, b| a.sequence.cmp(&b.sequence));
    Ok(OracleSolution { feasible: true, objective: Some(obj), routes, trips_enumerated: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{apply_mode, parse_instance, Mode, ModeConfig};

    #[test]
    fn single_request() {
        let text = "1 1 480 6 60\n0 0 0 0 0 0 500\n1 3 4 0 1 0 500\n2 6 8 0 -1 0 500\n";
        let inst = parse_instance(text).unwrap();
        let (trips, _) = enumerate_trips(&inst).unwrap();
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].sequence, vec![0, 1, 2, 3]);
        let sol = solve_exact(&inst).unwrap();
        assert!((sol.objective.unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn shared_ride_chosen() {
        // two requests along the same line, one vehicle enough
        let text = "2 2 480 6 60\n0 0 0 0 0 0 500\n1 1 0 0 1 0 500\n2 2 0 0 1 0 500\n3 3 0 0 -1 0 500\n4 4 0 0 -1 0 500\n";
        let inst = parse_instance(text).unwrap();
        let sol = solve_exact(&inst).unwrap();
        assert!((sol.objective.unwrap() - 8.0).abs() < 1e-9);
        assert_eq!(sol.routes.len(), 1);
        assert_eq!(sol.routes[0].sequence, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn robust_capacity_blocks_everything() {
        let text = "1 1 480 6 60\n0 0 0 0 0 0 500\n1 3 4 0 3 0 500\n2 6 8 0 -3 0 500\n";
        let inst = parse_instance(text).unwrap();
        let mut r = apply_mode(&inst, &ModeConfig::new(Mode::R)).unwrap();
        r.capacity = 6.0;
        assert!(enumerate_trips(&r).unwrap().0.is_empty());
        let sol = solve_exact(&r).unwrap();
        assert!(!sol.feasible);
    }

    #[test]
    fn size_guard() {
        let mut s = String::from("1 7 480 6 60\n");
        for i in 0..=14 {
            let l = if i == 0 { 0 } else if i <= 7 { 1 } else { -1 };
            s.push_str(&format!("{i} {i} 0 0 {l} 0 500\n"));
        }
        let inst = parse_instance(&s).unwrap();
        assert!(matches!(solve_exact(&inst), Err(Error::TooLarge { n: 7, .. })));
    }

    #[test]
    fn soft_window_delay_is_minimal() {
        // pickup window closes at 2 but the node is 5 away: delay 3
        let text = "1 1 480 6 60\n0 0 0 0 0 0 500\n1 5 0 0 1 0 2\n2 6 0 0 -1 0 500\n";
        let inst = parse_instance(text).unwrap();
        let mut tf = apply_mode(&inst, &ModeConfig::new(Mode::TF)).unwrap();
        tf.nodes[1].flexible = true;
        let sol = solve_exact(&tf).unwrap();
        assert!((sol.objective.unwrap() - (12.0 + 3.0)).abs() < 1e-9);
        assert!(solve_exact(&inst).unwrap().objective.is_none());
    }
}
