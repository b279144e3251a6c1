//! Service times for a fixed node sequence.
//!
//! A sequence induces a system of difference constraints: travel between
//! consecutive nodes, time windows, ride-time limits (drop-off no later
//! than pickup plus `B_i`) and the route duration. Its solutions form a
//! lattice, so there is a componentwise least schedule. The delay penalty
//! is nondecreasing in every service time, which makes the least schedule
//! the cheapest one as well. It is found by alternating a forward sweep
//! with the backward pushes that ride and duration limits impose.

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::reqset::ReqSet;
use crate::robustness::LoadSums;

pub const TIME_EPS: f64 = 1e-9;

/// Why a sequence (or an extension of a partial one) is infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reject {
    Window,
    RideTime,
    CapacityRisk,
    Elementarity,
    Horizon,
}

impl std::fmt::Display for Reject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Reject::Window => "window",
            Reject::RideTime => "ride-time",
            Reject::CapacityRisk => "capacity-risk",
            Reject::Elementarity => "elementarity",
            Reject::Horizon => "horizon",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub delays: Vec<f64>,
    pub travel: f64,
    pub penalty: f64,
}

impl Schedule {
    pub fn cost(&self) -> f64 {
        self.travel + self.penalty
    }
}

/// Back edge `T[to] >= T[from] - limit`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BackEdge {
    pub from: usize,
    pub to: usize,
    pub limit: f64,
    pub duration: bool,
}

/// Difference-constraint graph over sequence positions.
#[derive(Debug, Clone)]
pub(crate) struct TimeGraph {
    /// `w[k]`: service at position k plus travel to k+1.
    pub w: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub back: Vec<BackEdge>,
}

impl TimeGraph {
    /// Build the graph for `seq`. Ride limits apply to requests with both
    /// ends present; `closed` adds the route-duration edge from last to first.
    pub fn new(inst: &Instance, seq: &[usize], closed: bool) -> TimeGraph {
        let m = seq.len();
        let mut w = Vec::with_capacity(m.saturating_sub(1));
        for k in 0..m.saturating_sub(1) {
            let a = seq[k];
            w.push(inst.nodes[a].service_duration + inst.travel_time[a][seq[k + 1]]);
        }
        let lower = seq.iter().map(|&v| inst.nodes[v].earliest).collect();
        let upper = seq.iter().map(|&v| inst.upper(v)).collect();
        let mut back = Vec::new();
        let mut pick_pos = vec![usize::MAX; inst.requests];
        for (k, &v) in seq.iter().enumerate() {
            if inst.is_pickup(v) {
                pick_pos[v - 1] = k;
            } else if inst.is_dropoff(v) {
                let r = v - 1 - inst.requests;
                if pick_pos[r] != usize::MAX {
                    back.push(BackEdge { from: k, to: pick_pos[r], limit: inst.max_ride[r], duration: false });
                }
            }
        }
        if closed && m >= 2 {
            back.push(BackEdge { from: m - 1, to: 0, limit: inst.horizon, duration: true });
        }
        TimeGraph { w, lower, upper, back }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    /// Minimum possible gap between positions `a <= b`.
    fn span(&self, a: usize, b: usize) -> f64 {
        self.w[a..b].iter().sum()
    }

    fn precheck(&self) -> Result<(), Reject> {
        for e in &self.back {
            if self.span(e.to, e.from) > e.limit + TIME_EPS {
                return Err(if e.duration { Reject::Horizon } else { Reject::RideTime });
            }
        }
        Ok(())
    }

    /// Least schedule given per-position lower bounds (usually `self.lower`).
    pub fn least_from(&self, start: &[f64]) -> Result<Vec<f64>, Reject> {
        self.precheck()?;
        let m = self.len();
        let mut t = start.to_vec();
        let mut from = 0;
        let mut pushed: Option<bool> = None;
        // no positive cycles after the precheck, so this settles in at most
        // one round per back edge; the cap only guards float creep
        for _ in 0..(self.back.len() + 2) * 2 {
            for k in from..m {
                if k > 0 {
                    let a = t[k - 1] + self.w[k - 1];
                    if a > t[k] {
                        t[k] = a;
                    }
                }
                if t[k] > self.upper[k] + TIME_EPS {
                    return Err(match pushed {
                        Some(true) => Reject::Horizon,
                        Some(false) => Reject::RideTime,
                        None if k + 1 == m && self.back.iter().any(|e| e.duration) => Reject::Horizon,
                        None => Reject::Window,
                    });
                }
            }
            let mut next_from = usize::MAX;
            for e in &self.back {
                let need = t[e.from] - e.limit;
                if need > t[e.to] + TIME_EPS {
                    t[e.to] = need;
                    next_from = next_from.min(e.to);
                    pushed = Some(e.duration);
                }
            }
            if next_from == usize::MAX {
                return Ok(t);
            }
            if t[next_from] > self.upper[next_from] + TIME_EPS {
                return Err(if pushed == Some(true) { Reject::Horizon } else { Reject::RideTime });
            }
            from = next_from;
        }
        Err(Reject::RideTime)
    }

    pub fn least(&self) -> Result<Vec<f64>, Reject> {
        self.least_from(&self.lower)
    }

    /// Longest path lengths from position `s` (`-inf` where unreachable).
    pub fn longest_from(&self, s: usize) -> Vec<f64> {
        let m = self.len();
        let mut d = vec![f64::NEG_INFINITY; m];
        d[s] = 0.0;
        let mut from = s;
        for _ in 0..(self.back.len() + 2) * 2 {
            for k in from.max(1)..m {
                if d[k - 1] > f64::NEG_INFINITY {
                    let a = d[k - 1] + self.w[k - 1];
                    if a > d[k] {
                        d[k] = a;
                    }
                }
            }
            let mut next_from = usize::MAX;
            for e in &self.back {
                if d[e.from] > f64::NEG_INFINITY {
                    let a = d[e.from] - e.limit;
                    if a > d[e.to] + TIME_EPS {
                        d[e.to] = a;
                        next_from = next_from.min(e.to + 1);
                    }
                }
            }
            if next_from == usize::MAX {
                break;
            }
            from = next_from;
        }
        d
    }
}

pub(crate) fn delays_of(inst: &Instance, seq: &[usize], times: &[f64]) -> Vec<f64> {
    seq.iter()
        .zip(times)
        .map(|(&v, &t)| {
            let nd = &inst.nodes[v];
            if nd.flexible {
                (t - nd.latest).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}

pub(crate) fn travel_of(inst: &Instance, seq: &[usize]) -> f64 {
    seq.windows(2).map(|p| inst.travel_cost[p[0]][p[1]]).sum()
}

/// Least schedule of an arbitrary node sequence (a whole trip or a piece of one).
pub fn least_schedule(inst: &Instance, seq: &[usize], closed: bool) -> Result<Schedule, Reject> {
    let g = TimeGraph::new(inst, seq, closed);
    let times = g.least()?;
    let delays = delays_of(inst, seq, &times);
    let penalty = inst.delay_rate * delays.iter().sum::<f64>();
    Ok(Schedule { times, delays, travel: travel_of(inst, seq), penalty })
}

/// Result of checking a complete depot-to-depot sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TripCheck {
    pub schedule: Schedule,
    pub covered: ReqSet,
    pub max_gamma: f64,
}

/// Check a complete trip: depots at both ends, every visited request picked
/// up once and dropped once afterwards, onboard risk `Γ ≤ ψ` at every node,
/// and a feasible schedule.
pub fn check_trip(inst: &Instance, seq: &[usize]) -> Result<TripCheck, Reject> {
    let n = inst.requests;
    if seq.len() < 2 || seq[0] != inst.origin() || *seq.last().unwrap() != inst.destination() {
        return Err(Reject::Elementarity);
    }
    let params = inst.robust_params();
    let mut open = ReqSet::EMPTY;
    let mut seen = ReqSet::EMPTY;
    let mut max_gamma: f64 = 0.0;
    for &v in &seq[1..seq.len() - 1] {
        if v == 0 || v > 2 * n {
            return Err(Reject::Elementarity);
        }
        let r = (v - 1) % n;
        if inst.is_pickup(v) {
            if seen.contains(r) {
                return Err(Reject::Elementarity);
            }
            seen.insert(r);
            open.insert(r);
            // canonical order so equal sets give identical floats
            let sums = LoadSums::of(open.iter().map(|o| inst.load(o)).collect::<Vec<_>>().iter());
            if !sums.feasible(inst.capacity, &params) {
                return Err(Reject::CapacityRisk);
            }
            max_gamma = max_gamma.max(sums.gamma(inst.capacity));
        } else {
            if !open.contains(r) {
                return Err(Reject::Elementarity);
            }
            open.remove(r);
        }
    }
    if !open.is_empty() || seen.is_empty() {
        return Err(Reject::Elementarity);
    }
    let schedule = least_schedule(inst, seq, true)?;
    Ok(TripCheck { schedule, covered: seen, max_gamma })
}
