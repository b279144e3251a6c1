//! Monte-Carlo replay of a plan under random passenger counts, and an
//! empirical audit of the chance constraint.
//!
//! A scenario adds an offset drawn uniformly from a small menu (by default
//! `{-1, 0, 1, 2, 3, 4}`) to every booked load. Vehicles follow their
//! planned sequence; a pickup that would overflow the vehicle loses the
//! whole request, and its drop-off is passed without service.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::search::RouteReport;

pub const DEFAULT_OFFSETS: [f64; 6] = [-1.0, 0.0, 1.0, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenarios: usize,
    pub seed: u64,
    /// Offsets drawn with equal probability.
    pub offsets: Vec<f64>,
}

impl SimConfig {
    pub fn new(scenarios: usize, seed: u64) -> Self {
        SimConfig { scenarios, seed, offsets: DEFAULT_OFFSETS.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario_id: usize,
    pub served: Vec<usize>,
    pub lost: Vec<usize>,
    /// Onboard count after each node, per route.
    pub load_trace: Vec<Vec<f64>>,
    /// Total mileage.
    pub tm: f64,
    /// Travel time.
    pub t: f64,
    /// Mean waiting per request.
    pub wt: f64,
    /// Travel plus total waiting.
    pub tt: f64,
}

impl ScenarioResult {
    pub fn service_rate(&self) -> f64 {
        let total = self.served.len() + self.lost.len();
        if total == 0 {
            100.0
        } else {
            100.0 * self.served.len() as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(v: &[f64]) -> Stat {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub scenarios: usize,
    pub seed: u64,
    pub requests: usize,
    pub sr: Stat,
    pub tm: Stat,
    pub t: Stat,
    pub wt: Stat,
    pub tt: Stat,
}

/// Offsets for every (scenario, request); independent of the plan so two
/// plans can be compared on the same stream.
pub fn draw_offsets(cfg: &SimConfig, requests: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.scenarios)
        .map(|_| (0..requests).map(|_| cfg.offsets[rng.gen_range(0..cfg.offsets.len())]).collect())
        .collect()
}

/// Replay one scenario given realized loads per request.
pub fn replay(inst: &Instance, routes: &[RouteReport], realized: &[f64], scenario_id: usize) -> ScenarioResult {
    let n = inst.requests;
    let mut lost = vec![false; n];
    let mut res = ScenarioResult {
        scenario_id,
        served: Vec::new(),
        lost: Vec::new(),
        load_trace: Vec::new(),
        tm: 0.0,
        t: 0.0,
        wt: 0.0,
        tt: 0.0,
    };
    let mut waiting = 0.0;
    for route in routes {
        let seq = &route.sequence;
        let mut onboard = 0.0;
        let mut trace = Vec::with_capacity(seq.len());
        let mut depart = route.times.first().copied().unwrap_or(0.0) + inst.nodes[seq[0]].service_duration;
        trace.push(0.0);
        for k in 1..seq.len() {
            let (a, v) = (seq[k - 1], seq[k]);
            res.tm += inst.travel_cost[a][v];
            res.t += inst.travel_time[a][v];
            let arrival = depart + inst.travel_time[a][v];
            let mut serve = true;
            if let Some(r) = inst.request_of(v) {
                if inst.is_pickup(v) {
                    if onboard + realized[r] > inst.capacity + 1e-9 {
                        lost[r] = true;
                        serve = false;
                    } else {
                        onboard += realized[r];
                    }
                } else if lost[r] {
                    serve = false;
                } else {
                    onboard -= realized[r];
                }
            }
            depart = if serve {
                let start = arrival.max(route.times.get(k).copied().unwrap_or(arrival));
                if inst.request_of(v).is_some() {
                    waiting += start - arrival;
                }
                start + inst.nodes[v].service_duration
            } else {
                arrival
            };
            trace.push(onboard);
        }
        res.load_trace.push(trace);
    }
    let mut visited = vec![false; n];
    for route in routes {
        for &v in &route.sequence {
            if let Some(r) = inst.request_of(v) {
                visited[r] = true;
            }
        }
    }
    for r in 0..n {
        if lost[r] || !visited[r] {
            res.lost.push(r);
        } else {
            res.served.push(r);
        }
    }
    res.wt = if n > 0 { waiting / n as f64 } else { 0.0 };
    res.tt = res.t + waiting;
    res
}

/// Run the scenario stream over a plan.
pub fn simulate(inst: &Instance, routes: &[RouteReport], cfg: &SimConfig) -> Result<(Vec<ScenarioResult>, SimSummary)> {
    if cfg.scenarios == 0 {
        return Err(Error::Domain("at least one scenario is required".into()));
    }
    if cfg.offsets.is_empty() {
        return Err(Error::Domain("offset menu is empty".into()));
    }
    let n = inst.requests;
    let booked: Vec<f64> = (0..n).map(|r| inst.nodes[inst.pickup(r)].load).collect();
    let offsets = draw_offsets(cfg, n);
    let results: Vec<ScenarioResult> = offsets
        .iter()
        .enumerate()
        .map(|(s, g)| {
            let realized: Vec<f64> = booked.iter().zip(g).map(|(b, o)| (b + o).max(0.0)).collect();
            replay(inst, routes, &realized, s)
        })
        .collect();
    let col = |f: fn(&ScenarioResult) -> f64| Stat::of(&results.iter().map(f).collect::<Vec<_>>());
    let summary = SimSummary {
        scenarios: cfg.scenarios,
        seed: cfg.seed,
        requests: n,
        sr: col(|r| r.service_rate()),
        tm: col(|r| r.tm),
        t: col(|r| r.t),
        wt: col(|r| r.wt),
        tt: col(|r| r.tt),
    };
    Ok((results, summary))
}

/// Per-scenario CSV: `scenario_id,served,lost,TM,T,WT,TT`.
pub fn write_csv<W: Write>(results: &[ScenarioResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario_id", "served", "lost", "TM", "T", "WT", "TT"])?;
    for r in results {
        w.write_record([
            r.scenario_id.to_string(),
            r.served.len().to_string(),
            r.lost.len().to_string(),
            format!("{:.6}", r.tm),
            format!("{:.6}", r.t),
            format!("{:.6}", r.wt),
            format!("{:.6}", r.tt),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub sequence: Vec<usize>,
    pub violation_rate: f64,
    pub psi: f64,
    /// Three binomial standard deviations at `ψ`.
    pub margin: f64,
    pub passes: bool,
}

/// Sample every load uniformly on its support and count overflows per trip.
pub fn hoeffding_audit(inst: &Instance, trips: &[Vec<usize>], samples: usize, seed: u64) -> Result<Vec<AuditResult>> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let psi = inst.psi;
    let margin = 3.0 * (psi * (1.0 - psi) / samples as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trips.len());
    for seq in trips {
        let reqs: Vec<usize> = seq.iter().filter(|&&v| inst.is_pickup(v)).map(|&v| v - 1).collect();
        let mut q = vec![0.0; inst.requests];
        let mut bad = 0usize;
        for _ in 0..samples {
            for &r in &reqs {
                let l = inst.load(r);
                q[r] = if l.hi > l.lo { rng.gen_range(l.lo..=l.hi) } else { l.mean };
            }
            let mut onboard = 0.0;
            let mut over = false;
            for &v in seq {
                if let Some(r) = inst.request_of(v) {
                    if inst.is_pickup(v) {
                        onboard += q[r];
                        over |= onboard > inst.capacity + 1e-9;
                    } else {
                        onboard -= q[r];
                    }
                }
            }
            bad += over as usize;
        }
        let rate = bad as f64 / samples as f64;
        out.push(AuditResult { sequence: seq.clone(), violation_rate: rate, psi, margin, passes: rate <= psi + margin });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{apply_mode, parse_instance, Mode, ModeConfig};
    use crate::pricing::Trip;

    fn three(loads: [f64; 3]) -> Instance {
        let mut s = String::from("1 3 480 6 100\n0 0 0 0 0 0 500\n");
        for r in 0..3 {
            s.push_str(&format!("{} {} 0 0 {} 0 500\n", r + 1, r + 1, loads[r]));
        }
        for r in 0..3 {
            s.push_str(&format!("{} {} 0 0 {} 0 500\n", r + 4, r + 5, -loads[r]));
        }
        parse_instance(&s).unwrap()
    }

    fn route(inst: &Instance, seq: &[usize]) -> RouteReport {
        let t = Trip::from_sequence(inst, seq).unwrap();
        RouteReport { sequence: t.sequence, times: t.times, delays: t.delays }
    }

    #[test]
    fn zero_offsets_serve_everything() {
        let inst = three([2.0, 2.0, 2.0]);
        let plan = vec![route(&inst, &[0, 1, 2, 3, 4, 5, 6, 7])];
        let cfg = SimConfig { scenarios: 5, seed: 1, offsets: vec![0.0] };
        let (res, sum) = simulate(&inst, &plan, &cfg).unwrap();
        assert_eq!(res.len(), 5);
        assert_eq!(sum.sr.mean, 100.0);
        assert_eq!(sum.sr.std, 0.0);
        assert!(res[0].load_trace[0].iter().all(|&l| l <= 6.0));
        // travel 1+1+1+2+1+1+7 = 14, no waiting
        assert_eq!(res[0].tm, 14.0);
        assert_eq!(res[0].tt, res[0].t);
    }

    #[test]
    fn overflow_loses_request() {
        // onboard 5, next booked 1 realized 3
        let inst = three([5.0, 1.0, 0.0]);
        let plan = vec![route(&inst, &[0, 1, 2, 4, 5, 3, 6, 7])];
        let r = replay(&inst, &plan, &[5.0, 3.0, 0.0], 0);
        assert_eq!(r.lost, vec![1]);
        assert_eq!(r.served, vec![0, 2]);
        assert!(r.load_trace[0].iter().all(|&l| l <= 6.0));
    }

    #[test]
    fn larger_offsets_can_raise_service_rate() {
        // shared rides: bigger first request crowds out fewer others
        let inst = three([6.0, 1.0, 1.0]);
        // overbooked on purpose, so build the route by hand
        let plan = vec![RouteReport { sequence: vec![0, 1, 2, 3, 4, 5, 6, 7], times: vec![], delays: vec![] }];
        let low = replay(&inst, &plan, &[6.0, 1.0, 1.0], 0);
        let high = replay(&inst, &plan, &[7.0, 2.0, 2.0], 0);
        assert_eq!(low.served.len(), 1);
        assert_eq!(high.served.len(), 2);
    }

    #[test]
    fn shifted_offsets_never_help_without_sharing() {
        let inst = three([3.0, 4.0, 5.0]);
        let plan = vec![route(&inst, &[0, 1, 4, 2, 5, 3, 6, 7])];
        for seed in 0..20 {
            let base = SimConfig { scenarios: 30, seed, offsets: DEFAULT_OFFSETS.to_vec() };
            let up = SimConfig { offsets: DEFAULT_OFFSETS.iter().map(|o| o + 1.0).collect(), ..base.clone() };
            let a = simulate(&inst, &plan, &base).unwrap().1.sr.mean;
            let b = simulate(&inst, &plan, &up).unwrap().1.sr.mean;
            assert!(b <= a + 1e-12);
        }
    }

    #[test]
    fn waiting_identity() {
        let text = "1 1 480 6 100\n0 0 0 0 0 0 500\n1 1 0 0 1 10 500\n2 2 0 0 -1 0 500\n";
        let inst = parse_instance(text).unwrap();
        // plan starts at the depot at time 0 to force waiting
        let mut plan = route(&inst, &[0, 1, 2, 3]);
        plan.times[0] = 0.0;
        let r = replay(&inst, &[plan], &[1.0], 0);
        assert_eq!(r.wt, 9.0);
        assert_eq!(r.tt, r.t + 9.0);
    }

    #[test]
    fn deterministic_output() {
        let inst = three([2.0, 2.0, 2.0]);
        let plan = vec![route(&inst, &[0, 1, 2, 3, 4, 5, 6, 7])];
        let cfg = SimConfig::new(50, 7);
        let (a, sa) = simulate(&inst, &plan, &cfg).unwrap();
        let (b, sb) = simulate(&inst, &plan, &cfg).unwrap();
        assert_eq!(sa, sb);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_csv(&a, &mut ca).unwrap();
        write_csv(&b, &mut cb).unwrap();
        assert_eq!(ca, cb);
        assert!(String::from_utf8(ca).unwrap().starts_with("scenario_id,served,lost,TM,T,WT,TT\n"));
        assert!(simulate(&inst, &plan, &SimConfig::new(0, 7)).is_err());
    }

    #[test]
    fn audit_rates() {
        let inst = three([2.0, 2.0, 2.0]);
        let trips = vec![vec![0, 1, 2, 3, 4, 5, 6, 7]];
        let det = hoeffding_audit(&inst, &trips, 1000, 3).unwrap();
        assert_eq!(det[0].violation_rate, 0.0);
        // robust at the inflated boundary: 6 + γ·6 = M
        let psi = 0.05;
        let gamma = (-(psi as f64).ln() / 2.0).sqrt();
        let r = apply_mode(&inst, &ModeConfig::new(Mode::R).psi(psi).capacity(6.0 + 6.0 * gamma)).unwrap();
        let a = hoeffding_audit(&r, &trips, 100_000, 3).unwrap();
        assert!(a[0].passes);
        assert!(a[0].violation_rate < psi);
    }
}
