//! Problem data: nodes, travel matrices, fleet, and the mode switches
//! (time flexibility, demand uncertainty) layered on top of a parsed file.
//!
//! Node numbering follows the usual dial-a-ride layout: `0` is the origin
//! depot, `1..=n` are pickups, `n+1..=2n` the matching drop-offs and
//! `2n+1` the destination depot.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::robustness::{RobustParams, UncertainLoad};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    DepotOrigin,
    Pickup,
    Dropoff,
    DepotDestination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub service_duration: f64,
    /// Signed passenger count; drop-offs carry the negated pickup load.
    pub load: f64,
    pub earliest: f64,
    pub latest: f64,
    pub kind: NodeKind,
    /// Soft window: `latest` may be exceeded at a delay penalty.
    pub flexible: bool,
}

/// Which problem variant is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Deterministic, hard windows.
    #[default]
    C,
    /// Time-flexible: some windows are soft.
    TF,
    /// Robust capacity under uncertain loads.
    R,
    /// Both.
    TFR,
}

impl Mode {
    pub fn flexible(self) -> bool {
        matches!(self, Mode::TF | Mode::TFR)
    }

    pub fn robust(self) -> bool {
        matches!(self, Mode::R | Mode::TFR)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::C => "c",
            Mode::TF => "tf",
            Mode::R => "r",
            Mode::TFR => "tfr",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Mode::C),
            "tf" => Ok(Mode::TF),
            "r" => Ok(Mode::R),
            "tfr" => Ok(Mode::TFR),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeConfig {
    pub mode: Mode,
    pub flex_ratio: f64,
    pub psi: f64,
    pub capacity_override: Option<f64>,
    pub rng_seed: u64,
}

impl Default for ModeConfig {
    fn default() -> Self {
        Self { mode: Mode::C, flex_ratio: 0.0, psi: 0.01, capacity_override: None, rng_seed: 0 }
    }
}

impl ModeConfig {
    pub fn new(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn flex(mut self, ratio: f64) -> Self {
        self.flex_ratio = ratio;
        self
    }

    pub fn psi(mut self, psi: f64) -> Self {
        self.psi = psi;
        self
    }

    pub fn capacity(mut self, m: f64) -> Self {
        self.capacity_override = Some(m);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub vehicles: usize,
    pub capacity: f64,
    pub requests: usize,
    /// Maximum route duration.
    pub horizon: f64,
    pub max_ride: Vec<f64>,
    pub nodes: Vec<Node>,
    /// Per request (indexed `0..n`), when uncertainty data is attached.
    pub uncertain: Option<Vec<UncertainLoad>>,
    pub travel_time: Vec<Vec<f64>>,
    pub travel_cost: Vec<Vec<f64>>,
    pub delay_rate: f64,
    pub mode: Mode,
    pub psi: f64,
    pub flex_ratio: f64,
}

fn num(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("{what}: '{tok}' is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("{what}: '{tok}' is not finite") });
    }
    Ok(v)
}

fn count(tok: &str, line: usize, what: &str) -> Result<usize> {
    let v = num(tok, line, what)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::Parse { line, message: format!("{what}: '{tok}' is not a count") });
    }
    Ok(v as usize)
}

/// Parse a file in the Cordeau dial-a-ride layout.
///
/// The header is `|K| n T M L`; each following line is
/// `id x y service load earliest latest`. Files with only `2n+1` node
/// lines get the destination depot cloned from the origin.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() < 5 {
        return Err(Error::Parse {
            line: hline,
            message: format!("header needs 5 fields '|K| n T M L', found {}", h.len()),
        });
    }
    let vehicles = count(h[0], hline, "vehicles")?;
    let mut n = count(h[1], hline, "requests")?;
    let horizon = num(h[2], hline, "horizon")?;
    let capacity = num(h[3], hline, "capacity")?;
    let max_ride = num(h[4], hline, "max ride")?;

    let mut raw = Vec::new();
    for (ln, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() < 7 {
            return Err(Error::Parse {
                line: ln,
                message: format!("node line needs 7 fields, found {}", f.len()),
            });
        }
        let mut vals = [0.0; 7];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = num(f[k], ln, "node field")?;
        }
        raw.push((ln, vals));
    }
    // some copies of the data list 2n in the header
    if n % 2 == 0 && raw.len() != 2 * n + 1 && raw.len() != 2 * n + 2 && (raw.len() == n + 1 || raw.len() == n + 2) {
        n /= 2;
    }
    if raw.len() != 2 * n + 1 && raw.len() != 2 * n + 2 {
        let line = raw.last().map(|r| r.0).unwrap_or(hline);
        return Err(Error::Parse {
            line,
            message: format!("expected {} or {} node lines for n = {n}, found {}", 2 * n + 1, 2 * n + 2, raw.len()),
        });
    }
    if raw.len() == 2 * n + 1 {
        let (ln, mut v) = raw[0];
        v[0] = (2 * n + 1) as f64;
        raw.push((ln, v));
    }

    let mut nodes = Vec::with_capacity(2 * n + 2);
    for (idx, (ln, v)) in raw.iter().enumerate() {
        let kind = if idx == 0 {
            NodeKind::DepotOrigin
        } else if idx <= n {
            NodeKind::Pickup
        } else if idx <= 2 * n {
            NodeKind::Dropoff
        } else {
            NodeKind::DepotDestination
        };
        if v[5] > v[6] {
            return Err(Error::Parse { line: *ln, message: format!("earliest {} exceeds latest {}", v[5], v[6]) });
        }
        if v[3] < 0.0 {
            return Err(Error::Parse { line: *ln, message: "negative service duration".into() });
        }
        let load = v[4];
        match kind {
            NodeKind::DepotOrigin | NodeKind::DepotDestination if load != 0.0 => {
                return Err(Error::Parse { line: *ln, message: format!("depot load must be 0, got {load}") });
            }
            NodeKind::Pickup if load < 0.0 => {
                return Err(Error::Parse { line: *ln, message: format!("pickup load must be nonnegative, got {load}") });
            }
            NodeKind::Dropoff => {
                let p = raw[idx - n].1[4];
                if load != -p {
                    return Err(Error::Parse {
                        line: *ln,
                        message: format!("drop-off load {load} does not mirror pickup load {p}"),
                    });
                }
            }
            _ => {}
        }
        nodes.push(Node {
            id: idx,
            x: v[1],
            y: v[2],
            service_duration: v[3],
            load,
            earliest: v[5],
            latest: v[6],
            kind,
            flexible: false,
        });
    }

    Instance::from_parts(String::new(), vehicles, capacity, horizon, vec![max_ride; n], nodes)
}

/// Read an uncertainty sidecar: one `id mean lo hi` line per pickup node.
pub fn parse_uncertainty(text: &str, inst: &Instance) -> Result<Vec<UncertainLoad>> {
    let n = inst.requests;
    let mut out: Vec<UncertainLoad> = (0..n).map(|i| inst.default_uncertainty(i)).collect();
    for (i, l) in text.lines().enumerate() {
        let ln = i + 1;
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::Parse { line: ln, message: "expected 'id mean lo hi'".into() });
        }
        let id = count(f[0], ln, "pickup id")?;
        if id == 0 || id > n {
            return Err(Error::Parse { line: ln, message: format!("{id} is not a pickup node") });
        }
        let u = UncertainLoad::new(num(f[1], ln, "mean")?, num(f[2], ln, "lo")?, num(f[3], ln, "hi")?)
            .map_err(|e| Error::Parse { line: ln, message: e.to_string() })?;
        if u.lo < 0.0 {
            return Err(Error::Parse { line: ln, message: "negative lower support".into() });
        }
        out[id - 1] = u;
    }
    Ok(out)
}

fn euclid(a: &Node, b: &Node) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

impl Instance {
    /// Assemble an instance from nodes and compute Euclidean matrices.
    pub fn from_parts(
        name: String,
        vehicles: usize,
        capacity: f64,
        horizon: f64,
        max_ride: Vec<f64>,
        mut nodes: Vec<Node>,
    ) -> Result<Instance> {
        if nodes.len() < 2 || !nodes.len().is_multiple_of(2) {
            return Err(Error::Config(format!("need 2n+2 nodes, got {}", nodes.len())));
        }
        let n = (nodes.len() - 2) / 2;
        if max_ride.len() != n {
            return Err(Error::Config("max_ride needs one entry per request".into()));
        }
        if n > crate::MAX_REQUESTS {
            return Err(Error::Config(format!("at most {} requests are supported", crate::MAX_REQUESTS)));
        }
        let m = nodes.len();
        let mut tt = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    tt[i][j] = euclid(&nodes[i], &nodes[j]);
                }
            }
        }
        // Ride limits and direct travel bound the earliest service starts.
        for r in 0..n {
            let (p, d) = (r + 1, r + 1 + n);
            let e_drop = nodes[d].earliest.max(nodes[p].earliest + nodes[p].service_duration + tt[p][d]);
            let e_pick = nodes[p].earliest.max(e_drop - max_ride[r]);
            if e_drop <= nodes[d].latest {
                nodes[d].earliest = e_drop;
            }
            if e_pick <= nodes[p].latest {
                nodes[p].earliest = e_pick;
            }
        }
        // The vehicle never needs to leave before the first pickup can be reached.
        let first = (1..=n).map(|j| nodes[j].earliest - tt[0][j]).fold(f64::INFINITY, f64::min);
        if first.is_finite() && first > nodes[0].earliest && first <= nodes[0].latest {
            nodes[0].earliest = first;
        }
        Ok(Instance {
            name,
            vehicles,
            capacity,
            requests: n,
            horizon,
            max_ride,
            nodes,
            uncertain: None,
            travel_cost: tt.clone(),
            travel_time: tt,
            delay_rate: 1.0,
            mode: Mode::C,
            psi: 0.01,
            flex_ratio: 0.0,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Attach explicit uncertainty data (one entry per request).
    pub fn with_uncertainty(mut self, loads: Vec<UncertainLoad>) -> Result<Self> {
        if loads.len() != self.requests {
            return Err(Error::Config(format!("{} uncertain loads for {} requests", loads.len(), self.requests)));
        }
        self.uncertain = Some(loads);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.requests
    }

    pub fn origin(&self) -> usize {
        0
    }

    pub fn destination(&self) -> usize {
        2 * self.requests + 1
    }

    pub fn pickup(&self, r: usize) -> usize {
        r + 1
    }

    pub fn dropoff(&self, r: usize) -> usize {
        r + 1 + self.requests
    }

    /// Request served at a node, if any.
    pub fn request_of(&self, node: usize) -> Option<usize> {
        let n = self.requests;
        if node >= 1 && node <= 2 * n {
            Some((node - 1) % n)
        } else {
            None
        }
    }

    pub fn is_pickup(&self, node: usize) -> bool {
        node >= 1 && node <= self.requests
    }

    pub fn is_dropoff(&self, node: usize) -> bool {
        node > self.requests && node <= 2 * self.requests
    }

    /// Whether the chance-constrained capacity model is active.
    pub fn robust(&self) -> bool {
        self.mode.robust()
    }

    pub fn robust_params(&self) -> RobustParams {
        RobustParams::new(self.psi).unwrap_or(RobustParams { psi: self.psi, gamma: 0.0 })
    }

    /// Load of request `r` as seen by the capacity model.
    pub fn load(&self, r: usize) -> UncertainLoad {
        match (&self.uncertain, self.robust()) {
            (Some(u), true) => u[r],
            _ => UncertainLoad::fixed(self.nodes[self.pickup(r)].load),
        }
    }

    fn default_uncertainty(&self, r: usize) -> UncertainLoad {
        let mean = self.nodes[self.pickup(r)].load;
        UncertainLoad { mean, lo: (mean - 1.0).max(0.0), hi: mean + 1.0 }
    }

    /// Latest admissible service start; soft windows stretch to the depot's closing time.
    pub fn upper(&self, node: usize) -> f64 {
        let nd = &self.nodes[node];
        if nd.flexible {
            self.nodes[self.destination()].latest.max(nd.latest)
        } else {
            nd.latest
        }
    }

    /// Sub-instance holding only the given requests (in the given order),
    /// with travel data, flags and loads carried over unchanged.
    pub fn restrict(&self, requests: &[usize]) -> Instance {
        let k = requests.len();
        let mut keep = vec![self.origin()];
        keep.extend(requests.iter().map(|&r| self.pickup(r)));
        keep.extend(requests.iter().map(|&r| self.dropoff(r)));
        keep.push(self.destination());
        let sub = |m: &Vec<Vec<f64>>| keep.iter().map(|&i| keep.iter().map(|&j| m[i][j]).collect()).collect();
        let nodes = keep
            .iter()
            .enumerate()
            .map(|(id, &i)| Node { id, ..self.nodes[i].clone() })
            .collect();
        Instance {
            name: self.name.clone(),
            vehicles: self.vehicles,
            capacity: self.capacity,
            requests: k,
            horizon: self.horizon,
            max_ride: requests.iter().map(|&r| self.max_ride[r]).collect(),
            nodes,
            uncertain: self.uncertain.as_ref().map(|u| requests.iter().map(|&r| u[r]).collect()),
            travel_time: sub(&self.travel_time),
            travel_cost: sub(&self.travel_cost),
            delay_rate: self.delay_rate,
            mode: self.mode,
            psi: self.psi,
            flex_ratio: self.flex_ratio,
        }
    }

    pub fn max_arc_cost(&self) -> f64 {
        self.travel_cost.iter().flatten().fold(0.0, |a: f64, &b| a.max(b))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        Ok(serde_json::from_str(text)?)
    }

    /// Emit the Cordeau text layout (mode annotations are not part of it).
    pub fn to_cordeau_text(&self) -> String {
        let mut s = String::new();
        let ride = self.max_ride.first().copied().unwrap_or(0.0);
        let _ = writeln!(s, "{} {} {} {} {}", self.vehicles, self.requests, self.horizon, self.capacity, ride);
        for nd in &self.nodes {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {}",
                nd.id, nd.x, nd.y, nd.service_duration, nd.load, nd.earliest, nd.latest
            );
        }
        s
    }
}

/// Layer the mode configuration onto a parsed instance.
pub fn apply_mode(inst: &Instance, cfg: &ModeConfig) -> Result<Instance> {
    if !(0.0..=1.0).contains(&cfg.flex_ratio) || cfg.flex_ratio.is_nan() {
        return Err(Error::Config(format!("flex ratio must lie in [0, 1], got {}", cfg.flex_ratio)));
    }
    if !cfg.mode.flexible() && cfg.flex_ratio != 0.0 {
        return Err(Error::Config(format!("mode {} takes no flex ratio", cfg.mode)));
    }
    let params = RobustParams::new(cfg.psi)?;
    let mut out = inst.clone();
    out.mode = cfg.mode;
    out.psi = cfg.psi;
    out.flex_ratio = cfg.flex_ratio;
    for nd in &mut out.nodes {
        nd.flexible = false;
    }

    let n = out.requests;
    if cfg.mode.flexible() {
        let k = (cfg.flex_ratio * (2 * n) as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut picked = rand::seq::index::sample(&mut rng, 2 * n, k).into_vec();
        picked.sort_unstable();
        for i in picked {
            out.nodes[i + 1].flexible = true;
        }
    }
    if cfg.mode.robust() && out.uncertain.is_none() {
        let loads = (0..n).map(|r| out.default_uncertainty(r)).collect();
        out.uncertain = Some(loads);
    }
    if let Some(m) = cfg.capacity_override {
        let worst = (0..n)
            .map(|r| {
                let l = out.load(r);
                l.mean + if out.robust() { params.gamma * l.width() } else { 0.0 }
            })
            .fold(0.0, f64::max);
        if m < worst - 1e-9 {
            return Err(Error::Config(format!(
                "capacity {m} is below the largest single inflated load {worst:.6}"
            )));
        }
        out.capacity = m;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TINY: &str = "\
1 2 480 6 30
0 0 0 0 0 0 1440
1 3 4 1 2 0 1440
2 6 8 1 1 0 1440
3 0 4 1 -2 10 60
4 3 0 1 -1 0 1440
";

    #[test]
    fn header_fields() {
        let mut text = String::from("2 16 480 6 45\n");
        for i in 0..=33 {
            let load = if i == 0 || i == 33 {
                0
            } else if i <= 16 {
                1
            } else {
                -1
            };
            text.push_str(&format!("{i} {i} 0 0 {load} 0 1440\n"));
        }
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.vehicles, 2);
        assert_eq!(inst.requests, 16);
        assert_eq!(inst.horizon, 480.0);
        assert_eq!(inst.capacity, 6.0);
        assert!(inst.max_ride.iter().all(|&b| b == 45.0));
        assert_eq!(inst.nodes.len(), 34);
    }

    #[test]
    fn clones_destination_depot() {
        let inst = parse_instance(TINY).unwrap();
        assert_eq!(inst.nodes.len(), 6);
        assert_eq!(inst.nodes[5].kind, NodeKind::DepotDestination);
        assert_eq!(inst.nodes[5].x, 0.0);
        assert_eq!(inst.travel_time[0][1], 5.0);
        assert_eq!(inst.travel_time[1][0], 5.0);
        assert_eq!(inst.travel_time[3][3], 0.0);
    }

    #[test]
    fn header_with_node_count() {
        // header lists 2n instead of n
        let text = TINY.replacen("1 2 480", "1 4 480", 1);
        let inst = parse_instance(&text).unwrap();
        assert_eq!(inst.requests, 2);
    }

    #[test]
    fn load_mismatch_names_line() {
        let text = TINY.replace("4 3 0 1 -1 0 1440", "4 3 0 1 -2 0 1440").replace("2 6 8 1 1 0", "2 6 8 1 2 0");
        assert!(parse_instance(&text).is_ok());
        let bad = TINY.replace("3 0 4 1 -2 10 60", "3 0 4 1 -1 10 60");
        match parse_instance(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(matches!(parse_instance("2 16 480\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_instance("2 x 480 6 45\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_instance(""), Err(Error::Parse { .. })));
        let short = TINY.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse_instance(&short), Err(Error::Parse { .. })));
    }

    #[test]
    fn origin_tightening_is_sound() {
        let text = "1 1 480 6 30\n0 0 0 0 0 0 1440\n1 3 4 0 1 100 200\n2 0 4 0 -1 0 1440\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.nodes[0].earliest, 95.0);
    }

    #[test]
    fn mode_flexibility() {
        let inst = parse_instance(TINY).unwrap();
        let c = apply_mode(&inst, &ModeConfig::new(Mode::C)).unwrap();
        assert!(c.nodes.iter().all(|n| !n.flexible));
        let tf = apply_mode(&inst, &ModeConfig::new(Mode::TF).flex(0.5).seed(3)).unwrap();
        assert_eq!(tf.nodes.iter().filter(|n| n.flexible).count(), 2);
        assert!(!tf.nodes[0].flexible && !tf.nodes[5].flexible);
        let again = apply_mode(&inst, &ModeConfig::new(Mode::TF).flex(0.5).seed(3)).unwrap();
        assert_eq!(tf, again);
        assert!(apply_mode(&inst, &ModeConfig::new(Mode::TF).flex(1.5)).is_err());
        assert!(apply_mode(&inst, &ModeConfig::new(Mode::C).flex(0.5)).is_err());
    }

    #[test]
    fn mode_uncertainty() {
        let inst = parse_instance(TINY).unwrap();
        let r = apply_mode(&inst, &ModeConfig::new(Mode::R).capacity(13.0)).unwrap();
        assert_eq!(r.capacity, 13.0);
        assert_eq!(r.load(0), UncertainLoad { mean: 2.0, lo: 1.0, hi: 3.0 });
        let c = apply_mode(&inst, &ModeConfig::new(Mode::C)).unwrap();
        assert_eq!(c.load(0), UncertainLoad::fixed(2.0));
        // 2 + 1.517427 * 2 = 5.03 > 5
        assert!(apply_mode(&inst, &ModeConfig::new(Mode::R).capacity(5.0)).is_err());
        assert!(apply_mode(&inst, &ModeConfig::new(Mode::C).capacity(1.0)).is_err());
    }

    #[test]
    fn sidecar() {
        let inst = parse_instance(TINY).unwrap();
        let u = parse_uncertainty("# id mean lo hi\n2 1 0.5 2\n", &inst).unwrap();
        assert_eq!(u[1], UncertainLoad { mean: 1.0, lo: 0.5, hi: 2.0 });
        assert_eq!(u[0], UncertainLoad { mean: 2.0, lo: 1.0, hi: 3.0 });
        assert!(matches!(parse_uncertainty("\n3 1 0 2\n", &inst), Err(Error::Parse { line: 2, .. })));
        assert!(parse_uncertainty("1 5 0 2\n", &inst).is_err());
    }

    #[test]
    fn json_round_trip() {
        let inst = apply_mode(&parse_instance(TINY).unwrap(), &ModeConfig::new(Mode::TFR).flex(0.5)).unwrap();
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn text_round_trip() {
        let inst = parse_instance(TINY).unwrap();
        let back = parse_instance(&inst.to_cordeau_text()).unwrap();
        assert_eq!(inst, back);
    }
}
