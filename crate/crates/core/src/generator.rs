//! Seeded instance generators: Cordeau-style benchmark look-alikes and tiny
//! random instances for cross-checking against the oracle.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::instance::{Instance, Node, NodeKind};

/// Layout of a Cordeau "b" style instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub requests: usize,
    pub vehicles: usize,
    pub capacity: f64,
    pub max_ride: f64,
    /// Maximum route duration.
    pub duration: f64,
    /// Depot window end.
    pub horizon: f64,
    /// Width of the tight window on one end of each request.
    pub window: f64,
    pub max_load: u32,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(vehicles: usize, requests: usize, seed: u64) -> Self {
        GeneratorConfig {
            requests,
            vehicles,
            capacity: 6.0,
            max_ride: 45.0,
            duration: 480.0,
            horizon: 1440.0,
            window: 15.0,
            max_load: 6,
            seed,
        }
    }
}

fn node(id: usize, x: f64, y: f64, s: f64, load: f64, e: f64, l: f64, kind: NodeKind) -> Node {
    Node { id, x, y, service_duration: s, load, earliest: e, latest: l, kind, flexible: false }
}

/// Points in `[-10, 10]²`, depot at the centre, loads `1..=max_load`
/// with service time equal to the load. The first half of the requests
/// get a tight window at the drop-off, the second half at the pickup.
pub fn cordeau_like(cfg: &GeneratorConfig) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.requests;
    let mut pts = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        pts.push((rng.gen_range(-10.0..=10.0f64), rng.gen_range(-10.0..=10.0f64)));
    }
    let round = |v: f64| (v * 1000.0).round() / 1000.0;
    let mut nodes = vec![node(0, 0.0, 0.0, 0.0, 0.0, 0.0, cfg.horizon, NodeKind::DepotOrigin)];
    let mut pick = Vec::new();
    let mut drop = Vec::new();
    for r in 0..n {
        let q = rng.gen_range(1..=cfg.max_load) as f64;
        let (px, py) = (round(pts[r].0), round(pts[r].1));
        let (dx, dy) = (round(pts[n + r].0), round(pts[n + r].1));
        let direct = ((px - dx).powi(2) + (py - dy).powi(2)).sqrt();
        let start = rng.gen_range(60.0..=(cfg.duration + 60.0f64)).round();
        let (pw, dw) = if r < n / 2 {
            // outbound: tight arrival window
            let e = (start + q + direct).round();
            ((0.0, cfg.horizon), (e, e + cfg.window))
        } else {
            ((start, start + cfg.window), (0.0, cfg.horizon))
        };
        pick.push(node(r + 1, px, py, q, q, pw.0, pw.1, NodeKind::Pickup));
        drop.push(node(n + r + 1, dx, dy, q, -q, dw.0, dw.1, NodeKind::Dropoff));
    }
    nodes.extend(pick);
    nodes.extend(drop);
    nodes.push(node(2 * n + 1, 0.0, 0.0, 0.0, 0.0, 0.0, cfg.horizon, NodeKind::DepotDestination));
    Instance::from_parts(
        format!("g{}-{}-{}", cfg.vehicles, n, cfg.seed),
        cfg.vehicles,
        cfg.capacity,
        cfg.duration,
        vec![cfg.max_ride; n],
        nodes,
    )
}

/// Small random instance on a `[0, 10]²` grid with random windows and loads.
pub fn random_tiny(n: usize, vehicles: usize, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let capacity = rng.gen_range(2..=5) as f64;
    let pt = |rng: &mut ChaCha8Rng| (rng.gen_range(0..=10) as f64, rng.gen_range(0..=10) as f64);
    let depot = pt(&mut rng);
    let mut nodes = vec![node(0, depot.0, depot.1, 0.0, 0.0, 0.0, 200.0, NodeKind::DepotOrigin)];
    let mut pick = Vec::new();
    let mut drop = Vec::new();
    for r in 0..n {
        let q = rng.gen_range(1..=3) as f64;
        let p = pt(&mut rng);
        let d = pt(&mut rng);
        let s = rng.gen_range(0..=2) as f64;
        let e = rng.gen_range(0..=40) as f64;
        let w = rng.gen_range(5..=40) as f64;
        let direct = ((p.0 - d.0).powi(2) + (p.1 - d.1).powi(2)).sqrt();
        let de = (e + direct).floor() + rng.gen_range(0..=10) as f64;
        let dw = rng.gen_range(5..=40) as f64;
        pick.push(node(r + 1, p.0, p.1, s, q, e, e + w, NodeKind::Pickup));
        drop.push(node(n + r + 1, d.0, d.1, s, -q, de, de + dw, NodeKind::Dropoff));
    }
    nodes.extend(pick);
    nodes.extend(drop);
    nodes.push(node(2 * n + 1, depot.0, depot.1, 0.0, 0.0, 0.0, 200.0, NodeKind::DepotDestination));
    let ride = rng.gen_range(15..=40) as f64;
    let duration = rng.gen_range(60..=150) as f64;
    Instance::from_parts(format!("tiny-{n}-{vehicles}-{seed}"), vehicles, capacity, duration, vec![ride; n], nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    #[test]
    fn deterministic_for_seed() {
        let a = cordeau_like(&GeneratorConfig::new(2, 8, 3)).unwrap();
        let b = cordeau_like(&GeneratorConfig::new(2, 8, 3)).unwrap();
        assert_eq!(a, b);
        let c = cordeau_like(&GeneratorConfig::new(2, 8, 4)).unwrap();
        assert_ne!(a, c);
        assert_eq!(random_tiny(3, 2, 9).unwrap(), random_tiny(3, 2, 9).unwrap());
    }

    #[test]
    fn shape() {
        let inst = cordeau_like(&GeneratorConfig::new(3, 10, 1)).unwrap();
        assert_eq!(inst.nodes.len(), 22);
        for r in 0..10 {
            let p = &inst.nodes[inst.pickup(r)];
            let d = &inst.nodes[inst.dropoff(r)];
            assert_eq!(p.load, -d.load);
            assert!(p.load >= 1.0 && p.load <= 6.0);
            assert_eq!(p.service_duration, p.load);
            let tight = if r < 5 { d } else { p };
            assert_eq!(tight.latest - tight.earliest, 15.0);
        }
    }

    #[test]
    fn text_round_trip() {
        let inst = cordeau_like(&GeneratorConfig::new(2, 6, 5)).unwrap();
        let back = parse_instance(&inst.to_cordeau_text()).unwrap();
        assert_eq!(back.nodes.len(), inst.nodes.len());
        for (a, b) in back.nodes.iter().zip(&inst.nodes) {
            assert_eq!((a.x, a.y, a.load, a.latest), (b.x, b.y, b.load, b.latest));
        }
    }
}
