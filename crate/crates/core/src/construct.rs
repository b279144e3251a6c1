//! Greedy insertion for a starting plan.
//!
//! Requests are taken in order of their earliest window opening and put at
//! the cheapest feasible position of any route, opening a new route while
//! the fleet allows. The routes seed the column pool and, when they cover
//! everything, the incumbent.

use crate::instance::Instance;
use crate::pricing::Trip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn window_key(inst: &Instance, r: usize) -> f64 {
    let p = &inst.nodes[inst.pickup(r)];
    let d = &inst.nodes[inst.dropoff(r)];
    // tight drop-off windows say more about timing than the open pickup
    if d.latest - d.earliest < p.latest - p.earliest {
        d.earliest
    } else {
        p.earliest
    }
}

/// Cheapest feasible way to add request `r` to `route` (a full
/// depot-to-depot sequence). Returns the new trip.
fn best_insertion(inst: &Instance, route: &[usize], r: usize) -> Option<Trip> {
    let (p, d) = (inst.pickup(r), inst.dropoff(r));
    let mut best: Option<Trip> = None;
    let mut seq = Vec::with_capacity(route.len() + 2);
    for i in 1..route.len() {
        for j in i..route.len() {
            seq.clear();
            seq.extend_from_slice(&route[..i]);
            seq.push(p);
            seq.extend_from_slice(&route[i..j]);
            seq.push(d);
            seq.extend_from_slice(&route[j..]);
            if let Ok(t) = Trip::from_sequence(inst, &seq) {
                if best.as_ref().is_none_or(|b| t.cost < b.cost) {
                    best = Some(t);
                }
            }
        }
    }
    best
}

fn insert_in_order(inst: &Instance, order: &[usize]) -> (Vec<Trip>, usize) {
    let (o, dest) = (inst.origin(), inst.destination());
    let mut routes: Vec<Trip> = Vec::new();
    let mut served = 0;
    for &r in order {
        let mut best: Option<(usize, Trip, f64)> = None;
        for (k, t) in routes.iter().enumerate() {
            if let Some(nt) = best_insertion(inst, &t.sequence, r) {
                let delta = nt.cost - t.cost;
                if best.as_ref().is_none_or(|b| delta < b.2) {
                    best = Some((k, nt, delta));
                }
            }
        }
        if best.is_none() && routes.len() < inst.vehicles {
            // a fresh vehicle only when no existing route can take it
            if let Ok(t) = Trip::from_sequence(inst, &[o, inst.pickup(r), inst.dropoff(r), dest]) {
                best = Some((routes.len(), t, 0.0));
            }
        }
        match best {
            Some((k, t, _)) if k == routes.len() => routes.push(t),
            Some((k, t, _)) => routes[k] = t,
            None => continue,
        }
        served += 1;
    }
    (routes, served)
}

/// Restarts with shuffled orders when the window order leaves requests out.
const RESTARTS: u64 = 30;

/// Routes built by greedy insertion, and whether they serve every request.
/// Complete plans beat partial ones, then cost decides.
pub fn greedy_routes(inst: &Instance) -> (Vec<Trip>, bool) {
    let mut order: Vec<usize> = (0..inst.requests).collect();
    order.sort_by(|&a, &b| window_key(inst, a).total_cmp(&window_key(inst, b)).then(a.cmp(&b)));
    let (mut best, mut served) = insert_in_order(inst, &order);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..RESTARTS {
        if served == inst.requests {
            break;
        }
        // perturb the window order rather than shuffle it outright
        let mut keys: Vec<(f64, usize)> =
            (0..inst.requests).map(|r| (window_key(inst, r) + rng.gen_range(0.0..60.0), r)).collect();
        keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        order = keys.into_iter().map(|k| k.1).collect();
        let (routes, s) = insert_in_order(inst, &order);
        if s > served {
            best = routes;
            served = s;
        }
    }
    (best, served == inst.requests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{cordeau_like, random_tiny, GeneratorConfig};
    use crate::pricing::Trip;

    #[test]
    fn routes_are_feasible_and_disjoint() {
        for seed in 0..20 {
            let inst = random_tiny(5, 2, seed).unwrap();
            let (routes, complete) = greedy_routes(&inst);
            assert!(routes.len() <= inst.vehicles);
            let mut seen = crate::ReqSet::EMPTY;
            for t in &routes {
                assert!(Trip::from_sequence(&inst, &t.sequence).is_ok());
                assert!(!seen.intersects(t.covered));
                seen = seen.union(t.covered);
            }
            assert_eq!(complete, seen.len() == inst.requests);
        }
    }

    #[test]
    fn covers_a_generated_day() {
        let inst = cordeau_like(&GeneratorConfig::new(3, 18, 1)).unwrap();
        let (routes, complete) = greedy_routes(&inst);
        assert!(complete);
        assert!(routes.len() <= 3);
    }
}
