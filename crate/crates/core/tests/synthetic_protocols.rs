//! The benchmark protocols replayed on generated Cordeau-style days.

use ccdarp::generator::{cordeau_like, GeneratorConfig};
use ccdarp::search::SolveStatus;
use ccdarp::simulator::hoeffding_audit;
use ccdarp::{apply_mode, solve_bcp, Instance, Mode, ModeConfig, SolveConfig, SolveReport};

fn day(vehicles: usize, requests: usize, seed: u64) -> Instance {
    cordeau_like(&GeneratorConfig::new(vehicles, requests, seed)).unwrap()
}

fn solve(base: &Instance, cfg: &ModeConfig) -> (Instance, SolveReport) {
    let inst = apply_mode(base, cfg).unwrap();
    let rep = solve_bcp(&inst, &SolveConfig { time_limit: 120.0, ..Default::default() }).unwrap();
    assert_ne!(rep.status, SolveStatus::Limit, "{} {}", inst.name, inst.mode);
    (inst, rep)
}

#[test]
fn soft_windows_never_cost_more() {
    let mut compared = 0;
    for seed in 1..=4 {
        let base = day(2, 12, seed);
        let (_, c) = solve(&base, &ModeConfig::new(Mode::C));
        let (_, tf) = solve(&base, &ModeConfig::new(Mode::TF).flex(0.5).seed(seed));
        if let Some(zc) = c.objective {
            let ztf = tf.objective.expect("a hard-window plan stays feasible");
            assert!(ztf <= zc + 1e-6, "seed {seed}: TF {ztf} > C {zc}");
            compared += 1;
        }
    }
    assert!(compared > 0);
}

#[test]
fn smaller_risk_costs_more() {
    let mut finite = 0;
    for seed in 1..=3 {
        let base = day(2, 12, seed);
        let mut last: Option<f64> = None;
        for psi in [0.5, 0.1, 0.01] {
            let (_, rep) = solve(&base, &ModeConfig::new(Mode::R).psi(psi).capacity(13.0));
            let z = rep.objective.unwrap_or(f64::INFINITY);
            finite += z.is_finite() as usize;
            if let Some(prev) = last {
                assert!(z >= prev - 1e-6, "seed {seed} ψ {psi}: {z} < {prev}");
            }
            last = Some(z);
        }
    }
    assert!(finite > 3);
}

#[test]
fn robust_plans_pass_the_audit() {
    for (seed, mode) in [(1, Mode::R), (2, Mode::R), (3, Mode::TFR)] {
        // generated loads reach 6, so two large riders already need more than 13
        let mut cfg = ModeConfig::new(mode).psi(0.01).capacity(20.0).seed(seed);
        if mode.flexible() {
            cfg = cfg.flex(0.5);
        }
        let (inst, rep) = solve(&day(3, 14, seed), &cfg);
        let seqs: Vec<Vec<usize>> = rep.routes.iter().map(|r| r.sequence.clone()).collect();
        assert!(!seqs.is_empty(), "seed {seed}: {:?}", rep.status);
        for a in hoeffding_audit(&inst, &seqs, 20_000, seed).unwrap() {
            assert!(a.passes, "{:?} violates at {}", a.sequence, a.violation_rate);
        }
    }
}

#[test]
fn minimum_capacity_falls_with_risk() {
    let base = day(2, 10, 5);
    let cfg = SolveConfig { feasibility_only: true, time_limit: 60.0, ..Default::default() };
    let mut caps = Vec::new();
    for psi in [0.01, 0.05, 0.1, 0.2, 0.5] {
        let first = (1..=60u32).find(|&m| {
            let Ok(inst) = apply_mode(&base, &ModeConfig::new(Mode::R).psi(psi).capacity(m as f64)) else {
                return false;
            };
            let rep = solve_bcp(&inst, &cfg).unwrap();
            assert_ne!(rep.status, SolveStatus::Limit);
            rep.status != SolveStatus::Infeasible
        });
        caps.push(first.expect("some capacity up to 60 works"));
    }
    assert!(caps.windows(2).all(|w| w[1] <= w[0]), "{caps:?}");
}
