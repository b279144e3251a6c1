//! Bounded revised simplex.
//!
//! Solves `min cᵀx` subject to `Ax (≤ | ≥ | =) b`, `0 ≤ x ≤ u`, keeping an
//! explicit dense basis inverse that is updated by elementary row
//! operations and rebuilt every [`REFACTOR_EVERY`] pivots. Each row `i`
//! owns a logical column `e_i` whose bounds encode the row sense, so a
//! basis is just a choice of `m` columns among structurals and logicals.
//!
//! Pricing is Dantzig's rule with lowest-index tie breaking; after a run
//! of degenerate pivots it falls back to Bland's rule until progress resumes.

use serde::{Deserialize, Serialize};

pub const REFACTOR_EVERY: usize = 100;
pub const MAX_PIVOTS: usize = 1_000_000;
const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub cost: f64,
    pub upper: f64,
    /// `(row, coefficient)` pairs.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub rows: Vec<(Sense, f64)>,
    pub cols: Vec<Column>,
}

impl LpProblem {
    pub fn add_row(&mut self, sense: Sense, rhs: f64) -> usize {
        self.rows.push((sense, rhs));
        self.rows.len() - 1
    }

    pub fn add_col(&mut self, cost: f64, upper: f64, entries: Vec<(usize, f64)>) -> usize {
        self.cols.push(Column { cost, upper, entries });
        self.cols.len() - 1
    }
}

/// A basic variable: a structural column or the logical of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    Col(usize),
    Slack(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Basis {
    pub basic: Vec<Var>,
    /// Nonbasic structurals sitting at their upper bound.
    pub at_upper: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// One multiplier per row, `y = c_B B⁻¹`.
    pub duals: Vec<f64>,
    /// `c_j − yᵀA_j` per structural column.
    pub reduced: Vec<f64>,
    pub basis: Basis,
    pub pivots: usize,
}

impl LpSolution {
    /// Dual objective `bᵀy + Σ u_j min(0, d_j)`; equals the primal at optimality.
    pub fn dual_objective(&self, p: &LpProblem) -> f64 {
        let by: f64 = p.rows.iter().zip(&self.duals).map(|(r, y)| r.1 * y).sum();
        let ub: f64 = p
            .cols
            .iter()
            .zip(&self.reduced)
            .filter(|(c, _)| c.upper.is_finite())
            .map(|(c, d)| c.upper * d.min(0.0))
            .sum();
        by + ub
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("no convergence after {0} pivots")]
    Stalled(usize),
}

struct Solver<'a> {
    p: &'a LpProblem,
    m: usize,
    nc: usize,
    /// Artificial columns: `(row, sign)`.
    art: Vec<(usize, f64)>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    /// Position in `head`, or `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    binv: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
}

impl<'a> Solver<'a> {
    fn nvars(&self) -> usize {
        self.nc + self.m + self.art.len()
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.nc {
            out.extend_from_slice(&self.p.cols[j].entries);
        } else if j < self.nc + self.m {
            out.push((j - self.nc, 1.0));
        } else {
            let (r, s) = self.art[j - self.nc - self.m];
            out.push((r, s));
        }
    }

    fn cost(&self, j: usize, phase1: bool) -> f64 {
        if phase1 {
            if j >= self.nc + self.m {
                1.0
            } else {
                0.0
            }
        } else if j < self.nc {
            self.p.cols[j].cost
        } else {
            0.0
        }
    }

    fn rhs(&self) -> Vec<f64> {
        self.p.rows.iter().map(|r| r.1).collect()
    }

    /// Rebuild `B⁻¹` from scratch; `false` when the basis is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        let mut col = Vec::new();
        for (k, &j) in self.head.iter().enumerate() {
            self.column(j, &mut col);
            for &(r, v) in &col {
                a[r * m + k] += v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut best = c;
            for r in c + 1..m {
                if a[r * m + c].abs() > a[best * m + c].abs() {
                    best = r;
                }
            }
            if a[best * m + c].abs() < 1e-11 {
                return false;
            }
            if best != c {
                for k in 0..m {
                    a.swap(best * m + k, c * m + k);
                    inv.swap(best * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for r in 0..m {
                if r != c {
                    let f = a[r * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[c * m + k];
                            inv[r * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        self.recompute_basic();
        true
    }

    fn recompute_basic(&mut self) {
        let m = self.m;
        let mut r = self.rhs();
        let mut col = Vec::new();
        for j in 0..self.nvars() {
            if self.pos[j] == usize::MAX && self.x[j] != 0.0 {
                self.column(j, &mut col);
                for &(i, v) in &col {
                    r[i] -= v * self.x[j];
                }
            }
        }
        for k in 0..m {
            let mut s = 0.0;
            for i in 0..m {
                s += self.binv[k * m + i] * r[i];
            }
            self.x[self.head[k]] = s;
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut col = Vec::new();
        self.column(j, &mut col);
        let mut out = vec![0.0; m];
        for &(r, v) in &col {
            for k in 0..m {
                out[k] += self.binv[k * m + r] * v;
            }
        }
        out
    }

    fn duals(&self, phase1: bool) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for k in 0..m {
            let c = self.cost(self.head[k], phase1);
            if c != 0.0 {
                for i in 0..m {
                    y[i] += c * self.binv[k * m + i];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool, col: &mut Vec<(usize, f64)>) -> f64 {
        self.column(j, col);
        self.cost(j, phase1) - col.iter().map(|&(r, v)| y[r] * v).sum::<f64>()
    }

    fn primal_feasible(&self) -> bool {
        self.head.iter().all(|&j| self.x[j] >= self.lb[j] - FEAS_TOL && self.x[j] <= self.ub[j] + FEAS_TOL)
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        for i in 0..m {
            if i != r && alpha[i] != 0.0 {
                let f = alpha[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                }
            }
        }
        let leaving = self.head[r];
        self.pos[leaving] = usize::MAX;
        self.head[r] = q;
        self.pos[q] = r;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Primal simplex from a feasible basis.
    fn run(&mut self, phase1: bool) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        let mut col = Vec::new();
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(LpError::Stalled(self.pivots));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let y = self.duals(phase1);
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..self.nvars() {
                if self.pos[j] != usize::MAX || self.ub[j] - self.lb[j] <= 0.0 {
                    continue;
                }
                let d = self.reduced_cost(j, &y, phase1, &mut col);
                let at_upper = self.x[j] >= self.ub[j] - FEAS_TOL && self.ub[j].is_finite();
                let dir = if !at_upper && d < -OPT_TOL {
                    1.0
                } else if at_upper && d > OPT_TOL {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir, d));
                    break;
                }
                if enter.is_none_or(|(_, _, bd)| d.abs() > bd.abs()) {
                    enter = Some((j, dir, d));
                }
            }
            let Some((q, dir, _)) = enter else {
                return Ok(());
            };
            let alpha = self.ftran(q);
            let mut t_best = self.ub[q] - self.lb[q];
            let mut leave: Option<usize> = None;
            for i in 0..self.m {
                let a = alpha[i];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.head[i];
                let rate = -dir * a;
                let t = if rate < 0.0 {
                    if self.lb[b].is_finite() {
                        ((self.x[b] - self.lb[b]) / -rate).max(0.0)
                    } else {
                        continue;
                    }
                } else if self.ub[b].is_finite() {
                    ((self.ub[b] - self.x[b]) / rate).max(0.0)
                } else {
                    continue;
                };
                let better = if t < t_best - 1e-12 {
                    true
                } else if t <= t_best + 1e-12 {
                    match leave {
                        None => false,
                        Some(l) if bland => b < self.head[l],
                        Some(l) => a.abs() > alpha[l].abs(),
                    }
                } else {
                    false
                };
                if better {
                    t_best = t;
                    leave = Some(i);
                }
            }
            if !t_best.is_finite() {
                return Err(LpError::Unbounded);
            }
            if t_best <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.x[q] += dir * t_best;
            for i in 0..self.m {
                let b = self.head[i];
                self.x[b] -= dir * alpha[i] * t_best;
            }
            match leave {
                None => {
                    // bound flip
                    self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
                }
                Some(r) => {
                    let b = self.head[r];
                    let rate = -dir * alpha[r];
                    self.x[b] = if rate < 0.0 { self.lb[b] } else { self.ub[b] };
                    self.pivot(r, q, &alpha);
                }
            }
        }
    }
}

fn logical_bounds(s: Sense) -> (f64, f64) {
    match s {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
        Sense::Eq => (0.0, 0.0),
    }
}

/// Solve `p`, starting from `hint` when it is a primal feasible basis.
pub fn solve(p: &LpProblem, hint: Option<&Basis>) -> Result<LpSolution, LpError> {
    let m = p.rows.len();
    let nc = p.cols.len();
    let mut lb = vec![0.0; nc + m];
    let mut ub: Vec<f64> = p.cols.iter().map(|c| c.upper).collect();
    ub.resize(nc + m, 0.0);
    for (i, r) in p.rows.iter().enumerate() {
        let (l, u) = logical_bounds(r.0);
        lb[nc + i] = l;
        ub[nc + i] = u;
    }
    let mut s = Solver {
        p,
        m,
        nc,
        art: Vec::new(),
        lb,
        ub,
        x: vec![0.0; nc + m],
        head: Vec::new(),
        pos: vec![usize::MAX; nc + m],
        binv: Vec::new(),
        pivots: 0,
        since_refactor: 0,
    };

    let mut warm = false;
    if let Some(h) = hint {
        if try_warm(&mut s, h) {
            warm = true;
        }
    }
    if !warm {
        cold_start(&mut s);
        s.run(true)?;
        let infeas: f64 = (nc + m..s.nvars()).map(|j| s.x[j]).sum();
        if infeas > 1e-7 * (1.0 + p.rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max)) {
            return Err(LpError::Infeasible);
        }
        drive_out_artificials(&mut s);
    }
    s.run(false)?;
    s.refactor();
    if !s.primal_feasible() {
        // drift after refactoring; one more pass from the rebuilt basis
        cold_start(&mut s);
        s.run(true)?;
        drive_out_artificials(&mut s);
        s.run(false)?;
    }

    let y = s.duals(false);
    let mut col = Vec::new();
    let reduced: Vec<f64> = (0..nc).map(|j| s.reduced_cost(j, &y, false, &mut col)).collect();
    let x: Vec<f64> = s.x[..nc].to_vec();
    let objective = p.cols.iter().zip(&x).map(|(c, v)| c.cost * v).sum();
    let mut basic = Vec::with_capacity(m);
    for k in 0..m {
        let j = s.head[k];
        basic.push(if j < nc {
            Var::Col(j)
        } else if j < nc + m {
            Var::Slack(j - nc)
        } else {
            Var::Slack(s.art[j - nc - m].0)
        });
    }
    let at_upper = (0..nc)
        .filter(|&j| s.pos[j] == usize::MAX && s.ub[j].is_finite() && s.ub[j] > 0.0 && s.x[j] >= s.ub[j] - FEAS_TOL)
        .collect();
    Ok(LpSolution { objective, x, duals: y, reduced, basis: Basis { basic, at_upper }, pivots: s.pivots })
}

fn try_warm(s: &mut Solver, h: &Basis) -> bool {
    let (m, nc) = (s.m, s.nc);
    if h.basic.len() != m {
        return false;
    }
    let mut head = Vec::with_capacity(m);
    for v in &h.basic {
        let j = match *v {
            Var::Col(j) if j < nc => j,
            Var::Slack(i) if i < m => nc + i,
            _ => return false,
        };
        if s.pos[j] != usize::MAX {
            return false;
        }
        s.pos[j] = head.len();
        head.push(j);
    }
    s.head = head;
    for j in 0..nc + m {
        s.x[j] = if s.lb[j].is_finite() { s.lb[j] } else { s.ub[j] };
    }
    for &j in &h.at_upper {
        if j < nc && s.pos[j] == usize::MAX && s.ub[j].is_finite() {
            s.x[j] = s.ub[j];
        }
    }
    if !s.refactor() || !s.primal_feasible() {
        s.pos.iter_mut().for_each(|p| *p = usize::MAX);
        return false;
    }
    true
}

fn cold_start(s: &mut Solver) {
    let (m, nc) = (s.m, s.nc);
    s.art.clear();
    s.lb.truncate(nc + m);
    s.ub.truncate(nc + m);
    s.x.truncate(nc + m);
    s.pos.truncate(nc + m);
    s.pos.iter_mut().for_each(|p| *p = usize::MAX);
    for j in 0..nc + m {
        s.x[j] = if s.lb[j].is_finite() { s.lb[j] } else { s.ub[j] };
    }
    s.head = vec![0; m];
    for i in 0..m {
        let b = s.p.rows[i].1;
        let j = nc + i;
        if b >= s.lb[j] && b <= s.ub[j] {
            s.head[i] = j;
            s.pos[j] = i;
            s.x[j] = b;
        } else {
            let sign = if b >= 0.0 { 1.0 } else { -1.0 };
            s.art.push((i, sign));
            s.lb.push(0.0);
            s.ub.push(f64::INFINITY);
            s.x.push(b.abs());
            let a = s.pos.len();
            s.pos.push(i);
            s.head[i] = a;
        }
    }
    s.refactor();
}

fn drive_out_artificials(s: &mut Solver) {
    let (m, nc) = (s.m, s.nc);
    let first_art = nc + m;
    for r in 0..m {
        let j = s.head[r];
        if j < first_art {
            continue;
        }
        // row r of B⁻¹ times each candidate column
        let mut col = Vec::new();
        let mut swapped = false;
        for q in 0..first_art {
            if s.pos[q] != usize::MAX {
                continue;
            }
            s.column(q, &mut col);
            let v: f64 = col.iter().map(|&(i, a)| s.binv[r * m + i] * a).sum();
            if v.abs() > 1e-7 {
                let alpha = s.ftran(q);
                s.pivot(r, q, &alpha);
                swapped = true;
                break;
            }
        }
        if !swapped {
            // redundant row: leave the artificial basic at zero
            s.x[j] = 0.0;
        }
    }
    for a in first_art..s.nvars() {
        s.ub[a] = 0.0;
        if s.pos[a] == usize::MAX {
            s.x[a] = 0.0;
        }
    }
    s.refactor();
}

/// Plain-text dump of a problem, one row per line, for inspection.
pub fn dump(p: &LpProblem) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = write!(out, "min");
    for (j, c) in p.cols.iter().enumerate() {
        let _ = write!(out, " {:+}*x{}", c.cost, j);
    }
    let _ = writeln!(out);
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.rows.len()];
    for (j, c) in p.cols.iter().enumerate() {
        for &(r, v) in &c.entries {
            rows[r].push((j, v));
        }
    }
    for (i, (sense, rhs)) in p.rows.iter().enumerate() {
        let _ = write!(out, "r{i}:");
        for &(j, v) in &rows[i] {
            let _ = write!(out, " {v:+}*x{j}");
        }
        let op = match sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {rhs}");
    }
    for (j, c) in p.cols.iter().enumerate() {
        let _ = writeln!(out, "0 <= x{j} <= {}", c.upper);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_dummy_column() {
        let mut p = LpProblem::default();
        let r = p.add_row(Sense::Eq, 1.0);
        p.add_col(1e4, 1.0, vec![(r, 1.0)]);
        let s = solve(&p, None).unwrap();
        assert_eq!(s.objective, 1e4);
        assert_eq!(s.duals, vec![1e4]);
    }

    #[test]
    fn two_singletons() {
        // partition rows for two requests, fleet row <= 2
        let mut p = LpProblem::default();
        let a = p.add_row(Sense::Eq, 1.0);
        let b = p.add_row(Sense::Eq, 1.0);
        let k = p.add_row(Sense::Le, 2.0);
        p.add_col(10.0, 1.0, vec![(a, 1.0), (k, 1.0)]);
        p.add_col(12.0, 1.0, vec![(b, 1.0), (k, 1.0)]);
        p.add_col(1e4, 1.0, vec![(a, 1.0)]);
        p.add_col(1e4, 1.0, vec![(b, 1.0)]);
        let s = solve(&p, None).unwrap();
        assert!((s.objective - 22.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
        assert!((s.dual_objective(&p) - s.objective).abs() < 1e-7);
        // a shared trip cheaper than both singles
        p.add_col(15.0, 1.0, vec![(a, 1.0), (b, 1.0), (k, 1.0)]);
        let s2 = solve(&p, Some(&s.basis)).unwrap();
        assert!((s2.objective - 15.0).abs() < 1e-9);
    }

    #[test]
    fn ge_rows_and_bound_flips() {
        // min -x0 - x1 s.t. x0 + x1 >= 1, x0 + 2 x1 <= 3, x <= 1
        let mut p = LpProblem::default();
        let r0 = p.add_row(Sense::Ge, 1.0);
        let r1 = p.add_row(Sense::Le, 3.0);
        p.add_col(-1.0, 1.0, vec![(r0, 1.0), (r1, 1.0)]);
        p.add_col(-1.0, 1.0, vec![(r0, 1.0), (r1, 2.0)]);
        let s = solve(&p, None).unwrap();
        assert!((s.objective + 2.0).abs() < 1e-9);
        assert!((s.dual_objective(&p) - s.objective).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::default();
        let r = p.add_row(Sense::Ge, 3.0);
        p.add_col(1.0, 1.0, vec![(r, 1.0)]);
        assert_eq!(solve(&p, None), Err(LpError::Infeasible));
        let mut q = LpProblem::default();
        let r = q.add_row(Sense::Ge, 1.0);
        q.add_col(-1.0, f64::INFINITY, vec![(r, 1.0)]);
        assert_eq!(solve(&q, None), Err(LpError::Unbounded));
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::default();
        let a = p.add_row(Sense::Eq, 1.0);
        let b = p.add_row(Sense::Eq, 1.0);
        p.add_col(2.0, 1.0, vec![(a, 1.0), (b, 1.0)]);
        p.add_col(3.0, 1.0, vec![(a, 1.0), (b, 1.0)]);
        let s = solve(&p, None).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn dump_lists_rows() {
        let mut p = LpProblem::default();
        let r = p.add_row(Sense::Le, 2.0);
        p.add_col(1.5, 1.0, vec![(r, 1.0)]);
        let d = dump(&p);
        assert!(d.contains("r0: +1*x0 <= 2"));
    }
}
