//! Restricted master problem.
//!
//! Set partitioning over the trip pool: one equality row per request, a
//! fleet row `Σλ ≤ |K|`, plus cut and branching rows. Every cut and
//! branching row is additive over arcs (a trip's coefficient is a sum over
//! its arcs), so its dual folds into arc costs for pricing.
//!
//! Each partition row has a dummy column and each cut or branching row an
//! elastic column, all priced at `BIG`. The LP is therefore feasible at
//! every tree node, and a basis stays primal feasible when rows are added.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{self, Basis, LpProblem, Sense, Var};
use crate::pricing::{PricingDuals, Trip};

pub const INTEGRALITY_TOL: f64 = 1e-6;

/// How a cut or branching row weighs a trip.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcFamily {
    /// Coefficient 1 per trip (fleet-size branching).
    Vehicles,
    /// Arcs with exactly one endpoint in the node set.
    Crossing(Vec<usize>),
    /// Arcs leaving the node set.
    Outflow(Vec<usize>),
    /// Listed arcs.
    Arcs(Vec<(usize, usize)>),
}

impl ArcFamily {
    fn member(set: &[usize], v: usize) -> bool {
        set.binary_search(&v).is_ok()
    }

    pub fn arc_coef(&self, i: usize, j: usize) -> f64 {
        match self {
            ArcFamily::Vehicles => 0.0,
            ArcFamily::Crossing(s) => (Self::member(s, i) != Self::member(s, j)) as u8 as f64,
            ArcFamily::Outflow(s) => (Self::member(s, i) && !Self::member(s, j)) as u8 as f64,
            ArcFamily::Arcs(a) => a.iter().filter(|&&(x, y)| x == i && y == j).count() as f64,
        }
    }

    pub fn trip_coef(&self, trip: &Trip) -> f64 {
        match self {
            ArcFamily::Vehicles => 1.0,
            _ => trip.arcs().map(|(i, j)| self.arc_coef(i, j)).sum(),
        }
    }
}

/// A cut or branching row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcRow {
    pub family: ArcFamily,
    pub sense: Sense,
    pub rhs: f64,
}

impl ArcRow {
    pub fn new(family: ArcFamily, sense: Sense, rhs: f64) -> Self {
        ArcRow { family, sense, rhs }
    }

    /// Activity of the row at a primal solution.
    pub fn activity(&self, cols: &[Trip], lambda: &[f64]) -> f64 {
        cols.iter().zip(lambda).filter(|(_, &l)| l > 0.0).map(|(t, &l)| l * self.family.trip_coef(t)).sum()
    }

    /// How much the row is violated at a primal solution (0 if satisfied).
    pub fn violation(&self, cols: &[Trip], lambda: &[f64]) -> f64 {
        let a = self.activity(cols, lambda);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKey {
    Partition(usize),
    Fleet,
    Cut(usize),
    Branch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Key {
    Col(usize),
    Dummy(usize),
    Elastic(RowKey),
    Slack(RowKey),
}

/// Duals of the master rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DualPrices {
    pub request_duals: Vec<f64>,
    /// `≤ 0` for the `≤ |K|` row.
    pub vehicle_dual: f64,
    /// Per cut in the pool (0 for inactive cuts).
    pub cut_duals: Vec<f64>,
    pub branch_duals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CutEntry {
    pub row: ArcRow,
    pub kind: String,
    pub active: bool,
    /// Consecutive solves with the row slack.
    pub idle: usize,
    coefs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BranchEntry {
    row: ArcRow,
    coefs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MasterState {
    pub columns: Vec<Trip>,
    index: HashMap<Vec<usize>, usize>,
    pub big: f64,
    /// Requests with no feasible single-request trip.
    pub unservable: Vec<usize>,
    pub cuts: Vec<CutEntry>,
    branch: Vec<BranchEntry>,
    basis: Option<(Vec<Key>, Vec<Key>)>,
    pub objective: f64,
    pub lambda: Vec<f64>,
    /// Dummy column values per request.
    pub dummy: Vec<f64>,
    /// Total elastic usage on cut and branching rows.
    pub elastic: f64,
    pub duals: DualPrices,
    pub lp_pivots: usize,
    requests: usize,
    vehicles: usize,
}

/// Pool seeded with every feasible single-request trip.
pub fn init_master(inst: &Instance) -> MasterState {
    let mut st = MasterState {
        columns: Vec::new(),
        index: HashMap::new(),
        big: 1e4 * inst.max_arc_cost().max(1.0),
        unservable: Vec::new(),
        cuts: Vec::new(),
        branch: Vec::new(),
        basis: None,
        objective: f64::INFINITY,
        lambda: Vec::new(),
        dummy: vec![0.0; inst.requests],
        elastic: 0.0,
        duals: DualPrices::default(),
        lp_pivots: 0,
        requests: inst.requests,
        vehicles: inst.vehicles,
    };
    for r in 0..inst.requests {
        let seq = [inst.origin(), inst.pickup(r), inst.dropoff(r), inst.destination()];
        match Trip::from_sequence(inst, &seq) {
            Ok(t) => {
                st.add_columns(vec![t]);
            }
            Err(_) => st.unservable.push(r),
        }
    }
    st
}

impl MasterState {
    /// Add trips not yet in the pool; returns how many were new.
    pub fn add_columns(&mut self, trips: Vec<Trip>) -> usize {
        let mut added = 0;
        for t in trips {
            if self.index.contains_key(&t.sequence) {
                continue;
            }
            let id = self.columns.len();
            for c in &mut self.cuts {
                c.coefs.push(c.row.family.trip_coef(&t));
            }
            for b in &mut self.branch {
                b.coefs.push(b.row.family.trip_coef(&t));
            }
            self.index.insert(t.sequence.clone(), id);
            self.columns.push(t);
            self.lambda.push(0.0);
            added += 1;
        }
        added
    }

    pub fn contains(&self, seq: &[usize]) -> bool {
        self.index.contains_key(seq)
    }

    /// Add a cut row to the pool (active). Returns its index.
    pub fn add_cut(&mut self, row: ArcRow, kind: &str) -> usize {
        let coefs = self.columns.iter().map(|t| row.family.trip_coef(t)).collect();
        self.cuts.push(CutEntry { row, kind: kind.to_string(), active: true, idle: 0, coefs });
        self.cuts.len() - 1
    }

    /// Replace the branching rows (moving to another tree node).
    pub fn set_branch_rows(&mut self, rows: &[ArcRow]) {
        let same = rows.len() == self.branch.len() && rows.iter().zip(&self.branch).all(|(a, b)| *a == b.row);
        if same {
            return;
        }
        self.branch = rows
            .iter()
            .map(|r| BranchEntry { row: r.clone(), coefs: self.columns.iter().map(|t| r.family.trip_coef(t)).collect() })
            .collect();
    }

    pub fn branch_rows(&self) -> Vec<ArcRow> {
        self.branch.iter().map(|b| b.row.clone()).collect()
    }

    /// Add one branching row on top of the current ones.
    pub fn add_row(&mut self, row: ArcRow) {
        let mut rows = self.branch_rows();
        rows.push(row);
        self.set_branch_rows(&rows);
    }

    fn row_keys(&self) -> Vec<RowKey> {
        let mut keys: Vec<RowKey> = (0..self.requests).map(RowKey::Partition).collect();
        keys.push(RowKey::Fleet);
        for (i, c) in self.cuts.iter().enumerate() {
            if c.active {
                keys.push(RowKey::Cut(i));
            }
        }
        for i in 0..self.branch.len() {
            keys.push(RowKey::Branch(i));
        }
        keys
    }

    fn arc_row(&self, k: RowKey) -> Option<(&ArcRow, &[f64])> {
        match k {
            RowKey::Cut(i) => Some((&self.cuts[i].row, &self.cuts[i].coefs)),
            RowKey::Branch(i) => Some((&self.branch[i].row, &self.branch[i].coefs)),
            _ => None,
        }
    }

    /// Build the LP together with the key of every column.
    fn build(&self) -> (LpProblem, Vec<RowKey>, Vec<Key>) {
        let rows = self.row_keys();
        let mut p = LpProblem::default();
        let mut row_of: HashMap<RowKey, usize> = HashMap::new();
        for &k in &rows {
            let (sense, rhs) = match k {
                RowKey::Partition(_) => (Sense::Eq, 1.0),
                RowKey::Fleet => (Sense::Le, self.vehicles as f64),
                _ => {
                    let (r, _) = self.arc_row(k).unwrap();
                    (r.sense, r.rhs)
                }
            };
            row_of.insert(k, p.add_row(sense, rhs));
        }
        let fleet = row_of[&RowKey::Fleet];
        let mut keys = Vec::new();
        let arc_rows: Vec<(usize, &[f64])> =
            rows.iter().filter_map(|&k| self.arc_row(k).map(|(_, c)| (row_of[&k], c))).collect();
        for (j, t) in self.columns.iter().enumerate() {
            let mut e: Vec<(usize, f64)> = t.covered.iter().map(|r| (r, 1.0)).collect();
            e.push((fleet, 1.0));
            for &(ri, coefs) in &arc_rows {
                if coefs[j] != 0.0 {
                    e.push((ri, coefs[j]));
                }
            }
            // no explicit x <= 1: partition rows imply it, and a bound would hide negative reduced costs from pricing
            p.add_col(t.cost, f64::INFINITY, e);
            keys.push(Key::Col(j));
        }
        for r in 0..self.requests {
            p.add_col(self.big, f64::INFINITY, vec![(r, 1.0)]);
            keys.push(Key::Dummy(r));
        }
        for &k in &rows {
            if let Some((row, _)) = self.arc_row(k) {
                let ri = row_of[&k];
                let sign = match row.sense {
                    Sense::Le => -1.0,
                    _ => 1.0,
                };
                p.add_col(self.big, f64::INFINITY, vec![(ri, sign)]);
                keys.push(Key::Elastic(k));
            }
        }
        (p, rows, keys)
    }

    /// Plain-text dump of the current LP.
    pub fn dump_lp(&self) -> String {
        lp::dump(&self.build().0)
    }

    fn hint(&self, rows: &[RowKey], keys: &[Key], p: &LpProblem) -> Option<Basis> {
        let (basic, upper) = self.basis.as_ref()?;
        let col_of: HashMap<Key, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let row_of: HashMap<RowKey, usize> = rows.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut vars = Vec::with_capacity(rows.len());
        let mut covered_rows = std::collections::HashSet::new();
        for k in basic {
            match k {
                Key::Slack(rk) => {
                    if let Some(&ri) = row_of.get(rk) {
                        vars.push(Var::Slack(ri));
                        covered_rows.insert(*rk);
                    }
                }
                Key::Elastic(rk) => {
                    if let Some(&c) = col_of.get(k) {
                        vars.push(Var::Col(c));
                        covered_rows.insert(*rk);
                    }
                }
                _ => {
                    if let Some(&c) = col_of.get(k) {
                        vars.push(Var::Col(c));
                    }
                }
            }
        }
        // rows new since the last solve: their slack or elastic enters
        for (ri, rk) in rows.iter().enumerate() {
            if covered_rows.contains(rk) {
                continue;
            }
            if let Some((row, coefs)) = self.arc_row(*rk) {
                let act: f64 = coefs.iter().zip(&self.lambda).map(|(c, l)| c * l).sum();
                let ok = match row.sense {
                    Sense::Le => act <= row.rhs + 1e-9,
                    Sense::Ge => act >= row.rhs - 1e-9,
                    Sense::Eq => (act - row.rhs).abs() <= 1e-9,
                };
                if ok && row.sense != Sense::Eq {
                    vars.push(Var::Slack(ri));
                } else {
                    vars.push(Var::Col(col_of[&Key::Elastic(*rk)]));
                }
            }
        }
        if vars.len() != p.rows.len() {
            return None;
        }
        let at_upper = upper.iter().filter_map(|k| col_of.get(k).copied()).collect();
        Some(Basis { basic: vars, at_upper })
    }

    /// Solve the LP relaxation; updates `lambda`, `objective` and `duals`.
    pub fn solve_lp(&mut self) -> Result<f64> {
        let (p, rows, keys) = self.build();
        let hint = self.hint(&rows, &keys, &p);
        let sol = match lp::solve(&p, hint.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("lp failed ({e}); state:\n{}", lp::dump(&p));
                return Err(Error::Lp(e.to_string()));
            }
        };
        self.lp_pivots += sol.pivots;
        let nc = self.columns.len();
        self.lambda = sol.x[..nc].to_vec();
        self.dummy = sol.x[nc..nc + self.requests].to_vec();
        self.elastic = sol.x[nc + self.requests..].iter().sum();
        self.objective = sol.objective;

        let mut d = DualPrices {
            request_duals: sol.duals[..self.requests].to_vec(),
            vehicle_dual: sol.duals[self.requests],
            cut_duals: vec![0.0; self.cuts.len()],
            branch_duals: vec![0.0; self.branch.len()],
        };
        for (ri, rk) in rows.iter().enumerate() {
            match rk {
                RowKey::Cut(i) => d.cut_duals[*i] = sol.duals[ri],
                RowKey::Branch(i) => d.branch_duals[*i] = sol.duals[ri],
                _ => {}
            }
        }
        self.duals = d;

        // cut aging
        for (ri, rk) in rows.iter().enumerate() {
            if let RowKey::Cut(i) = rk {
                let basic_slack = sol.basis.basic.contains(&Var::Slack(ri));
                let c = &mut self.cuts[*i];
                if basic_slack && sol.duals[ri].abs() < 1e-12 {
                    c.idle += 1;
                } else {
                    c.idle = 0;
                }
            }
        }

        let basic = sol
            .basis
            .basic
            .iter()
            .map(|v| match *v {
                Var::Col(c) => keys[c],
                Var::Slack(r) => Key::Slack(rows[r]),
            })
            .collect();
        let upper = sol.basis.at_upper.iter().map(|&c| keys[c]).collect();
        self.basis = Some((basic, upper));
        Ok(sol.objective)
    }

    /// Deactivate cuts that stayed slack for `limit` consecutive solves.
    pub fn age_cuts(&mut self, limit: usize) -> usize {
        let mut n = 0;
        for c in &mut self.cuts {
            if c.active && c.idle >= limit {
                c.active = false;
                c.idle = 0;
                n += 1;
            }
        }
        if n > 0 {
            self.basis = None;
        }
        n
    }

    /// Reactivate pooled cuts violated by the current solution.
    pub fn reactivate_violated(&mut self, tol: f64) -> usize {
        let mut n = 0;
        for i in 0..self.cuts.len() {
            if !self.cuts[i].active {
                let v = self.cuts[i].row.violation(&self.columns, &self.lambda);
                if v > tol {
                    self.cuts[i].active = true;
                    self.cuts[i].idle = 0;
                    n += 1;
                }
            }
        }
        n
    }

    pub fn reset_basis(&mut self) {
        self.basis = None;
    }

    /// Fold duals into what the labeling algorithm needs.
    pub fn pricing_duals(&self, inst: &Instance) -> PricingDuals {
        let m = inst.nodes.len();
        let mut out = PricingDuals {
            request: self.duals.request_duals.clone(),
            vehicle: self.duals.vehicle_dual,
            arc: Vec::new(),
            forbidden: Vec::new(),
        };
        let mut arc = vec![0.0; m * m];
        let mut any = false;
        let mut add = |row: &ArcRow, y: f64, arc: &mut Vec<f64>, vehicle: &mut f64| {
            if y == 0.0 {
                return;
            }
            match &row.family {
                ArcFamily::Vehicles => *vehicle += y,
                fam => {
                    for i in 0..m {
                        for j in 0..m {
                            let c = fam.arc_coef(i, j);
                            if c != 0.0 {
                                arc[i * m + j] -= y * c;
                                any = true;
                            }
                        }
                    }
                }
            }
        };
        for (i, c) in self.cuts.iter().enumerate() {
            if c.active {
                add(&c.row, self.duals.cut_duals[i], &mut arc, &mut out.vehicle);
            }
        }
        for (i, b) in self.branch.iter().enumerate() {
            add(&b.row, self.duals.branch_duals[i], &mut arc, &mut out.vehicle);
        }
        if any {
            out.arc = arc;
        }
        for b in &self.branch {
            if let (ArcFamily::Arcs(list), Sense::Le) = (&b.row.family, b.row.sense) {
                if b.row.rhs < 0.5 {
                    if out.forbidden.is_empty() {
                        out.forbidden = vec![false; m * m];
                    }
                    for &(i, j) in list {
                        out.forbidden[i * m + j] = true;
                    }
                }
            }
        }
        out
    }

    /// Number of trips in use (`Σλ`).
    pub fn vehicles_used(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.lambda.iter().all(|l| (l - l.round()).abs() <= INTEGRALITY_TOL)
    }

    /// True when dummies or elastic columns carry weight.
    pub fn uses_artificial(&self) -> bool {
        self.dummy.iter().any(|&d| d > INTEGRALITY_TOL) || self.elastic > INTEGRALITY_TOL
    }

    /// Arc flows `x_ij = Σ_r λ_r [arc in r]` with positive value, sorted.
    pub fn arc_flows(&self) -> Vec<((usize, usize), f64)> {
        let mut map: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for (t, &l) in self.columns.iter().zip(&self.lambda) {
            if l > INTEGRALITY_TOL {
                for a in t.arcs() {
                    *map.entry(a).or_insert(0.0) += l;
                }
            }
        }
        map.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    fn two() -> Instance {
        // requests far apart on opposite sides
        parse_instance(
            "2 2 480 6 60\n0 0 0 0 0 0 500\n1 5 0 0 1 0 500\n2 -5 0 0 1 0 500\n3 6 0 0 -1 0 500\n4 -6 0 0 -1 0 500\n",
        )
        .unwrap()
    }

    #[test]
    fn seed_columns() {
        let inst = two();
        let st = init_master(&inst);
        assert_eq!(st.columns.len(), 2);
        assert!(st.unservable.is_empty());
        // hard window closes before the vehicle can arrive
        let bad = parse_instance(
            "1 1 480 6 60\n0 0 0 0 0 0 500\n1 50 0 0 1 0 10\n2 51 0 0 -1 0 500\n",
        )
        .unwrap();
        let st = init_master(&bad);
        assert_eq!(st.columns.len(), 0);
        assert_eq!(st.unservable, vec![0]);
    }

    #[test]
    fn dummy_only_lp() {
        let bad = parse_instance("1 1 480 6 60\n0 0 0 0 0 0 500\n1 50 0 0 1 0 10\n2 51 0 0 -1 0 500\n").unwrap();
        let mut st = init_master(&bad);
        let obj = st.solve_lp().unwrap();
        assert_eq!(obj, st.big);
        assert_eq!(st.duals.request_duals, vec![st.big]);
        assert!(st.uses_artificial());
    }

    fn line() -> Instance {
        // both requests head east along the x axis
        parse_instance(
            "2 2 480 6 60\n0 0 0 0 0 0 500\n1 5 0 0 1 0 500\n2 6 0 0 1 0 500\n3 10 0 0 -1 0 500\n4 9 0 0 -1 0 500\n",
        )
        .unwrap()
    }

    #[test]
    fn singletons_and_shared_trip() {
        let inst = line();
        let mut st = init_master(&inst);
        // singletons: 5+5+10 and 6+3+9
        let obj = st.solve_lp().unwrap();
        assert!((obj - 38.0).abs() < 1e-9);
        assert!(st.lambda.iter().all(|&l| (l - 1.0).abs() < 1e-9));
        assert!(st.duals.vehicle_dual <= 0.0);
        let dup = st.columns[0].clone();
        assert_eq!(st.add_columns(vec![dup]), 0);
        assert_eq!(st.columns.len(), 2);

        // one vehicle: the cheaper singleton plus a dummy for the other request
        st.add_row(ArcRow::new(ArcFamily::Vehicles, Sense::Le, 1.0));
        let obj1 = st.solve_lp().unwrap();
        assert!((obj1 - (st.big + 18.0)).abs() < 1e-6);
        assert!(st.uses_artificial());
        let pd = st.pricing_duals(&inst);
        assert!((pd.vehicle - (st.duals.vehicle_dual + st.duals.branch_duals[0])).abs() < 1e-12);

        // 0-1-2-4-3-5: 5+1+3+1+10
        let t = Trip::from_sequence(&inst, &[0, 1, 2, 4, 3, 5]).unwrap();
        assert!((t.cost - 20.0).abs() < 1e-9);
        st.add_columns(vec![t]);
        let obj2 = st.solve_lp().unwrap();
        assert!((obj2 - 20.0).abs() < 1e-9);
        assert!(!st.uses_artificial());
        assert!(st.is_integral());
    }

    #[test]
    fn arc_families() {
        let inst = two();
        let t = Trip::from_sequence(&inst, &[0, 1, 3, 2, 4, 5]).unwrap();
        assert_eq!(ArcFamily::Crossing(vec![1, 3]).trip_coef(&t), 2.0);
        assert_eq!(ArcFamily::Outflow(vec![1, 3]).trip_coef(&t), 1.0);
        assert_eq!(ArcFamily::Arcs(vec![(1, 3), (4, 5)]).trip_coef(&t), 2.0);
        assert_eq!(ArcFamily::Vehicles.trip_coef(&t), 1.0);
    }

    #[test]
    fn forbidden_arcs_reach_pricing() {
        let inst = two();
        let mut st = init_master(&inst);
        st.add_row(ArcRow::new(ArcFamily::Arcs(vec![(0, 1)]), Sense::Le, 0.0));
        st.solve_lp().unwrap();
        let pd = st.pricing_duals(&inst);
        assert!(pd.forbidden[1]);
        // the only trip for request 0 uses the banned arc: elastic or dummy picks up the slack
        assert!(st.uses_artificial());
    }
}
