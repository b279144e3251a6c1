//! Small dense tableau simplex with Bland's rule.
//!
//! Kept deliberately separate from [`crate::lp`] so the two can check
//! each other: it shares no code with the revised simplex.

use crate::lp::Sense;

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum DenseOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// `min cᵀx` s.t. `rows`, `x ≥ 0`. Each row is `(coefficients, sense, rhs)`.
pub fn solve_dense(c: &[f64], rows: &[(Vec<f64>, Sense, f64)]) -> DenseOutcome {
    let n = c.len();
    let m = rows.len();
    // columns: x (n), slack/surplus (one per inequality), artificial (one per row)
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let width = n + n_slack + m + 1;
    let rhs_col = width - 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let mut s = n;
    for (i, (a, sense, b)) in rows.iter().enumerate() {
        let flip = *b < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a.get(j).copied().unwrap_or(0.0);
        }
        match sense {
            Sense::Le => {
                t[i][s] = sign;
                s += 1;
            }
            Sense::Ge => {
                t[i][s] = -sign;
                s += 1;
            }
            Sense::Eq => {}
        }
        t[i][n + n_slack + i] = 1.0;
        t[i][rhs_col] = sign * b;
        basis[i] = n + n_slack + i;
    }

    // phase 1: minimize the artificials
    let mut cost1 = vec![0.0; width - 1];
    for i in 0..m {
        cost1[n + n_slack + i] = 1.0;
    }
    if !run(&mut t, &mut basis, &cost1, width - 1) {
        return DenseOutcome::Unbounded;
    }
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n + n_slack).map(|i| t[i][rhs_col]).sum();
    if infeas > 1e-8 {
        return DenseOutcome::Infeasible;
    }
    // pivot zero artificials out where possible
    for i in 0..m {
        if basis[i] >= n + n_slack {
            if let Some(j) = (0..n + n_slack).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }
    // phase 2 over original and slack columns only
    let mut cost2 = vec![0.0; n + n_slack];
    cost2[..n].copy_from_slice(c);
    let active = n + n_slack;
    for row in t.iter_mut() {
        for j in active..width - 1 {
            row[j] = 0.0;
        }
    }
    let mut cost2_full = cost2.clone();
    cost2_full.resize(width - 1, 0.0);
    if !run(&mut t, &mut basis, &cost2_full, active) {
        return DenseOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][rhs_col];
        }
    }
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    DenseOutcome::Optimal { objective, x }
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, q: usize) {
    let w = t[r].len();
    let p = t[r][q];
    for j in 0..w {
        t[r][j] /= p;
    }
    for i in 0..t.len() {
        if i != r {
            let f = t[i][q];
            if f != 0.0 {
                for j in 0..w {
                    t[i][j] -= f * t[r][j];
                }
            }
        }
    }
    basis[r] = q;
}

/// Bland's rule simplex on columns `< active`; false if unbounded.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], active: usize) -> bool {
    let m = t.len();
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    loop {
        let mut enter = None;
        for j in 0..active {
            if basis.contains(&j) {
                continue;
            }
            let mut d = cost[j];
            for i in 0..m {
                d -= cost[basis[i]] * t[i][j];
            }
            if d < -TOL {
                enter = Some(j);
                break;
            }
        }
        let Some(q) = enter else { return true };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][q] > TOL {
                let ratio = t[i][rhs] / t[i][q];
                leave = match leave {
                    None => Some(i),
                    Some(l) => {
                        let rl = t[l][rhs] / t[l][q];
                        if ratio < rl - 1e-12 || (ratio <= rl + 1e-12 && basis[i] < basis[l]) {
                            Some(i)
                        } else {
                            Some(l)
                        }
                    }
                };
            }
        }
        let Some(r) = leave else { return false };
        pivot(t, basis, r, q);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        let rows = vec![
            (vec![1.0, 0.0], Sense::Le, 4.0),
            (vec![0.0, 2.0], Sense::Le, 12.0),
            (vec![3.0, 2.0], Sense::Le, 18.0),
        ];
        match solve_dense(&[-3.0, -5.0], &rows) {
            DenseOutcome::Optimal { objective, x } => {
                assert!((objective + 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_infeasible() {
        let rows = vec![(vec![1.0, 1.0], Sense::Eq, 2.0), (vec![1.0, 0.0], Sense::Ge, 0.5)];
        match solve_dense(&[1.0, 2.0], &rows) {
            DenseOutcome::Optimal { objective, .. } => assert!((objective - 2.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let bad = vec![(vec![1.0], Sense::Le, 1.0), (vec![1.0], Sense::Ge, 2.0)];
        assert_eq!(solve_dense(&[1.0], &bad), DenseOutcome::Infeasible);
        let unb = vec![(vec![1.0], Sense::Ge, 1.0)];
        assert_eq!(solve_dense(&[-1.0], &unb), DenseOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs() {
        // x - y <= -1, min x + y -> y = 1
        let rows = vec![(vec![1.0, -1.0], Sense::Le, -1.0)];
        match solve_dense(&[1.0, 1.0], &rows) {
            DenseOutcome::Optimal { objective, .. } => assert!((objective - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }
}
