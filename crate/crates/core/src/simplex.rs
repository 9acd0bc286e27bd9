//! Two-phase primal simplex for equality-form linear programs:
//!
//! maximize c'x  subject to  A x = b, x >= 0.
//!
//! Pivoting uses Bland's smallest-index rule throughout, so cycling cannot
//! occur. After phase 2 the basic solution is recomputed from the original
//! constraint matrix with a pivoted solve, which removes the drift a long
//! pivot history leaves in the tableau.

use crate::linalg::{solve_dense, Mat};
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

/// Optimal basic solution with its optimality certificate.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic variable per retained constraint row.
    pub basis: Vec<usize>,
    /// Reduced costs of the structural variables at optimality (all <= tol
    /// for a maximization).
    pub reduced_costs: Vec<f64>,
    /// Nonbasic variable with zero reduced cost: other optima exist.
    pub alternate_optima: bool,
    pub iterations: usize,
}

/// Maximize `objective . x` over `constraints x = rhs`, `x >= 0`.
pub fn solve_equality_form(
    objective: &[f64],
    constraints: &Mat,
    rhs: &[f64],
) -> Result<LpSolution> {
    let n = objective.len();
    let m = constraints.rows();
    if constraints.cols() != n || rhs.len() != m {
        return Err(Error::DimensionMismatch("LP shape".into()));
    }

    // Work on rows with nonnegative right-hand side.
    let mut a = constraints.clone();
    let mut b = rhs.to_vec();
    for r in 0..m {
        if b[r] < 0.0 {
            b[r] = -b[r];
            for c in 0..n {
                a.set(r, c, -a.get(r, c));
            }
        }
    }

    // Tableau layout: n structural columns, m artificial columns, rhs column.
    let width = n + m + 1;
    let mut t = Mat::zeros(m, width);
    for r in 0..m {
        for c in 0..n {
            t.set(r, c, a.get(r, c));
        }
        t.set(r, n + r, 1.0);
        t.set(r, width - 1, b[r]);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the artificial sum, i.e. maximize its negation. The
    // cost row holds reduced costs for the current basis.
    let mut cost = vec![0.0; width];
    for c in 0..width {
        let mut s = 0.0;
        for r in 0..m {
            s += t.get(r, c);
        }
        cost[c] = s;
    }
    for c in n..n + m {
        cost[c] = 0.0;
    }
    // Entering columns are structural only: once an artificial leaves the
    // basis it is effectively deleted, which preserves the feasibility
    // decision (any feasible point has every artificial at zero).
    let mut iterations = 0usize;
    run_simplex(&mut t, &mut cost, &mut basis, n, &mut iterations)?;
    let phase1_obj: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= n)
        .map(|(r, _)| t.get(r, width - 1))
        .sum();
    if phase1_obj > 1e-7 {
        return Err(Error::LpInfeasible(format!(
            "artificial residual {phase1_obj:.3e}"
        )));
    }

    // Drive leftover artificials out of the basis; a row with no usable
    // structural pivot is redundant and gets dropped.
    let mut keep_rows: Vec<bool> = vec![true; m];
    for r in 0..m {
        if basis[r] < n {
            continue;
        }
        let mut pivot_col = None;
        for c in 0..n {
            if t.get(r, c).abs() > PIVOT_TOL {
                pivot_col = Some(c);
                break;
            }
        }
        match pivot_col {
            Some(c) => {
                pivot(&mut t, &mut cost, r, c);
                basis[r] = c;
            }
            None => keep_rows[r] = false,
        }
    }

    // Rebuild a compact tableau without artificial columns or dropped rows.
    let rows2: Vec<usize> = (0..m).filter(|&r| keep_rows[r]).collect();
    let m2 = rows2.len();
    let mut t2 = Mat::zeros(m2, n + 1);
    for (new_r, &r) in rows2.iter().enumerate() {
        for c in 0..n {
            t2.set(new_r, c, t.get(r, c));
        }
        t2.set(new_r, n, t.get(r, width - 1));
    }
    let mut basis2: Vec<usize> = rows2.iter().map(|&r| basis[r]).collect();

    // Phase 2 cost row: reduced costs of the real objective under the
    // current basis, stored negated so "positive means improving" as in
    // phase 1 (we maximize).
    let mut cost2 = vec![0.0; n + 1];
    for c in 0..=n {
        let mut s = if c < n { -objective[c] } else { 0.0 };
        for (r, &bv) in basis2.iter().enumerate() {
            if bv < n {
                s += objective[bv] * t2.get(r, c);
            }
        }
        cost2[c] = -s;
    }
    run_simplex(&mut t2, &mut cost2, &mut basis2, n, &mut iterations)?;

    // Refine: solve B x_B = b against the original data for the final basis.
    let mut x = vec![0.0; n];
    let bsize = basis2.len();
    let mut bmat = Mat::zeros(bsize, bsize);
    let rhs_kept: Vec<f64> = rows2.iter().map(|&r| b[r]).collect();
    for (rr, &orig_row) in rows2.iter().enumerate() {
        for (cc, &bv) in basis2.iter().enumerate() {
            bmat.set(rr, cc, a.get(orig_row, bv));
        }
    }
    let xb = solve_dense(&bmat, &rhs_kept);
    match xb {
        Some(xb) => {
            for (&bv, &v) in basis2.iter().zip(&xb) {
                x[bv] = v.max(0.0);
            }
        }
        None => {
            // Degenerate refactorization; fall back on tableau values.
            for (r, &bv) in basis2.iter().enumerate() {
                x[bv] = t2.get(r, n).max(0.0);
            }
        }
    }

    let objective_value: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let reduced_costs: Vec<f64> = cost2[..n].to_vec();
    let in_basis = {
        let mut s = vec![false; n];
        for &bv in &basis2 {
            s[bv] = true;
        }
        s
    };
    let alternate_optima = (0..n).any(|c| !in_basis[c] && reduced_costs[c].abs() <= COST_TOL);

    Ok(LpSolution {
        x,
        objective: objective_value,
        basis: basis2,
        reduced_costs,
        alternate_optima,
        iterations,
    })
}

/// Bland-rule simplex sweep over the first `num_cols` columns. `cost` is the
/// reduced-cost row; an entering column has cost > tol.
fn run_simplex(
    t: &mut Mat,
    cost: &mut [f64],
    basis: &mut [usize],
    num_cols: usize,
    iterations: &mut usize,
) -> Result<()> {
    let m = t.rows();
    let width = t.cols();
    let max_iters = 50_000 + 200 * (m + num_cols);
    loop {
        // Bland: smallest-index improving column.
        let entering = (0..num_cols).find(|&c| cost[c] > COST_TOL);
        let Some(col) = entering else {
            return Ok(());
        };
        // Ratio test; ties broken by the smallest basic variable index.
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coeff = t.get(r, col);
            if coeff > PIVOT_TOL {
                let ratio = t.get(r, width - 1) / coeff;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-12
                            || (ratio < lratio + 1e-12 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::LpUnbounded);
        };
        pivot(t, cost, row, col);
        basis[row] = col;
        *iterations += 1;
        if *iterations > max_iters {
            return Err(Error::IterationLimit(format!(
                "simplex exceeded {max_iters} pivots"
            )));
        }
    }
}

fn pivot(t: &mut Mat, cost: &mut [f64], row: usize, col: usize) {
    let width = t.cols();
    let piv = t.get(row, col);
    for c in 0..width {
        let v = t.get(row, c) / piv;
        t.set(row, c, v);
    }
    t.set(row, col, 1.0);
    for r in 0..t.rows() {
        if r == row {
            continue;
        }
        let factor = t.get(r, col);
        if factor != 0.0 {
            for c in 0..width {
                let v = t.get(r, c) - factor * t.get(row, c);
                t.set(r, c, v);
            }
            t.set(r, col, 0.0);
        }
    }
    let factor = cost[col];
    if factor != 0.0 {
        for c in 0..width.min(cost.len()) {
            cost[c] -= factor * t.get(row, c);
        }
        cost[col] = 0.0;
    }
}
