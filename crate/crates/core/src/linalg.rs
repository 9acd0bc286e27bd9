//! Minimal dense matrix support: row-major storage, null-space extraction by
//! row reduction with partial pivoting, and a pivoted linear solve used to
//! refine simplex basic solutions.

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal basis of the null space of `a`, found by Gaussian elimination
/// with partial pivoting. A pivot below `tol` in absolute value ends the
/// elimination; the corresponding columns become free variables.
pub fn null_space_basis(a: &Mat, tol: f64) -> Vec<Vec<f64>> {
    let m = a.rows();
    let n = a.cols();
    let mut u = a.clone();

    // Forward elimination to row echelon form, recording pivot columns.
    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..n {
        if row >= m {
            break;
        }
        // Partial pivoting: largest entry in this column at or below `row`.
        let (best_row, best_val) = (row..m)
            .map(|r| (r, u.get(r, col).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if best_val <= tol {
            continue; // free column
        }
        if best_row != row {
            for c in 0..n {
                let tmp = u.get(row, c);
                u.set(row, c, u.get(best_row, c));
                u.set(best_row, c, tmp);
            }
        }
        let piv = u.get(row, col);
        for r in (row + 1)..m {
            let factor = u.get(r, col) / piv;
            if factor != 0.0 {
                for c in col..n {
                    let v = u.get(r, c) - factor * u.get(row, c);
                    u.set(r, c, v);
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let rank = pivot_cols.len();

    // Back substitution: one basis vector per free column.
    let pivot_set: Vec<bool> = {
        let mut s = vec![false; n];
        for &c in &pivot_cols {
            s[c] = true;
        }
        s
    };
    let mut basis = Vec::with_capacity(n - rank);
    for free in (0..n).filter(|c| !pivot_set[*c]) {
        let mut v = vec![0.0; n];
        v[free] = 1.0;
        for (i, &pc) in pivot_cols.iter().enumerate().rev() {
            let mut s = u.get(i, free);
            for &qc in pivot_cols.iter().skip(i + 1) {
                s += u.get(i, qc) * v[qc];
            }
            v[pc] = -s / u.get(i, pc);
        }
        basis.push(v);
    }

    // Gram-Schmidt with renormalization.
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for mut v in basis {
        for q in &ortho {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= dot * qi;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tol {
            for vi in &mut v {
                *vi /= norm;
            }
            ortho.push(v);
        }
    }
    ortho
}

/// Solve A x = b by Gaussian elimination with partial pivoting, with one step
/// of iterative refinement. Returns `None` when a pivot degenerates.
pub fn solve_dense(a: &Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);

    let solve_once = |rhs: &[f64]| -> Option<Vec<f64>> {
        let mut u = a.clone();
        let mut y = rhs.to_vec();
        for col in 0..n {
            let (best, val) = (col..n)
                .map(|r| (r, u.get(r, col).abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))?;
            if val < 1e-13 {
                return None;
            }
            if best != col {
                for c in 0..n {
                    let tmp = u.get(col, c);
                    u.set(col, c, u.get(best, c));
                    u.set(best, c, tmp);
                }
                y.swap(col, best);
            }
            let piv = u.get(col, col);
            for r in (col + 1)..n {
                let factor = u.get(r, col) / piv;
                if factor != 0.0 {
                    for c in col..n {
                        let v = u.get(r, c) - factor * u.get(col, c);
                        u.set(r, c, v);
                    }
                    y[r] -= factor * y[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in (r + 1)..n {
                s -= u.get(r, c) * x[c];
            }
            x[r] = s / u.get(r, r);
        }
        Some(x)
    };

    let mut x = solve_once(b)?;
    // One refinement pass knocks the residual down to the rounding floor.
    let ax = a.mul_vec(&x);
    let resid: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if let Some(dx) = solve_once(&resid) {
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    Some(x)
}
