//! Minimal sparse CSR matrices and a Jacobi-preconditioned BiCGStab solver.
//!
//! The cell-problem systems solved here are singular with a one-dimensional
//! kernel (constants), consistent by construction of the right-hand side.
//! BiCGStab on a consistent singular system converges to *some* solution;
//! the caller removes the kernel component afterwards.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("linear solver failed to converge: residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Triplet accumulator; duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, triplets: Vec::new() }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        if value != 0.0 {
            self.triplets.push((row, col, value));
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        self.triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::with_capacity(self.triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(self.triplets.len());
        for (r, c, v) in self.triplets {
            if let (Some(&last_c), Some(last_v)) = (indices.last(), data.last_mut()) {
                if indptr[r + 1] > indptr[r] && last_c == c && indices.len() == indptr[r + 1] {
                    *last_v += v;
                    continue;
                }
            }
            indices.push(c);
            data.push(v);
            indptr[r + 1] = indices.len();
        }
        // Rows fill in order; carry forward the pointers of empty rows.
        for r in 0..self.n {
            if indptr[r + 1] < indptr[r] {
                indptr[r + 1] = indptr[r];
            }
        }
        CsrMatrix { n: self.n, indptr, indices, data }
    }
}

impl CsrMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.indices[k] == r {
                    d[r] += self.data[k];
                }
            }
        }
        d
    }

    /// Max-norm of the column sums; zero (to rounding) when the transpose
    /// kernel contains the constants, which is what makes the discrete
    /// compatibility value exact.
    pub fn column_sum_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                sums[self.indices[k]] += self.data[k];
            }
        }
        sums.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned BiCGStab for `A x = b` starting from `x0`.
///
/// Stops when `||b - A x|| <= max(rtol ||b||, atol)`; restarts on the usual
/// breakdowns. Works on consistent singular systems.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    rtol: f64,
    atol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SparseError> {
    let n = a.n();
    let b_norm = norm(b);
    let target = (rtol * b_norm).max(atol);
    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if norm(&r) <= target {
        let res = norm(&r);
        return Ok((x, SolveStats { iterations: 0, residual: res }));
    }
    let inv_diag: Vec<f64> =
        a.diagonal().iter().map(|d| if d.abs() > 1e-300 { 1.0 / d } else { 1.0 }).collect();

    let mut r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];

    let mut residual = norm(&r);
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            // Breakdown: restart with the current residual as shadow vector.
            r_hat.copy_from_slice(&r);
            rho = dot(&r_hat, &r);
            v.fill(0.0);
            p.fill(0.0);
            omega = 1.0;
            alpha = 1.0;
            if rho.abs() < 1e-300 {
                break;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            p_hat[i] = p[i] * inv_diag[i];
        }
        a.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-300 {
            r_hat.copy_from_slice(&r);
            v.fill(0.0);
            p.fill(0.0);
            rho = 1.0;
            omega = 1.0;
            alpha = 1.0;
            continue;
        }
        alpha = rho_new / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            residual = norm(&r);
            if residual <= target {
                return Ok((x, SolveStats { iterations: it, residual }));
            }
        }
        for i in 0..n {
            s_hat[i] = s[i] * inv_diag[i];
        }
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
        }
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        residual = norm(&r);
        if residual <= target {
            // Recompute the true residual before accepting.
            a.matvec(&x, &mut t);
            for i in 0..n {
                t[i] = b[i] - t[i];
            }
            residual = norm(&t);
            if residual <= target * 4.0 {
                return Ok((x, SolveStats { iterations: it, residual }));
            }
            r.copy_from_slice(&t);
        }
        if omega.abs() < 1e-300 {
            break;
        }
        rho = rho_new;
    }
    Err(SparseError::NotConverged { residual, iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut b = CooBuilder::new(n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn bicgstab_solves_spd_system() {
        let n = 64;
        let a = laplacian_1d(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.matvec(&x_true, &mut b);
        let (x, stats) = bicgstab(&a, &b, &vec![0.0; n], 1e-13, 1e-14, 10_000).unwrap();
        let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "error {err}, stats {stats:?}");
    }

    #[test]
    fn singular_consistent_system_is_solved() {
        // Periodic 1-d Laplacian: kernel = constants, b with zero sum.
        let n = 32;
        let mut builder = CooBuilder::new(n);
        for i in 0..n {
            builder.add(i, i, 2.0);
            builder.add(i, (i + 1) % n, -1.0);
            builder.add(i, (i + n - 1) % n, -1.0);
        }
        let a = builder.build();
        assert!(a.column_sum_norm() < 1e-14);
        let b: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect();
        let (x, stats) = bicgstab(&a, &b, &vec![0.0; n], 1e-12, 1e-14, 10_000).unwrap();
        assert!(stats.residual < 1e-11);
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let res: f64 = r.iter().zip(&b).map(|(y, bb)| (y - bb).abs()).fold(0.0, f64::max);
        assert!(res < 1e-10);
    }

    #[test]
    fn inconsistent_singular_system_reports_failure() {
        let n = 16;
        let mut builder = CooBuilder::new(n);
        for i in 0..n {
            builder.add(i, i, 2.0);
            builder.add(i, (i + 1) % n, -1.0);
            builder.add(i, (i + n - 1) % n, -1.0);
        }
        let a = builder.build();
        let b = vec![1.0; n]; // constant right-hand side is not orthogonal to the kernel
        let err = bicgstab(&a, &b, &vec![0.0; n], 1e-12, 1e-14, 500).unwrap_err();
        match err {
            SparseError::NotConverged { residual, .. } => assert!(residual > 1e-3),
        }
    }

    #[test]
    fn duplicate_triplets_are_accumulated() {
        let mut b = CooBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.5);
        b.add(1, 1, 1.0);
        let a = b.build();
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.5, 1.0]);
    }
}
