//! Sparse symmetric matrices, a banded Cholesky factorization, and a
//! Jacobi-preconditioned conjugate gradient fallback.

use crate::error::{CoreError, Result};

/// Symmetric positive (semi)definite matrix in CSR form. Both triangles are
/// stored so matrix-vector products stay simple.
#[derive(Clone, Debug)]
pub struct SparseSpd {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSpd {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut counts = vec![0usize; n];
        let mut last = None;
        for &(r, c, v) in &triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for r in 0..n {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        SparseSpd { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Entry lookup for tests and diagnostics.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Largest |row - col| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                bw = bw.max(self.col_idx[k].abs_diff(r));
            }
        }
        bw
    }
}

/// Cholesky factor of a banded symmetric positive definite matrix, stored as
/// dense rows of the lower band.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// row i occupies `band[i*(bw+1) .. (i+1)*(bw+1)]`; slot `k` holds
    /// `L[i, i - bw + k]`, so the diagonal sits in slot `bw`.
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factorize(a: &SparseSpd) -> Result<Self> {
        let n = a.n;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for r in 0..n {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                let c = a.col_idx[k];
                if c <= r {
                    band[r * w + (c + bw - r)] = a.values[k];
                }
            }
        }
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let (head, tail) = band.split_at_mut(i * w);
            let row_i = &mut tail[..w];
            for j in jmin..i {
                let row_j = &head[j * w..(j + 1) * w];
                let len = j - jmin;
                let oi = jmin + bw - i;
                let oj = jmin + bw - j;
                let mut s = row_i[j + bw - i];
                s -= row_i[oi..oi + len]
                    .iter()
                    .zip(&row_j[oj..oj + len])
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
                row_i[j + bw - i] = s / row_j[bw];
            }
            let oi = jmin + bw - i;
            let mut s = row_i[bw];
            s -= row_i[oi..bw].iter().map(|x| x * x).sum::<f64>();
            if s <= 0.0 || !s.is_finite() {
                return Err(CoreError::NotSpd { row: i, pivot: s });
            }
            row_i[bw] = s.sqrt();
        }
        Ok(BandedCholesky { n, bw, band })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut x = b.to_vec();
        // forward substitution L y = b
        for i in 0..n {
            let jmin = i.saturating_sub(bw);
            let oi = jmin + bw - i;
            let row = &self.band[i * w..(i + 1) * w];
            let mut s = x[i];
            s -= row[oi..bw].iter().zip(&x[jmin..i]).map(|(l, y)| l * y).sum::<f64>();
            x[i] = s / row[bw];
        }
        // backward substitution L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            let mmax = (i + bw).min(n - 1);
            for m in i + 1..=mmax {
                s -= self.band[m * w + (i + bw - m)] * x[m];
            }
            x[i] = s / self.band[i * w + bw];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients; converges to relative residual
/// `tol` or errors out after `max_iters`.
pub fn pcg(a: &SparseSpd, b: &[f64], tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| 1.0 / d).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
    let mut ap = vec![0.0; n];
    for it in 0..max_iters {
        a.matvec_into(&p, &mut ap);
        let pap = p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        if it + 1 == max_iters {
            return Err(CoreError::PcgStall { iters: max_iters, residual: rnorm / bnorm, tol });
        }
    }
    unreachable!("max_iters >= 1 checked by loop structure")
}

/// Solver handle for one assembled interior operator: banded Cholesky when
/// the factorization succeeds, Jacobi-PCG on the assembled matrix otherwise.
pub enum SpdSolver {
    Direct(BandedCholesky),
    Iterative(SparseSpd),
}

impl SpdSolver {
    pub fn new(a: SparseSpd) -> Self {
        match BandedCholesky::factorize(&a) {
            Ok(chol) => SpdSolver::Direct(chol),
            Err(e) => {
                log::warn!("banded Cholesky failed ({e}); falling back to PCG");
                SpdSolver::Iterative(a)
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            SpdSolver::Direct(chol) => Ok(chol.solve(b)),
            SpdSolver::Iterative(a) => pcg(a, b, 1e-10, 20 * a.n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_spd() -> SparseSpd {
        // 1d Poisson stencil, 5 unknowns
        let mut t = Vec::new();
        for i in 0..5usize {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        SparseSpd::from_triplets(5, t)
    }

    #[test]
    fn triplets_merge_duplicates() {
        let a = SparseSpd::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (0, 1, 0.5)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.5);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn cholesky_solves_poisson() {
        let a = small_spd();
        assert_eq!(a.bandwidth(), 1);
        let chol = BandedCholesky::factorize(&a).unwrap();
        let b = vec![1.0, 0.0, 2.0, 0.0, 1.0];
        let x = chol.solve(&b);
        let back = a.matvec(&x);
        for (bi, yi) in b.iter().zip(&back) {
            assert_abs_diff_eq!(bi, yi, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SparseSpd::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        match BandedCholesky::factorize(&a) {
            Err(CoreError::NotSpd { row: 1, .. }) => {}
            other => panic!("expected NotSpd, got {other:?}"),
        }
    }

    #[test]
    fn pcg_matches_direct() {
        let a = small_spd();
        let b = vec![0.3, -1.0, 2.0, 0.7, -0.2];
        let chol = BandedCholesky::factorize(&a).unwrap();
        let x_direct = chol.solve(&b);
        let x_pcg = pcg(&a, &b, 1e-12, 100).unwrap();
        for (u, v) in x_direct.iter().zip(&x_pcg) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-9);
        }
    }

    #[test]
    fn pcg_reports_stall() {
        let a = small_spd();
        let b = vec![1.0; 5];
        match pcg(&a, &b, 1e-14, 1) {
            Err(CoreError::PcgStall { iters: 1, .. }) => {}
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn solver_picks_direct_and_iterative_solves_too() {
        let a = small_spd();
        match SpdSolver::new(a.clone()) {
            SpdSolver::Direct(_) => {}
            SpdSolver::Iterative(_) => panic!("expected direct factorization"),
        }
        let b = vec![1.0, 2.0, 3.0, 2.0, 1.0];
        let direct = SpdSolver::new(a.clone()).solve(&b).unwrap();
        let iterative = SpdSolver::Iterative(a).solve(&b).unwrap();
        for (u, v) in direct.iter().zip(&iterative) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-8);
        }
    }
}
