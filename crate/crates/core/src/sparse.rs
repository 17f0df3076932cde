//! Compressed sparse row matrices and a small dense LU solver.
//!
//! The CSR type is deliberately minimal: triplet assembly, matvec, row
//! iteration. Factorization of the (symmetric positive definite) FEM systems
//! lives in [`crate::cholesky`]; the dense LU here serves the small reduced
//! systems of the active-set method and test oracles.

use alloc::vec;
use alloc::vec::Vec;

/// Square sparse matrix in CSR format with sorted, unique column indices per row.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n` x `n` matrix from (row, col, value) triplets.
    ///
    /// Duplicate entries are summed. Panics if an index is out of range.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut values = vec![0.0f64; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let slot = next[r];
            col_idx[slot] = c;
            values[slot] = v;
            next[r] += 1;
        }
        // sort each row by column and merge duplicates in place
        let mut out_ptr = vec![0usize; n + 1];
        let mut out_cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut out_vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            row.clear();
            for k in counts[r]..counts[r + 1] {
                row.push((col_idx[k], values[k]));
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = row[i].1;
                let mut j = i + 1;
                while j < row.len() && row[j].0 == c {
                    v += row[j].1;
                    j += 1;
                }
                out_cols.push(c);
                out_vals.push(v);
                i = j;
            }
            out_ptr[r + 1] = out_cols.len();
        }
        CsrMatrix {
            n,
            row_ptr: out_ptr,
            col_idx: out_cols,
            values: out_vals,
        }
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension mismatch");
        let mut y = vec![0.0; self.n];
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
        y
    }

    /// Entry (r, c), zero if not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Position of entry (r, c) in the value array, if stored.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .binary_search(&c)
            .ok()
            .map(|k| span.start + k)
    }

    /// Stored values, in row-major CSR order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable stored values (pattern is fixed; only values may change).
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Largest absolute asymmetry max |A_ij - A_ji| over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let d = v - self.get(*c, r);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Largest absolute stored entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sum of v^T A w.
    pub fn bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        let aw = self.matvec(w);
        v.iter().zip(&aw).map(|(a, b)| a * b).sum()
    }
}

/// Dense LU factorization with partial pivoting for small systems.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factorizes the row-major `n` x `n` matrix `a`; fails on (numerical) singularity.
    pub fn new(n: usize, a: &[f64]) -> Option<Self> {
        assert_eq!(a.len(), n * n, "dense matrix shape mismatch");
        let mut lu = a.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let cand = lu[r * n + k].abs();
                if cand > best {
                    best = cand;
                    p = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                for c in (k + 1)..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
        Some(DenseLu { n, lu, piv })
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs dimension mismatch");
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn triplets_merge_and_sort() {
        let a = CsrMatrix::from_triplets(
            3,
            &[
                (0, 2, 1.0),
                (0, 0, 2.0),
                (0, 2, 0.5),
                (2, 1, -1.0),
                (1, 1, 3.0),
            ],
        );
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.get(0, 2), 1.5);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 1), 3.0);
        assert_eq!(a.get(2, 1), -1.0);
        assert_eq!(a.get(2, 2), 0.0);
        let y = a.matvec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, alloc::vec![2.0 + 4.5, 6.0, -2.0]);
    }

    #[test]
    fn dense_lu_solves_random_systems() {
        let mut rng = StdRng::seed_from_u64(7);
        for n in [1usize, 2, 5, 17, 40] {
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // diagonal boost to keep the random matrix comfortably regular
            let mut m = a.clone();
            for i in 0..n {
                m[i * n + i] += n as f64;
            }
            let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut b = alloc::vec![0.0; n];
            for r in 0..n {
                for c in 0..n {
                    b[r] += m[r * n + c] * xs[c];
                }
            }
            let lu = DenseLu::new(n, &m).expect("regular matrix must factorize");
            let got = lu.solve(&b);
            for (g, x) in got.iter().zip(&xs) {
                assert!((g - x).abs() < 1e-10, "n = {n}: {g} vs {x}");
            }
        }
    }

    #[test]
    fn dense_lu_rejects_singular() {
        assert!(DenseLu::new(2, &[1.0, 2.0, 2.0, 4.0]).is_none());
    }
}
