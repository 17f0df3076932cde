//! Sparse LDL^T factorization for symmetric positive definite systems.
//!
//! The factorization is the classic up-looking algorithm driven by the
//! elimination tree, preceded by a fill-reducing ordering. Because every
//! system here comes from a planar triangulation with known vertex
//! coordinates, the ordering is a geometric nested dissection: recursively
//! split the vertex set at the median coordinate, peel off the interface
//! vertices as a separator, and number the separator last. Symbolic analysis
//! is separated from the numeric phase so that solvers reuse it across
//! repeated factorizations with an unchanged sparsity pattern (the active-set
//! iteration refactorizes the same pattern once per outer step).

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::CsrMatrix;

const ND_LEAF: usize = 64;
const NONE: usize = usize::MAX;

/// Factorization failure: the matrix is not positive definite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NotPositiveDefinite {
    /// Pivot position (in permuted order) where a nonpositive pivot appeared.
    pub pivot: usize,
}

impl core::fmt::Display for NotPositiveDefinite {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "nonpositive pivot at elimination step {}", self.pivot)
    }
}

/// Reusable symbolic data: ordering, elimination tree and column pointers.
#[derive(Clone, Debug)]
pub struct LdlSymbolic {
    n: usize,
    /// `perm[k]` = original index eliminated at step `k`.
    perm: Vec<usize>,
    /// `iperm[original]` = elimination step.
    iperm: Vec<usize>,
    parent: Vec<usize>,
    /// Column pointers of L (`n + 1` entries).
    lp: Vec<usize>,
}

impl LdlSymbolic {
    /// Analyzes the pattern of `a`. When vertex `coords` are supplied the
    /// ordering is geometric nested dissection, otherwise the order is natural.
    pub fn analyze(a: &CsrMatrix, coords: Option<&[[f64; 2]]>) -> Arc<Self> {
        let n = a.n();
        let perm = match coords {
            Some(xy) => {
                assert_eq!(xy.len(), n, "coordinate count must match matrix size");
                nested_dissection(a, xy)
            }
            None => (0..n).collect(),
        };
        let mut iperm = vec![0usize; n];
        for (k, &v) in perm.iter().enumerate() {
            iperm[v] = k;
        }

        // elimination tree and per-column counts of L on the permuted pattern
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut counts = vec![0usize; n];
        for i in 0..n {
            flag[i] = i;
            let (cols, _) = a.row(perm[i]);
            for &c in cols {
                let mut k = iperm[c];
                if k >= i {
                    continue;
                }
                while flag[k] != i {
                    if parent[k] == NONE {
                        parent[k] = i;
                    }
                    counts[k] += 1;
                    flag[k] = i;
                    k = parent[k];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + counts[i];
        }
        Arc::new(LdlSymbolic {
            n,
            perm,
            iperm,
            parent,
            lp,
        })
    }

    /// Number of nonzeros in the strict lower triangle of L.
    pub fn l_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// The elimination order (`perm[k]` = original index at step `k`).
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}

/// Numeric LDL^T factors tied to a [`LdlSymbolic`].
#[derive(Clone, Debug)]
pub struct SpdFactor {
    sym: Arc<LdlSymbolic>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d: Vec<f64>,
}

impl SpdFactor {
    /// Factorizes `a` (symmetric positive definite, full pattern stored).
    pub fn factorize(sym: Arc<LdlSymbolic>, a: &CsrMatrix) -> Result<Self, NotPositiveDefinite> {
        let n = sym.n;
        assert_eq!(a.n(), n, "matrix size must match symbolic analysis");
        let mut l_idx = vec![0usize; sym.l_nnz()];
        let mut l_val = vec![0.0f64; sym.l_nnz()];
        let mut d = vec![0.0f64; n];
        let mut used = vec![0usize; n];
        let mut y = vec![0.0f64; n];
        let mut flag = vec![NONE; n];
        let mut stack = vec![0usize; n];

        for i in 0..n {
            let mut top = n;
            flag[i] = i;
            let (cols, vals) = a.row(sym.perm[i]);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = sym.iperm[c];
                if j > i {
                    continue;
                }
                y[j] += v;
                // collect the new part of the elimination path of j, deepest last
                let mut len = 0usize;
                let mut k = j;
                while flag[k] != i {
                    stack[len] = k;
                    len += 1;
                    flag[k] = i;
                    k = sym.parent[k];
                }
                // move onto the pattern region in topological order
                for s in (0..len).rev() {
                    top -= 1;
                    stack[top] = stack[s];
                }
            }
            let mut di = y[i];
            y[i] = 0.0;
            for s in top..n {
                let j = stack[s];
                let yj = y[j];
                y[j] = 0.0;
                let col = sym.lp[j]..sym.lp[j] + used[j];
                for p in col {
                    y[l_idx[p]] -= l_val[p] * yj;
                }
                let lij = yj / d[j];
                di -= lij * yj;
                let slot = sym.lp[j] + used[j];
                l_idx[slot] = i;
                l_val[slot] = lij;
                used[j] += 1;
            }
            if !(di > 0.0) {
                return Err(NotPositiveDefinite { pivot: i });
            }
            d[i] = di;
        }
        Ok(SpdFactor {
            sym,
            l_idx,
            l_val,
            d,
        })
    }

    /// Solves `A x = b` using the stored factors.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.sym.n;
        assert_eq!(b.len(), n, "rhs dimension mismatch");
        let mut w = vec![0.0f64; n];
        for k in 0..n {
            w[k] = b[self.sym.perm[k]];
        }
        // L z = P b
        for j in 0..n {
            let wj = w[j];
            if wj != 0.0 {
                for p in self.sym.lp[j]..self.sym.lp[j + 1] {
                    w[self.l_idx[p]] -= self.l_val[p] * wj;
                }
            }
        }
        for k in 0..n {
            w[k] /= self.d[k];
        }
        // L^T v = z
        for j in (0..n).rev() {
            let mut acc = w[j];
            for p in self.sym.lp[j]..self.sym.lp[j + 1] {
                acc -= self.l_val[p] * w[self.l_idx[p]];
            }
            w[j] = acc;
        }
        let mut x = vec![0.0f64; n];
        for k in 0..n {
            x[self.sym.perm[k]] = w[k];
        }
        x
    }

    /// The symbolic analysis this factorization was built on.
    pub fn symbolic(&self) -> &Arc<LdlSymbolic> {
        &self.sym
    }
}

/// Geometric nested dissection: returns the elimination order.
fn nested_dissection(a: &CsrMatrix, coords: &[[f64; 2]]) -> Vec<usize> {
    let n = a.n();
    let mut order = Vec::with_capacity(n);
    let mut label = vec![0u8; n];
    let mut set: Vec<usize> = (0..n).collect();
    dissect(a, coords, &mut set, &mut label, &mut order);
    debug_assert_eq!(order.len(), n);
    order
}

fn dissect(
    a: &CsrMatrix,
    coords: &[[f64; 2]],
    set: &mut Vec<usize>,
    label: &mut [u8],
    order: &mut Vec<usize>,
) {
    if set.len() <= ND_LEAF {
        order.extend_from_slice(set);
        return;
    }
    // split along the wider bounding-box axis at the median coordinate
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &v in set.iter() {
        for ax in 0..2 {
            lo[ax] = lo[ax].min(coords[v][ax]);
            hi[ax] = hi[ax].max(coords[v][ax]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    set.sort_unstable_by(|&p, &q| {
        coords[p][axis]
            .partial_cmp(&coords[q][axis])
            .expect("mesh coordinates are finite")
            .then(p.cmp(&q))
    });
    let med = coords[set[set.len() / 2]][axis];
    let mut split = set.partition_point(|&v| coords[v][axis] < med);
    if split == 0 || split == set.len() {
        // degenerate along this axis; fall back to an even count split
        split = set.len() / 2;
    }
    let mut right: Vec<usize> = set.split_off(split);
    for &v in set.iter() {
        label[v] = 1;
    }
    for &v in right.iter() {
        label[v] = 2;
    }
    // interface of the right part becomes the separator, ordered last
    let mut sep = Vec::new();
    right.retain(|&v| {
        let (cols, _) = a.row(v);
        let touches_left = cols.iter().any(|&c| label[c] == 1);
        if touches_left {
            sep.push(v);
        }
        !touches_left
    });
    for &v in set.iter() {
        label[v] = 0;
    }
    for &v in right.iter() {
        label[v] = 0;
    }
    for &v in sep.iter() {
        label[v] = 0;
    }
    dissect(a, coords, set, label, order);
    dissect(a, coords, &mut right, label, order);
    order.extend_from_slice(&sep);
}
