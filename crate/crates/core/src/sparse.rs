//! Compressed sparse row matrices, just enough to assemble the implicit operators for the
//! multigrid preconditioner.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mat::Mat;

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed, explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut out = Self { rows, cols, indptr, indices, values };
        out.prune();
        out
    }

    pub fn from_dense(a: &Mat) -> Self {
        let mut t = Vec::new();
        for j in 0..a.cols() {
            for i in 0..a.rows() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), t)
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn to_dense(&self) -> Mat {
        let mut a = Mat::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                a[(r, c)] += v;
            }
        }
        a
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().position(|&c| c == r).map_or(0.0, |p| vals[p])
            })
            .collect()
    }

    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *out = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            t.extend(cols.iter().zip(vals).map(|(&c, &v)| (c, r, v)));
        }
        Self::from_triplets(self.cols, self.rows, t)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out.prune();
        out
    }

    pub fn add(&self, rhs: &Csr) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape { context: "sparse add", expected: (self.rows, self.cols), found: (rhs.rows, rhs.cols) });
        }
        let mut t = Vec::with_capacity(self.nnz() + rhs.nnz());
        for m in [self, rhs] {
            for r in 0..m.rows {
                let (cols, vals) = m.row(r);
                t.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, v)));
            }
        }
        Ok(Self::from_triplets(self.rows, self.cols, t))
    }

    pub fn matmul(&self, rhs: &Csr) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape { context: "sparse matmul", expected: (self.cols, rhs.cols), found: (rhs.rows, rhs.cols) });
        }
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; rhs.cols];
        let mut mark = vec![usize::MAX; rhs.cols];
        let mut touched = Vec::new();
        for r in 0..self.rows {
            touched.clear();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (rc, rv) = rhs.row(k);
                for (&c, &b) in rc.iter().zip(rv) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                if acc[c] != 0.0 {
                    indices.push(c);
                    values.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Ok(Self { rows: self.rows, cols: rhs.cols, indptr, indices, values })
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Csr) -> Self {
        let mut t = Vec::with_capacity(self.nnz() * rhs.nnz());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &a) in cols.iter().zip(vals) {
                for rr in 0..rhs.rows {
                    let (cc, vv) = rhs.row(rr);
                    t.extend(cc.iter().zip(vv).map(|(&c2, &b)| (r * rhs.rows + rr, c * rhs.cols + c2, a * b)));
                }
            }
        }
        Self::from_triplets(self.rows * rhs.rows, self.cols * rhs.cols, t)
    }

    /// Block-diagonal `[self, 0; 0, rhs]`.
    pub fn block_diag(&self, rhs: &Csr) -> Self {
        self.block2(None, None, rhs)
    }

    /// `[self, b; c, d]`; missing off-diagonal blocks are zero.
    pub fn block2(&self, b: Option<&Csr>, c: Option<&Csr>, d: &Csr) -> Self {
        let (r0, c0) = (self.rows, self.cols);
        let mut t = Vec::new();
        let mut push = |m: &Csr, dr: usize, dc: usize| {
            for r in 0..m.rows {
                let (cols, vals) = m.row(r);
                t.extend(cols.iter().zip(vals).map(|(&cc, &v)| (r + dr, cc + dc, v)));
            }
        };
        push(self, 0, 0);
        if let Some(b) = b {
            push(b, 0, c0);
        }
        if let Some(c) = c {
            push(c, r0, 0);
        }
        push(d, r0, c0);
        Self::from_triplets(r0 + d.rows, c0 + d.cols, t)
    }
}
