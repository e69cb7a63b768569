//! Minimal sparse matrices: integer incidence matrices stored by column, and
//! a float CSR form used for operator application inside the eigen-solvers.

use nalgebra::DMatrix;

/// Integer matrix stored column-wise; each column is sorted by row and has
/// no explicit zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseIntMatrix {
    nrows: usize,
    cols: Vec<Vec<(usize, i64)>>,
}

impl SparseIntMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, cols: vec![Vec::new(); ncols] }
    }

    /// Builds a matrix from unsorted column entries, summing duplicates.
    pub fn from_columns(nrows: usize, cols: Vec<Vec<(usize, i64)>>) -> Self {
        let cols = cols
            .into_iter()
            .map(|mut c| {
                c.sort_unstable_by_key(|&(r, _)| r);
                let mut out: Vec<(usize, i64)> = Vec::with_capacity(c.len());
                for (r, v) in c {
                    debug_assert!(r < nrows);
                    match out.last_mut() {
                        Some((lr, lv)) if *lr == r => *lv += v,
                        _ => out.push((r, v)),
                    }
                }
                out.retain(|&(_, v)| v != 0);
                out
            })
            .collect();
        Self { nrows, cols }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, i64)] {
        &self.cols[j]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[(usize, i64)]> {
        self.cols.iter().map(|c| c.as_slice())
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.cols[j]
            .binary_search_by_key(&i, |&(r, _)| r)
            .map(|k| self.cols[j][k].1)
            .unwrap_or(0)
    }

    pub fn transpose(&self) -> SparseIntMatrix {
        let mut cols = vec![Vec::new(); self.nrows];
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                cols[i].push((j, v));
            }
        }
        SparseIntMatrix { nrows: self.ncols(), cols }
    }

    /// Exact product `self * rhs`.
    pub fn mul(&self, rhs: &SparseIntMatrix) -> SparseIntMatrix {
        assert_eq!(self.ncols(), rhs.nrows(), "inner dimensions differ");
        let cols = rhs
            .cols
            .iter()
            .map(|rc| {
                let mut acc: Vec<(usize, i64)> = Vec::new();
                for &(k, v) in rc {
                    for &(i, w) in &self.cols[k] {
                        acc.push((i, v * w));
                    }
                }
                acc
            })
            .collect();
        SparseIntMatrix::from_columns(self.nrows, cols)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(Vec::is_empty)
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> SparseIntMatrix {
        SparseIntMatrix { nrows: self.nrows, cols: keep.iter().map(|&j| self.cols[j].clone()).collect() }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols());
        for (j, c) in self.cols.iter().enumerate() {
            for &(i, v) in c {
                m[(i, j)] = v as f64;
            }
        }
        m
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let t = self.transpose();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut data = Vec::with_capacity(self.nnz());
        indptr.push(0);
        for row in &t.cols {
            for &(j, v) in row {
                indices.push(j);
                data.push(v as f64);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols(), indptr, indices, data }
    }
}

/// Row-compressed float matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// `out = self * x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            out[i] = s;
        }
    }

    /// `out += selfᵀ * y`
    pub fn tmul_vec_add(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.nrows {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            for k in self.indptr[i]..self.indptr[i + 1] {
                out[self.indices[k]] += self.data[k] * yi;
            }
        }
    }
}
