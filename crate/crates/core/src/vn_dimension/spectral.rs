//! Spectral projections of Dirichlet chain Laplacians: dense decomposition
//! for small chain spaces, Lanczos quadrature of the local spectral measure
//! otherwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::Result;
use crate::orbit::Truncation;
use crate::sparse::CsrMatrix;

/// Chain spaces up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 2000;

/// Default cap on Lanczos steps per starting vector.
pub const MAX_LANCZOS_STEPS: usize = 1500;

/// Δ_n = D Dᵀ + B Bᵀ on n-chains, where D holds the coboundaries of
/// interior (n−1)-cells and B the boundaries of all (n+1)-cells.
#[derive(Clone, Debug)]
pub struct ChainLaplacian {
    dim: usize,
    star: CsrMatrix,
    cycles: CsrMatrix,
}

impl ChainLaplacian {
    pub fn new(t: &Truncation, n: usize) -> Result<Self> {
        let dim = t.num_cells(n);
        let star = if n >= 1 && n <= t.dims() {
            let interior: Vec<usize> = (0..t.num_cells(n - 1)).filter(|&i| t.cells(n - 1)[i].interior).collect();
            t.boundary(n)?.transpose().select_columns(&interior).to_csr()
        } else {
            crate::sparse::SparseIntMatrix::zeros(dim, 0).to_csr()
        };
        let cycles = if n < t.dims() {
            t.boundary(n + 1)?.to_csr()
        } else {
            crate::sparse::SparseIntMatrix::zeros(dim, 0).to_csr()
        };
        Ok(Self { dim, star, cycles })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = Δ x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let mut y = vec![0.0; self.star.ncols()];
        self.star.tmul_vec_add(x, &mut y);
        self.star.mul_vec(&y, out);
        let mut z = vec![0.0; self.cycles.ncols()];
        self.cycles.tmul_vec_add(x, &mut z);
        let mut w = vec![0.0; self.dim];
        self.cycles.mul_vec(&z, &mut w);
        for (o, v) in out.iter_mut().zip(w) {
            *o += v;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut x = vec![0.0; self.dim];
        let mut out = vec![0.0; self.dim];
        for j in 0..self.dim {
            x[j] = 1.0;
            self.apply(&x, &mut out);
            for (i, v) in out.iter().enumerate() {
                m[(i, j)] = *v;
            }
            x[j] = 0.0;
        }
        m
    }
}

/// Full eigensystem of a small Laplacian.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl DenseSpectrum {
    pub fn new(lap: &ChainLaplacian) -> Self {
        if lap.dim() == 0 {
            return Self { values: DVector::zeros(0), vectors: DMatrix::zeros(0, 0) };
        }
        let e = SymmetricEigen::new(lap.to_dense());
        Self { values: e.eigenvalues, vectors: e.eigenvectors }
    }

    /// ⟨P_{<ε} e_i, e_i⟩
    pub fn weight_below(&self, i: usize, eps: f64) -> f64 {
        self.values.iter().enumerate().filter(|(_, &l)| l < eps).map(|(c, _)| self.vectors[(i, c)].powi(2)).sum()
    }

    /// Orthonormal basis of the range of P_{<ε}, as columns.
    pub fn basis_below(&self, eps: f64) -> DMatrix<f64> {
        let cols: Vec<usize> = (0..self.values.len()).filter(|&c| self.values[c] < eps).collect();
        self.vectors.select_columns(&cols)
    }
}

/// Spectral measure of e_start under Δ, as (node, weight) pairs from Gauss
/// quadrature on the Lanczos tridiagonalization. The iteration stops when
/// the mass below every ε in `eps` is stable, or on breakdown (then exact).
pub fn lanczos_measure(lap: &ChainLaplacian, start: usize, eps: &[f64], max_steps: usize) -> Vec<(f64, f64)> {
    let n = lap.dim();
    let m_max = n.min(max_steps).max(1);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut q = vec![0.0; n];
    q[start] = 1.0;
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut prev: Option<Vec<f64>> = None;
    let mut stable = 0;
    let mut next_check = 8usize;
    loop {
        lap.apply(&q, &mut w);
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        if let (Some(b), Some(p)) = (beta.last(), basis.last()) {
            axpy(-b, p, &mut w);
        }
        basis.push(std::mem::take(&mut q));
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        alpha.push(a);
        let b = dot(&w, &w).sqrt();
        let steps = alpha.len();
        let breakdown = b < 1e-10;
        if breakdown || steps >= m_max || steps >= next_check {
            let measure = gauss_quadrature(&alpha, &beta);
            if breakdown || steps >= m_max {
                return measure;
            }
            let masses: Vec<f64> = eps.iter().map(|&e| mass_below(&measure, e)).collect();
            if let Some(p) = &prev {
                if p.iter().zip(&masses).all(|(x, y)| (x - y).abs() < 1e-11) {
                    stable += 1;
                    if stable >= 2 {
                        return measure;
                    }
                } else {
                    stable = 0;
                }
            }
            prev = Some(masses);
            next_check = steps + (steps / 4).max(8);
        }
        beta.push(b);
        q = w.iter().map(|x| x / b).collect();
    }
}

pub fn mass_below(measure: &[(f64, f64)], eps: f64) -> f64 {
    measure.iter().filter(|(l, _)| *l < eps).map(|(_, w)| w).sum()
}

/// Eigenvalues of the symmetric tridiagonal matrix (diagonal `alpha`,
/// off-diagonal `beta`) with the squared first components of their
/// eigenvectors. Implicit QL, tracking only the first eigenvector row.
pub fn gauss_quadrature(alpha: &[f64], beta: &[f64]) -> Vec<(f64, f64)> {
    let n = alpha.len();
    let mut d = alpha.to_vec();
    let mut e: Vec<f64> = beta.iter().take(n.saturating_sub(1)).copied().chain(std::iter::once(0.0)).collect();
    e.truncate(n);
    let mut z = vec![0.0; n];
    if n > 0 {
        z[0] = 1.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.into_iter().zip(z).map(|(l, v)| (l, v * v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::{build_ball, OrbitGraph};

    #[test]
    fn quadrature_matches_dense_eigensystem() {
        let alpha = [2.0, -1.0, 0.5, 3.0, 1.0];
        let beta = [1.0, 0.3, 2.0, 0.7];
        let mut t = DMatrix::<f64>::zeros(5, 5);
        for i in 0..5 {
            t[(i, i)] = alpha[i];
            if i < 4 {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let e = SymmetricEigen::new(t);
        let mut dense: Vec<(f64, f64)> = (0..5).map(|c| (e.eigenvalues[c], e.eigenvectors[(0, c)].powi(2))).collect();
        let mut ql = gauss_quadrature(&alpha, &beta);
        dense.sort_by(|a, b| a.0.total_cmp(&b.0));
        ql.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (a, b) in dense.iter().zip(&ql) {
            assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_agrees_with_dense_on_a_tree_ball() {
        let t = build_ball(&OrbitGraph::free(2), 4).unwrap();
        let lap = ChainLaplacian::new(&t, 1).unwrap();
        let dense = DenseSpectrum::new(&lap);
        for eps in [1e-1, 1e-3] {
            let m = lanczos_measure(&lap, 0, &[eps], 400);
            assert!((mass_below(&m, eps) - dense.weight_below(0, eps)).abs() < 1e-9);
        }
    }

    #[test]
    fn sparse_and_dense_application_agree() {
        let t = build_ball(&OrbitGraph::grid(2), 2).unwrap();
        let lap = ChainLaplacian::new(&t, 1).unwrap();
        let d = lap.to_dense();
        assert!((d.clone() - d.transpose()).amax() == 0.0);
    }
}
