//! Exact dense symmetric eigensolver (cyclic Jacobi) and the algebraic
//! connectivity oracle built on it.

use thiserror::Error;

use crate::graph::Graph;
use crate::linalg::Matrix;

/// Off-diagonal Frobenius norm, relative to `max(1, ‖M‖_F)`, at which
/// iteration stops.
pub const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix is not symmetric: |M[{0},{1}] - M[{1},{0}]| = {2:e}")]
    NotSymmetric(usize, usize, f64),
    #[error("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps (off-diagonal norm {0:e})")]
    NotConverged(f64),
}

/// Eigen-decomposition `M = V diag(values) Vᵀ` with eigenvalues ascending.
/// Column `k` of `vectors` belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Ascending Laplacian spectrum of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianSpectrum {
    pub eigenvalues: Vec<f64>,
}

impl LaplacianSpectrum {
    pub fn of(g: &Graph) -> Self {
        let eigenvalues = eigenvalues_symmetric(&g.laplacian())
            .expect("graph Laplacians are symmetric and Jacobi converges on them");
        Self { eigenvalues }
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }
}

pub fn eigenvalues_symmetric(m: &Matrix) -> Result<Vec<f64>, EigenError> {
    symmetric_eigen(m).map(|e| e.values)
}

pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen, EigenError> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(EigenError::NotSquare(rows, cols));
    }
    let n = rows;
    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > SYMMETRY_TOLERANCE * scale {
                return Err(EigenError::NotSymmetric(i, j, d));
            }
        }
    }

    let mut a = m.clone();
    // symmetrize exactly so rotations see a consistent matrix
    for i in 0..n {
        for j in i + 1..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = s;
            a[(j, i)] = s;
        }
    }
    let mut v = Matrix::identity(n);
    let frob = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = OFF_DIAGONAL_TOLERANCE * frob.max(1.0);

    let mut converged = n < 2;
    let mut off = off_diagonal_norm(&a);
    for _ in 0..MAX_SWEEPS {
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&a);
    }
    if !converged && off > threshold {
        return Err(EigenError::NotConverged(off));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, k)] = v[(r, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = a.rows();
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Second-smallest Laplacian eigenvalue (Fiedler value).
pub fn algebraic_connectivity(g: &Graph) -> f64 {
    LaplacianSpectrum::of(g).lambda2()
}
