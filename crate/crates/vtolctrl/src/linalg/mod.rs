//! Dense real linear algebra sized for the small state-space problems of
//! this crate: pivoted solves, QR and Jacobi eigensolvers, the matrix
//! exponential, and Kronecker products for vectorized Lyapunov systems.

mod eig;
mod expm;
mod matrix;
mod solve;

pub use eig::{eig_general, spectral_abscissa, sym_eig, sym_eig_full, sym_psd_sqrt};
pub use expm::mat_exp;
pub use matrix::Matrix;
pub use solve::{det, invert, rank, solve_linear, solve_linear_with_floor};

/// Numerical tolerances threaded explicitly through every solver; no module
/// keeps hidden global thresholds.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative residual bound for linear solves and iterative sweeps.
    pub residual_tol: f64,
    /// Eigenvalue slack used when deciding definiteness.
    pub definiteness_slack: f64,
    /// Iteration cap for eigenvalue and Riccati iterations.
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            residual_tol: 1e-10,
            definiteness_slack: 1e-8,
            max_iter: 200,
        }
    }
}

/// Kronecker product `A (x) B` with shape `(rA*rB) x (cA*cB)`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = Matrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization, the convention `vec(AXB) = (B^T (x) A) vec(X)`
/// relies on.
pub fn vec_cols(m: &Matrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.rows() * m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec_cols`].
pub fn unvec_cols(v: &[f64], rows: usize, cols: usize) -> Matrix {
    assert_eq!(v.len(), rows * cols);
    Matrix::from_fn(rows, cols, |i, j| v[j * rows + i])
}
