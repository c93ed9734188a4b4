//! Linear solves and rank via pivoted Gaussian elimination.

use crate::error::{Error, Result};

use super::{Matrix, Tolerances};

/// LU factorization with partial pivoting, kept packed in a single matrix.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

fn factor(a: &Matrix, pivot_floor: f64) -> Result<Lu> {
    assert!(a.is_square(), "solve_linear expects a square matrix");
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;

    for k in 0..n {
        let mut p = k;
        let mut max = lu[(k, k)].abs();
        for i in (k + 1)..n {
            let v = lu[(i, k)].abs();
            if v > max {
                max = v;
                p = i;
            }
        }
        if max <= pivot_floor {
            return Err(Error::SingularMatrix { pivot: max });
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let piv = lu[(k, k)];
        for i in (k + 1)..n {
            let m = lu[(i, k)] / piv;
            lu[(i, k)] = m;
            for j in (k + 1)..n {
                lu[(i, j)] -= m * lu[(k, j)];
            }
        }
    }
    Ok(Lu { lu, perm, sign })
}

impl Lu {
    fn solve(&self, b: &Matrix) -> Matrix {
        let n = self.lu.rows();
        let m = b.cols();
        let mut x = Matrix::zeros(n, m);
        // apply permutation
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = b[(self.perm[i], j)];
            }
        }
        // forward substitution (unit lower triangle)
        for k in 0..n {
            for i in (k + 1)..n {
                let l = self.lu[(i, k)];
                for j in 0..m {
                    x[(i, j)] -= l * x[(k, j)];
                }
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let d = self.lu[(k, k)];
            for j in 0..m {
                x[(k, j)] /= d;
            }
            for i in 0..k {
                let u = self.lu[(i, k)];
                for j in 0..m {
                    x[(i, j)] -= u * x[(k, j)];
                }
            }
        }
        x
    }

    fn det(&self) -> f64 {
        let n = self.lu.rows();
        (0..n).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }
}

/// Solves `A X = B` by partially pivoted LU with one step of iterative
/// refinement, so the relative residual stays at the `residual_tol` level
/// even for moderately conditioned systems.
pub fn solve_linear(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let pivot_floor = tol.residual_tol * a.norm_inf().max(f64::MIN_POSITIVE);
    solve_linear_with_floor(a, b, pivot_floor, tol)
}

/// Like [`solve_linear`] but with an explicit pivot floor. A floor of
/// `f64::MIN_POSITIVE` accepts any nonzero pivot, which is what the Bass
/// initializer needs when a reachability Gramian is conditioned near eps:
/// the resulting gain is large but still verified against the closed-loop
/// spectrum by the caller.
pub fn solve_linear_with_floor(
    a: &Matrix,
    b: &Matrix,
    pivot_floor: f64,
    tol: &Tolerances,
) -> Result<Matrix> {
    assert_eq!(a.rows(), b.rows(), "solve_linear dimension mismatch");
    let lu = factor(a, pivot_floor)?;
    let mut x = lu.solve(b);

    let residual = &(a * &x) - b;
    let bn = b.norm_fro();
    if bn > 0.0 && residual.norm_fro() > tol.residual_tol * bn {
        let dx = lu.solve(&residual);
        x = &x - &dx;
    }
    Ok(x)
}

/// Matrix inverse via `solve_linear` against the identity.
pub fn invert(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    solve_linear(a, &Matrix::identity(a.rows()), tol)
}

/// Determinant via LU; returns 0 when the matrix is numerically singular.
pub fn det(a: &Matrix, tol: &Tolerances) -> f64 {
    let pivot_floor = tol.residual_tol * a.norm_inf().max(f64::MIN_POSITIVE);
    match factor(a, pivot_floor) {
        Ok(lu) => lu.det(),
        Err(_) => 0.0,
    }
}

/// Numerical rank by Gaussian elimination with full pivoting. Rows and then
/// columns are equilibrated to unit max first, so states with weak physical
/// coupling do not read as rank deficiency; pivots below `1e-8` of the
/// equilibrated scale count as zero.
pub fn rank(a: &Matrix) -> usize {
    let mut work = a.clone();
    let (rows, cols) = (work.rows(), work.cols());
    if work.max_abs() == 0.0 {
        return 0;
    }
    for i in 0..rows {
        let row_max = (0..cols).map(|j| work[(i, j)].abs()).fold(0.0, f64::max);
        if row_max > 0.0 {
            for j in 0..cols {
                work[(i, j)] /= row_max;
            }
        }
    }
    for j in 0..cols {
        let col_max = (0..rows).map(|i| work[(i, j)].abs()).fold(0.0, f64::max);
        if col_max > 0.0 {
            for i in 0..rows {
                work[(i, j)] /= col_max;
            }
        }
    }
    let threshold = 1.0e-8 * work.max_abs();
    let steps = rows.min(cols);
    let mut rank = 0;
    let mut row_perm: Vec<usize> = (0..rows).collect();
    let mut col_perm: Vec<usize> = (0..cols).collect();

    for k in 0..steps {
        // full pivot search over the trailing block
        let (mut pi, mut pj, mut pmax) = (k, k, 0.0);
        for i in k..rows {
            for j in k..cols {
                let v = work[(row_perm[i], col_perm[j])].abs();
                if v > pmax {
                    pmax = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if pmax <= threshold {
            break;
        }
        row_perm.swap(k, pi);
        col_perm.swap(k, pj);
        rank += 1;
        let piv = work[(row_perm[k], col_perm[k])];
        for i in (k + 1)..rows {
            let m = work[(row_perm[i], col_perm[k])] / piv;
            for j in k..cols {
                let v = work[(row_perm[k], col_perm[j])];
                work[(row_perm[i], col_perm[j])] -= m * v;
            }
        }
    }
    rank
}
