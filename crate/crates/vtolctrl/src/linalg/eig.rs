//! Eigenvalue solvers: Householder Hessenberg reduction followed by the
//! Francis double-shift QR iteration for general real matrices, and cyclic
//! Jacobi rotations for symmetric ones.
//!
//! Jacobi is used wherever a definiteness decision is made (certificates,
//! weight validation) because it delivers reliable small-eigenvalue signs;
//! QR handles the non-symmetric stability checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::{Matrix, Tolerances};

/// In-place Householder similarity reduction to upper Hessenberg form.
fn to_hessenberg(a: &mut Matrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..(n - 2) {
        let scale: f64 = ((k + 1)..n).map(|i| a[(i, k)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut sigma = 0.0;
        for i in (k + 1)..n {
            v[i] = a[(i, k)] / scale;
            sigma += v[i] * v[i];
        }
        let mut alpha = sigma.sqrt();
        if v[k + 1] > 0.0 {
            alpha = -alpha;
        }
        let beta = sigma - alpha * v[k + 1];
        v[k + 1] -= alpha;
        if beta == 0.0 {
            continue;
        }
        // A <- H A, rows k+1..n
        for j in 0..n {
            let s: f64 = ((k + 1)..n).map(|i| v[i] * a[(i, j)]).sum::<f64>() / beta;
            for i in (k + 1)..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A <- A H, cols k+1..n
        for i in 0..n {
            let s: f64 = ((k + 1)..n).map(|j| a[(i, j)] * v[j]).sum::<f64>() / beta;
            for j in (k + 1)..n {
                a[(i, j)] -= s * v[j];
            }
        }
        a[(k + 1, k)] = alpha * scale;
        for i in (k + 2)..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign_of(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of a general real square matrix.
///
/// The matrix is reduced to Hessenberg form and eigenvalues are extracted by
/// the implicit double-shift QR iteration with deflation, so complex pairs
/// come out exactly conjugate. Iteration count per deflated eigenvalue is
/// capped by `tol.max_iter`.
pub fn eig_general(a: &Matrix, tol: &Tolerances) -> Result<Vec<Complex64>> {
    assert!(a.is_square(), "eig_general expects a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !a.all_finite() {
        return Err(Error::NonFinite {
            context: "eig_general input",
        });
    }
    let mut h = a.clone();
    to_hessenberg(&mut h);
    francis_qr(h, tol)
}

/// Double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn francis_qr(mut h: Matrix, tol: &Tolerances) -> Result<Vec<Complex64>> {
    let n = h.rows();
    let mut eigs = vec![Complex64::new(0.0, 0.0); n];
    let eps = f64::EPSILON;
    let anorm: f64 = {
        let mut s = 0.0;
        for i in 0..n {
            for j in i.saturating_sub(1)..n {
                s += h[(i, j)].abs();
            }
        }
        s
    };
    if anorm == 0.0 {
        return Ok(eigs);
    }

    let mut t_shift = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0usize;
        'find: loop {
            // search for a negligible subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let s =
                    h[(l as usize - 1, l as usize - 1)].abs() + h[(l as usize, l as usize)].abs();
                let s = if s == 0.0 { anorm } else { s };
                if h[(l as usize, l as usize - 1)].abs() <= eps * s {
                    h[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let nnu = nn as usize;
            let mut x = h[(nnu, nnu)];
            if l == nn {
                eigs[nnu] = Complex64::new(x + t_shift, 0.0);
                nn -= 1;
                break 'find;
            }
            let mut y = h[(nnu - 1, nnu - 1)];
            let mut w = h[(nnu, nnu - 1)] * h[(nnu - 1, nnu)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t_shift;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    let e1 = x + z;
                    let e2 = if z != 0.0 { x - w / z } else { e1 };
                    eigs[nnu - 1] = Complex64::new(e1, 0.0);
                    eigs[nnu] = Complex64::new(e2, 0.0);
                } else {
                    eigs[nnu - 1] = Complex64::new(x + p, z);
                    eigs[nnu] = Complex64::new(x + p, -z);
                }
                nn -= 2;
                break 'find;
            }
            if its >= tol.max_iter {
                return Err(Error::NoConvergence {
                    what: "QR eigenvalue iteration",
                    iterations: its,
                });
            }
            if its > 0 && its.is_multiple_of(10) {
                // exceptional shift
                t_shift += x;
                for i in 0..=nnu {
                    h[(i, i)] -= x;
                }
                let s = h[(nnu, nnu - 1)].abs() + h[(nnu - 1, nnu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // form the first column of (H - aI)(H - bI) and locate row m
            let lu = l as usize;
            let mut m = nnu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = h[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - rr - ss;
                r = h[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == lu {
                    break;
                }
                let u = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nnu {
                h[(i, i - 2)] = 0.0;
            }
            for i in (m + 3)..=nnu {
                h[(i, i - 3)] = 0.0;
            }

            // double QR sweep: chase the bulge from m to nn-1
            for k in m..nnu {
                let mut col_scale = 1.0;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if k != nnu - 1 { h[(k + 2, k - 1)] } else { 0.0 };
                    col_scale = p.abs() + q.abs() + r.abs();
                    if col_scale == 0.0 {
                        continue;
                    }
                    p /= col_scale;
                    q /= col_scale;
                    r /= col_scale;
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m as isize {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                } else {
                    h[(k, k - 1)] = -s * col_scale;
                }
                p += s;
                let x2 = p / s;
                let y2 = q / s;
                let z2 = r / s;
                q /= p;
                r /= p;
                // row modification
                for j in k..=nnu {
                    let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                    if k != nnu - 1 {
                        pp += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= pp * z2;
                    }
                    h[(k + 1, j)] -= pp * y2;
                    h[(k, j)] -= pp * x2;
                }
                // column modification
                let mmin = if nnu < k + 3 { nnu } else { k + 3 };
                for i in lu..=mmin {
                    let mut pp = x2 * h[(i, k)] + y2 * h[(i, k + 1)];
                    if k != nnu - 1 {
                        pp += z2 * h[(i, k + 2)];
                        h[(i, k + 2)] -= pp * r;
                    }
                    h[(i, k + 1)] -= pp * q;
                    h[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(eigs)
}

/// Largest real part across the spectrum; negative means Hurwitz.
pub fn spectral_abscissa(a: &Matrix, tol: &Tolerances) -> Result<f64> {
    let eigs = eig_general(a, tol)?;
    Ok(eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotation.
///
/// The input must satisfy `|S - S^T| <= 1e-8 * |S|`; it is symmetrized
/// internally before iterating.
pub fn sym_eig(s: &Matrix, tol: &Tolerances) -> Result<Vec<f64>> {
    sym_eig_full(s, tol).map(|(vals, _)| vals)
}

/// Jacobi eigendecomposition returning `(values ascending, V)` with
/// `S = V diag(values) V^T` and orthonormal columns in `V`.
pub fn sym_eig_full(s: &Matrix, tol: &Tolerances) -> Result<(Vec<f64>, Matrix)> {
    assert!(s.is_square(), "sym_eig expects a square matrix");
    let n = s.rows();
    let norm = s.norm_fro();
    let sym_err = s.symmetry_error();
    let sym_tol = 1.0e-8 * norm;
    if sym_err > sym_tol && norm > 0.0 {
        return Err(Error::NotSymmetric {
            error: sym_err,
            tolerance: sym_tol,
        });
    }
    let mut a = s.symmetrized();
    let mut v = Matrix::identity(n);
    if n <= 1 || norm == 0.0 {
        let vals = (0..n).map(|i| a[(i, i)]).collect();
        return Ok((vals, v));
    }

    let off = |a: &Matrix| -> f64 {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        sum.sqrt()
    };

    let target = tol.residual_tol * norm;
    let mut converged = false;
    for _sweep in 0..tol.max_iter {
        if off(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::EPSILON * norm {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = sign_of(1.0, tau) / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // rotate rows/columns p and q
                for i in 0..n {
                    if i != p && i != q {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = c * aip - sn * aiq;
                        a[(p, i)] = a[(i, p)];
                        a[(i, q)] = sn * aip + c * aiq;
                        a[(q, i)] = a[(i, q)];
                    }
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - sn * viq;
                    v[(i, q)] = sn * vip + c * viq;
                }
            }
        }
    }
    if !converged && off(&a) > target {
        return Err(Error::NoConvergence {
            what: "Jacobi eigenvalue iteration",
            iterations: tol.max_iter,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((vals, vecs))
}

/// Symmetric positive-semidefinite square root via the Jacobi decomposition.
/// Eigenvalues below `-definiteness_slack * |S|` are rejected; small negative
/// ones from roundoff clamp to zero.
pub fn sym_psd_sqrt(s: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let (vals, v) = sym_eig_full(s, tol)?;
    let floor = -tol.definiteness_slack * s.norm_fro().max(1.0);
    let n = s.rows();
    let mut root = Matrix::zeros(n, n);
    for k in 0..n {
        if vals[k] < floor {
            return Err(Error::NotSymmetric {
                error: vals[k],
                tolerance: floor,
            });
        }
        let lk = vals[k].max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                root[(i, j)] += lk * v[(i, k)] * v[(j, k)];
            }
        }
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sorted_reals(eigs: &[Complex64]) -> Vec<f64> {
        let mut v: Vec<f64> = eigs.iter().map(|e| e.re).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn diagonal_eigenvalues() {
        let a = Matrix::diag(&[-1.0, -2.0, 3.0]);
        let eigs = eig_general(&a, &tol()).unwrap();
        assert!(eigs.iter().all(|e| e.im.abs() < 1e-12));
        let re = sorted_reals(&eigs);
        assert!((re[0] + 2.0).abs() < 1e-10);
        assert!((re[1] + 1.0).abs() < 1e-10);
        assert!((re[2] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rotation_generator_has_unit_imaginary_pair() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let mut eigs = eig_general(&a, &tol()).unwrap();
        eigs.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((eigs[0] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((eigs[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn jacobi_identity_and_analytic_2x2() {
        let vals = sym_eig(&Matrix::identity(2), &tol()).unwrap();
        assert_eq!(vals, vec![1.0, 1.0]);

        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let vals = sym_eig(&s, &tol()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_rejects_asymmetric_input() {
        let s = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            sym_eig(&s, &tol()),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn jacobi_reconstruction() {
        // fixed pseudo-random symmetric matrix
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let n = 6;
        let raw = Matrix::from_fn(n, n, |_, _| next());
        let s = &raw + &raw.transpose();
        let (vals, v) = sym_eig_full(&s, &tol()).unwrap();
        let recon = &(&v * &Matrix::diag(&vals)) * &v.transpose();
        assert!((&recon - &s).norm_fro() <= 1e-8 * s.norm_fro());
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let q = Matrix::diag(&[1.0, 0.01, 0.01, 10.0]);
        let r = sym_psd_sqrt(&q, &tol()).unwrap();
        assert!((&(&r * &r) - &q).norm_fro() < 1e-12);
    }
}
