//! Matrix exponential by scaling-and-squaring with a diagonal Pade
//! approximant. Serves as the exact-propagation oracle against which the
//! fixed-step integrator is validated.

use crate::error::Result;

use super::{solve_linear, Matrix, Tolerances};

// [6/6] Pade coefficients for exp(x).
const PADE6: [f64; 7] = [
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Computes `exp(A t)`.
pub fn mat_exp(a: &Matrix, t: f64, tol: &Tolerances) -> Result<Matrix> {
    assert!(a.is_square(), "mat_exp expects a square matrix");
    assert!(t.is_finite(), "mat_exp expects finite t");
    let n = a.rows();
    let at = a.scale(t);

    let norm = at.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let x = at.scale(0.5f64.powi(squarings as i32));

    let mut numer = Matrix::identity(n).scale(PADE6[0]);
    let mut denom = numer.clone();
    let mut power = Matrix::identity(n);
    for (k, &c) in PADE6.iter().enumerate().skip(1) {
        power = &power * &x;
        let term = power.scale(c);
        numer = &numer + &term;
        if k % 2 == 0 {
            denom = &denom + &term;
        } else {
            denom = &denom - &term;
        }
    }

    let mut f = solve_linear(&denom, &numer, tol)?;
    for _ in 0..squarings {
        f = &f * &f;
    }
    Ok(f)
}
