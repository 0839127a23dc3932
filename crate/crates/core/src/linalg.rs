//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

/// Real part of `x^H A x` for Hermitian `A`.
pub fn quad_form(a: &DMatrix<C64>, x: &DVector<C64>) -> f64 {
    x.dotc(&(a * x)).re
}

/// Unimodular vector `exp(j phi)`.
pub fn unimodular(phases: &[f64]) -> DVector<C64> {
    DVector::from_iterator(phases.len(), phases.iter().map(|&p| C64::from_polar(1.0, p)))
}

/// Solve `A x = b` for Hermitian positive definite `A`.
pub fn hpd_solve(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    let chol = a.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}

/// Outcome of a conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: DVector<C64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for Hermitian positive definite systems, started from zero.
pub fn conjugate_gradient(a: &DMatrix<C64>, b: &DVector<C64>, residual_tol: f64, max_iter: usize) -> CgOutcome {
    let n = b.len();
    let b_norm = b.norm();
    let mut x = DVector::<C64>::zeros(n);
    if b_norm == 0.0 {
        return CgOutcome { x, iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut it = 0;
    while it < max_iter {
        if rr.sqrt() <= residual_tol * b_norm {
            break;
        }
        let ap = a * &p;
        let pap = p.dotc(&ap).re;
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        x.axpy(C64::from(alpha), &p, C64::from(1.0));
        r.axpy(C64::from(-alpha), &ap, C64::from(1.0));
        let rr_new = r.norm_squared();
        p = &r + &p * C64::from(rr_new / rr);
        rr = rr_new;
        it += 1;
    }
    // Report the true residual rather than the recursively updated one.
    let rel = (b - a * &x).norm() / b_norm;
    CgOutcome { x, iterations: it, relative_residual: rel, converged: rel <= residual_tol }
}
