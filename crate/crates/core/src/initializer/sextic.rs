//! Real roots of the stationarity polynomial of a ratio-plus-sinusoid in the
//! half-angle variable.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};

/// Coefficients `zeta_0..=zeta_6` (ascending powers of `xi`) of
/// `(d xi^2 + e xi + r)(1 + xi^2)^2 - (v3 xi^2 - 4 u3 xi - v3)(u2 xi^2 + v2 xi + w2)^2`,
/// whose real roots are the stationary points of
/// `(u1 xi^2 + v1 xi + w1) / (u2 xi^2 + v2 xi + w2) + (u3 xi^2 + v3 xi - u3) / (1 + xi^2)`.
#[allow(clippy::too_many_arguments)]
pub fn sextic_coefficients(u1: f64, v1: f64, w1: f64, u2: f64, v2: f64, w2: f64, u3: f64, v3: f64) -> [f64; 7] {
    let d = u1 * v2 - u2 * v1;
    let e = 2.0 * (u1 * w2 - u2 * w1);
    let r = v1 * w2 - v2 * w1;
    let k = 2.0 * u2 * w2 + v2 * v2;
    [
        r + w2 * w2 * v3,
        e + 2.0 * v2 * w2 * v3 + 4.0 * u3 * w2 * w2,
        2.0 * r + d + v3 * k + 8.0 * v2 * w2 * u3 - v3 * w2 * w2,
        2.0 * e + 2.0 * u2 * v2 * v3 + 4.0 * u3 * k - 2.0 * v2 * v3 * w2,
        r + 2.0 * d + u2 * u2 * v3 + 8.0 * u2 * u3 * v2 - v3 * k,
        e + 4.0 * u2 * u2 * u3 - 2.0 * u2 * v2 * v3,
        -u2 * u2 * v3 + d,
    ]
}

/// Horner evaluation, coefficients in ascending order.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_deriv_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
}

/// `|p(x)| / sum_k |c_k| |x|^k`, the backward error of `x` as a root.
pub fn scaled_residual(coeffs: &[f64], x: f64) -> f64 {
    let mag = coeffs.iter().rev().fold(0.0, |acc, &c| acc * x.abs() + c.abs());
    if mag == 0.0 {
        0.0
    } else {
        poly_eval(coeffs, x).abs() / mag
    }
}

/// Acceptance threshold on [`scaled_residual`] for a reported root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;

/// Roots closer than this (relative) are reported once.
pub const CLUSTER_TOL: f64 = 1e-5;

fn polish(coeffs: &[f64], x0: f64) -> f64 {
    let mut best = (x0, scaled_residual(coeffs, x0));
    let mut x = x0;
    for _ in 0..60 {
        let dp = poly_deriv_eval(coeffs, x);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let next = x - poly_eval(coeffs, x) / dp;
        if !next.is_finite() {
            break;
        }
        let res = scaled_residual(coeffs, next);
        x = next;
        if res < best.1 {
            best = (next, res);
        }
        if res == 0.0 {
            break;
        }
    }
    best.0
}

const SHIFTS: [f64; 4] = [0.0, 0.312_7, -0.583_9, 1.376_1];

/// Coefficients of `p(y + sigma)`, ascending.
fn taylor_shift(c: &[f64], sigma: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    if sigma == 0.0 {
        return out;
    }
    let n = out.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            out[j] += sigma * out[j + 1];
        }
    }
    out
}

fn companion_eigenvalues(c: &[f64]) -> Option<Vec<num_complex::Complex64>> {
    let deg = c.len() - 1;
    if c[deg] == 0.0 {
        return None;
    }
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / c[deg];
    }
    let eig = Schur::try_new(comp, f64::EPSILON, 500)?.complex_eigenvalues();
    if eig.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(eig.iter().copied().collect())
    } else {
        None
    }
}

/// Real roots in `[lo, hi]`, via eigenvalues of the companion matrix and Newton polishing.
/// Coefficients are in ascending order. Identically zero input yields no roots.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    if !scale.is_finite() {
        return Err(Error::Numerical("non-finite polynomial coefficients".into()));
    }
    let c: Vec<f64> = coeffs.iter().map(|x| x / scale).collect();
    let mut deg = c.len() - 1;
    while deg > 0 && c[deg].abs() <= 1e-14 {
        deg -= 1;
    }
    let c = &c[..=deg];
    let mut raw: Vec<f64> = Vec::new();
    match deg {
        0 => {}
        1 => raw.push(-c[0] / c[1]),
        _ => {
            // Symmetric root patterns can stall the shifted QR iteration; retry in a shifted variable.
            let eig = SHIFTS
                .iter()
                .find_map(|&sigma| companion_eigenvalues(&taylor_shift(c, sigma)).map(|e| (sigma, e)))
                .ok_or_else(|| Error::Numerical("companion eigenvalues did not converge".into()))?;
            let (sigma, eig) = eig;
            for z in eig {
                // Clustered roots split into complex pairs of size ~eps^(1/k); their real parts
                // are kept as candidates and then judged by the residual test.
                if z.im.abs() <= 1e-3 * (1.0 + z.re.abs()) {
                    raw.push(z.re + sigma);
                }
            }
        }
    }
    let mut roots: Vec<f64> = raw
        .into_iter()
        .map(|x| polish(c, x))
        .filter(|&x| scaled_residual(c, x) <= ROOT_RESIDUAL_TOL)
        .filter(|&x| x >= lo - 1e-12 * (1.0 + lo.abs()) && x <= hi + 1e-12 * (1.0 + hi.abs()))
        .map(|x| x.clamp(lo, hi))
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    // Collapse clusters produced by multiple roots, keeping the best-resolved member.
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    for x in roots {
        match out.last_mut() {
            Some(last) if (x - *last).abs() <= CLUSTER_TOL * (1.0 + x.abs()) => {
                if scaled_residual(c, x) < scaled_residual(c, *last) {
                    *last = x;
                }
            }
            _ => out.push(x),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_roots_collapse() {
        // (x^2 - 1)^3 = x^6 - 3x^4 + 3x^2 - 1.
        let c = [-1.0, 0.0, 3.0, 0.0, -3.0, 0.0, 1.0];
        let r = real_roots(&c, -10.0, 10.0).unwrap();
        assert_eq!(r.len(), 2, "{r:?}");
        assert!((r[0] + 1.0).abs() < 1e-4 && (r[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn simple_roots_and_span() {
        // (x - 0.5)(x + 2)(x - 3) = x^3 - 1.5 x^2 - 5.5 x + 3.
        let c = [3.0, -5.5, -1.5, 1.0];
        let r = real_roots(&c, -2.5, 2.5).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn no_real_roots() {
        let c = [1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert!(real_roots(&c, -100.0, 100.0).unwrap().is_empty());
    }
}
