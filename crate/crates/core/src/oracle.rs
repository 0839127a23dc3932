//! Brute-force reference solvers and random instance generators used to
//! cross-check the closed-form steps.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::arcset::{Arc, LatticeRun, QuadraticConstraint};
use crate::objective::{CoordinateProblem, SpectralTerm};
use crate::phasestep::RatioPlusLinear;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Samples per arc for the continuous grid search.
    pub grid_points: usize,
    /// Zoom rounds around the best sample.
    pub refine_rounds: usize,
    pub mc_trials: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_points: 100_000, refine_rounds: 4, mc_trials: 1_000_000, seed: 7 }
    }
}

/// Dense sampling of every arc (endpoints included), then repeated zooming around
/// the best sample. Returns `(phase, value)`, or `None` for an empty arc list.
pub fn grid_max_ratio(
    f: impl Fn(f64) -> f64,
    arcs: &[Arc],
    grid_points: usize,
    refine_rounds: usize,
) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64, usize)> = None;
    let pts = grid_points.max(2);
    for (ai, arc) in arcs.iter().enumerate() {
        for k in 0..pts {
            let phi = if k == pts - 1 { arc.hi } else { arc.lo + (arc.hi - arc.lo) * k as f64 / (pts - 1) as f64 };
            let v = f(phi);
            if best.is_none_or(|b| v > b.1) {
                best = Some((phi, v, ai));
            }
        }
    }
    let (mut phi, mut val, ai) = best?;
    let arc = arcs[ai];
    let mut h = (arc.hi - arc.lo) / (pts - 1) as f64;
    for _ in 0..refine_rounds {
        let lo = (phi - h).max(arc.lo);
        let hi = (phi + h).min(arc.hi);
        for k in 0..=200 {
            let p = lo + (hi - lo) * k as f64 / 200.0;
            let v = f(p);
            if v > val {
                phi = p;
                val = v;
            }
        }
        h = (hi - lo) / 200.0;
    }
    Some((phi, val))
}

/// Exhaustive maximization over every lattice point of the runs.
pub fn exhaustive_lattice_max(obj: &RatioPlusLinear, runs: &[LatticeRun]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for run in runs {
        for k in run.indices() {
            let phi = k as f64 * TAU / run.m as f64;
            let v = obj.value(phi);
            if best.is_none_or(|b| v > b.1) {
                best = Some((phi, v));
            }
        }
    }
    best
}

/// Feasibility of `phi` against the trigonometric form of the constraints.
pub fn satisfies_all(terms: &[SpectralTerm], phi: f64, tol: f64) -> bool {
    let e = C64::from_polar(1.0, phi);
    terms.iter().all(|t| (t.z * e).re - t.bound <= tol)
}

/// Roots of a polynomial located by sign changes on a uniform partition and bisection.
pub fn sign_change_roots(coeffs: &[f64], lo: f64, hi: f64, intervals: usize) -> Vec<f64> {
    let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
    let mut roots = Vec::new();
    let h = (hi - lo) / intervals as f64;
    let mut a = lo;
    let mut pa = p(a);
    for k in 1..=intervals {
        let b = if k == intervals { hi } else { lo + h * k as f64 };
        let pb = p(b);
        if pa == 0.0 {
            roots.push(a);
        } else if pa * pb < 0.0 {
            let (mut l, mut u, mut pl) = (a, b, pa);
            for _ in 0..200 {
                let mid = 0.5 * (l + u);
                if mid <= l || mid >= u {
                    break;
                }
                let pm = p(mid);
                if pm == 0.0 {
                    l = mid;
                    u = mid;
                    break;
                }
                if pl * pm < 0.0 {
                    u = mid;
                } else {
                    l = mid;
                    pl = pm;
                }
            }
            roots.push(0.5 * (l + u));
        }
        a = b;
        pa = pb;
    }
    roots
}

/// Largest eigenvalue of a Hermitian matrix by bisection on positive definiteness of `lambda I - P`.
pub fn lambda_max_bisection(p: &DMatrix<C64>, rel_tol: f64) -> f64 {
    let n = p.nrows();
    let bound = p.iter().map(|x| x.norm()).sum::<f64>().max(1e-300);
    let pd = |lam: f64| (DMatrix::<C64>::identity(n, n) * C64::from(lam) - p).cholesky().is_some();
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > rel_tol * bound {
        let mid = 0.5 * (lo + hi);
        if pd(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Monte Carlo detection probability for a constant-amplitude target in unit complex Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub pd: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Simulate `|sqrt(snr) e^{j theta} + n|^2 > -ln(pfa)` with `n ~ CN(0, 1)`.
/// Trials are split into shards with seeds derived from `seed`.
pub fn mc_detection(snr: f64, pfa: f64, trials: usize, seed: u64) -> McEstimate {
    const SHARDS: usize = 16;
    let threshold = -pfa.ln();
    let amp = snr.max(0.0).sqrt();
    let per = trials.div_ceil(SHARDS);
    let hits: usize = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(shard as u64));
            let count = per.min(trials.saturating_sub(shard * per));
            let sd = 0.5f64.sqrt();
            (0..count)
                .filter(|_| {
                    let theta: f64 = rng.gen_range(0.0..TAU);
                    let nr: f64 = StandardNormal.sample(&mut rng);
                    let ni: f64 = StandardNormal.sample(&mut rng);
                    let z = C64::from_polar(amp, theta) + C64::new(nr * sd, ni * sd);
                    z.norm_sqr() > threshold
                })
                .count()
        })
        .sum();
    let pd = hits as f64 / trials as f64;
    McEstimate { pd, std_err: (pd * (1.0 - pd) / trials as f64).sqrt(), trials }
}

/// Deterministic generator for random subproblems.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cnormal(rng: &mut impl Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Random coordinate subproblem whose numerator and denominator are valid
/// quadratic-form restrictions (`b >= |a|`, `d > |c|`) and whose constraint set
/// contains `incumbent`. A third of the constraints are active at the incumbent.
pub fn random_coordinate_problem(rng: &mut impl Rng, k: usize, incumbent: f64) -> CoordinateProblem {
    let a = cnormal(rng) * rng.gen_range(0.01..2.0);
    let b = a.norm() * (1.0 + rng.gen_range(0.0..1.0f64).powi(2));
    let c = cnormal(rng) * rng.gen_range(0.01..2.0);
    let d = c.norm() + rng.gen_range(0.02..1.0);
    let e = C64::from_polar(1.0, incumbent);
    let spectral = (0..k)
        .map(|_| {
            let z = cnormal(rng) * rng.gen_range(0.05..2.0);
            let slack = if rng.gen_bool(1.0 / 3.0) { 0.0 } else { rng.gen_range(0.0..1.0) * z.norm() };
            SpectralTerm { z, bound: (z * e).re + slack }
        })
        .collect();
    CoordinateProblem { a, b, c, d, spectral }
}

/// Random constraint list in quadratic form with an arbitrary (possibly empty) feasible set.
pub fn random_constraints(rng: &mut impl Rng, k: usize) -> Vec<QuadraticConstraint> {
    (0..k)
        .map(|_| {
            let z = cnormal(rng);
            let bound = rng.gen_range(-1.2..1.2) * z.norm();
            QuadraticConstraint::from_spectral(z, bound)
        })
        .collect()
}

/// Random half-width in `(0, pi)`.
pub fn random_delta(rng: &mut impl Rng) -> f64 {
    rng.gen_range(1e-3..PI - 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_simple_roots() {
        let c = [3.0, -5.5, -1.5, 1.0];
        let r = sign_change_roots(&c, -10.0, 10.0, 10_000);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12 && (r[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mc_is_reproducible() {
        let a = mc_detection(2.0, 1e-2, 20_000, 3);
        let b = mc_detection(2.0, 1e-2, 20_000, 3);
        assert_eq!(a, b);
    }
}
