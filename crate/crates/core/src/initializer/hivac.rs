//! Coordinate-wise initializer: each phase maximizes the penalized objective
//! exactly, by enumerating the stationary points of the one-dimensional
//! restriction together with the domain boundary.

use std::f64::consts::TAU;
use std::time::Instant;

use super::sextic::{real_roots, sextic_coefficients};
use super::{penalized_objective, rescale_to_feasible, unit_energy_filter, InitMethod, InitOptions, InitReport};
use crate::error::Result;
use crate::linalg::unimodular;
use crate::objective::{filter_matrices, FilterMatrices, ProductCache};
use crate::phasestep::RatioPlusLinear;
use crate::scenario::{lattice_phase, wrap_index, CovarianceSet, PhaseDomain, Scenario};
use crate::C64;

/// Lattices with at most this many admissible points are searched exhaustively.
pub const DIRECT_SWEEP_MAX: i64 = 14;
const FALLBACK_GRID: usize = 10_000;

/// Restriction of the penalized objective to coordinate `i`.
pub fn coordinate_objective(
    i: usize,
    cache: &ProductCache,
    fm: &FilterMatrices,
    covset: &CovarianceSet,
    beta: f64,
) -> RatioPlusLinear {
    let num = cache.numerator_form(i, fm);
    let den = cache.clutter_form(i, fm);
    let mut f = C64::new(0.0, 0.0);
    let mut g = 0.0;
    for k in 0..covset.num_bands() {
        let b = cache.band_form(i, k, covset);
        f -= b.a * beta;
        g -= b.b * beta;
    }
    RatioPlusLinear { a: num.a, b: num.b, c: den.a, d: den.b + fm.theta, f, g }
}

/// Stationary points of the restriction, as half-angle tangents in `[lo, hi]`.
pub fn stationary_points(obj: &RatioPlusLinear, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let u1 = obj.b - obj.a.re;
    let v1 = -2.0 * obj.a.im;
    let w1 = obj.b + obj.a.re;
    let u2 = obj.d - obj.c.re;
    let v2 = -2.0 * obj.c.im;
    let w2 = obj.d + obj.c.re;
    let u3 = -obj.f.re;
    let v3 = -2.0 * obj.f.im;
    let zeta = sextic_coefficients(u1, v1, w1, u2, v2, w2, u3, v3);
    real_roots(&zeta, lo, hi)
}

fn best_of(obj: &RatioPlusLinear, cands: impl IntoIterator<Item = f64>, incumbent: f64) -> (f64, f64) {
    let mut best = (incumbent, obj.value(incumbent));
    for phi in cands {
        let v = obj.value(phi);
        if v > best.1 {
            best = (phi, v);
        }
    }
    best
}

/// Exact maximizer of the restriction over the domain. Returns `(phase, value, used_fallback)`.
pub fn maximize_coordinate(obj: &RatioPlusLinear, domain: &PhaseDomain, incumbent: f64) -> (f64, f64, bool) {
    match *domain {
        PhaseDomain::Continuous { delta } => {
            let span = (delta / 2.0).tan();
            match stationary_points(obj, -span, span) {
                Ok(roots) => {
                    let cands = [-delta, delta].into_iter().chain(roots.into_iter().map(|t| 2.0 * t.atan()));
                    let (p, v) = best_of(obj, cands.map(|p| p.clamp(-delta, delta)), incumbent);
                    (p, v, false)
                }
                Err(_) => {
                    let grid = (0..=FALLBACK_GRID).map(|k| -delta + 2.0 * delta * k as f64 / FALLBACK_GRID as f64);
                    let (p, v) = best_of(obj, grid, incumbent);
                    (p, v, true)
                }
            }
        }
        PhaseDomain::Discrete { m, lo, hi } => {
            let sweep = |obj: &RatioPlusLinear| best_of(obj, (lo..=hi).map(|k| lattice_phase(k, m)), incumbent);
            if hi - lo < DIRECT_SWEEP_MAX {
                let (p, v) = sweep(obj);
                return (p, v, false);
            }
            let full = domain.is_full_circle();
            let span = if full { f64::INFINITY } else { (lattice_phase(hi, m) / 2.0).tan() };
            match stationary_points(obj, -span, span) {
                Ok(roots) => {
                    let scale = m as f64 / TAU;
                    let mut idx = vec![lo, hi];
                    for t in roots {
                        let k = 2.0 * t.atan() * scale;
                        idx.push(k.floor() as i64);
                        idx.push(k.ceil() as i64);
                    }
                    let cands = idx.into_iter().map(|k| {
                        let k = if full { wrap_index(k, lo, m) } else { k.clamp(lo, hi) };
                        lattice_phase(k, m)
                    });
                    let (p, v) = best_of(obj, cands, incumbent);
                    (p, v, false)
                }
                Err(_) => {
                    let (p, v) = sweep(obj);
                    (p, v, true)
                }
            }
        }
    }
}

pub fn hivac(scenario: &Scenario, covset: &CovarianceSet, options: &InitOptions) -> Result<InitReport> {
    let start = Instant::now();
    let domain = scenario.phase_domain()?;
    let n = scenario.n;
    let mut phases = vec![0.0; n];
    let filter = unit_energy_filter(&phases, scenario, covset)?;
    let mut fm = filter_matrices(&filter, scenario, covset);
    let mut f = penalized_objective(&phases, &fm, covset, options.beta);
    let mut trajectory = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    let mut root_fallbacks = 0;
    while iterations < options.max_iters {
        iterations += 1;
        let mut cache = ProductCache::new(&phases, &fm, covset);
        for i in 0..n {
            let obj = coordinate_objective(i, &cache, &fm, covset, options.beta);
            let (phi, value, fell_back) = maximize_coordinate(&obj, &domain, phases[i]);
            root_fallbacks += fell_back as usize;
            if phi != phases[i] && value > obj.value(phases[i]) {
                cache.update(i, phi, &fm, covset);
                phases[i] = phi;
            }
        }
        let filter = unit_energy_filter(&phases, scenario, covset)?;
        fm = filter_matrices(&filter, scenario, covset);
        let next = penalized_objective(&phases, &fm, covset, options.beta);
        trajectory.push(next);
        let change = (next - f).abs();
        f = next;
        if change <= options.tol {
            converged = true;
            break;
        }
    }
    let raw_code = unimodular(&phases).component_mul(&scenario.reference);
    let code = rescale_to_feasible(&raw_code, covset);
    Ok(InitReport {
        method: InitMethod::Hivac,
        phases,
        raw_code,
        code,
        f_trajectory: trajectory,
        iterations,
        converged,
        root_fallbacks,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dense_max(obj: &RatioPlusLinear, lo: f64, hi: f64) -> f64 {
        (0..=400_000).map(|k| lo + (hi - lo) * k as f64 / 400_000.0).map(|p| obj.value(p)).fold(f64::MIN, f64::max)
    }

    #[test]
    fn continuous_maximizer_matches_dense_search() {
        let obj = RatioPlusLinear {
            a: C64::new(0.4, -0.3),
            b: 1.0,
            c: C64::new(-0.2, 0.3),
            d: 1.1,
            f: C64::new(0.3, 0.5),
            g: -0.2,
        };
        for delta in [0.3, 1.0, 2.5, PI - 1e-3] {
            let dom = PhaseDomain::Continuous { delta };
            let (_, v, fb) = maximize_coordinate(&obj, &dom, 0.0);
            assert!(!fb);
            assert!(v >= dense_max(&obj, -delta, delta) - 1e-10);
        }
    }

    #[test]
    fn discrete_maximizer_is_exhaustive() {
        let obj = RatioPlusLinear {
            a: C64::new(-0.6, 0.1),
            b: 0.9,
            c: C64::new(0.1, 0.1),
            d: 1.0,
            f: C64::new(-0.4, 0.2),
            g: 0.0,
        };
        for dom in [PhaseDomain::Discrete { m: 64, lo: -32, hi: 31 }, PhaseDomain::Discrete { m: 64, lo: -10, hi: 10 }] {
            let (_, v, _) = maximize_coordinate(&obj, &dom, 0.0);
            if let PhaseDomain::Discrete { m, lo, hi } = dom {
                let best = (lo..=hi).map(|k| obj.value(lattice_phase(k, m))).fold(f64::MIN, f64::max);
                assert_eq!(v, best);
            }
        }
    }
}
