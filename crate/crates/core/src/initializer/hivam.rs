//! Minorization-maximization initializer: every phase is updated at once by
//! maximizing a linear minorizer of the penalized objective.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{nearest_lattice_index, penalized_objective, rescale_to_feasible, unit_energy_filter, InitMethod, InitOptions, InitReport};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, unimodular};
use crate::objective::{filter_matrices, FilterMatrices};
use crate::scenario::{lattice_phase, CovarianceSet, PhaseDomain, Scenario};
use crate::C64;

/// Linear minorizer `Re(z^H x) + r` of the penalized objective around `q`.
#[derive(Debug, Clone)]
pub struct HivamSurrogate {
    pub z: DVector<C64>,
    pub r: f64,
    pub lambda: f64,
}

impl HivamSurrogate {
    pub fn value(&self, x: &DVector<C64>) -> f64 {
        self.z.dotc(x).re + self.r
    }
}

/// Largest eigenvalue of a Hermitian matrix, from a dense eigendecomposition.
pub fn largest_eigenvalue(p: &DMatrix<C64>) -> Result<f64> {
    let ev = p.symmetric_eigenvalues();
    let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::Numerical("eigenvalue computation failed".into()));
    }
    Ok(top)
}

/// Surrogate at the unimodular point `q` for the fixed filter behind `fm`.
pub fn hivam_surrogate(q: &DVector<C64>, fm: &FilterMatrices, covset: &CovarianceSet, beta: f64) -> Result<HivamSurrogate> {
    let n = q.len();
    let mut m2bar = fm.m2.clone();
    for i in 0..n {
        m2bar[(i, i)] += C64::from(fm.theta / n as f64);
    }
    let num = quad_form(&fm.m1, q);
    let den = quad_form(&m2bar, q);
    if !(den > 0.0) {
        return Err(Error::Numerical("penalized objective has a non-positive denominator".into()));
    }
    let p = &m2bar * C64::from(num / (den * den)) + &covset.penalty_gram_whitened * C64::from(beta);
    let top = largest_eigenvalue(&p)?;
    // Stay on the safe side of the computed spectrum.
    let lambda = top + 1e-12 * top.abs().max(1.0);
    let pq = &p * q;
    let v = &fm.m1 * q * C64::from(2.0 / den);
    let z = (q * C64::from(lambda) - &pq) * C64::from(2.0) + v;
    let r = q.dotc(&pq).re - lambda * n as f64 - lambda * n as f64;
    Ok(HivamSurrogate { z, r, lambda })
}

/// Maximize the surrogate over the admissible phases: the phase of each `z_i`,
/// projected onto the domain.
pub fn hivam_phase_update(s: &HivamSurrogate, domain: &PhaseDomain) -> Vec<f64> {
    s.z.iter()
        .map(|zi| {
            let arg = zi.arg();
            match *domain {
                PhaseDomain::Continuous { delta } => arg.clamp(-delta, delta),
                PhaseDomain::Discrete { m, .. } => lattice_phase(nearest_lattice_index(arg, domain), m),
            }
        })
        .collect()
}

pub fn hivam(scenario: &Scenario, covset: &CovarianceSet, options: &InitOptions) -> Result<InitReport> {
    let start = Instant::now();
    let domain = scenario.phase_domain()?;
    let n = scenario.n;
    let mut phases = vec![0.0; n];
    let mut filter = unit_energy_filter(&phases, scenario, covset)?;
    let mut fm = filter_matrices(&filter, scenario, covset);
    let mut f = penalized_objective(&phases, &fm, covset, options.beta);
    let mut trajectory = vec![f];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iters {
        iterations += 1;
        let q = unimodular(&phases);
        let sur = hivam_surrogate(&q, &fm, covset, options.beta)?;
        let candidate = hivam_phase_update(&sur, &domain);
        // The surrogate is tight at q, so its maximizer cannot lower the objective;
        // the comparison only guards against rounding.
        if penalized_objective(&candidate, &fm, covset, options.beta) >= f {
            phases = candidate;
        }
        filter = unit_energy_filter(&phases, scenario, covset)?;
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
        method: InitMethod::Hivam,
        phases,
        raw_code,
        code,
        f_trajectory: trajectory,
        iterations,
        converged,
        root_fallbacks: 0,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Alphabet, ScenarioConfig};

    #[test]
    fn surrogate_is_tight() {
        let s = ScenarioConfig::coexistence(12, 1.0, Alphabet::Continuous).resolve().unwrap();
        let c = CovarianceSet::build(&s).unwrap();
        let phases: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.5).collect();
        let w = unit_energy_filter(&phases, &s, &c).unwrap();
        let fm = filter_matrices(&w, &s, &c);
        let q = unimodular(&phases);
        let sur = hivam_surrogate(&q, &fm, &c, 1.8675).unwrap();
        let f = penalized_objective(&phases, &fm, &c, 1.8675);
        assert!((sur.value(&q) - f).abs() <= 1e-9 * f.abs().max(1.0));
    }
}
