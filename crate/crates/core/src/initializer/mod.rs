//! Feasible starting codes for the ascent.
//!
//! Both methods maximize a penalized objective
//! `f(x, w) = SINR(x .* s0, w) - beta * x^H Rbar x` over unimodular `x`
//! at unit energy, alternating phase updates with the optimal filter. The
//! result is then scaled down until every band cap holds.

pub mod hivac;
pub mod hivam;
pub mod sextic;

use std::time::Duration;

use nalgebra::DVector;

use crate::cdsolver::{filter_step, FilterSolver};
use crate::error::Result;
use crate::linalg::{quad_form, unimodular};
use crate::objective::FilterMatrices;
use crate::scenario::{CovarianceSet, PhaseDomain, Scenario};
use crate::C64;

pub use hivac::hivac;
pub use hivam::hivam;

pub const DEFAULT_BETA_HIVAM: f64 = 1.8675;
pub const DEFAULT_BETA_HIVAC: f64 = 0.0093;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    Hivam,
    Hivac,
}

impl InitMethod {
    pub fn default_beta(self) -> f64 {
        match self {
            InitMethod::Hivam => DEFAULT_BETA_HIVAM,
            InitMethod::Hivac => DEFAULT_BETA_HIVAC,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InitMethod::Hivam => "hivam",
            InitMethod::Hivac => "hivac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitOptions {
    pub beta: f64,
    /// Stop when the penalized objective changes by at most this much.
    pub tol: f64,
    pub max_iters: usize,
}

impl InitOptions {
    pub fn for_method(method: InitMethod) -> Self {
        InitOptions { beta: method.default_beta(), tol: 1e-2, max_iters: 200 }
    }
}

#[derive(Debug, Clone)]
pub struct InitReport {
    pub method: InitMethod,
    /// Phase shifts of the unimodular vector.
    pub phases: Vec<f64>,
    /// Unit-energy code `x .* s0` before rescaling.
    pub raw_code: DVector<C64>,
    /// Feasible code after rescaling.
    pub code: DVector<C64>,
    /// Penalized objective before the first iteration and after each iteration.
    pub f_trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Coordinate updates that fell back to a grid search.
    pub root_fallbacks: usize,
    pub elapsed: Duration,
}

/// Penalized objective for unimodular phases and a fixed filter.
pub fn penalized_objective(phases: &[f64], fm: &FilterMatrices, covset: &CovarianceSet, beta: f64) -> f64 {
    let x = unimodular(phases);
    fm.chi(phases, 1.0) - beta * quad_form(&covset.penalty_gram_whitened, &x)
}

/// Optimal filter for the unit-energy code `exp(j phi) .* s0`.
pub fn unit_energy_filter(
    phases: &[f64],
    scenario: &Scenario,
    covset: &CovarianceSet,
) -> Result<DVector<C64>> {
    let code = unimodular(phases).component_mul(&scenario.reference);
    Ok(filter_step(&code, scenario, covset, FilterSolver::Direct)?.filter)
}

/// Scale a code down to the largest multiple that meets every cap and the energy budget.
pub fn rescale_to_feasible(code: &DVector<C64>, covset: &CovarianceSet) -> DVector<C64> {
    let mut worst = code.norm_squared().max(1.0);
    for (e, cap) in covset.band_energies(code).iter().zip(&covset.caps) {
        worst = worst.max(e / cap);
    }
    code / C64::from(worst.sqrt())
}

/// Round half toward zero.
pub(crate) fn round_half_to_zero(y: f64) -> f64 {
    y.signum() * (y.abs() - 0.5).ceil()
}

/// Admissible lattice index closest to phase `phi` in circular distance.
pub(crate) fn nearest_lattice_index(phi: f64, domain: &PhaseDomain) -> i64 {
    match *domain {
        PhaseDomain::Discrete { m, lo, hi } => {
            let k = round_half_to_zero(phi * m as f64 / std::f64::consts::TAU) as i64;
            if domain.is_full_circle() {
                crate::scenario::wrap_index(k, lo, m)
            } else {
                k.clamp(lo, hi)
            }
        }
        PhaseDomain::Continuous { .. } => 0,
    }
}

pub fn initialize(
    method: InitMethod,
    scenario: &Scenario,
    covset: &CovarianceSet,
    options: &InitOptions,
) -> Result<InitReport> {
    match method {
        InitMethod::Hivam => hivam(scenario, covset, options),
        InitMethod::Hivac => hivac(scenario, covset, options),
    }
}
