//! Block coordinate ascent over phases, transmit power and receive filter.

use std::time::{Duration, Instant};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, hpd_solve, quad_form, unimodular};
use crate::objective::{assemble_code, filter_matrices, relative_phases, sinr, ProductCache, TransceiverState};
use crate::phasestep::optimize_coordinate;
use crate::scenario::{build_clutter_covariance, CovarianceSet, PhaseDomain, Scenario};
use crate::C64;

/// Relative slack allowed on band caps and on the energy budget when checking feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Linear solver used by the filter update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterSolver {
    Direct,
    /// Conjugate gradient; `max_iter = None` means `4 n`. Falls back to `Direct` on failure.
    ConjugateGradient { residual_tol: f64, max_iter: Option<usize> },
}

impl FilterSolver {
    pub fn cg() -> Self {
        FilterSolver::ConjugateGradient { residual_tol: 1e-10, max_iter: None }
    }
}

#[derive(Debug, Clone)]
pub struct FilterSolution {
    /// Filter normalized so that `w^H s = 1`.
    pub filter: DVector<C64>,
    /// Optimal SINR `s^H (R_d(s) + R_ind)^{-1} s`.
    pub sinr: f64,
    pub fell_back: bool,
}

/// Optimal receive filter for a fixed code.
pub fn filter_step(
    code: &DVector<C64>,
    scenario: &Scenario,
    covset: &CovarianceSet,
    solver: FilterSolver,
) -> Result<FilterSolution> {
    let a = build_clutter_covariance(code, scenario) + &covset.r_ind;
    let (x, fell_back) = match solver {
        FilterSolver::Direct => (hpd_solve(&a, code)?, false),
        FilterSolver::ConjugateGradient { residual_tol, max_iter } => {
            let out = conjugate_gradient(&a, code, residual_tol, max_iter.unwrap_or(4 * scenario.n));
            if out.converged {
                (out.x, false)
            } else {
                (hpd_solve(&a, code)?, true)
            }
        }
    };
    let gain = code.dotc(&x);
    if !(gain.re > 0.0) || !gain.re.is_finite() {
        return Err(Error::DegenerateFilter);
    }
    // w = x / (s^H x), so that w^H s = 1.
    let filter = x / gain;
    Ok(FilterSolution { filter, sinr: gain.re, fell_back })
}

/// Largest admissible power for fixed phases: `min(min_k E_k / q_k, 1)`.
pub fn amplitude_step(phases: &[f64], covset: &CovarianceSet) -> f64 {
    let x = unimodular(phases);
    let mut p: f64 = 1.0;
    for (r, &cap) in covset.whitened_band_grams.iter().zip(&covset.caps) {
        let q = quad_form(r, &x);
        if q > 0.0 {
            p = p.min(cap / q);
        }
    }
    p
}

/// Uniform feasibility check of a code.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub energy: f64,
    pub band_energies: Vec<f64>,
    /// `cap_k - energy_k` per band.
    pub band_slacks: Vec<f64>,
    pub phases_admissible: bool,
    pub feasible: bool,
}

pub fn check_feasibility(
    code: &DVector<C64>,
    scenario: &Scenario,
    covset: &CovarianceSet,
    domain: &PhaseDomain,
) -> FeasibilityReport {
    let energy = code.norm_squared();
    let band_energies = covset.band_energies(code);
    let band_slacks: Vec<f64> = band_energies.iter().zip(&covset.caps).map(|(e, c)| c - e).collect();
    let phases = relative_phases(code, &scenario.reference);
    let amp = (energy / scenario.n as f64).sqrt();
    let envelope_ok = code.iter().all(|s| (s.norm() - amp).abs() <= 1e-9 * amp.max(1e-300));
    let phases_admissible = envelope_ok && phases.iter().all(|&p| domain.contains(p, 1e-9));
    let caps_ok = band_slacks.iter().zip(&covset.caps).all(|(s, c)| *s >= -FEASIBILITY_TOL * c);
    let feasible = phases_admissible && caps_ok && energy <= 1.0 + FEASIBILITY_TOL;
    FeasibilityReport { energy, band_energies, band_slacks, phases_admissible, feasible }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the objective changes by at most this much between outer iterations.
    pub tol: f64,
    pub max_iters: usize,
    pub filter_solver: FilterSolver,
    /// Record the objective and feasibility after every block update.
    pub audit: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-4, max_iters: 500, filter_solver: FilterSolver::Direct, audit: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Block {
    Phase(usize),
    Amplitude,
    Filter,
}

/// Objective and feasibility after one block update.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAudit {
    pub iteration: usize,
    pub block: Block,
    pub chi: f64,
    pub feasible: bool,
    /// Smallest `(cap - energy) / cap` over bands.
    pub min_relative_slack: f64,
}

#[derive(Debug, Clone)]
pub struct DesignReport {
    pub state: TransceiverState,
    pub code: DVector<C64>,
    /// Objective before the first iteration and after each outer iteration.
    pub chi_trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub feasibility: FeasibilityReport,
    pub filter_fallbacks: usize,
    pub empty_feasible_sets: usize,
    pub audit: Vec<BlockAudit>,
    pub elapsed: Duration,
}

impl DesignReport {
    pub fn chi(&self) -> f64 {
        *self.chi_trajectory.last().unwrap_or(&f64::NAN)
    }
}

fn audit_entry(
    iteration: usize,
    block: Block,
    state: &TransceiverState,
    scenario: &Scenario,
    covset: &CovarianceSet,
    domain: &PhaseDomain,
) -> Result<BlockAudit> {
    let code = assemble_code(&state.phases, state.power, &scenario.reference);
    let chi = sinr(&code, &state.filter, scenario, covset)?;
    let f = check_feasibility(&code, scenario, covset, domain);
    let min_relative_slack = f
        .band_slacks
        .iter()
        .zip(&covset.caps)
        .map(|(s, c)| s / c)
        .fold(f64::INFINITY, f64::min);
    Ok(BlockAudit { iteration, block, chi, feasible: f.feasible, min_relative_slack })
}

/// Run the alternating ascent from a feasible initial code.
pub fn solve(
    scenario: &Scenario,
    covset: &CovarianceSet,
    init_code: &DVector<C64>,
    options: &SolverOptions,
) -> Result<DesignReport> {
    let start = Instant::now();
    let domain = scenario.phase_domain()?;
    if init_code.len() != scenario.n {
        return Err(Error::Infeasible(format!("initial code has length {}", init_code.len())));
    }
    let init = check_feasibility(init_code, scenario, covset, &domain);
    if !init.feasible {
        return Err(Error::Infeasible(format!(
            "energy {:.6e}, band slacks {:?}, admissible phases {}",
            init.energy, init.band_slacks, init.phases_admissible
        )));
    }
    let power = init_code.norm_squared().min(1.0);
    if !(power > 0.0) {
        return Err(Error::ZeroPower(power));
    }
    let phases: Vec<f64> = relative_phases(init_code, &scenario.reference).iter().map(|&p| domain.project(p)).collect();
    let mut filter_fallbacks = 0;
    let code = assemble_code(&phases, power, &scenario.reference);
    let fs = filter_step(&code, scenario, covset, options.filter_solver)?;
    filter_fallbacks += fs.fell_back as usize;
    let mut state = TransceiverState { phases, power, filter: fs.filter };
    let mut chi = sinr(&code, &state.filter, scenario, covset)?;
    let mut trajectory = vec![chi];
    let mut audit = Vec::new();
    if options.audit {
        audit.push(audit_entry(0, Block::Filter, &state, scenario, covset, &domain)?);
    }
    let mut empty_feasible_sets = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iters {
        iterations += 1;
        let fm = filter_matrices(&state.filter, scenario, covset);
        let mut cache = ProductCache::new(&state.phases, &fm, covset);
        for h in 0..scenario.n {
            let cp = cache.coordinate_problem(h, state.power, &fm, covset)?;
            debug_assert!({
                let at = cp.ratio(state.phases[h]);
                let whole = cache.chi(state.power, fm.theta);
                (at - whole).abs() <= 1e-8 * whole.abs().max(1e-300)
            });
            let out = optimize_coordinate(&cp, &domain, state.phases[h])?;
            empty_feasible_sets += out.empty_feasible_set as usize;
            if out.changed {
                cache.update(h, out.phase, &fm, covset);
                state.phases[h] = out.phase;
            }
            if options.audit {
                audit.push(audit_entry(iterations, Block::Phase(h), &state, scenario, covset, &domain)?);
            }
        }
        state.power = amplitude_step(&state.phases, covset);
        if options.audit {
            audit.push(audit_entry(iterations, Block::Amplitude, &state, scenario, covset, &domain)?);
        }
        let code = assemble_code(&state.phases, state.power, &scenario.reference);
        let fs = filter_step(&code, scenario, covset, options.filter_solver)?;
        filter_fallbacks += fs.fell_back as usize;
        state.filter = fs.filter;
        if options.audit {
            audit.push(audit_entry(iterations, Block::Filter, &state, scenario, covset, &domain)?);
        }
        let next = sinr(&code, &state.filter, scenario, covset)?;
        trajectory.push(next);
        let change = (next - chi).abs();
        chi = next;
        if change <= options.tol {
            converged = true;
            break;
        }
    }
    let code = assemble_code(&state.phases, state.power, &scenario.reference);
    let feasibility = check_feasibility(&code, scenario, covset, &domain);
    Ok(DesignReport {
        state,
        code,
        chi_trajectory: trajectory,
        iterations,
        converged,
        feasibility,
        filter_fallbacks,
        empty_feasible_sets,
        audit,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Alphabet, ScenarioConfig};

    #[test]
    fn filter_normalization_and_sinr() {
        let s = ScenarioConfig::coexistence(16, 1.0, Alphabet::Continuous).resolve().unwrap();
        let c = CovarianceSet::build(&s).unwrap();
        let code = s.reference.clone() * C64::from(0.1);
        for solver in [FilterSolver::Direct, FilterSolver::cg()] {
            let fs = filter_step(&code, &s, &c, solver).unwrap();
            assert!((fs.filter.dotc(&code) - C64::from(1.0)).norm() < 1e-12);
            let direct = sinr(&code, &fs.filter, &s, &c).unwrap();
            assert!((direct - fs.sinr).abs() <= 1e-9 * direct);
        }
    }

    #[test]
    fn amplitude_step_hits_binding_cap() {
        let s = ScenarioConfig::coexistence(16, 1.0, Alphabet::Continuous).resolve().unwrap();
        let c = CovarianceSet::build(&s).unwrap();
        let phases = vec![0.0; 16];
        let p = amplitude_step(&phases, &c);
        let code = assemble_code(&phases, p, &s.reference);
        let energies = c.band_energies(&code);
        let tight = energies.iter().zip(&c.caps).any(|(e, cap)| (e - cap).abs() <= 1e-12 * cap);
        assert!(tight || (p - 1.0).abs() < 1e-15);
        assert!(energies.iter().zip(&c.caps).all(|(e, cap)| *e <= cap * (1.0 + 1e-12)));
    }
}
