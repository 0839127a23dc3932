//! Independent audit of a stored design.

use rand::Rng;
use specoex::cdsolver::{check_feasibility, FEASIBILITY_TOL};
use specoex::metrics::band_energy_quadrature;
use specoex::objective::{assemble_code, filter_matrices, sinr, ProductCache};
use specoex::oracle::{exhaustive_lattice_max, grid_max_ratio, rng, OracleConfig};
use specoex::phasestep::{coordinate_arcs, coordinate_runs, solve_continuous, solve_discrete, Fraction1D, RatioPlusLinear};
use specoex::scenario::{CovarianceSet, PhaseDomain};
use specoex::C64;

use crate::files::ResultFile;
use crate::Failure;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

const ROUND_TRIP_TOL: f64 = 1e-12;
const ORACLE_TOL: f64 = 1e-8;
const QUADRATURE_TOL: f64 = 1e-6;
const QUADRATURE_INTERVALS: usize = 4000;

pub fn run(result: &ResultFile, samples: usize, oracle: &OracleConfig) -> Result<Vec<Check>, Failure> {
    let scenario = result.scenario.resolve().map_err(Failure::config)?;
    let covset = CovarianceSet::build(&scenario).map_err(Failure::config)?;
    let domain = scenario.phase_domain().map_err(Failure::config)?;
    let n = scenario.n;
    if result.phases.len() != n || result.filter.len() != n || result.code.len() != n {
        return Err(Failure::config(format!("result vectors do not have length {n}")));
    }
    let filter = result.filter();
    let code = assemble_code(&result.phases, result.power, &scenario.reference);
    let mut checks = Vec::new();

    let drift = (&code - result.code()).norm() / code.norm().max(1e-300);
    checks.push(check(
        "code matches phases and power",
        drift <= ROUND_TRIP_TOL,
        format!("relative difference {drift:.2e} (tol {ROUND_TRIP_TOL:.0e})"),
    ));

    let chi = sinr(&code, &filter, &scenario, &covset).map_err(Failure::config)?;
    let chi_err = (chi - result.chi).abs() / result.chi.abs().max(1e-300);
    checks.push(check(
        "objective re-evaluation",
        chi_err <= ROUND_TRIP_TOL,
        format!("recomputed {} vs recorded {}, relative error {chi_err:.2e}", chi, result.chi),
    ));

    let feas = check_feasibility(&code, &scenario, &covset, &domain);
    checks.push(check(
        "similarity and envelope",
        feas.phases_admissible,
        format!("max |phase| {:.6}, allowed {:.6}", result.phases.iter().fold(0.0f64, |m, p| m.max(p.abs())), domain.delta()),
    ));
    checks.push(check(
        "energy budget",
        feas.energy <= 1.0 + FEASIBILITY_TOL,
        format!("energy {:.6e}", feas.energy),
    ));
    let worst = feas.band_slacks.iter().zip(&covset.caps).map(|(s, c)| s / c).fold(f64::INFINITY, f64::min);
    checks.push(check(
        "band caps",
        feas.band_slacks.iter().zip(&covset.caps).all(|(s, c)| *s >= -FEASIBILITY_TOL * c),
        format!("smallest relative slack {worst:.3e} (tol {:.0e})", -FEASIBILITY_TOL),
    ));

    // Closed-form coordinate steps against brute force on sampled coordinates.
    let fm = filter_matrices(&filter, &scenario, &covset);
    let cache = ProductCache::new(&result.phases, &fm, &covset);
    let mut r = rng(oracle.seed);
    let (mut worst_gap, mut failures) = (0.0f64, 0usize);
    let count = samples.min(n);
    for _ in 0..count {
        let h = r.gen_range(0..n);
        let cp = match cache.coordinate_problem(h, result.power, &fm, &covset) {
            Ok(cp) => cp,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let frac = match Fraction1D::from_problem(&cp) {
            Ok(f) => f,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let (closed, brute) = match domain {
            PhaseDomain::Continuous { .. } => {
                let arcs = coordinate_arcs(&cp, &domain);
                (
                    solve_continuous(&frac, &arcs).ok().map(|x| x.1),
                    grid_max_ratio(|p| cp.ratio(p), &arcs, oracle.grid_points, oracle.refine_rounds).map(|x| x.1),
                )
            }
            PhaseDomain::Discrete { .. } => {
                let runs = coordinate_runs(&cp, &domain);
                let plain = RatioPlusLinear { a: cp.a, b: cp.b, c: cp.c, d: cp.d, f: C64::new(0.0, 0.0), g: 0.0 };
                (solve_discrete(&frac, &runs).ok().map(|x| x.1), exhaustive_lattice_max(&plain, &runs).map(|x| x.1))
            }
        };
        match (closed, brute) {
            (Some(a), Some(b)) => {
                let gap = (a - b).abs() / b.abs().max(1e-300);
                worst_gap = worst_gap.max(gap);
                failures += (gap > ORACLE_TOL) as usize;
            }
            (None, None) => {}
            _ => failures += 1,
        }
    }
    checks.push(check(
        "coordinate step vs brute force",
        failures == 0,
        format!("{count} sampled coordinates, worst relative gap {worst_gap:.2e} (tol {ORACLE_TOL:.0e}), {failures} failures"),
    ));

    let mut quad_ok = true;
    let mut parts = Vec::new();
    for (k, band) in scenario.bands.iter().enumerate() {
        let exact = feas.band_energies[k];
        let quad = band_energy_quadrature(&code, band.f1, band.f2, QUADRATURE_INTERVALS);
        let err = (quad - exact).abs();
        quad_ok &= err <= QUADRATURE_TOL * band.cap + 1e-12 * feas.energy && quad <= band.cap * (1.0 + QUADRATURE_TOL);
        parts.push(format!("band {k}: {:.6e} / cap {:.6e}", quad, band.cap));
    }
    checks.push(check("spectral energy by quadrature", quad_ok, parts.join("; ")));
    Ok(checks)
}
