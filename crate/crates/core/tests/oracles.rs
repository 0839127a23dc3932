use specoex::arcset::Arc;
use specoex::initializer::hivac::{coordinate_objective, maximize_coordinate};
use specoex::initializer::InitMethod;
use specoex::linalg::unimodular;
use specoex::metrics::detection_probability;
use specoex::objective::{filter_matrices, ProductCache};
use specoex::oracle::{exhaustive_lattice_max, grid_max_ratio, mc_detection, OracleConfig};
use specoex::arcset::LatticeRun;
use specoex::cdsolver::{filter_step, FilterSolver};
use specoex::scenario::{lattice_phase, Alphabet, CovarianceSet, PhaseDomain, ScenarioConfig};
use specoex::C64;

#[test]
fn grid_oracle_trivial_cases() {
    let constant = |_: f64| 0.75;
    let (_, v) = grid_max_ratio(constant, &[Arc { lo: -1.0, hi: 1.0 }], 1000, 2).unwrap();
    assert_eq!(v, 0.75);
    let (p, _) = grid_max_ratio(|x: f64| x.cos(), &[Arc { lo: 0.4, hi: 0.4 }], 1000, 2).unwrap();
    assert_eq!(p, 0.4);
    assert!(grid_max_ratio(constant, &[], 1000, 2).is_none());
}

#[test]
fn exhaustive_oracle_on_a_singleton() {
    let obj = specoex::phasestep::RatioPlusLinear {
        a: C64::new(0.3, 0.1),
        b: 1.0,
        c: C64::new(0.0, 0.0),
        d: 1.0,
        f: C64::new(0.0, 0.0),
        g: 0.0,
    };
    let (p, v) = exhaustive_lattice_max(&obj, &[LatticeRun { lo: 1, hi: 1, m: 2 }]).unwrap();
    assert_eq!(p, std::f64::consts::PI);
    assert_eq!(v, obj.value(p));
}

#[test]
fn discrete_initializer_update_is_exhaustive() {
    let s = ScenarioConfig::coexistence(16, 1.3, Alphabet::Discrete(16)).resolve().unwrap();
    let c = CovarianceSet::build(&s).unwrap();
    let domain = s.phase_domain().unwrap();
    let PhaseDomain::Discrete { m, lo, hi } = domain else { unreachable!() };
    let phases: Vec<f64> = (0..16).map(|i| lattice_phase((i as i64 % (hi - lo + 1)) + lo, m)).collect();
    let code = unimodular(&phases).component_mul(&s.reference);
    let w = filter_step(&code, &s, &c, FilterSolver::Direct).unwrap().filter;
    let fm = filter_matrices(&w, &s, &c);
    let cache = ProductCache::new(&phases, &fm, &c);
    for i in 0..16 {
        let obj = coordinate_objective(i, &cache, &fm, &c, InitMethod::Hivac.default_beta());
        let (_, v, _) = maximize_coordinate(&obj, &domain, phases[i]);
        let (_, o) = exhaustive_lattice_max(&obj, &[LatticeRun { lo, hi, m }]).unwrap();
        assert!((v - o).abs() <= 1e-12 * o.abs().max(1.0), "coordinate {i}: {v} vs {o}");
    }
}

#[test]
fn monte_carlo_limits() {
    let cfg = OracleConfig::default();
    assert!(cfg.grid_points >= 1000);
    let low = mc_detection(0.0, 1e-2, 200_000, cfg.seed);
    assert!((low.pd - 1e-2).abs() <= 4.0 * low.std_err.max(1e-4));
    let high = mc_detection(400.0, 1e-6, 50_000, cfg.seed);
    assert!(high.pd > 0.999);
    let mid = mc_detection(10.0, 1e-3, 200_000, cfg.seed);
    let exact = detection_probability(10.0, 1e-3);
    assert!((mid.pd - exact).abs() <= 4.0 * mid.std_err);
}
