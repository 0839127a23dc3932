mod common;

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::Rng;

use common::{random_phases, random_scenario};
use specoex::arcset::{feasible_arcs, quantize_arcs, QuadraticConstraint};
use specoex::cdsolver::{amplitude_step, check_feasibility, filter_step, FilterSolver};
use specoex::metrics::detection_probability;
use specoex::objective::{assemble_code, filter_matrices, ProductCache};
use specoex::oracle::{random_coordinate_problem, rng};
use specoex::phasestep::optimize_coordinate;
use specoex::scenario::{similarity_delta, Alphabet, PhaseDomain, ScenarioConfig};
use specoex::C64;

fn alphabet_from(k: u8) -> Alphabet {
    match k % 4 {
        0 => Alphabet::Continuous,
        1 => Alphabet::Discrete(2),
        2 => Alphabet::Discrete(8),
        _ => Alphabet::Discrete(64),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arcs_are_sorted_disjoint_and_inside_the_box(seed in any::<u64>(), k in 0usize..7, delta in 1e-3..(PI - 1e-3)) {
        let mut r = rng(seed);
        let cons: Vec<QuadraticConstraint> = (0..k)
            .map(|_| {
                let z = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                QuadraticConstraint::from_spectral(z, r.gen_range(-1.2..1.2) * z.norm())
            })
            .collect();
        let arcs = feasible_arcs(&cons, delta);
        for a in &arcs {
            prop_assert!(a.lo <= a.hi);
            prop_assert!(a.lo >= -delta - 1e-12 && a.hi <= delta + 1e-12);
        }
        for w in arcs.windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
        }
    }

    #[test]
    fn feasible_incumbent_lies_in_its_arcs(seed in any::<u64>(), k in 0usize..7, delta in 1e-3..(PI - 1e-3), u in 0.0..1.0f64) {
        let inc = -delta + 2.0 * delta * u;
        let cp = random_coordinate_problem(&mut rng(seed), k, inc);
        let arcs = feasible_arcs(&cp.constraints_containing(inc), delta);
        prop_assert!(arcs.iter().any(|a| a.contains(inc, 0.0)));
    }

    #[test]
    fn lattice_runs_lie_inside_the_arcs(seed in any::<u64>(), k in 1usize..7, delta in 1e-3..PI, mexp in 1u32..7) {
        let m = 1u32 << mexp;
        let mut r = rng(seed);
        let cons: Vec<QuadraticConstraint> = (0..k)
            .map(|_| {
                let z = C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
                QuadraticConstraint::from_spectral(z, r.gen_range(-1.0..1.2) * z.norm())
            })
            .collect();
        let arcs = feasible_arcs(&cons, delta);
        let snap = TAU / m as f64 * 1e-9;
        for run in quantize_arcs(&arcs, m) {
            for idx in run.indices() {
                let phi = specoex::scenario::lattice_phase(idx, m);
                prop_assert!(arcs.iter().any(|a| a.contains(phi, snap)), "index {idx} of {m}");
            }
        }
    }

    #[test]
    fn coordinate_step_never_decreases_and_stays_feasible(seed in any::<u64>(), k in 0usize..7, delta in 1e-3..(PI - 1e-3), u in 0.0..1.0f64) {
        let inc = -delta + 2.0 * delta * u;
        let cp = random_coordinate_problem(&mut rng(seed), k, inc);
        let domain = PhaseDomain::Continuous { delta };
        let out = optimize_coordinate(&cp, &domain, inc).unwrap();
        prop_assert!(out.value >= cp.ratio(inc));
        prop_assert!(out.phase.abs() <= delta + 1e-12);
        let scale = cp.spectral.iter().map(|t| t.z.norm() + t.bound.abs()).fold(1e-300, f64::max);
        prop_assert!(cp.max_violation(out.phase) <= 1e-9 * scale);
    }

    #[test]
    fn delta_grows_with_epsilon(a in 0.0..2.0f64, b in 0.0..2.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(similarity_delta(lo) <= similarity_delta(hi));
    }

    #[test]
    fn pd_is_monotone_in_snr(a in 0.0..200.0f64, b in 0.0..200.0f64, e in 2.0..10.0f64) {
        let pfa = 10f64.powf(-e);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(detection_probability(lo, pfa) <= detection_probability(hi, pfa));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coordinate_ratio_equals_objective(seed in any::<u64>(), n in 4usize..24, ak in any::<u8>()) {
        let mut r = rng(seed);
        let (s, c) = random_scenario(&mut r, n, alphabet_from(ak));
        let domain = s.phase_domain().unwrap();
        let phases = random_phases(&mut r, n, &domain);
        let power = amplitude_step(&phases, &c);
        let code = assemble_code(&phases, power, &s.reference);
        let w = filter_step(&code, &s, &c, FilterSolver::Direct).unwrap().filter;
        let fm = filter_matrices(&w, &s, &c);
        let cache = ProductCache::new(&phases, &fm, &c);
        let whole = fm.chi(&phases, power);
        for h in 0..n {
            let cp = cache.coordinate_problem(h, power, &fm, &c).unwrap();
            prop_assert!((cp.ratio(phases[h]) - whole).abs() <= 1e-9 * whole);
        }
    }

    #[test]
    fn amplitude_step_gives_a_feasible_code(seed in any::<u64>(), n in 4usize..24, ak in any::<u8>()) {
        let mut r = rng(seed);
        let (s, c) = random_scenario(&mut r, n, alphabet_from(ak));
        let domain = s.phase_domain().unwrap();
        let phases = random_phases(&mut r, n, &domain);
        let code = assemble_code(&phases, amplitude_step(&phases, &c), &s.reference);
        prop_assert!(check_feasibility(&code, &s, &c, &domain).feasible);
    }

    #[test]
    fn filter_is_distortionless(seed in any::<u64>(), n in 4usize..24) {
        let mut r = rng(seed);
        let (s, c) = random_scenario(&mut r, n, Alphabet::Continuous);
        let phases = random_phases(&mut r, n, &s.phase_domain().unwrap());
        let code = assemble_code(&phases, 0.5, &s.reference);
        let w = filter_step(&code, &s, &c, FilterSolver::Direct).unwrap().filter;
        prop_assert!((w.dotc(&code) - C64::new(1.0, 0.0)).norm() <= 1e-10);
    }

    #[test]
    fn scenario_json_round_trips(seed in any::<u64>(), n in 2usize..40, ak in any::<u8>()) {
        let cfg = common::random_config(&mut rng(seed), n, alphabet_from(ak));
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.resolve().unwrap().reference, cfg.resolve().unwrap().reference);
    }
}

#[test]
fn coexistence_scenario_is_valid_for_every_alphabet() {
    for a in [Alphabet::Continuous, Alphabet::Discrete(2), Alphabet::Discrete(64)] {
        let s = ScenarioConfig::coexistence(32, 1.0, a).resolve().unwrap();
        assert_eq!(s.bands.len(), 2);
    }
}
