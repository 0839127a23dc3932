use specoex::cdsolver::SolverOptions;
use specoex::initializer::InitMethod;
use specoex::pipeline::{run_design, sweep_epsilon, StartSpec, WARM_LABEL};
use specoex::scenario::{Alphabet, CovarianceSet, ScenarioConfig};

fn starts() -> Vec<StartSpec> {
    vec![StartSpec::Reference, StartSpec::Init(InitMethod::Hivam), StartSpec::Init(InitMethod::Hivac)]
}

#[test]
fn best_start_has_the_largest_objective() {
    let s = ScenarioConfig::coexistence(24, 1.0, Alphabet::Continuous).resolve().unwrap();
    let c = CovarianceSet::build(&s).unwrap();
    let out = run_design(&s, &c, &starts(), &SolverOptions::default(), Some(1)).unwrap();
    let best = out.results.iter().filter_map(|r| r.chi()).fold(f64::MIN, f64::max);
    assert_eq!(out.best_report().chi(), best);
    assert_eq!(out.results.len(), 3);
    for r in &out.results {
        let rep = r.outcome.as_ref().unwrap();
        assert!(rep.chi_trajectory.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-10)), "{}", r.label);
    }
}

#[test]
fn binary_alphabet_has_no_freedom_below_full_similarity() {
    let base = ScenarioConfig::coexistence(20, 0.0, Alphabet::Discrete(2)).resolve().unwrap();
    let c = CovarianceSet::build(&base).unwrap();
    let rows = sweep_epsilon(&base, &c, &[0.0, 0.7, 1.4, 1.9], &starts(), &SolverOptions::default(), Some(1)).unwrap();
    for r in &rows[1..] {
        assert!((r.chi_best - rows[0].chi_best).abs() <= 1e-12 * rows[0].chi_best);
        assert!(r.per_start.iter().any(|(l, _)| l == WARM_LABEL));
    }
}

#[test]
fn zero_similarity_matches_scaled_reference() {
    let s = ScenarioConfig::coexistence(16, 0.0, Alphabet::Continuous).resolve().unwrap();
    let c = CovarianceSet::build(&s).unwrap();
    let out = run_design(&s, &c, &starts(), &SolverOptions::default(), Some(1)).unwrap();
    let reference = out.results.iter().find(|r| r.label == "reference").unwrap().chi().unwrap();
    for r in &out.results {
        assert!((r.chi().unwrap() - reference).abs() <= 1e-12 * reference);
    }
}

#[test]
fn empty_start_list_is_rejected() {
    let s = ScenarioConfig::coexistence(8, 1.0, Alphabet::Continuous).resolve().unwrap();
    let c = CovarianceSet::build(&s).unwrap();
    assert!(run_design(&s, &c, &[], &SolverOptions::default(), None).is_err());
}

#[test]
fn infeasible_explicit_start_fails_alone() {
    let s = ScenarioConfig::coexistence(16, 1.0, Alphabet::Continuous).resolve().unwrap();
    let c = CovarianceSet::build(&s).unwrap();
    let loud = StartSpec::Code { label: "loud".into(), code: s.reference.clone() };
    let out = run_design(&s, &c, &[loud, StartSpec::Reference], &SolverOptions::default(), None).unwrap();
    assert!(out.results[0].outcome.is_err());
    assert_eq!(out.best, 1);
}
