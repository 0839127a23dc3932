//! Multi-start design runs and similarity sweeps.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::cdsolver::{solve, DesignReport, SolverOptions};
use crate::error::{Error, Result};
use crate::initializer::{initialize, rescale_to_feasible, InitMethod, InitOptions};
use crate::scenario::{CovarianceSet, Scenario};
use crate::C64;

/// Where an ascent run starts.
#[derive(Debug, Clone)]
pub enum StartSpec {
    /// The reference code, scaled to feasibility.
    Reference,
    Init(InitMethod),
    /// An explicit code, used as given.
    Code { label: String, code: DVector<C64> },
}

impl StartSpec {
    pub fn label(&self) -> String {
        match self {
            StartSpec::Reference => "reference".into(),
            StartSpec::Init(m) => m.name().into(),
            StartSpec::Code { label, .. } => label.clone(),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "reference" | "ref" => Some(StartSpec::Reference),
            "hivam" => Some(StartSpec::Init(InitMethod::Hivam)),
            "hivac" => Some(StartSpec::Init(InitMethod::Hivac)),
            _ => None,
        }
    }
}

pub fn initial_code(spec: &StartSpec, scenario: &Scenario, covset: &CovarianceSet) -> Result<DVector<C64>> {
    match spec {
        StartSpec::Reference => Ok(rescale_to_feasible(&scenario.reference, covset)),
        StartSpec::Init(m) => Ok(initialize(*m, scenario, covset, &InitOptions::for_method(*m))?.code),
        StartSpec::Code { code, .. } => Ok(code.clone()),
    }
}

#[derive(Debug, Clone)]
pub struct StartResult {
    pub label: String,
    pub outcome: std::result::Result<DesignReport, String>,
}

impl StartResult {
    pub fn chi(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|r| r.chi())
    }
}

#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub results: Vec<StartResult>,
    pub best: usize,
}

impl DesignOutcome {
    pub fn best_report(&self) -> &DesignReport {
        self.results[self.best].outcome.as_ref().expect("best start succeeded")
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t.max(1));
    }
    b.build().map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

/// Run the ascent from every start concurrently and pick the best objective.
/// Fails only if every start fails; the first error is returned in that case.
pub fn run_design(
    scenario: &Scenario,
    covset: &CovarianceSet,
    starts: &[StartSpec],
    options: &SolverOptions,
    threads: Option<usize>,
) -> Result<DesignOutcome> {
    if starts.is_empty() {
        return Err(Error::InvalidScenario("no starting points given".into()));
    }
    let run = |spec: &StartSpec| -> Result<DesignReport> {
        let code = initial_code(spec, scenario, covset)?;
        solve(scenario, covset, &code, options)
    };
    let raw: Vec<(String, Result<DesignReport>)> =
        pool(threads)?.install(|| starts.par_iter().map(|s| (s.label(), run(s))).collect());
    let mut first_err = None;
    let mut results = Vec::with_capacity(raw.len());
    for (label, r) in raw {
        let outcome = match r {
            Ok(rep) => Ok(rep),
            Err(e) => {
                let msg = e.to_string();
                first_err.get_or_insert(e);
                Err(msg)
            }
        };
        results.push(StartResult { label, outcome });
    }
    let best = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.chi().map(|c| (i, c)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    match best {
        Some(best) => Ok(DesignOutcome { results, best }),
        None => Err(first_err.unwrap_or_else(|| Error::Numerical("no start produced a design".into()))),
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub epsilon: f64,
    pub chi_best: f64,
    pub best_label: String,
    /// Objective per start label, `None` when that start failed.
    pub per_start: Vec<(String, Option<f64>)>,
    pub best_code: DVector<C64>,
}

/// Label of the start that continues from the previous similarity level.
pub const WARM_LABEL: &str = "warm";

/// Design at every similarity level in `grid` (sorted ascending). From the second
/// level on, the best code of the previous level is added as a warm start; it is
/// feasible there because the admissible set grows with the similarity level.
pub fn sweep_epsilon(
    base: &Scenario,
    covset: &CovarianceSet,
    grid: &[f64],
    starts: &[StartSpec],
    options: &SolverOptions,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let mut eps: Vec<f64> = grid.to_vec();
    eps.sort_by(|a, b| a.total_cmp(b));
    let mut rows: Vec<SweepRow> = Vec::with_capacity(eps.len());
    for &e in &eps {
        let scenario = base.with_epsilon(e)?;
        let mut list = starts.to_vec();
        if let Some(prev) = rows.last() {
            list.push(StartSpec::Code { label: WARM_LABEL.into(), code: prev.best_code.clone() });
        }
        let out = run_design(&scenario, covset, &list, options, threads)?;
        let best = out.best_report();
        rows.push(SweepRow {
            epsilon: e,
            chi_best: best.chi(),
            best_label: out.results[out.best].label.clone(),
            per_start: out.results.iter().map(|r| (r.label.clone(), r.chi())).collect(),
            best_code: best.code.clone(),
        });
    }
    Ok(rows)
}
