//! Closed-form maximization of one phase coordinate.
//!
//! The coordinate objective is a ratio of two sinusoids in `phi`. On the
//! circle it has one global maximizer `phi_g` and one global minimizer
//! `phi_s` and is monotone in between, so its maximum over a union of arcs is
//! either `phi_g` or one of the arc endpoints adjacent to it.

use std::f64::consts::{PI, TAU};

use crate::arcset::{feasible_arcs, quantize_arcs, Arc, LatticeRun};
use crate::error::{Error, Result};
use crate::objective::CoordinateProblem;
use crate::scenario::{lattice_phase, PhaseDomain};
use crate::C64;

/// Unimodal ratio `(Re(a e^{j phi}) + b) / (Re(c e^{j phi}) + d)` with its extremizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fraction1D {
    pub a: C64,
    pub b: f64,
    pub c: C64,
    pub d: f64,
    /// Global maximizer in `[-pi, pi)`.
    pub phi_g: f64,
    /// Global minimizer in `[-pi, pi)`.
    pub phi_s: f64,
    /// True when the ratio does not depend on `phi`.
    pub constant: bool,
}

fn half_angle(t: f64) -> f64 {
    2.0 * t.atan()
}

/// Locate the extremizers of the ratio. Requires `d > |c|`.
pub fn classify(a: C64, b: f64, c: C64, d: f64) -> Result<Fraction1D> {
    if !(d > c.norm()) || !d.is_finite() {
        return Err(Error::NonPositiveDenominator { c_abs: c.norm(), d });
    }
    let constant_result = Fraction1D { a, b, c, d, phi_g: -PI, phi_s: 0.0, constant: true };
    let sn = a.norm().max(b.abs());
    if sn == 0.0 {
        return Ok(constant_result);
    }
    // Scale-free coefficients: numerator by max(|a|, |b|), denominator by d.
    let (an, bn) = (a / sn, b / sn);
    let (cn, dn) = (c / d, 1.0);
    let a1 = bn - an.re;
    let b1 = -2.0 * an.im;
    let c1 = bn + an.re;
    let a2 = dn - cn.re;
    let b2 = -2.0 * cn.im;
    let c2 = dn + cn.re;
    let dhat = a1 * b2 - a2 * b1;
    let ehat = 2.0 * (a1 * c2 - a2 * c1);
    let fhat = b1 * c2 - b2 * c1;
    let tol = 1e-12 * (a1 * b2).abs().max((a2 * b1).abs()).max(1.0);
    let tol_e = 1e-12 * (a1 * c2).abs().max((a2 * c1).abs()).max(1.0);

    let (phi_g, phi_s) = if dhat.abs() <= tol {
        if ehat.abs() <= tol_e {
            return Ok(constant_result);
        }
        let t0 = -fhat / ehat;
        if ehat < 0.0 {
            (half_angle(t0), -PI)
        } else {
            (-PI, half_angle(t0))
        }
    } else {
        let disc = (ehat * ehat - 4.0 * dhat * fhat).max(0.0);
        let sq = disc.sqrt();
        if sq <= 1e-12 * ehat.abs().max((4.0 * dhat * fhat).abs().sqrt()).max(1e-300) {
            // Double stationary point: the derivative never changes sign on the circle.
            return Ok(constant_result);
        }
        // Stable evaluation of (-e - sqrt(disc)) / (2 d) and its companion root.
        let (tg, ts) = if ehat >= 0.0 {
            let q = -(ehat + sq) / 2.0;
            (q / dhat, fhat / q)
        } else {
            let q = (-ehat + sq) / 2.0;
            (fhat / q, q / dhat)
        };
        (half_angle(tg), half_angle(ts))
    };
    Ok(Fraction1D { a, b, c, d, phi_g, phi_s, constant: false })
}

impl Fraction1D {
    pub fn from_problem(cp: &CoordinateProblem) -> Result<Self> {
        classify(cp.a, cp.b, cp.c, cp.d)
    }

    pub fn value(&self, phi: f64) -> f64 {
        let e = C64::from_polar(1.0, phi);
        ((self.a * e).re + self.b) / ((self.c * e).re + self.d)
    }
}

/// Best of a candidate list; near-ties go to the candidate closest to `incumbent`.
fn pick_best(frac: &Fraction1D, candidates: &[f64], incumbent: Option<f64>) -> (f64, f64) {
    let mut best = (candidates[0], frac.value(candidates[0]));
    for &phi in &candidates[1..] {
        let v = frac.value(phi);
        let tie = (v - best.1).abs() <= 1e-14 * v.abs().max(best.1.abs());
        if tie {
            if let Some(inc) = incumbent {
                if (phi - inc).abs() < (best.0 - inc).abs() {
                    best = (phi, v);
                }
            }
        } else if v > best.1 {
            best = (phi, v);
        }
    }
    best
}

fn in_arc(arc: &Arc, phi: f64) -> bool {
    arc.contains(phi, 0.0) || arc.contains(phi + TAU, 0.0) || arc.contains(phi - TAU, 0.0)
}

/// Maximize over a union of disjoint sorted arcs. Returns `(phase, value)`.
pub fn solve_continuous(frac: &Fraction1D, arcs: &[Arc]) -> Result<(f64, f64)> {
    solve_continuous_near(frac, arcs, None)
}

pub fn solve_continuous_near(frac: &Fraction1D, arcs: &[Arc], incumbent: Option<f64>) -> Result<(f64, f64)> {
    if arcs.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let g = frac.phi_g;
    if !frac.constant && arcs.iter().any(|a| in_arc(a, g)) {
        let phi = if arcs.iter().any(|a| a.contains(g, 0.0)) { g } else if g < 0.0 { g + TAU } else { g - TAU };
        return Ok((phi, frac.value(phi)));
    }
    let first = arcs[0].lo;
    let last = arcs[arcs.len() - 1].hi;
    let mut cands = vec![first, last];
    if g >= first && g <= last {
        // g sits in the gap between arcs r and r + 1.
        if let Some(r) = arcs.windows(2).position(|w| g > w[0].hi && g < w[1].lo) {
            cands.push(arcs[r].hi);
            cands.push(arcs[r + 1].lo);
        }
    }
    if frac.constant {
        cands.extend(arcs.iter().flat_map(|a| [a.lo, a.hi]));
        if let Some(inc) = incumbent {
            if arcs.iter().any(|a| a.contains(inc, 0.0)) {
                cands.push(inc);
            }
        }
    }
    Ok(pick_best(frac, &cands, incumbent))
}

/// Maximize over lattice runs. Returns `(phase, value)`.
pub fn solve_discrete(frac: &Fraction1D, runs: &[LatticeRun]) -> Result<(f64, f64)> {
    solve_discrete_near(frac, runs, None)
}

pub fn solve_discrete_near(frac: &Fraction1D, runs: &[LatticeRun], incumbent: Option<f64>) -> Result<(f64, f64)> {
    let runs: Vec<LatticeRun> = runs.iter().copied().filter(|r| !r.is_empty()).collect();
    if runs.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let m = runs[0].m;
    let scale = m as f64 / TAU;
    let g = frac.phi_g;
    let mut cands: Vec<f64> = Vec::new();
    let mut inside = false;
    if !frac.constant {
        for shift in [0.0, TAU, -TAU] {
            let gg = g + shift;
            if let Some(run) = runs.iter().find(|r| gg >= r.lo_phase() && gg <= r.hi_phase()) {
                let k = gg * scale;
                let kl = (k.floor() as i64).clamp(run.lo, run.hi);
                let ku = (k.ceil() as i64).clamp(run.lo, run.hi);
                cands.push(lattice_phase(kl, m));
                cands.push(lattice_phase(ku, m));
                inside = true;
                break;
            }
        }
    }
    if !inside {
        let first = runs[0].lo_phase();
        let last = runs[runs.len() - 1].hi_phase();
        cands.push(first);
        cands.push(last);
        if g >= first && g <= last {
            if let Some(r) = runs.windows(2).position(|w| g > w[0].hi_phase() && g < w[1].lo_phase()) {
                cands.push(runs[r].hi_phase());
                cands.push(runs[r + 1].lo_phase());
            }
        }
        if frac.constant {
            cands.extend(runs.iter().flat_map(|r| [r.lo_phase(), r.hi_phase()]));
        }
    }
    Ok(pick_best(frac, &cands, incumbent))
}

/// Result of one coordinate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateOutcome {
    pub phase: f64,
    pub value: f64,
    pub incumbent_value: f64,
    pub changed: bool,
    /// The computed feasible set was empty and the incumbent was kept.
    pub empty_feasible_set: bool,
}

/// Feasible arcs of a coordinate subproblem inside the phase domain.
pub fn coordinate_arcs(cp: &CoordinateProblem, domain: &PhaseDomain) -> Vec<Arc> {
    feasible_arcs(&cp.constraints(), domain.delta())
}

/// Feasible lattice runs of a coordinate subproblem inside a discrete domain.
pub fn coordinate_runs(cp: &CoordinateProblem, domain: &PhaseDomain) -> Vec<LatticeRun> {
    lattice_runs(&coordinate_arcs(cp, domain), domain)
}

fn lattice_runs(arcs: &[Arc], domain: &PhaseDomain) -> Vec<LatticeRun> {
    match *domain {
        PhaseDomain::Discrete { m, lo, hi } => quantize_arcs(arcs, m)
            .into_iter()
            .map(|r| LatticeRun { lo: r.lo.max(lo), hi: r.hi.min(hi), m })
            .filter(|r| !r.is_empty())
            .collect(),
        PhaseDomain::Continuous { .. } => Vec::new(),
    }
}

/// Maximize coordinate `h` exactly. The incumbent is kept unless the new value is strictly larger.
pub fn optimize_coordinate(cp: &CoordinateProblem, domain: &PhaseDomain, incumbent: f64) -> Result<CoordinateOutcome> {
    let frac = Fraction1D::from_problem(cp)?;
    let incumbent_value = frac.value(incumbent);
    let arcs = feasible_arcs(&cp.constraints_containing(incumbent), domain.delta());
    let solved = match domain {
        PhaseDomain::Continuous { .. } => solve_continuous_near(&frac, &arcs, Some(incumbent)),
        PhaseDomain::Discrete { .. } => solve_discrete_near(&frac, &lattice_runs(&arcs, domain), Some(incumbent)),
    };
    match solved {
        Ok((phase, value)) if value > incumbent_value => Ok(CoordinateOutcome {
            phase,
            value,
            incumbent_value,
            changed: true,
            empty_feasible_set: false,
        }),
        Ok(_) => Ok(CoordinateOutcome {
            phase: incumbent,
            value: incumbent_value,
            incumbent_value,
            changed: false,
            empty_feasible_set: false,
        }),
        Err(Error::EmptyFeasibleSet) => Ok(CoordinateOutcome {
            phase: incumbent,
            value: incumbent_value,
            incumbent_value,
            changed: false,
            empty_feasible_set: true,
        }),
        Err(e) => Err(e),
    }
}

/// Ratio plus a sinusoidal penalty, `chi(phi) + Re(f e^{j phi}) + g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPlusLinear {
    pub a: C64,
    pub b: f64,
    pub c: C64,
    pub d: f64,
    pub f: C64,
    pub g: f64,
}

impl RatioPlusLinear {
    pub fn value(&self, phi: f64) -> f64 {
        let e = C64::from_polar(1.0, phi);
        ((self.a * e).re + self.b) / ((self.c * e).re + self.d) + (self.f * e).re + self.g
    }
}

impl From<&Fraction1D> for RatioPlusLinear {
    fn from(fr: &Fraction1D) -> Self {
        RatioPlusLinear { a: fr.a, b: fr.b, c: fr.c, d: fr.d, f: C64::new(0.0, 0.0), g: 0.0 }
    }
}
