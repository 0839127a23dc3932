//! Feasible phase sets of a coordinate subproblem.
//!
//! Each band constraint `Re(z e^{j phi}) <= bound` becomes a quadratic
//! inequality in `t = tan(phi / 2)`. The feasible arcs are the intersection of
//! all solution sets with the similarity box, mapped back through `2 atan t`.

use std::f64::consts::{PI, TAU};

use crate::scenario::lattice_phase;
use crate::C64;

/// Relative widening applied to finite root endpoints in `t`.
pub const ROOT_WIDENING: f64 = 1e-12;
/// Index-space slack used when snapping arc endpoints to the lattice.
pub const LATTICE_SNAP: f64 = 1e-10;
const DEGENERATE: f64 = 1e-14;

/// Closed phase interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn contains(&self, phi: f64, tol: f64) -> bool {
        phi >= self.lo - tol && phi <= self.hi + tol
    }
}

/// Consecutive lattice indices `lo..=hi` of an `m`-ary alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeRun {
    pub lo: i64,
    pub hi: i64,
    pub m: u32,
}

impl LatticeRun {
    pub fn lo_phase(&self) -> f64 {
        lattice_phase(self.lo, self.m)
    }

    pub fn hi_phase(&self) -> f64 {
        lattice_phase(self.hi, self.m)
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

/// `qa t^2 + qb t + qc <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticConstraint {
    pub qa: f64,
    pub qb: f64,
    pub qc: f64,
}

impl QuadraticConstraint {
    /// Constraint `Re(z e^{j phi}) <= bound` in the half-angle variable.
    pub fn from_spectral(z: C64, bound: f64) -> Self {
        QuadraticConstraint { qa: -z.re - bound, qb: -2.0 * z.im, qc: z.re - bound }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.qa * t + self.qb) * t + self.qc
    }
}

/// Union of disjoint closed intervals in `t`, sorted, endpoints possibly infinite.
pub type SolutionSet = Vec<(f64, f64)>;

fn widen(t: f64, dir: f64) -> f64 {
    if t.is_finite() {
        t + dir * ROOT_WIDENING * t.abs().max(1.0)
    } else {
        t
    }
}

/// Solution set of one quadratic constraint over the real line, slightly widened.
pub fn quadratic_solution_set(q: &QuadraticConstraint) -> SolutionSet {
    let scale = q.qa.abs().max(q.qb.abs()).max(q.qc.abs());
    if scale == 0.0 || !scale.is_finite() {
        return vec![(f64::NEG_INFINITY, f64::INFINITY)];
    }
    let (a, b, c) = (q.qa / scale, q.qb / scale, q.qc / scale);
    let raw: SolutionSet = if a.abs() <= DEGENERATE {
        if b.abs() <= DEGENERATE {
            if c <= DEGENERATE {
                vec![(f64::NEG_INFINITY, f64::INFINITY)]
            } else {
                vec![]
            }
        } else if b > 0.0 {
            vec![(f64::NEG_INFINITY, -c / b)]
        } else {
            vec![(-c / b, f64::INFINITY)]
        }
    } else {
        let mut disc = b * b - 4.0 * a * c;
        if disc < 0.0 && disc.abs() <= 1e-12 * (b * b + (4.0 * a * c).abs()) {
            disc = 0.0;
        }
        if disc < 0.0 {
            if a < 0.0 {
                vec![(f64::NEG_INFINITY, f64::INFINITY)]
            } else {
                vec![]
            }
        } else {
            let sq = disc.sqrt();
            let qq = -0.5 * (b + b.signum() * sq);
            let (r1, r2) = if qq == 0.0 { (0.0, 0.0) } else { (qq / a, c / qq) };
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            if a > 0.0 {
                vec![(lo, hi)]
            } else {
                vec![(f64::NEG_INFINITY, lo), (hi, f64::INFINITY)]
            }
        }
    };
    let mut out: SolutionSet = raw.into_iter().map(|(l, u)| (widen(l, -1.0), widen(u, 1.0))).collect();
    // Widening can make the two pieces of a concave case overlap.
    if out.len() == 2 && out[0].1 >= out[1].0 {
        out = vec![(f64::NEG_INFINITY, f64::INFINITY)];
    }
    out
}

/// Feasible arcs in `[-delta, delta]`; `delta >= pi` means the whole circle.
pub fn feasible_arcs(constraints: &[QuadraticConstraint], delta: f64) -> Vec<Arc> {
    let full = delta >= PI;
    let box_t = if full { f64::INFINITY } else { (delta / 2.0).tan() };
    let (box_lo, box_hi) = (-box_t, box_t);

    // Complements of every solution set, as open intervals.
    let mut forbidden: Vec<(f64, f64)> = Vec::new();
    for q in constraints {
        let set = quadratic_solution_set(q);
        if set.is_empty() {
            return Vec::new();
        }
        if set[0].0 > f64::NEG_INFINITY {
            forbidden.push((f64::NEG_INFINITY, set[0].0));
        }
        for pair in set.windows(2) {
            forbidden.push((pair[0].1, pair[1].0));
        }
        let last = set[set.len() - 1].1;
        if last < f64::INFINITY {
            forbidden.push((last, f64::INFINITY));
        }
    }
    forbidden.sort_by(|x, y| x.0.total_cmp(&y.0));

    // Sweep: `cur` is the smallest point not excluded by the intervals seen so far.
    let mut t_arcs: Vec<(f64, f64)> = Vec::new();
    let mut cur = box_lo;
    for &(a, b) in &forbidden {
        if cur > box_hi {
            break;
        }
        let end = a.min(box_hi);
        if a > f64::NEG_INFINITY && cur <= end {
            t_arcs.push((cur, end));
        }
        cur = cur.max(b);
    }
    if cur <= box_hi && cur < f64::INFINITY {
        t_arcs.push((cur, box_hi));
    }

    let mut arcs: Vec<Arc> = Vec::with_capacity(t_arcs.len());
    for (l, u) in t_arcs {
        let mut lo = 2.0 * l.atan();
        let mut hi = 2.0 * u.atan();
        if !full {
            lo = lo.clamp(-delta, delta);
            hi = hi.clamp(-delta, delta);
        }
        if let Some(last) = arcs.last_mut() {
            if lo <= last.hi {
                last.hi = last.hi.max(hi);
                continue;
            }
        }
        arcs.push(Arc { lo, hi });
    }
    arcs
}

/// Lattice points of an `m`-ary alphabet inside the arcs, as maximal runs of
/// indices in `[-floor(m/2), -floor(m/2) + m - 1]`.
pub fn quantize_arcs(arcs: &[Arc], m: u32) -> Vec<LatticeRun> {
    let scale = m as f64 / TAU;
    let min_idx = -(m as i64 / 2);
    let max_idx = min_idx + m as i64 - 1;
    let mut runs: Vec<LatticeRun> = Vec::new();
    for arc in arcs {
        let lo = ((arc.lo * scale - LATTICE_SNAP).ceil() as i64).max(min_idx);
        let hi = ((arc.hi * scale + LATTICE_SNAP).floor() as i64).min(max_idx);
        if lo > hi {
            continue;
        }
        if let Some(last) = runs.last_mut() {
            if lo <= last.hi + 1 {
                last.hi = last.hi.max(hi);
                continue;
            }
        }
        runs.push(LatticeRun { lo, hi, m });
    }
    runs
}
