//! SINR evaluation in the original and in the reparameterized form, and the
//! per-coordinate fractional subproblem.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{quad_form, unimodular};
use crate::scenario::{lag_gram, CovarianceSet, Scenario};
use crate::C64;

/// Design variables: phase shifts, transmit power and receive filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TransceiverState {
    pub phases: Vec<f64>,
    pub power: f64,
    pub filter: DVector<C64>,
}

/// `s = sqrt(P) exp(j phi) .* s0`.
pub fn assemble_code(phases: &[f64], power: f64, reference: &DVector<C64>) -> DVector<C64> {
    let amp = power.max(0.0).sqrt();
    DVector::from_iterator(
        phases.len(),
        phases.iter().zip(reference.iter()).map(|(&p, &r)| C64::from_polar(amp, p) * r),
    )
}

/// Phases of `s` relative to the reference, `arg(s_h conj(s0_h))`.
pub fn relative_phases(code: &DVector<C64>, reference: &DVector<C64>) -> Vec<f64> {
    code.iter().zip(reference.iter()).map(|(s, r)| (s * r.conj()).arg()).collect()
}

/// `w^H J_m s` for one lag, where `(J_m s)_i = s_{i-m}`.
pub fn cross_correlation(filter: &DVector<C64>, code: &DVector<C64>, m: isize) -> C64 {
    let n = code.len() as isize;
    let lo = m.max(0);
    let hi = (n - 1).min(n - 1 + m);
    let mut acc = C64::new(0.0, 0.0);
    for i in lo..=hi {
        acc += filter[i as usize].conj() * code[(i - m) as usize];
    }
    acc
}

/// Clutter power at the filter output, `w^H R_d(s) w`.
pub fn clutter_output(code: &DVector<C64>, filter: &DVector<C64>, scenario: &Scenario) -> f64 {
    let n = scenario.n as isize;
    let mut acc = 0.0;
    for m in -(n - 1)..n {
        let beta = scenario.clutter_power(m);
        if beta != 0.0 {
            acc += beta * cross_correlation(filter, code, m).norm_sqr();
        }
    }
    acc
}

/// Output SINR `|w^H s|^2 / (w^H R_d(s) w + w^H R_ind w)`.
pub fn sinr(code: &DVector<C64>, filter: &DVector<C64>, scenario: &Scenario, covset: &CovarianceSet) -> Result<f64> {
    let num = filter.dotc(code).norm_sqr();
    let den = clutter_output(code, filter, scenario) + quad_form(&covset.r_ind, filter);
    if !(den > 0.0) || !num.is_finite() {
        return Err(Error::DegenerateFilter);
    }
    Ok(num / den)
}

/// Quadratic forms of the objective for a fixed filter.
#[derive(Debug, Clone)]
pub struct FilterMatrices {
    /// Rank-one numerator matrix `u u^H`.
    pub m1: DMatrix<C64>,
    /// Whitened clutter matrix seen through the filter.
    pub m2: DMatrix<C64>,
    /// Signal-independent output power `w^H R_ind w`.
    pub theta: f64,
    pub u: DVector<C64>,
}

pub fn filter_matrices(filter: &DVector<C64>, scenario: &Scenario, covset: &CovarianceSet) -> FilterMatrices {
    let s0 = &scenario.reference;
    let u = DVector::from_fn(scenario.n, |i, _| s0[i].conj() * filter[i]);
    let m1 = &u * u.adjoint();
    // Entry (i, l) of the inner matrix is sum_m beta_m w_{i+m} conj(w_{l+m}).
    let g = lag_gram(filter, |m| scenario.clutter_power(-m));
    let m2 = DMatrix::from_fn(scenario.n, scenario.n, |i, l| s0[i].conj() * g[(i, l)] * s0[l]);
    FilterMatrices { m1, m2, theta: quad_form(&covset.r_ind, filter), u }
}

impl FilterMatrices {
    /// `chi = P x^H M1 x / (P x^H M2 x + theta)` with `x = exp(j phi)`.
    pub fn chi(&self, phases: &[f64], power: f64) -> f64 {
        let x = unimodular(phases);
        let num = power * self.u.dotc(&x).norm_sqr();
        num / (power * quad_form(&self.m2, &x) + self.theta)
    }
}

/// Reparameterized objective of a full state.
pub fn chi(state: &TransceiverState, scenario: &Scenario, covset: &CovarianceSet) -> f64 {
    filter_matrices(&state.filter, scenario, covset).chi(&state.phases, state.power)
}

/// Relative slack added to each band bound when the incumbent must stay feasible.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// One band constraint of the coordinate subproblem: `Re(z e^{j phi}) <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTerm {
    pub z: C64,
    pub bound: f64,
}

/// `(Re(a e^{j phi}) + b) / (Re(c e^{j phi}) + d)` subject to the spectral terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateProblem {
    pub a: C64,
    pub b: f64,
    pub c: C64,
    pub d: f64,
    pub spectral: Vec<SpectralTerm>,
}

impl CoordinateProblem {
    pub fn numerator(&self, phi: f64) -> f64 {
        (self.a * C64::from_polar(1.0, phi)).re + self.b
    }

    pub fn denominator(&self, phi: f64) -> f64 {
        (self.c * C64::from_polar(1.0, phi)).re + self.d
    }

    pub fn ratio(&self, phi: f64) -> f64 {
        self.numerator(phi) / self.denominator(phi)
    }

    /// Largest violation `Re(z e^{j phi}) - bound` over the spectral terms (non-positive when feasible).
    pub fn max_violation(&self, phi: f64) -> f64 {
        let e = C64::from_polar(1.0, phi);
        self.spectral.iter().map(|t| (t.z * e).re - t.bound).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn constraints(&self) -> Vec<crate::arcset::QuadraticConstraint> {
        self.spectral
            .iter()
            .map(|t| crate::arcset::QuadraticConstraint::from_spectral(t.z, t.bound))
            .collect()
    }

    /// Constraints relaxed just enough to contain `incumbent`: a bound the incumbent
    /// exceeds through rounding is raised to its value, plus a small relative slack.
    pub fn constraints_containing(&self, incumbent: f64) -> Vec<crate::arcset::QuadraticConstraint> {
        let e = C64::from_polar(1.0, incumbent);
        self.spectral
            .iter()
            .map(|t| {
                let bound = t.bound.max((t.z * e).re) + CONSTRAINT_SLACK * (t.z.norm() + t.bound.abs());
                crate::arcset::QuadraticConstraint::from_spectral(t.z, bound)
            })
            .collect()
    }
}

/// Products of the current unimodular vector with every matrix of the subproblem.
/// Kept in sync by rank-one column updates as single phases change.
#[derive(Debug, Clone)]
pub struct ProductCache {
    pub x: DVector<C64>,
    pub m1x: DVector<C64>,
    pub m2x: DVector<C64>,
    pub rx: Vec<DVector<C64>>,
    pub xm1x: f64,
    pub xm2x: f64,
    pub xrx: Vec<f64>,
}

/// Dependence of `x^H A x` on coordinate `h`: `Re(a e^{j phi}) + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Form {
    pub a: C64,
    /// `s_hat^H A s_hat + A_hh`, where `s_hat` is `x` with coordinate `h` zeroed.
    pub b: f64,
}

fn form(h: usize, a: &DMatrix<C64>, x: &DVector<C64>, ax: &DVector<C64>, xax: f64) -> Form {
    let ahh = a[(h, h)].re;
    let xh = x[h];
    let hat = xax - 2.0 * (xh.conj() * ax[h]).re + ahh;
    Form { a: (ax[h] - xh * ahh).conj() * 2.0, b: hat + ahh }
}

impl ProductCache {
    pub fn new(phases: &[f64], fm: &FilterMatrices, covset: &CovarianceSet) -> Self {
        let x = unimodular(phases);
        let m1x = &fm.m1 * &x;
        let m2x = &fm.m2 * &x;
        let rx: Vec<_> = covset.whitened_band_grams.iter().map(|r| r * &x).collect();
        let xm1x = x.dotc(&m1x).re;
        let xm2x = x.dotc(&m2x).re;
        let xrx = rx.iter().map(|v| x.dotc(v).re).collect();
        ProductCache { x, m1x, m2x, rx, xm1x, xm2x, xrx }
    }

    pub fn numerator_form(&self, h: usize, fm: &FilterMatrices) -> Form {
        form(h, &fm.m1, &self.x, &self.m1x, self.xm1x)
    }

    /// Form of `x^H M2 x` alone, without the signal-independent term.
    pub fn clutter_form(&self, h: usize, fm: &FilterMatrices) -> Form {
        form(h, &fm.m2, &self.x, &self.m2x, self.xm2x)
    }

    pub fn band_form(&self, h: usize, k: usize, covset: &CovarianceSet) -> Form {
        form(h, &covset.whitened_band_grams[k], &self.x, &self.rx[k], self.xrx[k])
    }

    /// Objective at the cached vector for power `power`.
    pub fn chi(&self, power: f64, theta: f64) -> f64 {
        power * self.xm1x / (power * self.xm2x + theta)
    }

    pub fn coordinate_problem(
        &self,
        h: usize,
        power: f64,
        fm: &FilterMatrices,
        covset: &CovarianceSet,
    ) -> Result<CoordinateProblem> {
        if !(power > 0.0) {
            return Err(Error::ZeroPower(power));
        }
        let num = form(h, &fm.m1, &self.x, &self.m1x, self.xm1x);
        let den = form(h, &fm.m2, &self.x, &self.m2x, self.xm2x);
        let d = den.b + fm.theta / power;
        if !(d > den.a.norm()) {
            return Err(Error::NonPositiveDenominator { c_abs: den.a.norm(), d });
        }
        let spectral = covset
            .whitened_band_grams
            .iter()
            .zip(self.rx.iter().zip(&self.xrx))
            .zip(&covset.caps)
            .map(|((r, (rx, &xrx)), &cap)| {
                let f = form(h, r, &self.x, rx, xrx);
                SpectralTerm { z: f.a, bound: cap / power - f.b }
            })
            .collect();
        Ok(CoordinateProblem { a: num.a, b: num.b, c: den.a, d, spectral })
    }

    /// Replace coordinate `h` by `exp(j phase)` and refresh every product.
    pub fn update(&mut self, h: usize, phase: f64, fm: &FilterMatrices, covset: &CovarianceSet) {
        let new = C64::from_polar(1.0, phase);
        let delta = new - self.x[h];
        if delta == C64::new(0.0, 0.0) {
            return;
        }
        fn apply(a: &DMatrix<C64>, h: usize, delta: C64, ax: &mut DVector<C64>, xax: &mut f64) {
            // x'^H A x' = x^H A x + 2 Re(conj(delta) (Ax)_h) + |delta|^2 A_hh, using the old Ax.
            *xax += 2.0 * (delta.conj() * ax[h]).re + delta.norm_sqr() * a[(h, h)].re;
            ax.axpy(delta, &a.column(h), C64::from(1.0));
        }
        apply(&fm.m1, h, delta, &mut self.m1x, &mut self.xm1x);
        apply(&fm.m2, h, delta, &mut self.m2x, &mut self.xm2x);
        for ((r, rx), xrx) in covset.whitened_band_grams.iter().zip(self.rx.iter_mut()).zip(self.xrx.iter_mut()) {
            apply(r, h, delta, rx, xrx);
        }
        self.x[h] = new;
    }
}

/// Coordinate subproblem for index `h` of a state, built from scratch.
pub fn coordinate_problem(
    h: usize,
    state: &TransceiverState,
    scenario: &Scenario,
    covset: &CovarianceSet,
) -> Result<CoordinateProblem> {
    let fm = filter_matrices(&state.filter, scenario, covset);
    ProductCache::new(&state.phases, &fm, covset).coordinate_problem(h, state.power, &fm, covset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Alphabet, ScenarioConfig};

    fn toy() -> (Scenario, CovarianceSet) {
        let s = ScenarioConfig::coexistence(12, 1.0, Alphabet::Continuous).resolve().unwrap();
        let c = CovarianceSet::build(&s).unwrap();
        (s, c)
    }

    fn state(n: usize) -> TransceiverState {
        let phases: Vec<f64> = (0..n).map(|i| 0.3 * ((i * 7 % 5) as f64 - 2.0)).collect();
        let filter = DVector::from_fn(n, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.05 * (i % 3) as f64));
        TransceiverState { phases, power: 0.7, filter }
    }

    #[test]
    fn chi_equals_direct_sinr() {
        let (s, c) = toy();
        let st = state(s.n);
        let code = assemble_code(&st.phases, st.power, &s.reference);
        let direct = sinr(&code, &st.filter, &s, &c).unwrap();
        let re = chi(&st, &s, &c);
        assert!((direct - re).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn clutter_matrix_matches_lag_sum() {
        let (s, _) = toy();
        let st = state(s.n);
        let code = assemble_code(&st.phases, st.power, &s.reference);
        let rd = crate::scenario::build_clutter_covariance(&code, &s);
        let q = quad_form(&rd, &st.filter);
        let direct = clutter_output(&code, &st.filter, &s);
        assert!((q - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn coordinate_problem_reproduces_objective() {
        let (s, c) = toy();
        let st = state(s.n);
        let base = chi(&st, &s, &c);
        for h in 0..s.n {
            let cp = coordinate_problem(h, &st, &s, &c).unwrap();
            assert!((cp.ratio(st.phases[h]) - base).abs() <= 1e-12 * base);
            let mut moved = st.clone();
            moved.phases[h] = -0.9;
            let target = chi(&moved, &s, &c);
            assert!((cp.ratio(-0.9) - target).abs() <= 1e-12 * target);
            // Band energies follow Re(z e^{j phi}) - bound = (energy - cap) / P.
            let code = assemble_code(&moved.phases, moved.power, &s.reference);
            let energies = c.band_energies(&code);
            let e = C64::from_polar(1.0, -0.9);
            for (k, t) in cp.spectral.iter().enumerate() {
                let lhs = (t.z * e).re - t.bound;
                let rhs = (energies[k] - c.caps[k]) / moved.power;
                assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }

    #[test]
    fn cache_updates_match_rebuild() {
        let (s, c) = toy();
        let mut st = state(s.n);
        let fm = filter_matrices(&st.filter, &s, &c);
        let mut cache = ProductCache::new(&st.phases, &fm, &c);
        for (h, phi) in [(0usize, 0.4), (5, -1.0), (11, 0.2), (5, 0.9)] {
            cache.update(h, phi, &fm, &c);
            st.phases[h] = phi;
        }
        let fresh = ProductCache::new(&st.phases, &fm, &c);
        assert!((cache.m2x.clone() - fresh.m2x.clone()).norm() < 1e-12);
        assert!((cache.xm1x - fresh.xm1x).abs() < 1e-12);
        assert!((cache.xrx[1] - fresh.xrx[1]).abs() < 1e-14);
    }
}
