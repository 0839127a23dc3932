//! Scenario description and the covariance matrices derived from it.
//!
//! Frequencies are normalized to the sampling rate (cycles per sample) and all
//! powers are linear. Decibel conversion happens once, in [`config`].

pub mod config;

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::C64;

pub use config::{BandConfig, ClutterConfig, JammerConfig, LfmConfig, LicensedConfig, ReferenceConfig, ScenarioConfig};

/// Tolerance used when checking unit energy and constant modulus of the reference.
pub const REFERENCE_TOL: f64 = 1e-12;

/// A shared frequency band with its energy cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub f1: f64,
    pub f2: f64,
    pub cap: f64,
}

impl Band {
    pub fn new(f1: f64, f2: f64, cap: f64) -> Result<Self> {
        let b = Band { f1, f2, cap };
        b.validate()?;
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.f2 - self.f1
    }

    fn validate(&self) -> Result<()> {
        if !(self.f1.is_finite() && self.f2.is_finite()) || self.f1 < 0.0 || self.f2 > 1.0 || self.f1 >= self.f2 {
            return Err(Error::InvalidScenario(format!(
                "band [{}, {}] must satisfy 0 <= f1 < f2 <= 1",
                self.f1, self.f2
            )));
        }
        if !(self.cap.is_finite() && self.cap > 0.0) {
            return Err(Error::InvalidScenario(format!("band cap {} must be positive", self.cap)));
        }
        Ok(())
    }
}

/// Phase alphabet of the transmitted code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    Continuous,
    /// M-ary phase shift keying, M >= 2.
    Discrete(u32),
}

/// Admissible set for the phase-shift vector induced by the similarity level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseDomain {
    /// Every phase in `[-delta, delta]`, `delta < pi`.
    Continuous { delta: f64 },
    /// Lattice phases `2 pi k / m` for `k` in `lo..=hi`.
    Discrete { m: u32, lo: i64, hi: i64 },
}

/// Half-width of the phase interval for similarity level `epsilon`.
pub fn similarity_delta(epsilon: f64) -> f64 {
    (1.0 - epsilon * epsilon / 2.0).clamp(-1.0, 1.0).acos()
}

/// Phase of lattice point `k` for an `m`-ary alphabet.
pub fn lattice_phase(k: i64, m: u32) -> f64 {
    k as f64 * TAU / m as f64
}

impl PhaseDomain {
    pub fn new(alphabet: Alphabet, epsilon: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&epsilon) {
            return Err(Error::InvalidScenario(format!("epsilon {epsilon} outside [0, 2]")));
        }
        let delta = similarity_delta(epsilon);
        match alphabet {
            Alphabet::Continuous => {
                if epsilon >= 2.0 {
                    return Err(Error::InvalidScenario(
                        "epsilon = 2 is not supported with the continuous alphabet".into(),
                    ));
                }
                Ok(PhaseDomain::Continuous { delta })
            }
            Alphabet::Discrete(m) => {
                if m < 2 {
                    return Err(Error::InvalidScenario(format!("alphabet size {m} must be >= 2")));
                }
                let alpha = -((m as f64 * delta / TAU).floor() as i64);
                let omega = if epsilon < 2.0 { 1 - 2 * alpha } else { m as i64 };
                Ok(PhaseDomain::Discrete { m, lo: alpha, hi: alpha + omega - 1 })
            }
        }
    }

    /// Largest admissible phase magnitude (pi when the whole circle is allowed).
    pub fn delta(&self) -> f64 {
        match *self {
            PhaseDomain::Continuous { delta } => delta,
            PhaseDomain::Discrete { m, lo, hi } => {
                if (hi - lo + 1) as u32 >= m {
                    PI
                } else {
                    lattice_phase(hi, m)
                }
            }
        }
    }

    /// True when the full circle is admissible (discrete, epsilon = 2).
    pub fn is_full_circle(&self) -> bool {
        matches!(*self, PhaseDomain::Discrete { m, lo, hi } if (hi - lo + 1) as u32 >= m)
    }

    pub fn contains(&self, phi: f64, tol: f64) -> bool {
        match *self {
            PhaseDomain::Continuous { delta } => phi.abs() <= delta + tol,
            PhaseDomain::Discrete { m, lo, hi } => {
                let k = (phi * m as f64 / TAU).round() as i64;
                let on_lattice = (lattice_phase(k, m) - phi).abs() <= tol;
                let k = if self.is_full_circle() { wrap_index(k, lo, m) } else { k };
                on_lattice && k >= lo && k <= hi
            }
        }
    }

    /// Nearest admissible phase, used to snap externally supplied phases.
    pub fn project(&self, phi: f64) -> f64 {
        match *self {
            PhaseDomain::Continuous { delta } => phi.clamp(-delta, delta),
            PhaseDomain::Discrete { m, lo, hi } => {
                let mut k = (phi * m as f64 / TAU).round() as i64;
                if self.is_full_circle() {
                    k = wrap_index(k, lo, m);
                }
                lattice_phase(k.clamp(lo, hi), m)
            }
        }
    }
}

/// Map a lattice index onto the representative range `[lo, lo + m - 1]`.
pub fn wrap_index(k: i64, lo: i64, m: u32) -> i64 {
    lo + (k - lo).rem_euclid(m as i64)
}

/// A licensed emitter occupying one of the shared bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LicensedSource {
    pub band: usize,
    pub power: f64,
}

/// A narrowband jammer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jammer {
    pub f: f64,
    pub bw: f64,
    pub power: f64,
}

/// Fully resolved scenario in linear units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub n: usize,
    pub reference: DVector<C64>,
    pub bands: Vec<Band>,
    pub epsilon: f64,
    pub alphabet: Alphabet,
    /// Clutter power per lag `m`, stored at index `m + n - 1`. The zero lag is ignored.
    pub clutter: Vec<f64>,
    pub noise_floor: f64,
    pub licensed: Vec<LicensedSource>,
    pub jammers: Vec<Jammer>,
    pub target_power: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidScenario("code length must be positive".into()));
        }
        if self.reference.len() != n {
            return Err(Error::InvalidScenario(format!(
                "reference has length {}, expected {n}",
                self.reference.len()
            )));
        }
        let energy: f64 = self.reference.iter().map(|x| x.norm_sqr()).sum();
        if (energy - 1.0).abs() > REFERENCE_TOL {
            return Err(Error::InvalidScenario(format!("reference energy {energy} is not 1")));
        }
        let target = 1.0 / (n as f64).sqrt();
        if self.reference.iter().any(|x| (x.norm() - target).abs() > REFERENCE_TOL) {
            return Err(Error::InvalidScenario("reference is not constant modulus".into()));
        }
        for b in &self.bands {
            b.validate()?;
        }
        let domain = PhaseDomain::new(self.alphabet, self.epsilon)?;
        if let PhaseDomain::Discrete { m, .. } = domain {
            let off_lattice = |x: &C64| {
                let k = x.arg() * m as f64 / TAU;
                (k - k.round()).abs() > 1e-9
            };
            if self.reference.iter().any(off_lattice) {
                return Err(Error::InvalidScenario(format!(
                    "reference phases do not lie on the {m}-ary lattice"
                )));
            }
        }
        if self.clutter.len() != 2 * n - 1 {
            return Err(Error::InvalidScenario(format!(
                "clutter profile has {} lags, expected {}",
                self.clutter.len(),
                2 * n - 1
            )));
        }
        if self.clutter.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::InvalidScenario("clutter powers must be finite and non-negative".into()));
        }
        if !(self.noise_floor.is_finite() && self.noise_floor > 0.0) {
            return Err(Error::InvalidScenario("noise floor must be positive".into()));
        }
        for l in &self.licensed {
            if l.band >= self.bands.len() {
                return Err(Error::InvalidScenario(format!("licensed source refers to band {}", l.band)));
            }
            if !(l.power.is_finite() && l.power >= 0.0) {
                return Err(Error::InvalidScenario("licensed power must be non-negative".into()));
            }
        }
        for j in &self.jammers {
            if !(j.bw.is_finite() && j.bw > 0.0 && j.power.is_finite() && j.power >= 0.0 && j.f.is_finite()) {
                return Err(Error::InvalidScenario("jammer needs positive bandwidth and non-negative power".into()));
            }
        }
        if !(self.target_power.is_finite() && self.target_power >= 0.0) {
            return Err(Error::InvalidScenario("target power must be non-negative".into()));
        }
        Ok(())
    }

    pub fn phase_domain(&self) -> Result<PhaseDomain> {
        PhaseDomain::new(self.alphabet, self.epsilon)
    }

    /// Clutter power at lag `m`; zero at lag 0 and outside `|m| < n`.
    pub fn clutter_power(&self, m: isize) -> f64 {
        let n = self.n as isize;
        if m == 0 || m.abs() >= n {
            0.0
        } else {
            self.clutter[(m + n - 1) as usize]
        }
    }

    pub fn caps(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.cap).collect()
    }

    /// Same scenario at a different similarity level.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut s = self.clone();
        s.epsilon = epsilon;
        s.validate()?;
        Ok(s)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Gram matrix of the band `[f1, f2]`: `s^H R s` is the code energy inside the band.
pub fn band_gram(f1: f64, f2: f64, n: usize) -> DMatrix<C64> {
    let width = f2 - f1;
    let centre = PI * (f1 + f2);
    DMatrix::from_fn(n, n, |i, l| {
        let lag = i as f64 - l as f64;
        C64::from_polar(width * sinc(PI * width * lag), centre * lag)
    })
}

pub fn build_band_gram(band: &Band, n: usize) -> DMatrix<C64> {
    band_gram(band.f1, band.f2, n)
}

/// Jammer covariance, normalized to unit diagonal.
pub fn jammer_gram(jammer: &Jammer, n: usize) -> DMatrix<C64> {
    band_gram(jammer.f - jammer.bw / 2.0, jammer.f + jammer.bw / 2.0, n) / C64::from(jammer.bw)
}

/// Signal-independent interference covariance: noise, licensed emitters and jammers.
pub fn build_r_ind(scenario: &Scenario) -> DMatrix<C64> {
    let n = scenario.n;
    let mut r = DMatrix::<C64>::identity(n, n) * C64::from(scenario.noise_floor);
    for l in &scenario.licensed {
        let band = &scenario.bands[l.band];
        r += build_band_gram(band, n) * C64::from(l.power / band.width());
    }
    for j in &scenario.jammers {
        r += jammer_gram(j, n) * C64::from(j.power);
    }
    r
}

/// Signal-dependent clutter covariance `sum_m beta_m J_m s s^H J_m^H`.
pub fn build_clutter_covariance(code: &DVector<C64>, scenario: &Scenario) -> DMatrix<C64> {
    lag_gram(code, |m| scenario.clutter_power(m))
}

/// Hermitian matrix with entries `sum_m beta(m) v_{i-m} conj(v_{l-m})`, indices outside `0..n` dropped.
pub fn lag_gram(v: &DVector<C64>, beta: impl Fn(isize) -> f64) -> DMatrix<C64> {
    let n = v.len();
    let ni = n as isize;
    let weights: Vec<f64> = (-(ni - 1)..ni).map(&beta).collect();
    let mut r = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for l in i..n {
            let mut acc = C64::new(0.0, 0.0);
            // Need i - m >= 0 and l - m <= n - 1.
            for m in (l as isize - (ni - 1))..=(i as isize) {
                let b = weights[(m + ni - 1) as usize];
                if b != 0.0 {
                    acc += v[(i as isize - m) as usize] * v[(l as isize - m) as usize].conj() * b;
                }
            }
            r[(i, l)] = acc;
            r[(l, i)] = acc.conj();
        }
    }
    r
}

/// Whitened matrix `diag(s0)^H A diag(s0)`.
pub fn whiten(a: &DMatrix<C64>, s0: &DVector<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, l| s0[i].conj() * a[(i, l)] * s0[l])
}

/// Matrices shared by every stage of the design, built once per scenario.
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    pub band_grams: Vec<DMatrix<C64>>,
    pub whitened_band_grams: Vec<DMatrix<C64>>,
    pub caps: Vec<f64>,
    pub r_ind: DMatrix<C64>,
    /// Sum of the band Gram matrices, used by the initialization penalty.
    pub penalty_gram: DMatrix<C64>,
    pub penalty_gram_whitened: DMatrix<C64>,
}

impl CovarianceSet {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.n;
        let band_grams: Vec<_> = scenario.bands.iter().map(|b| build_band_gram(b, n)).collect();
        let whitened_band_grams: Vec<_> = band_grams.iter().map(|r| whiten(r, &scenario.reference)).collect();
        let mut penalty_gram = DMatrix::<C64>::zeros(n, n);
        for r in &band_grams {
            penalty_gram += r;
        }
        let penalty_gram_whitened = whiten(&penalty_gram, &scenario.reference);
        Ok(CovarianceSet {
            band_grams,
            whitened_band_grams,
            caps: scenario.caps(),
            r_ind: build_r_ind(scenario),
            penalty_gram,
            penalty_gram_whitened,
        })
    }

    pub fn num_bands(&self) -> usize {
        self.caps.len()
    }

    /// Band energies `s^H R_k s` of a code.
    pub fn band_energies(&self, code: &DVector<C64>) -> Vec<f64> {
        self.band_grams.iter().map(|r| crate::linalg::quad_form(r, code)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_endpoints() {
        assert_eq!(similarity_delta(0.0), 0.0);
        assert!((similarity_delta(2.0) - PI).abs() < 1e-15);
        assert!((similarity_delta(2f64.sqrt()) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn discrete_domain_counts() {
        // eps = 1 gives delta = pi/3; for M = 64 this admits 2*floor(64/6)+1 = 21 points.
        let d = PhaseDomain::new(Alphabet::Discrete(64), 1.0).unwrap();
        assert_eq!(d, PhaseDomain::Discrete { m: 64, lo: -10, hi: 10 });
        let full = PhaseDomain::new(Alphabet::Discrete(8), 2.0).unwrap();
        assert_eq!(full, PhaseDomain::Discrete { m: 8, lo: -4, hi: 3 });
        assert!(full.is_full_circle());
        // Binary alphabet below eps = 2 only admits the reference phase.
        let bin = PhaseDomain::new(Alphabet::Discrete(2), 1.9).unwrap();
        assert_eq!(bin, PhaseDomain::Discrete { m: 2, lo: 0, hi: 0 });
    }

    #[test]
    fn continuous_rejects_full_circle() {
        assert!(PhaseDomain::new(Alphabet::Continuous, 2.0).is_err());
        assert!(PhaseDomain::new(Alphabet::Continuous, 2.5).is_err());
    }

    #[test]
    fn band_gram_full_band_is_identity() {
        let r = band_gram(0.0, 1.0, 6);
        for i in 0..6 {
            for l in 0..6 {
                let expect = if i == l { 1.0 } else { 0.0 };
                assert!((r[(i, l)] - C64::from(expect)).norm() < 1e-12);
            }
        }
    }
}
