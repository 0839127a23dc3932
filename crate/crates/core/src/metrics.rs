//! Figures of merit of a designed code and filter.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rustfft::FftPlanner;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::Result;
use crate::objective::{cross_correlation, sinr};
use crate::scenario::{CovarianceSet, Scenario};
use crate::C64;

/// Floor applied to every dB quantity.
pub const DB_FLOOR: f64 = -300.0;

pub fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Energy spectral density `|sum_n s_n e^{-j 2 pi f n}|^2` on a uniform grid over `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub esd: Vec<f64>,
}

pub fn esd(code: &DVector<C64>, grid: usize) -> Spectrum {
    let len = grid.max(code.len()).max(1);
    let mut buf = vec![C64::new(0.0, 0.0); len];
    buf[..code.len()].copy_from_slice(code.as_slice());
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    Spectrum {
        freqs: (0..len).map(|k| k as f64 / len as f64).collect(),
        esd: buf.iter().map(|x| x.norm_sqr()).collect(),
    }
}

/// ESD at a single frequency.
pub fn esd_at(code: &DVector<C64>, f: f64) -> f64 {
    code.iter()
        .enumerate()
        .map(|(n, s)| s * C64::from_polar(1.0, -TAU * f * n as f64))
        .sum::<C64>()
        .norm_sqr()
}

/// Energy in `[f1, f2]` by composite Simpson quadrature of the ESD.
pub fn band_energy_quadrature(code: &DVector<C64>, f1: f64, f2: f64, intervals: usize) -> f64 {
    let m = (intervals.max(2) + 1) & !1;
    let h = (f2 - f1) / m as f64;
    let mut acc = esd_at(code, f1) + esd_at(code, f2);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * esd_at(code, f1 + h * k as f64);
    }
    acc * h / 3.0
}

/// Cross-correlation `r(m) = w^H J_m s` between filter and code.
#[derive(Debug, Clone, PartialEq)]
pub struct CcfMetrics {
    pub lags: Vec<isize>,
    /// `|r(m)|^2 / |r(0)|^2` in dB.
    pub mag_db: Vec<f64>,
    pub psl_db: f64,
    pub isl_db: f64,
}

pub fn ccf_metrics(code: &DVector<C64>, filter: &DVector<C64>) -> CcfMetrics {
    let n = code.len() as isize;
    let lags: Vec<isize> = (-(n - 1)..n).collect();
    let r: Vec<f64> = lags.iter().map(|&m| cross_correlation(filter, code, m).norm_sqr()).collect();
    let peak = r[(n - 1) as usize];
    let side = lags.iter().zip(&r).filter(|(m, _)| **m != 0).map(|(_, v)| *v);
    let (max_side, sum_side) = side.fold((0.0f64, 0.0), |(mx, sm), v| (mx.max(v), sm + v));
    let rel = |v: f64| if peak > 0.0 { to_db(v / peak) } else { DB_FLOOR };
    CcfMetrics {
        mag_db: r.iter().map(|&v| rel(v)).collect(),
        lags,
        psl_db: rel(max_side),
        isl_db: rel(sum_side),
    }
}

/// Peak-to-average power ratio `n max|s_i|^2 / ||s||^2`.
pub fn par(code: &DVector<C64>) -> f64 {
    let peak = code.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    code.len() as f64 * peak / code.norm_squared()
}

/// First-order Marcum Q function, as a Poisson mixture of regularized incomplete gamma
/// functions. Values above one half come from the complementary mixture so that the
/// result stays accurate and monotone close to 1.
pub fn marcum_q1(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 1.0;
    }
    let lambda = a * a / 2.0;
    let y = b * b / 2.0;
    if lambda == 0.0 {
        return (-y).exp();
    }
    // Sum outward from the Poisson mode until the weights are negligible.
    let mode = lambda.floor();
    let log_w = |j: f64| -lambda + j * lambda.ln() - ln_gamma(j + 1.0);
    let (mut upper, mut lower) = (0.0, 0.0);
    let mut add = |j: f64| {
        let w = log_w(j).exp();
        upper += w * gamma_ur(j + 1.0, y);
        lower += w * gamma_lr(j + 1.0, y);
    };
    add(mode);
    let mut j = mode + 1.0;
    while log_w(j) > -745.0 && j < mode + 100.0 + 40.0 * lambda.sqrt() {
        add(j);
        j += 1.0;
    }
    let mut j = mode - 1.0;
    while j >= 0.0 && log_w(j) > -745.0 {
        add(j);
        j -= 1.0;
    }
    if upper <= 0.5 {
        upper.clamp(0.0, 1.0)
    } else {
        (1.0 - lower).clamp(0.0, 1.0)
    }
}

/// Detection probability of a non-fluctuating target with output SNR `snr`
/// under a square-law detector at false-alarm rate `pfa`.
pub fn detection_probability(snr: f64, pfa: f64) -> f64 {
    marcum_q1((2.0 * snr.max(0.0)).sqrt(), (-2.0 * pfa.ln()).sqrt())
}

/// `(target power in dB, Pd)` pairs for a fixed output SINR.
pub fn pd_curve(sinr: f64, pfa: f64, target_db: &[f64]) -> Vec<(f64, f64)> {
    target_db
        .iter()
        .map(|&db| (db, detection_probability(10f64.powf(db / 10.0) * sinr, pfa)))
        .collect()
}

/// Summary of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBundle {
    pub sinr: f64,
    pub sinr_db: f64,
    pub energy: f64,
    pub par: f64,
    pub psl_db: f64,
    pub isl_db: f64,
    pub band_energies: Vec<f64>,
    pub band_energies_quadrature: Vec<f64>,
    pub caps: Vec<f64>,
}

pub fn metric_bundle(
    code: &DVector<C64>,
    filter: &DVector<C64>,
    scenario: &Scenario,
    covset: &CovarianceSet,
) -> Result<MetricBundle> {
    let s = sinr(code, filter, scenario, covset)?;
    let ccf = ccf_metrics(code, filter);
    Ok(MetricBundle {
        sinr: s,
        sinr_db: to_db(s),
        energy: code.norm_squared(),
        par: par(code),
        psl_db: ccf.psl_db,
        isl_db: ccf.isl_db,
        band_energies: covset.band_energies(code),
        band_energies_quadrature: scenario
            .bands
            .iter()
            .map(|b| band_energy_quadrature(code, b.f1, b.f2, 4000))
            .collect(),
        caps: covset.caps.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccf_of_two_tap_code() {
        let h = 0.5f64.sqrt();
        let s = DVector::from_vec(vec![C64::from(h), C64::from(h)]);
        let m = ccf_metrics(&s, &s);
        assert!((m.psl_db - to_db(0.25)).abs() < 1e-12);
        assert!((m.isl_db - to_db(0.5)).abs() < 1e-12);
    }

    #[test]
    fn esd_integrates_to_energy() {
        let s = DVector::from_fn(7, |i, _| C64::from_polar(0.3, 0.7 * (i * i) as f64));
        let sp = esd(&s, 64);
        let mean = sp.esd.iter().sum::<f64>() / 64.0;
        assert!((mean - s.norm_squared()).abs() < 1e-12);
        assert!((esd_at(&s, sp.freqs[5]) - sp.esd[5]).abs() < 1e-12);
    }

    #[test]
    fn marcum_limits() {
        assert!((marcum_q1(0.0, 1.3) - (-1.3f64 * 1.3 / 2.0).exp()).abs() < 1e-15);
        assert!((detection_probability(0.0, 1e-4) - 1e-4).abs() < 1e-16);
        assert!(detection_probability(200.0, 1e-6) > 0.999_999);
        // Q1(a, 0) = 1 and large-a limit.
        assert_eq!(marcum_q1(3.0, 0.0), 1.0);
        assert!(marcum_q1(40.0, 1.0) > 1.0 - 1e-12);
    }
}
