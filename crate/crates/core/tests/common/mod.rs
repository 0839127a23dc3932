#![allow(dead_code)]

use nalgebra::DVector;
use rand::Rng;
use specoex::linalg::quad_form;
use specoex::scenario::{
    band_gram, Alphabet, BandConfig, ClutterConfig, CovarianceSet, JammerConfig, LfmConfig, LicensedConfig,
    PhaseDomain, ReferenceConfig, Scenario, ScenarioConfig,
};

/// Random scenario with 1 to 3 bands whose caps sit below the reference's own band energy,
/// so the caps bind at full power.
pub fn random_config(rng: &mut impl Rng, n: usize, alphabet: Alphabet) -> ScenarioConfig {
    let nb = rng.gen_range(1..=3);
    let mut bands = Vec::with_capacity(nb);
    for _ in 0..nb {
        let f1 = rng.gen_range(0.02..0.9);
        let f2 = (f1 + rng.gen_range(0.01..0.08f64)).min(0.99);
        bands.push(BandConfig { f1, f2, cap_db: 0.0 });
    }
    let base = LfmConfig::scaled(n);
    let lfm = LfmConfig { chirp_rate: base.chirp_rate * rng.gen_range(0.4..1.0), duration: base.duration };
    let jammers = (0..rng.gen_range(0..=2))
        .map(|_| JammerConfig { f: rng.gen_range(0.0..1.0), bw: rng.gen_range(0.001..0.01), power_db: rng.gen_range(20.0..40.0) })
        .collect();
    let mut cfg = ScenarioConfig {
        n,
        reference: ReferenceConfig::Lfm,
        lfm: Some(lfm),
        licensed: (0..nb).map(|k| LicensedConfig { band: k, power_db: rng.gen_range(0.0..15.0) }).collect(),
        bands,
        epsilon: rng.gen_range(0.3..1.9),
        alphabet,
        clutter_db: Some(ClutterConfig::Uniform(rng.gen_range(-5.0..10.0))),
        noise_db: 0.0,
        jammers,
        target_power_db: 0.0,
    };
    let s = cfg.resolve().expect("draft scenario");
    for b in cfg.bands.iter_mut() {
        let e = quad_form(&band_gram(b.f1, b.f2, n), &s.reference);
        b.cap_db = 10.0 * (e * rng.gen_range(0.02..0.6)).log10();
    }
    cfg
}

pub fn random_scenario(rng: &mut impl Rng, n: usize, alphabet: Alphabet) -> (Scenario, CovarianceSet) {
    let s = random_config(rng, n, alphabet).resolve().expect("random scenario");
    let c = CovarianceSet::build(&s).expect("covariances");
    (s, c)
}

/// Uniformly drawn admissible phase.
pub fn random_phase(rng: &mut impl Rng, domain: &PhaseDomain) -> f64 {
    match *domain {
        PhaseDomain::Continuous { delta } => {
            if delta > 0.0 {
                rng.gen_range(-delta..=delta)
            } else {
                0.0
            }
        }
        PhaseDomain::Discrete { m, lo, hi } => specoex::scenario::lattice_phase(rng.gen_range(lo..=hi), m),
    }
}

pub fn random_phases(rng: &mut impl Rng, n: usize, domain: &PhaseDomain) -> Vec<f64> {
    (0..n).map(|_| random_phase(rng, domain)).collect()
}

pub fn random_alphabet(rng: &mut impl Rng) -> Alphabet {
    match rng.gen_range(0..3) {
        0 => Alphabet::Continuous,
        1 => Alphabet::Discrete(64),
        _ => Alphabet::Discrete([4, 8, 16][rng.gen_range(0..3)]),
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn cnoise(rng: &mut impl Rng, n: usize) -> DVector<specoex::C64> {
    use rand_distr::{Distribution, StandardNormal};
    DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        specoex::C64::new(re, im)
    })
}
