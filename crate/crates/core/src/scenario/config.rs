//! JSON scenario description. Decibel values are converted to linear units in
//! [`ScenarioConfig::resolve`] and nowhere else.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Alphabet, Band, Jammer, LicensedSource, Scenario};
use crate::error::{Error, Result};
use crate::C64;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Default LFM chirp rate in Hz/s.
pub const LFM_CHIRP_RATE: f64 = 1950e3 / 100e-6;
/// Default LFM pulse duration in seconds.
pub const LFM_DURATION: f64 = 100e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfmConfig {
    pub chirp_rate: f64,
    pub duration: f64,
}

impl Default for LfmConfig {
    fn default() -> Self {
        LfmConfig { chirp_rate: LFM_CHIRP_RATE, duration: LFM_DURATION }
    }
}

impl LfmConfig {
    /// Chirp that sweeps the same normalized bandwidth as the default one with `n` samples.
    pub fn scaled(n: usize) -> Self {
        let duration = LFM_DURATION * n as f64 / 200.0;
        LfmConfig { chirp_rate: 1950e3 / duration, duration }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceConfig {
    Lfm,
    Values(Vec<[f64; 2]>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ReferenceRepr {
    Name(String),
    Values { values: Vec<[f64; 2]> },
}

impl Serialize for ReferenceConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ReferenceConfig::Lfm => ReferenceRepr::Name("lfm".into()).serialize(s),
            ReferenceConfig::Values(v) => ReferenceRepr::Values { values: v.clone() }.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ReferenceConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ReferenceRepr::deserialize(d)? {
            ReferenceRepr::Name(n) if n.eq_ignore_ascii_case("lfm") => Ok(ReferenceConfig::Lfm),
            ReferenceRepr::Name(n) => Err(serde::de::Error::custom(format!("unknown reference '{n}'"))),
            ReferenceRepr::Values { values } => Ok(ReferenceConfig::Values(values)),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphabetRepr {
    Size(u32),
    Name(String),
}

pub fn parse_alphabet(s: &str) -> Result<Alphabet> {
    if s.eq_ignore_ascii_case("continuous") {
        return Ok(Alphabet::Continuous);
    }
    s.parse::<u32>()
        .map(Alphabet::Discrete)
        .map_err(|_| Error::InvalidScenario(format!("alphabet '{s}' is neither 'continuous' nor an integer")))
}

pub fn alphabet_label(a: Alphabet) -> String {
    match a {
        Alphabet::Continuous => "continuous".into(),
        Alphabet::Discrete(m) => m.to_string(),
    }
}

mod alphabet_serde {
    use super::*;

    pub fn serialize<S: Serializer>(a: &Alphabet, s: S) -> std::result::Result<S::Ok, S::Error> {
        match a {
            Alphabet::Continuous => AlphabetRepr::Name("continuous".into()).serialize(s),
            Alphabet::Discrete(m) => AlphabetRepr::Size(*m).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Alphabet, D::Error> {
        match AlphabetRepr::deserialize(d)? {
            AlphabetRepr::Size(m) => Ok(Alphabet::Discrete(m)),
            AlphabetRepr::Name(n) => parse_alphabet(&n).map_err(serde::de::Error::custom),
        }
    }
}

/// Clutter profile: one level for every non-zero lag, or one value per lag `-(n-1)..=n-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClutterConfig {
    Uniform(f64),
    PerLag(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub f1: f64,
    pub f2: f64,
    pub cap_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LicensedConfig {
    pub band: usize,
    pub power_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerConfig {
    pub f: f64,
    pub bw: f64,
    pub power_db: f64,
}

fn default_noise_db() -> f64 {
    0.0
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub reference: ReferenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lfm: Option<LfmConfig>,
    #[serde(default)]
    pub bands: Vec<BandConfig>,
    pub epsilon: f64,
    #[serde(with = "alphabet_serde")]
    pub alphabet: Alphabet,
    /// Absent means no clutter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clutter_db: Option<ClutterConfig>,
    #[serde(default = "default_noise_db")]
    pub noise_db: f64,
    #[serde(default)]
    pub licensed: Vec<LicensedConfig>,
    #[serde(default)]
    pub jammers: Vec<JammerConfig>,
    #[serde(default)]
    pub target_power_db: f64,
}

/// Unit-energy LFM reference `exp(j pi K (i Ts)^2) / sqrt(n)`, `i = 0..n-1`, `Ts = duration / n`.
pub fn lfm_reference(n: usize, lfm: &LfmConfig) -> DVector<C64> {
    let ts = lfm.duration / n as f64;
    let amp = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |i, _| {
        let t = i as f64 * ts;
        C64::from_polar(amp, (PI * lfm.chirp_rate * t * t).rem_euclid(TAU))
    })
}

/// Round every phase of a constant-modulus code to the nearest `m`-ary lattice point in `[-pi, pi)`.
pub fn quantize_reference(code: &DVector<C64>, m: u32) -> DVector<C64> {
    let amp = 1.0 / (code.len() as f64).sqrt();
    let lo = -(m as i64 / 2);
    code.map(|x| {
        let k = (x.arg() * m as f64 / TAU).round() as i64;
        let k = super::wrap_index(k, lo, m);
        C64::from_polar(amp, super::lattice_phase(k, m))
    })
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidScenario("n must be positive".into()));
        }
        let reference = match &self.reference {
            ReferenceConfig::Lfm => {
                let s0 = lfm_reference(n, &self.lfm.unwrap_or_default());
                match self.alphabet {
                    Alphabet::Discrete(m) if m >= 2 => quantize_reference(&s0, m),
                    _ => s0,
                }
            }
            ReferenceConfig::Values(v) => DVector::from_iterator(v.len(), v.iter().map(|p| C64::new(p[0], p[1]))),
        };
        let bands = self
            .bands
            .iter()
            .map(|b| Band::new(b.f1, b.f2, db_to_linear(b.cap_db)))
            .collect::<Result<Vec<_>>>()?;
        let clutter = match &self.clutter_db {
            None => vec![0.0; 2 * n - 1],
            Some(ClutterConfig::Uniform(db)) => {
                let mut c = vec![db_to_linear(*db); 2 * n - 1];
                c[n - 1] = 0.0;
                c
            }
            Some(ClutterConfig::PerLag(v)) => v.iter().map(|db| db_to_linear(*db)).collect(),
        };
        let scenario = Scenario {
            n,
            reference,
            bands,
            epsilon: self.epsilon,
            alphabet: self.alphabet,
            clutter,
            noise_floor: db_to_linear(self.noise_db),
            licensed: self
                .licensed
                .iter()
                .map(|l| LicensedSource { band: l.band, power: db_to_linear(l.power_db) })
                .collect(),
            jammers: self
                .jammers
                .iter()
                .map(|j| Jammer { f: j.f, bw: j.bw, power: db_to_linear(j.power_db) })
                .collect(),
            target_power: db_to_linear(self.target_power_db),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Coexistence scenario with two shared bands, two licensed emitters and two jammers.
    /// For `n != 200` the chirp is rescaled so that it sweeps the same normalized band.
    pub fn coexistence(n: usize, epsilon: f64, alphabet: Alphabet) -> Self {
        ScenarioConfig {
            n,
            reference: ReferenceConfig::Lfm,
            lfm: Some(LfmConfig::scaled(n)),
            bands: vec![
                BandConfig { f1: 0.2112, f2: 0.2534, cap_db: -30.0 },
                BandConfig { f1: 0.5856, f2: 0.6112, cap_db: -35.0 },
            ],
            epsilon,
            alphabet,
            clutter_db: Some(ClutterConfig::Uniform(8.0)),
            noise_db: 0.0,
            licensed: vec![
                LicensedConfig { band: 0, power_db: 10.0 },
                LicensedConfig { band: 1, power_db: 10.0 },
            ],
            jammers: vec![
                JammerConfig { f: 0.823, bw: 0.001, power_db: 35.0 },
                JammerConfig { f: 0.925, bw: 0.001, power_db: 40.0 },
            ],
            target_power_db: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_json() {
        let text = r#"{"n": 4, "reference": "lfm", "epsilon": 1.0, "alphabet": "continuous",
            "bands": [{"f1": 0.1, "f2": 0.2, "cap_db": -20}]}"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        let s = cfg.resolve().unwrap();
        assert_eq!(s.n, 4);
        assert!((s.bands[0].cap - 0.01).abs() < 1e-15);
        assert!(s.clutter.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn discrete_lfm_is_quantized() {
        let cfg = ScenarioConfig::coexistence(32, 1.0, Alphabet::Discrete(8));
        let s = cfg.resolve().unwrap();
        for x in s.reference.iter() {
            let k = x.arg() * 8.0 / TAU;
            assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn explicit_reference_roundtrip() {
        let h = 0.5f64.sqrt();
        let text = format!(
            r#"{{"n": 2, "reference": {{"values": [[{h}, 0], [0, {h}]]}}, "epsilon": 0.5, "alphabet": 4}}"#
        );
        let cfg = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(cfg.alphabet, Alphabet::Discrete(4));
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&json).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad_eps = r#"{"n": 4, "reference": "lfm", "epsilon": 2.0, "alphabet": "continuous"}"#;
        assert!(ScenarioConfig::from_json(bad_eps).unwrap().resolve().is_err());
        let bad_band = r#"{"n": 4, "reference": "lfm", "epsilon": 1.0, "alphabet": "continuous",
            "bands": [{"f1": 0.3, "f2": 0.2, "cap_db": -20}]}"#;
        assert!(ScenarioConfig::from_json(bad_band).unwrap().resolve().is_err());
        let off_lattice = r#"{"n": 1, "reference": {"values": [[0.6, 0.8]]}, "epsilon": 1.0, "alphabet": 4}"#;
        assert!(ScenarioConfig::from_json(off_lattice).unwrap().resolve().is_err());
        assert!(ScenarioConfig::from_json(r#"{"n": 4}"#).is_err());
    }
}
