use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use flowtopo::experiments::Translation;
use flowtopo::field::is_prime;
use flowtopo::model_synth::{Layout, Shape};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexKind {
    Vr,
    Witness,
}

/// Flat experiment configuration. Every key is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every sampler derives from it.
    pub seed: u64,
    pub out_dir: String,

    // model clouds (`synth`, and `ph` without `cloud_csv`)
    pub shape: Shape,
    pub points: usize,
    pub noise_sigma: f64,
    pub layout: Layout,

    // synthetic flow patches (`pipeline`/`zigzag` without real input)
    pub patches: usize,
    pub translation: Translation,
    pub clutter_fraction: f64,
    pub flow_noise: f64,
    pub flow_noise_spread: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    pub drift_sigma: f64,
    pub clutter_sigma: f64,

    // real flow input
    /// Directory of `.flo` files.
    pub input_dir: Option<String>,
    /// Patch CSV (18 columns); takes precedence over `input_dir`.
    pub patch_csv: Option<String>,
    pub ingest_patches: usize,
    /// Flow components above this magnitude mark invalid pixels.
    pub sentinel_cutoff: f64,

    // pipeline
    pub q: f64,
    pub k: usize,
    pub p: f64,
    pub bins: usize,
    pub halfwidth: f64,
    pub subsample_cap: usize,
    pub landmarks: usize,
    pub maxmin_start: usize,

    // persistence
    pub complex: ComplexKind,
    /// Cloud CSV (`id,x0,…`) for `ph`.
    pub cloud_csv: Option<String>,
    /// Largest filtration scale; cloud diameter (VR) or a multiple of the
    /// landmark cover radius (witness) when absent.
    pub r_max: Option<f64>,
    /// Filtration dimension; signatures cover the dimensions below it.
    pub max_dim: usize,
    pub primes: Vec<u64>,
    pub nu: usize,
    pub witness_landmarks: usize,
    pub r_max_factor: f64,
    /// VR clouds larger than this are thinned by maxmin first.
    pub vr_points: usize,
    pub persistence_ratio: f64,

    // zigzag
    /// Fixed scale; auto-selected from the bins when absent.
    pub zigzag_scale: Option<f64>,
    pub zigzag_prime: u64,

    // verify
    pub verify_witnesses: usize,
    pub identification_grid: usize,
    pub oracle_clouds: usize,
    pub oracle_max_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: "flowtopo-out".into(),
            shape: Shape::FlowTorus,
            points: 1500,
            noise_sigma: 0.05,
            layout: Layout::Random,
            patches: 240_000,
            translation: Translation::AllDirections,
            clutter_fraction: 0.5,
            flow_noise: 0.015,
            flow_noise_spread: 0.5,
            gain_min: 0.5,
            gain_max: 2.0,
            drift_sigma: 1.0,
            clutter_sigma: 0.05,
            input_dir: None,
            patch_csv: None,
            ingest_patches: 50_000,
            sentinel_cutoff: 1e9,
            q: 0.2,
            k: 300,
            p: 50.0,
            bins: 12,
            halfwidth: PI / 12.0,
            subsample_cap: 50_000,
            landmarks: 50,
            maxmin_start: 0,
            complex: ComplexKind::Witness,
            cloud_csv: None,
            r_max: None,
            max_dim: 3,
            primes: vec![2, 3],
            nu: 1,
            witness_landmarks: 150,
            r_max_factor: 1.2,
            vr_points: 200,
            persistence_ratio: 3.0,
            zigzag_scale: None,
            zigzag_prime: 2,
            verify_witnesses: 10_000,
            identification_grid: 72,
            oracle_clouds: 200,
            oracle_max_points: 8,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Applies `key=value` overrides. Values are read as JSON, falling back to
    /// a bare string.
    pub fn with_overrides(self, overrides: &[String]) -> Result<Self, ConfigError> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut map = match serde_json::to_value(&self).expect("config serializes") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
            let key = key.trim();
            if !map.contains_key(key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            map.insert(key.to_string(), value);
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn bad(key: &'static str, reason: impl Into<String>) -> Result<(), ConfigError> {
            Err(ConfigError::Invalid { key, reason: reason.into() })
        }
        let positive = [
            ("points", self.points),
            ("patches", self.patches),
            ("ingest_patches", self.ingest_patches),
            ("k", self.k),
            ("bins", self.bins),
            ("subsample_cap", self.subsample_cap),
            ("landmarks", self.landmarks),
            ("witness_landmarks", self.witness_landmarks),
            ("vr_points", self.vr_points),
            ("verify_witnesses", self.verify_witnesses),
            ("identification_grid", self.identification_grid),
            ("oracle_clouds", self.oracle_clouds),
            ("oracle_max_points", self.oracle_max_points),
        ];
        for (key, v) in positive {
            if v == 0 {
                return bad(key, "must be positive");
            }
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return bad("q", format!("{} is outside (0, 1]", self.q));
        }
        if !(self.p > 0.0 && self.p <= 100.0) {
            return bad("p", format!("{} is outside (0, 100]", self.p));
        }
        if !(0.0..=1.0).contains(&self.clutter_fraction) {
            return bad("clutter_fraction", "must lie in [0, 1]");
        }
        if !(self.halfwidth > 0.0 && self.halfwidth <= PI / 2.0) {
            return bad("halfwidth", "must lie in (0, π/2]");
        }
        if !(self.gain_min > 0.0 && self.gain_min <= self.gain_max) {
            return bad("gain_min", "need 0 < gain_min <= gain_max");
        }
        for (key, v) in [
            ("noise_sigma", self.noise_sigma),
            ("flow_noise", self.flow_noise),
            ("flow_noise_spread", self.flow_noise_spread),
            ("drift_sigma", self.drift_sigma),
            ("clutter_sigma", self.clutter_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, "must be finite and non-negative");
            }
        }
        if !(self.sentinel_cutoff > 0.0) {
            return bad("sentinel_cutoff", "must be positive");
        }
        if !(self.persistence_ratio > 1.0) {
            return bad("persistence_ratio", "must exceed 1");
        }
        if !(self.r_max_factor > 0.0) {
            return bad("r_max_factor", "must be positive");
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return bad("r_max", "must be positive and finite");
            }
        }
        if let Some(r) = self.zigzag_scale {
            if !(r > 0.0 && r.is_finite()) {
                return bad("zigzag_scale", "must be positive and finite");
            }
        }
        if self.primes.is_empty() {
            return bad("primes", "need at least one prime");
        }
        if let Some(&q) = self.primes.iter().find(|&&q| !is_prime(q) || q > u32::MAX as u64) {
            return bad("primes", format!("{q} is not a usable prime"));
        }
        if !is_prime(self.zigzag_prime) {
            return bad("zigzag_prime", format!("{} is not prime", self.zigzag_prime));
        }
        if !(1..=3).contains(&self.max_dim) {
            return bad("max_dim", "must lie in 1..=3");
        }
        if self.nu > self.witness_landmarks {
            return bad("nu", "cannot exceed witness_landmarks");
        }
        if self.oracle_max_points < 2 || self.oracle_max_points > 10 {
            return bad("oracle_max_points", "must lie in 2..=10");
        }
        Ok(())
    }
}
