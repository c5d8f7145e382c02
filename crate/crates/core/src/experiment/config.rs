//! Experiment protocol parameters and their TOML file format.
//!
//! A config file names a `preset` and overrides any subset of its fields:
//!
//! ```toml
//! schema_version = 1
//! preset = "desk"
//! variants = ["aware", "unaware"]
//! cnr_db = 40.0
//!
//! [scenario]
//! ris_elements = 36
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ClusterConfig;
use crate::detector::ClutterConfig;
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Absolute `δ²` (linear) corresponding to 0 dB on the RCS axis is
/// `10^(rcs_reference_db/10)`. The value anchors the optimized aware curve of
/// the full-size deployment at CNR 20 dB.
pub const DEFAULT_RCS_REFERENCE_DB: f64 = 117.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub clusters: ClusterConfig,
    pub clutter: ClutterConfig,
    /// RCS variance grid in dB relative to `rcs_reference_db`.
    pub rcs_grid_db: Vec<f64>,
    pub rcs_reference_db: f64,
    pub cnr_db: f64,
    pub variants: Vec<String>,
    pub realizations: usize,
    /// Null and target-present trials per grid point and realization.
    pub trials: usize,
    pub pfa: f64,
    pub seed: u64,
    /// Redraws allowed per realization when the SINR targets are infeasible.
    pub max_resamples: usize,
}

fn default_grid() -> Vec<f64> {
    (0..=12).map(|i| -40.0 + 5.0 * i as f64).collect()
}

impl ExperimentConfig {
    /// Full-size protocol: 10 realizations, 1000τ trials, pfa 10⁻⁴.
    pub fn paper() -> Self {
        let scenario = ScenarioConfig::paper();
        Self {
            schema_version: SCHEMA_VERSION,
            trials: 1000 * scenario.slots,
            scenario,
            clusters: ClusterConfig::default(),
            clutter: ClutterConfig::default(),
            rcs_grid_db: default_grid(),
            rcs_reference_db: DEFAULT_RCS_REFERENCE_DB,
            cnr_db: 20.0,
            variants: vec!["aware".into()],
            realizations: 10,
            pfa: 1e-4,
            seed: 1,
            max_resamples: 20,
        }
    }

    /// Small arrays and few trials for quick runs.
    pub fn desk() -> Self {
        Self { scenario: ScenarioConfig::desk(), realizations: 3, trials: 200, pfa: 1e-2, ..Self::paper() }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::paper()),
            "desk" => Ok(Self::desk()),
            other => Err(Error::InvalidConfig(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }

    /// Parses a config file body; fields not given keep the preset's values.
    pub fn from_toml_str(text: &str, preset_override: Option<&str>) -> Result<Self> {
        let mut raw: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let preset = raw.remove("preset").map(|v| v.as_str().map(str::to_owned));
        let preset = match (preset_override, preset) {
            (Some(p), _) => p.to_owned(),
            (None, Some(Some(p))) => p,
            (None, Some(None)) => return Err(Error::Parse("`preset` must be a string".into())),
            (None, None) => "desk".to_owned(),
        };
        match raw.get("schema_version").map(|v| v.as_integer()) {
            Some(Some(v)) if v == SCHEMA_VERSION as i64 => {}
            Some(_) => return Err(Error::Parse(format!("unsupported schema_version (expected {SCHEMA_VERSION})"))),
            None => return Err(Error::Parse("missing schema_version".into())),
        }
        let base = Self::preset(&preset)?;
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Parse(e.to_string()))?;
        merge(&mut merged, raw);
        let cfg: Self = toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, preset_override: Option<&str>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, preset_override)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.clusters.validate()?;
        self.clutter.validate()?;
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!("schema_version must be {SCHEMA_VERSION}")));
        }
        if self.rcs_grid_db.is_empty() || self.rcs_grid_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("rcs_grid_db must be a non-empty list of finite values".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig("at least one variant is required".into()));
        }
        if self.realizations == 0 || self.trials == 0 {
            return Err(Error::InvalidConfig("realizations and trials must be positive".into()));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::InvalidConfig("pfa must lie in (0, 1)".into()));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::InvalidConfig("seed must be below 2^63".into()));
        }
        if !self.cnr_db.is_finite() || !self.rcs_reference_db.is_finite() {
            return Err(Error::InvalidConfig("cnr_db and rcs_reference_db must be finite".into()));
        }
        if (self.trials as f64) < 1.0 / self.pfa {
            log::warn!("trials = {} is below 1/pfa = {:.0}", self.trials, 1.0 / self.pfa);
        }
        Ok(())
    }

    /// Linear absolute `δ²` for a grid value in dB.
    pub fn rcs_linear(&self, rcs_db: f64) -> f64 {
        10f64.powf((rcs_db + self.rcs_reference_db) / 10.0)
    }

    /// `δ_z² = CNR·σ²`.
    pub fn clutter_power(&self) -> f64 {
        10f64.powf(self.cnr_db / 10.0) * self.scenario.sensing_noise_w()
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml_string()?.as_bytes());
        Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for cfg in [ExperimentConfig::paper(), ExperimentConfig::desk()] {
            let text = cfg.to_toml_string().unwrap();
            let back = ExperimentConfig::from_toml_str(&text, Some(if cfg.scenario.antennas == 36 { "paper" } else { "desk" })).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn paper_defaults() {
        let p = ExperimentConfig::paper();
        assert_eq!(p.trials, 5000);
        assert_eq!(p.realizations, 10);
        assert_eq!(p.pfa, 1e-4);
        assert_eq!(p.rcs_grid_db.first(), Some(&-40.0));
        assert_eq!(p.rcs_grid_db.last(), Some(&20.0));
        assert_eq!(p.rcs_grid_db.len(), 13);
    }

    #[test]
    fn partial_overrides_merge_into_preset() {
        let cfg = ExperimentConfig::from_toml_str(
            "schema_version = 1\npreset = \"paper\"\ncnr_db = 40.0\n[scenario]\nris_elements = 16\n[clusters]\nc2 = 20\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.cnr_db, 40.0);
        assert_eq!(cfg.scenario.ris_elements, 16);
        assert_eq!(cfg.scenario.antennas, 36);
        assert_eq!(cfg.clusters.c2, 20);
        assert_eq!(cfg.clusters.c3, 2);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(ExperimentConfig::from_toml_str("preset = \"desk\"", None), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::from_toml_str("schema_version = 2", None), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::from_toml_str("schema_version = 1\nbogus = 3", None), Err(Error::Parse(_))));
        assert!(ExperimentConfig::from_toml_str("schema_version = 1\npfa = 1.5", None).is_err());
        assert!(ExperimentConfig::from_toml_str("schema_version = 1\nrcs_grid_db = []", None).is_err());
        assert!(ExperimentConfig::from_toml_str("schema_version = 1\npreset = \"huge\"", None).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::desk();
        let b = ExperimentConfig { seed: 2, ..ExperimentConfig::desk() };
        assert_eq!(a.hash().unwrap(), ExperimentConfig::desk().hash().unwrap());
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 16);
    }
}
