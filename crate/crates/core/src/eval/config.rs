use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::noise::{NoiseCondition, NoiseType};
use crate::siib::SiibConfig;
use crate::ssdrc::{DrcConfig, ShapingConfig, SsdrcConfig};

/// Everything a run depends on besides the corpus and the seed.
///
/// ```toml
/// [ssdrc]
/// beta = 0.3
///
/// [drc]
/// release_ms = 20.0
///
/// [noise]
/// csn_path = "talker.wav"
///
/// [grid]
/// systems = ["unprocessed", "ssdrc", "vocoder"]
/// baseline = "unprocessed"
///
/// [grid.external]
/// vocoder = "out/vocoder"
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub ssdrc: ShapingConfig,
    pub drc: DrcConfig,
    pub noise: NoiseSettings,
    pub siib: SiibConfig,
    pub grid: GridSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    /// Minimum length of the generated SSN; it is extended to cover the
    /// longest utterance.
    pub ssn_duration_s: f64,
    /// Directory of WAVs to shape the SSN after. Defaults to the corpus.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssn_reference: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csn_path: Option<PathBuf>,
    pub csn_offset_s: f64,
}

impl Default for NoiseSettings {
    fn default() -> Self {
        Self {
            ssn_duration_s: 30.0,
            ssn_reference: None,
            csn_path: None,
            csn_offset_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub systems: Vec<String>,
    pub conditions: Vec<NoiseCondition>,
    pub baseline: String,
    /// System label -> directory of processed WAVs named like the corpus files.
    pub external: BTreeMap<String, PathBuf>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            systems: vec!["unprocessed".into(), "ssdrc".into()],
            conditions: NoiseCondition::canonical_grid(),
            baseline: "unprocessed".into(),
            external: BTreeMap::new(),
        }
    }
}

impl AppConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: AppConfig = toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn ssdrc_config(&self) -> SsdrcConfig {
        SsdrcConfig {
            shaping: self.ssdrc.clone(),
            drc: self.drc.clone(),
        }
    }

    pub fn uses(&self, noise: NoiseType) -> bool {
        self.grid.conditions.iter().any(|c| c.noise_type == noise)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EvalError::Config(m.to_string()));
        self.ssdrc_config().validate().map_err(|e| EvalError::Config(e.to_string()))?;
        self.siib.validate().map_err(|e| EvalError::Config(e.to_string()))?;
        if !(self.noise.ssn_duration_s.is_finite() && self.noise.ssn_duration_s > 0.0) {
            return bad("noise.ssn_duration_s must be positive");
        }
        if !(self.noise.csn_offset_s.is_finite() && self.noise.csn_offset_s >= 0.0) {
            return bad("noise.csn_offset_s must be non-negative");
        }
        if self.grid.conditions.iter().any(|c| !c.snr_db.is_finite()) {
            return bad("grid SNRs must be finite");
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.grid.systems {
            if !seen.insert(s) {
                return Err(EvalError::DuplicateSystem(s.clone()));
            }
        }
        Ok(())
    }
}
