use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::discriminator::Pt1Mode;
use crate::policies::SacConfig;
use crate::reward::PerformanceWeights;

/// Agent parameters, read from TOML. Every key is optional.
///
/// ```toml
/// droop_step = 0.1
/// pt1_time_constant = 10.0
/// pt1_mode = "lag"            # or "running_mean"
/// weights = [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]
///
/// [sac]
/// hidden_dims = [16, 16]
/// learning_rate = 1e-4
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Diagonal entry of the droop matrix, MVar per pu.
    pub droop_step: f64,
    pub pt1_time_constant: f64,
    pub pt1_mode: Pt1Mode,
    /// (all voltages, observed voltages, in-service share).
    pub weights: [f64; 3],
    pub sac: SacConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        let w = PerformanceWeights::default();
        Self {
            droop_step: 0.1,
            pt1_time_constant: 10.0,
            pt1_mode: Pt1Mode::Lag,
            weights: [w.alpha(), w.beta(), w.gamma()],
            sac: SacConfig::default(),
        }
    }
}

impl AgentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let config: AgentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn performance_weights(&self) -> Result<PerformanceWeights, HarnessError> {
        let [a, b, g] = self.weights;
        Ok(PerformanceWeights::new(a, b, g)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.droop_step > 0.0) {
            return Err(HarnessError::Config(format!("droop_step must be positive, got {}", self.droop_step)));
        }
        if !(self.pt1_time_constant >= 1.0) {
            return Err(HarnessError::Config(format!(
                "pt1_time_constant must be at least 1, got {}",
                self.pt1_time_constant
            )));
        }
        self.performance_weights()?;
        self.sac.validate()?;
        Ok(())
    }
}
