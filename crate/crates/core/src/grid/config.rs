use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GridError;

pub const CIGRE_MV_BUSES: usize = 15;

/// Grid and scenario parameters, read from a flat `key = value` file.
///
/// Powers are in MW / MVar on a 1 MVA base, so they coincide with per-unit
/// values. Impedances are per-unit per feeder segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Connectivity of the CIGRÉ MV benchmark with its tie switches open
    /// (two radial feeders from the slack). Needs 15 buses.
    CigreMv,
    /// Single chain `0 - 1 - 2 - ...`.
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Total bus count including the slack bus.
    pub node_count: usize,
    /// Absent: `cigre_mv` for 15 buses, `chain` otherwise.
    pub topology: Option<Topology>,
    pub base_mva: f64,
    pub base_kv: f64,
    pub line_r: f64,
    pub line_x: f64,
    pub load_p: [f64; 2],
    pub load_q: [f64; 2],
    pub gen_p: [f64; 2],
    pub gen_q: [f64; 2],
    /// Closed voltage band in pu; excursions disconnect the node.
    pub band: [f64; 2],
    /// Steps a tripped node stays disconnected. Absent means for the rest of the run.
    pub reconnect_after: Option<u64>,
    /// Uncontrolled per-node demand driving the scenario.
    pub profile_p: [f64; 2],
    pub profile_q_ratio: f64,
    pub profile_period: f64,
    /// Sinusoid amplitude as a fraction of the profile range.
    pub profile_amplitude: f64,
    /// Stationary standard deviation of the AR(1) noise, same units.
    pub profile_noise: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            node_count: 15,
            topology: None,
            base_mva: 1.0,
            base_kv: 20.0,
            line_r: 0.01,
            line_x: 0.03,
            load_p: [0.0, 1.4],
            load_q: [-0.46, 0.46],
            gen_p: [0.0, 0.8],
            gen_q: [-0.46, 0.46],
            band: [0.90, 1.10],
            reconnect_after: None,
            profile_p: [0.01, 0.08],
            profile_q_ratio: 0.3,
            profile_period: 288.0,
            profile_amplitude: 0.35,
            profile_noise: 0.1,
        }
    }
}

fn check_range(name: &str, range: [f64; 2]) -> Result<(), GridError> {
    if !range[0].is_finite() || !range[1].is_finite() {
        return Err(GridError::Config(format!("{name}: bounds must be finite")));
    }
    if range[0] > range[1] {
        return Err(GridError::Config(format!(
            "{name}: min {} exceeds max {}",
            range[0], range[1]
        )));
    }
    Ok(())
}

impl GridConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, GridError> {
        let config: GridConfig =
            toml::from_str(text).map_err(|e| GridError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GridError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn topology(&self) -> Topology {
        self.topology.unwrap_or(if self.node_count == CIGRE_MV_BUSES {
            Topology::CigreMv
        } else {
            Topology::Chain
        })
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.topology() == Topology::CigreMv && self.node_count != CIGRE_MV_BUSES {
            return Err(GridError::Config(format!(
                "cigre_mv topology has {CIGRE_MV_BUSES} buses, node_count is {}",
                self.node_count
            )));
        }
        if self.node_count < 2 {
            return Err(GridError::Config(format!(
                "node_count must be at least 2 (slack + one node), got {}",
                self.node_count
            )));
        }
        if !(self.base_mva > 0.0) || !(self.base_kv > 0.0) {
            return Err(GridError::Config("base_mva and base_kv must be positive".into()));
        }
        if !(self.line_r >= 0.0) || !(self.line_x > 0.0) {
            return Err(GridError::Config(format!(
                "line impedance needs r >= 0 and x > 0, got r={} x={}",
                self.line_r, self.line_x
            )));
        }
        check_range("load_p", self.load_p)?;
        check_range("load_q", self.load_q)?;
        check_range("gen_p", self.gen_p)?;
        check_range("gen_q", self.gen_q)?;
        check_range("band", self.band)?;
        check_range("profile_p", self.profile_p)?;
        if self.load_p[0] < 0.0 || self.gen_p[0] < 0.0 {
            return Err(GridError::Config(
                "real-power bounds of loads and generators must be non-negative".into(),
            ));
        }
        if self.profile_p[0] < 0.0 || self.profile_p[1] > self.load_p[1] {
            return Err(GridError::Config(format!(
                "profile_p must lie within [0, {}]",
                self.load_p[1]
            )));
        }
        if !(self.profile_period > 0.0) || !(self.profile_noise >= 0.0) || !(self.profile_amplitude >= 0.0) {
            return Err(GridError::Config(
                "profile_period must be positive, profile_amplitude and profile_noise non-negative".into(),
            ));
        }
        if !self.profile_q_ratio.is_finite() {
            return Err(GridError::Config("profile_q_ratio must be finite".into()));
        }
        if self.reconnect_after == Some(0) {
            return Err(GridError::Config("reconnect_after must be at least 1".into()));
        }
        Ok(())
    }
}
