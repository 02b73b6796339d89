use crate::grid::{Grid, Setpoint, SetpointProposal};

use super::sac::{Mode, Sac, SacConfig};
use super::PolicyError;

/// Voltage deviations are scaled so the 0.9–1.1 band spans [-1, 1].
pub const OBSERVATION_SCALE: f64 = 10.0;

pub fn encode_observation(voltages: &[f64]) -> Vec<f64> {
    voltages.iter().map(|v| (v - 1.0) * OBSERVATION_SCALE).collect()
}

/// Affine map between normalized actions in [-1, 1] and actuator setpoints.
/// Each actuator contributes two dimensions, `p` then `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMap {
    bounds: Vec<[f64; 2]>,
}

impl ActionMap {
    pub fn from_grid(grid: &Grid) -> Self {
        let bounds = grid.actuators.iter().flat_map(|a| [a.p_bounds, a.q_bounds]).collect();
        Self { bounds }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn to_setpoints(&self, action: &[f64]) -> Result<SetpointProposal, PolicyError> {
        if action.len() != self.dim() {
            return Err(PolicyError::Dimension { expected: self.dim(), got: action.len() });
        }
        let value = |i: usize| {
            let [lo, hi] = self.bounds[i];
            (lo + 0.5 * (action[i] + 1.0) * (hi - lo)).clamp(lo, hi)
        };
        Ok(SetpointProposal(
            (0..self.dim() / 2).map(|k| Setpoint { p: value(2 * k), q: value(2 * k + 1) }).collect(),
        ))
    }

    pub fn to_action(&self, proposal: &SetpointProposal) -> Result<Vec<f64>, PolicyError> {
        if 2 * proposal.len() != self.dim() {
            return Err(PolicyError::Dimension { expected: self.dim() / 2, got: proposal.len() });
        }
        Ok(proposal
            .iter()
            .flat_map(|s| [s.p, s.q])
            .zip(&self.bounds)
            .map(|(x, &[lo, hi])| {
                if hi > lo {
                    (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// The learning policy: SAC over encoded voltages, acting through [`ActionMap`].
#[derive(Debug, Clone)]
pub struct AdaptivePolicy {
    pub sac: Sac,
    pub map: ActionMap,
}

impl AdaptivePolicy {
    pub fn new(grid: &Grid, config: SacConfig, seed: u64) -> Result<Self, PolicyError> {
        let map = ActionMap::from_grid(grid);
        let sac = Sac::new(grid.bus_count(), map.dim(), config, seed)?;
        Ok(Self { sac, map })
    }

    /// Returns the proposal together with its normalized action.
    pub fn propose(&mut self, obs: &[f64], mode: Mode) -> Result<(SetpointProposal, Vec<f64>), PolicyError> {
        let action = self.sac.act(obs, mode)?;
        Ok((self.map.to_setpoints(&action)?, action))
    }
}
