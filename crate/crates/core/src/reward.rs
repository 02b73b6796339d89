//! Normalized agent utility.
//!
//! Voltages are scored with a Gaussian-shaped bump centred on 1.0 pu and
//! combined with the in-service share of controlled nodes. Every term lies in
//! [0, 1] and the weights sum to one, so the performance does too.

use crate::grid::GridState;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("cannot score an empty voltage vector")]
    Empty,
    #[error("sigma must be positive, got {0}")]
    Sigma(f64),
    #[error("weights must be non-negative and sum to 1, got ({0}, {1}, {2})")]
    Weights(f64, f64, f64),
    #[error("observed bus {0} is not part of the grid")]
    UnknownBus(usize),
}

pub const OMEGA_MU: f64 = 1.0;
pub const OMEGA_SIGMA: f64 = 0.032;

/// `(A / |x|) · Σ exp(-(x - μ)² / (2σ²) - C)`
pub fn gaussian_score(x: &[f64], a: f64, mu: f64, c: f64, sigma: f64) -> Result<f64, RewardError> {
    if x.is_empty() {
        return Err(RewardError::Empty);
    }
    if !(sigma > 0.0) {
        return Err(RewardError::Sigma(sigma));
    }
    let two_var = 2.0 * sigma * sigma;
    let sum: f64 = x.iter().map(|&v| (-(v - mu).powi(2) / two_var - c).exp()).sum();
    Ok(a / x.len() as f64 * sum)
}

pub fn g_omega(x: &[f64]) -> Result<f64, RewardError> {
    gaussian_score(x, 1.0, OMEGA_MU, 0.0, OMEGA_SIGMA)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceWeights {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl PerformanceWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, RewardError> {
        let ok = [alpha, beta, gamma].iter().all(|w| *w >= 0.0)
            && (alpha + beta + gamma - 1.0).abs() < 1e-12;
        if !ok {
            return Err(RewardError::Weights(alpha, beta, gamma));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for PerformanceWeights {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        Self { alpha: third, beta: third, gamma: third }
    }
}

/// The subset of buses visible to the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub observed_bus_ids: Vec<usize>,
    pub values: Vec<f64>,
}

impl Observation {
    pub fn full(state: &GridState) -> Self {
        Self {
            observed_bus_ids: (0..state.voltages.len()).collect(),
            values: state.voltages.clone(),
        }
    }

    pub fn subset(state: &GridState, bus_ids: &[usize]) -> Result<Self, RewardError> {
        if bus_ids.is_empty() {
            return Err(RewardError::Empty);
        }
        let values = bus_ids
            .iter()
            .map(|&b| state.voltages.get(b).copied().ok_or(RewardError::UnknownBus(b)))
            .collect::<Result<_, _>>()?;
        Ok(Self { observed_bus_ids: bus_ids.to_vec(), values })
    }
}

pub fn performance(
    state: &GridState,
    obs: &Observation,
    weights: &PerformanceWeights,
) -> Result<f64, RewardError> {
    let world = g_omega(&state.voltages)?;
    let observed = g_omega(&obs.values)?;
    let health = if state.in_service.is_empty() {
        1.0
    } else {
        state.in_service_count() as f64 / state.in_service.len() as f64
    };
    let value = weights.alpha * world + weights.beta * observed + weights.gamma * health;
    // summing three thirds can land one ulp above 1
    Ok(value.min(1.0))
}

/// Performance with full observability.
pub fn performance_full(state: &GridState, weights: &PerformanceWeights) -> f64 {
    performance(state, &Observation::full(state), weights).expect("grid state has buses")
}
