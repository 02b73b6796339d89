//! Grid data model, AC power flow and grid-code enforcement.

mod config;
mod gridcode;
mod model;
mod powerflow;

pub use config::{GridConfig, Topology, CIGRE_MV_BUSES};
pub use gridcode::{enforce_grid_code, Enforcement, GridCodeMonitor};
pub use model::{
    build_benchmark_grid, Actuator, CIGRE_MV_BRANCHES, ActuatorKind, Bus, BusKind, Grid, GridState, Line, Setpoint,
    SetpointProposal,
};
pub use powerflow::{
    admittance_matrix, calculated_injections, solve_power_flow, solve_power_flow_with, PowerFlow,
    SolverOptions,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid configuration: {0}")]
    Config(String),
    #[error("power flow did not converge after {iterations} iterations (max mismatch {mismatch:e} pu)")]
    NonConvergence { iterations: usize, mismatch: f64 },
    #[error("setpoint vector has {got} entries, grid has {expected} actuators")]
    Dimension { expected: usize, got: usize },
}
