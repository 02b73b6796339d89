//! Agent-internal replica of the grid used to score proposals before they
//! are applied. The replica solves the same power flow as the environment
//! but knows nothing about the grid code: every node is treated as in
//! service and nothing is ever tripped.

use crate::grid::{solve_power_flow, Grid, GridState, SetpointProposal};
use crate::reward::{performance_full, PerformanceWeights};

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub state: GridState,
    pub performance: f64,
    pub solver_failed: bool,
}

#[derive(Debug, Clone)]
pub struct WorldModel {
    replica: Grid,
    weights: PerformanceWeights,
    last_observation: Option<GridState>,
}

impl WorldModel {
    pub fn new(grid: &Grid, weights: PerformanceWeights) -> Self {
        let mut replica = grid.clone();
        for node in 0..replica.node_count() {
            replica.set_node_in_service(node, true);
        }
        Self { replica, weights, last_observation: None }
    }

    pub fn replica(&self) -> &Grid {
        &self.replica
    }

    pub fn last_observation(&self) -> Option<&GridState> {
        self.last_observation.as_ref()
    }

    /// Copies demand and applied setpoints from the environment's grid.
    /// Grid-code trips are not mirrored.
    pub fn synchronize(&mut self, env_grid: &Grid, env_state: &GridState) {
        self.replica.base_demand.clone_from(&env_grid.base_demand);
        for (mine, theirs) in self.replica.actuators.iter_mut().zip(&env_grid.actuators) {
            mine.p_set = theirs.p_set;
            mine.q_set = theirs.q_set;
        }
        self.last_observation = Some(env_state.clone());
    }

    /// Solves the replica under `proposal` and scores it with all controlled
    /// nodes in service. A failed solve scores 0.0 and reports a collapsed
    /// state (slack at 1.0 pu, every other bus at 0.0).
    pub fn project(&self, proposal: &SetpointProposal) -> Projection {
        let proposal = self.replica.project(proposal);
        let step = self.last_observation.as_ref().map_or(0, |s| s.step);
        match solve_power_flow(&self.replica, &proposal) {
            Ok(pf) => {
                let state = GridState { step, ..pf.state };
                let performance = performance_full(&state, &self.weights);
                Projection { state, performance, solver_failed: false }
            }
            Err(_) => {
                let mut voltages = vec![0.0; self.replica.bus_count()];
                voltages[self.replica.slack_index()] = 1.0;
                Projection {
                    state: GridState { voltages, in_service: vec![true; self.replica.node_count()], step },
                    performance: 0.0,
                    solver_failed: true,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Environment;
    use crate::grid::{ActuatorKind, GridConfig, Setpoint};

    fn healthy() -> (GridConfig, Grid) {
        let config = GridConfig::default();
        let grid = crate::grid::build_benchmark_grid(&config).unwrap();
        (config, grid)
    }

    #[test]
    fn zero_injection_on_healthy_grid_scores_one() {
        let (_, grid) = healthy();
        let wm = WorldModel::new(&grid, PerformanceWeights::default());
        let p = wm.project(&SetpointProposal::zeros(28));
        assert_eq!(p.performance, 1.0);
        assert!(!p.solver_failed);
    }

    #[test]
    fn projection_is_deterministic() {
        let (config, _) = healthy();
        let env = Environment::new(&config, PerformanceWeights::default(), 3).unwrap();
        let mut wm = WorldModel::new(env.grid(), PerformanceWeights::default());
        wm.synchronize(env.grid(), env.state());
        let proposal = SetpointProposal(vec![Setpoint { p: 0.1, q: 0.05 }; 28]);
        assert_eq!(wm.project(&proposal), wm.project(&proposal));
    }

    #[test]
    fn overvoltage_is_overestimated() {
        let (config, _) = healthy();
        let mut env = Environment::new(&config, PerformanceWeights::default(), 3).unwrap();
        let mut wm = WorldModel::new(env.grid(), PerformanceWeights::default());
        wm.synchronize(env.grid(), env.state());
        let push = SetpointProposal(
            env.grid()
                .actuators
                .iter()
                .map(|a| match a.kind {
                    ActuatorKind::Generator => Setpoint { p: 0.0, q: 0.15 },
                    ActuatorKind::Load => Setpoint::default(),
                })
                .collect(),
        );
        let projected = wm.project(&push);
        assert!(projected.state.voltages.iter().any(|&v| v > 1.10));
        assert!(projected.state.in_service.iter().all(|&f| f));
        let before = env.grid().clone();
        let actual = env.apply(&push).unwrap();
        assert!(!actual.newly_disconnected.is_empty());
        assert!(projected.performance >= actual.performance);
        // projecting never touched the environment
        assert_eq!(before.actuators.len(), env.grid().actuators.len());
    }

    #[test]
    fn ignores_environment_trips() {
        let (config, _) = healthy();
        let mut env = Environment::new(&config, PerformanceWeights::default(), 3).unwrap();
        let mut wm = WorldModel::new(env.grid(), PerformanceWeights::default());
        let push = SetpointProposal(
            (0..28).map(|i| if i % 2 == 1 { Setpoint { p: 0.0, q: 0.15 } } else { Setpoint::default() }).collect(),
        );
        env.apply(&push).unwrap();
        wm.synchronize(env.grid(), env.state());
        assert!(wm.replica().buses.iter().all(|b| b.in_service));
        assert_eq!(wm.replica().actuators[0].q_set, env.grid().actuators[0].q_set);
    }
}
