//! Incremental volt-VAR droop: `q(t+1) = [q(t) − D·(V(t) − 1)]⁺`.
//!
//! The controller works on one net reactive command per node (injection
//! positive). The command is split equally between the node's generator
//! (injecting half) and load (consuming the negated half). Real power is
//! left at whatever was last applied.

use crate::grid::{ActuatorKind, Grid, Setpoint, SetpointProposal};

use super::PolicyError;

/// One droop step for a single node, projected onto `bounds`.
pub fn droop_update(q: f64, v: f64, step_size: f64, bounds: [f64; 2]) -> f64 {
    (q - step_size * (v - 1.0)).clamp(bounds[0], bounds[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulesPolicyState {
    /// Last applied net reactive command per node, MVar.
    pub q_prev: Vec<f64>,
    /// Diagonal of D per node, MVar per pu.
    pub step_sizes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulesPolicy {
    state: RulesPolicyState,
    /// `(load, generator)` actuator indices per node.
    node_actuators: Vec<(usize, usize)>,
    net_bounds: Vec<[f64; 2]>,
    act_bounds: Vec<([f64; 2], [f64; 2])>,
    p_prev: Vec<f64>,
}

impl RulesPolicy {
    pub fn new(grid: &Grid, step_size: f64) -> Result<Self, PolicyError> {
        if !(step_size > 0.0) {
            return Err(PolicyError::Config(format!("droop step size must be positive, got {step_size}")));
        }
        let nodes = grid.node_count();
        let mut node_actuators = vec![(usize::MAX, usize::MAX); nodes];
        for act in &grid.actuators {
            let slot = &mut node_actuators[act.bus_id - 1];
            match act.kind {
                ActuatorKind::Load => slot.0 = act.id,
                ActuatorKind::Generator => slot.1 = act.id,
            }
        }
        if node_actuators.iter().any(|&(l, g)| l == usize::MAX || g == usize::MAX) {
            return Err(PolicyError::Config(
                "every node needs exactly one load and one generator".into(),
            ));
        }
        let net_bounds = node_actuators
            .iter()
            .map(|&(l, g)| {
                let (lq, gq) = (grid.actuators[l].q_bounds, grid.actuators[g].q_bounds);
                [gq[0] - lq[1], gq[1] - lq[0]]
            })
            .collect();
        let act_bounds = grid.actuators.iter().map(|a| (a.p_bounds, a.q_bounds)).collect();
        Ok(Self {
            state: RulesPolicyState { q_prev: vec![0.0; nodes], step_sizes: vec![step_size; nodes] },
            node_actuators,
            net_bounds,
            act_bounds,
            p_prev: vec![0.0; grid.actuators.len()],
        })
    }

    pub fn state(&self) -> &RulesPolicyState {
        &self.state
    }

    pub fn net_bounds(&self) -> &[[f64; 2]] {
        &self.net_bounds
    }

    /// Proposes setpoints from node voltages (bus order, slack excluded).
    /// Nodes flagged out of service hold their command; their 0.0 pu reading
    /// is not a measurement.
    pub fn propose(&self, voltages: &[f64], in_service: &[bool]) -> Result<SetpointProposal, PolicyError> {
        let n = self.state.q_prev.len();
        if voltages.len() != n || in_service.len() != n {
            return Err(PolicyError::Dimension { expected: n, got: voltages.len().max(in_service.len()) });
        }
        let mut out = vec![Setpoint::default(); self.p_prev.len()];
        for node in 0..n {
            let q_prev = self.state.q_prev[node];
            let q = if in_service[node] {
                droop_update(q_prev, voltages[node], self.state.step_sizes[node], self.net_bounds[node])
            } else {
                q_prev
            };
            let (l, g) = self.node_actuators[node];
            out[g] = Setpoint { p: self.p_prev[g], q: 0.5 * q };
            out[l] = Setpoint { p: self.p_prev[l], q: -0.5 * q };
        }
        for (s, (pb, qb)) in out.iter_mut().zip(&self.act_bounds) {
            s.p = s.p.clamp(pb[0], pb[1]);
            s.q = s.q.clamp(qb[0], qb[1]);
        }
        Ok(SetpointProposal(out))
    }

    /// Records the setpoints that were actually applied to the grid.
    pub fn commit(&mut self, applied: &SetpointProposal) -> Result<(), PolicyError> {
        if applied.len() != self.p_prev.len() {
            return Err(PolicyError::Dimension { expected: self.p_prev.len(), got: applied.len() });
        }
        for (node, &(l, g)) in self.node_actuators.iter().enumerate() {
            self.state.q_prev[node] = applied.0[g].q - applied.0[l].q;
        }
        for (p, s) in self.p_prev.iter_mut().zip(applied.iter()) {
            *p = s.p;
        }
        Ok(())
    }
}
