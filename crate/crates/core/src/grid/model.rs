use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::Topology;
use super::{GridConfig, GridError};

/// Branches of the CIGRÉ MV benchmark with switches S1–S3 open. The two
/// HV/MV transformers appear as the branches leaving bus 0.
pub const CIGRE_MV_BRANCHES: [(usize, usize); 14] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 4),
    (4, 5),
    (5, 6),
    (3, 8),
    (8, 7),
    (8, 9),
    (9, 10),
    (10, 11),
    (0, 12),
    (12, 13),
    (13, 14),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    pub voltage_mag: f64,
    pub voltage_ang: f64,
    /// An out-of-service bus keeps conducting as a zero-injection junction
    /// but is reported at 0.0 pu.
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    pub resistance: f64,
    pub reactance: f64,
}

impl Line {
    pub fn admittance(&self) -> Complex64 {
        Complex64::new(self.resistance, self.reactance).inv()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActuatorKind {
    /// Positive p and q mean consumption.
    Load,
    /// Positive p and q mean injection.
    Generator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actuator {
    pub id: usize,
    pub bus_id: usize,
    pub kind: ActuatorKind,
    pub p_set: f64,
    pub q_set: f64,
    pub p_bounds: [f64; 2],
    pub q_bounds: [f64; 2],
    pub in_service: bool,
}

impl Actuator {
    /// Net complex injection into the bus in pu.
    pub fn injection(&self, setpoint: Setpoint) -> Complex64 {
        match self.kind {
            ActuatorKind::Generator => Complex64::new(setpoint.p, setpoint.q),
            ActuatorKind::Load => Complex64::new(-setpoint.p, -setpoint.q),
        }
    }

    pub fn clamp(&self, setpoint: Setpoint) -> Setpoint {
        Setpoint {
            p: setpoint.p.clamp(self.p_bounds[0], self.p_bounds[1]),
            q: setpoint.q.clamp(self.q_bounds[0], self.q_bounds[1]),
        }
    }

    pub fn contains(&self, setpoint: Setpoint) -> bool {
        (self.p_bounds[0]..=self.p_bounds[1]).contains(&setpoint.p)
            && (self.q_bounds[0]..=self.q_bounds[1]).contains(&setpoint.q)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub p: f64,
    pub q: f64,
}

/// One setpoint per actuator, ordered by actuator id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SetpointProposal(pub Vec<Setpoint>);

impl SetpointProposal {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Setpoint::default(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Setpoint> {
        self.0.iter()
    }
}

/// Solved world state: one voltage magnitude per bus and an in-service flag
/// per controlled (non-slack) node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub voltages: Vec<f64>,
    pub in_service: Vec<bool>,
    pub step: u64,
}

impl GridState {
    pub fn in_service_count(&self) -> usize {
        self.in_service.iter().filter(|&&f| f).count()
    }

    /// Voltages at the controlled nodes, i.e. every bus but the slack.
    pub fn node_voltages(&self) -> &[f64] {
        &self.voltages[1..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub actuators: Vec<Actuator>,
    /// Uncontrolled consumption per bus (P + jQ, positive = consumed).
    pub base_demand: Vec<Complex64>,
    pub band: [f64; 2],
}

impl Grid {
    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Controlled nodes are the non-slack buses, indexed from 0.
    pub fn node_count(&self) -> usize {
        self.buses.len() - 1
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("grid has a slack bus")
    }

    pub fn node_in_service(&self) -> Vec<bool> {
        self.buses[1..].iter().map(|b| b.in_service).collect()
    }

    /// Sets a controlled node (bus `node + 1`) and its actuators in or out of service.
    pub fn set_node_in_service(&mut self, node: usize, in_service: bool) {
        let bus_id = node + 1;
        self.buses[bus_id].in_service = in_service;
        for act in self.actuators.iter_mut().filter(|a| a.bus_id == bus_id) {
            act.in_service = in_service;
        }
    }

    pub fn current_setpoints(&self) -> SetpointProposal {
        SetpointProposal(
            self.actuators
                .iter()
                .map(|a| Setpoint { p: a.p_set, q: a.q_set })
                .collect(),
        )
    }

    /// Projects every entry onto its actuator's bounds.
    pub fn project(&self, proposal: &SetpointProposal) -> SetpointProposal {
        SetpointProposal(
            self.actuators
                .iter()
                .zip(proposal.iter())
                .map(|(a, &s)| a.clamp(s))
                .collect(),
        )
    }

    pub fn check_proposal(&self, proposal: &SetpointProposal) -> Result<(), GridError> {
        if proposal.len() != self.actuators.len() {
            return Err(GridError::Dimension {
                expected: self.actuators.len(),
                got: proposal.len(),
            });
        }
        Ok(())
    }

    /// Stores the proposal as the actuators' current setpoints.
    pub fn apply_setpoints(&mut self, proposal: &SetpointProposal) -> Result<(), GridError> {
        self.check_proposal(proposal)?;
        for (act, s) in self.actuators.iter_mut().zip(proposal.iter()) {
            act.p_set = s.p;
            act.q_set = s.q;
        }
        Ok(())
    }

    /// Net scheduled injection per bus for the given setpoints. Out-of-service
    /// buses inject nothing.
    pub fn injections(&self, proposal: &SetpointProposal) -> Vec<Complex64> {
        let mut s: Vec<Complex64> = self
            .buses
            .iter()
            .zip(&self.base_demand)
            .map(|(b, &d)| if b.in_service { -d } else { Complex64::new(0.0, 0.0) })
            .collect();
        for (act, &sp) in self.actuators.iter().zip(proposal.iter()) {
            if act.in_service && self.buses[act.bus_id].in_service {
                s[act.bus_id] += act.injection(sp);
            }
        }
        s
    }
}

/// Radial grid with uniform segment impedance: slack at bus 0, one load and
/// one generator actuator per non-slack bus.
pub fn build_benchmark_grid(config: &GridConfig) -> Result<Grid, GridError> {
    config.validate()?;
    let n = config.node_count;
    let buses = (0..n)
        .map(|id| Bus {
            id,
            kind: if id == 0 { BusKind::Slack } else { BusKind::Pq },
            voltage_mag: 1.0,
            voltage_ang: 0.0,
            in_service: true,
        })
        .collect();
    let branches: Vec<(usize, usize)> = match config.topology() {
        Topology::CigreMv => CIGRE_MV_BRANCHES.to_vec(),
        Topology::Chain => (1..n).map(|to| (to - 1, to)).collect(),
    };
    let lines = branches
        .into_iter()
        .map(|(from_bus, to_bus)| Line {
            from_bus,
            to_bus,
            resistance: config.line_r,
            reactance: config.line_x,
        })
        .collect();
    let mut actuators = Vec::with_capacity(2 * (n - 1));
    for bus_id in 1..n {
        for (kind, p_bounds, q_bounds) in [
            (ActuatorKind::Load, config.load_p, config.load_q),
            (ActuatorKind::Generator, config.gen_p, config.gen_q),
        ] {
            actuators.push(Actuator {
                id: actuators.len(),
                bus_id,
                kind,
                p_set: 0.0,
                q_set: 0.0,
                p_bounds,
                q_bounds,
                in_service: true,
            });
        }
    }
    Ok(Grid {
        buses,
        lines,
        actuators,
        base_demand: vec![Complex64::new(0.0, 0.0); n],
        band: config.band,
    })
}
