//! The simulated distribution grid the agents act on.
//!
//! Each step the per-node base demand follows a seeded profile (a slow
//! sinusoid plus AR(1) noise, bounded by the configured range). Applied
//! setpoints are solved, the grid code trips nodes outside the voltage band,
//! and the grid is re-solved with the tripped nodes removed.

use log::warn;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::grid::{
    build_benchmark_grid, solve_power_flow, Grid, GridCodeMonitor, GridConfig, GridError, GridState,
    SetpointProposal,
};
use crate::reward::{performance_full, PerformanceWeights};

const NOISE_PERSISTENCE: f64 = 0.98;

/// Seeded base-demand generator, one AR(1) state per node.
#[derive(Debug, Clone)]
pub struct DemandProfile {
    p_range: [f64; 2],
    q_ratio: f64,
    period: f64,
    amplitude: f64,
    noise: f64,
    phases: Vec<f64>,
    ar: Vec<f64>,
    rng: ChaCha8Rng,
}

impl DemandProfile {
    pub fn new(config: &GridConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(7);
        let nodes = config.node_count - 1;
        let phase = Uniform::new(0.0, 0.5 * std::f64::consts::PI).expect("valid range");
        let phases = (0..nodes).map(|_| phase.sample(&mut rng)).collect();
        let ar = (0..nodes)
            .map(|_| config.profile_noise * { let z: f64 = StandardNormal.sample(&mut rng); z })
            .collect();
        Self {
            p_range: config.profile_p,
            q_ratio: config.profile_q_ratio,
            period: config.profile_period,
            amplitude: config.profile_amplitude,
            noise: config.profile_noise,
            phases,
            ar,
            rng,
        }
    }

    /// Demand per node at `step`; must be called with consecutive steps.
    pub fn demand(&mut self, step: u64) -> Vec<Complex64> {
        let innovation = self.noise * (1.0 - NOISE_PERSISTENCE * NOISE_PERSISTENCE).sqrt();
        let angle = 2.0 * std::f64::consts::PI * step as f64 / self.period;
        let [lo, hi] = self.p_range;
        let mut out = Vec::with_capacity(self.phases.len());
        for (phase, x) in self.phases.iter().zip(self.ar.iter_mut()) {
            if step > 0 {
                let e: f64 = StandardNormal.sample(&mut self.rng);
                *x = NOISE_PERSISTENCE * *x + innovation * e;
            }
            let level = (0.5 + self.amplitude * (angle + phase).sin() + *x).clamp(0.0, 1.0);
            let p = lo + (hi - lo) * level;
            out.push(Complex64::new(p, self.q_ratio * p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplyOutcome {
    pub state: GridState,
    pub performance: f64,
    /// Bus ids tripped by the grid code this step.
    pub newly_disconnected: Vec<usize>,
    /// The proposal could not be solved; setpoints were left unchanged.
    pub solver_failed: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    grid: Grid,
    monitor: GridCodeMonitor,
    profile: DemandProfile,
    weights: PerformanceWeights,
    state: GridState,
    step: u64,
}

impl Environment {
    pub fn new(config: &GridConfig, weights: PerformanceWeights, seed: u64) -> Result<Self, GridError> {
        let mut grid = build_benchmark_grid(config)?;
        let mut profile = DemandProfile::new(config, seed);
        let demand = profile.demand(0);
        grid.base_demand[1..].copy_from_slice(&demand);
        let monitor = GridCodeMonitor::new(grid.node_count(), config.band, config.reconnect_after);
        let state = solve_power_flow(&grid, &grid.current_setpoints())?.state;
        Ok(Self { grid, monitor, profile, weights, state, step: 0 })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Last published state.
    pub fn state(&self) -> &GridState {
        &self.state
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn total_trips(&self) -> u64 {
        self.monitor.total_trips()
    }

    /// Moves to `step`: new base demand, cooldown releases. Step 0 is the
    /// initial condition and only needs this call if it was skipped.
    pub fn begin_step(&mut self, step: u64) {
        if step > self.step {
            let demand = self.profile.demand(step);
            self.grid.base_demand[1..].copy_from_slice(&demand);
            self.step = step;
        }
        let released = self.monitor.release(&mut self.grid, step);
        if !released.is_empty() {
            for bus in released {
                self.state.in_service[bus - 1] = true;
            }
        }
    }

    /// Applies a proposal (projected onto actuator bounds), enforces the grid
    /// code and reports the resulting state and performance.
    pub fn apply(&mut self, proposal: &SetpointProposal) -> Result<ApplyOutcome, GridError> {
        self.grid.check_proposal(proposal)?;
        let proposal = self.grid.project(proposal);
        let solved = match solve_power_flow(&self.grid, &proposal) {
            Ok(pf) => pf,
            Err(GridError::NonConvergence { iterations, mismatch }) => {
                warn!("step {}: power flow failed after {iterations} iterations (mismatch {mismatch:e}); setpoints rejected", self.step);
                self.state.step = self.step;
                return Ok(ApplyOutcome {
                    state: self.state.clone(),
                    performance: 0.0,
                    newly_disconnected: Vec::new(),
                    solver_failed: true,
                });
            }
            Err(e) => return Err(e),
        };
        self.grid.apply_setpoints(&proposal)?;
        let mut state = solved.state;
        state.step = self.step;
        let enforcement = self.monitor.enforce(&mut self.grid, &state);
        if !enforcement.newly_disconnected.is_empty() {
            state = match solve_power_flow(&self.grid, &proposal) {
                Ok(pf) => GridState { step: self.step, ..pf.state },
                Err(_) => enforcement.state,
            };
        }
        let performance = performance_full(&state, &self.weights);
        self.state = state.clone();
        Ok(ApplyOutcome {
            state,
            performance,
            newly_disconnected: enforcement.newly_disconnected,
            solver_failed: false,
        })
    }
}
