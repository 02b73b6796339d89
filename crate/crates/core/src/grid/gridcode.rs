use super::{Grid, GridState};

#[derive(Debug, Clone, PartialEq)]
pub struct Enforcement {
    pub state: GridState,
    /// Bus ids of nodes switched out of service by this call.
    pub newly_disconnected: Vec<usize>,
}

/// Switches out every in-service node whose voltage leaves the closed `band`.
///
/// The returned state reports tripped nodes at 0.0 pu; callers re-solve to
/// get the post-trip voltages of the remaining buses.
pub fn enforce_grid_code(state: &GridState, band: [f64; 2]) -> Enforcement {
    let mut next = state.clone();
    let mut newly_disconnected = Vec::new();
    for (node, flag) in next.in_service.iter_mut().enumerate() {
        let bus = node + 1;
        let v = state.voltages[bus];
        if *flag && !(band[0]..=band[1]).contains(&v) {
            *flag = false;
            next.voltages[bus] = 0.0;
            newly_disconnected.push(bus);
        }
    }
    Enforcement { state: next, newly_disconnected }
}

/// Tracks trip times so nodes can be reconnected after a cooldown.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCodeMonitor {
    pub band: [f64; 2],
    pub reconnect_after: Option<u64>,
    tripped_at: Vec<Option<u64>>,
    total_trips: u64,
}

impl GridCodeMonitor {
    pub fn new(node_count: usize, band: [f64; 2], reconnect_after: Option<u64>) -> Self {
        Self { band, reconnect_after, tripped_at: vec![None; node_count], total_trips: 0 }
    }

    pub fn total_trips(&self) -> u64 {
        self.total_trips
    }

    /// Applies the grid code to `state` and mirrors new trips into `grid`.
    pub fn enforce(&mut self, grid: &mut Grid, state: &GridState) -> Enforcement {
        let enforcement = enforce_grid_code(state, self.band);
        for &bus in &enforcement.newly_disconnected {
            grid.set_node_in_service(bus - 1, false);
            self.tripped_at[bus - 1] = Some(state.step);
        }
        self.total_trips += enforcement.newly_disconnected.len() as u64;
        enforcement
    }

    /// Reconnects nodes whose cooldown has elapsed by `step`. Returns their bus ids.
    pub fn release(&mut self, grid: &mut Grid, step: u64) -> Vec<usize> {
        let Some(cooldown) = self.reconnect_after else {
            return Vec::new();
        };
        let mut released = Vec::new();
        for (node, tripped) in self.tripped_at.iter_mut().enumerate() {
            if let Some(at) = *tripped {
                if step >= at + cooldown {
                    *tripped = None;
                    grid.set_node_in_service(node, true);
                    released.push(node + 1);
                }
            }
        }
        released
    }
}
