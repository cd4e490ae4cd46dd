//! Read-only inputs shared by every per-slot decision block.

use crate::params::{HUavState, LUavState, SystemParams};
use crate::scenario::{TaskRequest, VehicleState};

/// One slot's problem instance as seen by the decision blocks.
///
/// `k` and `weights` are the delay weight and per-L-UAV energy weights the
/// policy optimises with; for the Lyapunov controller they are the control
/// factor and the current queues.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub params: &'a SystemParams,
    pub vehicles: &'a [VehicleState],
    pub tasks: &'a [TaskRequest],
    /// L-UAVs with their previous-slot positions.
    pub luavs: &'a [LUavState],
    pub huav: &'a HUavState,
    pub k: f64,
    pub weights: &'a [f64],
}

impl SlotContext<'_> {
    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn n_luavs(&self) -> usize {
        self.luavs.len()
    }
}
