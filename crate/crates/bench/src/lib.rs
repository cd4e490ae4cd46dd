//! Fixed slot instances shared by the benchmarks.

use uavmec_core::allocator::AllocProblem;
use uavmec_core::bcd::allocation_problem;
use uavmec_core::matching::match_vehicles;
use uavmec_core::scenario::generate_episode;
use uavmec_core::sim::SimState;
use uavmec_core::{Fleet, Plan, SlotContext, SlotInputs, SystemParams};

pub struct Fixture {
    pub params: SystemParams,
    pub fleet: Fleet,
    pub state: SimState,
    pub inputs: SlotInputs,
    pub weights: Vec<f64>,
}

impl Fixture {
    /// Slot `slot` of the default scenario with uniform queue weights `q`.
    pub fn new(seed: u64, slot: usize, q: f64) -> Self {
        let params = SystemParams::default();
        let fleet = Fleet::table_defaults(params.area_side);
        let inputs = generate_episode(seed, &params, fleet.luavs.len()).swap_remove(slot);
        let state = SimState::new(&fleet);
        let weights = vec![q; fleet.luavs.len()];
        Self { params, fleet, state, inputs, weights }
    }

    pub fn ctx(&self) -> SlotContext<'_> {
        SlotContext {
            params: &self.params,
            vehicles: &self.inputs.vehicles,
            tasks: &self.inputs.tasks,
            luavs: &self.state.luavs,
            huav: &self.state.huav,
            k: self.params.control_k,
            weights: &self.weights,
        }
    }

    /// Hover plan with the matched assignment and an even split.
    pub fn matched_plan(&self) -> Plan {
        let ctx = self.ctx();
        let mut plan = Plan::hover(&self.state.luavs, &self.state.huav);
        let n = self.inputs.tasks.len();
        plan.assignment = match_vehicles(&ctx).assignment;
        plan.alpha = vec![0.5; n];
        plan.f_lu = vec![0.0; n];
        plan.f_h = vec![0.0; n];
        plan.direct = vec![false; n];
        plan
    }

    pub fn allocation(&self) -> AllocProblem {
        allocation_problem(&self.ctx(), &self.matched_plan())
    }
}
