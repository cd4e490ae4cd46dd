//! Slot-level invariants of matching and the block-coordinate solver on random default-scenario slots.

use proptest::prelude::*;
use uavmec_core::bcd::{optimize_slot, BcdOptions};
use uavmec_core::matching::{match_vehicles, CostTable};
use uavmec_core::radio::evaluate_slot;
use uavmec_core::scenario::generate_episode;
use uavmec_core::sim::SimState;
use uavmec_core::{Fleet, SlotContext, SystemParams};

fn scenario(seed: u64, slot: usize, n: usize) -> (SystemParams, SimState, uavmec_core::SlotInputs) {
    let mut params = SystemParams::default();
    params.n_slots = slot + 1;
    params.v_count_range.max = n.max(params.v_count_range.min);
    let fleet = Fleet::table_defaults(params.area_side);
    let inputs = generate_episode(seed, &params, fleet.luavs.len()).swap_remove(slot);
    (params, SimState::new(&fleet), inputs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matching_is_total_deterministic_and_locally_optimal(
        seed in any::<u64>(), slot in 0usize..3, n in 10usize..40,
        w in proptest::collection::vec(0.0f64..300.0, 4), k in 0.1f64..1000.0,
    ) {
        let (params, state, inputs) = scenario(seed, slot, n);
        let ctx = SlotContext { params: &params, vehicles: &inputs.vehicles, tasks: &inputs.tasks, luavs: &state.luavs, huav: &state.huav, k, weights: &w };
        let m = match_vehicles(&ctx);
        prop_assert_eq!(m.assignment.len(), inputs.tasks.len());
        prop_assert!(m.assignment.iter().all(|&u| u < state.luavs.len()));
        prop_assert_eq!(&match_vehicles(&ctx), &m);
        if !m.capped {
            let table = CostTable::new(&ctx);
            let freqs: Vec<f64> = m.per_uav_load.iter().zip(&state.luavs).map(|(&c, u)| u.cpu_cap / c.max(1) as f64).collect();
            for v in 0..m.assignment.len() {
                let here = table.cost(v, m.assignment[v], freqs[m.assignment[v]]);
                for u in 0..state.luavs.len() {
                    prop_assert!(table.cost(v, u, freqs[u]) >= here * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn slot_decisions_are_feasible_and_monotone(
        seed in any::<u64>(), slot in 0usize..3, n in 10usize..25,
        w in proptest::collection::vec(0.0f64..300.0, 4), k in 0.1f64..1000.0,
    ) {
        let (params, state, inputs) = scenario(seed, slot, n);
        let ctx = SlotContext { params: &params, vehicles: &inputs.vehicles, tasks: &inputs.tasks, luavs: &state.luavs, huav: &state.huav, k, weights: &w };
        let d = optimize_slot(&ctx, &BcdOptions::default()).unwrap();
        for pair in d.objective_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0));
        }
        for t in &d.sca_traces {
            for pair in t.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0));
            }
        }
        if d.converged && d.objective_trace.len() >= 2 {
            let t = &d.objective_trace;
            let (a, b) = (t[t.len() - 2], t[t.len() - 1]);
            prop_assert!((a - b).abs() <= 1e-4 * a.abs());
        }
        let plan = &d.plan;
        let mut lu_load = vec![0.0; state.luavs.len()];
        let mut h_load = 0.0;
        for i in 0..inputs.tasks.len() {
            prop_assert!((0.0..=1.0).contains(&plan.alpha[i]));
            prop_assert!(plan.f_lu[i] >= 0.0 && plan.f_h[i] >= 0.0);
            lu_load[plan.assignment[i]] += plan.f_lu[i];
            h_load += plan.f_h[i];
        }
        for (load, u) in lu_load.iter().zip(&state.luavs) {
            prop_assert!(*load <= u.cpu_cap * (1.0 + 1e-9));
        }
        prop_assert!(h_load <= state.huav.cpu_cap * (1.0 + 1e-9));
        for (u, p) in state.luavs.iter().zip(&plan.luav_positions) {
            prop_assert!(u.position.dist(*p) <= u.reach(params.slot_len));
        }
        prop_assert!(state.huav.position.dist(plan.huav_position) <= state.huav.reach(params.slot_len));
        for i in 0..plan.luav_positions.len() {
            for j in i + 1..plan.luav_positions.len() {
                prop_assert!(plan.luav_positions[i].dist(plan.luav_positions[j]) >= params.d_safe);
            }
        }
        let ev = evaluate_slot(&inputs.vehicles, &inputs.tasks, plan, &state.luavs, &state.huav, &params).unwrap();
        for (dl, t) in ev.delays.iter().zip(&inputs.tasks) {
            prop_assert!(dl.total <= t.deadline * d.deadline_scale * (1.0 + 1e-9));
        }
        prop_assert_eq!(d.infeasible, d.deadline_scale > 1.0);
        prop_assert!((ev.objective(k, &w) - d.objective()).abs() <= 1e-9 * d.objective().abs().max(1.0));
    }
}

#[test]
fn tight_direct_rows_stay_within_deadline() {
    let (params, state, inputs) = scenario(15007205823780548247, 0, 16);
    let w = [0.0, 177.34521671218593, 195.1337588360711, 271.4029819700845];
    let k = 902.7559287947279;
    let ctx = SlotContext { params: &params, vehicles: &inputs.vehicles, tasks: &inputs.tasks, luavs: &state.luavs, huav: &state.huav, k, weights: &w };
    let d = optimize_slot(&ctx, &BcdOptions::default()).unwrap();
    let ev = evaluate_slot(&inputs.vehicles, &inputs.tasks, &d.plan, &state.luavs, &state.huav, &params).unwrap();
    for (dl, t) in ev.delays.iter().zip(&inputs.tasks) {
        assert!(dl.total <= t.deadline * d.deadline_scale * (1.0 + 1e-9), "{} > {}", dl.total, t.deadline * d.deadline_scale);
    }
}
