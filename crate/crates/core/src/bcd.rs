//! Per-slot decision: association once, then alternating allocation,
//! L-UAV placement and H-UAV placement until the slot objective settles.

use serde::{Deserialize, Serialize};

use crate::allocator::{AllocProblem, AllocServer, AllocTask};
use crate::context::SlotContext;
use crate::error::Result;
use crate::geometry::Point2;
use crate::matching::{match_vehicles, Matching};
use crate::radio::{evaluate_slot, tx_delay, LinkBudget, LinkKind, Plan};
use crate::trajectory::{DelayRow, Link, Mover, PositionProblem};

/// Split ratios at or below this are candidates for the direct V2HU path.
pub const DIRECT_ALPHA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcdOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Pins the H-UAV to this position instead of optimising it.
    pub fixed_huav: Option<Point2>,
}

impl Default for BcdOptions {
    fn default() -> Self {
        Self { max_iters: 10, tol: 1e-4, fixed_huav: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    pub matching: Matching,
    pub plan: Plan,
    /// Slot objective after each iteration.
    pub objective_trace: Vec<f64>,
    /// True objective traces of every placement solve, in call order.
    pub sca_traces: Vec<Vec<f64>>,
    pub converged: bool,
    pub deadline_scale: f64,
    /// Deadlines had to be relaxed.
    pub infeasible: bool,
    /// Allocation alternation rounds summed over iterations.
    pub alloc_rounds: usize,
}

impl SlotDecision {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&0.0)
    }
}

fn slot_cost(ctx: &SlotContext<'_>, plan: &Plan) -> Result<f64> {
    Ok(evaluate_slot(ctx.vehicles, ctx.tasks, plan, ctx.luavs, ctx.huav, ctx.params)?.objective(ctx.k, ctx.weights))
}

fn rate(kind: LinkKind, a: Point2, b: Point2, power: f64, ctx: &SlotContext<'_>) -> f64 {
    LinkBudget::between(kind, a, b, power, ctx.params).expect("tiers fly at distinct altitudes").rate
}

/// Allocation instance at the plan's positions and routing.
pub fn allocation_problem(ctx: &SlotContext<'_>, plan: &Plan) -> AllocProblem {
    let relay: Vec<f64> = plan
        .luav_positions
        .iter()
        .zip(ctx.luavs)
        .map(|(p, u)| rate(LinkKind::LuavToHuav, *p, plan.huav_position, u.tx_power, ctx))
        .collect();
    let tasks = ctx
        .tasks
        .iter()
        .zip(ctx.vehicles)
        .enumerate()
        .map(|(i, (t, v))| {
            let u = plan.assignment[i];
            let direct = plan.direct[i];
            let up = if direct {
                rate(LinkKind::VehicleToHuav, v.position, plan.huav_position, v.tx_power, ctx)
            } else {
                rate(LinkKind::VehicleToLuav, v.position, plan.luav_positions[u], v.tx_power, ctx)
            };
            AllocTask {
                server: u,
                bits: t.data_bits,
                density: t.density,
                deadline: t.deadline,
                t_uplink: tx_delay(t.data_bits, up),
                relay_rate: relay[u],
                direct,
            }
        })
        .collect();
    let servers = ctx
        .luavs
        .iter()
        .zip(ctx.weights)
        .map(|(u, &w)| AllocServer { cpu_cap: u.cpu_cap, kappa: u.kappa, tx_power: u.tx_power, weight: w })
        .collect();
    AllocProblem { k: ctx.k, tasks, servers, huav_cap: ctx.huav.cpu_cap }
}

/// Moves tasks with a vanishing local share onto the direct path when that
/// meets the (scaled) deadline and is no worse for the objective.
pub fn reroute_direct(ctx: &SlotContext<'_>, plan: &mut Plan, scale: f64) {
    for i in 0..ctx.n_tasks() {
        if plan.direct[i] || plan.alpha[i] > DIRECT_ALPHA {
            continue;
        }
        let (t, v) = (&ctx.tasks[i], &ctx.vehicles[i]);
        let u = plan.assignment[i];
        let lu = &ctx.luavs[u];
        let t_direct = tx_delay(t.data_bits, rate(LinkKind::VehicleToHuav, v.position, plan.huav_position, v.tx_power, ctx));
        let t_comp = if t.cycles() == 0.0 { 0.0 } else { t.cycles() / plan.f_h[i] };
        if t_direct + t_comp > t.deadline * scale {
            continue;
        }
        let t_up = tx_delay(t.data_bits, rate(LinkKind::VehicleToLuav, v.position, plan.luav_positions[u], v.tx_power, ctx));
        let t_relay = tx_delay(t.data_bits, rate(LinkKind::LuavToHuav, plan.luav_positions[u], plan.huav_position, lu.tx_power, ctx));
        let relayed = ctx.k * (t_up + t_relay) + ctx.weights[u] * lu.tx_power * t_relay;
        if ctx.k * t_direct <= relayed {
            plan.direct[i] = true;
            plan.alpha[i] = 0.0;
            plan.f_lu[i] = 0.0;
        }
    }
}

/// L-UAV placement block at fixed allocation and H-UAV position.
pub fn luav_problem(ctx: &SlotContext<'_>, plan: &Plan, scale: f64) -> PositionProblem {
    let params = ctx.params;
    let movers = ctx
        .luavs
        .iter()
        .zip(ctx.weights)
        .map(|(u, &w)| Mover { start: u.position, reach: u.reach(params.slot_len), flight_weight: w * 0.5 * u.mass / params.slot_len })
        .collect();
    let mut links = Vec::new();
    let mut rows = Vec::new();
    for (i, (t, v)) in ctx.tasks.iter().zip(ctx.vehicles).enumerate() {
        if plan.direct[i] {
            continue;
        }
        let u = plan.assignment[i];
        let lu = &ctx.luavs[u];
        let a = plan.alpha[i];
        let up = links.len();
        links.push(Link {
            mover: u,
            peer: v.position,
            alt_diff: params.alt_l,
            bandwidth: params.bw_v2lu,
            tx_power: v.tx_power,
            bits: t.data_bits,
            weight: ctx.k,
        });
        let mut row_links = vec![up];
        if a < 1.0 {
            row_links.push(links.len());
            links.push(Link {
                mover: u,
                peer: plan.huav_position,
                alt_diff: params.alt_h - params.alt_l,
                bandwidth: params.bw_lu2hu,
                tx_power: lu.tx_power,
                bits: t.data_bits * (1.0 - a),
                weight: ctx.k + ctx.weights[u] * lu.tx_power,
            });
        }
        rows.push(DelayRow { links: row_links, constant: comp_time(t.cycles(), a, plan.f_lu[i], plan.f_h[i]), budget: t.deadline * scale });
    }
    let n = ctx.n_luavs();
    let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    PositionProblem { movers, links, rows, pairs, d_safe: params.d_safe, gamma0: params.gamma0, noise_psd: params.noise_psd, k: ctx.k }
}

/// H-UAV placement block at fixed allocation and L-UAV positions.
pub fn huav_problem(ctx: &SlotContext<'_>, plan: &Plan, scale: f64) -> PositionProblem {
    let params = ctx.params;
    let movers = vec![Mover { start: ctx.huav.position, reach: ctx.huav.reach(params.slot_len), flight_weight: 0.0 }];
    let mut links = Vec::new();
    let mut rows = Vec::new();
    for (i, (t, v)) in ctx.tasks.iter().zip(ctx.vehicles).enumerate() {
        let comp = comp_time(t.cycles(), plan.alpha[i], plan.f_lu[i], plan.f_h[i]);
        if plan.direct[i] {
            rows.push(DelayRow { links: vec![links.len()], constant: comp, budget: t.deadline * scale });
            links.push(Link {
                mover: 0,
                peer: v.position,
                alt_diff: params.alt_h,
                bandwidth: params.bw_v2hu,
                tx_power: v.tx_power,
                bits: t.data_bits,
                weight: ctx.k,
            });
            continue;
        }
        let a = plan.alpha[i];
        if a >= 1.0 {
            continue;
        }
        let u = plan.assignment[i];
        let lu = &ctx.luavs[u];
        let t_up = tx_delay(t.data_bits, rate(LinkKind::VehicleToLuav, v.position, plan.luav_positions[u], v.tx_power, ctx));
        rows.push(DelayRow { links: vec![links.len()], constant: t_up + comp, budget: t.deadline * scale });
        links.push(Link {
            mover: 0,
            peer: plan.luav_positions[u],
            alt_diff: params.alt_h - params.alt_l,
            bandwidth: params.bw_lu2hu,
            tx_power: lu.tx_power,
            bits: t.data_bits * (1.0 - a),
            weight: ctx.k + ctx.weights[u] * lu.tx_power,
        });
    }
    PositionProblem { movers, links, rows, pairs: vec![], d_safe: params.d_safe, gamma0: params.gamma0, noise_psd: params.noise_psd, k: ctx.k }
}

fn comp_time(cycles: f64, alpha: f64, f_lu: f64, f_h: f64) -> f64 {
    let a = cycles * alpha;
    let b = cycles * (1.0 - alpha);
    (if a > 0.0 { a / f_lu } else { 0.0 }) + (if b > 0.0 { b / f_h } else { 0.0 })
}

/// Solves one slot.
pub fn optimize_slot(ctx: &SlotContext<'_>, opts: &BcdOptions) -> Result<SlotDecision> {
    let mut plan = Plan::hover(ctx.luavs, ctx.huav);
    if let Some(p) = opts.fixed_huav {
        plan.huav_position = p;
    }
    let n = ctx.n_tasks();
    if n == 0 {
        let obj = slot_cost(ctx, &plan)?;
        return Ok(SlotDecision {
            matching: Matching::from_assignment(vec![], ctx.n_luavs()),
            plan,
            objective_trace: vec![obj],
            sca_traces: vec![],
            converged: true,
            deadline_scale: 1.0,
            infeasible: false,
            alloc_rounds: 0,
        });
    }
    let matching = match_vehicles(ctx);
    plan.assignment = matching.assignment.clone();
    plan.alpha = vec![0.5; n];
    plan.f_lu = vec![0.0; n];
    plan.f_h = vec![0.0; n];
    plan.direct = vec![false; n];

    let mut scale = f64::INFINITY;
    let mut current = f64::INFINITY;
    let mut trace = Vec::new();
    let mut sca_traces = Vec::new();
    let mut alloc_rounds = 0;
    let mut converged = false;
    for iter in 0..opts.max_iters {
        // allocation and routing
        let problem = allocation_problem(ctx, &plan);
        let sol = problem.solve(if iter == 0 { None } else { Some(&plan.alpha) });
        alloc_rounds += sol.iterations;
        let mut cand = plan.clone();
        cand.alpha = sol.alpha;
        cand.f_lu = sol.f_lu;
        cand.f_h = sol.f_h;
        reroute_direct(ctx, &mut cand, sol.deadline_scale);
        let obj = slot_cost(ctx, &cand)?;
        if obj <= current {
            plan = cand;
            current = obj;
            scale = sol.deadline_scale;
        }

        // L-UAV placement
        let lp = luav_problem(ctx, &plan, scale);
        let res = lp.solve_from(&plan.luav_positions);
        sca_traces.push(res.trace.clone());
        let mut cand = plan.clone();
        cand.luav_positions = res.positions;
        let obj = slot_cost(ctx, &cand)?;
        if obj <= current {
            plan = cand;
            current = obj;
        }

        // H-UAV placement
        if opts.fixed_huav.is_none() {
            let hp = huav_problem(ctx, &plan, scale);
            let res = hp.solve_from(std::slice::from_ref(&plan.huav_position));
            sca_traces.push(res.trace.clone());
            let mut cand = plan.clone();
            cand.huav_position = res.positions[0];
            let obj = slot_cost(ctx, &cand)?;
            if obj <= current {
                plan = cand;
                current = obj;
            }
        }

        let prev = trace.last().copied();
        trace.push(current);
        if let Some(prev) = prev {
            if prev - current <= opts.tol * current.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
    }
    Ok(SlotDecision {
        matching,
        plan,
        objective_trace: trace,
        sca_traces,
        converged,
        deadline_scale: scale,
        infeasible: scale > 1.0,
        alloc_rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Fleet, HUavState, LUavState, SystemParams};
    use crate::scenario::{TaskRequest, VehicleState};

    fn fleet(params: &SystemParams) -> (Vec<LUavState>, HUavState) {
        let f = Fleet::table_defaults(params.area_side);
        (f.luavs.iter().enumerate().map(|(i, s)| LUavState::from_spec(i, s)).collect(), HUavState::from_spec(&f.huav))
    }

    #[test]
    fn empty_slot_hovers() {
        let params = SystemParams::default();
        let (luavs, huav) = fleet(&params);
        let w = vec![3.0; 4];
        let ctx = SlotContext { params: &params, vehicles: &[], tasks: &[], luavs: &luavs, huav: &huav, k: 10.0, weights: &w };
        let d = optimize_slot(&ctx, &BcdOptions::default()).unwrap();
        assert_eq!(d.objective(), 0.0);
        assert!(d.matching.assignment.is_empty());
        assert_eq!(d.plan.luav_positions, luavs.iter().map(|u| u.position).collect::<Vec<_>>());
        assert_eq!(d.plan.huav_position, huav.position);
    }

    #[test]
    fn single_generous_task_converges_quickly() {
        let params = SystemParams::default();
        let (luavs, huav) = fleet(&params);
        let luavs = vec![luavs[0].clone()];
        let vs = [VehicleState { id: 0, position: Point2::new(260.0, 240.0), speed: 10.0, heading: 0.0, tx_power: 0.5 }];
        let ts = [TaskRequest { vehicle_id: 0, data_bits: 1e6, density: 10.0, deadline: 0.2 }];
        let w = vec![0.0];
        let ctx = SlotContext { params: &params, vehicles: &vs, tasks: &ts, luavs: &luavs, huav: &huav, k: 10.0, weights: &w };
        let d = optimize_slot(&ctx, &BcdOptions::default()).unwrap();
        assert!(d.converged);
        assert!(d.objective_trace.len() <= 3, "{:?}", d.objective_trace);
        for w in d.objective_trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(!d.infeasible);
    }
}
