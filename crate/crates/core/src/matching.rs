//! Vehicle to L-UAV association: greedy seeding followed by a switching fixed point.

use serde::{Deserialize, Serialize};

use crate::context::SlotContext;
use crate::geometry::Point2;
use crate::radio::{LinkBudget, LinkKind};

/// Association cost of one task at one L-UAV.
pub fn offload_cost(k: f64, q: f64, t_tx: f64, t_comp: f64, e_comp: f64) -> f64 {
    k * (t_tx + t_comp) + q * e_comp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// L-UAV index per vehicle, aligned with the slot's vehicle order.
    pub assignment: Vec<usize>,
    pub per_uav_load: Vec<usize>,
    /// Improvement passes performed.
    pub passes: usize,
    /// The pass cap was hit before a fixed point.
    pub capped: bool,
}

impl Matching {
    pub fn from_assignment(assignment: Vec<usize>, n_luavs: usize) -> Self {
        let mut per_uav_load = vec![0; n_luavs];
        for &u in &assignment {
            per_uav_load[u] += 1;
        }
        Self { assignment, per_uav_load, passes: 0, capped: false }
    }
}

pub const MAX_PASSES: usize = 50;

/// Uplink rates from every vehicle to every L-UAV at the previous positions.
pub struct CostTable<'c> {
    ctx: &'c SlotContext<'c>,
    /// `rates[v * U + u]`
    rates: Vec<f64>,
}

impl<'c> CostTable<'c> {
    pub fn new(ctx: &'c SlotContext<'c>) -> Self {
        Self::at_positions(ctx, &ctx.luavs.iter().map(|u| u.position).collect::<Vec<_>>())
    }

    pub fn at_positions(ctx: &'c SlotContext<'c>, positions: &[Point2]) -> Self {
        let mut rates = Vec::with_capacity(ctx.n_tasks() * ctx.n_luavs());
        for v in ctx.vehicles {
            for p in positions {
                let link = LinkBudget::between(LinkKind::VehicleToLuav, v.position, *p, v.tx_power, ctx.params)
                    .expect("vehicle and L-UAV altitudes differ");
                rates.push(link.rate);
            }
        }
        Self { ctx, rates }
    }

    /// Cost of serving vehicle `v` entirely at L-UAV `u` running at `f` Hz.
    pub fn cost(&self, v: usize, u: usize, f: f64) -> f64 {
        let t = &self.ctx.tasks[v];
        let lu = &self.ctx.luavs[u];
        let cycles = t.cycles();
        let t_tx = crate::radio::tx_delay(t.data_bits, self.rates[v * self.ctx.n_luavs() + u]);
        let t_comp = if cycles == 0.0 { 0.0 } else { cycles / f };
        offload_cost(self.ctx.k, self.ctx.weights[u], t_tx, t_comp, lu.kappa * cycles * f * f)
    }

    /// Lowest-cost L-UAV for `v` given per-UAV frequencies; ties go to the lowest index.
    fn argmin(&self, v: usize, freqs: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (u, &f) in freqs.iter().enumerate() {
            let c = self.cost(v, u, f);
            if c < best.1 {
                best = (u, c);
            }
        }
        best
    }

    fn even_split(&self, loads: &[usize]) -> Vec<f64> {
        self.ctx.luavs.iter().zip(loads).map(|(u, &n)| u.cpu_cap / n.max(1) as f64).collect()
    }

    /// Total cost of an assignment with each L-UAV's capacity split evenly.
    pub fn total_cost(&self, m: &Matching) -> f64 {
        let freqs = self.even_split(&m.per_uav_load);
        m.assignment.iter().enumerate().map(|(v, &u)| self.cost(v, u, freqs[u])).sum()
    }
}

/// Each vehicle to its cheapest L-UAV assuming the whole CPU is available.
pub fn greedy_match(table: &CostTable<'_>) -> Matching {
    let ctx = table.ctx;
    let full: Vec<f64> = ctx.luavs.iter().map(|u| u.cpu_cap).collect();
    let assignment = (0..ctx.n_tasks()).map(|v| table.argmin(v, &full).0).collect();
    Matching::from_assignment(assignment, ctx.n_luavs())
}

/// One improvement pass: split each L-UAV's capacity evenly over its current
/// load, then move every vehicle (ascending order) to a strictly cheaper
/// L-UAV if one exists. Returns the number of switches.
pub fn improve_pass(table: &CostTable<'_>, m: &mut Matching) -> usize {
    let freqs = table.even_split(&m.per_uav_load);
    let mut switches = 0;
    for v in 0..m.assignment.len() {
        let u = m.assignment[v];
        let here = table.cost(v, u, freqs[u]);
        let (to, c) = table.argmin(v, &freqs);
        if to != u && c < here {
            m.assignment[v] = to;
            m.per_uav_load[u] -= 1;
            m.per_uav_load[to] += 1;
            switches += 1;
        }
    }
    m.passes += 1;
    switches
}

/// Runs improvement passes until one makes no switch. After `MAX_PASSES`
/// the cheapest matching seen is returned with `capped` set.
pub fn improve_match(table: &CostTable<'_>, start: Matching) -> Matching {
    let mut current = start;
    let mut best = current.clone();
    let mut best_cost = table.total_cost(&best);
    while current.passes < MAX_PASSES {
        if improve_pass(table, &mut current) == 0 {
            return current;
        }
        let cost = table.total_cost(&current);
        if cost < best_cost {
            best_cost = cost;
            best = current.clone();
        }
    }
    best.passes = current.passes;
    best.capped = true;
    best
}

/// Two-stage association for one slot.
pub fn match_vehicles(ctx: &SlotContext<'_>) -> Matching {
    let table = CostTable::new(ctx);
    improve_match(&table, greedy_match(&table))
}
