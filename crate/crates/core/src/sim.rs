//! Episode driver: queue bookkeeping, policy dispatch, metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bcd::{optimize_slot, BcdOptions, SlotDecision};
use crate::context::SlotContext;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::lyapunov::{check_drift_bound, energy_upper_bounds, update_queue, BoundInputs, BoundReport};
use crate::params::{Fleet, HUavState, LUavState, SystemParams};
use crate::radio::{evaluate_slot, LUavEnergyBreakdown, TaskDelayBreakdown};
use crate::scenario::{generate_episode, SlotInputs};

/// Guard constant in the delay-to-deviation ratio, J.
pub const DEDR_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyKind {
    /// Lyapunov control with optimised H-UAV trajectory.
    Latus,
    /// Lyapunov control with the H-UAV on a fixed path.
    FtLatus,
    /// Delay minimisation ignoring L-UAV energy.
    DelayOnly,
    /// Delay minimisation under a hard per-slot energy budget.
    PerSlotCap,
    /// L-UAV energy minimisation subject to deadlines.
    EnergyCentric,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] =
        [PolicyKind::Latus, PolicyKind::FtLatus, PolicyKind::DelayOnly, PolicyKind::PerSlotCap, PolicyKind::EnergyCentric];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Latus => "LATUS",
            PolicyKind::FtLatus => "FT_LATUS",
            PolicyKind::DelayOnly => "DELAY_ONLY",
            PolicyKind::PerSlotCap => "PER_SLOT_CAP",
            PolicyKind::EnergyCentric => "ENERGY_CENTRIC",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| format!("unknown policy `{s}` (expected one of LATUS, FT_LATUS, DELAY_ONLY, PER_SLOT_CAP, ENERGY_CENTRIC)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub kind: PolicyKind,
    /// Closed H-UAV path for the fixed-trajectory policy.
    pub waypoints: Vec<Point2>,
    /// Delay weight of the energy-centric policy.
    pub energy_centric_k: f64,
    /// Dual-ascent rounds of the per-slot budget policy.
    pub cap_rounds: usize,
}

impl Policy {
    pub fn new(kind: PolicyKind, params: &SystemParams) -> Self {
        let a = params.area_side;
        Self { kind, waypoints: vec![Point2::new(0.0, 0.0), Point2::new(a, a)], energy_centric_k: 1e-6, cap_rounds: 6 }
    }

    pub fn violations(&self, params: &SystemParams) -> Vec<String> {
        let mut out = Vec::new();
        if self.kind == PolicyKind::FtLatus {
            if self.waypoints.len() < 2 {
                out.push("fixed trajectory needs at least two waypoints".into());
            }
            let a = params.area_side;
            if self.waypoints.iter().any(|p| !(0.0..=a).contains(&p.x) || !(0.0..=a).contains(&p.y)) {
                out.push("fixed-trajectory waypoints must lie inside the area".into());
            }
        }
        if !(self.energy_centric_k > 0.0) {
            out.push("energy-centric delay weight must be positive".into());
        }
        out
    }
}

/// Constant-speed traversal of a closed polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPath {
    points: Vec<Point2>,
    /// cumulative arc length at each vertex; last entry is the loop length
    arcs: Vec<f64>,
    start_arc: f64,
    step: f64,
}

impl FixedPath {
    /// Starts at the path point nearest `origin` and covers the loop once in
    /// `n_slots` slots, or as much as `max_speed` allows.
    pub fn new(waypoints: &[Point2], origin: Point2, max_speed: f64, slot_len: f64, n_slots: usize) -> Self {
        let mut points = waypoints.to_vec();
        points.push(waypoints[0]);
        let mut arcs = vec![0.0];
        for w in points.windows(2) {
            arcs.push(arcs.last().unwrap() + w[0].dist(w[1]));
        }
        let length = *arcs.last().unwrap();
        let mut start_arc = 0.0;
        let mut best = f64::INFINITY;
        for (i, w) in points.windows(2).enumerate() {
            let seg = w[1] - w[0];
            let len_sq = seg.norm_sq();
            let t = if len_sq > 0.0 { ((origin - w[0]).dot(seg) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
            let d = origin.dist(w[0] + seg * t);
            if d < best {
                best = d;
                start_arc = arcs[i] + t * len_sq.sqrt();
            }
        }
        let speed = (length / (n_slots.max(1) as f64 * slot_len)).min(max_speed);
        Self { points, arcs, start_arc, step: speed * slot_len }
    }

    pub fn at_arc(&self, arc: f64) -> Point2 {
        let length = *self.arcs.last().unwrap();
        if length == 0.0 {
            return self.points[0];
        }
        let s = arc.rem_euclid(length);
        let i = self.arcs.partition_point(|&a| a <= s).clamp(1, self.arcs.len() - 1) - 1;
        let seg_len = self.arcs[i + 1] - self.arcs[i];
        let t = if seg_len > 0.0 { (s - self.arcs[i]) / seg_len } else { 0.0 };
        self.points[i] + (self.points[i + 1] - self.points[i]) * t
    }

    /// Position at the end of slot `n`.
    pub fn position(&self, n: usize) -> Point2 {
        self.at_arc(self.start_arc + (n + 1) as f64 * self.step)
    }

    pub fn start(&self) -> Point2 {
        self.at_arc(self.start_arc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub slot: usize,
    pub luavs: Vec<LUavState>,
    pub huav: HUavState,
}

impl SimState {
    pub fn new(fleet: &Fleet) -> Self {
        Self {
            slot: 0,
            luavs: fleet.luavs.iter().enumerate().map(|(i, s)| LUavState::from_spec(i, s)).collect(),
            huav: HUavState::from_spec(&fleet.huav),
        }
    }

    pub fn queues(&self) -> Vec<f64> {
        self.luavs.iter().map(|u| u.queue).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMetrics {
    pub slot: usize,
    pub n_tasks: usize,
    pub delays: Vec<TaskDelayBreakdown>,
    pub deadlines: Vec<f64>,
    pub total_delay: f64,
    pub mean_task_delay: f64,
    pub luav_energy: Vec<LUavEnergyBreakdown>,
    pub harvest: Vec<f64>,
    pub q_before: Vec<f64>,
    pub q_after: Vec<f64>,
    /// Tasks whose delay exceeds the original deadline.
    pub deadline_violations: usize,
    /// Deadlines had to be relaxed in this slot.
    pub infeasible: bool,
    pub deadline_scale: f64,
    pub direct_tasks: usize,
    pub bcd_trace: Vec<f64>,
    pub sca_traces: Vec<Vec<f64>>,
    pub bcd_converged: bool,
    pub matching_capped: bool,
    pub bound: BoundReport,
    pub luav_positions: Vec<Point2>,
    pub huav_position: Point2,
    pub speed_violations: usize,
    pub safety_violations: usize,
    pub min_pair_distance: f64,
}

impl SlotMetrics {
    pub fn mean_relay_energy(&self) -> f64 {
        mean(self.luav_energy.iter().map(|e| e.e_relay))
    }

    pub fn mean_queue_after(&self) -> f64 {
        mean(self.q_after.iter().copied())
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 { 0.0 } else { s / n as f64 }
}

/// Drives one episode for one policy.
pub struct Simulator<'a> {
    pub params: &'a SystemParams,
    pub policy: &'a Policy,
    pub state: SimState,
    e_max: Vec<f64>,
    path: Option<FixedPath>,
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a SystemParams, fleet: &Fleet, policy: &'a Policy) -> Result<Self> {
        let mut errs = params.violations();
        errs.extend(fleet.violations(params));
        errs.extend(policy.violations(params));
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        let mut state = SimState::new(fleet);
        let path = (policy.kind == PolicyKind::FtLatus).then(|| {
            FixedPath::new(&policy.waypoints, state.huav.position, state.huav.max_speed, params.slot_len, params.n_slots)
        });
        if let Some(p) = &path {
            state.huav.position = p.start();
        }
        let e_max = energy_upper_bounds(&state.luavs, state.huav.max_speed, params);
        Ok(Self { params, policy, state, e_max, path })
    }

    fn context<'b>(&'b self, inputs: &'b SlotInputs, k: f64, weights: &'b [f64]) -> SlotContext<'b> {
        SlotContext {
            params: self.params,
            vehicles: &inputs.vehicles,
            tasks: &inputs.tasks,
            luavs: &self.state.luavs,
            huav: &self.state.huav,
            k,
            weights,
        }
    }

    fn decide(&self, inputs: &SlotInputs) -> Result<SlotDecision> {
        let params = self.params;
        let queues = self.state.queues();
        let zeros = vec![0.0; queues.len()];
        let ones = vec![1.0; queues.len()];
        let mut opts = BcdOptions::default();
        if let Some(p) = &self.path {
            opts.fixed_huav = Some(p.position(self.state.slot));
        }
        match self.policy.kind {
            PolicyKind::Latus | PolicyKind::FtLatus => optimize_slot(&self.context(inputs, params.control_k, &queues), &opts),
            PolicyKind::DelayOnly => optimize_slot(&self.context(inputs, params.control_k, &zeros), &opts),
            PolicyKind::EnergyCentric => optimize_slot(&self.context(inputs, self.policy.energy_centric_k, &ones), &opts),
            PolicyKind::PerSlotCap => self.decide_capped(inputs, &opts),
        }
    }

    /// Dual ascent on per-L-UAV energy prices until every L-UAV fits its
    /// budget `E_q + e_u`; keeps the decision with the least total overrun.
    fn decide_capped(&self, inputs: &SlotInputs, opts: &BcdOptions) -> Result<SlotDecision> {
        let params = self.params;
        let n = self.state.luavs.len();
        let budget: Vec<f64> = inputs.harvest.iter().map(|e| params.energy_quota + e).collect();
        let mut prices = vec![0.0; n];
        let mut best: Option<(f64, SlotDecision)> = None;
        for _ in 0..self.policy.cap_rounds.max(1) {
            let ctx = SlotContext {
                params,
                vehicles: &inputs.vehicles,
                tasks: &inputs.tasks,
                luavs: &self.state.luavs,
                huav: &self.state.huav,
                k: params.control_k,
                weights: &prices,
            };
            let d = optimize_slot(&ctx, opts)?;
            let ev = evaluate_slot(&inputs.vehicles, &inputs.tasks, &d.plan, &self.state.luavs, &self.state.huav, params)?;
            let over: Vec<f64> = ev.luav_energy.iter().zip(&budget).map(|(e, b)| (e.total - b).max(0.0)).collect();
            let total_over: f64 = over.iter().sum();
            if best.as_ref().is_none_or(|(b, _)| total_over < *b) {
                best = Some((total_over, d));
            }
            if total_over == 0.0 {
                break;
            }
            for (p, o) in prices.iter_mut().zip(&over) {
                if *o > 0.0 {
                    *p = if *p == 0.0 { params.control_k.max(1e-3) } else { *p * 10.0 };
                }
            }
        }
        Ok(best.expect("at least one round").1)
    }

    /// Decides, evaluates and advances one slot.
    pub fn step(&mut self, inputs: &SlotInputs) -> Result<SlotMetrics> {
        let params = self.params;
        let q_before = self.state.queues();
        let decision = self.decide(inputs)?;
        let plan = &decision.plan;
        let ev = evaluate_slot(&inputs.vehicles, &inputs.tasks, plan, &self.state.luavs, &self.state.huav, params)?;
        let energies: Vec<f64> = ev.luav_energy.iter().map(|e| e.total).collect();
        let q_after: Vec<f64> = q_before
            .iter()
            .zip(&energies)
            .zip(&inputs.harvest)
            .map(|((q, e), h)| update_queue(*q, *e, *h, params.energy_quota))
            .collect();
        let bound = check_drift_bound(BoundInputs {
            k: params.control_k,
            total_delay: ev.total_delay,
            q_before: &q_before,
            q_after: &q_after,
            energy: &energies,
            harvest: &inputs.harvest,
            quota: params.energy_quota,
            max_harvest: params.max_harvest,
            e_u_max: &self.e_max,
        });
        let deadlines: Vec<f64> = inputs.tasks.iter().map(|t| t.deadline).collect();
        let deadline_violations = ev.delays.iter().zip(&deadlines).filter(|(d, dl)| d.total > **dl * (1.0 + 1e-9)).count();
        let mut speed_violations = 0;
        for (u, p) in self.state.luavs.iter().zip(&plan.luav_positions) {
            if u.position.dist(*p) > u.reach(params.slot_len) * (1.0 + 1e-9) {
                speed_violations += 1;
            }
        }
        if self.state.huav.position.dist(plan.huav_position) > self.state.huav.reach(params.slot_len) * (1.0 + 1e-9) {
            speed_violations += 1;
        }
        let mut min_pair_distance = f64::INFINITY;
        let mut safety_violations = 0;
        for i in 0..plan.luav_positions.len() {
            for j in i + 1..plan.luav_positions.len() {
                let d = plan.luav_positions[i].dist(plan.luav_positions[j]);
                min_pair_distance = min_pair_distance.min(d);
                if d < params.d_safe * (1.0 - 1e-12) {
                    safety_violations += 1;
                }
            }
        }
        let n_tasks = inputs.tasks.len();
        let metrics = SlotMetrics {
            slot: self.state.slot,
            n_tasks,
            mean_task_delay: if n_tasks == 0 { 0.0 } else { ev.total_delay / n_tasks as f64 },
            total_delay: ev.total_delay,
            delays: ev.delays,
            deadlines,
            luav_energy: ev.luav_energy,
            harvest: inputs.harvest.clone(),
            q_before,
            q_after: q_after.clone(),
            deadline_violations,
            infeasible: decision.infeasible,
            deadline_scale: decision.deadline_scale,
            direct_tasks: plan.direct.iter().filter(|d| **d).count(),
            bcd_trace: decision.objective_trace.clone(),
            sca_traces: decision.sca_traces.clone(),
            bcd_converged: decision.converged,
            matching_capped: decision.matching.capped,
            bound,
            luav_positions: plan.luav_positions.clone(),
            huav_position: plan.huav_position,
            speed_violations,
            safety_violations,
            min_pair_distance,
        };
        for ((u, p), q) in self.state.luavs.iter_mut().zip(&plan.luav_positions).zip(q_after) {
            u.position = *p;
            u.queue = q;
        }
        self.state.huav.position = plan.huav_position;
        self.state.slot += 1;
        Ok(metrics)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_slots: usize,
    /// Time average of the per-slot mean task delay, s.
    pub avg_task_delay: f64,
    /// Time average of the per-slot total delay, s.
    pub avg_total_delay: f64,
    /// Time average of the per-slot mean L-UAV relay (transmit) energy, J.
    pub avg_tx_energy: f64,
    /// Time average of the per-slot mean L-UAV energy, J.
    pub avg_luav_energy: f64,
    /// Per L-UAV time average of consumption minus harvest, J.
    pub avg_net_energy: Vec<f64>,
    /// Σ_u Q_u after the last slot.
    pub final_queue_sum: f64,
    pub queue_max: f64,
    pub dedr: Vec<f64>,
    pub dedr_std: f64,
    pub deadline_violations: usize,
    /// Deadline misses on slots not flagged as relaxed.
    pub unflagged_deadline_violations: usize,
    pub infeasible_slots: usize,
    pub bound_violations: usize,
    pub speed_violations: usize,
    pub safety_violations: usize,
    pub bcd_iterations_mean: f64,
    pub bcd_iterations_max: usize,
    pub bcd_converged_slots: usize,
}

/// Delay-to-deviation ratio per slot; `None` averages cumulatively, `Some(w)`
/// over the trailing `w` slots.
pub fn compute_dedr(slots: &[SlotMetrics], window: Option<usize>) -> Vec<f64> {
    let delays: Vec<f64> = slots.iter().map(|s| s.mean_task_delay).collect();
    let devs: Vec<f64> = slots.iter().map(SlotMetrics::mean_queue_after).collect();
    dedr_series(&delays, &devs, window)
}

pub fn dedr_series(delays: &[f64], deviations: &[f64], window: Option<usize>) -> Vec<f64> {
    let mut out = Vec::with_capacity(delays.len());
    for n in 0..delays.len() {
        let lo = match window {
            None => 0,
            Some(w) => (n + 1).saturating_sub(w.max(1)),
        };
        let len = (n + 1 - lo) as f64;
        let d = delays[lo..=n].iter().sum::<f64>() / len;
        let q = deviations[lo..=n].iter().sum::<f64>() / len;
        out.push(d / (q + DEDR_EPS));
    }
    out
}

pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn summarize(slots: &[SlotMetrics]) -> RunSummary {
    let n = slots.len();
    let avg = |f: &dyn Fn(&SlotMetrics) -> f64| if n == 0 { 0.0 } else { slots.iter().map(f).sum::<f64>() / n as f64 };
    let n_uav = slots.first().map_or(0, |s| s.luav_energy.len());
    let avg_net_energy = (0..n_uav)
        .map(|u| avg(&|s: &SlotMetrics| s.luav_energy[u].total - s.harvest[u]))
        .collect();
    let dedr = compute_dedr(slots, None);
    let iters: Vec<usize> = slots.iter().map(|s| s.bcd_trace.len()).collect();
    RunSummary {
        n_slots: n,
        avg_task_delay: avg(&|s| s.mean_task_delay),
        avg_total_delay: avg(&|s| s.total_delay),
        avg_tx_energy: avg(&|s| s.mean_relay_energy()),
        avg_luav_energy: avg(&|s| mean(s.luav_energy.iter().map(|e| e.total))),
        avg_net_energy,
        final_queue_sum: slots.last().map_or(0.0, |s| s.q_after.iter().sum()),
        queue_max: slots.iter().flat_map(|s| s.q_after.iter().copied()).fold(0.0, f64::max),
        dedr_std: std_dev(&dedr),
        dedr,
        deadline_violations: slots.iter().map(|s| s.deadline_violations).sum(),
        unflagged_deadline_violations: slots.iter().filter(|s| !s.infeasible).map(|s| s.deadline_violations).sum(),
        infeasible_slots: slots.iter().filter(|s| s.infeasible).count(),
        bound_violations: slots.iter().filter(|s| s.bound.violated).count(),
        speed_violations: slots.iter().map(|s| s.speed_violations).sum(),
        safety_violations: slots.iter().map(|s| s.safety_violations).sum(),
        bcd_iterations_mean: if n == 0 { 0.0 } else { iters.iter().sum::<usize>() as f64 / n as f64 },
        bcd_iterations_max: iters.iter().copied().max().unwrap_or(0),
        bcd_converged_slots: slots.iter().filter(|s| s.bcd_converged).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub policy: PolicyKind,
    pub slots: Vec<SlotMetrics>,
    pub summary: RunSummary,
}

/// Runs a whole episode from a seed.
pub fn run(seed: u64, policy: &Policy, params: &SystemParams, fleet: &Fleet) -> Result<RunTrace> {
    let mut sim = Simulator::new(params, fleet, policy)?;
    let episode = generate_episode(seed, params, fleet.luavs.len());
    let mut slots = Vec::with_capacity(episode.len());
    for inputs in &episode {
        slots.push(sim.step(inputs)?);
    }
    let summary = summarize(&slots);
    Ok(RunTrace { seed, policy: policy.kind, slots, summary })
}
