//! Link budgets, delays and energies of the three-tier offloading path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::params::{HUavState, LUavState, SystemParams};
use crate::scenario::{TaskRequest, VehicleState};

/// Line-of-sight channel gain for a link with the given horizontal squared
/// distance and altitude difference.
pub fn los_gain(horiz_dist_sq: f64, alt_diff: f64, gamma0: f64) -> Result<f64> {
    let d2 = alt_diff * alt_diff + horiz_dist_sq;
    if d2 <= 0.0 {
        return Err(Error::ZeroDistance);
    }
    Ok(gamma0 / d2)
}

/// Shannon rate in bit/s.
pub fn link_rate(bandwidth: f64, tx_power: f64, gain: f64, noise_psd: f64) -> f64 {
    bandwidth * (tx_power * gain / (noise_psd * bandwidth)).ln_1p() / std::f64::consts::LN_2
}

pub fn tx_delay(bits: f64, rate: f64) -> f64 {
    if bits == 0.0 { 0.0 } else { bits / rate }
}

pub fn relay_delay(bits: f64, alpha: f64, rate: f64) -> f64 {
    tx_delay(bits * (1.0 - alpha), rate)
}

pub fn comp_delay(bits: f64, density: f64, fraction: f64, cpu_hz: f64) -> Result<f64> {
    let work = bits * density * fraction;
    if work == 0.0 {
        return Ok(0.0);
    }
    if cpu_hz <= 0.0 {
        return Err(Error::UnservedWork { fraction });
    }
    Ok(work / cpu_hz)
}

pub fn comp_energy(bits: f64, density: f64, fraction: f64, cpu_hz: f64, kappa: f64) -> f64 {
    kappa * bits * density * fraction * cpu_hz * cpu_hz
}

pub fn relay_energy(tx_power: f64, relay_delay: f64) -> f64 {
    tx_power * relay_delay
}

pub fn flight_energy(mass: f64, dist: f64, slot_len: f64) -> f64 {
    let speed = dist / slot_len;
    0.5 * mass * slot_len * speed * speed
}

/// Which kind of link; fixes altitude difference, bandwidth and transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    VehicleToLuav,
    LuavToHuav,
    VehicleToHuav,
}

impl LinkKind {
    pub fn alt_diff(self, params: &SystemParams) -> f64 {
        match self {
            LinkKind::VehicleToLuav => params.alt_l,
            LinkKind::LuavToHuav => params.alt_h - params.alt_l,
            LinkKind::VehicleToHuav => params.alt_h,
        }
    }

    pub fn bandwidth(self, params: &SystemParams) -> f64 {
        match self {
            LinkKind::VehicleToLuav => params.bw_v2lu,
            LinkKind::LuavToHuav => params.bw_lu2hu,
            LinkKind::VehicleToHuav => params.bw_v2hu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub gain: f64,
    pub rate: f64,
    pub bandwidth: f64,
    pub tx_power: f64,
}

impl LinkBudget {
    pub fn between(kind: LinkKind, a: Point2, b: Point2, tx_power: f64, params: &SystemParams) -> Result<Self> {
        let gain = los_gain(a.dist_sq(b), kind.alt_diff(params), params.gamma0)?;
        let bandwidth = kind.bandwidth(params);
        Ok(Self { gain, rate: link_rate(bandwidth, tx_power, gain, params.noise_psd), bandwidth, tx_power })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskDelayBreakdown {
    pub t_v2lu: f64,
    pub t_lu_comp: f64,
    pub t_lu2hu: f64,
    pub t_h_comp: f64,
    pub t_v2hu_direct: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LUavEnergyBreakdown {
    pub e_comp: f64,
    pub e_relay: f64,
    pub e_flight: f64,
    pub total: f64,
}

/// The decision variables of one slot, as consumed by the evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    /// Matched L-UAV per task (same order as the task list).
    pub assignment: Vec<usize>,
    /// Fraction of each task computed on its L-UAV.
    pub alpha: Vec<f64>,
    /// L-UAV CPU frequency per task, Hz.
    pub f_lu: Vec<f64>,
    /// H-UAV CPU frequency per task, Hz.
    pub f_h: Vec<f64>,
    /// Tasks sent straight to the H-UAV.
    pub direct: Vec<bool>,
    pub luav_positions: Vec<Point2>,
    pub huav_position: Point2,
}

impl Plan {
    /// Everyone hovers and nothing is served; valid only for an empty slot.
    pub fn hover(luavs: &[LUavState], huav: &HUavState) -> Self {
        Self {
            assignment: Vec::new(),
            alpha: Vec::new(),
            f_lu: Vec::new(),
            f_h: Vec::new(),
            direct: Vec::new(),
            luav_positions: luavs.iter().map(|u| u.position).collect(),
            huav_position: huav.position,
        }
    }

    /// Structural consistency against the slot's tasks and fleet.
    pub fn check(&self, n_tasks: usize, n_luavs: usize) -> Result<()> {
        let lens = [self.assignment.len(), self.alpha.len(), self.f_lu.len(), self.f_h.len(), self.direct.len()];
        if lens.iter().any(|&l| l != n_tasks) {
            return Err(Error::InconsistentDecision(format!("per-task vectors have lengths {lens:?}, expected {n_tasks}")));
        }
        if self.luav_positions.len() != n_luavs {
            return Err(Error::InconsistentDecision(format!(
                "{} L-UAV positions for {n_luavs} L-UAVs",
                self.luav_positions.len()
            )));
        }
        for (i, &u) in self.assignment.iter().enumerate() {
            if u >= n_luavs {
                return Err(Error::InconsistentDecision(format!("task {i} matched to missing L-UAV {u}")));
            }
            let a = self.alpha[i];
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InconsistentDecision(format!("task {i} has split ratio {a}")));
            }
            if !(self.f_lu[i] >= 0.0 && self.f_h[i] >= 0.0) {
                return Err(Error::InconsistentDecision(format!("task {i} has a negative frequency")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEvaluation {
    pub delays: Vec<TaskDelayBreakdown>,
    /// Computation energy spent on each task by its L-UAV.
    pub task_comp_energy: Vec<f64>,
    /// Relay energy spent on each task by its L-UAV.
    pub task_relay_energy: Vec<f64>,
    pub luav_energy: Vec<LUavEnergyBreakdown>,
    pub total_delay: f64,
}

impl SlotEvaluation {
    /// Drift-plus-penalty slot objective for the given queue weights.
    pub fn objective(&self, k: f64, queues: &[f64]) -> f64 {
        k * self.total_delay + queues.iter().zip(&self.luav_energy).map(|(q, e)| q * e.total).sum::<f64>()
    }
}

/// Delays and energies realised by `plan` in this slot.
pub fn evaluate_slot(
    vehicles: &[VehicleState],
    tasks: &[TaskRequest],
    plan: &Plan,
    luavs: &[LUavState],
    _huav: &HUavState,
    params: &SystemParams,
) -> Result<SlotEvaluation> {
    if vehicles.len() != tasks.len() {
        return Err(Error::InconsistentDecision(format!("{} vehicles but {} tasks", vehicles.len(), tasks.len())));
    }
    plan.check(tasks.len(), luavs.len())?;
    let mut luav_energy: Vec<LUavEnergyBreakdown> = luavs
        .iter()
        .zip(&plan.luav_positions)
        .map(|(u, p)| LUavEnergyBreakdown {
            e_flight: flight_energy(u.mass, u.position.dist(*p), params.slot_len),
            ..Default::default()
        })
        .collect();
    let relay_rates = plan
        .luav_positions
        .iter()
        .zip(luavs)
        .map(|(p, u)| LinkBudget::between(LinkKind::LuavToHuav, *p, plan.huav_position, u.tx_power, params).map(|l| l.rate))
        .collect::<Result<Vec<_>>>()?;
    let mut delays = Vec::with_capacity(tasks.len());
    let mut task_comp_energy = Vec::with_capacity(tasks.len());
    let mut task_relay_energy = Vec::with_capacity(tasks.len());
    for (i, (v, t)) in vehicles.iter().zip(tasks).enumerate() {
        if plan.direct[i] {
            let link = LinkBudget::between(LinkKind::VehicleToHuav, v.position, plan.huav_position, v.tx_power, params)?;
            let t_v2hu_direct = tx_delay(t.data_bits, link.rate);
            let t_h_comp = comp_delay(t.data_bits, t.density, 1.0, plan.f_h[i])?;
            delays.push(TaskDelayBreakdown { t_v2hu_direct, t_h_comp, total: t_v2hu_direct + t_h_comp, ..Default::default() });
            task_comp_energy.push(0.0);
            task_relay_energy.push(0.0);
            continue;
        }
        let u = plan.assignment[i];
        let lu = &luavs[u];
        let a = plan.alpha[i];
        let up = LinkBudget::between(LinkKind::VehicleToLuav, v.position, plan.luav_positions[u], v.tx_power, params)?;
        let d = TaskDelayBreakdown {
            t_v2lu: tx_delay(t.data_bits, up.rate),
            t_lu_comp: comp_delay(t.data_bits, t.density, a, plan.f_lu[i])?,
            t_lu2hu: relay_delay(t.data_bits, a, relay_rates[u]),
            t_h_comp: comp_delay(t.data_bits, t.density, 1.0 - a, plan.f_h[i])?,
            t_v2hu_direct: 0.0,
            total: 0.0,
        };
        let d = TaskDelayBreakdown { total: d.t_v2lu + d.t_lu_comp + d.t_lu2hu + d.t_h_comp, ..d };
        let ec = comp_energy(t.data_bits, t.density, a, plan.f_lu[i], lu.kappa);
        let er = relay_energy(lu.tx_power, d.t_lu2hu);
        luav_energy[u].e_comp += ec;
        luav_energy[u].e_relay += er;
        delays.push(d);
        task_comp_energy.push(ec);
        task_relay_energy.push(er);
    }
    for e in &mut luav_energy {
        e.total = e.e_comp + e.e_relay + e.e_flight;
    }
    let total_delay = delays.iter().map(|d| d.total).sum();
    Ok(SlotEvaluation { delays, task_comp_energy, task_relay_energy, luav_energy, total_delay })
}
