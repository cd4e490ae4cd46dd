//! Energy-deviation queues and the drift-plus-penalty bound.

use serde::{Deserialize, Serialize};

use crate::params::{LUavState, SystemParams};
use crate::radio::{flight_energy, link_rate, los_gain};

/// Queue recursion: the backlog grows by consumption beyond harvest plus quota.
pub fn update_queue(q: f64, energy_used: f64, harvested: f64, quota: f64) -> f64 {
    (q + energy_used - harvested - quota).max(0.0)
}

/// `k * total_delay + Σ q_u E_u`.
pub fn slot_objective(k: f64, total_delay: f64, queues: &[f64], energies: &[f64]) -> f64 {
    assert_eq!(queues.len(), energies.len(), "queue and energy vectors differ in length");
    k * total_delay + queues.iter().zip(energies).map(|(q, e)| q * e).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    pub q: Vec<f64>,
    pub slot_index: usize,
}

impl QueueState {
    pub fn zeros(n: usize) -> Self {
        Self { q: vec![0.0; n], slot_index: 0 }
    }

    pub fn advance(&mut self, energies: &[f64], harvest: &[f64], quota: f64) {
        for ((q, e), h) in self.q.iter_mut().zip(energies).zip(harvest) {
            *q = update_queue(*q, *e, *h, quota);
        }
        self.slot_index += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Realised one-slot drift plus weighted delay.
    pub lhs: f64,
    pub rhs: f64,
    pub b_const: f64,
    pub e_u_max: Vec<f64>,
    pub violated: bool,
}

/// Everything the one-slot bound needs about a realised slot.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs<'a> {
    pub k: f64,
    pub total_delay: f64,
    pub q_before: &'a [f64],
    pub q_after: &'a [f64],
    pub energy: &'a [f64],
    pub harvest: &'a [f64],
    pub quota: f64,
    pub max_harvest: f64,
    pub e_u_max: &'a [f64],
}

pub fn bound_constant(e_u_max: &[f64], max_harvest: f64, quota: f64) -> f64 {
    0.5 * e_u_max.iter().map(|e| e * e + (max_harvest + quota).powi(2)).sum::<f64>()
}

/// Checks the pathwise drift-plus-penalty upper bound on a realised slot.
pub fn check_drift_bound(inp: BoundInputs<'_>) -> BoundReport {
    let b_const = bound_constant(inp.e_u_max, inp.max_harvest, inp.quota);
    let drift: f64 = inp.q_before.iter().zip(inp.q_after).map(|(q, q2)| 0.5 * (q2 * q2 - q * q)).sum();
    let penalty = inp.k * inp.total_delay;
    let lhs = drift + penalty;
    let cross: f64 = inp
        .q_before
        .iter()
        .zip(inp.energy)
        .zip(inp.harvest)
        .map(|((q, e), h)| q * (e - h - inp.quota))
        .sum();
    let rhs = b_const + penalty + cross;
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    BoundReport { lhs, rhs, b_const, e_u_max: inp.e_u_max.to_vec(), violated: lhs > rhs + 1e-9 * scale }
}

/// Constructive per-slot energy ceiling of each L-UAV: every vehicle of a
/// maximal slot served locally at full frequency and fully relayed at the
/// weakest possible relay rate, plus a full-speed flight.
pub fn energy_upper_bounds(luavs: &[LUavState], huav_speed: f64, params: &SystemParams) -> Vec<f64> {
    let v_max = params.v_count_range.max as f64;
    let d_max = params.task_bits_range.max;
    let c_max = params.density_range.max;
    let drift = (luavs.iter().map(|u| u.max_speed).fold(0.0, f64::max) + huav_speed) * params.slot_len * params.n_slots as f64;
    let horiz = std::f64::consts::SQRT_2 * params.area_side + drift;
    let alt = params.alt_h - params.alt_l;
    luavs
        .iter()
        .map(|u| {
            let gain = los_gain(horiz * horiz, alt, params.gamma0).expect("positive altitude gap");
            let r_min = link_rate(params.bw_lu2hu, u.tx_power, gain, params.noise_psd);
            let comp = u.kappa * d_max * c_max * u.cpu_cap * u.cpu_cap;
            let relay = u.tx_power * d_max / r_min;
            v_max * (comp + relay) + flight_energy(u.mass, u.max_speed * params.slot_len, params.slot_len)
        })
        .collect()
}
