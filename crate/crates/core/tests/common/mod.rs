//! Brute-force reference solvers shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use uavmec_core::allocator::{AllocProblem, AllocServer, AllocTask};
use uavmec_core::params::SystemParams;
use uavmec_core::trajectory::{Link, Mover, PositionProblem};
use uavmec_core::Point2;

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Random allocation instance with up to `max_tasks` tasks on each of `n_servers` L-UAVs.
pub fn random_alloc_problem<R: Rng>(rng: &mut R, n_servers: usize, max_tasks: usize, loose: bool) -> AllocProblem {
    let servers = (0..n_servers)
        .map(|_| AllocServer {
            cpu_cap: 1e10,
            kappa: 1e-27,
            tx_power: 1.0,
            weight: if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..5.0) },
        })
        .collect();
    let mut tasks = Vec::new();
    for s in 0..n_servers {
        for _ in 0..rng.gen_range(1..=max_tasks) {
            tasks.push(AllocTask {
                server: s,
                bits: rng.gen_range(1e6..1e7),
                density: rng.gen_range(10.0..100.0),
                deadline: if loose { 100.0 } else { rng.gen_range(0.05..0.2) },
                t_uplink: rng.gen_range(0.01..0.05),
                relay_rate: rng.gen_range(5e7..3e8),
                direct: false,
            });
        }
    }
    AllocProblem { k: rng.gen_range(0.5..100.0), tasks, servers, huav_cap: 5e10 }
}

/// Minimum of `Σ h_i(k_i)` over integer grids with `Σ k_i ≤ steps`, where
/// `h_i(k)` is the cost of giving `k` grid units to item `i`.
pub fn simplex_grid_min(costs: &[Vec<f64>], steps: usize) -> f64 {
    // best[m]: min cost of the items so far using exactly m units
    let mut best = vec![f64::INFINITY; steps + 1];
    best[0] = 0.0;
    for c in costs {
        let mut next = vec![f64::INFINITY; steps + 1];
        for (m, &base) in best.iter().enumerate() {
            if !base.is_finite() {
                continue;
            }
            for k in 0..=steps - m {
                next[m + k] = next[m + k].min(base + c[k]);
            }
        }
        best = next;
    }
    best.into_iter().fold(f64::INFINITY, f64::min)
}

/// Grid optimum of the frequency step at fixed split, deadlines ignored
/// (instances built with loose deadlines), resolution `1e-3` of each capacity.
pub fn f_step_grid_oracle(p: &AllocProblem, alpha: &[f64]) -> f64 {
    const STEPS: usize = 1000;
    let mut total = 0.0;
    let constant: f64 = p
        .tasks
        .iter()
        .zip(alpha)
        .map(|(t, a)| {
            let relay = t.bits * (1.0 - a) / t.relay_rate;
            p.k * (t.t_uplink + relay) + p.servers[t.server].weight * p.servers[t.server].tx_power * relay
        })
        .sum();
    total += constant;
    for (u, sv) in p.servers.iter().enumerate() {
        let costs: Vec<Vec<f64>> = p
            .tasks
            .iter()
            .zip(alpha)
            .filter(|(t, _)| t.server == u)
            .map(|(t, a)| {
                let work = t.bits * t.density * a;
                (0..=STEPS)
                    .map(|k| {
                        let f = sv.cpu_cap * k as f64 / STEPS as f64;
                        if work == 0.0 {
                            0.0
                        } else if f == 0.0 {
                            f64::INFINITY
                        } else {
                            p.k * work / f + sv.weight * sv.kappa * work * f * f
                        }
                    })
                    .collect()
            })
            .collect();
        if !costs.is_empty() {
            total += simplex_grid_min(&costs, STEPS);
        }
    }
    let costs: Vec<Vec<f64>> = p
        .tasks
        .iter()
        .zip(alpha)
        .map(|(t, a)| {
            let work = t.bits * t.density * (1.0 - a);
            (0..=STEPS)
                .map(|k| {
                    let f = p.huav_cap * k as f64 / STEPS as f64;
                    if work == 0.0 {
                        0.0
                    } else if f == 0.0 {
                        f64::INFINITY
                    } else {
                        p.k * work / f
                    }
                })
                .collect()
        })
        .collect();
    total + simplex_grid_min(&costs, STEPS)
}

/// Deadline-feasible split interval from the affine delay, derived from the
/// delays at the two ends of [0, 1].
pub fn alpha_interval_oracle(p: &AllocProblem, i: usize, f_lu: f64, f_h: f64, scale: f64) -> Option<(f64, f64)> {
    let budget = p.tasks[i].deadline * scale;
    let d0 = p.task_delay(i, 0.0, f_lu, f_h);
    let d1 = p.task_delay(i, 1.0, f_lu, f_h);
    match (d0.is_finite(), d1.is_finite()) {
        (true, true) => {
            let slope = d1 - d0;
            if slope == 0.0 {
                return (d0 <= budget).then_some((0.0, 1.0));
            }
            let cross = (budget - d0) / slope;
            let (lo, hi) = if slope > 0.0 { (0.0, cross.min(1.0)) } else { (cross.max(0.0), 1.0) };
            (lo <= hi).then_some((lo, hi))
        }
        (true, false) => (d0 <= budget).then_some((0.0, 0.0)),
        (false, true) => (d1 <= budget).then_some((1.0, 1.0)),
        (false, false) => None,
    }
}

/// Dense scan (1001 points) of each split ratio over its deadline-feasible
/// interval with frequencies fixed; the objective is separable, so per-task
/// scans give the joint minimum.
pub fn alpha_scan_oracle(p: &AllocProblem, f_lu: &[f64], f_h: &[f64], scale: f64) -> Option<f64> {
    let mut alpha = vec![0.0; p.tasks.len()];
    for i in 0..p.tasks.len() {
        let (lo, hi) = alpha_interval_oracle(p, i, f_lu[i], f_h[i], scale)?;
        let mut best: Option<(f64, f64)> = None;
        for k in 0..=1000 {
            let a = lo + (hi - lo) * k as f64 / 1000.0;
            let mut trial = alpha.clone();
            trial[i] = a;
            let obj = p.objective(&trial, f_lu, f_h);
            if best.is_none_or(|(b, _)| obj < b) {
                best = Some((obj, a));
            }
        }
        alpha[i] = best?.1;
    }
    Some(p.objective(&alpha, f_lu, f_h))
}

/// Minimum of the true objective over a 1 m grid covering the reachable disk.
pub fn reach_grid_min(p: &PositionProblem) -> f64 {
    let m = p.movers[0];
    let r = m.reach;
    let n = r.floor() as i64;
    let mut best = f64::INFINITY;
    for i in -n..=n {
        for j in -n..=n {
            let d = Point2::new(i as f64, j as f64);
            if d.norm() <= r {
                best = best.min(p.objective(&[m.start + d]));
            }
        }
    }
    best
}

/// One mover and one link: an L-UAV towards a vehicle, or the H-UAV towards an L-UAV.
pub fn single_target_instance<R: Rng>(rng: &mut R, huav: bool) -> PositionProblem {
    let params = SystemParams::default();
    let start = Point2::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0));
    let offset = Point2::new(rng.gen_range(-400.0..400.0), rng.gen_range(-400.0..400.0));
    let k = rng.gen_range(1.0..100.0);
    let q = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.05) };
    let (alt, bw, power, bits, weight, flight) = if huav {
        let alpha: f64 = rng.gen_range(0.0..1.0);
        (params.alt_h - params.alt_l, params.bw_lu2hu, 1.0, rng.gen_range(1e6..1e7) * (1.0 - alpha), k + q * 1.0, 0.0)
    } else {
        (params.alt_l, params.bw_v2lu, 0.5, rng.gen_range(1e6..1e7), k, q * 0.5 * 4.0 / params.slot_len)
    };
    PositionProblem {
        movers: vec![Mover { start, reach: 25.0 * params.slot_len, flight_weight: flight }],
        links: vec![Link { mover: 0, peer: start + offset, alt_diff: alt, bandwidth: bw, tx_power: power, bits, weight }],
        rows: vec![],
        pairs: vec![],
        d_safe: params.d_safe,
        gamma0: params.gamma0,
        noise_psd: params.noise_psd,
        k,
    }
}
