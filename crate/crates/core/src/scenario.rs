//! Per-slot traffic generation: vehicle mobility, task requests and harvested energy.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: u64,
    pub position: Point2,
    /// m/s
    pub speed: f64,
    /// Heading angle in radians, in [0, 2π).
    pub heading: f64,
    pub tx_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub vehicle_id: u64,
    pub data_bits: f64,
    /// cycles/bit
    pub density: f64,
    /// s
    pub deadline: f64,
}

impl TaskRequest {
    pub fn cycles(&self) -> f64 {
        self.data_bits * self.density
    }
}

/// Reflects a coordinate into `[0, side]`; returns the new value and whether
/// the direction flipped.
fn reflect(mut x: f64, side: f64) -> (f64, bool) {
    let mut flipped = false;
    // Several bounces are only possible for steps longer than the area itself.
    for _ in 0..8 {
        if x > side {
            x = 2.0 * side - x;
            flipped = !flipped;
        } else if x < 0.0 {
            x = -x;
            flipped = !flipped;
        } else {
            break;
        }
    }
    (x.clamp(0.0, side), flipped)
}

fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(std::f64::consts::TAU);
    if t >= std::f64::consts::TAU { 0.0 } else { t }
}

impl VehicleState {
    /// Moves the vehicle for `dt` seconds along its heading, bouncing off the area border.
    pub fn advance(&self, dt: f64, side: f64) -> VehicleState {
        let step = self.speed * dt;
        let (dx, dy) = (self.heading.cos() * step, self.heading.sin() * step);
        let (x, flip_x) = reflect(self.position.x + dx, side);
        let (y, flip_y) = reflect(self.position.y + dy, side);
        let mut heading = self.heading;
        if flip_x {
            heading = std::f64::consts::PI - heading;
        }
        if flip_y {
            heading = -heading;
        }
        VehicleState { position: Point2::new(x, y), heading: wrap_angle(heading), ..self.clone() }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo { rng.gen_range(lo..=hi) } else { lo }
}

fn spawn_vehicle<R: Rng + ?Sized>(rng: &mut R, params: &SystemParams, id: u64) -> VehicleState {
    let a = params.area_side;
    VehicleState {
        id,
        position: Point2::new(uniform(rng, 0.0, a), uniform(rng, 0.0, a)),
        speed: uniform(rng, params.vehicle_speed_range.min, params.vehicle_speed_range.max),
        heading: wrap_angle(rng.gen_range(0.0..std::f64::consts::TAU)),
        tx_power: params.vehicle_tx_power,
    }
}

/// Draws the vehicle population and task requests of the next slot.
///
/// The first `min(count, prev.len())` previous vehicles survive and advance by
/// one slot; the remainder are newly spawned with fresh ids from `next_id`.
pub fn generate_slot<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SystemParams,
    prev: &[VehicleState],
    next_id: &mut u64,
) -> (Vec<VehicleState>, Vec<TaskRequest>) {
    let count = rng.gen_range(params.v_count_range.min..=params.v_count_range.max);
    let survivors = count.min(prev.len());
    let mut vehicles: Vec<VehicleState> =
        prev[..survivors].iter().map(|v| v.advance(params.slot_len, params.area_side)).collect();
    while vehicles.len() < count {
        vehicles.push(spawn_vehicle(rng, params, *next_id));
        *next_id += 1;
    }
    let tasks = vehicles
        .iter()
        .map(|v| TaskRequest {
            vehicle_id: v.id,
            data_bits: uniform(rng, params.task_bits_range.min, params.task_bits_range.max),
            density: uniform(rng, params.density_range.min, params.density_range.max),
            deadline: uniform(rng, params.deadline_range.min, params.deadline_range.max),
        })
        .collect();
    (vehicles, tasks)
}

/// One harvested-energy sample, uniform on `[0, max_harvest]`.
pub fn sample_harvest<R: Rng + ?Sized>(rng: &mut R, max_harvest: f64) -> f64 {
    max_harvest * rng.gen::<f64>()
}

/// Independent random streams of one scenario: traffic and energy harvesting.
#[derive(Debug, Clone)]
pub struct ScenarioStreams {
    pub traffic: ChaCha8Rng,
    pub harvest: ChaCha8Rng,
}

impl ScenarioStreams {
    pub fn new(seed: u64) -> Self {
        let mut traffic = ChaCha8Rng::seed_from_u64(seed);
        traffic.set_stream(0);
        let mut harvest = ChaCha8Rng::seed_from_u64(seed);
        harvest.set_stream(1);
        Self { traffic, harvest }
    }
}

/// Pre-generated traffic and harvest samples for a whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotInputs {
    pub vehicles: Vec<VehicleState>,
    pub tasks: Vec<TaskRequest>,
    /// Per-L-UAV harvested energy for this slot, J.
    pub harvest: Vec<f64>,
}

/// Generates `n_slots` slot inputs for `n_luavs` L-UAVs from a seed.
pub fn generate_episode(seed: u64, params: &SystemParams, n_luavs: usize) -> Vec<SlotInputs> {
    let mut streams = ScenarioStreams::new(seed);
    let mut next_id = 0;
    let mut prev: Vec<VehicleState> = Vec::new();
    let mut out = Vec::with_capacity(params.n_slots);
    for _ in 0..params.n_slots {
        let (vehicles, tasks) = generate_slot(&mut streams.traffic, params, &prev, &mut next_id);
        let harvest = (0..n_luavs).map(|_| sample_harvest(&mut streams.harvest, params.max_harvest)).collect();
        prev = vehicles.clone();
        out.push(SlotInputs { vehicles, tasks, harvest });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reflection_at_boundary() {
        let v = VehicleState { id: 0, position: Point2::new(999.0, 500.0), speed: 20.0, heading: 0.0, tx_power: 0.5 };
        let w = v.advance(0.2, 1000.0);
        assert!((w.position.x - 997.0).abs() < 1e-9);
        assert!((w.position.y - 500.0).abs() < 1e-9);
        assert!((w.heading - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn zero_speed_stays_put() {
        let v = VehicleState { id: 0, position: Point2::new(12.0, 34.0), speed: 0.0, heading: 1.3, tx_power: 0.5 };
        assert_eq!(v.advance(0.2, 1000.0).position, v.position);
    }

    #[test]
    fn counts_within_range() {
        let params = SystemParams::default();
        let ep = generate_episode(3, &params, 4);
        assert_eq!(ep.len(), 100);
        for s in &ep {
            assert!((10..=40).contains(&s.vehicles.len()));
            assert_eq!(s.tasks.len(), s.vehicles.len());
        }
    }

    #[test]
    fn harvest_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| sample_harvest(&mut rng, 0.5)).collect();
        assert!(samples.iter().all(|&e| (0.0..=0.5).contains(&e)));
        let mean = samples.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.25).abs() < 0.005, "{mean}");
        assert_eq!(sample_harvest(&mut rng, 0.0), 0.0);
    }

    #[test]
    fn survivors_keep_identity() {
        let params = SystemParams::default();
        let ep = generate_episode(1, &params, 4);
        for w in ep.windows(2) {
            let n = w[0].vehicles.len().min(w[1].vehicles.len());
            for i in 0..n {
                assert_eq!(w[0].vehicles[i].id, w[1].vehicles[i].id);
                let d = w[0].vehicles[i].position.dist(w[1].vehicles[i].position);
                assert!(d <= w[0].vehicles[i].speed * params.slot_len + 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn generated_values_in_range(seed in any::<u64>()) {
            let params = SystemParams { n_slots: 20, ..SystemParams::default() };
            let ep = generate_episode(seed, &params, 3);
            for s in &ep {
                prop_assert!(params.v_count_range.contains(s.vehicles.len()));
                for v in &s.vehicles {
                    prop_assert!((0.0..=params.area_side).contains(&v.position.x));
                    prop_assert!((0.0..=params.area_side).contains(&v.position.y));
                    prop_assert!(params.vehicle_speed_range.contains(v.speed));
                }
                for t in &s.tasks {
                    prop_assert!(params.task_bits_range.contains(t.data_bits));
                    prop_assert!(params.density_range.contains(t.density));
                    prop_assert!(params.deadline_range.contains(t.deadline));
                }
                for &e in &s.harvest {
                    prop_assert!((0.0..=params.max_harvest).contains(&e));
                }
            }
            prop_assert_eq!(&ep, &generate_episode(seed, &params, 3));
        }
    }
}
