//! Static system parameters and UAV fleet description.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a noise power spectral density in dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_w_per_hz(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T: PartialOrd + Copy> Range<T> {
    pub const fn new(min: T, max: T) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: T) -> bool {
        self.min <= v && v <= self.max
    }
}

/// Global constants of the air-ground system, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Reference channel gain at 1 m (linear).
    pub gamma0: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    pub bw_v2lu: f64,
    pub bw_lu2hu: f64,
    pub bw_v2hu: f64,
    /// Slot length, s.
    pub slot_len: f64,
    /// Lyapunov control factor weighting delay against queue drift.
    pub control_k: f64,
    /// Per-slot reference energy quota, J.
    pub energy_quota: f64,
    /// Maximum harvestable energy per slot, J.
    pub max_harvest: f64,
    pub d_safe: f64,
    /// L-UAV operating altitude, m.
    pub alt_l: f64,
    /// H-UAV operating altitude, m.
    pub alt_h: f64,
    pub n_slots: usize,
    /// Side of the square service area, m.
    pub area_side: f64,
    pub v_count_range: Range<usize>,
    pub task_bits_range: Range<f64>,
    /// Computational density, cycles/bit.
    pub density_range: Range<f64>,
    /// Task deadline, s.
    pub deadline_range: Range<f64>,
    /// Vehicle speed, m/s.
    pub vehicle_speed_range: Range<f64>,
    /// Vehicle transmit power, W.
    pub vehicle_tx_power: f64,
}

pub const DEFAULT_CONTROL_K: f64 = 10.0;

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            gamma0: db_to_linear(-50.0),
            noise_psd: dbm_per_hz_to_w_per_hz(-174.0),
            bw_v2lu: 2e6,
            bw_lu2hu: 10e6,
            bw_v2hu: 2e6,
            slot_len: 0.2,
            control_k: DEFAULT_CONTROL_K,
            energy_quota: 4.0,
            max_harvest: 0.5,
            d_safe: 5.0,
            alt_l: 100.0,
            alt_h: 150.0,
            n_slots: 100,
            area_side: 1000.0,
            v_count_range: Range::new(10, 40),
            task_bits_range: Range::new(1e6, 10e6),
            density_range: Range::new(10.0, 100.0),
            deadline_range: Range::new(0.05, 0.2),
            vehicle_speed_range: Range::new(30.0 / 3.6, 80.0 / 3.6),
            vehicle_tx_power: 0.5,
        }
    }
}

impl SystemParams {
    /// Total energy of a fully charged L-UAV over the service period.
    pub fn full_energy(&self) -> f64 {
        self.n_slots as f64 * self.energy_quota
    }

    /// Lists every violated invariant; empty when the parameters are usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("gamma0", self.gamma0),
            ("noise_psd", self.noise_psd),
            ("bw_v2lu", self.bw_v2lu),
            ("bw_lu2hu", self.bw_lu2hu),
            ("bw_v2hu", self.bw_v2hu),
            ("slot_len", self.slot_len),
            ("energy_quota", self.energy_quota),
            ("max_harvest", self.max_harvest),
            ("d_safe", self.d_safe),
            ("alt_l", self.alt_l),
            ("alt_h", self.alt_h),
            ("area_side", self.area_side),
            ("vehicle_tx_power", self.vehicle_tx_power),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{name} must be positive and finite (got {v})"));
            }
        }
        if !(self.control_k.is_finite() && self.control_k >= 0.0) {
            out.push(format!("control_k must be non-negative (got {})", self.control_k));
        }
        if self.alt_h <= self.alt_l {
            out.push(format!("h2 ({}) must exceed h1 ({})", self.alt_h, self.alt_l));
        }
        if self.n_slots == 0 {
            out.push("n_slots must be at least 1".into());
        }
        if self.v_count_range.min < 1 {
            out.push("v_min must be at least 1".into());
        }
        if self.v_count_range.min > self.v_count_range.max {
            out.push("v_min must not exceed v_max".into());
        }
        let ranges = [
            ("task size", self.task_bits_range),
            ("density", self.density_range),
            ("deadline", self.deadline_range),
            ("vehicle speed", self.vehicle_speed_range),
        ];
        for (name, r) in ranges {
            if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                out.push(format!("{name} range is empty or non-finite ({}..{})", r.min, r.max));
            }
        }
        for (name, r) in [("task size", self.task_bits_range), ("density", self.density_range)] {
            if r.min <= 0.0 {
                out.push(format!("{name} range must be positive"));
            }
        }
        if self.vehicle_speed_range.min < 0.0 {
            out.push("vehicle speed must be non-negative".into());
        }
        if !(self.deadline_range.min > 0.0 && self.deadline_range.max <= self.slot_len) {
            out.push(format!(
                "deadline range must lie within (0, slot length {}] (got {}..{})",
                self.slot_len, self.deadline_range.min, self.deadline_range.max
            ));
        }
        out
    }
}

/// Static description of one low-tier UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuavSpec {
    pub position: Point2,
    /// CPU capacity, Hz.
    pub cpu_cap: f64,
    /// Effective switched capacitance of the processor.
    pub kappa: f64,
    /// Mass, kg.
    pub mass: f64,
    /// Transmit power towards the H-UAV, W.
    pub tx_power: f64,
    /// Maximum speed, m/s.
    pub max_speed: f64,
}

impl LuavSpec {
    pub fn table_defaults(position: Point2) -> Self {
        Self { position, cpu_cap: 10e9, kappa: 1e-27, mass: 4.0, tx_power: 1.0, max_speed: 25.0 }
    }
}

/// Static description of the high-tier UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuavSpec {
    pub position: Point2,
    pub cpu_cap: f64,
    pub max_speed: f64,
}

impl HuavSpec {
    pub fn table_defaults(position: Point2) -> Self {
        Self { position, cpu_cap: 50e9, max_speed: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fleet {
    pub luavs: Vec<LuavSpec>,
    pub huav: HuavSpec,
}

impl Fleet {
    /// `n` L-UAVs on a ring around the area centre; for `n = 4` this is the
    /// quarter-point layout (250,250), (750,250), (750,750), (250,750) of a 1 km area.
    pub fn ring(n: usize, area_side: f64, template: &LuavSpec, huav: HuavSpec) -> Self {
        let c = area_side / 2.0;
        let radius = area_side / 4.0 * std::f64::consts::SQRT_2;
        let luavs = (0..n)
            .map(|i| {
                let angle = 1.25 * std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                let mut spec = template.clone();
                spec.position = Point2::new(c + radius * angle.cos(), c + radius * angle.sin());
                spec
            })
            .collect();
        Self { luavs, huav }
    }

    pub fn table_defaults(area_side: f64) -> Self {
        let c = area_side / 2.0;
        Self::ring(
            4,
            area_side,
            &LuavSpec::table_defaults(Point2::default()),
            HuavSpec::table_defaults(Point2::new(c, c)),
        )
    }

    pub fn violations(&self, params: &SystemParams) -> Vec<String> {
        let mut out = Vec::new();
        if self.luavs.is_empty() {
            out.push("at least one L-UAV is required".into());
        }
        let inside = |p: Point2| (0.0..=params.area_side).contains(&p.x) && (0.0..=params.area_side).contains(&p.y);
        for (i, u) in self.luavs.iter().enumerate() {
            for (name, v) in [("cpu_hz", u.cpu_cap), ("kappa", u.kappa), ("mass_kg", u.mass), ("tx_w", u.tx_power), ("max_speed_mps", u.max_speed)] {
                if !(v.is_finite() && v > 0.0) {
                    out.push(format!("luav[{i}].{name} must be positive (got {v})"));
                }
            }
            if !inside(u.position) {
                out.push(format!("luav[{i}] position {:?} lies outside the area", u.position));
            }
            for (j, w) in self.luavs.iter().enumerate().skip(i + 1) {
                if u.position.dist(w.position) < params.d_safe {
                    out.push(format!("luav[{i}] and luav[{j}] start closer than d_safe"));
                }
            }
        }
        for (name, v) in [("cpu_hz", self.huav.cpu_cap), ("max_speed_mps", self.huav.max_speed)] {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("huav.{name} must be positive (got {v})"));
            }
        }
        if !inside(self.huav.position) {
            out.push(format!("huav position {:?} lies outside the area", self.huav.position));
        }
        out
    }
}

/// Dynamic state of one L-UAV at the start of a slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LUavState {
    pub id: usize,
    /// Position at the end of the previous slot.
    pub position: Point2,
    /// Energy-deviation queue, J.
    pub queue: f64,
    pub cpu_cap: f64,
    pub kappa: f64,
    pub mass: f64,
    pub tx_power: f64,
    pub max_speed: f64,
}

impl LUavState {
    pub fn from_spec(id: usize, spec: &LuavSpec) -> Self {
        Self {
            id,
            position: spec.position,
            queue: 0.0,
            cpu_cap: spec.cpu_cap,
            kappa: spec.kappa,
            mass: spec.mass,
            tx_power: spec.tx_power,
            max_speed: spec.max_speed,
        }
    }

    /// Radius of the per-slot reachable disk.
    pub fn reach(&self, slot_len: f64) -> f64 {
        self.max_speed * slot_len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HUavState {
    pub position: Point2,
    pub cpu_cap: f64,
    pub max_speed: f64,
}

impl HUavState {
    pub fn from_spec(spec: &HuavSpec) -> Self {
        Self { position: spec.position, cpu_cap: spec.cpu_cap, max_speed: spec.max_speed }
    }

    pub fn reach(&self, slot_len: f64) -> f64 {
        self.max_speed * slot_len
    }
}
