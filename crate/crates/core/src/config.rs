//! TOML scenario files.
//!
//! Every key is optional; absent keys keep their defaults. Unit suffixes in
//! key names are the file's units (`_db`, `_ms`, `_mbits`, `_ghz`, ...).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::params::{db_to_linear, dbm_per_hz_to_w_per_hz, Fleet, HuavSpec, LuavSpec, Range, SystemParams};
use crate::sim::{Policy, PolicyKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub gamma0_db: Option<f64>,
    pub noise_dbm_hz: Option<f64>,
    pub bw_v2lu_hz: Option<f64>,
    pub bw_lu2hu_hz: Option<f64>,
    pub bw_v2hu_hz: Option<f64>,
    pub slot_s: Option<f64>,
    pub control_k: Option<f64>,
    pub energy_quota_j: Option<f64>,
    pub max_harvest_j: Option<f64>,
    pub d_safe_m: Option<f64>,
    pub h1_m: Option<f64>,
    pub h2_m: Option<f64>,
    pub n_slots: Option<usize>,
    pub area_m: Option<f64>,
    pub v_min: Option<usize>,
    pub v_max: Option<usize>,
    pub task_mbits_min: Option<f64>,
    pub task_mbits_max: Option<f64>,
    pub density_min: Option<f64>,
    pub density_max: Option<f64>,
    pub deadline_ms_min: Option<f64>,
    pub deadline_ms_max: Option<f64>,
    pub vehicle_kmh_min: Option<f64>,
    pub vehicle_kmh_max: Option<f64>,
    pub vehicle_tx_w: Option<f64>,
    /// Number of L-UAVs placed on the default ring; ignored when `luav` blocks are given.
    pub n_luavs: Option<usize>,
    /// Overrides applied to every L-UAV.
    pub luav_defaults: Option<UavBlock>,
    #[serde(default)]
    pub luav: Vec<UavBlock>,
    pub huav: Option<UavBlock>,
    pub policy: Option<PolicyBlock>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavBlock {
    pub x_m: Option<f64>,
    pub y_m: Option<f64>,
    pub cpu_ghz: Option<f64>,
    pub kappa: Option<f64>,
    pub mass_kg: Option<f64>,
    pub tx_w: Option<f64>,
    pub max_speed_mps: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBlock {
    /// Closed H-UAV path `[[x, y], ...]` for FT_LATUS, metres.
    pub ft_waypoints: Option<Vec<[f64; 2]>>,
    pub energy_centric_k: Option<f64>,
    pub cap_rounds: Option<usize>,
}

/// Per-policy knobs shared by every policy built from one config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicySettings {
    pub ft_waypoints: Option<Vec<Point2>>,
    pub energy_centric_k: Option<f64>,
    pub cap_rounds: Option<usize>,
}

impl PolicySettings {
    pub fn policy(&self, kind: PolicyKind, params: &SystemParams) -> Policy {
        let mut p = Policy::new(kind, params);
        if let Some(w) = &self.ft_waypoints {
            p.waypoints = w.clone();
        }
        if let Some(k) = self.energy_centric_k {
            p.energy_centric_k = k;
        }
        if let Some(r) = self.cap_rounds {
            p.cap_rounds = r;
        }
        p
    }
}

/// Validated scenario: system parameters, fleet and policy knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub params: SystemParams,
    pub fleet: Fleet,
    pub policy: PolicySettings,
}

impl Default for Config {
    fn default() -> Self {
        let params = SystemParams::default();
        let fleet = Fleet::table_defaults(params.area_side);
        Self { params, fleet, policy: PolicySettings::default() }
    }
}

impl Config {
    /// Rebuilds the default ring for `n` L-UAVs, keeping per-UAV settings of the first one.
    pub fn with_luav_count(&self, n: usize) -> Config {
        let template = self.fleet.luavs.first().cloned().unwrap_or_else(|| LuavSpec::table_defaults(Point2::default()));
        let mut out = self.clone();
        out.fleet = Fleet::ring(n, self.params.area_side, &template, self.fleet.huav.clone());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = self.params.violations();
        errs.extend(self.fleet.violations(&self.params));
        for kind in PolicyKind::ALL {
            for e in self.policy.policy(kind, &self.params).violations(&self.params) {
                if !errs.contains(&e) {
                    errs.push(e);
                }
            }
        }
        if errs.is_empty() { Ok(()) } else { Err(Error::InvalidConfig(errs)) }
    }
}

fn apply_block(spec: &mut LuavSpec, b: &UavBlock) {
    if let Some(v) = b.cpu_ghz {
        spec.cpu_cap = v * 1e9;
    }
    if let Some(v) = b.kappa {
        spec.kappa = v;
    }
    if let Some(v) = b.mass_kg {
        spec.mass = v;
    }
    if let Some(v) = b.tx_w {
        spec.tx_power = v;
    }
    if let Some(v) = b.max_speed_mps {
        spec.max_speed = v;
    }
}

impl ConfigFile {
    pub fn into_config(self) -> Result<Config> {
        let mut errs = Vec::new();
        let mut p = SystemParams::default();
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        if let Some(v) = self.gamma0_db {
            p.gamma0 = db_to_linear(v);
        }
        if let Some(v) = self.noise_dbm_hz {
            p.noise_psd = dbm_per_hz_to_w_per_hz(v);
        }
        set(&mut p.bw_v2lu, self.bw_v2lu_hz);
        set(&mut p.bw_lu2hu, self.bw_lu2hu_hz);
        set(&mut p.bw_v2hu, self.bw_v2hu_hz);
        set(&mut p.slot_len, self.slot_s);
        set(&mut p.control_k, self.control_k);
        set(&mut p.energy_quota, self.energy_quota_j);
        set(&mut p.max_harvest, self.max_harvest_j);
        set(&mut p.d_safe, self.d_safe_m);
        set(&mut p.alt_l, self.h1_m);
        set(&mut p.alt_h, self.h2_m);
        set(&mut p.area_side, self.area_m);
        set(&mut p.vehicle_tx_power, self.vehicle_tx_w);
        if let Some(n) = self.n_slots {
            p.n_slots = n;
        }
        p.v_count_range = Range::new(self.v_min.unwrap_or(p.v_count_range.min), self.v_max.unwrap_or(p.v_count_range.max));
        let scaled = |r: Range<f64>, lo: Option<f64>, hi: Option<f64>, unit: f64| {
            Range::new(lo.map_or(r.min, |v| v * unit), hi.map_or(r.max, |v| v * unit))
        };
        p.task_bits_range = scaled(p.task_bits_range, self.task_mbits_min, self.task_mbits_max, 1e6);
        p.density_range = scaled(p.density_range, self.density_min, self.density_max, 1.0);
        p.deadline_range = scaled(p.deadline_range, self.deadline_ms_min, self.deadline_ms_max, 1e-3);
        p.vehicle_speed_range = scaled(p.vehicle_speed_range, self.vehicle_kmh_min, self.vehicle_kmh_max, 1.0 / 3.6);

        let mut template = LuavSpec::table_defaults(Point2::default());
        if let Some(b) = &self.luav_defaults {
            if b.x_m.is_some() || b.y_m.is_some() {
                errs.push("luav_defaults cannot set a position".into());
            }
            apply_block(&mut template, b);
        }
        let c = p.area_side / 2.0;
        let mut huav = HuavSpec::table_defaults(Point2::new(c, c));
        if let Some(h) = &self.huav {
            for (name, v) in [("kappa", h.kappa), ("mass_kg", h.mass_kg), ("tx_w", h.tx_w)] {
                if v.is_some() {
                    errs.push(format!("huav.{name} is not an H-UAV setting"));
                }
            }
            huav.position = Point2::new(h.x_m.unwrap_or(c), h.y_m.unwrap_or(c));
            if let Some(v) = h.cpu_ghz {
                huav.cpu_cap = v * 1e9;
            }
            if let Some(v) = h.max_speed_mps {
                huav.max_speed = v;
            }
        }
        let fleet = if self.luav.is_empty() {
            let n = self.n_luavs.unwrap_or(4);
            if n == 0 {
                errs.push("n_luavs must be at least 1".into());
            }
            Fleet::ring(n, p.area_side, &template, huav)
        } else {
            if let Some(n) = self.n_luavs {
                if n != self.luav.len() {
                    errs.push(format!("n_luavs = {n} but {} luav blocks given", self.luav.len()));
                }
            }
            let luavs = self
                .luav
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let mut s = template.clone();
                    match (b.x_m, b.y_m) {
                        (Some(x), Some(y)) => s.position = Point2::new(x, y),
                        _ => errs.push(format!("luav[{i}] needs both x_m and y_m")),
                    }
                    apply_block(&mut s, b);
                    s
                })
                .collect();
            Fleet { luavs, huav }
        };
        let mut policy = PolicySettings::default();
        if let Some(b) = self.policy {
            policy.ft_waypoints = b.ft_waypoints.map(|w| w.into_iter().map(|[x, y]| Point2::new(x, y)).collect());
            policy.energy_centric_k = b.energy_centric_k;
            policy.cap_rounds = b.cap_rounds;
        }
        let cfg = Config { params: p, fleet, policy };
        match cfg.validate() {
            Ok(()) if errs.is_empty() => Ok(cfg),
            Ok(()) => Err(Error::InvalidConfig(errs)),
            Err(Error::InvalidConfig(more)) => {
                errs.extend(more);
                Err(Error::InvalidConfig(errs))
            }
            Err(e) => Err(e),
        }
    }
}

pub fn parse_config(text: &str) -> Result<Config> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    file.into_config()
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ConfigParse(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
