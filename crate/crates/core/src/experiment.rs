//! Batches of runs over policies, seeds and one swept parameter.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::output::LabeledRun;
use crate::params::Range;
use crate::sim::{run, PolicyKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    K,
    NLuavs,
    EnergyQuota,
    MaxHarvest,
    VCount,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [SweepAxis::K, SweepAxis::NLuavs, SweepAxis::EnergyQuota, SweepAxis::MaxHarvest, SweepAxis::VCount];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::K => "k",
            SweepAxis::NLuavs => "n_luavs",
            SweepAxis::EnergyQuota => "energy_quota",
            SweepAxis::MaxHarvest => "max_harvest",
            SweepAxis::VCount => "v_count",
        }
    }

    /// Applies one sweep value to a copy of `base`.
    pub fn apply(self, base: &Config, value: f64) -> Result<Config> {
        let integer = || {
            if value.fract() == 0.0 && value >= 1.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidConfig(vec![format!("{} sweep needs positive integers (got {value})", self.name())]))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepAxis::K => cfg.params.control_k = value,
            SweepAxis::NLuavs => cfg = base.with_luav_count(integer()?),
            SweepAxis::EnergyQuota => cfg.params.energy_quota = value,
            SweepAxis::MaxHarvest => cfg.params.max_harvest = value,
            SweepAxis::VCount => {
                let n = integer()?;
                cfg.params.v_count_range = Range::new(n, n);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == norm)
            .ok_or_else(|| format!("unknown sweep axis `{s}` (expected k, n_luavs, energy_quota, max_harvest or v_count)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub config: Config,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
    pub sweep: Option<Sweep>,
}

impl ExperimentSpec {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.policies.is_empty() {
            out.push("at least one policy is required".into());
        }
        if self.seeds.is_empty() {
            out.push("at least one seed is required".into());
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                out.push(format!("{} sweep has no values", s.axis));
            }
            for v in &s.values {
                if !(v.is_finite() && *v > 0.0) {
                    out.push(format!("{} sweep values must be positive (got {v})", s.axis));
                }
            }
        }
        out
    }

    /// Expanded run list in output order: sweep value, then policy, then seed.
    pub fn jobs(&self) -> Result<Vec<Job>> {
        let errs = self.violations();
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        self.config.validate()?;
        let points: Vec<(Option<f64>, Config)> = match &self.sweep {
            None => vec![(None, self.config.clone())],
            Some(s) => s.values.iter().map(|&v| Ok((Some(v), s.axis.apply(&self.config, v)?))).collect::<Result<_>>()?,
        };
        let mut jobs = Vec::new();
        for (value, cfg) in &points {
            for &policy in &self.policies {
                for &seed in &self.seeds {
                    let mut run_id = format!("{policy}-s{seed}");
                    if let (Some(s), Some(v)) = (&self.sweep, value) {
                        run_id = format!("{}={v}-{run_id}", s.axis);
                    }
                    jobs.push(Job {
                        run_id,
                        sweep_axis: self.sweep.as_ref().map(|s| s.axis.name().to_string()),
                        sweep_value: *value,
                        config: cfg.clone(),
                        policy,
                        seed,
                    });
                }
            }
        }
        Ok(jobs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub run_id: String,
    pub sweep_axis: Option<String>,
    pub sweep_value: Option<f64>,
    pub config: Config,
    pub policy: PolicyKind,
    pub seed: u64,
}

impl Job {
    pub fn run(self) -> Result<LabeledRun> {
        let policy = self.config.policy.policy(self.policy, &self.config.params);
        let trace = run(self.seed, &policy, &self.config.params, &self.config.fleet)?;
        Ok(LabeledRun { run_id: self.run_id, sweep_axis: self.sweep_axis, sweep_value: self.sweep_value, config: self.config, trace })
    }
}

/// Runs every job in parallel; results keep the job order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<LabeledRun>> {
    spec.jobs()?.into_par_iter().map(Job::run).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn job_expansion_order() {
        let spec = ExperimentSpec {
            config: Config::default(),
            policies: vec![PolicyKind::Latus, PolicyKind::DelayOnly],
            seeds: vec![3, 1],
            sweep: Some(Sweep { axis: SweepAxis::K, values: vec![1.0, 10.0] }),
        };
        let jobs = spec.jobs().unwrap();
        let ids: Vec<&str> = jobs.iter().map(|j| j.run_id.as_str()).collect();
        assert_eq!(ids[0], "k=1-LATUS-s3");
        assert_eq!(ids[3], "k=1-DELAY_ONLY-s1");
        assert_eq!(ids[7], "k=10-DELAY_ONLY-s1");
        assert_eq!(jobs[5].config.params.control_k, 10.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let base = ExperimentSpec { config: Config::default(), policies: vec![], seeds: vec![], sweep: None };
        assert!(matches!(base.jobs(), Err(Error::InvalidConfig(v)) if v.len() == 2));
        let bad = ExperimentSpec {
            policies: vec![PolicyKind::Latus],
            seeds: vec![0],
            sweep: Some(Sweep { axis: SweepAxis::NLuavs, values: vec![2.5] }),
            ..base
        };
        assert!(bad.jobs().is_err());
    }

    #[test]
    fn luav_count_sweep_builds_ring() {
        let cfg = SweepAxis::NLuavs.apply(&Config::default(), 6.0).unwrap();
        assert_eq!(cfg.fleet.luavs.len(), 6);
        let v = SweepAxis::VCount.apply(&Config::default(), 12.0).unwrap();
        assert_eq!(v.params.v_count_range, Range::new(12, 12));
    }
}
