use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A constraint that could not be satisfied by any allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The fixed transmission delays alone already exceed the task deadline.
    TaskSlack { task: usize },
    /// The L-UAV cannot meet the deadlines of its tasks even with unlimited H-UAV help.
    LuavCapacity { luav: usize },
    /// The H-UAV capacity is insufficient for the remaining work.
    HuavCapacity,
    /// No task-split ratio in [0, 1] satisfies the deadline at the given frequencies.
    AlphaInterval { task: usize },
}

/// The set of constraints responsible for an infeasible allocation problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Infeasibility {
    pub violations: Vec<Violation>,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated constraint(s): {:?}", self.violations.len(), self.violations)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("co-located antennas: link distance is zero")]
    ZeroDistance,
    #[error("unserved work: fraction {fraction} assigned to a zero-frequency processor")]
    UnservedWork { fraction: f64 },
    #[error("inconsistent decision: {0}")]
    InconsistentDecision(String),
    #[error("infeasible deadlines: {0}")]
    Infeasible(Infeasibility),
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("failed to parse configuration: {0}")]
    ConfigParse(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
