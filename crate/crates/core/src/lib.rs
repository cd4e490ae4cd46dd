//! Online offloading, resource allocation and trajectory control for a
//! two-tier UAV edge-computing network serving ground vehicles.

pub mod allocator;
pub mod config;
pub mod experiment;
pub mod output;
pub mod bcd;
pub mod context;
pub mod error;
pub mod geometry;
pub mod lyapunov;
pub mod matching;
pub mod numeric;
pub mod params;
pub mod radio;
pub mod scenario;
pub mod sim;
pub mod trajectory;

pub use context::SlotContext;
pub use error::{Error, Infeasibility, Result, Violation};
pub use geometry::Point2;
pub use matching::Matching;
pub use params::{Fleet, HUavState, HuavSpec, LUavState, LuavSpec, SystemParams};
pub use radio::{LUavEnergyBreakdown, Plan, SlotEvaluation, TaskDelayBreakdown};
pub use scenario::{SlotInputs, TaskRequest, VehicleState};
pub use sim::{Policy, PolicyKind, RunSummary, RunTrace, SlotMetrics};
pub use config::{load_config, parse_config, Config};
pub use experiment::{run_experiment, ExperimentSpec, Sweep, SweepAxis};
pub use output::{write_outputs, LabeledRun};
