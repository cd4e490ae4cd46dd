use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use uavmec_core::error::Error;
use uavmec_core::experiment::{run_experiment, ExperimentSpec, Sweep, SweepAxis};
use uavmec_core::output::write_outputs;
use uavmec_core::sim::PolicyKind;
use uavmec_core::{load_config, Config};

/// Simulate multi-tier UAV edge computing policies and write per-slot traces.
#[derive(Debug, Parser)]
#[command(name = "uavmec", version)]
struct Args {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Policy to run (repeatable): LATUS, FT_LATUS, DELAY_ONLY, PER_SLOT_CAP, ENERGY_CENTRIC.
    #[arg(long = "policy", value_name = "NAME")]
    policies: Vec<PolicyKind>,
    /// Seed to run (repeatable).
    #[arg(long = "seed", value_name = "SEED", conflicts_with = "seeds")]
    seed_list: Vec<u64>,
    /// Run seeds 0..N.
    #[arg(long, value_name = "N")]
    seeds: Option<u64>,
    /// Override the number of slots per run.
    #[arg(long)]
    slots: Option<usize>,
    /// Sweep one parameter: k, n_luavs, energy_quota, max_harvest or v_count, then its values.
    #[arg(long, num_args = 2.., value_names = ["AXIS", "VALUES"])]
    sweep: Option<Vec<String>>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

enum Failure {
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn report(&self) -> (serde_json::Value, u8) {
        match self {
            Failure::Usage(msg) => (json!({ "error": "usage", "message": msg }), 2),
            Failure::Core(Error::InvalidConfig(v)) => {
                (json!({ "error": "invalid_config", "message": "configuration failed validation", "violations": v }), 2)
            }
            Failure::Core(e @ Error::ConfigParse(_)) => (json!({ "error": "config_parse", "message": e.to_string() }), 2),
            Failure::Core(e @ (Error::Output(_) | Error::Io(_))) => (json!({ "error": "output", "message": e.to_string() }), 1),
            Failure::Core(e) => (json!({ "error": "simulation", "message": e.to_string() }), 1),
        }
    }
}

fn parse_sweep(raw: &[String]) -> Result<Sweep, Failure> {
    let (axis, values) = raw.split_first().ok_or_else(|| Failure::Usage("--sweep needs an axis and values".into()))?;
    let axis: SweepAxis = axis.parse().map_err(Failure::Usage)?;
    let values = values
        .iter()
        .map(|v| v.parse::<f64>().map_err(|_| Failure::Usage(format!("sweep value `{v}` is not a number"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Sweep { axis, values })
}

fn execute(args: Args) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => Config::default(),
    };
    if let Some(n) = args.slots {
        config.params.n_slots = n;
        config.validate()?;
    }
    let policies = if args.policies.is_empty() { vec![PolicyKind::Latus] } else { args.policies };
    let seeds = match (args.seeds, args.seed_list.is_empty()) {
        (Some(n), _) => (0..n).collect(),
        (None, false) => args.seed_list,
        (None, true) => vec![0],
    };
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose()?;
    let spec = ExperimentSpec { config, policies, seeds, sweep };
    let runs = run_experiment(&spec)?;
    write_outputs(&runs, &args.out)?;
    for r in &runs {
        let s = &r.trace.summary;
        println!(
            "{}: mean delay {:.4} s, mean tx energy {:.4} J, DEDR std {:.4e}, max queue {:.2} J, relaxed slots {}",
            r.run_id, s.avg_task_delay, s.avg_tx_energy, s.dedr_std, s.queue_max, s.infeasible_slots
        );
    }
    println!("wrote {} run(s) to {}", runs.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (body, code) = f.report();
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
