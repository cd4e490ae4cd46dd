//! CSV and JSON artifacts of a batch of runs.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::sim::{RunSummary, RunTrace};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// One finished run with its batch labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledRun {
    pub run_id: String,
    pub sweep_axis: Option<String>,
    pub sweep_value: Option<f64>,
    /// Effective scenario of this run.
    pub config: Config,
    pub trace: RunTrace,
}

#[derive(Serialize)]
struct RunEntry<'a> {
    run_id: &'a str,
    seed: u64,
    policy: String,
    sweep_axis: Option<&'a str>,
    sweep_value: Option<f64>,
    avg_task_delay_s: f64,
    avg_tx_energy_j: f64,
    dedr_std: f64,
    queue_max_j: f64,
    bcd_iterations_mean: f64,
    bcd_iterations_max: usize,
    bcd_converged_slots: usize,
    summary: SummaryView<'a>,
    config: &'a Config,
}

/// Run summary without the per-slot series.
#[derive(Serialize)]
struct SummaryView<'a> {
    n_slots: usize,
    avg_total_delay_s: f64,
    avg_luav_energy_j: f64,
    avg_net_energy_j: &'a [f64],
    final_queue_sum_j: f64,
    deadline_violations: usize,
    unflagged_deadline_violations: usize,
    infeasible_slots: usize,
    bound_violations: usize,
    speed_violations: usize,
    safety_violations: usize,
}

impl<'a> From<&'a RunSummary> for SummaryView<'a> {
    fn from(s: &'a RunSummary) -> Self {
        Self {
            n_slots: s.n_slots,
            avg_total_delay_s: s.avg_total_delay,
            avg_luav_energy_j: s.avg_luav_energy,
            avg_net_energy_j: &s.avg_net_energy,
            final_queue_sum_j: s.final_queue_sum,
            deadline_violations: s.deadline_violations,
            unflagged_deadline_violations: s.unflagged_deadline_violations,
            infeasible_slots: s.infeasible_slots,
            bound_violations: s.bound_violations,
            speed_violations: s.speed_violations,
            safety_violations: s.safety_violations,
        }
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

pub fn render_metrics(runs: &[LabeledRun]) -> Result<String> {
    let n_uav = runs.iter().flat_map(|r| r.trace.slots.first()).map(|s| s.q_after.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["run_id", "seed", "policy", "slot", "total_delay_s", "mean_task_delay_s"].iter().map(|s| s.to_string()).collect();
    for j in 0..n_uav {
        for col in ["q", "e_comp", "e_relay", "e_flight", "harvest"] {
            header.push(format!("{col}_{j}_j"));
        }
    }
    header.extend(["dedr", "deadline_violations", "infeasible", "deadline_scale"].iter().map(|s| s.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for run in runs {
        let t = &run.trace;
        for (s, dedr) in t.slots.iter().zip(&t.summary.dedr) {
            let mut row = vec![
                run.run_id.clone(),
                t.seed.to_string(),
                t.policy.to_string(),
                s.slot.to_string(),
                s.total_delay.to_string(),
                s.mean_task_delay.to_string(),
            ];
            for j in 0..n_uav {
                match (s.q_after.get(j), s.luav_energy.get(j), s.harvest.get(j)) {
                    (Some(q), Some(e), Some(h)) => {
                        row.extend([q, &e.e_comp, &e.e_relay, &e.e_flight, h].iter().map(|v| v.to_string()))
                    }
                    _ => row.extend(std::iter::repeat_n(String::new(), 5)),
                }
            }
            row.extend([dedr.to_string(), s.deadline_violations.to_string(), s.infeasible.to_string(), s.deadline_scale.to_string()]);
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

pub fn render_trajectories(runs: &[LabeledRun]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["run_id", "slot", "entity_id", "x_m", "y_m"]).map_err(csv_err)?;
    for run in runs {
        for s in &run.trace.slots {
            let slot = s.slot.to_string();
            for (j, p) in s.luav_positions.iter().enumerate() {
                w.write_record([run.run_id.as_str(), &slot, &format!("luav{j}"), &p.x.to_string(), &p.y.to_string()])
                    .map_err(csv_err)?;
            }
            let h = s.huav_position;
            w.write_record([run.run_id.as_str(), &slot, "huav", &h.x.to_string(), &h.y.to_string()]).map_err(csv_err)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(csv_err)?).map_err(csv_err)
}

pub fn render_summary(runs: &[LabeledRun]) -> Result<String> {
    let entries: Vec<RunEntry<'_>> = runs
        .iter()
        .map(|r| {
            let s = &r.trace.summary;
            RunEntry {
                run_id: &r.run_id,
                seed: r.trace.seed,
                policy: r.trace.policy.to_string(),
                sweep_axis: r.sweep_axis.as_deref(),
                sweep_value: r.sweep_value,
                avg_task_delay_s: s.avg_task_delay,
                avg_tx_energy_j: s.avg_tx_energy,
                dedr_std: s.dedr_std,
                queue_max_j: s.queue_max,
                bcd_iterations_mean: s.bcd_iterations_mean,
                bcd_iterations_max: s.bcd_iterations_max,
                bcd_converged_slots: s.bcd_converged_slots,
                summary: s.into(),
                config: &r.config,
            }
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&serde_json::json!({ "runs": entries })).map_err(csv_err)?;
    text.push('\n');
    Ok(text)
}

/// Renders all three files, checks the directory accepts writes, then writes them.
pub fn write_outputs(runs: &[LabeledRun], dir: &Path) -> Result<()> {
    let files = [
        (METRICS_FILE, render_metrics(runs)?),
        (TRAJECTORIES_FILE, render_trajectories(runs)?),
        (SUMMARY_FILE, render_summary(runs)?),
    ];
    let fail = |what: &str, e: std::io::Error| Error::Output(format!("{what} {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(|e| fail("cannot create", e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| fail("cannot write to", e))?;
    fs::remove_file(&probe).map_err(|e| fail("cannot clean up", e))?;
    for (name, body) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, body).map_err(|e| fail("cannot write to", e))?;
    }
    for (name, _) in &files {
        fs::rename(dir.join(format!(".{name}.tmp")), dir.join(name)).map_err(|e| fail("cannot finalise files in", e))?;
    }
    Ok(())
}
