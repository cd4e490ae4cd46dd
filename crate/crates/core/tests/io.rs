use std::fs;

use uavmec_core::config::{load_config, Config};
use uavmec_core::experiment::{run_experiment, ExperimentSpec};
use uavmec_core::output::{write_outputs, METRICS_FILE, SUMMARY_FILE, TRAJECTORIES_FILE};
use uavmec_core::sim::PolicyKind;
use uavmec_core::Error;

fn spec(slots: usize, seeds: Vec<u64>) -> ExperimentSpec {
    let mut config = Config::default();
    config.params.n_slots = slots;
    ExperimentSpec { config, policies: vec![PolicyKind::Latus, PolicyKind::DelayOnly], seeds, sweep: None }
}

fn column(csv_text: &str, name: &str) -> Vec<(String, f64)> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| {
        let rec = rec.unwrap();
        (rec[0].to_string(), rec[idx].parse().unwrap())
    }).collect()
}

#[test]
fn one_slot_run_has_one_row() {
    let mut s = spec(1, vec![0]);
    s.policies = vec![PolicyKind::Latus];
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&run_experiment(&s).unwrap(), dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(text.lines().count(), 2);
    let traj = fs::read_to_string(dir.path().join(TRAJECTORIES_FILE)).unwrap();
    assert_eq!(traj.lines().count(), 1 + 5);
}

#[test]
fn rerun_is_byte_identical_and_summary_matches_rows() {
    let s = spec(6, vec![1, 2]);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_outputs(&run_experiment(&s).unwrap(), &a).unwrap();
    write_outputs(&run_experiment(&s).unwrap(), &b).unwrap();
    for f in [METRICS_FILE, TRAJECTORIES_FILE, SUMMARY_FILE] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let metrics = fs::read_to_string(a.join(METRICS_FILE)).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join(SUMMARY_FILE)).unwrap()).unwrap();
    let delays = column(&metrics, "mean_task_delay_s");
    let dedr = column(&metrics, "dedr");
    for run in summary["runs"].as_array().unwrap() {
        let id = run["run_id"].as_str().unwrap();
        let rows: Vec<f64> = delays.iter().filter(|(r, _)| r == id).map(|(_, v)| *v).collect();
        assert_eq!(rows.len(), 6);
        let mean = rows.iter().sum::<f64>() / rows.len() as f64;
        let reported = run["avg_task_delay_s"].as_f64().unwrap();
        assert!((mean - reported).abs() <= 1e-9 * reported.abs().max(1.0), "{id}: {mean} vs {reported}");
        let d: Vec<f64> = dedr.iter().filter(|(r, _)| r == id).map(|(_, v)| *v).collect();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
        let reported = run["dedr_std"].as_f64().unwrap();
        assert!((sd - reported).abs() <= 1e-9 * reported.abs().max(1.0));
        assert_eq!(run["config"]["params"]["n_slots"], 6);
    }
}

#[test]
fn unwritable_directory_fails_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out");
    let runs = run_experiment(&spec(1, vec![0])).unwrap();
    assert!(matches!(write_outputs(&runs, &target), Err(Error::Output(_))));
    assert_eq!(fs::read_to_string(&blocker).unwrap(), "x");
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    fs::write(&path, "control_k = 100\nn_luavs = 3\ndeadline_ms_max = 150\n[policy]\nft_waypoints = [[0, 1000], [1000, 0]]\n").unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.params.control_k, 100.0);
    assert_eq!(cfg.fleet.luavs.len(), 3);
    assert!((cfg.params.deadline_range.max - 0.15).abs() < 1e-15);
    let p = cfg.policy.policy(PolicyKind::FtLatus, &cfg.params);
    assert_eq!(p.waypoints.len(), 2);
    assert!(matches!(load_config(&dir.path().join("missing.toml")), Err(Error::ConfigParse(_))));
}
