use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use so3me::harness::batch::run_batch;
use so3me::harness::config::{AttitudeMode, ScenarioConfig};
use so3me::harness::scenario::{read_trajectory, run_scenario};
use so3me::harness::{emit_plots, NoiseMode};

fn short(duration: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.time.duration = duration;
    cfg
}

fn noise_mode() -> impl Strategy<Value = NoiseMode> {
    prop_oneof![Just(NoiseMode::Off), Just(NoiseMode::Rot), Just(NoiseMode::Add)]
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    (
        (1usize..=20, 1usize..2000, 0.0..5.0f64, 0.0..10.0f64, 2usize..=5, 5usize..=9, noise_mode()),
        (1.0..300.0f64, 1.0..300.0f64, 1.0..500.0f64),
        (prop::array::uniform3(0.1..10.0f64), prop::array::uniform3(-1.0..1.0f64), -3.0..3.0f64),
        (prop::array::uniform3(-1.0..1.0f64), -3.0..3.0f64, prop::array::uniform3(-0.1..0.1f64)),
        (0u64..1 << 40, 1usize..50, 0u64..1000, 0usize..5000, 1.0..1e4f64, any::<bool>()),
    )
        .prop_filter_map("valid", |(s, g, t, e, r)| {
            let mut cfg = ScenarioConfig::default();
            cfg.time.step = 1.0 / (s.0 as f64 * 10.0);
            cfg.time.duration = s.1 as f64 * cfg.time.step;
            cfg.sensors.gyro_noise_deg_s = s.2;
            cfg.sensors.vector_noise_deg = s.3;
            cfg.sensors.min_vectors = s.4;
            cfg.sensors.max_vectors = s.5;
            cfg.sensors.noise = s.6;
            cfg.sensors.rate_ratio = s.0;
            (cfg.gains.m, cfg.gains.l, cfg.gains.kp) = g;
            cfg.weights.d = [t.0[0] * 3.0, t.0[1] * 2.0 + 0.05, t.0[2]];
            cfg.truth.attitude_axis = t.1;
            cfg.truth.attitude_angle = t.2;
            cfg.estimate.error_axis = e.0;
            cfg.estimate.error_angle = e.1;
            cfg.estimate.omega_error = e.2;
            cfg.run.seed = r.0;
            cfg.run.trials = r.1;
            cfg.run.seed_stride = r.2;
            cfg.run.reproject_every = r.3;
            cfg.diagnostics.defect_constant = r.4;
            cfg.truth.attitude_mode = if r.5 { AttitudeMode::Rk4 } else { AttitudeMode::Averaged };
            cfg.run.output_dir = PathBuf::from(format!("runs/{}", r.0));
            cfg.validate().ok().map(|_| cfg)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(cfg in config()) {
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml_string(), text);
    }
}

#[test]
fn row_count_follows_duration() {
    for (h, t) in [(0.01, 1.0), (0.005, 0.5), (0.02, 3.0), (0.0025, 0.25)] {
        let mut cfg = short(t);
        cfg.time.step = h;
        let out = so3me::harness::simulate(&cfg, 1).unwrap();
        assert_eq!(out.rows.len(), (t / h).round() as usize + 1);
    }
}

#[test]
fn trajectory_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(5.0);
    let (a, sa) = run_scenario(&cfg, 17, Some(&dir.path().join("a"))).unwrap();
    let (b, _) = run_scenario(&cfg, 17, Some(&dir.path().join("b"))).unwrap();
    let (c, _) = run_scenario(&cfg, 18, Some(&dir.path().join("c"))).unwrap();
    let read = |p: Option<PathBuf>| std::fs::read(p.unwrap()).unwrap();
    let (a, b, c) = (read(a), read(b), read(c));
    assert_eq!(a, b);
    assert_ne!(a, c);

    let rows = read_trajectory(&dir.path().join("a/trajectory.csv")).unwrap();
    assert_eq!(rows.len(), 501);
    assert_eq!(rows.last().unwrap().phi, sa.final_phi);
}

fn attr(svg: &str, name: &str) -> f64 {
    let key = format!("{name}=\"");
    let start = svg.find(&key).unwrap() + key.len();
    let end = start + svg[start..].find('"').unwrap();
    svg[start..end].parse().unwrap()
}

#[test]
fn plots_cover_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::default();
    cfg.sensors.noise = NoiseMode::Rot;
    let (path, _) = run_scenario(&cfg, 2, Some(dir.path())).unwrap();
    let path = path.unwrap();
    let rows = read_trajectory(&path).unwrap();
    assert_eq!(rows.len(), 6001);
    let files = emit_plots(&path).unwrap();
    assert_eq!(files.len(), 2);

    let phi = std::fs::read_to_string(dir.path().join("phi.svg")).unwrap();
    let omega = std::fs::read_to_string(dir.path().join("omega.svg")).unwrap();
    let t_max = rows.last().unwrap().time;
    for svg in [&phi, &omega] {
        assert!(attr(svg, "data-x-min") <= 0.0 && attr(svg, "data-x-max") >= t_max);
    }
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.phi), hi.max(r.phi)));
    assert!(attr(&phi, "data-y-min") <= lo && attr(&phi, "data-y-max") >= hi);
    let comps = rows.iter().flat_map(|r| r.omega_error.iter().copied().collect::<Vec<_>>());
    let (lo, hi) = comps.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    assert!(attr(&omega, "data-y-min") <= lo && attr(&omega, "data-y-max") >= hi);
}

#[test]
fn empty_trajectory_cannot_be_plotted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectory.csv");
    std::fs::write(&path, so3me::harness::scenario::TRAJECTORY_HEADER.join(",") + "\n").unwrap();
    assert!(emit_plots(&path).is_err());
}

#[test]
fn batches_are_reproducible() {
    let cfg = ScenarioConfig::default();
    let first = run_batch(&cfg, 20);
    let second = run_batch(&cfg, 20);
    assert!(first.failures.is_empty());
    let a = first.aggregate.unwrap();
    assert_eq!(a, second.aggregate.unwrap());
    assert_eq!(a.trials, 20);
    assert!(a.max_settled_phi.is_finite() && a.max_settled_phi >= a.median_settled_phi);
}

fn so3me() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_so3me"));
    cmd.env_remove("SO3ME_DEFAULT_CONFIG");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn cli_run_with_plots() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "short.toml", "time.duration = 2\n");
    let out_dir = dir.path().join("out");
    let output = so3me()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--seed", "5", "--noise", "add", "--plots", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for name in ["trajectory.csv", "phi.svg", "omega.svg"] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
    assert_eq!(read_trajectory(&out_dir.join("trajectory.csv")).unwrap().len(), 201);
}

#[test]
fn cli_uses_default_config_search_path() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "so3me.toml", "time.duration = 1\nsensors.noise = \"off\"\n");
    let out_dir = dir.path().join("run");
    let output = so3me().env("SO3ME_DEFAULT_CONFIG", dir.path()).args(["run", "--out"]).arg(&out_dir).output().unwrap();
    assert!(output.status.success());
    assert_eq!(read_trajectory(&out_dir.join("trajectory.csv")).unwrap().len(), 101);
}

#[test]
fn cli_batch_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", "time.duration = 3\n");
    let batch = so3me().args(["batch", "--trials", "3", "--config"]).arg(&config).output().unwrap();
    assert!(batch.status.success());
    let text = String::from_utf8(batch.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.split(',').count() == 5 && !l.starts_with("seed")).count(), 3);
    assert!(text.contains("3 trials"));

    let verify = so3me().args(["verify", "--config"]).arg(&config).output().unwrap();
    assert!(verify.status.success());
    let text = String::from_utf8(verify.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{text}");
}

#[test]
fn cli_reports_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.toml", "gains.l = 100\n");
    let output = so3me().args(["verify", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("l ≠ m"));
}
