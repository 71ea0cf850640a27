//! Sweeps the potential gain on noise-free runs and the dissipation on
//! noisy ones.

use so3me::harness::batch::median;
use so3me::harness::scenario::steps_to_settle;
use so3me::harness::{run_batch, simulate, NoiseMode, ScenarioConfig};

fn main() {
    for kp in [75.0, 150.0, 300.0] {
        let mut cfg = ScenarioConfig::default().with_noise(NoiseMode::Off);
        cfg.gains.kp = kp;
        let out = simulate(&cfg, 1).unwrap();
        println!("kp = {kp:5}: phi < 1e-3 after {:?} steps", steps_to_settle(&out.phis(), 1e-3));
    }

    for l in [10.0, 40.0, 90.0, 160.0] {
        let mut cfg = ScenarioConfig::default();
        cfg.gains.l = l;
        let report = run_batch(&cfg, 20);
        let bands: Vec<f64> = report.summaries.iter().map(|s| s.settled_phi).collect();
        let settle: Vec<f64> = (0..report.summaries.len())
            .filter_map(|j| {
                let out = simulate(&cfg, so3me::harness::batch::trial_seed(&cfg, j)).ok()?;
                steps_to_settle(&out.phis(), 0.02).map(|s| s as f64)
            })
            .collect();
        println!("l = {l:5}: median band {:.4e} rad, median steps to phi < 0.02: {}", median(&bands), median(&settle));
    }
}
