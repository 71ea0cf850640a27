//! Twenty seeded trials with bounded gyro and direction noise, run in
//! parallel. Pass a trial count as the first argument to change it.

use so3me::harness::{run_batch, NoiseMode, ScenarioConfig};

fn main() {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    for noise in [NoiseMode::Rot, NoiseMode::Add] {
        let cfg = ScenarioConfig::default().with_noise(noise);
        let report = run_batch(&cfg, trials);
        let a = report.aggregate.expect("at least one trial");
        println!("{noise:?}: {} trials, {} failed", a.trials, report.failures.len());
        println!("  settled phi median {:.4e} max {:.4e} rad", a.median_settled_phi, a.max_settled_phi);
        println!("  final |omega| median {:.4e} max {:.4e} rad/s", a.median_final_omega, a.max_final_omega);
    }
}
