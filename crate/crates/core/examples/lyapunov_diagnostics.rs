//! Per-step Lyapunov bookkeeping: the observed decrement against the
//! predicted `-(l/2)|ωᵢ + ωᵢ₊₁|²`, and how the gap shrinks with the step.

use so3me::filter::defect_bound;
use so3me::harness::{simulate, verify, NoiseMode, ScenarioConfig};

fn main() {
    for h in [0.01, 0.005, 0.0025] {
        let mut cfg = ScenarioConfig::default().with_noise(NoiseMode::Off);
        cfg.time.step = h;
        let out = simulate(&cfg, 1).unwrap();
        let (mut worst, mut ratio) = (0.0f64, 0.0f64);
        for (r, d) in out.rows.iter().zip(&out.filter.diagnostics) {
            let defect = d.decrement().defect;
            worst = worst.max(defect);
            ratio = ratio.max(defect / defect_bound(1.0, h, &r.omega_error, r.phi));
        }
        println!("h = {h:<6} max |dV - predicted| {worst:.3e}, max defect / h^2(1+|w|^2+phi) {ratio:.1}");
    }

    let cfg = ScenarioConfig::default();
    let report = verify(&cfg).unwrap();
    println!("{report}");

    let out = simulate(&cfg.clone().with_noise(NoiseMode::Off), 1).unwrap();
    println!("first steps (V, dV, predicted):");
    for d in out.filter.diagnostics.iter().take(5) {
        println!("  {:.6e} {:+.6e} {:+.6e}", d.lyapunov, d.delta_v, d.predicted_delta_v);
    }
}
