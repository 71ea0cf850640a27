//! The reference scenario without noise: the estimate converges to the
//! truth to machine precision within a minute.

use so3me::harness::scenario::steps_to_settle;
use so3me::harness::{simulate, NoiseMode, ScenarioConfig};

fn main() {
    let cfg = ScenarioConfig::default().with_noise(NoiseMode::Off);
    let out = simulate(&cfg, cfg.run.seed).expect("reference scenario runs");
    let s = &out.summary;
    println!("{} steps of h = {} s", cfg.steps(), cfg.time.step);
    println!("initial phi {:.6} rad", out.rows[0].phi);
    for t in [1.0, 5.0, 10.0, 20.0, 40.0, 60.0] {
        let r = &out.rows[(t / cfg.time.step).round() as usize];
        println!("t = {t:4} s  phi {:.3e}  |omega| {:.3e}", r.phi, r.omega_error.norm());
    }
    println!("phi < 1e-3 from step {:?}", steps_to_settle(&out.phis(), 1e-3));
    println!("final phi {:.3e}, final |omega| {:.3e}, {:.3} s wall clock", s.final_phi, s.final_omega, s.wall_clock_s);
}
