//! Writes a trajectory CSV and its two SVG charts into a directory
//! (default `out/plots`).

use std::path::PathBuf;

use so3me::harness::{emit_plots, run_scenario, ScenarioConfig};

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/plots"));
    let cfg = ScenarioConfig::default();
    let (path, summary) = run_scenario(&cfg, 3, Some(&dir)).unwrap();
    let path = path.expect("directory given");
    println!("wrote {} (final phi {:.3e})", path.display(), summary.final_phi);
    for svg in emit_plots(&path).unwrap() {
        println!("wrote {}", svg.display());
    }
}
