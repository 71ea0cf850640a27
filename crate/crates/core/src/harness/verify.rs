//! Residual and decrement checks on a fresh noise-free trajectory.

use std::fmt;

use super::config::{NoiseMode, ScenarioConfig};
use super::scenario::{simulate, ScenarioError};
use crate::filter::defect_bound;

/// Bound on the implicit-update residual.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub steps: usize,
    pub max_residual: f64,
    pub max_defect: f64,
    /// Max of `defect / (h² (1 + ‖ω‖² + φ))`.
    pub max_defect_ratio: f64,
    pub defect_constant: f64,
    /// Steps with `ΔV` above the allowance.
    pub increases: usize,
}

impl VerifyReport {
    pub fn residual_ok(&self) -> bool {
        self.max_residual <= RESIDUAL_TOLERANCE
    }

    pub fn defect_ok(&self) -> bool {
        self.max_defect_ratio <= self.defect_constant && self.increases == 0
    }

    pub fn passed(&self) -> bool {
        self.residual_ok() && self.defect_ok()
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} implicit residual: max {:.3e} over {} steps (tolerance {:.0e})",
            verdict(self.residual_ok()),
            self.max_residual,
            self.steps,
            RESIDUAL_TOLERANCE
        )?;
        write!(
            f,
            "{} lyapunov defect: max {:.3e}, max ratio {:.3e} against C = {}, {} increases beyond allowance",
            verdict(self.defect_ok()),
            self.max_defect,
            self.max_defect_ratio,
            self.defect_constant,
            self.increases
        )
    }
}

/// Runs `cfg` with noise off and checks every step.
pub fn verify(cfg: &ScenarioConfig) -> Result<VerifyReport, ScenarioError> {
    let cfg = cfg.clone().with_noise(NoiseMode::Off);
    let out = simulate(&cfg, cfg.run.seed)?;
    let h = cfg.time.step;
    let c = cfg.diagnostics.defect_constant;
    let mut report = VerifyReport {
        steps: out.rows.len(),
        max_residual: 0.0,
        max_defect: 0.0,
        max_defect_ratio: 0.0,
        defect_constant: c,
        increases: 0,
    };
    for (row, diag) in out.rows.iter().zip(&out.filter.diagnostics) {
        if let Some(r) = diag.implicit_residual {
            report.max_residual = report.max_residual.max(r);
        }
        let defect = diag.decrement().defect;
        report.max_defect = report.max_defect.max(defect);
        report.max_defect_ratio = report.max_defect_ratio.max(defect / defect_bound(1.0, h, &row.omega_error, row.phi));
        if diag.delta_v > defect_bound(c, h, &row.omega_error, row.phi) {
            report.increases += 1;
        }
    }
    Ok(report)
}
