//! Static SVG line charts of a trajectory.
//!
//! Each chart's root element carries `data-x-min`, `data-x-max`,
//! `data-y-min` and `data-y-max` attributes giving the plotted axis ranges.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::scenario::{read_trajectory, ScenarioError, TrajectoryRow};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Trajectory(#[from] ScenarioError),
    #[error("trajectory is empty")]
    Empty,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Axis ranges covering all points, with a little headroom on `y`.
pub fn extents(series: &[Series]) -> (f64, f64, f64, f64) {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let x_min = all().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let lo = all().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = all().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    let x_max = if x_max > x_min { x_max } else { x_min + 1.0 };
    (x_min, x_max, lo - pad, hi + pad)
}

/// Renders a line chart as SVG text.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = extents(series);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-x-min="{x0:?}" data-x-max="{x1:?}" data-y-min="{y0:?}" data-y-max="{y1:?}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    )
    .unwrap();
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#ccc"/><text x="{px:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{xv:.4}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0
        )
        .unwrap();
        writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ccc"/><text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{yv:.3e}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{x_label}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">{y_label}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    )
    .unwrap();
    for (j, serie) in series.iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        let mut d = String::new();
        for (n, (x, y)) in serie.points.iter().enumerate() {
            write!(d, "{}{:.2},{:.2}", if n == 0 { "M" } else { " L" }, sx(*x), sy(*y)).unwrap();
        }
        writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            LEFT + pw - 60.0,
            TOP + 18.0 + 16.0 * j as f64,
            serie.label
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `phi.svg` and `omega.svg` for `rows` into `dir`.
pub fn plot_rows(rows: &[TrajectoryRow], dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let phi = [Series { label: "φ", points: rows.iter().map(|r| (r.time, r.phi)).collect() }];
    let omega: Vec<Series> = ["ω₁", "ω₂", "ω₃"]
        .iter()
        .enumerate()
        .map(|(k, label)| Series { label, points: rows.iter().map(|r| (r.time, r.omega_error[k])).collect() })
        .collect();
    let charts = [
        ("phi.svg", line_chart("Principal angle of the attitude estimation error", "t (s)", "φ (rad)", &phi)),
        ("omega.svg", line_chart("Angular velocity estimation error", "t (s)", "ω (rad/s)", &omega)),
    ];
    std::fs::create_dir_all(dir).map_err(|source| PlotError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for (name, svg) in charts {
        let path = dir.join(name);
        std::fs::write(&path, svg).map_err(|source| PlotError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a trajectory file and plots it next to the file.
pub fn emit_plots(trajectory: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let rows = read_trajectory(trajectory)?;
    let dir = trajectory.parent().map(Path::to_path_buf).unwrap_or_default();
    plot_rows(&rows, &dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_series_gets_a_range() {
        let s = [Series { label: "a", points: vec![(0.0, 2.0), (1.0, 2.0)] }];
        let (x0, x1, y0, y1) = extents(&s);
        assert_eq!((x0, x1), (0.0, 1.0));
        assert!(y0 < 2.0 && y1 > 2.0);
    }

    #[test]
    fn empty_rows_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(plot_rows(&[], dir.path()), Err(PlotError::Empty)));
    }
}
