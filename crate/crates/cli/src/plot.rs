//! Trajectory plots as plain SVG text.

use std::fmt::Write;

use nmpc_core::{Scenario, TrajectoryLog};

const WIDTH: f64 = 640.0;
const PAD: f64 = 0.3;

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
}

impl Frame {
    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.min_x) * self.scale, (self.max_y - y) * self.scale)
    }
}

/// Planned polyline (dashed gray), driven path (blue), obstacles (filled red)
/// with their keep-out rings (dashed), start and target markers.
pub fn trajectory_svg(scn: &Scenario, log: &TrajectoryLog) -> String {
    let planned: Vec<(f64, f64)> = scn
        .planned_path()
        .waypoints
        .iter()
        .map(|p| (p.x, p.y))
        .collect();
    let driven: Vec<(f64, f64)> = log
        .rows
        .iter()
        .map(|r| (r.true_pose.x, r.true_pose.y))
        .collect();
    let keep_out = |r: f64| r + scn.robot_radius + scn.safety_margin;

    let mut xs: Vec<f64> = planned.iter().chain(&driven).map(|p| p.0).collect();
    let mut ys: Vec<f64> = planned.iter().chain(&driven).map(|p| p.1).collect();
    for o in &scn.obstacles {
        xs.extend([o.x - keep_out(o.radius), o.x + keep_out(o.radius)]);
        ys.extend([o.y - keep_out(o.radius), o.y + keep_out(o.radius)]);
    }
    let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min) - PAD;
    let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + PAD;
    let (min_x, max_x, min_y, max_y) = (lo(&xs), hi(&xs), lo(&ys), hi(&ys));
    let span = (max_x - min_x).max(max_y - min_y).max(1e-9);
    let f = Frame {
        min_x,
        max_y,
        scale: WIDTH / span,
    };
    let (w, h) = ((max_x - min_x) * f.scale, (max_y - min_y) * f.scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&scn.name));
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    for o in &scn.obstacles {
        let (cx, cy) = f.point(o.x, o.y);
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#d62728" stroke-dasharray="4 3"/>"##,
            keep_out(o.radius) * f.scale
        );
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#d62728" fill-opacity="0.6"/>"##,
            o.radius * f.scale
        );
    }
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#7f7f7f" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
        points(&f, &planned)
    );
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
        points(&f, &driven)
    );
    for (p, color) in [(scn.start, "#2ca02c"), (scn.target(), "#000000")] {
        let (cx, cy) = f.point(p.x, p.y);
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{color}"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}

fn points(f: &Frame, pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|&(x, y)| {
            let (px, py) = f.point(x, y);
            format!("{px:.2},{py:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use nmpc_core::{run_scenario, Obstacle, Pose, SolverConfig};

    #[test]
    fn plot_shows_paths_obstacles_and_rings() {
        let mut scn = Scenario::point_to_point(
            "p<1>",
            Pose::new(0.0, 0.0, 0.0),
            Pose::new(1.0, 0.5, 0.0),
            0.5,
            10,
        );
        scn.obstacles.push(Obstacle::new(0.5, -0.6, 0.1));
        let log = run_scenario(&scn, &SolverConfig::for_sampling_time(0.5)).unwrap();
        let svg = trajectory_svg(&scn, &log);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray=\"4 3\""));
        assert!(svg.contains("<title>p&lt;1&gt;</title>"));
        assert_eq!(svg, trajectory_svg(&scn, &log));
    }
}
