//! TOML scenario files. Key names carry their units (`dt_s`, `pos_tol_m`, …);
//! angles are radians.
//!
//! ```toml
//! name = "obstacle_free_straight"
//! dt_s = 0.5
//! horizon_steps = 20
//!
//! [start]
//! x_m = 0.0
//! y_m = 0.0
//! theta_rad = 0.0
//!
//! [[waypoints]]
//! x_m = 1.5
//! y_m = 0.0
//! theta_rad = 0.0
//! ```
//!
//! Optional tables: `[[obstacles]]`, `[weights]`, `[bounds]`, `[noise]`,
//! `[criteria]`, `[solver]`.

use std::path::Path;

use nmpc_core::{
    ControlBounds, NoiseModel, Obstacle, Pose, Scenario, SolverConfig, TerminationCriteria,
    WaypointPlan, Weights,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Location, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseEntry {
    pub x_m: f64,
    pub y_m: f64,
    #[serde(default)]
    pub theta_rad: f64,
}

impl From<PoseEntry> for Pose {
    fn from(p: PoseEntry) -> Self {
        Pose::new(p.x_m, p.y_m, p.theta_rad)
    }
}

impl From<Pose> for PoseEntry {
    fn from(p: Pose) -> Self {
        Self {
            x_m: p.x,
            y_m: p.y,
            theta_rad: p.theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleEntry {
    pub x_m: f64,
    pub y_m: f64,
    pub radius_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsEntry {
    /// x, y, heading
    pub q: [f64; 3],
    /// v, ω
    pub r: [f64; 2],
}

impl Default for WeightsEntry {
    fn default() -> Self {
        let w = Weights::default();
        Self { q: w.q, r: w.r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsEntry {
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub omega_min_radps: f64,
    pub omega_max_radps: f64,
}

impl Default for BoundsEntry {
    fn default() -> Self {
        ControlBounds::default().into()
    }
}

impl From<ControlBounds> for BoundsEntry {
    fn from(b: ControlBounds) -> Self {
        Self {
            v_min_mps: b.v_min,
            v_max_mps: b.v_max,
            omega_min_radps: b.omega_min,
            omega_max_radps: b.omega_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEntry {
    #[serde(default)]
    pub control_noise_frac: f64,
    #[serde(default)]
    pub localization_sigma_m: f64,
    /// Defaults to `localization_sigma_m / 0.5`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading_sigma_rad: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaEntry {
    pub pos_tol_m: f64,
    pub rot_tol_rad: f64,
    pub max_time_s: f64,
    pub settle_speed_mps: f64,
    pub settle_turn_rate_radps: f64,
}

impl Default for CriteriaEntry {
    fn default() -> Self {
        TerminationCriteria::default().into()
    }
}

impl From<TerminationCriteria> for CriteriaEntry {
    fn from(c: TerminationCriteria) -> Self {
        Self {
            pos_tol_m: c.pos_tol,
            rot_tol_rad: c.rot_tol,
            max_time_s: c.max_wall_time,
            settle_speed_mps: c.settle_speed,
            settle_turn_rate_radps: c.settle_turn_rate,
        }
    }
}

/// Solver overrides; unset fields keep the defaults, and the wall-clock
/// budget defaults to 80% of `dt_s`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_inner_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_growth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub armijo_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget_s: Option<f64>,
}

impl SolverEntry {
    pub fn resolve(&self, dt: f64) -> SolverConfig {
        let d = SolverConfig::for_sampling_time(dt);
        SolverConfig {
            max_outer_iters: self.max_outer_iters.unwrap_or(d.max_outer_iters),
            max_inner_iters: self.max_inner_iters.unwrap_or(d.max_inner_iters),
            mu_init: self.mu_init.unwrap_or(d.mu_init),
            mu_growth: self.mu_growth.unwrap_or(d.mu_growth),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            step_init: self.step_init.unwrap_or(d.step_init),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            time_budget: self.time_budget_s.unwrap_or(d.time_budget),
        }
    }
}

fn default_robot_radius() -> f64 {
    0.15
}

fn default_safety_margin() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub dt_s: f64,
    pub horizon_steps: usize,
    #[serde(default = "default_robot_radius")]
    pub robot_radius_m: f64,
    #[serde(default = "default_safety_margin")]
    pub safety_margin_m: f64,
    pub start: PoseEntry,
    pub waypoints: Vec<PoseEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleEntry>,
    #[serde(default)]
    pub weights: WeightsEntry,
    #[serde(default)]
    pub bounds: BoundsEntry,
    #[serde(default)]
    pub noise: NoiseEntry,
    #[serde(default)]
    pub criteria: CriteriaEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverEntry>,
}

/// A validation failure tied to a key, located in the source afterwards.
struct Invalid {
    section: Option<&'static str>,
    /// Index within an array of tables.
    occurrence: usize,
    key: &'static str,
    message: String,
}

fn invalid(
    section: Option<&'static str>,
    occurrence: usize,
    key: &'static str,
    message: impl Into<String>,
) -> Invalid {
    Invalid {
        section,
        occurrence,
        key,
        message: message.into(),
    }
}

impl ScenarioFile {
    pub fn parse(src: &str, path: &Path) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(src).map_err(|e| toml_error(src, path, &e))?;
        file.check().map_err(|bad| {
            let line = key_line(src, bad.section, bad.occurrence, bad.key);
            CliError::Config {
                at: Location {
                    path: path.to_path_buf(),
                    line,
                },
                message: format!("{}: {}", bad.key, bad.message),
            }
        })?;
        Ok(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files serialize")
    }

    fn check(&self) -> Result<(), Invalid> {
        let top = |key, msg: String| Err(invalid(None, 0, key, msg));
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return top(
                "dt_s",
                format!("sampling time must be positive, got {}", self.dt_s),
            );
        }
        if self.horizon_steps == 0 {
            return top("horizon_steps", "horizon must be at least 1".into());
        }
        if !(self.robot_radius_m >= 0.0) {
            return top(
                "robot_radius_m",
                format!("must be non-negative, got {}", self.robot_radius_m),
            );
        }
        if !(self.safety_margin_m >= 0.0) {
            return top(
                "safety_margin_m",
                format!("must be non-negative, got {}", self.safety_margin_m),
            );
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return top("name", "must be a nonempty file-name-safe string".into());
        }
        if !Pose::from(self.start).is_finite() {
            return Err(invalid(
                Some("start"),
                0,
                "x_m",
                "start pose must be finite",
            ));
        }
        if self.waypoints.is_empty() {
            return top("waypoints", "at least one waypoint is required".into());
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if !Pose::from(*w).is_finite() {
                return Err(invalid(
                    Some("waypoints"),
                    i,
                    "x_m",
                    format!("waypoint {} must be finite", i + 1),
                ));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius_m >= 0.0) {
                return Err(invalid(
                    Some("obstacles"),
                    i,
                    "radius_m",
                    format!("obstacle {} radius must be non-negative", i + 1),
                ));
            }
            if !(o.x_m.is_finite() && o.y_m.is_finite()) {
                return Err(invalid(
                    Some("obstacles"),
                    i,
                    "x_m",
                    format!("obstacle {} center must be finite", i + 1),
                ));
            }
        }
        let w = self.weights;
        if w.q
            .iter()
            .chain(&w.r)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(invalid(
                Some("weights"),
                0,
                "q",
                "weights must be finite and non-negative",
            ));
        }
        if !w.q.iter().any(|&v| v > 0.0) {
            return Err(invalid(
                Some("weights"),
                0,
                "q",
                "at least one state weight must be positive",
            ));
        }
        let b = self.bounds;
        if !(b.v_min_mps <= b.v_max_mps) {
            return Err(invalid(
                Some("bounds"),
                0,
                "v_min_mps",
                "v_min_mps must not exceed v_max_mps",
            ));
        }
        if !(b.omega_min_radps <= b.omega_max_radps) {
            return Err(invalid(
                Some("bounds"),
                0,
                "omega_min_radps",
                "omega_min_radps must not exceed omega_max_radps",
            ));
        }
        let n = self.noise;
        if !(n.control_noise_frac >= 0.0) {
            return Err(invalid(
                Some("noise"),
                0,
                "control_noise_frac",
                "must be non-negative",
            ));
        }
        if !(n.localization_sigma_m >= 0.0) {
            return Err(invalid(
                Some("noise"),
                0,
                "localization_sigma_m",
                "must be non-negative",
            ));
        }
        if n.heading_sigma_rad.is_some_and(|h| !(h >= 0.0)) {
            return Err(invalid(
                Some("noise"),
                0,
                "heading_sigma_rad",
                "must be non-negative",
            ));
        }
        let c = self.criteria;
        for (key, v) in [
            ("pos_tol_m", c.pos_tol_m),
            ("rot_tol_rad", c.rot_tol_rad),
            ("max_time_s", c.max_time_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(
                    Some("criteria"),
                    0,
                    key,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        for (key, v) in [
            ("settle_speed_mps", c.settle_speed_mps),
            ("settle_turn_rate_radps", c.settle_turn_rate_radps),
        ] {
            if !(v >= 0.0) {
                return Err(invalid(
                    Some("criteria"),
                    0,
                    key,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        if let Some(s) = self.solver {
            if let Err(e) = s.resolve(self.dt_s).validate() {
                return Err(invalid(Some("solver"), 0, "solver", e.to_string()));
            }
        }
        Ok(())
    }

    pub fn to_scenario(&self) -> Scenario {
        let n = self.noise;
        let noise = NoiseModel {
            control_noise_frac: n.control_noise_frac,
            localization_sigma: n.localization_sigma_m,
            heading_sigma: n.heading_sigma_rad.unwrap_or(n.localization_sigma_m / 0.5),
            seed: n.seed,
        };
        let b = self.bounds;
        let c = self.criteria;
        Scenario {
            name: self.name.clone(),
            start: self.start.into(),
            plan: WaypointPlan {
                waypoints: self.waypoints.iter().map(|&w| w.into()).collect(),
            },
            obstacles: self
                .obstacles
                .iter()
                .map(|o| Obstacle::new(o.x_m, o.y_m, o.radius_m))
                .collect(),
            robot_radius: self.robot_radius_m,
            safety_margin: self.safety_margin_m,
            dt: self.dt_s,
            horizon: self.horizon_steps,
            weights: Weights {
                q: self.weights.q,
                r: self.weights.r,
            },
            bounds: ControlBounds {
                v_min: b.v_min_mps,
                v_max: b.v_max_mps,
                omega_min: b.omega_min_radps,
                omega_max: b.omega_max_radps,
            },
            noise,
            criteria: TerminationCriteria {
                pos_tol: c.pos_tol_m,
                rot_tol: c.rot_tol_rad,
                max_wall_time: c.max_time_s,
                settle_speed: c.settle_speed_mps,
                settle_turn_rate: c.settle_turn_rate_radps,
            },
        }
    }

    pub fn from_scenario(s: &Scenario, solver: Option<SolverEntry>) -> Self {
        Self {
            name: s.name.clone(),
            dt_s: s.dt,
            horizon_steps: s.horizon,
            robot_radius_m: s.robot_radius,
            safety_margin_m: s.safety_margin,
            start: s.start.into(),
            waypoints: s.plan.waypoints.iter().map(|&w| w.into()).collect(),
            obstacles: s
                .obstacles
                .iter()
                .map(|o| ObstacleEntry {
                    x_m: o.x,
                    y_m: o.y,
                    radius_m: o.radius,
                })
                .collect(),
            weights: WeightsEntry {
                q: s.weights.q,
                r: s.weights.r,
            },
            bounds: s.bounds.into(),
            noise: NoiseEntry {
                control_noise_frac: s.noise.control_noise_frac,
                localization_sigma_m: s.noise.localization_sigma,
                heading_sigma_rad: Some(s.noise.heading_sigma),
                seed: s.noise.seed,
            },
            criteria: s.criteria.into(),
            solver,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.unwrap_or_default().resolve(self.dt_s)
    }
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub solver: SolverConfig,
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file = ScenarioFile::parse(&src, path)?;
    let scenario = file.to_scenario();
    scenario.validate().map_err(|e| CliError::Config {
        at: Location {
            path: path.to_path_buf(),
            line: None,
        },
        message: e.to_string(),
    })?;
    Ok(LoadedScenario {
        solver: file.solver_config(),
        file,
        scenario,
    })
}

pub(crate) fn toml_error(src: &str, path: &Path, e: &toml::de::Error) -> CliError {
    let line = e.span().map(|s| line_of_offset(src, s.start));
    CliError::Config {
        at: Location {
            path: path.to_path_buf(),
            line,
        },
        message: e.message().to_string(),
    }
}

fn line_of_offset(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// 1-based line of `key = …` inside `[section]` (the `occurrence`-th one for
/// arrays of tables), or among the top-level keys when `section` is `None`.
pub(crate) fn key_line(
    src: &str,
    section: Option<&str>,
    occurrence: usize,
    key: &str,
) -> Option<usize> {
    let mut current: Option<String> = None;
    let mut seen: Option<usize> = None;
    let mut header_line = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if Some(name.as_str()) == section {
                seen = Some(seen.map_or(0, |n| n + 1));
                if seen == Some(occurrence) {
                    header_line = Some(i + 1);
                }
            }
            current = Some(name);
            continue;
        }
        let in_scope = match section {
            None => current.is_none(),
            Some(s) => current.as_deref() == Some(s) && seen == Some(occurrence),
        };
        if in_scope {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header_line
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"m\"\ndt_s = 0.5\nhorizon_steps = 20\n\n[start]\nx_m = 0.0\ny_m = 0.0\n\n[[waypoints]]\nx_m = 1.5\ny_m = 0.0\n";

    fn parse(src: &str) -> Result<ScenarioFile> {
        ScenarioFile::parse(src, Path::new("s.toml"))
    }

    #[test]
    fn defaults_fill_optional_tables() {
        let f = parse(MINIMAL).unwrap();
        let s = f.to_scenario();
        assert_eq!(s.weights, Weights::default());
        assert_eq!(s.bounds, ControlBounds::default());
        assert_eq!(s.noise, NoiseModel::none());
        assert_eq!(s.robot_radius, 0.15);
        assert_eq!(f.solver_config().time_budget, 0.4);
    }

    #[test]
    fn negative_dt_names_key_and_line() {
        let err = parse(&MINIMAL.replace("dt_s = 0.5", "dt_s = -0.5")).unwrap_err();
        let text = err.to_string();
        assert!(text.starts_with("s.toml:2: dt_s"), "{text}");
        assert!(text.contains("positive"));
    }

    #[test]
    fn obstacle_radius_error_points_at_its_table() {
        let src = format!("{MINIMAL}\n[[obstacles]]\nx_m = 1.0\ny_m = 0.0\nradius_m = 0.1\n\n[[obstacles]]\nx_m = 2.0\ny_m = 0.0\nradius_m = -0.1\n");
        let text = parse(&src).unwrap_err().to_string();
        let line = src.lines().position(|l| l == "radius_m = -0.1").unwrap() + 1;
        assert!(
            text.starts_with(&format!("s.toml:{line}: radius_m")),
            "{text}"
        );
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = parse(&MINIMAL.replace("horizon_steps = 20", "horizon_steps = -3"))
            .unwrap_err()
            .to_string();
        assert!(text.starts_with("s.toml:3:"), "{text}");
        let text = parse(&format!("{MINIMAL}bogus_key = 1\n"))
            .unwrap_err()
            .to_string();
        assert!(text.contains("bogus_key"), "{text}");
    }

    #[test]
    fn heading_noise_defaults_to_scaled_position_noise() {
        let src = format!(
            "{MINIMAL}\n[noise]\ncontrol_noise_frac = 0.1\nlocalization_sigma_m = 0.02\nseed = 4\n"
        );
        let n = parse(&src).unwrap().to_scenario().noise;
        assert_eq!(n.heading_sigma, 0.04);
        assert_eq!(n.seed, 4);
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let f = parse(MINIMAL).unwrap();
        let s = f.to_scenario();
        let back = parse(&ScenarioFile::from_scenario(&s, None).to_toml()).unwrap();
        assert_eq!(back.to_scenario(), s);
    }
}
