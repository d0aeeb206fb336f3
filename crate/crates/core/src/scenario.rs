//! Scenario files.
//!
//! A scenario is TOML with one table per subsystem and a `[[push]]` array.
//! Only `lipm.com_height` and the four segment lengths are required. Angles
//! are in degrees in the file and in radians everywhere else.
//!
//! Step targets and bounds are written for a left swing leg relative to the
//! stance foot and mirrored for a right swing.

use crate::control::{ControlMode, ImpedanceGains, JointPlant, DEFAULT_KP, DEFAULT_STIFFNESS_PER_DEG};
use crate::detector::SwayEllipse;
use crate::kinematics::{inverse_kinematics, FootTarget, JointAngles, JointLimits, LegGeometry, Side};
use crate::lipm::{LipmParams, MAX_DT};
use crate::planner::{NominalGait, StepBounds, Weights, DEFAULT_REMAINING_FLOOR};
use crate::swing::SwingParams;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted key, or empty for whole-file problems.
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.key.is_empty(), self.line) {
            (true, _) => write!(f, "{}", self.message),
            (false, Some(l)) => write!(f, "{} (line {l}): {}", self.key, self.message),
            (false, None) => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

macro_rules! defaults {
    ($($name:ident: $ty:ty = $val:expr;)*) => {
        $(fn $name() -> $ty { $val })*
    };
}

defaults! {
    d_gravity: f64 = 9.81;
    d_mass: f64 = 80.0;
    d_limits: [[f64; 2]; 3] = [[-20.0, 20.0], [-20.0, 100.0], [0.0, 120.0]];
    d_cop_t: [f64; 2] = [0.0, 0.2];
    d_zero2: [f64; 2] = [0.0, 0.0];
    d_nom_duration: f64 = 0.8;
    d_weights: [f64; 3] = [1.0, 1.0, 1.0];
    d_bounds_mode: String = "explicit".into();
    d_cop_min: [f64; 2] = [-0.2, 0.1];
    d_cop_max: [f64; 2] = [0.5, 0.5];
    d_t_min: f64 = 0.2;
    d_t_max: f64 = 1.0;
    d_floor: f64 = DEFAULT_REMAINING_FLOOR;
    d_margin: f64 = 0.02;
    d_semi: f64 = 0.05;
    d_debounce: u32 = 2;
    d_capture_tol: f64 = 0.02;
    d_capture_hold: f64 = 0.2;
    d_max_steps: u32 = 3;
    d_peak_height: f64 = 0.07;
    d_peak_fraction: f64 = 0.4;
    d_touchdown: f64 = 0.001;
    d_mode: String = "assist".into();
    d_stiffness: [f64; 3] = DEFAULT_STIFFNESS_PER_DEG;
    d_zero3: [f64; 3] = [0.0; 3];
    d_kp: f64 = DEFAULT_KP;
    d_inertia: [f64; 3] = [0.01; 3];
    d_plant_damping: [f64; 3] = [0.2; 3];
    d_half_extents: [f64; 2] = [0.1, 0.05];
    d_dt: f64 = 0.001;
    d_duration: f64 = 3.0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipmSection {
    #[serde(default = "d_gravity")]
    pub gravity: f64,
    pub com_height: f64,
    #[serde(default = "d_mass")]
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Hip abd/add axis height above the ground. Defaults to `0.92·(l2 + l3)`.
    #[serde(default)]
    pub hip_height: Option<f64>,
    /// Per-joint `[min, max]` in degrees: hip abd/add, hip flex/ext, knee.
    #[serde(default = "d_limits")]
    pub joint_limits: [[f64; 2]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalSection {
    #[serde(default = "d_cop_t")]
    pub cop_t: [f64; 2],
    #[serde(default = "d_zero2")]
    pub gamma: [f64; 2],
    #[serde(default = "d_nom_duration")]
    pub duration: f64,
    /// `[α1, α2, α3]`: position, DCM offset and timing.
    #[serde(default = "d_weights")]
    pub weights: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    /// `explicit` uses `cop_min`/`cop_max`; `workspace` derives the box from
    /// the swing leg's reach.
    #[serde(default = "d_bounds_mode")]
    pub mode: String,
    #[serde(default = "d_cop_min")]
    pub cop_min: [f64; 2],
    #[serde(default = "d_cop_max")]
    pub cop_max: [f64; 2],
    #[serde(default = "d_t_min")]
    pub t_min: f64,
    #[serde(default = "d_t_max")]
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<[f64; 2]>,
    #[serde(default = "d_floor")]
    pub remaining_floor: f64,
    #[serde(default = "d_margin")]
    pub workspace_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    #[serde(default = "d_semi")]
    pub semi_axis_x: f64,
    #[serde(default = "d_semi")]
    pub semi_axis_y: f64,
    #[serde(default = "d_debounce")]
    pub debounce: u32,
    #[serde(default = "d_capture_tol")]
    pub capture_tolerance: f64,
    #[serde(default = "d_capture_hold")]
    pub capture_hold: f64,
    #[serde(default)]
    pub multi_step: bool,
    #[serde(default = "d_max_steps")]
    pub max_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwingSection {
    #[serde(default = "d_peak_height")]
    pub peak_height: f64,
    #[serde(default = "d_peak_fraction")]
    pub peak_fraction: f64,
    #[serde(default = "d_touchdown")]
    pub touchdown_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    /// `assist` or `zero_torque`.
    #[serde(default = "d_mode")]
    pub mode: String,
    /// N·m/deg.
    #[serde(default = "d_stiffness")]
    pub stiffness: [f64; 3],
    /// N·m·s/rad.
    #[serde(default = "d_zero3")]
    pub damping: [f64; 3],
    #[serde(default = "d_kp")]
    pub kp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// kg·m².
    #[serde(default = "d_inertia")]
    pub inertia: [f64; 3],
    /// N·m·s/rad.
    #[serde(default = "d_plant_damping")]
    pub damping: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanProfile {
    /// `hip_abd`, `hip_flex` or `knee`.
    pub joint: String,
    pub t: Vec<f64>,
    pub torque: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanSection {
    /// Standard deviation of white torque noise per joint, N·m.
    #[serde(default = "d_zero3")]
    pub noise_std: [f64; 3],
    #[serde(default)]
    pub profile: Vec<HumanProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    /// Trunk roll/pitch noise, degrees.
    #[serde(default)]
    pub attitude_noise: f64,
    /// Trunk roll/pitch rate noise, degrees per second.
    #[serde(default)]
    pub rate_noise: f64,
    /// Rigid-leg length of the estimator. Defaults to the CoM height.
    #[serde(default)]
    pub pendulum_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnkleSection {
    #[serde(default = "d_half_extents")]
    pub half_extents: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "d_dt")]
    pub dt: f64,
    #[serde(default = "d_duration")]
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_zero2")]
    pub initial_com: [f64; 2],
    #[serde(default = "d_zero2")]
    pub initial_velocity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushSection {
    pub time: f64,
    /// N·s.
    pub impulse: [f64; 2],
}

/// Sections with every field defaulted deserialize from an empty table.
macro_rules! empty_default {
    ($($t:ty),*) => {
        $(impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        })*
    };
}

empty_default!(
    NominalSection,
    BoundsSection,
    DetectorSection,
    SwingSection,
    ControlSection,
    PlantSection,
    HumanSection,
    EstimationSection,
    AnkleSection,
    SimSection
);

/// The scenario as written, with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub lipm: LipmSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub nominal: NominalSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub swing: SwingSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub human: HumanSection,
    #[serde(default)]
    pub estimation: EstimationSection,
    #[serde(default)]
    pub ankle: AnkleSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, rename = "push")]
    pub pushes: Vec<PushSection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Push {
    pub time: f64,
    pub impulse: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundsSource {
    /// Box relative to the stance foot, for a left swing.
    Explicit(StepBounds),
    /// Box from the swing leg's workspace, shrunk by `margin`.
    Workspace { template: StepBounds, margin: f64 },
}

impl BoundsSource {
    /// The duration bounds and extras; the cop box is only meaningful for
    /// `Explicit`.
    pub fn template(&self) -> &StepBounds {
        match self {
            BoundsSource::Explicit(b) => b,
            BoundsSource::Workspace { template, .. } => template,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanTorque {
    /// Piecewise-linear `(t, τ)` knots per joint; empty means zero.
    pub profiles: [Vec<(f64, f64)>; 3],
    pub noise_std: [f64; 3],
}

impl HumanTorque {
    /// Profile value at `t`, held constant beyond the end knots.
    pub fn profile_at(&self, joint: usize, t: f64) -> f64 {
        let knots = &self.profiles[joint];
        match knots.iter().position(|&(tk, _)| tk > t) {
            None => knots.last().map_or(0.0, |k| k.1),
            Some(0) => knots[0].1,
            Some(i) => {
                let (t0, v0) = knots[i - 1];
                let (t1, v1) = knots[i];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimation {
    /// rad.
    pub attitude_noise: f64,
    /// rad/s.
    pub rate_noise: f64,
    pub pendulum_length: f64,
}

/// Validated scenario in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub file: ScenarioFile,
    pub lipm: LipmParams,
    /// Left-leg geometry; the right leg is its mirror.
    pub geometry: LegGeometry,
    pub hip_height: f64,
    /// Targets relative to the stance foot for a left swing.
    pub nominal: NominalGait,
    pub bounds: BoundsSource,
    pub ellipse: SwayEllipse,
    pub debounce: u32,
    pub capture_tolerance: f64,
    pub capture_hold: f64,
    pub multi_step: bool,
    pub max_steps: u32,
    pub swing: SwingParams,
    pub touchdown_height: f64,
    pub gains: ImpedanceGains,
    pub mode: ControlMode,
    pub kp: f64,
    pub plants: [JointPlant; 3],
    pub human: HumanTorque,
    pub estimation: Estimation,
    pub foot_half_extents: Vector2<f64>,
    pub pushes: Vec<Push>,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub initial_com: Vector2<f64>,
    pub initial_velocity: Vector2<f64>,
}

/// Line (1-based) of `key = ...` inside the table that owns the dotted key.
pub fn locate_key(text: &str, dotted: &str) -> Option<usize> {
    let (table, key) = match dotted.rsplit_once('.') {
        Some((t, k)) => (t, k),
        None => ("", dotted),
    };
    // `push[2].time` style keys point into arrays of tables
    let (table, index) = match table.split_once('[') {
        Some((t, rest)) => (t, rest.trim_end_matches(']').parse::<usize>().ok()),
        None => (table, None),
    };
    let mut current = String::new();
    let mut seen = 0usize;
    let mut first_header = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix("[[").and_then(|l| l.split(']').next()) {
            current = h.trim().to_string();
            if current == table {
                seen += 1;
                first_header.get_or_insert(n + 1);
            }
            continue;
        }
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = h.trim().to_string();
            if current == table {
                first_header.get_or_insert(n + 1);
            }
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs = lhs.trim();
        let in_table = current == table && index.is_none_or(|i| seen == i + 1);
        let full = if current.is_empty() { lhs.to_string() } else { format!("{current}.{lhs}") };
        if (in_table && lhs == key) || (index.is_none() && full == dotted) {
            return Some(n + 1);
        }
    }
    match index {
        Some(i) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| l.trim().starts_with(&format!("[[{table}]]")))
            .nth(i)
            .map(|(n, _)| n + 1),
        None => first_header,
    }
}

/// Apply one `key=value` override to a parsed document. The value is read
/// as TOML and falls back to a plain string.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let err = |key: &str, message: String| ConfigError {
        key: key.to_string(),
        line: None,
        message,
    };
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| err("", format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(err("", format!("override `{assignment}` has an empty key")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key is present"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| err(key, format!("`{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn toml_error(e: &toml::de::Error, text: &str) -> ConfigError {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    ConfigError {
        key: String::new(),
        line,
        message: match line {
            Some(l) => format!("line {l}: {}", e.message()),
            None => e.message().to_string(),
        },
    }
}

/// Parse scenario text with optional `key=value` overrides.
pub fn parse_scenario_str(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let file: ScenarioFile = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| toml_error(&e, text))?
    } else {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| toml_error(&e, text))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        ScenarioFile::deserialize(toml::Value::Table(doc)).map_err(|e| ConfigError {
            key: String::new(),
            line: None,
            message: format!("after overrides: {}", e.message()),
        })?
    };
    resolve(file).map_err(|mut e| {
        if !overrides.iter().any(|o| o.split('=').next().map(str::trim) == Some(e.key.as_str())) {
            e.line = locate_key(text, &e.key);
        }
        e
    })
}

pub fn parse_scenario(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: String::new(),
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_scenario_str(&text, overrides)
}

struct Checker;

impl Checker {
    fn fail<T>(key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            key: key.to_string(),
            line: None,
            message: message.into(),
        })
    }

    fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Self::fail(key, format!("must be positive, got {v}"))
        }
    }

    fn non_negative(key: &str, v: f64) -> Result<f64, ConfigError> {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Self::fail(key, format!("must be non-negative, got {v}"))
        }
    }

    fn finite(key: &str, v: &[f64]) -> Result<(), ConfigError> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Self::fail(key, "must be finite")
        }
    }
}

fn v2(a: [f64; 2]) -> Vector2<f64> {
    Vector2::new(a[0], a[1])
}

/// Validate a deserialized file and convert it to internal units. Filled-in
/// defaults are written back into the returned `file`.
pub fn resolve(mut file: ScenarioFile) -> Result<ScenarioConfig, ConfigError> {
    type C = Checker;
    let l = &file.lipm;
    C::positive("lipm.gravity", l.gravity)?;
    C::positive("lipm.com_height", l.com_height)?;
    C::positive("lipm.mass", l.mass)?;
    let lipm = LipmParams::new(l.gravity, l.com_height, l.mass).expect("checked above");

    let g = &file.geometry;
    for (k, v) in [("l0", g.l0), ("l1", g.l1), ("l2", g.l2), ("l3", g.l3)] {
        C::positive(&format!("geometry.{k}"), v)?;
    }
    for (j, [lo, hi]) in g.joint_limits.iter().copied().enumerate() {
        C::finite("geometry.joint_limits", &[lo, hi])?;
        if lo >= hi {
            return C::fail("geometry.joint_limits", format!("joint {j}: min {lo} is not below max {hi}"));
        }
    }
    let limits = JointLimits::from_degrees(g.joint_limits.map(|[a, b]| (a, b)));
    let geometry = LegGeometry::new(g.l0, g.l1, g.l2, g.l3, Side::Left)
        .expect("lengths checked above")
        .with_limits(limits);
    let hip_height = C::positive("geometry.hip_height", g.hip_height.unwrap_or(0.92 * (g.l2 + g.l3)))?;
    file.geometry.hip_height = Some(hip_height);
    let stance = FootTarget::new(0.0, geometry.l1, -hip_height);
    if let Err(e) = inverse_kinematics(&stance, &geometry) {
        return C::fail("geometry.hip_height", format!("standing pose is not reachable: {e}"));
    }

    let n = &file.nominal;
    C::finite("nominal.cop_t", &n.cop_t)?;
    C::finite("nominal.gamma", &n.gamma)?;
    C::positive("nominal.duration", n.duration)?;
    for (k, w) in n.weights.iter().enumerate() {
        C::positive(&format!("nominal.weights[{k}]"), *w)?;
    }
    let nominal = NominalGait {
        cop_t: v2(n.cop_t),
        gamma: v2(n.gamma),
        duration: n.duration,
        weights: Weights::new(n.weights[0], n.weights[1], n.weights[2]),
    };

    let b = &file.bounds;
    C::finite("bounds.cop_min", &b.cop_min)?;
    C::finite("bounds.cop_max", &b.cop_max)?;
    C::positive("bounds.t_min", b.t_min)?;
    C::positive("bounds.t_max", b.t_max)?;
    C::positive("bounds.remaining_floor", b.remaining_floor)?;
    let mut template = StepBounds::new(v2(b.cop_min), v2(b.cop_max), b.t_min, b.t_max);
    template.remaining_floor = b.remaining_floor;
    match (b.gamma_min, b.gamma_max) {
        (Some(lo), Some(hi)) => {
            C::finite("bounds.gamma_min", &lo)?;
            C::finite("bounds.gamma_max", &hi)?;
            template = template.with_gamma(v2(lo), v2(hi));
        }
        (None, None) => {}
        (Some(_), None) => return C::fail("bounds.gamma_max", "required when gamma_min is set"),
        (None, Some(_)) => return C::fail("bounds.gamma_min", "required when gamma_max is set"),
    }
    let bounds = match b.mode.as_str() {
        "explicit" => BoundsSource::Explicit(template),
        "workspace" => BoundsSource::Workspace {
            template,
            margin: C::non_negative("bounds.workspace_margin", b.workspace_margin)?,
        },
        other => return C::fail("bounds.mode", format!("expected `explicit` or `workspace`, got `{other}`")),
    };

    let d = &file.detector;
    let ellipse = SwayEllipse::new(
        Vector2::zeros(),
        C::positive("detector.semi_axis_x", d.semi_axis_x)?,
        C::positive("detector.semi_axis_y", d.semi_axis_y)?,
    )
    .expect("checked above");
    if d.debounce == 0 {
        return C::fail("detector.debounce", "must be at least 1");
    }
    C::positive("detector.capture_tolerance", d.capture_tolerance)?;
    C::non_negative("detector.capture_hold", d.capture_hold)?;
    if d.max_steps == 0 {
        return C::fail("detector.max_steps", "must be at least 1");
    }

    let s = &file.swing;
    C::positive("swing.peak_height", s.peak_height)?;
    if !(s.peak_fraction > 0.0 && s.peak_fraction < 1.0) {
        return C::fail("swing.peak_fraction", format!("must lie in (0, 1), got {}", s.peak_fraction));
    }
    C::positive("swing.touchdown_height", s.touchdown_height)?;
    let swing = SwingParams {
        peak_height: s.peak_height,
        peak_fraction: s.peak_fraction,
        ..SwingParams::default()
    };

    let c = &file.control;
    let mode = match c.mode.as_str() {
        "assist" => ControlMode::Assist,
        "zero_torque" => ControlMode::ZeroTorque,
        other => return C::fail("control.mode", format!("expected `assist` or `zero_torque`, got `{other}`")),
    };
    for j in 0..3 {
        C::non_negative(&format!("control.stiffness[{j}]"), c.stiffness[j])?;
        C::non_negative(&format!("control.damping[{j}]"), c.damping[j])?;
    }
    let gains = ImpedanceGains::from_degrees(c.stiffness, c.damping).expect("checked above");
    let kp = C::non_negative("control.kp", c.kp)?;

    let p = &file.plant;
    let mut plants = [JointPlant::new(1.0, 0.0).expect("valid"); 3];
    for j in 0..3 {
        plants[j] = JointPlant::new(
            C::positive(&format!("plant.inertia[{j}]"), p.inertia[j])?,
            C::non_negative(&format!("plant.damping[{j}]"), p.damping[j])?,
        )
        .expect("checked above");
    }

    let h = &file.human;
    for j in 0..3 {
        C::non_negative(&format!("human.noise_std[{j}]"), h.noise_std[j])?;
    }
    let mut profiles: [Vec<(f64, f64)>; 3] = Default::default();
    for (i, prof) in h.profile.iter().enumerate() {
        let key = format!("human.profile[{i}]");
        let j = match prof.joint.as_str() {
            "hip_abd" => 0,
            "hip_flex" => 1,
            "knee" => 2,
            other => return C::fail(&format!("{key}.joint"), format!("unknown joint `{other}`")),
        };
        if prof.t.len() != prof.torque.len() || prof.t.is_empty() {
            return C::fail(&key, "t and torque must be non-empty and of equal length");
        }
        C::finite(&format!("{key}.t"), &prof.t)?;
        C::finite(&format!("{key}.torque"), &prof.torque)?;
        if prof.t.windows(2).any(|w| w[1] <= w[0]) {
            return C::fail(&format!("{key}.t"), "knot times must be strictly increasing");
        }
        if !profiles[j].is_empty() {
            return C::fail(&format!("{key}.joint"), format!("joint `{}` already has a profile", prof.joint));
        }
        profiles[j] = prof.t.iter().copied().zip(prof.torque.iter().copied()).collect();
    }
    let human = HumanTorque {
        profiles,
        noise_std: h.noise_std,
    };

    let pendulum_length = C::positive(
        "estimation.pendulum_length",
        file.estimation.pendulum_length.unwrap_or(file.lipm.com_height),
    )?;
    file.estimation.pendulum_length = Some(pendulum_length);
    let e = &file.estimation;
    let estimation = Estimation {
        attitude_noise: C::non_negative("estimation.attitude_noise", e.attitude_noise)?.to_radians(),
        rate_noise: C::non_negative("estimation.rate_noise", e.rate_noise)?.to_radians(),
        pendulum_length,
    };

    let a = &file.ankle;
    C::positive("ankle.half_extents", a.half_extents[0])?;
    C::positive("ankle.half_extents", a.half_extents[1])?;

    let sim = &file.sim;
    let dt = sim.dt;
    if !(dt > 0.0 && dt <= MAX_DT) {
        return C::fail("sim.dt", format!("must lie in (0, {MAX_DT}], got {dt}"));
    }
    C::positive("sim.duration", sim.duration)?;
    C::finite("sim.initial_com", &sim.initial_com)?;
    C::finite("sim.initial_velocity", &sim.initial_velocity)?;

    let mut pushes = Vec::with_capacity(file.pushes.len());
    for (i, p) in file.pushes.iter().enumerate() {
        C::non_negative(&format!("push[{i}].time"), p.time)?;
        C::finite(&format!("push[{i}].impulse"), &p.impulse)?;
        if pushes.last().is_some_and(|q: &Push| q.time > p.time) {
            return C::fail(&format!("push[{i}].time"), "pushes must be sorted by time");
        }
        pushes.push(Push {
            time: p.time,
            impulse: v2(p.impulse),
        });
    }

    Ok(ScenarioConfig {
        lipm,
        geometry,
        hip_height,
        nominal,
        bounds,
        ellipse,
        debounce: d.debounce,
        capture_tolerance: d.capture_tolerance,
        capture_hold: d.capture_hold,
        multi_step: d.multi_step,
        max_steps: d.max_steps,
        swing,
        touchdown_height: s.touchdown_height,
        gains,
        mode,
        kp,
        plants,
        human,
        estimation,
        foot_half_extents: v2(a.half_extents),
        pushes,
        dt,
        duration: sim.duration,
        seed: sim.seed,
        initial_com: v2(sim.initial_com),
        initial_velocity: v2(sim.initial_velocity),
        file,
    })
}

impl ScenarioConfig {
    /// Ordering checks on the step bounds, run before a simulation starts.
    pub fn check_bounds(&self) -> Result<(), ConfigError> {
        let fail = |key: &str, message: String| ConfigError {
            key: key.to_string(),
            line: None,
            message,
        };
        let t = self.bounds.template();
        if let BoundsSource::Explicit(b) = self.bounds {
            for axis in 0..2 {
                if b.cop_min[axis] >= b.cop_max[axis] {
                    return Err(fail(
                        "bounds.cop_min",
                        format!("cop_min[{axis}] = {} is not below cop_max[{axis}] = {}", b.cop_min[axis], b.cop_max[axis]),
                    ));
                }
            }
        }
        if t.t_min >= t.t_max {
            return Err(fail("bounds.t_min", format!("t_min = {} is not below t_max = {}", t.t_min, t.t_max)));
        }
        if let Some((lo, hi)) = t.gamma {
            if lo.x >= hi.x || lo.y >= hi.y {
                return Err(fail("bounds.gamma_min", "gamma_min must be below gamma_max".into()));
            }
        }
        Ok(())
    }

    /// The standing joint pose of a leg: foot straight below the hip flex
    /// axis on the ground.
    pub fn standing_pose(&self) -> JointAngles {
        inverse_kinematics(&FootTarget::new(0.0, self.geometry.l1, -self.hip_height), &self.geometry)
            .expect("checked when the scenario was resolved")
    }

    /// The resolved file as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("scenario serializes")
    }
}
