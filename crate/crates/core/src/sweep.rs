//! One-shot plans from a scenario and weight sweeps on a fixed input.

use crate::kinematics::Side;
use crate::lipm::{CopPoint, DcmPoint};
use crate::output::num;
use crate::planner::{plan_step, PlannerError, PlannerInput, StepPlan, Weights};
use crate::qp::QpSolver;
use crate::scenario::{locate_key, ConfigError, ScenarioConfig};
use crate::sim::{step_problem, swing_side};
use nalgebra::Vector2;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanRequest {
    pub xi0: DcmPoint,
    /// Stance foot centre.
    pub cop0: CopPoint,
    /// Swing side; picked from the DCM offset when absent.
    pub side: Option<Side>,
}

/// The planner input for a request, with the nominal step and bounds placed
/// around the stance foot. The CoM is taken midway between the feet.
pub fn request_input(cfg: &ScenarioConfig, req: &PlanRequest) -> Result<(Side, PlannerInput), String> {
    let side = req.side.unwrap_or_else(|| swing_side(req.xi0, req.cop0));
    let s = side.sign();
    let com = req.cop0.0 + Vector2::new(0.0, s * cfg.geometry.stance_width());
    let hip = com + Vector2::new(0.0, s * cfg.geometry.l0);
    let (nominal, bounds) = step_problem(cfg, side, req.cop0.0, hip)?;
    Ok((
        side,
        PlannerInput {
            xi0: req.xi0,
            cop0: req.cop0,
            omega: cfg.lipm.omega(),
            nominal,
            bounds,
        },
    ))
}

pub fn parse_side(s: &str) -> Option<Side> {
    match s {
        "left" => Some(Side::Left),
        "right" => Some(Side::Right),
        _ => None,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    xi0: [f64; 2],
    cop0: [f64; 2],
    #[serde(default)]
    side: Option<String>,
    weights: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    pub request: PlanRequest,
    pub weights: Vec<Weights>,
}

/// Grid file: `xi0`, `cop0`, optional `side` and a `weights` list of
/// `[α1, α2, α3]` triples, at least two.
pub fn parse_grid(text: &str) -> Result<WeightGrid, ConfigError> {
    let fail = |key: &str, message: String| ConfigError {
        key: key.to_string(),
        line: locate_key(text, key),
        message,
    };
    let g: GridFile = toml::from_str(text).map_err(|e| ConfigError {
        key: String::new(),
        line: None,
        message: e.to_string(),
    })?;
    if g.weights.len() < 2 {
        return Err(fail("weights", format!("need at least two triples, got {}", g.weights.len())));
    }
    for (i, w) in g.weights.iter().enumerate() {
        if !w.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(fail("weights", format!("triple {i} has a non-positive weight")));
        }
    }
    if !g.xi0.iter().chain(&g.cop0).all(|v| v.is_finite()) {
        return Err(fail("xi0", "xi0 and cop0 must be finite".into()));
    }
    let side = match g.side.as_deref() {
        None => None,
        Some(s) => Some(parse_side(s).ok_or_else(|| fail("side", format!("expected `left` or `right`, got `{s}`")))?),
    };
    Ok(WeightGrid {
        request: PlanRequest {
            xi0: DcmPoint::new(g.xi0[0], g.xi0[1]),
            cop0: CopPoint::new(g.cop0[0], g.cop0[1]),
            side,
        },
        weights: g.weights.iter().map(|w| Weights::new(w[0], w[1], w[2])).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub weights: Weights,
    pub plan: Result<StepPlan, PlannerError>,
}

impl SweepRow {
    /// Distance from the stance foot to the planned step.
    pub fn step_length(&self, input: &PlannerInput) -> Option<f64> {
        self.plan.as_ref().ok().map(|p| (p.cop_t - input.cop0.0).norm())
    }
}

pub fn sweep_row(input: &PlannerInput, weights: Weights) -> SweepRow {
    let mut input = *input;
    input.nominal.weights = weights;
    SweepRow {
        weights,
        plan: plan_step(&input, &QpSolver::default()),
    }
}

/// Index of the solved row with the shortest step, longest duration on ties
/// within a micrometre.
pub fn select_row(rows: &[SweepRow], input: &PlannerInput) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, r) in rows.iter().enumerate() {
        let (Some(len), Ok(plan)) = (r.step_length(input), &r.plan) else { continue };
        let better = match best {
            None => true,
            Some((_, bl, bd)) => len < bl - 1e-6 || (len <= bl + 1e-6 && plan.duration > bd),
        };
        if better {
            best = Some((i, len, plan.duration));
        }
    }
    best.map(|b| b.0)
}

pub const SWEEP_HEADER: &str =
    "index,alpha1,alpha2,alpha3,status,duration,cop_x,cop_y,step_length,gamma_x,gamma_y,objective,selected";

pub fn sweep_csv(rows: &[SweepRow], input: &PlannerInput) -> String {
    let selected = select_row(rows, input);
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let w = r.weights;
        let mut f = vec![i.to_string(), num(w.alpha1), num(w.alpha2), num(w.alpha3)];
        match &r.plan {
            Ok(p) => {
                f.push(p.status.to_string());
                f.extend([p.duration, p.cop_t.x, p.cop_t.y].map(num));
                f.push(num(r.step_length(input).expect("solved")));
                f.extend([p.gamma_t.x, p.gamma_t.y, p.objective].map(num));
            }
            Err(e) => {
                f.push(match e {
                    PlannerError::Infeasible { .. } => "infeasible".into(),
                    PlannerError::IterationLimit => "iteration_limit".into(),
                    PlannerError::InvalidInput(_) => "invalid".into(),
                });
                f.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        f.push(u8::from(selected == Some(i)).to_string());
        out.push_str(&f.join(","));
        out.push('\n');
    }
    out
}
