//! Recovery-step planner.
//!
//! Landing at time `T` with constant stance CoP `cop0` puts the DCM at
//! `ξ_T = cop0 + (ξ0 − cop0)σ` with `σ = exp(ωT)`. Writing the offset at
//! landing as `γ_T = ξ_T − cop_T` gives a constraint that is linear in
//! `z = [cop_T, σ, γ_T]`:
//!
//! ```text
//!     γ_T + cop_T + (cop0 − ξ0)σ = cop0
//! ```
//!
//! The planner minimises the weighted squared deviation from a nominal step
//! under box bounds on `cop_T` and `σ`.

use crate::lipm::{CopPoint, DcmPoint};
use crate::qp::{QpProblem, QpSolution, QpSolver, QpStatus};
use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

/// Remaining swing time below which replanning stops moving the landing.
pub const DEFAULT_REMAINING_FLOOR: f64 = 0.1;

/// Index of `σ` in the decision vector.
pub const SIGMA: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
    #[error("step QP infeasible, violated: {}", .violated.join(", "))]
    Infeasible { violated: Vec<String> },
    #[error("step QP hit the iteration limit")]
    IterationLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Step position tracking.
    pub alpha1: f64,
    /// DCM offset tracking.
    pub alpha2: f64,
    /// Step timing tracking.
    pub alpha3: f64,
}

impl Weights {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Self {
        Self { alpha1, alpha2, alpha3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalGait {
    pub cop_t: Vector2<f64>,
    pub gamma: Vector2<f64>,
    pub duration: f64,
    pub weights: Weights,
}

impl NominalGait {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let w = self.weights;
        for (name, v) in [("alpha1", w.alpha1), ("alpha2", w.alpha2), ("alpha3", w.alpha3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PlannerError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(PlannerError::InvalidInput(format!(
                "nominal duration must be positive, got {}",
                self.duration
            )));
        }
        if !(finite2(&self.cop_t) && finite2(&self.gamma)) {
            return Err(PlannerError::InvalidInput("nominal targets must be finite".into()));
        }
        Ok(())
    }

    pub fn sigma(&self, omega: f64) -> f64 {
        (omega * self.duration).exp()
    }
}

/// Box on the landing CoP and on the step duration, plus an optional box on
/// the DCM offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBounds {
    pub cop_min: Vector2<f64>,
    pub cop_max: Vector2<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub gamma: Option<(Vector2<f64>, Vector2<f64>)>,
    /// Shortest remaining swing time a replan may ask for.
    pub remaining_floor: f64,
}

impl StepBounds {
    pub fn new(cop_min: Vector2<f64>, cop_max: Vector2<f64>, t_min: f64, t_max: f64) -> Self {
        Self {
            cop_min,
            cop_max,
            t_min,
            t_max,
            gamma: None,
            remaining_floor: DEFAULT_REMAINING_FLOOR,
        }
    }

    pub fn with_gamma(mut self, min: Vector2<f64>, max: Vector2<f64>) -> Self {
        self.gamma = Some((min, max));
        self
    }

    pub fn sigma_min(&self, omega: f64) -> f64 {
        (omega * self.t_min).exp()
    }

    pub fn sigma_max(&self, omega: f64) -> f64 {
        (omega * self.t_max).exp()
    }

    /// Strict ordering checks. The planner itself does not call this: an
    /// inverted box is left for the solver to report as infeasible.
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: String| Err(PlannerError::InvalidInput(m));
        if !(finite2(&self.cop_min) && finite2(&self.cop_max)) {
            return bad("cop bounds must be finite".into());
        }
        for axis in 0..2 {
            if self.cop_min[axis] >= self.cop_max[axis] {
                return bad(format!(
                    "cop_min[{axis}] = {} is not below cop_max[{axis}] = {}",
                    self.cop_min[axis], self.cop_max[axis]
                ));
            }
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) {
            return bad(format!(
                "need 0 < t_min < t_max, got t_min = {}, t_max = {}",
                self.t_min, self.t_max
            ));
        }
        if let Some((lo, hi)) = self.gamma {
            if !(finite2(&lo) && finite2(&hi) && lo[0] < hi[0] && lo[1] < hi[1]) {
                return bad("gamma bounds must be finite with min < max".into());
            }
        }
        if !(self.remaining_floor > 0.0 && self.remaining_floor.is_finite()) {
            return bad(format!("remaining_floor must be positive, got {}", self.remaining_floor));
        }
        Ok(())
    }

    /// Same box mirrored about the x axis.
    pub fn mirrored_y(&self) -> Self {
        let flip = |lo: Vector2<f64>, hi: Vector2<f64>| {
            (Vector2::new(lo.x, -hi.y), Vector2::new(hi.x, -lo.y))
        };
        let (cop_min, cop_max) = flip(self.cop_min, self.cop_max);
        Self {
            cop_min,
            cop_max,
            gamma: self.gamma.map(|(lo, hi)| flip(lo, hi)),
            ..*self
        }
    }

    /// Same box translated by `offset`.
    pub fn shifted(&self, offset: Vector2<f64>) -> Self {
        Self {
            cop_min: self.cop_min + offset,
            cop_max: self.cop_max + offset,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerInput {
    pub xi0: DcmPoint,
    pub cop0: CopPoint,
    pub omega: f64,
    pub nominal: NominalGait,
    pub bounds: StepBounds,
}

impl PlannerInput {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(PlannerError::InvalidInput(format!("omega must be positive, got {}", self.omega)));
        }
        if !(finite2(&self.xi0.0) && finite2(&self.cop0.0)) {
            return Err(PlannerError::InvalidInput("xi0 and cop0 must be finite".into()));
        }
        if !(self.bounds.t_min.is_finite() && self.bounds.t_max.is_finite()) {
            return Err(PlannerError::InvalidInput("duration bounds must be finite".into()));
        }
        self.nominal.validate()
    }

    /// The DCM offset at landing implied by `cop_t` and `sigma`.
    pub fn implied_gamma(&self, cop_t: Vector2<f64>, sigma: f64) -> Vector2<f64> {
        self.cop0.0 - cop_t - (self.cop0.0 - self.xi0.0) * sigma
    }

    /// The DCM that makes the nominal step exactly optimal.
    pub fn nominal_consistent_xi0(
        cop0: CopPoint,
        omega: f64,
        nominal: &NominalGait,
    ) -> DcmPoint {
        let s = nominal.sigma(omega);
        DcmPoint(cop0.0 - (cop0.0 - nominal.gamma - nominal.cop_t) / s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub cop_t: Vector2<f64>,
    pub gamma_t: Vector2<f64>,
    pub sigma: f64,
    /// Swing time left from `issued_at` until landing.
    pub duration: f64,
    pub objective: f64,
    pub status: QpStatus,
    pub active_set: Vec<usize>,
    /// Swing-elapsed time at which the plan was computed.
    pub issued_at: f64,
    /// True when the remaining window was empty and the plan was pinned.
    pub terminal: bool,
}

impl StepPlan {
    /// Swing-elapsed time of the planned landing.
    pub fn landing_time(&self) -> f64 {
        self.issued_at + self.duration
    }
}

/// Human-readable name of inequality row `i` in [`assemble_qp`] order.
pub fn constraint_name(i: usize) -> &'static str {
    const NAMES: [&str; 10] = [
        "cop_x <= cop_max_x",
        "cop_y <= cop_max_y",
        "cop_x >= cop_min_x",
        "cop_y >= cop_min_y",
        "sigma <= sigma_max",
        "sigma >= sigma_min",
        "gamma_x <= gamma_max_x",
        "gamma_y <= gamma_max_y",
        "gamma_x >= gamma_min_x",
        "gamma_y >= gamma_min_y",
    ];
    NAMES.get(i).copied().unwrap_or("unknown")
}

/// Targets and weights of one solve; replanning rescales the timing term.
#[derive(Debug, Clone, Copy)]
struct Costs {
    cop: Vector2<f64>,
    gamma: Vector2<f64>,
    sigma: f64,
    a1: f64,
    a2: f64,
    a3: f64,
}

impl Costs {
    fn of(input: &PlannerInput) -> Self {
        let w = input.nominal.weights;
        Self {
            cop: input.nominal.cop_t,
            gamma: input.nominal.gamma,
            sigma: input.nominal.sigma(input.omega),
            a1: w.alpha1,
            a2: w.alpha2,
            a3: w.alpha3,
        }
    }

    fn value(&self, cop_t: &Vector2<f64>, gamma_t: &Vector2<f64>, sigma: f64) -> f64 {
        self.a1 * (cop_t - self.cop).norm_squared()
            + self.a2 * (gamma_t - self.gamma).norm_squared()
            + self.a3 * (sigma - self.sigma).powi(2)
    }
}

/// Build the step QP with `σ ∈ [sigma_lo, sigma_hi]`.
fn build(input: &PlannerInput, costs: &Costs, sigma_lo: f64, sigma_hi: f64) -> QpProblem {
    let h = DMatrix::from_diagonal(&DVector::from_vec(vec![
        2.0 * costs.a1,
        2.0 * costs.a1,
        2.0 * costs.a3,
        2.0 * costs.a2,
        2.0 * costs.a2,
    ]));
    let c = DVector::from_vec(vec![
        -2.0 * costs.a1 * costs.cop.x,
        -2.0 * costs.a1 * costs.cop.y,
        -2.0 * costs.a3 * costs.sigma,
        -2.0 * costs.a2 * costs.gamma.x,
        -2.0 * costs.a2 * costs.gamma.y,
    ]);
    let constant = costs.a1 * costs.cop.norm_squared()
        + costs.a2 * costs.gamma.norm_squared()
        + costs.a3 * costs.sigma * costs.sigma;

    let d = input.cop0.0 - input.xi0.0;
    let mut e = DMatrix::zeros(2, 5);
    for axis in 0..2 {
        e[(axis, axis)] = 1.0;
        e[(axis, SIGMA)] = d[axis];
        e[(axis, 3 + axis)] = 1.0;
    }
    let f = DVector::from_column_slice(input.cop0.0.as_slice());

    let b = &input.bounds;
    let rows = if b.gamma.is_some() { 10 } else { 6 };
    let mut a = DMatrix::zeros(rows, 5);
    let mut r = DVector::zeros(rows);
    for axis in 0..2 {
        a[(axis, axis)] = 1.0;
        r[axis] = b.cop_max[axis];
        a[(2 + axis, axis)] = -1.0;
        r[2 + axis] = -b.cop_min[axis];
    }
    a[(4, SIGMA)] = 1.0;
    r[4] = sigma_hi;
    a[(5, SIGMA)] = -1.0;
    r[5] = -sigma_lo;
    if let Some((lo, hi)) = b.gamma {
        for axis in 0..2 {
            a[(6 + axis, 3 + axis)] = 1.0;
            r[6 + axis] = hi[axis];
            a[(8 + axis, 3 + axis)] = -1.0;
            r[8 + axis] = -lo[axis];
        }
    }

    QpProblem::new(h, c)
        .and_then(|p| p.with_equalities(e, f))
        .and_then(|p| p.with_inequalities(a, r))
        .map(|p| p.with_constant(constant))
        .expect("planner QP dimensions are fixed")
}

/// The step QP for `input`: decision vector `[cop_x, cop_y, σ, γ_x, γ_y]`,
/// Hessian `2·diag(α1, α1, α3, α2, α2)`, two equality rows and the bound
/// rows `cop ≤ max`, `−cop ≤ −min`, `σ ≤ σ_max`, `−σ ≤ −σ_min`.
pub fn assemble_qp(input: &PlannerInput) -> QpProblem {
    let b = &input.bounds;
    build(input, &Costs::of(input), b.sigma_min(input.omega), b.sigma_max(input.omega))
}

fn finish(
    input: &PlannerInput,
    costs: &Costs,
    sol: QpSolution,
    issued_at: f64,
    problem: &QpProblem,
) -> Result<StepPlan, PlannerError> {
    match sol.status {
        QpStatus::Optimal => {}
        QpStatus::Infeasible => {
            let mut violated: Vec<String> =
                sol.violated.iter().map(|&i| constraint_name(i).to_string()).collect();
            if violated.is_empty() {
                // The box and the landing constraint are jointly empty even
                // though no single row is to blame.
                violated = (0..problem.num_inequalities())
                    .map(|i| constraint_name(i).to_string())
                    .collect();
            }
            return Err(PlannerError::Infeasible { violated });
        }
        QpStatus::IterationLimit => return Err(PlannerError::IterationLimit),
    }
    let z = &sol.z;
    let cop_t = Vector2::new(z[0], z[1]);
    let sigma = z[SIGMA];
    let gamma_t = Vector2::new(z[3], z[4]);
    Ok(StepPlan {
        cop_t,
        gamma_t,
        sigma,
        duration: sigma.ln() / input.omega,
        objective: costs.value(&cop_t, &gamma_t, sigma),
        status: sol.status,
        active_set: sol.active_set,
        issued_at,
        terminal: false,
    })
}

/// One-shot solve at swing start.
pub fn plan_step(input: &PlannerInput, solver: &QpSolver) -> Result<StepPlan, PlannerError> {
    input.validate()?;
    let problem = assemble_qp(input);
    let sol = solver.solve(&problem);
    finish(input, &Costs::of(input), sol, 0.0, &problem)
}

/// Re-solve `elapsed` seconds into the swing with the latest DCM in
/// `input.xi0`.
///
/// The decision variable becomes the remaining `σ_r = exp(ω·T_r)`. The
/// timing target shrinks to `exp(ω(T_nom − elapsed))` and its weight grows
/// by `exp(2ω·elapsed)`, so a DCM that evolved exactly as predicted yields
/// the same landing point and time. The remaining window is
/// `[max(floor, T_min − elapsed), min(T_max, previous landing) − elapsed]`;
/// the landing is never postponed. An empty window pins the remaining time
/// to the floor, holds the previous `cop_T` and reports a terminal plan.
pub fn replan(
    current: &StepPlan,
    input: &PlannerInput,
    elapsed: f64,
    solver: &QpSolver,
) -> Result<StepPlan, PlannerError> {
    input.validate()?;
    if !(elapsed.is_finite() && elapsed >= 0.0) {
        return Err(PlannerError::InvalidInput(format!("elapsed must be non-negative, got {elapsed}")));
    }
    let b = &input.bounds;
    let omega = input.omega;
    let floor = b.remaining_floor;
    let lo_t = (b.t_min - elapsed).max(floor);
    let hi_t = (b.t_max - elapsed).min(current.landing_time() - elapsed);
    // a landing time recovered through ln(σ)/ω can sit an ulp below T_min
    let lo_t = if lo_t > hi_t && lo_t - hi_t <= 1e-9 { hi_t } else { lo_t };

    let base = Costs::of(input);
    let costs = Costs {
        sigma: (omega * (input.nominal.duration - elapsed)).exp(),
        a3: base.a3 * (2.0 * omega * elapsed).exp(),
        ..base
    };

    if lo_t > hi_t {
        let sigma = (omega * floor).exp();
        let cop_t = current.cop_t;
        let gamma_t = input.implied_gamma(cop_t, sigma);
        return Ok(StepPlan {
            cop_t,
            gamma_t,
            sigma,
            duration: floor,
            objective: costs.value(&cop_t, &gamma_t, sigma),
            status: QpStatus::Optimal,
            active_set: current.active_set.clone(),
            issued_at: elapsed,
            terminal: true,
        });
    }

    let problem = build(input, &costs, (omega * lo_t).exp(), (omega * hi_t).exp());
    let sol = solver.solve_warm(&problem, &current.active_set);
    finish(input, &costs, sol, elapsed, &problem)
}

fn finite2(v: &Vector2<f64>) -> bool {
    v.x.is_finite() && v.y.is_finite()
}
