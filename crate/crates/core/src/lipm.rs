//! Linear inverted pendulum and divergent component of motion (DCM).
//!
//! The horizontal centre of mass `x` obeys `ẍ = ω²(x − cop)` with
//! `ω = sqrt(g / Δz)`. The DCM `ξ = x + ẋ/ω` splits the dynamics into a
//! stable part (`ẋ = ω(ξ − x)`) and an unstable part (`ξ̇ = ω(ξ − cop)`).
//! All positions live in a world frame whose origin is the initial stance CoP.

use nalgebra::Vector2;
use thiserror::Error;

/// Largest integration step accepted by [`step_lipm`].
pub const MAX_DT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LipmError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("integration step {0} outside (0, {MAX_DT}]")]
    StepOutOfRange(f64),
}

fn positive(name: &'static str, value: f64) -> Result<f64, LipmError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(LipmError::NonPositive { name, value })
    }
}

/// `sqrt(g / Δz)`.
pub fn natural_frequency(gravity: f64, com_height: f64) -> Result<f64, LipmError> {
    let g = positive("gravity", gravity)?;
    let h = positive("com_height", com_height)?;
    Ok((g / h).sqrt())
}

/// Pendulum parameters. `omega` is derived and cannot be set on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipmParams {
    gravity: f64,
    com_height: f64,
    mass: f64,
    omega: f64,
}

impl LipmParams {
    pub fn new(gravity: f64, com_height: f64, mass: f64) -> Result<Self, LipmError> {
        let omega = natural_frequency(gravity, com_height)?;
        let mass = positive("mass", mass)?;
        Ok(Self {
            gravity,
            com_height,
            mass,
            omega,
        })
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn com_height(&self) -> f64 {
        self.com_height
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn with_com_height(self, com_height: f64) -> Result<Self, LipmError> {
        Self::new(self.gravity, com_height, self.mass)
    }

    pub fn with_gravity(self, gravity: f64) -> Result<Self, LipmError> {
        Self::new(gravity, self.com_height, self.mass)
    }
}

/// Horizontal CoM position and velocity at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentroidalState {
    pub com: Vector2<f64>,
    pub com_vel: Vector2<f64>,
    pub time: f64,
}

impl CentroidalState {
    pub fn new(com: Vector2<f64>, com_vel: Vector2<f64>, time: f64) -> Self {
        Self { com, com_vel, time }
    }

    pub fn at_rest(com: Vector2<f64>) -> Self {
        Self::new(com, Vector2::zeros(), 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.com.iter().chain(self.com_vel.iter()).all(|v| v.is_finite()) && self.time.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcmPoint(pub Vector2<f64>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopPoint(pub Vector2<f64>);

impl DcmPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self(Vector2::new(x, y))
    }
}

impl CopPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self(Vector2::new(x, y))
    }

    pub fn origin() -> Self {
        Self(Vector2::zeros())
    }
}

/// `ξ = x + ẋ/ω`.
pub fn dcm_of(state: &CentroidalState, params: &LipmParams) -> DcmPoint {
    DcmPoint(state.com + state.com_vel / params.omega)
}

/// `ξ̇ = ω(ξ − cop)`.
pub fn dcm_flow(xi: DcmPoint, cop: CopPoint, params: &LipmParams) -> Vector2<f64> {
    (xi.0 - cop.0) * params.omega
}

/// `ẋ = ω(ξ − x)`.
pub fn com_flow(state: &CentroidalState, xi: DcmPoint, params: &LipmParams) -> Vector2<f64> {
    (xi.0 - state.com) * params.omega
}

/// DCM after `t` seconds under a constant CoP: `(ξ0 − cop0)·e^{ωt} + cop0`.
pub fn dcm_closed_form(
    xi0: DcmPoint,
    cop0: CopPoint,
    params: &LipmParams,
    t: f64,
) -> Result<DcmPoint, LipmError> {
    if t < 0.0 || t.is_nan() {
        return Err(LipmError::NegativeTime(t));
    }
    Ok(DcmPoint((xi0.0 - cop0.0) * (params.omega * t).exp() + cop0.0))
}

/// CoM after `t` seconds with the DCM held at `ξ0`: `(x0 − ξ0)·e^{−ωt} + ξ0`.
///
/// Only exact while the DCM does not move, i.e. when `ξ0` coincides with the CoP.
pub fn com_closed_form(
    x0: Vector2<f64>,
    xi0: DcmPoint,
    params: &LipmParams,
    t: f64,
) -> Result<Vector2<f64>, LipmError> {
    if t < 0.0 || t.is_nan() {
        return Err(LipmError::NegativeTime(t));
    }
    Ok((x0 - xi0.0) * (-params.omega * t).exp() + xi0.0)
}

/// One classic RK4 step of `ẍ = ω²(x − cop)` with the CoP held constant.
pub fn step_lipm(
    state: &CentroidalState,
    cop: CopPoint,
    params: &LipmParams,
    dt: f64,
) -> Result<CentroidalState, LipmError> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(LipmError::StepOutOfRange(dt));
    }
    let w2 = params.omega * params.omega;
    let accel = |x: Vector2<f64>| (x - cop.0) * w2;

    let (x, v) = (state.com, state.com_vel);
    let k1x = v;
    let k1v = accel(x);
    let k2x = v + k1v * (0.5 * dt);
    let k2v = accel(x + k1x * (0.5 * dt));
    let k3x = v + k2v * (0.5 * dt);
    let k3v = accel(x + k2x * (0.5 * dt));
    let k4x = v + k3v * dt;
    let k4v = accel(x + k3x * dt);

    let com = x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
    let com_vel = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
    Ok(CentroidalState {
        com,
        com_vel,
        time: state.time + dt,
    })
}

/// Instantaneous push: `ẋ += J/m`, position untouched.
pub fn apply_impulse(
    state: &CentroidalState,
    impulse: Vector2<f64>,
    params: &LipmParams,
) -> CentroidalState {
    CentroidalState {
        com_vel: state.com_vel + impulse / params.mass,
        ..*state
    }
}

/// Per-axis first integral `½ẋ² − ½ω²(x − cop)²` of the pendulum under a fixed CoP.
pub fn orbital_energy(state: &CentroidalState, cop: CopPoint, params: &LipmParams) -> Vector2<f64> {
    let w2 = params.omega * params.omega;
    let d = state.com - cop.0;
    Vector2::new(
        0.5 * state.com_vel.x * state.com_vel.x - 0.5 * w2 * d.x * d.x,
        0.5 * state.com_vel.y * state.com_vel.y - 0.5 * w2 * d.y * d.y,
    )
}
