//! Joint impedance control and a single-joint plant for closed-loop runs.
//!
//! Joint order everywhere is hip abd/add, hip flex/ext, knee flex/ext.

use crate::kinematics::JointAngles;
use thiserror::Error;

/// Joint stiffness from the assistive controller, N·m/deg.
pub const DEFAULT_STIFFNESS_PER_DEG: [f64; 3] = [1.5, 0.4, 0.4];
/// Inner torque-loop gain.
pub const DEFAULT_KP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("plant inertia must be positive, got {0}")]
    Inertia(f64),
    #[error("time step {0} outside (0, 0.01]")]
    Step(f64),
}

fn non_negative(name: &'static str, value: f64) -> Result<f64, ControlError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ControlError::Negative { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    /// N·m/rad.
    pub stiffness: [f64; 3],
    /// N·m·s/rad.
    pub damping: [f64; 3],
}

impl ImpedanceGains {
    /// Stiffness given in N·m/deg, damping in N·m·s/rad.
    pub fn from_degrees(stiffness_per_deg: [f64; 3], damping: [f64; 3]) -> Result<Self, ControlError> {
        const NAMES: [&str; 3] = ["stiffness[0]", "stiffness[1]", "stiffness[2]"];
        const DAMP: [&str; 3] = ["damping[0]", "damping[1]", "damping[2]"];
        let mut stiffness = [0.0; 3];
        for j in 0..3 {
            // divide by the same factor `to_radians` multiplies with, so a one
            // degree error reproduces the per-degree figure
            stiffness[j] = non_negative(NAMES[j], stiffness_per_deg[j])? / (std::f64::consts::PI / 180.0);
            non_negative(DAMP[j], damping[j])?;
        }
        Ok(Self { stiffness, damping })
    }

    pub fn zero() -> Self {
        Self {
            stiffness: [0.0; 3],
            damping: [0.0; 3],
        }
    }
}

impl Default for ImpedanceGains {
    fn default() -> Self {
        Self::from_degrees(DEFAULT_STIFFNESS_PER_DEG, [0.0; 3]).expect("default gains are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlMode {
    ZeroTorque,
    #[default]
    Assist,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub angle: f64,
    pub velocity: f64,
    pub measured_torque: f64,
}

impl JointState {
    pub fn at(angle: f64) -> Self {
        Self {
            angle,
            velocity: 0.0,
            measured_torque: 0.0,
        }
    }
}

/// `τ = k(θ_des − θ) − d·θ̇` in assist mode, zero otherwise.
pub fn impedance_torque(
    desired: &JointAngles,
    measured: &[JointState; 3],
    gains: &ImpedanceGains,
    mode: ControlMode,
) -> [f64; 3] {
    if mode == ControlMode::ZeroTorque {
        return [0.0; 3];
    }
    let want = desired.as_array();
    let mut tau = [0.0; 3];
    for j in 0..3 {
        let e = want[j] - measured[j].angle;
        // + 0.0 turns a signed zero into +0
        tau[j] = gains.stiffness[j] * e - gains.damping[j] * measured[j].velocity + 0.0;
    }
    tau
}

/// Inner proportional torque loop.
pub fn p_torque_loop(tau_desired: f64, tau_measured: f64, kp: f64) -> f64 {
    tau_desired + kp * (tau_desired - tau_measured)
}

/// Actuator commands for all three joints. The hip abd/add joint has no
/// torque sensor and is commanded directly.
pub fn joint_commands(tau_desired: &[f64; 3], measured: &[JointState; 3], kp: f64) -> [f64; 3] {
    [
        tau_desired[0],
        p_torque_loop(tau_desired[1], measured[1].measured_torque, kp),
        p_torque_loop(tau_desired[2], measured[2].measured_torque, kp),
    ]
}

/// `I·θ̈ = τ − b·θ̇` for one joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPlant {
    pub inertia: f64,
    pub viscous_damping: f64,
}

impl JointPlant {
    pub fn new(inertia: f64, viscous_damping: f64) -> Result<Self, ControlError> {
        if !(inertia.is_finite() && inertia > 0.0) {
            return Err(ControlError::Inertia(inertia));
        }
        non_negative("viscous_damping", viscous_damping)?;
        Ok(Self {
            inertia,
            viscous_damping,
        })
    }
}

/// One RK4 step with both torques held constant over `dt`.
pub fn joint_plant_step(
    state: &JointState,
    applied_torque: f64,
    human_torque: f64,
    plant: &JointPlant,
    dt: f64,
) -> Result<JointState, ControlError> {
    if !(dt > 0.0 && dt <= 0.01) {
        return Err(ControlError::Step(dt));
    }
    if !(plant.inertia.is_finite() && plant.inertia > 0.0) {
        return Err(ControlError::Inertia(plant.inertia));
    }
    let tau = applied_torque + human_torque;
    let acc = |v: f64| (tau - plant.viscous_damping * v) / plant.inertia;
    let (q, v) = (state.angle, state.velocity);
    let (k1q, k1v) = (v, acc(v));
    let (k2q, k2v) = (v + 0.5 * dt * k1v, acc(v + 0.5 * dt * k1v));
    let (k3q, k3v) = (v + 0.5 * dt * k2v, acc(v + 0.5 * dt * k2v));
    let (k4q, k4v) = (v + dt * k3v, acc(v + dt * k3v));
    Ok(JointState {
        angle: q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        velocity: v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        measured_torque: applied_torque,
    })
}
