//! Three-joint leg kinematics.
//!
//! Each leg is expressed in its own frame with the origin on the hip abd/add
//! axis, x forward, y left and z up. The trunk centre sits at `(0, −s·l0, 0)`
//! in that frame, where `s = +1` for the left leg and `−1` for the right.
//!
//! With the hip abd/add rotation undone, the leg is planar: the hip flex/ext
//! axis is `s·l1` to the side, and
//!
//! ```text
//!     x_s = l2·sin θ2 + l3·sin(θ2 − θ3)
//!     z_s = −(l2·cos θ2 + l3·cos(θ2 − θ3))
//! ```
//!
//! The abd/add joint then rotates `(s·l1, z_s)` about the x axis by `−θ1`.
//! The zero pose is the straight leg hanging down, and knee flexion is
//! non-negative. Inverse kinematics assumes the foot is below the hip in the
//! leg plane (`z_s < 0`); the mirrored abd/add solution is never returned.

use nalgebra::{Vector2, Vector3};
use std::f64::consts::PI;
use thiserror::Error;

/// Guard band applied to the lateral offset and to `|D|`.
pub const WORKSPACE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    HipAbduction,
    HipFlexion,
    Knee,
}

impl Joint {
    pub const ALL: [Joint; 3] = [Joint::HipAbduction, Joint::HipFlexion, Joint::Knee];

    pub fn name(self) -> &'static str {
        match self {
            Joint::HipAbduction => "hip_abd",
            Joint::HipFlexion => "hip_flex",
            Joint::Knee => "knee",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("segment length {name} must be positive, got {value}")]
    BadLength { name: &'static str, value: f64 },
    #[error("target non-finite")]
    NonFinite,
    #[error("target too close to the abd/add axis: r = {r} < l1 = {l1}")]
    InsideOffset { r: f64, l1: f64 },
    #[error("target outside the leg's reach: |D| = {0}")]
    OutOfReach(f64),
    #[error("{} = {value} rad outside [{min}, {max}]", joint.name())]
    JointLimit { joint: Joint, value: f64, min: f64, max: f64 },
    #[error("workspace box is empty: {0}")]
    EmptyBox(String),
}

/// Per-joint `[min, max]` in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits(pub [(f64, f64); 3]);

impl JointLimits {
    pub fn from_degrees(limits: [(f64, f64); 3]) -> Self {
        Self(limits.map(|(lo, hi)| (lo.to_radians(), hi.to_radians())))
    }

    pub fn unlimited() -> Self {
        Self([(-PI, PI); 3])
    }

    pub fn check(&self, angles: &JointAngles) -> Result<(), KinematicsError> {
        for (k, joint) in Joint::ALL.into_iter().enumerate() {
            let value = angles.as_array()[k];
            let (min, max) = self.0[k];
            if value < min || value > max {
                return Err(KinematicsError::JointLimit { joint, value, min, max });
            }
        }
        Ok(())
    }
}

impl Default for JointLimits {
    fn default() -> Self {
        Self::from_degrees([(-20.0, 20.0), (-20.0, 100.0), (0.0, 120.0)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegGeometry {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub side: Side,
    pub limits: JointLimits,
}

impl LegGeometry {
    pub fn new(l0: f64, l1: f64, l2: f64, l3: f64, side: Side) -> Result<Self, KinematicsError> {
        for (name, value) in [("l0", l0), ("l1", l1), ("l2", l2), ("l3", l3)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(KinematicsError::BadLength { name, value });
            }
        }
        Ok(Self {
            l0,
            l1,
            l2,
            l3,
            side,
            limits: JointLimits::default(),
        })
    }

    pub fn with_limits(mut self, limits: JointLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn mirrored(&self) -> Self {
        Self {
            side: self.side.other(),
            ..*self
        }
    }

    /// Hip abd/add axis position relative to the trunk centre.
    pub fn hip_in_trunk(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.side.sign() * self.l0, 0.0)
    }

    /// Lateral distance from the trunk centre to the foot in the zero pose.
    pub fn stance_width(&self) -> f64 {
        self.l0 + self.l1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl JointAngles {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self { theta1, theta2, theta3 }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta1, self.theta2, self.theta3]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Foot position in the leg frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootTarget {
    pub position: Vector3<f64>,
}

impl FootTarget {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            position: Vector3::new(x, y, z),
        }
    }

    pub fn mirrored(&self) -> Self {
        let p = self.position;
        Self::new(p.x, -p.y, p.z)
    }
}

/// How the knee angle is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KneeFormula {
    /// Two-argument form with knee flexion in `[0, π]`.
    #[default]
    TwoArgument,
    /// `arctan(−D / sqrt(1 − D²))` as commonly printed, which equals the
    /// two-argument angle minus `π/2`. Fails the roundtrip; reference only.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub knee: KneeFormula,
    pub check_limits: bool,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            knee: KneeFormula::TwoArgument,
            check_limits: true,
        }
    }
}

pub fn forward_kinematics(angles: &JointAngles, geom: &LegGeometry) -> FootTarget {
    let JointAngles { theta1, theta2, theta3 } = *angles;
    let s = geom.side.sign();
    let xs = geom.l2 * theta2.sin() + geom.l3 * (theta2 - theta3).sin();
    let zs = -(geom.l2 * theta2.cos() + geom.l3 * (theta2 - theta3).cos());
    let (s1, c1) = theta1.sin_cos();
    FootTarget::new(xs, s * geom.l1 * c1 + zs * s1, -s * geom.l1 * s1 + zs * c1)
}

/// The two quantities the workspace guard tests: `r = sqrt(y² + z²)` and the
/// law-of-cosines ratio `D`.
pub fn workspace_measures(target: &FootTarget, geom: &LegGeometry) -> (f64, f64) {
    let p = target.position;
    let r2 = p.y * p.y + p.z * p.z;
    let d = (r2 - geom.l1 * geom.l1 + p.x * p.x - geom.l2 * geom.l2 - geom.l3 * geom.l3)
        / (2.0 * geom.l2 * geom.l3);
    (r2.sqrt(), d)
}

fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

pub fn inverse_kinematics(target: &FootTarget, geom: &LegGeometry) -> Result<JointAngles, KinematicsError> {
    inverse_kinematics_with(target, geom, IkOptions::default())
}

pub fn inverse_kinematics_with(
    target: &FootTarget,
    geom: &LegGeometry,
    options: IkOptions,
) -> Result<JointAngles, KinematicsError> {
    let p = target.position;
    if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
        return Err(KinematicsError::NonFinite);
    }
    let (r, d) = workspace_measures(target, geom);
    if r < geom.l1 + WORKSPACE_GUARD {
        return Err(KinematicsError::InsideOffset { r, l1: geom.l1 });
    }
    if d.abs() > 1.0 - WORKSPACE_GUARD {
        return Err(KinematicsError::OutOfReach(d.abs()));
    }
    let s = geom.side.sign();
    let rho = (r * r - geom.l1 * geom.l1).sqrt();
    let theta1 = wrap((-rho).atan2(s * geom.l1) - p.z.atan2(p.y));
    let knee = (1.0 - d * d).sqrt().atan2(d);
    let a = geom.l2 + geom.l3 * knee.cos();
    let b = geom.l3 * knee.sin();
    let theta2 = p.x.atan2(rho) + b.atan2(a);
    let theta3 = match options.knee {
        KneeFormula::TwoArgument => knee,
        KneeFormula::Printed => (-d / (1.0 - d * d).sqrt()).atan(),
    };
    let angles = JointAngles::new(theta1, theta2, theta3);
    if options.check_limits {
        geom.limits.check(&angles)?;
    }
    Ok(angles)
}

/// Outcome of [`reachable`]. `error` is `None` exactly when `ok`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reachability {
    pub ok: bool,
    pub r: f64,
    pub d: f64,
    pub error: Option<KinematicsError>,
}

pub fn reachable(target: &FootTarget, geom: &LegGeometry) -> Reachability {
    let (r, d) = workspace_measures(target, geom);
    let error = inverse_kinematics(target, geom).err();
    Reachability {
        ok: error.is_none(),
        r,
        d,
        error,
    }
}

/// Axis-aligned box of foot positions on a ground plane, in the leg frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepBox {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl StepBox {
    pub fn corners(&self) -> [Vector2<f64>; 4] {
        [
            self.min,
            Vector2::new(self.max.x, self.min.y),
            Vector2::new(self.min.x, self.max.y),
            self.max,
        ]
    }

    pub fn inflated(&self, by: f64) -> Self {
        let d = Vector2::new(by, by);
        Self {
            min: self.min - d,
            max: self.max + d,
        }
    }
}

const BISECTIONS: usize = 80;

/// Largest `t ∈ [0, hi]` with `ok(t)`, assuming `ok(0)` and a single switch.
fn bisect(hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(hi) {
        return hi;
    }
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..BISECTIONS {
        let m = 0.5 * (a + b);
        if ok(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Conservative box of reachable ground positions for the foot.
///
/// The ground plane is the height of the foot in `stance_pose`, and the box
/// is centred on the hip projection in x and on the stance foot in y. Each
/// half-axis is bisected for reach, the box is then scaled down until all
/// four corners are reachable and finally shrunk by `margin` on every side.
pub fn workspace_step_bounds(
    geom: &LegGeometry,
    stance_pose: &JointAngles,
    margin: f64,
) -> Result<StepBox, KinematicsError> {
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(KinematicsError::EmptyBox(format!("margin must be non-negative, got {margin}")));
    }
    let foot = forward_kinematics(stance_pose, geom).position;
    let centre = Vector2::new(0.0, foot.y);
    let at = |p: Vector2<f64>| reachable(&FootTarget::new(p.x, p.y, foot.z), geom).ok;
    if !at(centre) {
        return Err(KinematicsError::EmptyBox("stance foot position is not reachable".into()));
    }
    let reach = geom.l1 + geom.l2 + geom.l3;
    let dirs = [
        Vector2::new(1.0, 0.0),
        Vector2::new(-1.0, 0.0),
        Vector2::new(0.0, 1.0),
        Vector2::new(0.0, -1.0),
    ];
    let ext = dirs.map(|u| bisect(reach, |t| at(centre + u * t)));
    let lo = Vector2::new(-ext[1], -ext[3]);
    let hi = Vector2::new(ext[0], ext[2]);
    let scaled = |k: f64| StepBox {
        min: centre + lo * k,
        max: centre + hi * k,
    };
    let k = bisect(1.0, |k| scaled(k).corners().iter().all(|&c| at(c)));
    let b = scaled(k);
    let shrunk = StepBox {
        min: b.min + Vector2::new(margin, margin),
        max: b.max - Vector2::new(margin, margin),
    };
    if shrunk.min.x >= shrunk.max.x || shrunk.min.y >= shrunk.max.y {
        return Err(KinematicsError::EmptyBox(format!(
            "margin {margin} exceeds the reachable box {:?}..{:?}",
            b.min.as_slice(),
            b.max.as_slice()
        )));
    }
    Ok(shrunk)
}
