//! Swing-foot trajectories built from quintic polynomials.
//!
//! Horizontal motion is one quintic per axis from the lift-off position to the
//! planned step. Vertical motion is two quintics joined at the apex, each with
//! zero velocity and acceleration at both of its ends. Times are measured from
//! swing start, positions in the ground frame with `z = 0` on the floor.

use crate::planner::StepPlan;
use nalgebra::Vector3;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SwingError {
    #[error("invalid swing input: {0}")]
    Input(String),
    #[error("remaining swing time {remaining} below the floor {floor}")]
    TooShort { remaining: f64, floor: f64 },
}

/// `p(t) = Σ cₖ (t − t_start)ᵏ` on `[t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticSegment {
    pub coefficients: [f64; 6],
    pub t_start: f64,
    pub t_end: f64,
}

/// Position, velocity and acceleration of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub p: f64,
    pub v: f64,
    pub a: f64,
}

impl Boundary {
    pub fn rest(p: f64) -> Self {
        Self { p, v: 0.0, a: 0.0 }
    }
}

impl QuinticSegment {
    /// The unique quintic matching `from` at `t_start` and `to` at `t_end`.
    pub fn between(from: Boundary, to: Boundary, t_start: f64, t_end: f64) -> Self {
        let t = t_end - t_start;
        let (t2, t3) = (t * t, t * t * t);
        let dp = to.p - from.p;
        let c3 = (20.0 * dp - (8.0 * to.v + 12.0 * from.v) * t - (3.0 * from.a - to.a) * t2) / (2.0 * t3);
        let c4 = (-30.0 * dp + (14.0 * to.v + 16.0 * from.v) * t + (3.0 * from.a - 2.0 * to.a) * t2)
            / (2.0 * t3 * t);
        let c5 = (12.0 * dp - 6.0 * (to.v + from.v) * t - (from.a - to.a) * t2) / (2.0 * t3 * t2);
        Self {
            coefficients: [from.p, from.v, 0.5 * from.a, c3, c4, c5],
            t_start,
            t_end,
        }
    }

    pub fn constant(p: f64, t_start: f64, t_end: f64) -> Self {
        Self {
            coefficients: [p, 0.0, 0.0, 0.0, 0.0, 0.0],
            t_start,
            t_end,
        }
    }

    /// Evaluate without clamping.
    pub fn eval(&self, t: f64) -> Boundary {
        let c = &self.coefficients;
        let s = t - self.t_start;
        let p = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
        let v = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
        let a = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
        Boundary { p, v, a }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingParams {
    pub peak_height: f64,
    /// Fraction of the swing at which the apex occurs.
    pub peak_fraction: f64,
    /// Shortest remaining time a retarget accepts.
    pub min_remaining: f64,
}

impl Default for SwingParams {
    fn default() -> Self {
        Self {
            peak_height: 0.07,
            peak_fraction: 0.4,
            min_remaining: 0.01,
        }
    }
}

impl SwingParams {
    pub fn validate(&self) -> Result<(), SwingError> {
        if !(self.peak_height.is_finite() && self.peak_height > 0.0) {
            return Err(SwingError::Input(format!("peak_height must be positive, got {}", self.peak_height)));
        }
        if !(self.peak_fraction > 0.0 && self.peak_fraction < 1.0) {
            return Err(SwingError::Input(format!(
                "peak_fraction must lie in (0, 1), got {}",
                self.peak_fraction
            )));
        }
        if !(self.min_remaining.is_finite() && self.min_remaining > 0.0) {
            return Err(SwingError::Input(format!(
                "min_remaining must be positive, got {}",
                self.min_remaining
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwingTrajectory {
    pub x: QuinticSegment,
    pub y: QuinticSegment,
    /// One or two pieces; two while the apex is still ahead.
    pub z: Vec<QuinticSegment>,
    /// Swing-start time the apex fraction refers to.
    pub origin: f64,
    pub start_time: f64,
    pub end_time: f64,
    pub target: Vector3<f64>,
    pub params: SwingParams,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingSample {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    /// Set when `t` fell outside the trajectory and was clamped.
    pub clamped: bool,
}

fn finite3(v: &Vector3<f64>) -> bool {
    v.iter().all(|c| c.is_finite())
}

fn z_pieces(from: Boundary, t_now: f64, peak_t: f64, end: f64, params: &SwingParams) -> Vec<QuinticSegment> {
    if t_now < peak_t {
        let apex = Boundary::rest(params.peak_height);
        vec![
            QuinticSegment::between(from, apex, t_now, peak_t),
            QuinticSegment::between(apex, Boundary::rest(0.0), peak_t, end),
        ]
    } else {
        vec![QuinticSegment::between(from, Boundary::rest(0.0), t_now, end)]
    }
}

/// Swing from `start` to the plan's step position, over the plan's duration.
pub fn build_swing(start: Vector3<f64>, plan: &StepPlan, params: &SwingParams) -> Result<SwingTrajectory, SwingError> {
    params.validate()?;
    let t = plan.duration;
    if !(t.is_finite() && t > 0.0) {
        return Err(SwingError::Input(format!("plan duration must be positive, got {t}")));
    }
    let target = Vector3::new(plan.cop_t.x, plan.cop_t.y, 0.0);
    if !(finite3(&start) && finite3(&target)) {
        return Err(SwingError::Input("non-finite start or target".into()));
    }
    let horizontal = |a: f64, b: f64| {
        if a == b {
            QuinticSegment::constant(a, 0.0, t)
        } else {
            QuinticSegment::between(Boundary::rest(a), Boundary::rest(b), 0.0, t)
        }
    };
    Ok(SwingTrajectory {
        x: horizontal(start.x, target.x),
        y: horizontal(start.y, target.y),
        z: z_pieces(Boundary::rest(start.z), 0.0, params.peak_fraction * t, t, params),
        origin: 0.0,
        start_time: 0.0,
        end_time: t,
        target,
        params: *params,
    })
}

impl SwingTrajectory {
    pub fn duration(&self) -> f64 {
        self.end_time - self.origin
    }

    pub fn peak_time(&self) -> f64 {
        self.origin + self.params.peak_fraction * (self.end_time - self.origin)
    }

    fn z_at(&self, t: f64) -> Boundary {
        // the junction belongs to the second piece
        let seg = self.z.iter().rev().find(|s| t >= s.t_start).unwrap_or(&self.z[0]);
        seg.eval(t)
    }

    /// Evaluate at swing time `t`, clamped into the trajectory's span.
    pub fn sample(&self, t: f64) -> SwingSample {
        let clamped = !(t >= self.start_time && t <= self.end_time);
        let t = if t.is_nan() { self.start_time } else { t.clamp(self.start_time, self.end_time) };
        let (x, y, z) = (self.x.eval(t), self.y.eval(t), self.z_at(t));
        SwingSample {
            position: Vector3::new(x.p, y.p, z.p),
            velocity: Vector3::new(x.v, y.v, z.v),
            acceleration: Vector3::new(x.a, y.a, z.a),
            clamped,
        }
    }

    /// Splice a new trajectory in at `t_now` toward `plan`, keeping position,
    /// velocity and acceleration continuous. The landing time becomes
    /// `plan.landing_time()`.
    pub fn retarget(&self, t_now: f64, plan: &StepPlan) -> Result<SwingTrajectory, SwingError> {
        let end = plan.landing_time();
        let remaining = end - t_now;
        if !(remaining >= self.params.min_remaining) {
            return Err(SwingError::TooShort {
                remaining,
                floor: self.params.min_remaining,
            });
        }
        let target = Vector3::new(plan.cop_t.x, plan.cop_t.y, 0.0);
        if !finite3(&target) {
            return Err(SwingError::Input("non-finite target".into()));
        }
        let now = self.sample(t_now);
        let axis = |k: usize| Boundary {
            p: now.position[k],
            v: now.velocity[k],
            a: now.acceleration[k],
        };
        let horizontal = |k: usize| {
            let from = axis(k);
            if from == Boundary::rest(target[k]) {
                QuinticSegment::constant(target[k], t_now, end)
            } else {
                QuinticSegment::between(from, Boundary::rest(target[k]), t_now, end)
            }
        };
        let peak_t = self.origin + self.params.peak_fraction * (end - self.origin);
        Ok(SwingTrajectory {
            x: horizontal(0),
            y: horizontal(1),
            z: z_pieces(axis(2), t_now, peak_t, end, &self.params),
            origin: self.origin,
            start_time: t_now,
            end_time: end,
            target,
            params: self.params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::QpStatus;
    use nalgebra::Vector2;

    fn plan(cop: (f64, f64), duration: f64) -> StepPlan {
        StepPlan {
            cop_t: Vector2::new(cop.0, cop.1),
            gamma_t: Vector2::zeros(),
            sigma: 1.0,
            duration,
            objective: 0.0,
            status: QpStatus::Optimal,
            active_set: vec![],
            issued_at: 0.0,
            terminal: false,
        }
    }

    #[test]
    fn quintic_meets_its_boundaries() {
        let from = Boundary { p: 0.3, v: -1.0, a: 2.0 };
        let to = Boundary { p: -0.2, v: 0.5, a: -1.0 };
        let q = QuinticSegment::between(from, to, 0.2, 0.9);
        let a = q.eval(0.2);
        let b = q.eval(0.9);
        for (x, y) in [(a.p, from.p), (a.v, from.v), (a.a, from.a), (b.p, to.p), (b.v, to.v), (b.a, to.a)] {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn apex_at_forty_percent() {
        let tr = build_swing(Vector3::zeros(), &plan((0.3, 0.1), 1.0), &SwingParams::default()).unwrap();
        let s = tr.sample(0.4);
        assert!((s.position.z - 0.07).abs() <= 1e-12);
        assert!(s.velocity.z.abs() <= 1e-12);
    }

    #[test]
    fn stationary_target_keeps_horizontal_still() {
        let tr = build_swing(Vector3::new(0.1, -0.2, 0.0), &plan((0.1, -0.2), 0.6), &SwingParams::default())
            .unwrap();
        for k in 0..=60 {
            let s = tr.sample(k as f64 * 0.01);
            assert_eq!(s.position.x, 0.1);
            assert_eq!(s.position.y, -0.2);
            assert_eq!((s.velocity.x, s.velocity.y, s.acceleration.x, s.acceleration.y), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn sample_clamps_and_flags() {
        let tr = build_swing(Vector3::zeros(), &plan((0.3, 0.1), 0.5), &SwingParams::default()).unwrap();
        let s = tr.sample(0.7);
        assert!(s.clamped);
        assert_eq!(s.position, tr.sample(0.5).position);
        assert!(!tr.sample(0.25).clamped);
    }

    #[test]
    fn retarget_rejects_too_short_remaining() {
        let tr = build_swing(Vector3::zeros(), &plan((0.3, 0.1), 0.5), &SwingParams::default()).unwrap();
        assert!(matches!(tr.retarget(0.495, &plan((0.3, 0.1), 0.5)), Err(SwingError::TooShort { .. })));
    }

    #[test]
    fn rejects_bad_params() {
        let p = SwingParams {
            peak_fraction: 1.0,
            ..SwingParams::default()
        };
        assert!(build_swing(Vector3::zeros(), &plan((0.3, 0.1), 0.5), &p).is_err());
        assert!(build_swing(Vector3::zeros(), &plan((0.3, 0.1), 0.0), &SwingParams::default()).is_err());
    }
}
