//! Balance-loss detection and the recovery phase machine.
//!
//! While standing, the DCM is tested against an elliptical sway region. A DCM
//! that stays strictly outside for `debounce` consecutive cycles starts a
//! recovery episode. Every later transition is requested by the caller.

use crate::lipm::DcmPoint;
use nalgebra::Vector2;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("ellipse semi-axes must be positive and finite, got ({0}, {1})")]
    BadEllipse(f64, f64),
    #[error("debounce must be at least one cycle")]
    BadDebounce,
    #[error("illegal transition {event:?} from {from}")]
    IllegalTransition { from: Phase, event: PhaseRequest },
    #[error("time went backwards: {now} after {last}")]
    TimeReversed { last: f64, now: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwayEllipse {
    pub center: Vector2<f64>,
    pub semi_axis_x: f64,
    pub semi_axis_y: f64,
}

impl SwayEllipse {
    pub fn new(center: Vector2<f64>, semi_axis_x: f64, semi_axis_y: f64) -> Result<Self, DetectorError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(semi_axis_x) && ok(semi_axis_y)) {
            return Err(DetectorError::BadEllipse(semi_axis_x, semi_axis_y));
        }
        Ok(Self {
            center,
            semi_axis_x,
            semi_axis_y,
        })
    }
}

/// `((ξx − cx)/a)² + ((ξy − cy)/b)²`; at most one means inside.
pub fn ellipse_excursion(xi: DcmPoint, ellipse: &SwayEllipse) -> f64 {
    let u = (xi.0.x - ellipse.center.x) / ellipse.semi_axis_x;
    let v = (xi.0.y - ellipse.center.y) / ellipse.semi_axis_y;
    u * u + v * v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Standing,
    SteppingPlanned,
    Swing,
    Landed,
    Captured,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Standing => "standing",
            Phase::SteppingPlanned => "stepping_planned",
            Phase::Swing => "swing",
            Phase::Landed => "landed",
            Phase::Captured => "captured",
        }
    }

    /// Small integer code used in numeric traces.
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Externally driven transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRequest {
    /// SteppingPlanned → Swing.
    StartSwing,
    /// Swing → Landed.
    TouchDown,
    /// Landed → Captured.
    Capture,
    /// Landed → SteppingPlanned, for chained steps.
    StepAgain,
    /// Captured → Standing.
    Stand,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceLost {
    pub t: f64,
    pub xi: DcmPoint,
    pub excursion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryPhase {
    pub phase: Phase,
    pub trigger_time: Option<f64>,
    pub trigger_dcm: Option<DcmPoint>,
    /// Consecutive cycles outside the ellipse needed to trigger.
    pub debounce: u32,
    outside: u32,
    last_t: Option<f64>,
}

impl RecoveryPhase {
    pub fn new(debounce: u32) -> Result<Self, DetectorError> {
        if debounce == 0 {
            return Err(DetectorError::BadDebounce);
        }
        Ok(Self {
            phase: Phase::Standing,
            trigger_time: None,
            trigger_dcm: None,
            debounce,
            outside: 0,
            last_t: None,
        })
    }

    /// Feed one DCM sample. Only a standing machine can trigger.
    pub fn update(
        &self,
        xi: DcmPoint,
        ellipse: &SwayEllipse,
        t: f64,
    ) -> Result<(RecoveryPhase, Option<BalanceLost>), DetectorError> {
        if let Some(last) = self.last_t {
            if t < last {
                return Err(DetectorError::TimeReversed { last, now: t });
            }
        }
        let mut next = *self;
        next.last_t = Some(t);
        if self.phase != Phase::Standing {
            return Ok((next, None));
        }
        let q = ellipse_excursion(xi, ellipse);
        if q > 1.0 {
            next.outside += 1;
        } else {
            next.outside = 0;
        }
        if next.outside < self.debounce {
            return Ok((next, None));
        }
        next.phase = Phase::SteppingPlanned;
        next.trigger_time = Some(t);
        next.trigger_dcm = Some(xi);
        next.outside = 0;
        Ok((next, Some(BalanceLost { t, xi, excursion: q })))
    }

    pub fn request(&self, event: PhaseRequest) -> Result<RecoveryPhase, DetectorError> {
        use Phase::*;
        use PhaseRequest::*;
        let phase = match (self.phase, event) {
            (SteppingPlanned, StartSwing) => Swing,
            (Swing, TouchDown) => Landed,
            (Landed, Capture) => Captured,
            (Landed, StepAgain) => SteppingPlanned,
            (Captured, Stand) => Standing,
            (from, event) => return Err(DetectorError::IllegalTransition { from, event }),
        };
        let mut next = *self;
        next.phase = phase;
        if phase == Standing {
            next.trigger_time = None;
            next.trigger_dcm = None;
            next.outside = 0;
        }
        Ok(next)
    }
}
