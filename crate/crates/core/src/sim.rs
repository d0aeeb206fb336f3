//! Closed-loop push-recovery simulation.
//!
//! One cycle: integrate the pendulum under the current CoP, apply due pushes,
//! estimate the CoM from the trunk attitude, run the detector, plan or
//! replan, sample the swing, solve IK, compute joint torques, step the joint
//! plants, then check for touchdown and capture.
//!
//! World frame: x forward, y left, ground at z = 0. The feet start at
//! `(0, ±(l0 + l1))` and the standing CoP sits midway between them.

use crate::control::{
    impedance_torque, joint_commands, joint_plant_step, ControlMode, JointState,
};
use crate::detector::{ellipse_excursion, Phase, PhaseRequest, RecoveryPhase, SwayEllipse};
use crate::kinematics::{
    forward_kinematics, inverse_kinematics, workspace_step_bounds, FootTarget, JointAngles,
    LegGeometry, Side,
};
use crate::lipm::{apply_impulse, dcm_of, step_lipm, CentroidalState, CopPoint, DcmPoint};
use crate::planner::{plan_step, replan, NominalGait, PlannerError, PlannerInput, StepBounds, StepPlan};
use crate::qp::QpSolver;
use crate::scenario::{BoundsSource, ScenarioConfig};
use crate::swing::{build_swing, SwingTrajectory};
use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::fmt;
use thiserror::Error;

/// Plan changes smaller than this are applied silently.
pub const REPLAN_REPORT_THRESHOLD: f64 = 1e-4;
/// Trunk attitude saturation, rad.
pub const MAX_TILT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical failure at t = {t}: {what}")]
    Numerical { t: f64, what: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrunkAttitude {
    pub roll: f64,
    pub pitch: f64,
}

/// Horizontal CoM offset `(L·sin pitch, L·sin roll)` of a rigid pendulum.
pub fn estimate_com(attitude: &TrunkAttitude, pendulum_length: f64) -> Vector2<f64> {
    Vector2::new(pendulum_length * attitude.pitch.sin(), pendulum_length * attitude.roll.sin())
}

/// The DCM clamped componentwise into the foot rectangle.
pub fn ankle_clamp(xi: DcmPoint, foot_center: CopPoint, half_extents: Vector2<f64>) -> CopPoint {
    let lo = foot_center.0 - half_extents;
    let hi = foot_center.0 + half_extents;
    CopPoint::new(xi.0.x.clamp(lo.x, hi.x), xi.0.y.clamp(lo.y, hi.y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    BalanceLost,
    PlanIssued,
    Replanned,
    TouchDown,
    Captured,
    StepAborted,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::BalanceLost => "BalanceLost",
            EventKind::PlanIssued => "PlanIssued",
            EventKind::Replanned => "Replanned",
            EventKind::TouchDown => "TouchDown",
            EventKind::Captured => "Captured",
            EventKind::StepAborted => "StepAborted",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub t: f64,
    pub kind: EventKind,
    pub payload: Vec<(&'static str, f64)>,
}

impl SimEvent {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.payload.iter().find(|(k, _)| *k == key).map(|p| p.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub com: Vector2<f64>,
    pub com_vel: Vector2<f64>,
    pub xi: Vector2<f64>,
    pub cop: Vector2<f64>,
    pub phase: Phase,
    /// Measured foot of the logged leg, world frame.
    pub foot: Vector3<f64>,
    pub q_des: [f64; 3],
    pub q: [f64; 3],
    pub tau: [f64; 3],
}

/// One recovery step, in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub side: Side,
    pub trigger_time: f64,
    /// Swing foot at lift-off.
    pub start: Vector3<f64>,
    pub stance: Vector2<f64>,
    pub initial_plan: StepPlan,
    pub final_plan: StepPlan,
    pub touchdown_time: Option<f64>,
    pub landed: Option<Vector2<f64>>,
    pub aborted: bool,
    pub ik_failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    pub events: Vec<SimEvent>,
    pub steps: Vec<StepRecord>,
    pub dt: f64,
    pub duration: f64,
}

impl SimTrace {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &SimEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn aborted(&self) -> bool {
        self.events_of(EventKind::StepAborted).next().is_some()
    }
}

struct Noise {
    rng: ChaCha8Rng,
    attitude: Option<Normal<f64>>,
    rate: Option<Normal<f64>>,
    torque: [Option<Normal<f64>>; 3],
}

impl Noise {
    fn new(cfg: &ScenarioConfig) -> Self {
        let normal = |s: f64| (s > 0.0).then(|| Normal::new(0.0, s).expect("std checked positive"));
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            attitude: normal(cfg.estimation.attitude_noise),
            rate: normal(cfg.estimation.rate_noise),
            torque: cfg.human.noise_std.map(normal),
        }
    }

    fn draw(&mut self, which: Option<Normal<f64>>) -> f64 {
        which.map_or(0.0, |n| n.sample(&mut self.rng))
    }
}

/// Active swing of one leg.
struct Swing {
    record: StepRecord,
    geom: LegGeometry,
    input: PlannerInput,
    plan: StepPlan,
    traj: SwingTrajectory,
    joints: [JointState; 3],
    q_des: JointAngles,
    tau: [f64; 3],
    started: bool,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    solver: QpSolver,
    omega: f64,
    noise: Noise,
    state: CentroidalState,
    cop: CopPoint,
    machine: RecoveryPhase,
    feet: [Vector2<f64>; 2],
    swing: Option<Swing>,
    landed: Option<(Vector2<f64>, f64)>,
    hold_since: Option<f64>,
    restep_count: u32,
    logged: (Side, [f64; 3], [f64; 3], [f64; 3], Vector3<f64>),
    events: Vec<SimEvent>,
    steps: Vec<StepRecord>,
}

/// Nominal step and bounds in world coordinates for a swing of `side`
/// standing on `stance`, with the swing hip over `hip`.
pub fn step_problem(
    cfg: &ScenarioConfig,
    side: Side,
    stance: Vector2<f64>,
    hip: Vector2<f64>,
) -> Result<(NominalGait, StepBounds), String> {
    let s = side.sign();
    let n = cfg.nominal;
    let nominal = NominalGait {
        cop_t: stance + Vector2::new(n.cop_t.x, s * n.cop_t.y),
        gamma: Vector2::new(n.gamma.x, s * n.gamma.y),
        ..n
    };
    let mirror = |b: StepBounds| if s > 0.0 { b } else { b.mirrored_y() };
    let bounds = match cfg.bounds {
        BoundsSource::Explicit(b) => mirror(b).shifted(stance),
        BoundsSource::Workspace { template, margin } => {
            let geom = match side {
                Side::Left => cfg.geometry,
                Side::Right => cfg.geometry.mirrored(),
            };
            let pose = inverse_kinematics(&FootTarget::new(0.0, s * geom.l1, -cfg.hip_height), &geom)
                .map_err(|e| e.to_string())?;
            let b = workspace_step_bounds(&geom, &pose, margin).map_err(|e| e.to_string())?;
            StepBounds {
                cop_min: b.min + hip,
                cop_max: b.max + hip,
                ..mirror(template)
            }
        }
    };
    Ok((nominal, bounds))
}

/// Swing side for a DCM offset from the CoP: the side the DCM has moved
/// toward, right on a tie.
pub fn swing_side(xi: DcmPoint, cop: CopPoint) -> Side {
    if xi.0.y - cop.0.y > 0.0 {
        Side::Left
    } else {
        Side::Right
    }
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let w = cfg.geometry.stance_width();
        let state = CentroidalState::new(cfg.initial_com, cfg.initial_velocity, 0.0);
        let mut sim = Self {
            cfg,
            solver: QpSolver::default(),
            omega: cfg.lipm.omega(),
            noise: Noise::new(cfg),
            state,
            cop: CopPoint::origin(),
            machine: RecoveryPhase::new(cfg.debounce).expect("debounce checked"),
            feet: [Vector2::new(0.0, w), Vector2::new(0.0, -w)],
            swing: None,
            landed: None,
            hold_since: None,
            restep_count: 0,
            logged: (Side::Right, [0.0; 3], [0.0; 3], [0.0; 3], Vector3::zeros()),
            events: Vec::new(),
            steps: Vec::new(),
        };
        sim.log_planted(Side::Right);
        sim
    }

    fn geometry(&self, side: Side) -> LegGeometry {
        match side {
            Side::Left => self.cfg.geometry,
            Side::Right => self.cfg.geometry.mirrored(),
        }
    }

    fn hip(&self, com: Vector2<f64>, side: Side) -> Vector3<f64> {
        Vector3::new(com.x, com.y + side.sign() * self.cfg.geometry.l0, self.cfg.hip_height)
    }

    /// Joint pose that keeps a planted foot where it is under the current hip.
    fn planted_pose(&self, side: Side, foot: Vector2<f64>) -> Option<JointAngles> {
        let rel = Vector3::new(foot.x, foot.y, 0.0) - self.hip(self.state.com, side);
        inverse_kinematics(&FootTarget { position: rel }, &self.geometry(side)).ok()
    }

    fn log_planted(&mut self, side: Side) {
        let foot = self.feet[side_index(side)];
        if let Some(q) = self.planted_pose(side, foot) {
            let q = q.as_array();
            self.logged = (side, q, q, [0.0; 3], Vector3::new(foot.x, foot.y, 0.0));
        }
    }

    /// Estimated CoM position and velocity through the trunk attitude.
    fn estimate(&mut self, reference: Vector2<f64>) -> (Vector2<f64>, Vector2<f64>) {
        let l = self.cfg.estimation.pendulum_length;
        let d = self.state.com - reference;
        let att_noise = self.noise.attitude;
        let rate_noise = self.noise.rate;
        // past horizontal the subject has fallen; keep the trace finite
        let tilt = |r: f64| r.clamp(-1.0, 1.0).asin().clamp(-MAX_TILT, MAX_TILT);
        let pitch = tilt(d.x / l);
        let roll = tilt(d.y / l);
        let pitch_rate = self.state.com_vel.x / (l * pitch.cos());
        let roll_rate = self.state.com_vel.y / (l * roll.cos());
        let att = TrunkAttitude {
            pitch: pitch + self.noise.draw(att_noise),
            roll: roll + self.noise.draw(att_noise),
        };
        let pitch_rate = pitch_rate + self.noise.draw(rate_noise);
        let roll_rate = roll_rate + self.noise.draw(rate_noise);
        let com = reference + estimate_com(&att, l);
        let vel = Vector2::new(l * att.pitch.cos() * pitch_rate, l * att.roll.cos() * roll_rate);
        (com, vel)
    }

    fn push_event(&mut self, t: f64, kind: EventKind, payload: Vec<(&'static str, f64)>) {
        self.events.push(SimEvent { t, kind, payload });
    }

    /// Start a step with `side` swinging, standing on `stance`.
    fn begin_step(&mut self, t: f64, xi: DcmPoint, com_est: Vector2<f64>, side: Side) {
        let stance = self.feet[side_index(side.other())];
        let start2 = self.feet[side_index(side)];
        let start = Vector3::new(start2.x, start2.y, 0.0);
        let geom = self.geometry(side);
        let abort = |sim: &mut Self, reason: f64| {
            sim.push_event(t, EventKind::StepAborted, vec![("side", side.sign()), ("reason", reason)]);
        };
        let (nominal, bounds) = match step_problem(self.cfg, side, stance, self.hip(com_est, side).xy()) {
            Ok(p) => p,
            Err(_) => return abort(self, 0.0),
        };
        let input = PlannerInput {
            xi0: xi,
            cop0: CopPoint(stance),
            omega: self.omega,
            nominal,
            bounds,
        };
        let plan = match plan_step(&input, &self.solver) {
            Ok(p) => p,
            Err(e) => return abort(self, planner_reason(&e)),
        };
        let traj = match build_swing(start, &plan, &self.cfg.swing) {
            Ok(tr) => tr,
            Err(_) => return abort(self, 3.0),
        };
        self.push_event(
            t,
            EventKind::PlanIssued,
            vec![
                ("side", side.sign()),
                ("cop_x", plan.cop_t.x),
                ("cop_y", plan.cop_t.y),
                ("duration", plan.duration),
                ("gamma_x", plan.gamma_t.x),
                ("gamma_y", plan.gamma_t.y),
                ("objective", plan.objective),
            ],
        );
        let q0 = self.planted_pose(side, start2).unwrap_or_else(|| {
            let q = self.cfg.standing_pose();
            JointAngles::new(side.sign() * q.theta1, q.theta2, q.theta3)
        });
        self.cop = CopPoint(stance);
        self.landed = None;
        self.hold_since = None;
        self.swing = Some(Swing {
            record: StepRecord {
                side,
                trigger_time: t,
                start,
                stance,
                initial_plan: plan.clone(),
                final_plan: plan.clone(),
                touchdown_time: None,
                landed: None,
                aborted: false,
                ik_failures: 0,
            },
            geom,
            input,
            plan,
            traj,
            joints: q0.as_array().map(JointState::at),
            q_des: q0,
            tau: [0.0; 3],
            started: false,
        });
    }

    fn advance_swing(&mut self, t: f64, xi: DcmPoint, com_est: Vector2<f64>) -> Result<(), SimError> {
        let cfg = self.cfg;
        let hip_est = self.hip(com_est, self.swing.as_ref().expect("in swing").record.side);
        let hip_true = self.hip(self.state.com, self.swing.as_ref().expect("in swing").record.side);
        let mut sw = self.swing.take().expect("in swing");
        let el = t - sw.record.trigger_time;
        if !sw.started {
            sw.started = true;
            self.machine = self.machine.request(PhaseRequest::StartSwing).map_err(|e| SimError::Numerical {
                t,
                what: e.to_string(),
            })?;
        }

        let floor = sw.input.bounds.remaining_floor;
        if !sw.record.aborted && sw.plan.landing_time() - el > floor {
            let input = PlannerInput { xi0: xi, ..sw.input };
            match replan(&sw.plan, &input, el, &self.solver) {
                Ok(next) => {
                    let change = (next.cop_t - sw.plan.cop_t)
                        .amax()
                        .max((next.landing_time() - sw.plan.landing_time()).abs());
                    if change > 1e-12 {
                        if let Ok(tr) = sw.traj.retarget(el, &next) {
                            sw.traj = tr;
                        }
                    }
                    if change > REPLAN_REPORT_THRESHOLD {
                        self.push_event(
                            t,
                            EventKind::Replanned,
                            vec![
                                ("elapsed", el),
                                ("remaining", next.duration),
                                ("cop_x", next.cop_t.x),
                                ("cop_y", next.cop_t.y),
                                ("objective", next.objective),
                            ],
                        );
                    }
                    sw.plan = next;
                    sw.record.final_plan = sw.plan.clone();
                }
                Err(e) => {
                    sw.record.aborted = true;
                    self.push_event(t, EventKind::StepAborted, vec![("elapsed", el), ("reason", planner_reason(&e))]);
                }
            }
        }

        let desired = sw.traj.sample(el);
        let rel = desired.position - hip_est;
        match inverse_kinematics(&FootTarget { position: rel }, &sw.geom) {
            Ok(q) => sw.q_des = q,
            Err(_) => sw.record.ik_failures += 1,
        }
        let mode = if sw.record.aborted { ControlMode::ZeroTorque } else { cfg.mode };
        let tau_d = impedance_torque(&sw.q_des, &sw.joints, &cfg.gains, mode);
        let cmd = joint_commands(&tau_d, &sw.joints, cfg.kp);
        for j in 0..3 {
            let noise = self.noise.torque[j];
            let human = cfg.human.profile_at(j, t) + self.noise.draw(noise);
            sw.joints[j] = joint_plant_step(&sw.joints[j], cmd[j], human, &cfg.plants[j], cfg.dt)
                .map_err(|e| SimError::Numerical { t, what: e.to_string() })?;
        }
        sw.tau = cmd;
        let q = JointAngles::from_array(sw.joints.map(|s| s.angle));
        let foot = forward_kinematics(&q, &sw.geom).position + hip_true;
        if !foot.iter().all(|c| c.is_finite()) {
            return Err(SimError::Numerical { t, what: "swing foot diverged".into() });
        }
        self.logged = (sw.record.side, sw.q_des.as_array(), q.as_array(), sw.tau, foot);

        if el >= sw.plan.landing_time() - 1e-9 && desired.position.z <= cfg.touchdown_height {
            let landed = foot.xy();
            sw.record.touchdown_time = Some(t);
            sw.record.landed = Some(landed);
            self.push_event(
                t,
                EventKind::TouchDown,
                vec![
                    ("x", landed.x),
                    ("y", landed.y),
                    ("planned_x", sw.plan.cop_t.x),
                    ("planned_y", sw.plan.cop_t.y),
                    ("step_duration", el),
                ],
            );
            self.machine = self.machine.request(PhaseRequest::TouchDown).map_err(|e| SimError::Numerical {
                t,
                what: e.to_string(),
            })?;
            self.feet[side_index(sw.record.side)] = landed;
            self.cop = CopPoint(landed);
            self.landed = Some((landed, t));
            self.steps.push(sw.record);
            return Ok(());
        }
        self.swing = Some(sw);
        Ok(())
    }

    fn advance_landed(&mut self, t: f64, xi: DcmPoint, com_est: Vector2<f64>) {
        let (foot, _) = self.landed.expect("landed");
        self.cop = ankle_clamp(xi, CopPoint(foot), self.cfg.foot_half_extents);
        if self.machine.phase != Phase::Landed {
            return;
        }
        if (xi.0 - self.cop.0).norm() < self.cfg.capture_tolerance {
            let since = *self.hold_since.get_or_insert(t);
            if t - since >= self.cfg.capture_hold - 1e-9 {
                self.machine = self.machine.request(PhaseRequest::Capture).expect("landed can capture");
                let offset = (xi.0 - self.cop.0).norm();
                self.push_event(t, EventKind::Captured, vec![("dcm_offset", offset)]);
            }
            return;
        }
        self.hold_since = None;
        if !self.cfg.multi_step || self.restep_count + 1 >= self.cfg.max_steps {
            return;
        }
        let around_foot = SwayEllipse { center: foot, ..self.cfg.ellipse };
        if ellipse_excursion(xi, &around_foot) > 1.0 {
            self.restep_count += 1;
            self.machine = self.machine.request(PhaseRequest::StepAgain).expect("landed can step again");
            let landed_side = self.steps.last().expect("a step landed").side;
            self.log_planted(landed_side.other());
            self.begin_step(t, xi, com_est, landed_side.other());
        }
    }

    fn row(&self, t: f64) -> TraceRow {
        let (_, q_des, q, tau, foot) = self.logged;
        TraceRow {
            t,
            com: self.state.com,
            com_vel: self.state.com_vel,
            xi: dcm_of(&self.state, &self.cfg.lipm).0,
            cop: self.cop.0,
            phase: self.machine.phase,
            foot,
            q_des,
            q,
            tau,
        }
    }
}

fn planner_reason(e: &PlannerError) -> f64 {
    match e {
        PlannerError::InvalidInput(_) => 0.0,
        PlannerError::Infeasible { .. } => 1.0,
        PlannerError::IterationLimit => 2.0,
    }
}

/// Run a scenario from rest to `duration`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimTrace, SimError> {
    cfg.check_bounds().map_err(|e| SimError::Config(e.to_string()))?;
    let steps = (cfg.duration / cfg.dt).round() as usize;
    let mut sim = Sim::new(cfg);
    let mut rows = Vec::with_capacity(steps + 1);
    let mut next_push = 0;

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        if k > 0 {
            sim.state = step_lipm(&sim.state, sim.cop, &cfg.lipm, cfg.dt).map_err(|e| SimError::Numerical {
                t,
                what: e.to_string(),
            })?;
            sim.state.time = t;
        }
        while next_push < cfg.pushes.len() && cfg.pushes[next_push].time <= t + 1e-9 {
            sim.state = apply_impulse(&sim.state, cfg.pushes[next_push].impulse, &cfg.lipm);
            next_push += 1;
        }
        if !sim.state.is_finite() {
            return Err(SimError::Numerical { t, what: "pendulum state diverged".into() });
        }

        let reference = match (&sim.swing, sim.landed) {
            (Some(sw), _) => sw.record.stance,
            (None, Some((foot, _))) => foot,
            (None, None) => Vector2::zeros(),
        };
        let (com_est, vel_est) = sim.estimate(reference);
        let xi = DcmPoint(com_est + vel_est / sim.omega);

        let (machine, lost) = sim
            .machine
            .update(xi, &cfg.ellipse, t)
            .map_err(|e| SimError::Numerical { t, what: e.to_string() })?;
        sim.machine = machine;
        if let Some(lost) = lost {
            sim.push_event(
                t,
                EventKind::BalanceLost,
                vec![("xi_x", lost.xi.0.x), ("xi_y", lost.xi.0.y), ("excursion", lost.excursion)],
            );
            let side = swing_side(xi, sim.cop);
            sim.log_planted(side);
            sim.begin_step(t, xi, com_est, side);
        } else if sim.swing.is_some() {
            sim.advance_swing(t, xi, com_est)?;
        } else if sim.landed.is_some() {
            sim.advance_landed(t, xi, com_est);
        } else if sim.machine.phase == Phase::Standing {
            sim.log_planted(sim.logged.0);
        }
        rows.push(sim.row(t));
    }

    if let Some(sw) = sim.swing.take() {
        sim.steps.push(sw.record);
    }
    Ok(SimTrace {
        rows,
        events: sim.events,
        steps: sim.steps,
        dt: cfg.dt,
        duration: cfg.duration,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub balance_lost: bool,
    pub step_taken: bool,
    pub steps: usize,
    pub step_position: Option<Vector2<f64>>,
    /// Signed angle, degrees, between the lines from the swing-foot start to
    /// the first plan and to the landing point. Positive is counterclockwise.
    pub planned_vs_landed_angle: Option<f64>,
    /// Same against the last replanned target.
    pub final_plan_vs_landed_angle: Option<f64>,
    pub step_duration: Option<f64>,
    pub planned_duration: Option<f64>,
    pub final_dcm_offset: f64,
    pub captured: bool,
    pub aborted: bool,
}

/// Signed angle in degrees from `a` to `b`.
pub fn signed_angle_deg(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let cross = a.x * b.y - a.y * b.x;
    cross.atan2(a.dot(&b)).to_degrees()
}

pub fn summarize(trace: &SimTrace) -> Summary {
    let first = trace.steps.iter().find(|s| s.landed.is_some());
    let angle = |plan: &StepPlan, s: &StepRecord| {
        let start = s.start.xy();
        signed_angle_deg(plan.cop_t - start, s.landed.expect("landed") - start)
    };
    let last = trace.rows.last();
    Summary {
        balance_lost: trace.events_of(EventKind::BalanceLost).next().is_some(),
        step_taken: first.is_some(),
        steps: trace.steps.iter().filter(|s| s.landed.is_some()).count(),
        step_position: first.and_then(|s| s.landed),
        planned_vs_landed_angle: first.map(|s| angle(&s.initial_plan, s)),
        final_plan_vs_landed_angle: first.map(|s| angle(&s.final_plan, s)),
        step_duration: first.and_then(|s| s.touchdown_time.map(|t| t - s.trigger_time)),
        planned_duration: first.map(|s| s.initial_plan.duration),
        final_dcm_offset: last.map_or(0.0, |r| (r.xi - r.cop).norm()),
        captured: trace.events_of(EventKind::Captured).next().is_some(),
        aborted: trace.aborted(),
    }
}
