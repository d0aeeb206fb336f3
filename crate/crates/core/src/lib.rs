//! Push-recovery stepping for a hip-knee exoskeleton: pendulum dynamics,
//! step planning as a small QP, balance-loss detection, leg kinematics,
//! swing trajectories, joint impedance and a closed-loop simulator.

pub mod control;
pub mod detector;
pub mod kinematics;
pub mod lipm;
pub mod output;
pub mod planner;
pub mod qp;
pub mod scenario;
pub mod sim;
pub mod swing;
pub mod sweep;
