mod common;

use common::{planner_oracle, random_planner_input};
use exorecover_core::lipm::{CopPoint, DcmPoint};
use exorecover_core::planner::{
    assemble_qp, plan_step, replan, NominalGait, PlannerInput, StepBounds, StepPlan, Weights,
};
use exorecover_core::qp::{kkt_residual, QpSolver};
use nalgebra::{DMatrix, DVector, Vector2};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn base() -> PlannerInput {
    let nominal = NominalGait {
        cop_t: Vector2::new(0.15, -0.1),
        gamma: Vector2::new(0.0, 0.0),
        duration: 0.4,
        weights: Weights::new(1.0, 5.0, 0.05),
    };
    let cop0 = CopPoint::new(0.0, 0.1);
    PlannerInput {
        xi0: PlannerInput::nominal_consistent_xi0(cop0, 3.13, &nominal),
        cop0,
        omega: 3.13,
        nominal,
        bounds: StepBounds::new(Vector2::new(-0.2, -0.4), Vector2::new(0.6, 0.05), 0.2, 0.9),
    }
}

fn landing_residual(input: &PlannerInput, plan: &StepPlan) -> f64 {
    (plan.gamma_t + plan.cop_t + (input.cop0.0 - input.xi0.0) * plan.sigma - input.cop0.0).amax()
}

#[test]
fn nominal_consistent_dcm_returns_nominal_plan() {
    let input = base();
    let plan = plan_step(&input, &QpSolver::default()).unwrap();
    let n = input.nominal;
    assert!((plan.cop_t - n.cop_t).amax() <= 1e-12);
    assert!((plan.gamma_t - n.gamma).amax() <= 1e-12);
    assert!((plan.sigma - n.sigma(input.omega)).abs() <= 1e-12 * plan.sigma);
    assert!(plan.objective <= 1e-12);
}

#[test]
fn forward_push_steps_further_and_sooner() {
    let mut input = base();
    let nominal = plan_step(&input, &QpSolver::default()).unwrap();
    input.xi0.0.x += 0.05;
    let plan = plan_step(&input, &QpSolver::default()).unwrap();
    assert!(plan.cop_t.x > nominal.cop_t.x);
    assert!(plan.sigma < nominal.sigma);

    let (value, cop, sigma) = planner_oracle(&input);
    assert!((plan.objective - value).abs() <= 1e-6);
    assert!(cop.x > input.nominal.cop_t.x);
    assert!(sigma < input.nominal.sigma(input.omega));
}

#[test]
fn random_instances_match_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let solver = QpSolver::default();
    for _ in 0..30 {
        let input = random_planner_input(&mut rng);
        let plan = plan_step(&input, &solver).unwrap();
        let problem = assemble_qp(&input);
        let sol = solver.solve(&problem);
        assert!(kkt_residual(&problem, &sol).max() <= 1e-8);
        let (value, _, _) = planner_oracle(&input);
        assert!((plan.objective - value).abs() <= 1e-6, "{} vs {}", plan.objective, value);
        assert!(landing_residual(&input, &plan) <= 1e-8);
    }
}

/// DCM after `t` seconds of free evolution about `cop0`.
fn predicted(input: &PlannerInput, t: f64) -> DcmPoint {
    DcmPoint(input.cop0.0 + (input.xi0.0 - input.cop0.0) * (input.omega * t).exp())
}

#[test]
fn replan_on_predicted_dcm_keeps_the_step() {
    let mut input = base();
    input.xi0.0 += Vector2::new(0.03, 0.01);
    let solver = QpSolver::default();
    let plan = plan_step(&input, &solver).unwrap();
    let later = PlannerInput { xi0: predicted(&input, 0.1), ..input };
    let again = replan(&plan, &later, 0.1, &solver).unwrap();
    assert!((again.cop_t - plan.cop_t).amax() <= 1e-6);
    assert!((again.landing_time() - plan.landing_time()).abs() <= 1e-9);
    assert!((again.duration - (plan.duration - 0.1)).abs() <= 1e-9);
}

#[test]
fn replan_with_duration_pinned_at_minimum_stays_live() {
    // ln(exp(ω·T_min))/ω lands an ulp either side of T_min depending on the values
    let solver = QpSolver::default();
    for i in 0..40 {
        let mut input = base();
        input.xi0.0 += Vector2::new(0.1, 0.0);
        input.nominal.weights = Weights::new(1.0, 100.0, 0.001);
        input.bounds.t_min = 0.2 + 0.0037 * i as f64;
        let plan = plan_step(&input, &solver).unwrap();
        assert!((plan.duration - input.bounds.t_min).abs() < 1e-12);
        for k in 1..=5 {
            let el = 0.01 * k as f64;
            let again = replan(&plan, &PlannerInput { xi0: predicted(&input, el), ..input }, el, &solver).unwrap();
            assert!(!again.terminal, "t_min {} elapsed {el}", input.bounds.t_min);
            assert!((again.landing_time() - plan.landing_time()).abs() <= 1e-9);
        }
    }
}

#[test]
fn lateral_push_mid_swing_moves_step_sideways() {
    let mut input = base();
    input.xi0.0.x += 0.03;
    let solver = QpSolver::default();
    let plan = plan_step(&input, &solver).unwrap();
    let el = 0.1;
    let mut xi = predicted(&input, el);
    xi.0.y -= 0.02;
    let later = PlannerInput { xi0: xi, ..input };
    let again = replan(&plan, &later, el, &solver).unwrap();
    assert!(again.cop_t.y < plan.cop_t.y);
    assert!(again.duration <= plan.duration - el + 1e-9);

    // the replan equals a fresh plan from the DCM pulled back to swing start,
    // with the duration window shifted by the elapsed time
    let w = input.omega * el;
    let pulled = DcmPoint(input.cop0.0 + (xi.0 - input.cop0.0) * (-w).exp());
    let mut equivalent = PlannerInput { xi0: pulled, ..input };
    equivalent.bounds.t_min = (input.bounds.t_min - el).max(input.bounds.remaining_floor) + el;
    equivalent.bounds.t_max = input.bounds.t_max.min(plan.landing_time());
    let (value, cop, _) = planner_oracle(&equivalent);
    assert!((again.objective - value).abs() <= 1e-6, "{} vs {}", again.objective, value);
    assert!(cop.y < plan.cop_t.y);
}

#[test]
fn equal_weights_inactive_bounds_match_kkt_solve() {
    let mut input = base();
    input.nominal.weights = Weights::new(2.0, 2.0, 2.0);
    input.xi0.0 += Vector2::new(0.01, -0.01);
    input.bounds = StepBounds::new(Vector2::new(-5.0, -5.0), Vector2::new(5.0, 5.0), 0.01, 3.0);
    let plan = plan_step(&input, &QpSolver::default()).unwrap();
    assert!(plan.active_set.is_empty());

    let p = assemble_qp(&input);
    let mut kkt = DMatrix::zeros(7, 7);
    kkt.view_mut((0, 0), (5, 5)).copy_from(p.hessian());
    kkt.view_mut((0, 5), (5, 2)).copy_from(&p.eq_matrix().transpose());
    kkt.view_mut((5, 0), (2, 5)).copy_from(p.eq_matrix());
    let mut rhs = DVector::zeros(7);
    rhs.rows_mut(0, 5).copy_from(&-p.linear());
    rhs.rows_mut(5, 2).copy_from(p.eq_rhs());
    let z = kkt.full_piv_lu().solve(&rhs).unwrap();
    assert!((plan.cop_t.x - z[0]).abs() <= 1e-9);
    assert!((plan.cop_t.y - z[1]).abs() <= 1e-9);
    assert!((plan.sigma - z[2]).abs() <= 1e-9);
    assert!((plan.gamma_t.x - z[3]).abs() <= 1e-9);
    assert!((plan.gamma_t.y - z[4]).abs() <= 1e-9);
}

fn perturbed() -> PlannerInput {
    let mut input = base();
    input.xi0.0 += Vector2::new(0.04, -0.015);
    input
}

#[test]
fn timing_weight_pulls_duration_to_nominal() {
    let input = perturbed();
    let sigma_nom = input.nominal.sigma(input.omega);
    let mut last = f64::INFINITY;
    for k in 0..=10 {
        let mut inp = input;
        inp.nominal.weights.alpha3 *= 10f64.powf(k as f64 / 10.0);
        let plan = plan_step(&inp, &QpSolver::default()).unwrap();
        let gap = (plan.sigma - sigma_nom).abs();
        assert!(gap <= last + 1e-12, "alpha3 step {k}: {gap} > {last}");
        last = gap;
    }
}

#[test]
fn position_weight_pulls_step_to_nominal() {
    let input = perturbed();
    let mut last = f64::INFINITY;
    for k in 0..=10 {
        let mut inp = input;
        inp.nominal.weights.alpha1 *= 10f64.powf(k as f64 / 10.0);
        let plan = plan_step(&inp, &QpSolver::default()).unwrap();
        let gap = (plan.cop_t - inp.nominal.cop_t).norm();
        assert!(gap <= last + 1e-12, "alpha1 step {k}: {gap} > {last}");
        last = gap;
    }
}

#[test]
fn axes_couple_only_through_sigma() {
    let mut input = base();
    input.xi0.0.x += 0.04;
    input.xi0.0.y = PlannerInput::nominal_consistent_xi0(input.cop0, input.omega, &input.nominal).0.y;
    let plan = plan_step(&input, &QpSolver::default()).unwrap();
    let w = input.nominal.weights;
    let d = input.cop0.0.x - input.xi0.0.x;
    let free = (w.alpha1 * input.nominal.cop_t.x
        + w.alpha2 * (input.cop0.0.x - d * plan.sigma - input.nominal.gamma.x))
        / (w.alpha1 + w.alpha2);
    let alone = free.clamp(input.bounds.cop_min.x, input.bounds.cop_max.x);
    assert!((plan.cop_t.x - alone).abs() <= 1e-9);
}

proptest! {
    #[test]
    fn plans_respect_bounds(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_planner_input(&mut rng);
        let plan = plan_step(&input, &QpSolver::default()).unwrap();
        let b = input.bounds;
        prop_assert!(plan.sigma > 1.0);
        prop_assert!(plan.duration >= b.t_min - 1e-9 && plan.duration <= b.t_max + 1e-9);
        prop_assert!(plan.cop_t.x >= b.cop_min.x - 1e-8 && plan.cop_t.x <= b.cop_max.x + 1e-8);
        prop_assert!(plan.cop_t.y >= b.cop_min.y - 1e-8 && plan.cop_t.y <= b.cop_max.y + 1e-8);
        prop_assert!(landing_residual(&input, &plan) <= 1e-8);
    }
}
