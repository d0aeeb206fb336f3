use exorecover_core::qp::{kkt_residual, solve_qp, QpProblem, QpSolver, QpStatus};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
    b.transpose() * b + DMatrix::identity(n, n) * 0.5
}

struct BoxQp {
    problem: QpProblem,
    lo: DVector<f64>,
    hi: DVector<f64>,
}

fn random_box_qp(rng: &mut ChaCha8Rng) -> BoxQp {
    let n = 5;
    let h = random_spd(rng, n);
    let c = DVector::from_fn(n, |_, _| rng.random_range(-10.0..10.0));
    let lo = DVector::from_fn(n, |_, _| rng.random_range(-2.0..0.0));
    let hi = DVector::from_fn(n, |i, _| lo[i] + rng.random_range(0.1..3.0));
    let mut a = DMatrix::zeros(2 * n, n);
    let mut b = DVector::zeros(2 * n);
    for i in 0..n {
        a[(i, i)] = 1.0;
        b[i] = hi[i];
        a[(n + i, i)] = -1.0;
        b[n + i] = -lo[i];
    }
    let problem = QpProblem::new(h, c).unwrap().with_inequalities(a, b).unwrap();
    BoxQp { problem, lo, hi }
}

/// Projected gradient with a fixed step; stops early only at an exact fixed point.
fn projected_gradient(q: &BoxQp, iterations: usize, step: f64) -> DVector<f64> {
    let h = q.problem.hessian();
    let c = q.problem.linear();
    let n = c.len();
    let mut z = DVector::from_fn(n, |i, _| 0.5 * (q.lo[i] + q.hi[i]));
    for _ in 0..iterations {
        let g = h * &z + c;
        let next = DVector::from_fn(n, |i, _| (z[i] - step * g[i]).clamp(q.lo[i], q.hi[i]));
        if next == z {
            break;
        }
        z = next;
    }
    z
}

#[test]
fn box_qps_match_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut active_total = 0;
    for _ in 0..100 {
        let q = random_box_qp(&mut rng);
        let s = solve_qp(&q.problem);
        assert_eq!(s.status, QpStatus::Optimal);
        let oracle = projected_gradient(&q, 1_000_000, 1e-3);
        let f_oracle = q.problem.objective(&oracle);
        assert!(
            (s.objective - f_oracle).abs() <= 1e-6,
            "solver {} oracle {}",
            s.objective,
            f_oracle
        );
        let r = kkt_residual(&q.problem, &s);
        assert!(r.max() <= 1e-8, "{r:?}");
        active_total += s.active_set.len();
    }
    // the sample has to exercise the inequality machinery
    assert!(active_total > 50);
}

#[test]
fn objective_decreases_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let q = random_box_qp(&mut rng);
        let s = solve_qp(&q.problem);
        for w in s.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{:?}", s.history);
        }
    }
}

#[test]
fn identical_problems_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = random_box_qp(&mut rng);
    let a = solve_qp(&q.problem);
    let b = solve_qp(&q.problem.clone());
    assert_eq!(a, b);
}

#[test]
fn equality_only_matches_kkt_linear_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let n = 5;
        let m = 2;
        let h = random_spd(&mut rng, n);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let e = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let f = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let p = QpProblem::new(h.clone(), c.clone())
            .unwrap()
            .with_equalities(e.clone(), f.clone())
            .unwrap();
        let s = solve_qp(&p);

        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        kkt.view_mut((0, n), (n, m)).copy_from(&e.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&e);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&-&c);
        rhs.rows_mut(n, m).copy_from(&f);
        let sol = kkt.full_piv_lu().solve(&rhs).unwrap();
        assert!((&s.z - sol.rows(0, n)).amax() <= 1e-10);
        assert!((&s.eq_multipliers - sol.rows(n, m)).amax() <= 1e-9);
    }
}

#[test]
fn general_inequalities_satisfy_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = 5;
        let h = random_spd(&mut rng, n);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        // unit box plus three random cuts that keep a neighbourhood of the origin
        let mut a = DMatrix::zeros(2 * n + 3, n);
        let mut b = DVector::from_element(2 * n + 3, 1.0);
        for i in 0..n {
            a[(i, i)] = 1.0;
            a[(n + i, i)] = -1.0;
        }
        for k in 0..3 {
            for j in 0..n {
                a[(2 * n + k, j)] = rng.random_range(-1.0..1.0);
            }
            b[2 * n + k] = rng.random_range(0.2..1.0);
        }
        let e = DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0));
        let f = DVector::from_fn(1, |_, _| rng.random_range(-0.1..0.1));
        let p = QpProblem::new(h, c)
            .unwrap()
            .with_equalities(e, f)
            .unwrap()
            .with_inequalities(a, b)
            .unwrap();
        let s = solve_qp(&p);
        match s.status {
            QpStatus::Optimal => {
                let r = kkt_residual(&p, &s);
                assert!(r.max() <= 1e-8, "{r:?}");
                let warm = QpSolver::default().solve_warm(&p, &s.active_set);
                assert_eq!(warm.status, QpStatus::Optimal);
                assert!((&warm.z - &s.z).amax() <= 1e-9);
            }
            QpStatus::Infeasible => panic!("origin-neighbourhood problems are feasible"),
            QpStatus::IterationLimit => panic!("iteration limit on a 5-variable problem"),
        }
    }
}

proptest! {
    #[test]
    fn objective_scaling_keeps_argmin(seed in 0u64..10_000, scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_box_qp(&mut rng);
        let base = solve_qp(&q.problem);
        let scaled = QpProblem::new(q.problem.hessian() * scale, q.problem.linear() * scale)
            .unwrap()
            .with_inequalities(q.problem.ineq_matrix().clone(), q.problem.ineq_rhs().clone())
            .unwrap();
        let s = solve_qp(&scaled);
        prop_assert!((&s.z - &base.z).amax() <= 1e-9);
        prop_assert!((s.objective - scale * base.objective).abs() <= 1e-9 * (1.0 + scale * base.objective.abs()));
    }
}
