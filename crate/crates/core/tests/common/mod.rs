#![allow(dead_code)]

use exorecover_core::lipm::{CopPoint, DcmPoint};
use exorecover_core::planner::{NominalGait, PlannerInput, StepBounds, Weights};
use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Minimise a convex function on `[lo, hi]` by repeatedly sampling a grid and
/// zooming in on the best node.
pub fn grid_refine(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const NODES: usize = 20;
    let (mut a, mut b) = (lo, hi);
    let mut best = (lo, f(lo));
    for _ in 0..40 {
        let h = (b - a) / NODES as f64;
        for k in 0..=NODES {
            let x = if k == NODES { b } else { a + h * k as f64 };
            let v = f(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        a = (best.0 - h).max(lo);
        b = (best.0 + h).min(hi);
        if b - a <= 1e-15 * (1.0 + best.0.abs()) {
            break;
        }
    }
    best
}

/// Brute-force optimum of the step problem: `γ` is eliminated through the
/// landing equality, each `cop` axis is minimised on a grid for fixed `σ`,
/// and `σ` is minimised on a grid over its bounds.
pub fn planner_oracle(input: &PlannerInput) -> (f64, Vector2<f64>, f64) {
    let w = input.nominal.weights;
    let n = &input.nominal;
    let sigma_nom = n.sigma(input.omega);
    let b = &input.bounds;
    let inner = |sigma: f64| {
        let mut total = w.alpha3 * (sigma - sigma_nom).powi(2);
        let mut cop = Vector2::zeros();
        for axis in 0..2 {
            let cop0 = input.cop0.0[axis];
            let d = cop0 - input.xi0.0[axis];
            let f = |c: f64| {
                let gamma = cop0 - c - d * sigma;
                w.alpha1 * (c - n.cop_t[axis]).powi(2) + w.alpha2 * (gamma - n.gamma[axis]).powi(2)
            };
            let (c, v) = grid_refine(b.cop_min[axis], b.cop_max[axis], f);
            cop[axis] = c;
            total += v;
        }
        (total, cop)
    };
    let (sigma, value) = grid_refine(b.sigma_min(input.omega), b.sigma_max(input.omega), |s| inner(s).0);
    (value, inner(sigma).1, sigma)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

pub fn random_planner_input(rng: &mut ChaCha8Rng) -> PlannerInput {
    let v2 = |rng: &mut ChaCha8Rng, r: f64| Vector2::new(rng.random_range(-r..r), rng.random_range(-r..r));
    let cop0 = v2(rng, 0.1);
    let xi0 = cop0 + v2(rng, 0.15);
    let cop_nom = cop0 + v2(rng, 0.3);
    let t_min = rng.random_range(0.15..0.35);
    let t_max = rng.random_range(0.6..1.0);
    let half = Vector2::new(rng.random_range(0.1..0.5), rng.random_range(0.1..0.5));
    let centre = cop0 + v2(rng, 0.1);
    PlannerInput {
        xi0: DcmPoint(xi0),
        cop0: CopPoint(cop0),
        omega: rng.random_range(2.0..4.0),
        nominal: NominalGait {
            cop_t: cop_nom,
            gamma: v2(rng, 0.02),
            duration: rng.random_range(0.2..0.9),
            weights: Weights::new(
                log_uniform(rng, 0.1, 10.0),
                log_uniform(rng, 0.1, 10.0),
                log_uniform(rng, 0.01, 1.0),
            ),
        },
        bounds: StepBounds::new(centre - half, centre + half, t_min, t_max),
    }
}
