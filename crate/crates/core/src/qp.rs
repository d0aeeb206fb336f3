//! Dense convex quadratic programs:
//!
//! ```text
//!     minimize     ½ zᵀ H z + cᵀ z + k
//!     subject to   E z  = f
//!                  A z <= b
//! ```
//!
//! solved with a primal active-set method. Each iteration solves the
//! equality-constrained subproblem on the working set in null-space form:
//! a QR factorisation of the working rows and a Cholesky factorisation of the
//! reduced Hessian `ZᵀHZ`. A feasible starting point comes from the
//! equality-constrained minimiser when it already satisfies the
//! inequalities, otherwise from an elastic problem with one shared slack.
//!
//! Multiplier signs follow the Lagrangian
//! `L = ½zᵀHz + cᵀz + λᵀ(Ez − f) + μᵀ(Az − b)` with `μ ≥ 0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Problems larger than this are outside the small dense regime.
pub const MAX_VARIABLES: usize = 32;
/// Pivot below which the Hessian gets regularised.
pub const PIVOT_FLOOR: f64 = 1e-10;
/// Diagonal shift added when regularising.
pub const REGULARIZATION: f64 = 1e-9;

const FEAS_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-13;
const DUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} variables exceeds the dense limit of {MAX_VARIABLES}")]
    TooLarge(usize),
    #[error("hessian is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("hessian is not positive semidefinite")]
    NotConvex,
    #[error("problem data contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
    eq_matrix: DMatrix<f64>,
    eq_rhs: DVector<f64>,
    ineq_matrix: DMatrix<f64>,
    ineq_rhs: DVector<f64>,
}

fn all_finite<'a>(it: impl IntoIterator<Item = &'a f64>) -> bool {
    it.into_iter().all(|v| v.is_finite())
}

impl QpProblem {
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self, QpError> {
        let n = linear.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(QpError::Dimension(format!(
                "hessian is {}x{}, linear term has {n} entries",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if n > MAX_VARIABLES {
            return Err(QpError::TooLarge(n));
        }
        if !all_finite(hessian.iter()) || !all_finite(linear.iter()) {
            return Err(QpError::NonFinite);
        }
        let scale = hessian.amax().max(1.0);
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(QpError::NotSymmetric(asym));
        }
        let mut shifted = hessian.clone();
        for i in 0..n {
            shifted[(i, i)] += REGULARIZATION * scale;
        }
        if Cholesky::factor(&shifted).is_none() {
            return Err(QpError::NotConvex);
        }
        Ok(Self {
            hessian,
            linear,
            constant: 0.0,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
        })
    }

    pub fn with_equalities(mut self, matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self, QpError> {
        self.check_rows("equality", &matrix, &rhs)?;
        self.eq_matrix = matrix;
        self.eq_rhs = rhs;
        Ok(self)
    }

    /// Rows are read as `matrix · z <= rhs`.
    pub fn with_inequalities(mut self, matrix: DMatrix<f64>, rhs: DVector<f64>) -> Result<Self, QpError> {
        self.check_rows("inequality", &matrix, &rhs)?;
        self.ineq_matrix = matrix;
        self.ineq_rhs = rhs;
        Ok(self)
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    fn check_rows(&self, what: &str, m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<(), QpError> {
        if m.ncols() != self.num_variables() || m.nrows() != rhs.len() {
            return Err(QpError::Dimension(format!(
                "{what} matrix is {}x{} with {} right-hand sides for {} variables",
                m.nrows(),
                m.ncols(),
                rhs.len(),
                self.num_variables()
            )));
        }
        if !all_finite(m.iter()) || !all_finite(rhs.iter()) {
            return Err(QpError::NonFinite);
        }
        Ok(())
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn num_inequalities(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn eq_matrix(&self) -> &DMatrix<f64> {
        &self.eq_matrix
    }

    pub fn eq_rhs(&self) -> &DVector<f64> {
        &self.eq_rhs
    }

    pub fn ineq_matrix(&self) -> &DMatrix<f64> {
        &self.ineq_matrix
    }

    pub fn ineq_rhs(&self) -> &DVector<f64> {
        &self.ineq_rhs
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + self.linear.dot(z) + self.constant
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.hessian * z + &self.linear
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

impl std::fmt::Display for QpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QpStatus::Optimal => "optimal",
            QpStatus::Infeasible => "infeasible",
            QpStatus::IterationLimit => "iteration_limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    /// Inequality rows held as equalities at the final iterate, ascending.
    pub active_set: Vec<usize>,
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    /// Objective after each iteration of the optimality phase.
    pub history: Vec<f64>,
    /// For infeasible problems: inequality rows that the least-violating point breaks.
    pub violated: Vec<usize>,
}

/// Max-norm of each KKT block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub stationarity: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub complementarity: f64,
    pub dual_infeasibility: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.complementarity)
            .max(self.dual_infeasibility)
    }
}

/// KKT residuals of `solution` evaluated against the original problem data only.
pub fn kkt_residual(problem: &QpProblem, solution: &QpSolution) -> KktResidual {
    let z = &solution.z;
    let mut grad = problem.gradient(z);
    if problem.num_equalities() > 0 {
        grad += problem.eq_matrix.transpose() * &solution.eq_multipliers;
    }
    if problem.num_inequalities() > 0 {
        grad += problem.ineq_matrix.transpose() * &solution.ineq_multipliers;
    }
    let eq = &problem.eq_matrix * z - &problem.eq_rhs;
    let slack = &problem.ineq_matrix * z - &problem.ineq_rhs;
    let primal_ineq = slack.iter().fold(0.0f64, |m, s| m.max(*s));
    let complementarity = slack
        .iter()
        .zip(solution.ineq_multipliers.iter())
        .fold(0.0f64, |m, (s, mu)| m.max((s * mu).abs()));
    let dual_infeasibility = solution
        .ineq_multipliers
        .iter()
        .fold(0.0f64, |m, mu| m.max(-mu));
    KktResidual {
        stationarity: grad.amax(),
        primal_eq: if eq.is_empty() { 0.0 } else { eq.amax() },
        primal_ineq,
        complementarity,
        dual_infeasibility,
    }
}

/// Solve with a default solver and no warm start.
pub fn solve_qp(problem: &QpProblem) -> QpSolution {
    QpSolver::default().solve(problem)
}

#[derive(Debug, Clone)]
pub struct QpSolver {
    /// Iteration cap per phase; `None` picks `100 + 50·(n + m)`.
    pub max_iterations: Option<usize>,
}

impl Default for QpSolver {
    fn default() -> Self {
        Self { max_iterations: None }
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
struct Cholesky {
    l: DMatrix<f64>,
    min_pivot: f64,
}

impl Cholesky {
    fn factor(m: &DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let mut l = DMatrix::zeros(n, n);
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return None;
            }
            min_pivot = min_pivot.min(d);
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { l, min_pivot })
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = b.len();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Internal view shared by the optimality and elastic phases.
struct Stage<'a> {
    hessian: &'a DMatrix<f64>,
    chol: &'a Cholesky,
    linear: &'a DVector<f64>,
    eq: &'a DMatrix<f64>,
    eq_rhs: &'a DVector<f64>,
    ineq: &'a DMatrix<f64>,
    ineq_rhs: &'a DVector<f64>,
}

struct StageResult {
    z: DVector<f64>,
    working: Vec<usize>,
    eq_mult: DVector<f64>,
    ineq_mult: DVector<f64>,
    converged: bool,
    iterations: usize,
    history: Vec<f64>,
}

impl Stage<'_> {
    fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(self.hessian * z)) + self.linear.dot(z)
    }

    fn rows(&self, working: &[usize]) -> DMatrix<f64> {
        let n = self.linear.len();
        let me = self.eq.nrows();
        let mut a = DMatrix::zeros(me + working.len(), n);
        for i in 0..me {
            a.set_row(i, &self.eq.row(i));
        }
        for (k, &i) in working.iter().enumerate() {
            a.set_row(me + k, &self.ineq.row(i));
        }
        a
    }

    /// Null-space solve of `min ½pᵀHp + gᵀp  s.t.  A p = r`.
    ///
    /// With `Aᵀ = [Y Z]·R`, the step is `p = Y·R⁻ᵀr + Z·p_z` where `p_z`
    /// solves the reduced system `(ZᵀHZ)·p_z = −Zᵀ(g + H·Y·R⁻ᵀr)` by Cholesky.
    /// Returns `None` if the rows of `A` are numerically dependent.
    fn constrained_step(
        &self,
        a: &DMatrix<f64>,
        g: &DVector<f64>,
        r: &DVector<f64>,
    ) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = g.len();
        let k = a.nrows();
        if k == 0 {
            return Some((-self.chol.solve(g), DVector::zeros(0)));
        }
        if k > n {
            return None;
        }
        let mut m = DMatrix::zeros(n, k + n);
        m.view_mut((0, 0), (n, k)).copy_from(&a.transpose());
        m.view_mut((0, k), (n, n)).fill_with_identity();
        let qr = m.qr();
        let q = qr.q();
        let rfull = qr.r();
        let ra = rfull.view((0, 0), (k, k)).into_owned();
        let row_scale = a.amax().max(f64::MIN_POSITIVE);
        if (0..k).any(|i| ra[(i, i)].abs() <= 1e-12 * row_scale) {
            return None;
        }
        let y = q.columns(0, k);
        let py = ra.transpose().solve_lower_triangular(r)?;
        let mut p = &y * py;
        if n > k {
            let zb = q.columns(k, n - k);
            let reduced = zb.transpose() * self.hessian * &zb;
            let rhs = -(zb.transpose() * (g + self.hessian * &p));
            let pz = Cholesky::factor(&reduced)?.solve(&rhs);
            p += &zb * pz;
        }
        let nu = ra.solve_upper_triangular(&-(y.transpose() * (g + self.hessian * &p)))?;
        Some((p, nu))
    }

    fn ineq_slack(&self, z: &DVector<f64>, i: usize) -> f64 {
        self.ineq_rhs[i] - self.ineq.row(i).transpose().dot(z)
    }

    fn is_feasible(&self, z: &DVector<f64>, tol: f64) -> bool {
        (0..self.ineq.nrows()).all(|i| self.ineq_slack(z, i) >= -self.row_tol(z, i, tol))
    }

    fn row_tol(&self, z: &DVector<f64>, i: usize, tol: f64) -> f64 {
        tol * (1.0 + self.ineq_rhs[i].abs() + self.ineq.row(i).amax() * z.amax())
    }

    /// Minimiser with the equalities and the rows in `working` held tight.
    fn anchored_point(&self, working: &[usize]) -> Option<DVector<f64>> {
        let a = self.rows(working);
        let me = self.eq.nrows();
        let mut r = DVector::zeros(a.nrows());
        for i in 0..me {
            r[i] = self.eq_rhs[i];
        }
        for (k, &i) in working.iter().enumerate() {
            r[me + k] = self.ineq_rhs[i];
        }
        // a step from z = 0 with gradient c
        let (z, _) = self.constrained_step(&a, self.linear, &r)?;
        Some(z)
    }

    /// Primal active-set iterations from a feasible `z`.
    fn run(&self, mut z: DVector<f64>, mut working: Vec<usize>, max_iter: usize) -> StageResult {
        let me = self.eq.nrows();
        let mi = self.ineq.nrows();
        let mut history = Vec::new();
        let mut eq_mult = DVector::zeros(me);
        let mut ineq_mult = DVector::zeros(mi);
        let mut iterations = 0;
        let mut converged = false;

        // rows the start breaks (only by round-off) join the working set if independent
        for i in 0..mi {
            if !working.contains(&i) && self.ineq_slack(&z, i) < 0.0 {
                let pos = working.partition_point(|&w| w < i);
                working.insert(pos, i);
                let a = self.rows(&working);
                let g = DVector::zeros(z.len());
                if self.constrained_step(&a, &g, &DVector::zeros(a.nrows())).is_none() {
                    working.remove(pos);
                }
            }
        }

        while iterations < max_iter {
            iterations += 1;
            let a = self.rows(&working);
            let g = self.hessian * &z + self.linear;
            // drift back onto the working rows if the start sits slightly off them
            let mut r = DVector::zeros(a.nrows());
            for i in 0..me {
                r[i] = self.eq_rhs[i] - self.eq.row(i).transpose().dot(&z);
            }
            for (k, &i) in working.iter().enumerate() {
                r[me + k] = self.ineq_slack(&z, i);
            }
            let Some((p, nu)) = self.constrained_step(&a, &g, &r) else {
                // dependent working rows: drop the newest inequality and retry
                if working.pop().is_none() {
                    break;
                }
                continue;
            };
            let scale = 1.0 + z.amax();
            if p.amax() <= STEP_TOL * scale {
                let dual_scale = 1.0 + g.amax();
                let mut worst: Option<(usize, f64)> = None;
                for (k, &i) in working.iter().enumerate() {
                    let mu = nu[me + k];
                    if mu < -DUAL_TOL * dual_scale {
                        let better = match worst {
                            None => true,
                            Some((wi, wmu)) => mu < wmu || (mu == wmu && i < working[wi]),
                        };
                        if better {
                            worst = Some((k, mu));
                        }
                    }
                }
                match worst {
                    Some((k, _)) => {
                        working.remove(k);
                        history.push(self.objective(&z));
                    }
                    None => {
                        eq_mult = nu.rows(0, me).into_owned();
                        ineq_mult.fill(0.0);
                        for (k, &i) in working.iter().enumerate() {
                            ineq_mult[i] = nu[me + k].max(0.0);
                        }
                        history.push(self.objective(&z));
                        converged = true;
                        break;
                    }
                }
                continue;
            }

            let mut alpha = 1.0;
            let mut blocking = None;
            for i in 0..mi {
                if working.contains(&i) {
                    continue;
                }
                let ap = self.ineq.row(i).transpose().dot(&p);
                if ap > STEP_TOL * (1.0 + p.amax()) {
                    let ratio = (self.ineq_slack(&z, i) / ap).max(0.0);
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = Some(i);
                    }
                }
            }
            z += &p * alpha;
            if let Some(i) = blocking {
                let pos = working.partition_point(|&w| w < i);
                working.insert(pos, i);
            }
            history.push(self.objective(&z));
        }

        StageResult {
            z,
            working,
            eq_mult,
            ineq_mult,
            converged,
            iterations,
            history,
        }
    }
}

impl QpSolver {
    pub fn solve(&self, problem: &QpProblem) -> QpSolution {
        self.solve_warm(problem, &[])
    }

    /// Solve starting from a guessed set of tight inequality rows. An unusable
    /// guess falls back to a cold start; the optimum does not depend on it.
    pub fn solve_warm(&self, problem: &QpProblem, warm_active: &[usize]) -> QpSolution {
        let n = problem.num_variables();
        let me = problem.num_equalities();
        let mi = problem.num_inequalities();
        let max_iter = self.max_iterations.unwrap_or(100 + 50 * (n + me + mi));

        let hreg = regularized(&problem.hessian);
        let chol = Cholesky::factor(&hreg).expect("hessian checked at construction");
        let stage = Stage {
            hessian: &hreg,
            chol: &chol,
            linear: &problem.linear,
            eq: &problem.eq_matrix,
            eq_rhs: &problem.eq_rhs,
            ineq: &problem.ineq_matrix,
            ineq_rhs: &problem.ineq_rhs,
        };

        let infeasible = |z: DVector<f64>, violated: Vec<usize>| QpSolution {
            objective: problem.objective(&z),
            z,
            active_set: Vec::new(),
            eq_multipliers: DVector::zeros(me),
            ineq_multipliers: DVector::zeros(mi),
            status: QpStatus::Infeasible,
            iterations: 0,
            history: Vec::new(),
            violated,
        };

        let mut warm: Vec<usize> = warm_active.iter().copied().filter(|&i| i < mi).collect();
        warm.sort_unstable();
        warm.dedup();

        let start = if !warm.is_empty() {
            stage
                .anchored_point(&warm)
                .filter(|z| stage.is_feasible(z, FEAS_TOL))
                .map(|z| (z, warm))
        } else {
            None
        };
        let start = match start {
            Some(s) => Some(s),
            None => match stage.anchored_point(&[]) {
                None => return infeasible(DVector::zeros(n), Vec::new()),
                Some(z) if stage.is_feasible(&z, FEAS_TOL) => Some((z, Vec::new())),
                Some(_) => None,
            },
        };
        let (z0, w0) = match start {
            Some(s) => s,
            None => match self.elastic_start(problem, &stage, max_iter) {
                Ok(s) => s,
                Err((z, violated)) => return infeasible(z, violated),
            },
        };

        let out = stage.run(z0, w0, max_iter);
        let status = if out.converged {
            QpStatus::Optimal
        } else {
            QpStatus::IterationLimit
        };
        QpSolution {
            objective: problem.objective(&out.z),
            z: out.z,
            active_set: out.working,
            eq_multipliers: out.eq_mult,
            ineq_multipliers: out.ineq_mult,
            status,
            iterations: out.iterations,
            history: out.history,
            violated: Vec::new(),
        }
    }

    /// Feasible start from `min f(z) + M·(s + ½s²)  s.t.  Ez = f, Az − s ≤ b, s ≥ 0`,
    /// escalating `M` until the slack vanishes.
    #[allow(clippy::type_complexity)]
    fn elastic_start(
        &self,
        problem: &QpProblem,
        stage: &Stage<'_>,
        max_iter: usize,
    ) -> Result<(DVector<f64>, Vec<usize>), (DVector<f64>, Vec<usize>)> {
        let n = problem.num_variables();
        let me = problem.num_equalities();
        let mi = problem.num_inequalities();
        let z_eq = stage.anchored_point(&[]).expect("checked by caller");

        let mut eq = DMatrix::zeros(me, n + 1);
        eq.view_mut((0, 0), (me, n)).copy_from(&problem.eq_matrix);
        let mut ineq = DMatrix::zeros(mi + 1, n + 1);
        ineq.view_mut((0, 0), (mi, n)).copy_from(&problem.ineq_matrix);
        for i in 0..mi {
            ineq[(i, n)] = -1.0;
        }
        ineq[(mi, n)] = -1.0;
        let mut rhs = DVector::zeros(mi + 1);
        rhs.rows_mut(0, mi).copy_from(&problem.ineq_rhs);

        let violation = (0..mi)
            .map(|i| -stage.ineq_slack(&z_eq, i))
            .fold(0.0f64, f64::max);
        let mut start = DVector::zeros(n + 1);
        start.rows_mut(0, n).copy_from(&z_eq);
        start[n] = violation;

        let base = 1.0
            + problem.linear.amax()
            + problem.hessian.amax() * (1.0 + z_eq.amax())
            + problem.ineq_rhs.amax();
        let mut penalty = 1e4 * base;
        let mut last = start.clone();
        for _ in 0..4 {
            let mut h = DMatrix::zeros(n + 1, n + 1);
            h.view_mut((0, 0), (n, n)).copy_from(stage.hessian);
            h[(n, n)] = penalty;
            let chol = Cholesky::factor(&h).expect("block diagonal of positive definite blocks");
            let mut linear = DVector::zeros(n + 1);
            linear.rows_mut(0, n).copy_from(&problem.linear);
            linear[n] = penalty;
            let elastic = Stage {
                hessian: &h,
                chol: &chol,
                linear: &linear,
                eq: &eq,
                eq_rhs: &problem.eq_rhs,
                ineq: &ineq,
                ineq_rhs: &rhs,
            };
            let out = elastic.run(start.clone(), Vec::new(), max_iter);
            let slack = out.z[n];
            last = out.z.clone();
            if out.converged {
                let working: Vec<usize> = out.working.iter().copied().filter(|&i| i < mi).collect();
                if let Some(z) = stage.anchored_point(&working).filter(|z| stage.is_feasible(z, FEAS_TOL)) {
                    return Ok((z, working));
                }
                if slack <= 1e-12 * (1.0 + violation) {
                    return Ok((out.z.rows(0, n).into_owned(), working));
                }
            }
            penalty *= 1e3;
        }
        let z = last.rows(0, n).into_owned();
        let tol = 1e-9 * (1.0 + problem.ineq_rhs.amax());
        let violated = (0..mi).filter(|&i| stage.ineq_slack(&z, i) < -tol).collect();
        Err((z, violated))
    }
}

fn regularized(h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    match Cholesky::factor(h) {
        Some(c) if c.min_pivot >= PIVOT_FLOOR => h.clone(),
        _ => {
            let scale = h.amax().max(1.0);
            let mut r = h.clone();
            for i in 0..n {
                r[(i, i)] += REGULARIZATION * scale;
            }
            r
        }
    }
}
