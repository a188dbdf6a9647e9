use nalgebra::{DMatrix, DVector};

use super::{polish, LcpProblem, LcpSolution, SolveStatus, SolverOptions};
use crate::error::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
/// Diagonal shifts tried, in order, when the Newton matrix is singular.
const REGULARIZATION: [f64; 5] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4];

/// Residual of the (smoothed) Fischer–Burmeister function and the diagonal
/// terms of one element of its generalized Jacobian.
fn fb(a: f64, b: f64, mu: f64) -> (f64, f64, f64) {
    let r = (a * a + b * b + 2.0 * mu).sqrt();
    if r > 1e-14 {
        (r - a - b, a / r - 1.0, b / r - 1.0)
    } else {
        // Kink at the origin: take the element in direction (1, 1)/√2.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        (r - a - b, s - 1.0, s - 1.0)
    }
}

struct Merit {
    phi: DVector<f64>,
    da: DVector<f64>,
    db: DVector<f64>,
    value: f64,
}

fn merit(problem: &LcpProblem, z: &DVector<f64>, mu: f64) -> Merit {
    let w = problem.affine(z);
    let d = z.len();
    let mut phi = DVector::zeros(d);
    let mut da = DVector::zeros(d);
    let mut db = DVector::zeros(d);
    for i in 0..d {
        let (p, a, b) = fb(z[i], w[i], mu);
        phi[i] = p;
        da[i] = a;
        db[i] = b;
    }
    let value = 0.5 * phi.norm_squared();
    Merit { phi, da, db, value }
}

/// Semismooth Newton method on `Φ(z)ᵢ = φ(zᵢ, (Mz+q)ᵢ) = 0` with an Armijo
/// line search on `½‖Φ‖²`.
///
/// Singular Newton matrices are retried with increasing diagonal shifts;
/// when every shift fails the solve stops with `NumericalFailure`. Each
/// iterate whose residual is small is also tried as an active-set guess and
/// re-solved exactly.
pub fn solve_fb_newton(
    problem: &LcpProblem,
    start: &[f64],
    opts: &SolverOptions,
) -> Result<LcpSolution> {
    problem.validate()?;
    opts.validate()?;
    let d = problem.dim();
    if start.len() != d {
        return Err(Error::InvalidInput(format!(
            "start has length {}, problem has {} rows",
            start.len(),
            d
        )));
    }
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite start vector".into()));
    }
    let mu = opts.fb_smoothing;
    let mut z = DVector::from_column_slice(start);
    let q_scale = 1.0 + problem.q.amax();

    for iter in 0..opts.max_newton_iters {
        let current = LcpSolution::from_z(problem, z.map(|v| v.max(0.0)), SolveStatus::Solved, iter);
        if current.feasibility_residual <= opts.feas_tol
            && current.complementarity_residual <= opts.comp_tol
        {
            return Ok(current);
        }
        let m = merit(problem, &z, mu);
        if m.phi.amax() < 1e-3 * q_scale {
            let trial = polish(problem, &current);
            if trial.feasibility_residual <= opts.feas_tol
                && trial.complementarity_residual <= opts.comp_tol
            {
                return Ok(trial);
            }
        }

        // J = diag(da) + diag(db) M
        let mut jac = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                jac[(i, j)] = m.db[i] * problem.m[(i, j)];
            }
            jac[(i, i)] += m.da[i];
        }
        let grad = jac.transpose() * &m.phi;
        let rhs = -&m.phi;
        let mut direction = None;
        for &shift in &REGULARIZATION {
            let mut j = jac.clone();
            for i in 0..d {
                j[(i, i)] += shift;
            }
            if let Some(step) = j.lu().solve(&rhs) {
                if step.iter().all(|v| v.is_finite()) {
                    direction = Some(step);
                    break;
                }
            }
        }
        let Some(mut dir) = direction else {
            log::debug!("fb-newton: singular Newton system at iteration {iter}");
            return Ok(LcpSolution::from_z(problem, z.map(|v| v.max(0.0)), SolveStatus::NumericalFailure, iter));
        };
        // Fall back to steepest descent when Newton is not a descent direction.
        let mut slope = grad.dot(&dir);
        if !(slope < -1e-12 * grad.norm() * dir.norm()) {
            dir = -&grad;
            slope = -grad.norm_squared();
        }
        let mut t = 1.0;
        loop {
            let cand = &z + t * &dir;
            let mc = merit(problem, &cand, mu);
            if mc.value <= m.value + ARMIJO * t * slope {
                z = cand;
                break;
            }
            t *= 0.5;
            if t < MIN_STEP {
                log::debug!("fb-newton: line search stalled at iteration {iter}");
                let stalled = LcpSolution::from_z(problem, z.map(|v| v.max(0.0)), SolveStatus::NumericalFailure, iter);
                return Ok(polish(problem, &stalled).classify(opts, SolveStatus::NumericalFailure));
            }
        }
    }
    let last = LcpSolution::from_z(
        problem,
        z.map(|v| v.max(0.0)),
        SolveStatus::IterationLimit,
        opts.max_newton_iters,
    );
    Ok(polish(problem, &last).classify(opts, SolveStatus::IterationLimit))
}
