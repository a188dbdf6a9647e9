//! Dense linear complementarity problems.
//!
//! An LCP asks for `z ≥ 0` such that `w = M z + q ≥ 0` and `zᵢ wᵢ = 0` for
//! every row. Three solvers share the same problem and solution types:
//!
//! * [`solve_lemke`]: complementary pivoting with a lexicographic ratio test.
//! * [`solve_fb_newton`]: semismooth Newton on the Fischer–Burmeister
//!   reformulation, for problems too large for a dense tableau.
//! * [`brute_force_lcp`]: enumeration of all `2^d` complementary bases, used
//!   as a test oracle.

mod brute;
mod lemke;
mod newton;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use brute::{brute_force_lcp, BRUTE_FORCE_MAX_DIM};
pub use lemke::solve_lemke;
pub use newton::solve_fb_newton;

/// Affine complementarity system `0 ≤ z ⊥ M z + q ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpProblem {
    pub m: DMatrix<f64>,
    pub q: DVector<f64>,
    /// One descriptor per row. Opaque to the solvers; used in diagnostics.
    pub labels: Vec<String>,
}

impl LcpProblem {
    /// Build a problem with generic `row{i}` labels.
    pub fn new(m: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        let labels = (0..q.len()).map(|i| format!("row{i}")).collect();
        Self::with_labels(m, q, labels)
    }

    pub fn with_labels(m: DMatrix<f64>, q: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        let p = Self { m, q, labels };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor from row-major nested slices.
    pub fn from_rows(rows: &[&[f64]], q: &[f64]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("matrix rows must all have length d".into()));
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::new(m, DVector::from_column_slice(q))
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Check the structural invariants: square, matching lengths, finite.
    pub fn validate(&self) -> Result<()> {
        let d = self.q.len();
        if d == 0 {
            return Err(Error::InvalidInput("empty problem".into()));
        }
        if self.m.nrows() != self.m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                self.m.nrows(),
                self.m.ncols()
            )));
        }
        if self.m.nrows() != d {
            return Err(Error::InvalidInput(format!(
                "matrix dimension {} does not match q length {}",
                self.m.nrows(),
                d
            )));
        }
        if self.labels.len() != d {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                self.labels.len(),
                d
            )));
        }
        if self.m.iter().chain(self.q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in M or q".into()));
        }
        Ok(())
    }

    /// `w = M z + q`.
    pub fn affine(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.m * z + &self.q
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub comp_tol: f64,
    pub max_pivots: usize,
    pub max_newton_iters: usize,
    /// Perturbation `μ` in `√(a² + b² + 2μ) − a − b`. Zero gives the plain
    /// Fischer–Burmeister function.
    pub fb_smoothing: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            comp_tol: 1e-8,
            max_pivots: 100_000,
            max_newton_iters: 200,
            fb_smoothing: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.feas_tol > 0.0 && self.comp_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_pivots == 0 || self.max_newton_iters == 0 {
            return Err(Error::InvalidInput("iteration limits must be at least 1".into()));
        }
        if !(self.fb_smoothing >= 0.0) {
            return Err(Error::InvalidInput("fb_smoothing must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Solved,
    /// Lemke's auxiliary ray left the feasible region before a complementary
    /// basis was found.
    RayTermination,
    IterationLimit,
    NumericalFailure,
    /// The enumeration oracle found no complementary basis.
    NoComplementaryBasis,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Solved => "solved",
            SolveStatus::RayTermination => "ray_termination",
            SolveStatus::IterationLimit => "iteration_limit",
            SolveStatus::NumericalFailure => "numerical_failure",
            SolveStatus::NoComplementaryBasis => "no_complementary_basis",
        };
        f.write_str(s)
    }
}

/// Feasibility and complementarity residuals of a candidate `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Largest violation of `z ≥ 0` or `w ≥ 0`.
    pub feasibility: f64,
    /// Largest violation of `z ≥ 0` alone.
    pub z_violation: f64,
    /// Largest violation of `w ≥ 0` alone.
    pub w_violation: f64,
    /// `maxᵢ |zᵢ wᵢ|`.
    pub complementarity: f64,
    /// Row with the largest combined violation, if any row violates at all.
    pub worst_row: Option<usize>,
    pub worst_label: Option<String>,
}

impl ResidualReport {
    pub fn within(&self, opts: &SolverOptions) -> bool {
        self.feasibility <= opts.feas_tol && self.complementarity <= opts.comp_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcpSolution {
    pub z: DVector<f64>,
    pub w: DVector<f64>,
    pub complementarity_residual: f64,
    pub feasibility_residual: f64,
    pub status: SolveStatus,
    /// Pivots (Lemke), Newton iterations, or bases tried (enumeration).
    pub iterations: usize,
}

impl LcpSolution {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    pub(crate) fn from_z(
        problem: &LcpProblem,
        z: DVector<f64>,
        status: SolveStatus,
        iterations: usize,
    ) -> Self {
        let w = problem.affine(&z);
        let r = residuals(problem, &z, &w);
        Self {
            z,
            w,
            complementarity_residual: r.complementarity,
            feasibility_residual: r.feasibility,
            status,
            iterations,
        }
    }

    /// Promote to `Solved` when residuals allow it, otherwise fall back to
    /// `otherwise`.
    pub(crate) fn classify(mut self, opts: &SolverOptions, otherwise: SolveStatus) -> Self {
        self.status = if self.feasibility_residual <= opts.feas_tol
            && self.complementarity_residual <= opts.comp_tol
        {
            SolveStatus::Solved
        } else {
            otherwise
        };
        self
    }
}

/// Residuals of `z` against `problem`. Pure; never mutates its inputs.
pub fn verify_complementarity(problem: &LcpProblem, z: &[f64], tol: f64) -> Result<ResidualReport> {
    problem.validate()?;
    if z.len() != problem.dim() {
        return Err(Error::InvalidInput(format!(
            "z has length {}, problem has {} rows",
            z.len(),
            problem.dim()
        )));
    }
    let z = DVector::from_column_slice(z);
    let w = problem.affine(&z);
    let mut report = residuals(problem, &z, &w);
    // Rows within `tol` are not reported as offenders.
    if report.feasibility <= tol && report.complementarity <= tol {
        report.worst_row = None;
        report.worst_label = None;
    }
    Ok(report)
}

fn residuals(problem: &LcpProblem, z: &DVector<f64>, w: &DVector<f64>) -> ResidualReport {
    let mut zv = 0.0_f64;
    let mut wv = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut worst = None;
    let mut worst_score = 0.0;
    for i in 0..z.len() {
        let f = (-z[i]).max(-w[i]).max(0.0);
        let c = (z[i] * w[i]).abs();
        zv = zv.max(-z[i]);
        wv = wv.max(-w[i]);
        comp = comp.max(c);
        let score = f.max(c);
        if score > worst_score {
            worst_score = score;
            worst = Some(i);
        }
    }
    ResidualReport {
        feasibility: zv.max(wv),
        z_violation: zv,
        w_violation: wv,
        complementarity: comp,
        worst_row: worst,
        worst_label: worst.map(|i| problem.labels[i].clone()),
    }
}

/// Solve the linear system fixed by a complementary basis: `z_J` basic,
/// `w_{J^c}` basic. Returns `None` when `M_JJ` is singular.
pub(crate) fn solve_basis(problem: &LcpProblem, basic_z: &[usize]) -> Option<DVector<f64>> {
    let d = problem.dim();
    let mut z = DVector::zeros(d);
    let k = basic_z.len();
    if k == 0 {
        return Some(z);
    }
    let sub = DMatrix::from_fn(k, k, |a, b| problem.m[(basic_z[a], basic_z[b])]);
    let rhs = DVector::from_fn(k, |a, _| -problem.q[basic_z[a]]);
    let sol = sub.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    for (a, &i) in basic_z.iter().enumerate() {
        z[i] = sol[a];
    }
    Some(z)
}

/// Re-solve the basis implied by `z` (rows with `zᵢ > wᵢ` are basic in `z`)
/// and keep the result when it is at least as accurate as the input.
pub(crate) fn polish(problem: &LcpProblem, candidate: &LcpSolution) -> LcpSolution {
    let basic: Vec<usize> = (0..problem.dim())
        .filter(|&i| candidate.z[i] > candidate.w[i])
        .collect();
    let Some(mut z) = solve_basis(problem, &basic) else {
        return candidate.clone();
    };
    z.iter_mut().for_each(|v| *v = v.max(0.0));
    let polished = LcpSolution::from_z(problem, z, candidate.status, candidate.iterations);
    let score = |s: &LcpSolution| s.feasibility_residual.max(s.complementarity_residual);
    if score(&polished) <= score(candidate) {
        polished
    } else {
        candidate.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_reports_exact_solution() {
        let p = LcpProblem::from_rows(&[&[1.0]], &[-1.0]).unwrap();
        let r = verify_complementarity(&p, &[1.0], 1e-12).unwrap();
        assert_eq!(r.feasibility, 0.0);
        assert_eq!(r.complementarity, 0.0);
        assert!(r.worst_row.is_none());
    }

    #[test]
    fn verify_reports_complementarity_gap() {
        let p = LcpProblem::from_rows(&[&[1.0]], &[-1.0]).unwrap();
        let r = verify_complementarity(&p, &[2.0], 1e-12).unwrap();
        assert_eq!(r.complementarity, 2.0);
        assert_eq!(r.feasibility, 0.0);
        assert_eq!(r.worst_label.as_deref(), Some("row0"));
    }

    #[test]
    fn verify_reports_negative_z() {
        let p = LcpProblem::from_rows(&[&[1.0]], &[-1.0]).unwrap();
        let r = verify_complementarity(&p, &[-1.0], 1e-12).unwrap();
        assert_eq!(r.z_violation, 1.0);
        // w = -2 as well, so the combined figure takes the larger violation.
        assert_eq!(r.w_violation, 2.0);
        assert_eq!(r.feasibility, 2.0);
    }

    #[test]
    fn verify_rejects_length_mismatch() {
        let p = LcpProblem::from_rows(&[&[1.0]], &[-1.0]).unwrap();
        assert!(matches!(
            verify_complementarity(&p, &[1.0, 2.0], 1e-9),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(LcpProblem::new(m, DVector::from_vec(vec![1.0])).is_err());
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(LcpProblem::new(m, DVector::from_vec(vec![1.0])).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(LcpProblem::new(m, DVector::from_vec(vec![1.0])).is_err());
    }
}
