use nalgebra::DVector;

use super::{solve_basis, LcpProblem, LcpSolution, SolveStatus, SolverOptions};
use crate::error::{Error, Result};

/// Largest dimension accepted by [`brute_force_lcp`].
pub const BRUTE_FORCE_MAX_DIM: usize = 20;

/// Enumerate every complementary index set in ascending bitmask order and
/// return the first one whose basic solution satisfies `z ≥ −feas_tol` and
/// `w ≥ −feas_tol`.
///
/// Bit `i` of the mask set means `zᵢ` is basic (and `wᵢ = 0`).
pub fn brute_force_lcp(problem: &LcpProblem, opts: &SolverOptions) -> Result<LcpSolution> {
    problem.validate()?;
    let d = problem.dim();
    if d > BRUTE_FORCE_MAX_DIM {
        return Err(Error::SizeLimit {
            dim: d,
            limit: BRUTE_FORCE_MAX_DIM,
        });
    }
    let tol = opts.feas_tol;
    let mut basic = Vec::with_capacity(d);
    for mask in 0u32..(1u32 << d) {
        basic.clear();
        basic.extend((0..d).filter(|&i| mask & (1 << i) != 0));
        let Some(z) = solve_basis(problem, &basic) else {
            continue;
        };
        if z.iter().any(|&v| v < -tol) {
            continue;
        }
        let w = problem.affine(&z);
        if w.iter().any(|&v| v < -tol) {
            continue;
        }
        let z = z.map(|v| v.max(0.0));
        let sol = LcpSolution::from_z(problem, z, SolveStatus::Solved, mask as usize + 1);
        return Ok(sol.classify(opts, SolveStatus::NumericalFailure));
    }
    Ok(LcpSolution::from_z(
        problem,
        DVector::zeros(d),
        SolveStatus::NoComplementaryBasis,
        1usize << d,
    ))
}
