use super::assemble::assemble_lcp;
use super::solution::{extract_lcp, EquilibriumSolution};
use super::types::MarketModel;
use crate::error::{Error, Result};
use crate::lcp::{solve_fb_newton, solve_lemke, LcpSolution, SolverOptions};

/// Above this many rows the Newton path is tried before pivoting.
pub const LEMKE_MAX_DIM: usize = 500;

/// An equilibrium together with the raw LCP vector it came from.
#[derive(Debug, Clone)]
pub struct SolvedModel {
    pub solution: EquilibriumSolution,
    pub z: Vec<f64>,
}

/// Assemble and solve `model`, returning an error unless the LCP is solved
/// within the tolerances of `opts`.
pub fn solve_model(model: &MarketModel, opts: &SolverOptions) -> Result<EquilibriumSolution> {
    solve_model_from(model, opts, None).map(|s| s.solution)
}

/// Like [`solve_model`], optionally starting Newton from a previous LCP
/// vector of the same model structure.
///
/// Pivoting is the primary method up to [`LEMKE_MAX_DIM`] rows; Newton is
/// primary above that or when a start vector is supplied. The other method
/// is the fallback.
pub fn solve_model_from(
    model: &MarketModel,
    opts: &SolverOptions,
    start: Option<&[f64]>,
) -> Result<SolvedModel> {
    let (problem, index) = assemble_lcp(model)?;
    let d = problem.dim();
    let start = start.filter(|s| s.len() == d);
    let newton = |s: Option<&[f64]>| -> Result<LcpSolution> {
        let zero = vec![0.0; d];
        solve_fb_newton(&problem, s.unwrap_or(&zero), opts)
    };
    let first = if start.is_some() || d > LEMKE_MAX_DIM {
        newton(start)?
    } else {
        solve_lemke(&problem, opts)?
    };
    let sol = if first.is_solved() {
        first
    } else {
        log::debug!("primary solve ended with {}; trying fallback", first.status);
        let second = if start.is_some() || d > LEMKE_MAX_DIM {
            solve_lemke(&problem, opts)?
        } else {
            newton(None)?
        };
        if second.is_solved() {
            second
        } else {
            return Err(Error::Solver(format!(
                "no equilibrium found: {} then {} (feasibility {:.3e}, complementarity {:.3e})",
                first.status, second.status, second.feasibility_residual, second.complementarity_residual
            )));
        }
    };
    let solution = extract_lcp(model, &index, &sol)?;
    Ok(SolvedModel {
        solution,
        z: sol.z.as_slice().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::testing::*;
    use approx::assert_relative_eq;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn monopoly_oracle() {
        let s = solve_model(&single_market(1.0, 1), &opts()).unwrap();
        assert_relative_eq!(s.sales[[0, 0, 0]], 200.0 / 3.0, max_relative = 1e-6);
        assert_relative_eq!(s.price[[0, 0]], 500.0, max_relative = 1e-6);
    }

    #[test]
    fn competitive_oracle() {
        let s = solve_model(&single_market(0.0, 1), &opts()).unwrap();
        assert_relative_eq!(s.consumption[[0, 0]], 400.0 / 3.0, max_relative = 1e-6);
        assert_relative_eq!(s.price[[0, 0]], 100.0, max_relative = 1e-6);
    }

    #[test]
    fn duopoly_oracle() {
        let s = solve_model(&single_market(1.0, 2), &opts()).unwrap();
        for f in 0..2 {
            assert_relative_eq!(s.sales[[f, 0, 0]], 800.0 / 18.0, max_relative = 1e-6);
        }
        assert_relative_eq!(s.price[[0, 0]], 1100.0 / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn warm_started_newton_agrees_with_pivoting() {
        let model = two_node();
        let cold = solve_model_from(&model, &opts(), None).unwrap();
        let mut start = cold.z.clone();
        for v in &mut start {
            *v *= 1.1;
        }
        let warm = solve_model_from(&model, &opts(), Some(&start)).unwrap();
        for (a, b) in cold.z.iter().zip(&warm.z) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
