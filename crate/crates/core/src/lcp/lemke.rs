use std::cmp::Ordering;

use nalgebra::DVector;

use super::{solve_basis, LcpProblem, LcpSolution, SolveStatus, SolverOptions};
use crate::error::Result;

/// Entries below this magnitude are never used as pivots.
const PIVOT_TOL: f64 = 1e-11;
/// Relative tolerance when comparing ratios during the lexicographic test.
const RATIO_TOL: f64 = 1e-9;

/// Dense tableau `[ B⁻¹ | −B⁻¹M | −B⁻¹e | B⁻¹q ]` for the system
/// `w − M z − e z₀ = q`.
///
/// Variables are numbered `w₀…w_{d−1}`, `z₀…z_{d−1}`, then the artificial
/// `z₀` at index `2d`.
struct Tableau {
    d: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(problem: &LcpProblem) -> Self {
        let d = problem.dim();
        let width = 2 * d + 2;
        let mut data = vec![0.0; d * width];
        for i in 0..d {
            let row = &mut data[i * width..(i + 1) * width];
            row[i] = 1.0;
            for j in 0..d {
                row[d + j] = -problem.m[(i, j)];
            }
            row[2 * d] = -1.0;
            row[2 * d + 1] = problem.q[i];
        }
        Self {
            d,
            width,
            data,
            basis: (0..d).collect(),
        }
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    fn rhs(&self, row: usize) -> f64 {
        self.at(row, self.width - 1)
    }

    fn artificial(&self) -> usize {
        2 * self.d
    }

    fn complement(&self, var: usize) -> usize {
        if var < self.d {
            var + self.d
        } else {
            var - self.d
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.d {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            row[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Lexicographic comparison of `(rhs, B⁻¹ row) / divisor` for two rows.
    fn lex_cmp(&self, a: usize, da: f64, b: usize, db: f64) -> Ordering {
        let ra = self.rhs(a) / da;
        let rb = self.rhs(b) / db;
        let scale = 1.0 + ra.abs().max(rb.abs());
        if (ra - rb).abs() > RATIO_TOL * scale {
            return ra.partial_cmp(&rb).unwrap_or(Ordering::Equal);
        }
        for j in 0..self.d {
            let va = self.at(a, j) / da;
            let vb = self.at(b, j) / db;
            let scale = 1.0 + va.abs().max(vb.abs());
            if (va - vb).abs() > RATIO_TOL * scale {
                return va.partial_cmp(&vb).unwrap_or(Ordering::Equal);
            }
        }
        a.cmp(&b)
    }

    /// Minimum-ratio row for entering column `c`, or `None` on an unbounded
    /// ray. A row holding the artificial variable wins any tie on the
    /// ratio itself, which ends the path.
    fn ratio_test(&self, c: usize) -> Option<usize> {
        let candidates: Vec<usize> = (0..self.d).filter(|&i| self.at(i, c) > PIVOT_TOL).collect();
        let first = *candidates.first()?;
        let mut best = first;
        for &i in &candidates[1..] {
            if self.lex_cmp(i, self.at(i, c), best, self.at(best, c)) == Ordering::Less {
                best = i;
            }
        }
        let art = self.artificial();
        if self.basis[best] != art {
            if let Some(&r) = candidates.iter().find(|&&i| self.basis[i] == art) {
                let rr = self.rhs(r) / self.at(r, c);
                let rb = self.rhs(best) / self.at(best, c);
                if (rr - rb).abs() <= RATIO_TOL * (1.0 + rr.abs().max(rb.abs())) {
                    best = r;
                }
            }
        }
        Some(best)
    }

    fn z(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.d);
        for (i, &var) in self.basis.iter().enumerate() {
            if var >= self.d && var < 2 * self.d {
                z[var - self.d] = self.rhs(i);
            }
        }
        z
    }

    fn basic_z(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .basis
            .iter()
            .filter(|&&var| var >= self.d && var < 2 * self.d)
            .map(|&var| var - self.d)
            .collect();
        v.sort_unstable();
        v
    }
}

/// Lemke's complementary pivoting method with covering vector `e` and a
/// lexicographic minimum-ratio rule.
///
/// The terminal basis is re-solved directly, which removes the round-off
/// accumulated by the tableau updates. The pivot sequence depends only on
/// the input, so repeated calls return bitwise-identical `z`.
pub fn solve_lemke(problem: &LcpProblem, opts: &SolverOptions) -> Result<LcpSolution> {
    problem.validate()?;
    opts.validate()?;
    let d = problem.dim();

    if problem.q.iter().all(|&v| v >= 0.0) {
        return Ok(LcpSolution::from_z(problem, DVector::zeros(d), SolveStatus::Solved, 0));
    }

    let mut tab = Tableau::new(problem);
    // First pivot brings z₀ in at the most negative q. Among ties the last
    // row keeps the tableau lexicographically positive.
    let mut r = 0;
    for i in 1..d {
        if problem.q[i] <= problem.q[r] {
            r = i;
        }
    }
    let art = tab.artificial();
    let mut entering = tab.complement(tab.basis[r]);
    tab.pivot(r, art);
    let mut pivots = 1;

    loop {
        if pivots >= opts.max_pivots {
            log::warn!("lemke: pivot limit {} reached", opts.max_pivots);
            let sol = LcpSolution::from_z(problem, tab.z(), SolveStatus::IterationLimit, pivots);
            return Ok(sol);
        }
        let Some(r) = tab.ratio_test(entering) else {
            log::debug!("lemke: ray termination after {pivots} pivots");
            let sol = LcpSolution::from_z(problem, tab.z(), SolveStatus::RayTermination, pivots);
            return Ok(sol);
        };
        let leaving = tab.basis[r];
        tab.pivot(r, entering);
        pivots += 1;
        if leaving == art {
            break;
        }
        entering = tab.complement(leaving);
    }

    let raw = LcpSolution::from_z(problem, tab.z().map(|v| v.max(0.0)), SolveStatus::Solved, pivots);
    let best = match solve_basis(problem, &tab.basic_z()) {
        Some(z) => {
            let exact = LcpSolution::from_z(problem, z.map(|v| v.max(0.0)), SolveStatus::Solved, pivots);
            let score = |s: &LcpSolution| s.feasibility_residual.max(s.complementarity_residual);
            if score(&exact) <= score(&raw) {
                exact
            } else {
                raw
            }
        }
        None => raw,
    };
    Ok(best.classify(opts, SolveStatus::NumericalFailure))
}
