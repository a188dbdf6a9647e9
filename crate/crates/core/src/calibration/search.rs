use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::data::{CalibrationBounds, CalibrationData, CalibrationParams};
use super::metrics::{metrics_for, CalibrationMetrics};
use crate::error::{Error, Result};
use crate::lcp::SolverOptions;
use crate::market::{solve_model_from, validate_model, EquilibriumSolution, MarketModel};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    /// Largest accepted relative consumption deviation.
    pub target: f64,
    /// Coordinate sweeps per start.
    pub max_sweeps: usize,
    /// Additional starts from randomly perturbed market power when a start
    /// stalls above the target.
    pub restarts: usize,
    pub seed: u64,
    /// Weight of relative sales shortfalls in the objective.
    pub sales_weight: f64,
    pub solver: SolverOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target: 0.025,
            max_sweeps: 50,
            restarts: 3,
            seed: 0,
            sales_weight: 1.0,
            solver: SolverOptions::default(),
        }
    }
}

/// A trader selling less than its reference in one market and period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SalesShortfall {
    pub trader: String,
    pub node: String,
    pub period: String,
    pub reference: f64,
    pub actual: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub params: CalibrationParams,
    /// The input model with calibrated curves and market power.
    pub model: MarketModel,
    pub solution: EquilibriumSolution,
    pub metrics: CalibrationMetrics,
    /// Whether the consumption target was met.
    pub converged: bool,
    pub sweeps: usize,
    pub evaluations: usize,
    /// Largest relative consumption deviation at the start and after every
    /// accepted step of the returned search path.
    pub history: Vec<f64>,
    pub shortfalls: Vec<SalesShortfall>,
}

/// One evaluated parameter vector.
#[derive(Clone)]
struct Eval {
    params: CalibrationParams,
    sol: EquilibriumSolution,
    /// Relative consumption gap per market, `(s − s_data) / s_data`.
    gaps: Vec<f64>,
    max_dev: f64,
    objective: f64,
}

struct Market {
    node: usize,
    id: String,
    period: usize,
}

struct Search<'a> {
    model: &'a MarketModel,
    data: &'a CalibrationData,
    bounds: &'a CalibrationBounds,
    opts: &'a CalibrationOptions,
    markets: Vec<Market>,
    evaluations: usize,
    /// Gaps below this count as closed in the one-dimensional searches.
    inner_tol: f64,
}

impl Search<'_> {
    fn evaluate(&mut self, params: CalibrationParams) -> Option<Eval> {
        self.evaluations += 1;
        let m = params.apply(self.model).ok()?;
        let sol = match solve_model_from(&m, &self.opts.solver, None) {
            Ok(s) => s.solution,
            Err(e) => {
                log::debug!("calibration candidate rejected: {e}");
                return None;
            }
        };
        let gaps: Vec<f64> = self
            .markets
            .iter()
            .map(|mk| {
                let d = self.data.consumption[&mk.id][mk.period];
                (sol.consumption[[mk.node, mk.period]] - d) / d
            })
            .collect();
        let max_dev = gaps.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let mut objective: f64 = gaps.iter().map(|g| g * g).sum();
        for (f, n, t, r) in self.references() {
            if r > 0.0 {
                let short = ((r - sol.sales[[f, n, t]]) / r).max(0.0);
                objective += self.opts.sales_weight * short * short;
            }
        }
        Some(Eval {
            params,
            sol,
            gaps,
            max_dev,
            objective,
        })
    }

    fn references(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (trader, per_node) in self.data.reference_sales() {
            let Some(f) = self.model.trader_index(trader) else { continue };
            for (node, v) in per_node {
                let Some(n) = self.model.node_index(node) else { continue };
                if !self.model.traders[f].consumers.contains(node) {
                    continue;
                }
                for (t, &r) in v.iter().enumerate() {
                    out.push((f, n, t, r));
                }
            }
        }
        out
    }

    fn accepts(cur: &Eval, cand: &Eval) -> bool {
        cand.max_dev <= cur.max_dev + 1e-12 && cand.objective < cur.objective - 1e-14 * (1.0 + cur.objective)
    }

    /// Bracketed root search of `gap` over one scalar parameter. Returns the
    /// evaluated point with the smallest `|gap|` if it improves on `cur`.
    fn line_search(
        &mut self,
        cur: &Eval,
        lo: f64,
        hi: f64,
        x0: f64,
        set: &dyn Fn(&mut CalibrationParams, f64),
        gap: &dyn Fn(&Eval) -> f64,
    ) -> Option<Eval> {
        let g0 = gap(cur);
        if g0.abs() <= self.inner_tol || hi - lo <= 0.0 {
            return None;
        }
        let at = |s: &mut Self, x: f64| -> Option<(f64, f64, Eval)> {
            let mut p = cur.params.clone();
            set(&mut p, x);
            let e = s.evaluate(p)?;
            Some((x, gap(&e), e))
        };
        let mut points: Vec<(f64, f64, Option<Eval>)> = vec![(x0, g0, None)];
        for x in [lo, hi] {
            if (x - x0).abs() > 1e-15 * (1.0 + x0.abs()) {
                if let Some((x, g, e)) = at(self, x) {
                    points.push((x, g, Some(e)));
                }
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bracket = points
            .windows(2)
            .find(|w| w[0].1.signum() != w[1].1.signum())
            .map(|w| ((w[0].0, w[0].1), (w[1].0, w[1].1)));
        let mut best: Option<Eval> = None;
        let mut best_gap = g0.abs();
        for (_, g, e) in points {
            if let Some(e) = e {
                if g.abs() < best_gap {
                    best_gap = g.abs();
                    best = Some(e);
                }
            }
        }
        if let Some(((mut a, mut fa), (mut b, mut fb))) = bracket {
            // Illinois variant of regula falsi
            let mut side = 0;
            for _ in 0..40 {
                if best_gap <= self.inner_tol || (b - a).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    break;
                }
                let x = (a * fb - b * fa) / (fb - fa);
                let x = if x.is_finite() && x > a.min(b) && x < a.max(b) { x } else { 0.5 * (a + b) };
                let Some((x, g, e)) = at(self, x) else { break };
                if g.abs() < best_gap {
                    best_gap = g.abs();
                    best = Some(e);
                }
                if g.signum() == fb.signum() {
                    b = x;
                    fb = g;
                    if side == -1 {
                        fa *= 0.5;
                    }
                    side = -1;
                } else {
                    a = x;
                    fa = g;
                    if side == 1 {
                        fb *= 0.5;
                    }
                    side = 1;
                }
            }
        }
        best
    }

    /// Run coordinate sweeps from `start`; returns the final point, its
    /// history and the number of sweeps.
    fn descend(&mut self, start: Eval) -> (Eval, Vec<f64>, usize) {
        let mut cur = start;
        let mut history = vec![cur.max_dev];
        let mut sweeps = 0;
        let refs = self.references();
        while sweeps < self.opts.max_sweeps {
            sweeps += 1;
            let mut accepted = 0;
            for k in 0..self.markets.len() {
                let (id, t) = (self.markets[k].id.clone(), self.markets[k].period);
                let gap = move |e: &Eval| e.gaps[k];

                let b = self.bounds.price[&id][t];
                let x0 = cur.params.price[&id][t];
                let set_price = |p: &mut CalibrationParams, x: f64| p.price.get_mut(&id).unwrap()[t] = x;
                if let Some(c) = self.line_search(&cur, b.lo, b.hi, x0, &set_price, &gap) {
                    if Self::accepts(&cur, &c) {
                        cur = c;
                        history.push(cur.max_dev);
                        accepted += 1;
                    }
                }

                let b = self.bounds.elasticity[&id][t];
                let x0 = cur.params.elasticity[&id][t];
                let set_eta = |p: &mut CalibrationParams, x: f64| p.elasticity.get_mut(&id).unwrap()[t] = x;
                if let Some(c) = self.line_search(&cur, b.lo, b.hi, x0, &set_eta, &gap) {
                    if Self::accepts(&cur, &c) {
                        cur = c;
                        history.push(cur.max_dev);
                        accepted += 1;
                    }
                }

                // common shift of every seller's market power in this market
                let base = cur.params.theta.clone();
                let bounds = self.bounds;
                let node_id = id.clone();
                let set_shift = move |p: &mut CalibrationParams, d: f64| {
                    for (f, per_node) in p.theta.iter_mut() {
                        if let Some(v) = per_node.get_mut(&node_id) {
                            v[t] = bounds.theta[f][&node_id][t].clamp(base[f][&node_id][t] + d);
                        }
                    }
                };
                if let Some(c) = self.line_search(&cur, -1.0, 1.0, 0.0, &set_shift, &gap) {
                    if Self::accepts(&cur, &c) {
                        cur = c;
                        history.push(cur.max_dev);
                        accepted += 1;
                    }
                }
            }
            for &(f, n, t, r) in &refs {
                if r <= 0.0 || cur.sol.sales[[f, n, t]] >= r * (1.0 - 1e-3) {
                    continue;
                }
                let fid = self.model.traders[f].id.clone();
                let nid = self.model.nodes[n].id.clone();
                let b = self.bounds.theta[&fid][&nid][t];
                let x0 = cur.params.theta[&fid][&nid][t];
                let set_theta = |p: &mut CalibrationParams, x: f64| {
                    p.theta.get_mut(&fid).unwrap().get_mut(&nid).unwrap()[t] = x;
                };
                let short = move |e: &Eval| (e.sol.sales[[f, n, t]] - r) / r;
                if let Some(c) = self.line_search(&cur, b.lo, x0, x0, &set_theta, &short) {
                    if Self::accepts(&cur, &c) {
                        cur = c;
                        history.push(cur.max_dev);
                        accepted += 1;
                    }
                }
            }
            log::debug!("calibration sweep {sweeps}: max deviation {:.4e}, {accepted} steps", cur.max_dev);
            let short_left = refs
                .iter()
                .any(|&(f, n, t, r)| r > 0.0 && cur.sol.sales[[f, n, t]] < r * (1.0 - 1e-3));
            if accepted == 0 || (cur.max_dev <= self.opts.target && !short_left) {
                break;
            }
        }
        (cur, history, sweeps)
    }
}

/// Tune `π*`, `η*` and `θ` inside `bounds` until the equilibrium
/// consumption of every market is within `opts.target` of the reported
/// value.
///
/// Each sweep visits the markets in model order and runs one-dimensional
/// searches on the price anchor, the elasticity and a common shift of the
/// market power, then lowers individual `θ` where a trader sells less than
/// its reference. A step is kept only if the largest consumption deviation
/// does not grow and the objective falls. When a start stalls above the
/// target, the search restarts from market power perturbed with a seeded
/// generator and the best path is returned.
///
/// Not meeting the target is reported through `converged`, not as an error.
pub fn calibrate(
    model: &MarketModel,
    data: &CalibrationData,
    bounds: &CalibrationBounds,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    let mut diags: Vec<_> = validate_model(model).into_iter().filter(|d| d.is_error()).collect();
    diags.extend(data.validate(model));
    if !diags.is_empty() {
        return Err(Error::Validation(diags));
    }
    let markets = model
        .consumer_nodes()
        .flat_map(|(n, node)| {
            (0..model.periods.len()).map(move |t| Market {
                node: n,
                id: node.id.clone(),
                period: t,
            })
        })
        .collect();
    let mut search = Search {
        model,
        data,
        bounds,
        opts,
        markets,
        evaluations: 0,
        inner_tol: 0.05 * opts.target,
    };
    let initial = CalibrationParams::initial(model, data, bounds);
    let start = search
        .evaluate(initial)
        .ok_or_else(|| Error::Solver("no equilibrium at the initial calibration parameters".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut best, mut best_history, mut sweeps) = search.descend(start);
    for _ in 0..opts.restarts {
        if best.max_dev <= opts.target {
            break;
        }
        let mut p = best.params.clone();
        for (f, per_node) in p.theta.iter_mut() {
            for (n, v) in per_node.iter_mut() {
                for (t, x) in v.iter_mut().enumerate() {
                    *x = bounds.theta[f][n][t].clamp(*x + rng.gen_range(-0.2..=0.2));
                }
            }
        }
        let Some(start) = search.evaluate(p) else { continue };
        let (cand, history, s) = search.descend(start);
        sweeps += s;
        if cand.max_dev < best.max_dev {
            best = cand;
            best_history = history;
        }
    }
    let calibrated = best.params.apply(model)?;
    let metrics = metrics_for(&calibrated, data, &best.params, &best.sol);
    let shortfalls = search
        .references()
        .into_iter()
        .filter(|&(f, n, t, r)| best.sol.sales[[f, n, t]] < r * (1.0 - 1e-6))
        .map(|(f, n, t, r)| SalesShortfall {
            trader: model.traders[f].id.clone(),
            node: model.nodes[n].id.clone(),
            period: model.periods[t].id.clone(),
            reference: r,
            actual: best.sol.sales[[f, n, t]],
        })
        .collect();
    Ok(CalibrationResult {
        converged: best.max_dev <= opts.target,
        params: best.params,
        model: calibrated,
        solution: best.sol,
        metrics,
        sweeps,
        evaluations: search.evaluations,
        history: best_history,
        shortfalls,
    })
}
