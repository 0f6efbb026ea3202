//! Fits a parametric measure family to a symbol by minimizing the criterion
//! residual norm over a ξ-grid — solving ∫e^{ixξ}p(x,ξ)μ_θ(dx) ≈ 0 for θ.
//!
//! The minimizer is a box-constrained Nelder–Mead simplex with random
//! restarts: residuals may come from Monte Carlo measures where gradients
//! are noise, so a derivative-free method is the robust choice at desk
//! scale. Non-convergence is a result, not an error — some families simply
//! contain no invariant law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;

use crate::criterion::{residual1_with, CriterionConfig};
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::symbol::{Convention, Symbol};

/// Residual norm minimized over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// max_ξ |S(ξ)| — matches the criterion's "for all ξ" quantifier.
    SupAbs,
    /// Weighted grid L² norm of |S|.
    L2,
}

/// Parametric family of candidate laws.
#[derive(Clone)]
pub enum MeasureFamily {
    /// Gaussian N(m, v); with `fixed_mean` the single parameter is v,
    /// otherwise the parameters are [m, v].
    Gaussian { fixed_mean: Option<f64> },
    /// Arbitrary family built from a parameter vector.
    Custom {
        n_params: usize,
        build: Arc<dyn Fn(&[f64]) -> Result<Measure> + Send + Sync>,
    },
}

impl MeasureFamily {
    pub fn n_params(&self) -> usize {
        match self {
            MeasureFamily::Gaussian { fixed_mean: Some(_) } => 1,
            MeasureFamily::Gaussian { fixed_mean: None } => 2,
            MeasureFamily::Custom { n_params, .. } => *n_params,
        }
    }

    pub fn build(&self, params: &[f64]) -> Result<Measure> {
        match self {
            MeasureFamily::Gaussian { fixed_mean: Some(m) } => Measure::gaussian(*m, params[0]),
            MeasureFamily::Gaussian { fixed_mean: None } => {
                Measure::gaussian(params[0], params[1])
            }
            MeasureFamily::Custom { build, .. } => build(params),
        }
    }
}

/// A fitting problem: symbol, family, grid and objective.
#[derive(Clone)]
pub struct FitProblem {
    pub symbol: Symbol,
    pub family: MeasureFamily,
    pub grid: Vec<f64>,
    /// Optional per-point weights for the L2 objective (default all-ones).
    pub weights: Option<Vec<f64>>,
    pub objective: Objective,
    /// Box bounds per parameter.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 500,
            tol: 1e-10,
            restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp_into(p: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in p.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

struct ObjectiveFn<'a> {
    problem: &'a FitProblem,
    cfg: CriterionConfig,
}

impl ObjectiveFn<'_> {
    /// Residual norm at a parameter point; +∞ when the measure cannot be
    /// built or a residual fails, so the simplex steers away.
    fn eval(&self, params: &[f64]) -> f64 {
        let Ok(mu) = self.problem.family.build(params) else {
            return f64::INFINITY;
        };
        let values: Vec<f64> = self
            .problem
            .grid
            .par_iter()
            .map(|&xi| {
                residual1_with(&self.problem.symbol, &mu, xi, &self.cfg)
                    .map(|t| t.value.norm())
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        match self.problem.objective {
            Objective::SupAbs => values.iter().cloned().fold(0.0, f64::max),
            Objective::L2 => {
                let acc: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let w = self
                            .problem
                            .weights
                            .as_ref()
                            .map(|ws| ws[i])
                            .unwrap_or(1.0);
                        w * v * v
                    })
                    .sum();
                acc.sqrt()
            }
        }
    }
}

/// One bounded Nelder–Mead run from `start`. Returns (best point, best value,
/// iterations used).
fn nelder_mead(
    f: &ObjectiveFn,
    start: &[f64],
    bounds: &[(f64, f64)],
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64, usize) {
    let n = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    // initial simplex: start plus one vertex per coordinate, stepping 5% of
    // the box (inward when the step would leave it)
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f.eval(start)));
    for k in 0..n {
        let mut p = start.to_vec();
        let span = bounds[k].1 - bounds[k].0;
        let step = 0.05 * span;
        p[k] = if p[k] + step <= bounds[k].1 {
            p[k] + step
        } else {
            p[k] - step
        };
        clamp_into(&mut p, bounds);
        let fv = f.eval(&p);
        simplex.push((p, fv));
    }

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best <= tol || (worst - best).abs() <= 1e-14 * (1.0 + best.abs()) {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (p, _) in simplex.iter().take(n) {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }

        let worst_point = simplex[n].0.clone();
        let mut reflected: Vec<f64> = centroid
            .iter()
            .zip(&worst_point)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        clamp_into(&mut reflected, bounds);
        let f_reflected = f.eval(&reflected);

        if f_reflected < simplex[0].1 {
            let mut expanded: Vec<f64> = centroid
                .iter()
                .zip(&reflected)
                .map(|(c, r)| c + gamma * (r - c))
                .collect();
            clamp_into(&mut expanded, bounds);
            let f_expanded = f.eval(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
        } else if f_reflected < simplex[n - 1].1 {
            simplex[n] = (reflected, f_reflected);
        } else {
            let toward = if f_reflected < simplex[n].1 {
                &reflected
            } else {
                &worst_point
            };
            let mut contracted: Vec<f64> = centroid
                .iter()
                .zip(toward)
                .map(|(c, t)| c + rho * (t - c))
                .collect();
            clamp_into(&mut contracted, bounds);
            let f_contracted = f.eval(&contracted);
            if f_contracted < simplex[n].1.min(f_reflected) {
                simplex[n] = (contracted, f_contracted);
            } else {
                // shrink toward the best vertex
                let best_point = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = best_point
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    clamp_into(&mut p, bounds);
                    entry.1 = f.eval(&p);
                    entry.0 = p;
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    (simplex[0].0.clone(), simplex[0].1, iterations)
}

/// Minimizes the residual norm within the family's box.
///
/// Deterministic given `opts.seed`: restart k starts from the box center
/// (k = 0) or a seeded uniform draw. `converged` means the best objective
/// reached `opts.tol`; a stagnating fit returns its best point with
/// `converged = false` rather than an error.
pub fn fit_invariant(problem: &FitProblem, opts: &FitOptions) -> Result<FitResult> {
    let n = problem.family.n_params();
    if problem.bounds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: problem.bounds.len(),
        });
    }
    if problem.grid.is_empty() {
        return Err(Error::invalid("fit grid must be nonempty"));
    }
    if let Some(w) = &problem.weights {
        if w.len() != problem.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: problem.grid.len(),
                got: w.len(),
            });
        }
    }
    for &(lo, hi) in &problem.bounds {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "parameter box must be a finite nonempty interval, got [{lo}, {hi}]"
            )));
        }
    }

    let f = ObjectiveFn {
        problem,
        cfg: CriterionConfig::default(),
    };

    // objective must be evaluable at the box corners
    if n <= 8 {
        for mask in 0..(1usize << n) {
            let corner: Vec<f64> = problem
                .bounds
                .iter()
                .enumerate()
                .map(|(k, &(lo, hi))| if mask >> k & 1 == 1 { hi } else { lo })
                .collect();
            if !f.eval(&corner).is_finite() {
                return Err(Error::invalid(format!(
                    "objective is not evaluable at box corner {corner:?}"
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations_total = 0;

    for restart in 0..opts.restarts.max(1) {
        let start: Vec<f64> = if restart == 0 {
            problem
                .bounds
                .iter()
                .map(|&(lo, hi)| 0.5 * (lo + hi))
                .collect()
        } else {
            problem
                .bounds
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect()
        };
        let (point, value, iters) = nelder_mead(&f, &start, &problem.bounds, opts.max_iter, opts.tol);
        iterations_total += iters;
        if best.as_ref().is_none_or(|(_, bv)| value < *bv) {
            best = Some((point, value));
        }
        if best.as_ref().is_some_and(|(_, bv)| *bv <= opts.tol) {
            break;
        }
    }

    let (params, objective_value) = best.expect("at least one restart ran");
    Ok(FitResult {
        converged: objective_value <= opts.tol,
        params,
        objective_value,
        iterations: iterations_total,
    })
}

/// Closed-form solution of the Ornstein–Uhlenbeck criterion ODE: the unique
/// Gaussian variance is σ²/(2λ) under the canonical convention and σ²/λ
/// under the paper convention.
pub fn ou_variance_ode_solve(lambda: f64, sigma: f64, convention: Convention) -> Result<f64> {
    if !(lambda > 0.0 && sigma > 0.0) {
        return Err(Error::invalid(format!(
            "need lambda, sigma > 0, got lambda = {lambda}, sigma = {sigma}"
        )));
    }
    Ok(match convention {
        Convention::Canonical => sigma * sigma / (2.0 * lambda),
        Convention::Paper => sigma * sigma / lambda,
    })
}

/// Convenience: the standard OU fit problem over a Gaussian variance family.
pub fn ou_fit_problem(lambda: f64, sigma: f64, convention: Convention) -> FitProblem {
    FitProblem {
        symbol: Symbol::ornstein_uhlenbeck(lambda, sigma, convention),
        family: MeasureFamily::Gaussian { fixed_mean: Some(0.0) },
        grid: crate::criterion::default_grid(),
        weights: None,
        objective: Objective::SupAbs,
        bounds: vec![(0.01, 10.0)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::MatrixMap;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ode_solve_closed_forms() {
        assert_eq!(ou_variance_ode_solve(1.0, 1.0, Convention::Canonical).unwrap(), 0.5);
        assert_eq!(ou_variance_ode_solve(1.0, 1.0, Convention::Paper).unwrap(), 1.0);
        assert_eq!(ou_variance_ode_solve(2.0, 1.0, Convention::Canonical).unwrap(), 0.25);
        assert!(ou_variance_ode_solve(0.0, 1.0, Convention::Canonical).is_err());
    }

    #[test]
    fn recovers_ou_variance_canonical() {
        let problem = ou_fit_problem(1.0, 1.0, Convention::Canonical);
        let result = fit_invariant(&problem, &FitOptions::default()).unwrap();
        assert!(result.converged, "objective {}", result.objective_value);
        assert!(result.objective_value <= 1e-8);
        assert_abs_diff_eq!(result.params[0], 0.5, epsilon = 1e-2);
    }

    #[test]
    fn recovers_ou_variance_paper_mode() {
        let problem = ou_fit_problem(1.0, 1.0, Convention::Paper);
        let result = fit_invariant(&problem, &FitOptions::default()).unwrap();
        assert!(result.converged);
        assert_abs_diff_eq!(result.params[0], 1.0, epsilon = 1e-2);
    }

    #[test]
    fn fit_agrees_with_ode_oracle() {
        for &(lambda, sigma) in &[(1.0, 1.0), (2.0, 1.0), (0.7, 1.3)] {
            for convention in [Convention::Canonical, Convention::Paper] {
                let problem = ou_fit_problem(lambda, sigma, convention);
                let result = fit_invariant(&problem, &FitOptions::default()).unwrap();
                let oracle = ou_variance_ode_solve(lambda, sigma, convention).unwrap();
                assert!(
                    (result.params[0] - oracle).abs() / oracle <= 1e-2,
                    "λ={lambda} σ={sigma} {convention:?}: {} vs {oracle}",
                    result.params[0]
                );
            }
        }
    }

    #[test]
    fn stochastic_exponential_has_no_gaussian_invariant_law() {
        let problem = FitProblem {
            symbol: Symbol::diffusion(0.0, MatrixMap::scalar_linear(0.0, 1.0), Convention::Paper),
            family: MeasureFamily::Gaussian { fixed_mean: Some(0.0) },
            grid: crate::criterion::default_grid(),
            weights: None,
            objective: Objective::SupAbs,
            bounds: vec![(0.01, 10.0)],
        };
        let result = fit_invariant(&problem, &FitOptions::default()).unwrap();
        assert!(!result.converged);
        assert!(
            result.objective_value > 1e-2,
            "objective {}",
            result.objective_value
        );
    }

    #[test]
    fn weight_scaling_preserves_argmin() {
        let base = FitProblem {
            objective: Objective::L2,
            ..ou_fit_problem(1.0, 1.0, Convention::Canonical)
        };
        let scaled = FitProblem {
            weights: Some(vec![10.0; base.grid.len()]),
            ..base.clone()
        };
        let opts = FitOptions::default();
        let a = fit_invariant(&base, &opts).unwrap();
        let b = fit_invariant(&scaled, &opts).unwrap();
        assert_abs_diff_eq!(a.params[0], b.params[0], epsilon = 1e-3);
    }

    #[test]
    fn restart_determinism() {
        // a deliberately rough objective so restarts matter
        let problem = FitProblem {
            symbol: Symbol::ornstein_uhlenbeck(1.0, 1.0, Convention::Canonical),
            family: MeasureFamily::Custom {
                n_params: 1,
                build: Arc::new(|p: &[f64]| Measure::gaussian(p[0].sin() * 2.0, 0.3 + p[0].cos().abs())),
            },
            grid: crate::criterion::default_grid(),
            weights: None,
            objective: Objective::SupAbs,
            bounds: vec![(0.0, 20.0)],
        };
        let opts = FitOptions {
            seed: 97,
            ..Default::default()
        };
        let a = fit_invariant(&problem, &opts).unwrap();
        let b = fit_invariant(&problem, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_problems_rejected() {
        let mut problem = ou_fit_problem(1.0, 1.0, Convention::Canonical);
        problem.bounds = vec![(0.01, 10.0), (0.0, 1.0)];
        assert!(fit_invariant(&problem, &FitOptions::default()).is_err());

        let mut empty_grid = ou_fit_problem(1.0, 1.0, Convention::Canonical);
        empty_grid.grid.clear();
        assert!(fit_invariant(&empty_grid, &FitOptions::default()).is_err());

        let mut bad_box = ou_fit_problem(1.0, 1.0, Convention::Canonical);
        bad_box.bounds = vec![(1.0, 1.0)];
        assert!(fit_invariant(&bad_box, &FitOptions::default()).is_err());

        // corner v = -1 is not a valid Gaussian: corner check trips
        let mut neg_box = ou_fit_problem(1.0, 1.0, Convention::Canonical);
        neg_box.bounds = vec![(-1.0, 1.0)];
        assert!(fit_invariant(&neg_box, &FitOptions::default()).is_err());
    }

    #[test]
    fn two_parameter_gaussian_family() {
        // free mean and variance: OU drift recenters at 0, so the fit should
        // find (m, v) ≈ (0, 0.5)
        let problem = FitProblem {
            symbol: Symbol::ornstein_uhlenbeck(1.0, 1.0, Convention::Canonical),
            family: MeasureFamily::Gaussian { fixed_mean: None },
            grid: crate::criterion::default_grid(),
            weights: None,
            objective: Objective::SupAbs,
            bounds: vec![(-2.0, 2.0), (0.01, 10.0)],
        };
        let result = fit_invariant(&problem, &FitOptions::default()).unwrap();
        assert!(result.converged, "objective {}", result.objective_value);
        assert_abs_diff_eq!(result.params[0], 0.0, epsilon = 1e-2);
        assert_abs_diff_eq!(result.params[1], 0.5, epsilon = 1e-2);
    }
}
