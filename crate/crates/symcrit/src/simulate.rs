//! Euler–Maruyama simulation of the Lévy-driven SDE forms
//!
//!   dX = −aX dt + β(X) dt + Φ(X₋) dL + b dZ
//!
//! used to estimate the probabilistic symbol from its small-time definition
//! λ_ξ(x,t) = −(E^x e^{i(X_t−x)'ξ} − 1)/t and to produce empirical
//! stationary samples.
//!
//! Compound-Poisson jumps are placed at exact exponential event times within
//! each step (Φ sees the pre-jump state); symmetric stable increments are
//! sampled exactly per sub-step through the Chambers–Mallows–Stuck
//! construction, so the estimator bias is the O(t) definitional one. Paths
//! are reproducible independently of scheduling: path k draws from a
//! counter-based generator keyed by (seed, k).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy::{cutoff, Atom, JumpMeasure, LevyTriplet};
use crate::measure::Measure;
use crate::symbol::MatrixMap;

type DriftFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Coefficients of the simulated SDE.
#[derive(Clone)]
pub struct SdeSpec {
    mean_reversion: f64,
    phi: MatrixMap,
    driver: LevyTriplet,
    additive: Option<(f64, LevyTriplet)>,
    extra_drift: Option<DriftFn>,
}

impl SdeSpec {
    /// dX = −aX dt + Φ(X₋) dL.
    pub fn new(mean_reversion: f64, phi: MatrixMap, driver: LevyTriplet) -> Result<Self> {
        if driver.dim() != phi.cols() {
            return Err(Error::DimensionMismatch {
                expected: phi.cols(),
                got: driver.dim(),
            });
        }
        Ok(SdeSpec {
            mean_reversion,
            phi,
            driver,
            additive: None,
            extra_drift: None,
        })
    }

    /// Classical Ornstein–Uhlenbeck dX = −λX dt + σ dW.
    pub fn ornstein_uhlenbeck(lambda: f64, sigma: f64) -> Self {
        SdeSpec::new(
            lambda,
            MatrixMap::scalar_const(sigma),
            LevyTriplet::standard_bm(1),
        )
        .expect("scalar OU spec is valid")
    }

    /// The constant-zero process.
    pub fn zero() -> Self {
        SdeSpec::new(0.0, MatrixMap::scalar_const(0.0), LevyTriplet::zero(1))
            .expect("zero spec is valid")
    }

    /// Adds independent additive noise b·dZ (Z must match the state dimension).
    pub fn with_additive(mut self, b: f64, driver_z: LevyTriplet) -> Result<Self> {
        if driver_z.dim() != self.phi.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.phi.rows(),
                got: driver_z.dim(),
            });
        }
        self.additive = Some((b, driver_z));
        Ok(self)
    }

    /// Adds a state drift β(x) dt.
    pub fn with_extra_drift(
        mut self,
        beta: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.extra_drift = Some(Arc::new(beta));
        self
    }

    /// Scalar drift convenience.
    pub fn with_extra_drift_1d(self, beta: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.with_extra_drift(move |x: &DVector<f64>| DVector::from_element(1, beta(x[0])))
    }

    pub fn dim(&self) -> usize {
        self.phi.rows()
    }
}

/// Monte Carlo estimate of λ_ξ(x,t).
#[derive(Debug, Clone, Copy)]
pub struct SymbolEstimate {
    pub value: Complex64,
    pub std_error: f64,
    pub t_used: f64,
    pub n_paths: usize,
}

/// Square root factor of a PSD matrix via symmetric eigendecomposition
/// (tolerates the semi-definite case Cholesky rejects).
fn psd_factor(q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if q.iter().all(|&v| v == 0.0) {
        return None;
    }
    let eig = q.clone().symmetric_eigen();
    let mut factor = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for i in 0..factor.nrows() {
            factor[(i, j)] *= s;
        }
    }
    Some(factor)
}

/// Pre-processed increment sampler for one Lévy driver.
struct DriverSampler {
    dim: usize,
    /// ℓ − Σ rᵢ yᵢ χ(yᵢ): the drift actually seen between jumps.
    effective_drift: DVector<f64>,
    gaussian_factor: Option<DMatrix<f64>>,
    atoms: Vec<Atom>,
    total_rate: f64,
    stable: Option<(f64, f64)>,
}

impl DriverSampler {
    fn new(driver: &LevyTriplet) -> Result<Self> {
        let dim = driver.dim();
        let mut effective_drift = driver.drift().clone();
        let mut atoms = Vec::new();
        let mut stable = None;
        match driver.jumps() {
            JumpMeasure::None => {}
            JumpMeasure::Atoms(list) => {
                for a in list {
                    effective_drift -= &a.location * (a.mass * cutoff(a.location.norm()));
                    atoms.push(a.clone());
                }
            }
            JumpMeasure::StableSymmetric { alpha, scale, dim: d } => {
                if *d != 1 {
                    return Err(Error::UnsupportedDimension {
                        dim: *d,
                        context: "stable increments are simulated in one dimension".into(),
                    });
                }
                stable = Some((*alpha, *scale));
            }
            JumpMeasure::DensityOnAnnulus { .. } => {
                return Err(Error::invalid(
                    "annulus-density jump measures are not simulatable; \
                     use Atoms or StableSymmetric drivers",
                ));
            }
        }
        let total_rate = atoms.iter().map(|a| a.mass).sum();
        Ok(DriverSampler {
            dim,
            effective_drift,
            gaussian_factor: psd_factor(driver.gaussian()),
            atoms,
            total_rate,
            stable,
        })
    }

    /// Drift + Gaussian + stable lump over a sub-interval of length `dt`.
    fn continuous_increment(&self, dt: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut inc = &self.effective_drift * dt;
        if let Some(factor) = &self.gaussian_factor {
            let sqrt_dt = dt.sqrt();
            let z = DVector::from_fn(self.dim, |_, _| {
                let g: f64 = StandardNormal.sample(rng);
                sqrt_dt * g
            });
            inc += factor * z;
        }
        if let Some((alpha, scale)) = self.stable {
            inc[0] += (scale * dt).powf(1.0 / alpha) * sample_standard_stable(alpha, rng);
        }
        inc
    }

    /// Exact exponential event times (offsets in (0, dt)) with their jumps.
    fn jump_events(&self, dt: f64, rng: &mut ChaCha8Rng) -> Vec<(f64, DVector<f64>)> {
        if self.total_rate == 0.0 {
            return Vec::new();
        }
        let mut events = Vec::new();
        let mut t = exponential(self.total_rate, rng);
        while t < dt {
            // thin to pick the atom
            let mut u = rng.random::<f64>() * self.total_rate;
            let mut chosen = self.atoms.len() - 1;
            for (i, a) in self.atoms.iter().enumerate() {
                if u < a.mass {
                    chosen = i;
                    break;
                }
                u -= a.mass;
            }
            events.push((t, self.atoms[chosen].location.clone()));
            t += exponential(self.total_rate, rng);
        }
        events
    }
}

fn exponential(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Standard symmetric α-stable variate with characteristic function
/// e^{−|ξ|^α} (Chambers–Mallows–Stuck).
pub fn sample_standard_stable(alpha: f64, rng: &mut ChaCha8Rng) -> f64 {
    let v = std::f64::consts::PI * (rng.random::<f64>() - 0.5);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let w = exponential(1.0, rng);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

struct StepEngine {
    spec: SdeSpec,
    sampler_l: DriverSampler,
    sampler_z: Option<(f64, DriverSampler)>,
}

impl StepEngine {
    fn new(spec: &SdeSpec) -> Result<Self> {
        let sampler_l = DriverSampler::new(&spec.driver)?;
        let sampler_z = match &spec.additive {
            Some((b, z)) => Some((*b, DriverSampler::new(z)?)),
            None => None,
        };
        Ok(StepEngine {
            spec: spec.clone(),
            sampler_l,
            sampler_z,
        })
    }

    /// Advances the state by the continuous dynamics over `dt` using the
    /// left-endpoint state.
    fn continuous_step(&self, x: &mut DVector<f64>, dt: f64, rng: &mut ChaCha8Rng) {
        let mut drift = x.clone() * (-self.spec.mean_reversion);
        if let Some(beta) = &self.spec.extra_drift {
            drift += beta(x);
        }
        let dl = self.sampler_l.continuous_increment(dt, rng);
        let mut dx = drift * dt + self.spec.phi.eval(x) * dl;
        if let Some((b, sampler)) = &self.sampler_z {
            dx += sampler.continuous_increment(dt, rng) * *b;
        }
        *x += dx;
    }

    /// One Euler step of length `dt`, with jumps at exact event times.
    /// Returns the number of jump events applied.
    fn step(&self, x: &mut DVector<f64>, dt: f64, rng: &mut ChaCha8Rng) -> usize {
        // (offset, driver index, jump) merged across drivers in time order
        let mut events: Vec<(f64, bool, DVector<f64>)> = self
            .sampler_l
            .jump_events(dt, rng)
            .into_iter()
            .map(|(t, y)| (t, true, y))
            .collect();
        if let Some((_, sampler)) = &self.sampler_z {
            events.extend(
                sampler
                    .jump_events(dt, rng)
                    .into_iter()
                    .map(|(t, y)| (t, false, y)),
            );
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let n_jumps = events.len();
        let mut clock = 0.0;
        for (t_event, from_l, y) in events {
            let delta = t_event - clock;
            if delta > 0.0 {
                self.continuous_step(x, delta, rng);
            }
            // left-limit convention: the coefficient sees the pre-jump state
            if from_l {
                *x += self.spec.phi.eval(x) * y;
            } else {
                let b = self.sampler_z.as_ref().expect("z events imply sampler").0;
                *x += y * b;
            }
            clock = t_event;
        }
        if dt - clock > 0.0 {
            self.continuous_step(x, dt - clock, rng);
        }
        n_jumps
    }
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

fn check_state(x: &DVector<f64>, step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Simulation {
            step,
            message: "state became non-finite (numeric overflow)".into(),
        })
    }
}

/// Simulates one path on the grid {0, dt, 2dt, …, t_end}, deterministic
/// given the seed.
pub fn simulate_path(
    spec: &SdeSpec,
    x0: &DVector<f64>,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<Vec<(f64, DVector<f64>)>> {
    if !(dt > 0.0) || !(t_end >= dt) {
        return Err(Error::invalid(format!(
            "need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}"
        )));
    }
    if x0.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x0.len(),
        });
    }
    let engine = StepEngine::new(spec)?;
    let mut rng = path_rng(seed, 0);
    let n_steps = (t_end / dt).round().max(1.0) as usize;
    let step_len = t_end / n_steps as f64;
    let mut x = x0.clone();
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push((0.0, x.clone()));
    for k in 0..n_steps {
        engine.step(&mut x, step_len, &mut rng);
        check_state(&x, k)?;
        path.push(((k + 1) as f64 * step_len, x.clone()));
    }
    Ok(path)
}

/// Monte Carlo estimate of λ_ξ(x,t) = −(E^x e^{i(X_t−x)'ξ} − 1)/t, which
/// converges to the symbol p(x,ξ) as t ↓ 0. Paths run in parallel; the
/// estimate is assembled by pairwise summation in path order, so results are
/// identical across thread counts.
pub fn estimate_symbol(
    spec: &SdeSpec,
    x: &DVector<f64>,
    xi: &DVector<f64>,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<SymbolEstimate> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!(
            "time horizon must be positive, got {t}"
        )));
    }
    if n_paths < 100 {
        return Err(Error::invalid(format!(
            "symbol estimation needs at least 100 paths, got {n_paths}"
        )));
    }
    if x.len() != spec.dim() || xi.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x.len().max(xi.len()),
        });
    }
    let engine = StepEngine::new(spec)?;
    let dt = t / 64.0;

    let values: Vec<Complex64> = (0..n_paths)
        .into_par_iter()
        .map(|p| -> Result<Complex64> {
            let mut rng = path_rng(seed, p as u64);
            let mut state = x.clone();
            for k in 0..64 {
                engine.step(&mut state, dt, &mut rng);
                check_state(&state, k)?;
            }
            let phase = (&state - x).dot(xi);
            Ok(Complex64::new(0.0, phase).exp())
        })
        .collect::<Result<Vec<_>>>()?;

    let mean = pairwise(&values) / n_paths as f64;
    let std_error = if n_paths > 1 {
        let ss: f64 = values.iter().map(|z| (z - mean).norm_sqr()).sum();
        (ss / ((n_paths - 1) as f64 * n_paths as f64)).sqrt() / t
    } else {
        0.0
    };

    Ok(SymbolEstimate {
        value: -(mean - 1.0) / t,
        std_error,
        t_used: t,
        n_paths,
    })
}

/// Scalar convenience for one-dimensional specs.
pub fn estimate_symbol1(
    spec: &SdeSpec,
    x: f64,
    xi: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<SymbolEstimate> {
    estimate_symbol(
        spec,
        &DVector::from_element(1, x),
        &DVector::from_element(1, xi),
        t,
        n_paths,
        seed,
    )
}

/// Long-run empirical law: burn in, then collect `n_samples` states thinned
/// by `sample_gap`.
pub fn empirical_law(
    spec: &SdeSpec,
    x0: &DVector<f64>,
    burn_in: f64,
    n_samples: usize,
    sample_gap: f64,
    dt: f64,
    seed: u64,
) -> Result<Measure> {
    if !(burn_in > 0.0 && sample_gap > 0.0 && dt > 0.0) {
        return Err(Error::invalid(
            "burn-in, sample gap and dt must all be positive",
        ));
    }
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if x0.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: x0.len(),
        });
    }
    let engine = StepEngine::new(spec)?;
    let mut rng = path_rng(seed, 0);
    let burn_steps = (burn_in / dt).ceil() as usize;
    let gap_steps = (sample_gap / dt).round().max(1.0) as usize;

    let mut x = x0.clone();
    for k in 0..burn_steps {
        engine.step(&mut x, dt, &mut rng);
        check_state(&x, k)?;
    }
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        for k in 0..gap_steps {
            engine.step(&mut x, dt, &mut rng);
            check_state(&x, burn_steps + s * gap_steps + k)?;
        }
        samples.push(x.clone());
    }
    Measure::samples(samples)
}

fn pairwise(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise(&values[..mid]) + pairwise(&values[mid..])
        }
    }
}
