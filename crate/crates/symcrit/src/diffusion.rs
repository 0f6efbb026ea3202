//! Scale density, speed density and stationary density π = m/M of a
//! one-dimensional diffusion dX = b(X) dt + σ(X) dW:
//!
//!   s(x) = exp(−2 ∫_{x₀}^x b(u)/σ²(u) du),   m(x) = 1/(σ²(x) s(x)).
//!
//! When ∫s = ∞ and M = ∫m < ∞ the normalized speed density is the unique
//! stationary law. Both conditions are reported as numeric indicators, never
//! asserted as proofs.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::quad::{self, QuadConfig};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Window-expansion cap; failing to localize the speed mass below it is
/// treated as a hypothesis violation (M = ∞ numerically).
const WINDOW_CAP: f64 = 1e6;

/// Relative speed-density level treated as negligible when truncating.
const TAIL_RATIO: f64 = 1e-12;

/// Threshold above which ∫s counts as numerically divergent.
const SCALE_DIVERGENCE_THRESHOLD: f64 = 1e12;

/// One-dimensional diffusion coefficients with a reference point and a
/// (possibly infinite) state interval.
#[derive(Clone)]
pub struct Diffusion1D {
    b: RealFn,
    sigma: RealFn,
    x0: f64,
    support: (f64, f64),
}

impl Diffusion1D {
    pub fn new(
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        x0: f64,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        if !(lo < x0 && x0 < hi) {
            return Err(Error::invalid(format!(
                "reference point {x0} must lie inside the support ({lo}, {hi})"
            )));
        }
        let diff = Diffusion1D {
            b: Arc::new(b),
            sigma: Arc::new(sigma),
            x0,
            support: (lo, hi),
        };
        if diff.sigma2(x0) <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma must be positive on the state space; sigma({x0}) is not"
            )));
        }
        Ok(diff)
    }

    /// Whole-line diffusion.
    pub fn on_line(
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sigma: impl Fn(f64) -> f64 + Send + Sync + 'static,
        x0: f64,
    ) -> Result<Self> {
        Self::new(b, sigma, x0, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.b)(x)
    }

    pub fn sigma(&self, x: f64) -> f64 {
        (self.sigma)(x)
    }

    fn sigma2(&self, x: f64) -> f64 {
        let s = (self.sigma)(x);
        s * s
    }

    fn check_in_support(&self, x: f64) -> Result<()> {
        if x < self.support.0 || x > self.support.1 || !x.is_finite() {
            return Err(Error::invalid(format!(
                "{x} is outside the declared support [{}, {}]",
                self.support.0, self.support.1
            )));
        }
        Ok(())
    }

    /// ∫_{x₀}^x b(u)/σ²(u) du by adaptive quadrature.
    fn drift_integral(&self, x: f64, cfg: &QuadConfig) -> Result<f64> {
        let b = self.b.clone();
        let sigma = self.sigma.clone();
        let f = move |u: f64| {
            let s2 = sigma(u) * sigma(u);
            b(u) / s2
        };
        let (value, _) = if x >= self.x0 {
            quad::integrate(f, self.x0, x, cfg)?
        } else {
            let (v, e) = quad::integrate(f, x, self.x0, cfg)?;
            (-v, e)
        };
        Ok(value)
    }
}

/// Scale density s(x) = exp(−2 ∫_{x₀}^x b/σ² du); s(x₀) = 1 exactly.
pub fn scale_density(diff: &Diffusion1D, x: f64) -> Result<f64> {
    diff.check_in_support(x)?;
    if x == diff.x0 {
        return Ok(1.0);
    }
    let cfg = QuadConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        ..Default::default()
    };
    Ok((-2.0 * diff.drift_integral(x, &cfg)?).exp())
}

/// Speed density m(x) = 1/(σ²(x) s(x)).
pub fn speed_density(diff: &Diffusion1D, x: f64) -> Result<f64> {
    diff.check_in_support(x)?;
    let s2 = diff.sigma2(x);
    if s2 <= 0.0 {
        return Err(Error::Evaluation(format!("sigma({x})^2 = {s2} is not positive")));
    }
    Ok(1.0 / (s2 * scale_density(diff, x)?))
}

/// Chebyshev–Lobatto barycentric interpolant.
struct ChebInterp {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl ChebInterp {
    fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        (0..=n)
            .map(|k| mid - half * (std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect()
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, (&xk, &fk)) in self.nodes.iter().zip(&self.values).enumerate() {
            let diff = x - xk;
            if diff == 0.0 {
                return fk;
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                w *= 0.5;
            }
            let t = w / diff;
            num += t * fk;
            den += t;
        }
        num / den
    }
}

/// Normalized stationary density together with its diagnostics.
pub struct StationaryDensityResult {
    pi: RealFn,
    /// Total speed-measure mass M over the truncated window.
    pub mass: f64,
    /// Window [−L, L]-style truncation actually used for quadrature.
    pub window: (f64, f64),
    /// Numeric recurrence indicator: ∫s over the window exceeded 1e12.
    /// The π = m/M construction is justified when this is true (together
    /// with M < ∞); it is an indicator, not a proof.
    pub scale_integral_diverges: bool,
    /// Error estimate of the mass quadrature.
    pub mass_error: f64,
}

impl StationaryDensityResult {
    pub fn pi(&self, x: f64) -> f64 {
        (self.pi)(x)
    }

    pub fn pi_fn(&self) -> RealFn {
        self.pi.clone()
    }

    /// The stationary law as a density measure on the truncation window.
    pub fn as_measure(&self) -> Result<Measure> {
        let pi = self.pi.clone();
        Measure::density(move |x| pi(x), self.window.0, self.window.1)
    }
}

/// Builds π = m/M on a window where the speed density is numerically
/// supported.
///
/// The drift integral is tabulated once on a Chebyshev grid and
/// interpolated, so the nested s-inside-m-inside-M quadrature flattens to
/// one pass. Fails with a hypothesis violation when the speed mass does not
/// localize (M = ∞).
pub fn stationary_density(diff: &Diffusion1D) -> Result<StationaryDensityResult> {
    let window = truncation_window(diff)?;
    let (lo, hi) = window;

    // tabulate I(x) = ∫_{x0}^x b/σ² on Chebyshev-Lobatto nodes by chaining
    // adaptive integrals over inter-node gaps
    let n = 400usize;
    let nodes = ChebInterp::nodes(lo, hi, n);
    let cfg = QuadConfig {
        rel_tol: 1e-11,
        abs_tol: 1e-14,
        ..Default::default()
    };
    let b = diff.b.clone();
    let sigma = diff.sigma.clone();
    let integrand = move |u: f64| {
        let s2 = sigma(u) * sigma(u);
        b(u) / s2
    };
    let mut cumulative = vec![0.0f64; nodes.len()];
    for k in 1..nodes.len() {
        let (seg, _) = quad::integrate(&integrand, nodes[k - 1], nodes[k], &cfg)?;
        cumulative[k] = cumulative[k - 1] + seg;
    }
    // shift so the tabulated values equal ∫_{x0}^x
    let j = nodes.partition_point(|&nk| nk < diff.x0).saturating_sub(1);
    let (to_x0, _) = quad::integrate(&integrand, nodes[j], diff.x0, &cfg)?;
    let at_x0 = cumulative[j] + to_x0;
    for v in cumulative.iter_mut() {
        *v -= at_x0;
    }
    let interp = Arc::new(ChebInterp {
        nodes,
        values: cumulative,
    });

    let sigma = diff.sigma.clone();
    let interp_m = interp.clone();
    let m = move |x: f64| {
        let s2 = sigma(x) * sigma(x);
        (2.0 * interp_m.eval(x)).exp() / s2
    };

    let mass_cfg = QuadConfig {
        rel_tol: 1e-10,
        abs_tol: 1e-13,
        ..Default::default()
    };
    let (mass, mass_error) = quad::integrate(&m, lo, hi, &mass_cfg)
        .map_err(|e| Error::HypothesisViolation(format!("speed mass M not computable: {e}")))?;
    if !mass.is_finite() || mass <= 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "speed mass M = {mass} is not a positive finite number"
        )));
    }

    // recurrence indicator: ∫ s over the window
    let interp_s = interp.clone();
    let s_fn = move |x: f64| (-2.0 * interp_s.eval(x)).exp();
    let scale_integral = quad::integrate(&s_fn, lo, hi, &QuadConfig::with_rel_tol(1e-6));
    let scale_integral_diverges = match scale_integral {
        Ok((v, _)) => v > SCALE_DIVERGENCE_THRESHOLD,
        // overflow inside exp counts as divergence
        Err(_) => true,
    };

    let sigma = diff.sigma.clone();
    let pi: RealFn = Arc::new(move |x: f64| {
        if x < lo || x > hi {
            return 0.0;
        }
        let s2 = sigma(x) * sigma(x);
        (2.0 * interp.eval(x)).exp() / (s2 * mass)
    });

    Ok(StationaryDensityResult {
        pi,
        mass,
        window,
        scale_integral_diverges,
        mass_error,
    })
}

/// Finds a window outside which the speed density is below 1e-12 of its
/// reference level, honoring declared finite bounds.
fn truncation_window(diff: &Diffusion1D) -> Result<(f64, f64)> {
    let m_ref = 1.0 / diff.sigma2(diff.x0); // s(x0) = 1
    let cfg = QuadConfig::with_rel_tol(1e-9);
    let probe = |x: f64| -> Result<f64> {
        let s2 = diff.sigma2(x);
        if s2 <= 0.0 {
            return Err(Error::Evaluation(format!(
                "sigma({x})^2 = {s2} is not positive"
            )));
        }
        Ok((2.0 * diff.drift_integral(x, &cfg)?).exp() / s2)
    };

    let expand = |direction: f64, declared: f64| -> Result<f64> {
        if declared.is_finite() {
            return Ok(declared);
        }
        let mut half = 1.0f64;
        loop {
            let x = diff.x0 + direction * half;
            let m = probe(x)?;
            if !m.is_finite() || m / m_ref < TAIL_RATIO {
                return Ok(x);
            }
            half *= 2.0;
            if half > WINDOW_CAP {
                return Err(Error::HypothesisViolation(format!(
                    "speed density does not localize within |x - x0| <= {WINDOW_CAP}; \
                     M = ∫m appears infinite"
                )));
            }
        }
    };

    let hi = expand(1.0, diff.support.1)?;
    let lo = expand(-1.0, diff.support.0)?;
    Ok((lo, hi))
}

/// First integral of the stationary Fokker–Planck equation:
/// |½(σ²π)′(x) − b(x)π(x)| via central differences with step
/// h = 1e−5·(1+|x|). An independent consistency oracle for candidate
/// stationary densities.
pub fn fokker_planck_residual(
    diff: &Diffusion1D,
    pi: impl Fn(f64) -> f64,
    x: f64,
) -> Result<f64> {
    let h = 1e-5 * (1.0 + x.abs());
    if x - h < diff.support.0 || x + h > diff.support.1 {
        return Err(Error::invalid(format!(
            "finite-difference stencil around {x} leaves the support"
        )));
    }
    let flux = |y: f64| diff.sigma2(y) * pi(y);
    let derivative = (flux(x + h) - flux(x - h)) / (2.0 * h);
    let residual = 0.5 * derivative - diff.drift(x) * pi(x);
    if !residual.is_finite() {
        return Err(Error::Evaluation(format!(
            "Fokker-Planck residual at {x} is not finite"
        )));
    }
    Ok(residual.abs())
}
