//! Lévy characteristic triplets and the Lévy–Khintchine exponent
//!
//! ψ(ξ) = −i ℓ'ξ + ½ ξ'Qξ − ∫ (e^{iξ'y} − 1 − i ξ'y χ(y)) N(dy)
//!
//! with the truncation function fixed to χ(y) = 1_{‖y‖ < 1}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};

/// Radius of the fixed truncation function χ(y) = 1_{‖y‖ < 1}.
pub const CUTOFF_RADIUS: f64 = 1.0;

/// The truncation indicator χ. Not configurable; every compensated jump
/// integral in this crate uses it.
pub fn cutoff(y_norm: f64) -> f64 {
    if y_norm < CUTOFF_RADIUS {
        1.0
    } else {
        0.0
    }
}

/// Eigenvalue slack allowed when validating positive semi-definiteness.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// A single jump atom: location y ≠ 0 carrying Poisson rate `mass`.
#[derive(Clone, Debug)]
pub struct Atom {
    pub location: DVector<f64>,
    pub mass: f64,
}

/// Jump measure N(dy) of a Lévy triplet.
#[derive(Clone)]
pub enum JumpMeasure {
    /// No jumps.
    None,
    /// Finite compound-Poisson measure Σ rᵢ δ_{yᵢ}.
    Atoms(Vec<Atom>),
    /// Callable density on the annulus ε ≤ |y| ≤ R (one-dimensional), with the
    /// mass below ε represented analytically by its second moment
    /// ∫_{|y|<ε} y² N(dy), which folds into the Gaussian part of the exponent.
    DensityOnAnnulus {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        inner: f64,
        outer: f64,
        small_jump_variance: f64,
    },
    /// Rotationally symmetric α-stable measure; the exponent contribution is
    /// the closed form scale·‖ξ‖^α.
    StableSymmetric { alpha: f64, scale: f64, dim: usize },
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpMeasure::None => write!(f, "None"),
            JumpMeasure::Atoms(a) => f.debug_tuple("Atoms").field(a).finish(),
            JumpMeasure::DensityOnAnnulus { inner, outer, .. } => f
                .debug_struct("DensityOnAnnulus")
                .field("inner", inner)
                .field("outer", outer)
                .finish(),
            JumpMeasure::StableSymmetric { alpha, scale, dim } => f
                .debug_struct("StableSymmetric")
                .field("alpha", alpha)
                .field("scale", scale)
                .field("dim", dim)
                .finish(),
        }
    }
}

impl JumpMeasure {
    /// Convenience constructor for one-dimensional atoms given as (location, mass).
    pub fn atoms_1d(pairs: &[(f64, f64)]) -> Self {
        JumpMeasure::Atoms(
            pairs
                .iter()
                .map(|&(y, r)| Atom {
                    location: DVector::from_element(1, y),
                    mass: r,
                })
                .collect(),
        )
    }

    pub fn stable(alpha: f64, scale: f64) -> Self {
        JumpMeasure::StableSymmetric {
            alpha,
            scale,
            dim: 1,
        }
    }

    /// Dimension of the jump space if the variant pins one.
    fn dim(&self) -> Option<usize> {
        match self {
            JumpMeasure::None => None,
            JumpMeasure::Atoms(atoms) => atoms.first().map(|a| a.location.len()),
            JumpMeasure::DensityOnAnnulus { .. } => Some(1),
            JumpMeasure::StableSymmetric { dim, .. } => Some(*dim),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            JumpMeasure::None => Ok(()),
            JumpMeasure::Atoms(atoms) => {
                for (i, a) in atoms.iter().enumerate() {
                    if a.location.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: a.location.len(),
                        });
                    }
                    if a.mass <= 0.0 || !a.mass.is_finite() {
                        return Err(Error::invalid(format!(
                            "atom {i} has non-positive mass {}",
                            a.mass
                        )));
                    }
                    if a.location.norm() == 0.0 {
                        return Err(Error::invalid(format!("atom {i} sits at the origin")));
                    }
                }
                Ok(())
            }
            JumpMeasure::DensityOnAnnulus {
                inner,
                outer,
                small_jump_variance,
                ..
            } => {
                if dim != 1 {
                    return Err(Error::UnsupportedDimension {
                        dim,
                        context: "DensityOnAnnulus jump measures are one-dimensional".into(),
                    });
                }
                if !(*inner > 0.0 && inner < outer && outer.is_finite()) {
                    return Err(Error::invalid(format!(
                        "annulus bounds must satisfy 0 < inner < outer < ∞, got [{inner}, {outer}]"
                    )));
                }
                if *small_jump_variance < 0.0 || !small_jump_variance.is_finite() {
                    return Err(Error::invalid(
                        "small-jump variance correction must be finite and nonnegative",
                    ));
                }
                Ok(())
            }
            JumpMeasure::StableSymmetric { alpha, scale, dim: d } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(Error::invalid(format!(
                        "stable index must lie in (0, 2), got {alpha}"
                    )));
                }
                if *scale <= 0.0 || !scale.is_finite() {
                    return Err(Error::invalid(format!(
                        "stable scale must be positive, got {scale}"
                    )));
                }
                if *d != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: *d,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, JumpMeasure::None)
    }

    /// Compensated Lévy–Khintchine integral ∫(e^{iξ'y} − 1 − iξ'y χ(y)) N(dy).
    ///
    /// For `StableSymmetric` this is the closed form −scale·‖ξ‖^α; for
    /// `DensityOnAnnulus` the below-ε mass enters as −½ξ'Σξ through its
    /// declared second moment.
    pub fn compensated_integral(&self, xi: &DVector<f64>, cfg: &QuadConfig) -> Result<Complex64> {
        match self {
            JumpMeasure::None => Ok(Complex64::new(0.0, 0.0)),
            JumpMeasure::Atoms(atoms) => {
                let mut sum = Complex64::new(0.0, 0.0);
                for a in atoms {
                    let phase = xi.dot(&a.location);
                    let term = Complex64::new(0.0, phase).exp()
                        - 1.0
                        - Complex64::new(0.0, phase * cutoff(a.location.norm()));
                    sum += a.mass * term;
                }
                Ok(sum)
            }
            JumpMeasure::DensityOnAnnulus {
                density,
                inner,
                outer,
                small_jump_variance,
            } => {
                let xi1 = xi[0];
                let integrand = |y: f64| -> Complex64 {
                    let phase = xi1 * y;
                    (Complex64::new(0.0, phase).exp()
                        - 1.0
                        - Complex64::new(0.0, phase * cutoff(y.abs())))
                        * density(y)
                };
                // split at ±1 where χ switches
                let mut cuts = vec![-outer, -inner, *inner, *outer];
                if *inner < CUTOFF_RADIUS && CUTOFF_RADIUS < *outer {
                    cuts.push(-CUTOFF_RADIUS);
                    cuts.push(CUTOFF_RADIUS);
                }
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut total = Complex64::new(0.0, 0.0);
                for w in cuts.windows(2) {
                    // skip the gap (-inner, inner)
                    if w[0] >= -*inner && w[1] <= *inner {
                        continue;
                    }
                    let (v, _) = quad::integrate_complex(integrand, w[0], w[1], cfg)?;
                    total += v;
                }
                // e^{iξy} − 1 − iξy ≈ −½ξ²y² below ε
                total += Complex64::new(-0.5 * xi1 * xi1 * small_jump_variance, 0.0);
                Ok(total)
            }
            JumpMeasure::StableSymmetric { alpha, scale, .. } => {
                Ok(Complex64::new(-scale * xi.norm().powf(*alpha), 0.0))
            }
        }
    }
}

/// Characteristic triplet (ℓ, Q, N) of a Lévy process, drift and covariance
/// per unit time.
#[derive(Clone, Debug)]
pub struct LevyTriplet {
    drift: DVector<f64>,
    gaussian: DMatrix<f64>,
    jumps: JumpMeasure,
}

impl LevyTriplet {
    /// Validates and stores a triplet. `gaussian` is symmetrized; its
    /// eigenvalues must be ≥ −1e−12 afterwards.
    pub fn new(drift: DVector<f64>, gaussian: DMatrix<f64>, jumps: JumpMeasure) -> Result<Self> {
        let d = drift.len();
        if d == 0 {
            return Err(Error::invalid("triplet dimension must be at least 1"));
        }
        if !drift.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("drift must be finite"));
        }
        if gaussian.nrows() != d || gaussian.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: gaussian.nrows().max(gaussian.ncols()),
            });
        }
        if !gaussian.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("gaussian matrix must be finite"));
        }
        let sym = (&gaussian + gaussian.transpose()) * 0.5;
        let eigs = sym.clone().symmetric_eigenvalues();
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -PSD_TOLERANCE {
                return Err(Error::invalid(format!(
                    "gaussian matrix is not positive semi-definite (min eigenvalue {min:.3e})"
                )));
            }
        }
        if let Some(jd) = jumps.dim() {
            if jd != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: jd,
                });
            }
        }
        jumps.validate(d)?;
        Ok(LevyTriplet {
            drift,
            gaussian: sym,
            jumps,
        })
    }

    /// One-dimensional triplet from scalars.
    pub fn scalar(ell: f64, q: f64, jumps: JumpMeasure) -> Result<Self> {
        LevyTriplet::new(
            DVector::from_element(1, ell),
            DMatrix::from_element(1, 1, q),
            jumps,
        )
    }

    /// d-dimensional standard Brownian motion (ℓ = 0, Q = I, no jumps).
    pub fn standard_bm(d: usize) -> Self {
        LevyTriplet::new(DVector::zeros(d), DMatrix::identity(d, d), JumpMeasure::None)
            .expect("identity triplet is valid")
    }

    /// Scalar Brownian motion with variance rate q.
    pub fn brownian_1d(q: f64) -> Result<Self> {
        LevyTriplet::scalar(0.0, q, JumpMeasure::None)
    }

    /// Pure drift ℓ per unit time.
    pub fn drift_1d(ell: f64) -> Self {
        LevyTriplet::scalar(ell, 0.0, JumpMeasure::None).expect("drift triplet is valid")
    }

    /// Symmetric α-stable scalar process with ψ(ξ) = scale·|ξ|^α.
    pub fn stable_1d(alpha: f64, scale: f64) -> Result<Self> {
        LevyTriplet::scalar(0.0, 0.0, JumpMeasure::stable(alpha, scale))
    }

    pub fn zero(d: usize) -> Self {
        LevyTriplet::new(DVector::zeros(d), DMatrix::zeros(d, d), JumpMeasure::None)
            .expect("zero triplet is valid")
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn drift(&self) -> &DVector<f64> {
        &self.drift
    }

    pub fn gaussian(&self) -> &DMatrix<f64> {
        &self.gaussian
    }

    pub fn jumps(&self) -> &JumpMeasure {
        &self.jumps
    }

    /// True when ψ is a (complex) quadratic polynomial of ξ, i.e. the triplet
    /// has no jump part. Drives the closed-form Gaussian transform path.
    pub fn is_quadratic(&self) -> bool {
        self.jumps.is_none()
    }

    /// Lévy–Khintchine exponent ψ(ξ).
    pub fn exponent_with(&self, xi: &DVector<f64>, cfg: &QuadConfig) -> Result<Complex64> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: xi.len(),
            });
        }
        if !xi.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("frequency argument must be finite"));
        }
        let drift_term = Complex64::new(0.0, -self.drift.dot(xi));
        let quad_term = Complex64::new(0.5 * (&self.gaussian * xi).dot(xi), 0.0);
        let jump_term = self.jumps.compensated_integral(xi, cfg)?;
        Ok(drift_term + quad_term - jump_term)
    }

    /// ψ(ξ) with default quadrature settings.
    pub fn exponent(&self, xi: &DVector<f64>) -> Result<Complex64> {
        self.exponent_with(xi, &QuadConfig::default())
    }

    /// Scalar convenience for d = 1 triplets.
    pub fn exponent1(&self, xi: f64) -> Result<Complex64> {
        self.exponent(&DVector::from_element(1, xi))
    }
}

/// The constant c_α = ∫ (cos(u'y) − 1) ν_α(dy) of the rotationally symmetric
/// α-stable measure ν_α(dy) = |y|^{−(d+α)} dy, independent of the unit
/// vector u. Strictly negative on α ∈ (0, 2).
///
/// Rotation invariance reduces the integral to a radial factor
/// ∫_0^∞ (1 − cos s) s^{−1−α} ds = π / (2 Γ(1+α) sin(πα/2)) times the
/// surface moment ∫_{S^{d−1}} |ω₁|^α dσ(ω).
pub fn stable_constant(alpha: f64, dim: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::invalid(format!(
            "stable index must lie in (0, 2), got {alpha}"
        )));
    }
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let radial = PI / (2.0 * gamma(1.0 + alpha) * (PI * alpha / 2.0).sin());
    let surface = if dim == 1 {
        2.0
    } else {
        2.0 * PI.powf((dim as f64 - 1.0) / 2.0) * gamma((alpha + 1.0) / 2.0)
            / gamma((alpha + dim as f64) / 2.0)
    };
    Ok(-radial * surface)
}
