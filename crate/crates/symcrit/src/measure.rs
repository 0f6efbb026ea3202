//! Candidate probability measures μ and their weighted Fourier transforms
//! ∫ e^{ix'ξ} g(x) μ(dx).
//!
//! Gaussian measures with polynomial weights of degree ≤ 2 reduce exactly
//! through φ, φ′, φ″; that reduction is what makes exact-zero criterion
//! residuals observable. Everything else goes through oscillation-aware
//! quadrature (densities) or plain averaging (sample clouds).

use nalgebra::DVector;
use num_complex::Complex64;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{self, QuadConfig};

/// Tolerance on ∫ρ = 1 at density construction.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Half-width, in standard deviations, of the truncated integration window
/// used for Gaussian quadrature fallbacks; the discarded tail mass is below
/// 1e-16.
const GAUSSIAN_WINDOW_SIGMAS: f64 = 8.5;

/// A transform value together with a numerical accuracy estimate
/// (quadrature error bound or Monte Carlo standard error).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformValue {
    pub value: Complex64,
    pub error_estimate: f64,
}

impl TransformValue {
    pub fn exact(value: Complex64) -> Self {
        TransformValue {
            value,
            error_estimate: 0.0,
        }
    }
}

/// Weight function g in ∫ e^{ix'ξ} g(x) μ(dx). Polynomial declarations
/// travel with the weight and unlock the closed-form Gaussian path.
#[derive(Clone)]
pub enum WeightFn {
    /// g ≡ 1 (the characteristic function).
    One,
    /// g(x) = c₀ + c₁x + c₂x² with complex coefficients (one-dimensional).
    Polynomial([Complex64; 3]),
    /// Opaque weight; may fail pointwise.
    Callable(Arc<dyn Fn(&DVector<f64>) -> Result<Complex64> + Send + Sync>),
}

impl WeightFn {
    pub fn callable(
        f: impl Fn(&DVector<f64>) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        WeightFn::Callable(Arc::new(f))
    }

    fn eval(&self, x: &DVector<f64>) -> Result<Complex64> {
        match self {
            WeightFn::One => Ok(Complex64::new(1.0, 0.0)),
            WeightFn::Polynomial([c0, c1, c2]) => {
                let x0 = x[0];
                Ok(c0 + c1 * x0 + c2 * x0 * x0)
            }
            WeightFn::Callable(f) => f(x),
        }
    }
}

#[derive(Clone)]
enum MeasureKind {
    Density {
        rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support: (f64, f64),
        normalization: f64,
    },
    Gaussian {
        mean: DVector<f64>,
        variance: DVector<f64>,
    },
    Samples {
        points: Arc<Vec<DVector<f64>>>,
    },
    Dirac {
        point: DVector<f64>,
    },
}

/// A candidate probability law.
#[derive(Clone)]
pub struct Measure {
    kind: MeasureKind,
    dim: usize,
}

impl std::fmt::Debug for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let variant = match &self.kind {
            MeasureKind::Density { support, .. } => format!("Density on {support:?}"),
            MeasureKind::Gaussian { mean, variance } => {
                format!("Gaussian(m={:?}, v={:?})", mean.as_slice(), variance.as_slice())
            }
            MeasureKind::Samples { points } => format!("Samples(n={})", points.len()),
            MeasureKind::Dirac { point } => format!("Dirac at {:?}", point.as_slice()),
        };
        write!(f, "Measure[{variant}, dim={}]", self.dim)
    }
}

impl Measure {
    /// Absolutely continuous law with callable density on a declared finite
    /// support interval. Construction checks ∫ρ = 1 to 1e-6 by quadrature.
    pub fn density(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        Self::density_impl(Arc::new(rho), lo, hi, false)
    }

    /// Like [`Measure::density`] but rescales ρ by its computed mass first,
    /// so any integrable nonnegative shape is accepted.
    pub fn density_normalized(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        Self::density_impl(Arc::new(rho), lo, hi, true)
    }

    fn density_impl(
        rho: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        lo: f64,
        hi: f64,
        normalize: bool,
    ) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!(
                "density support must be a finite interval, got [{lo}, {hi}]"
            )));
        }
        let cfg = QuadConfig::default();
        let (mass, _) = quad::integrate(|x| rho(x), lo, hi, &cfg)
            .map_err(|e| Error::invalid(format!("density mass could not be computed: {e}")))?;
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::invalid(format!(
                "density mass over [{lo}, {hi}] is {mass}"
            )));
        }
        let (rho, mass) = if normalize {
            let z = mass;
            let inner = rho.clone();
            (
                Arc::new(move |x: f64| inner(x) / z) as Arc<dyn Fn(f64) -> f64 + Send + Sync>,
                1.0,
            )
        } else {
            (rho, mass)
        };
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!(
                "density integrates to {mass} over [{lo}, {hi}], expected 1 within {NORMALIZATION_TOL}"
            )));
        }
        Ok(Measure {
            kind: MeasureKind::Density {
                rho,
                support: (lo, hi),
                normalization: mass,
            },
            dim: 1,
        })
    }

    /// Scalar Gaussian N(mean, variance).
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::gaussian_diag(
            DVector::from_element(1, mean),
            DVector::from_element(1, variance),
        )
    }

    /// Diagonal Gaussian on ℝ^d.
    pub fn gaussian_diag(mean: DVector<f64>, variance: DVector<f64>) -> Result<Self> {
        if mean.len() != variance.len() || mean.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: variance.len(),
            });
        }
        if !variance.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("gaussian variance must be positive"));
        }
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("gaussian mean must be finite"));
        }
        let dim = mean.len();
        Ok(Measure {
            kind: MeasureKind::Gaussian { mean, variance },
            dim,
        })
    }

    /// Empirical measure with equal weights.
    pub fn samples(points: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::invalid("sample measure needs at least one point"));
        };
        let dim = first.len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("sample {i} is not finite")));
            }
        }
        Ok(Measure {
            kind: MeasureKind::Samples {
                points: Arc::new(points),
            },
            dim,
        })
    }

    pub fn samples_1d(values: Vec<f64>) -> Result<Self> {
        Self::samples(
            values
                .into_iter()
                .map(|v| DVector::from_element(1, v))
                .collect(),
        )
    }

    /// Point mass at x₀.
    pub fn dirac(point: DVector<f64>) -> Result<Self> {
        if point.is_empty() || !point.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("dirac point must be finite and non-empty"));
        }
        let dim = point.len();
        Ok(Measure {
            kind: MeasureKind::Dirac { point },
            dim,
        })
    }

    pub fn dirac_1d(x0: f64) -> Result<Self> {
        Self::dirac(DVector::from_element(1, x0))
    }

    /// Loads a Samples measure from headerless CSV, one point per row,
    /// d columns.
    pub fn samples_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::samples_from_reader(file)
    }

    /// Reader-based CSV loading (also the fuzzing entry point).
    pub fn samples_from_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record =
                record.map_err(|e| Error::invalid(format!("csv row {}: {e}", row + 1)))?;
            if record.is_empty() || (record.len() == 1 && record[0].is_empty()) {
                continue;
            }
            let mut coords = Vec::with_capacity(record.len());
            for (col, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::invalid(format!(
                        "csv row {}, column {}: `{field}` is not a number",
                        row + 1,
                        col + 1
                    ))
                })?;
                coords.push(v);
            }
            points.push(DVector::from_vec(coords));
        }
        Self::samples(points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points of a Samples measure, if this is one.
    pub fn points(&self) -> Option<&[DVector<f64>]> {
        match &self.kind {
            MeasureKind::Samples { points } => Some(points),
            _ => None,
        }
    }

    /// Pointwise density value for absolutely continuous scalar measures
    /// (zero outside a declared support). `None` for atoms and samples.
    pub fn density_at(&self, x: f64) -> Option<f64> {
        match &self.kind {
            MeasureKind::Density {
                rho,
                support,
                normalization,
            } => {
                if x < support.0 || x > support.1 {
                    Some(0.0)
                } else {
                    Some(rho(x) / normalization)
                }
            }
            MeasureKind::Gaussian { mean, variance } if self.dim == 1 => {
                let m = mean[0];
                let v = variance[0];
                Some((-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
            }
            _ => None,
        }
    }

    /// Declared or effective support for quadrature paths (one-dimensional).
    pub fn quadrature_window(&self) -> Option<(f64, f64)> {
        match &self.kind {
            MeasureKind::Density { support, .. } => Some(*support),
            MeasureKind::Gaussian { mean, variance } if self.dim == 1 => {
                let half = GAUSSIAN_WINDOW_SIGMAS * variance[0].sqrt();
                Some((mean[0] - half, mean[0] + half))
            }
            _ => None,
        }
    }

    /// Gaussian (mean, variance) in d = 1, if this is a scalar Gaussian.
    pub fn gaussian_params(&self) -> Option<(f64, f64)> {
        match &self.kind {
            MeasureKind::Gaussian { mean, variance } if self.dim == 1 => {
                Some((mean[0], variance[0]))
            }
            _ => None,
        }
    }

    /// Characteristic function φ_μ(ξ) = ∫ e^{ix'ξ} μ(dx).
    pub fn char_fn_with(&self, xi: &DVector<f64>, cfg: &QuadConfig) -> Result<TransformValue> {
        self.weighted_transform_with(&WeightFn::One, xi, cfg, 1)
    }

    pub fn char_fn(&self, xi: &DVector<f64>) -> Result<TransformValue> {
        self.char_fn_with(xi, &QuadConfig::default())
    }

    /// Scalar convenience for d = 1.
    pub fn char_fn1(&self, xi: f64) -> Result<TransformValue> {
        self.char_fn(&DVector::from_element(1, xi))
    }

    /// Weighted transform ∫ e^{ix'ξ} g(x) μ(dx).
    ///
    /// Routing: Dirac and Samples evaluate exactly (plain average for
    /// samples, with Monte Carlo standard error); scalar Gaussians with
    /// polynomial g reduce through φ, φ′, φ″; densities and opaque weights
    /// go through oscillation-aware quadrature. `resolution` doubles the
    /// oscillatory panel density per increment.
    pub fn weighted_transform_with(
        &self,
        g: &WeightFn,
        xi: &DVector<f64>,
        cfg: &QuadConfig,
        resolution: u32,
    ) -> Result<TransformValue> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        if !xi.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("frequency argument must be finite"));
        }
        match &self.kind {
            MeasureKind::Dirac { point } => {
                let phase = Complex64::new(0.0, point.dot(xi)).exp();
                Ok(TransformValue::exact(phase * g.eval(point)?))
            }
            MeasureKind::Samples { points } => {
                let n = points.len();
                let mut values = Vec::with_capacity(n);
                for p in points.iter() {
                    let z = Complex64::new(0.0, p.dot(xi)).exp() * g.eval(p)?;
                    values.push(z);
                }
                let mean = pairwise_sum(&values) / n as f64;
                let err = if n > 1 {
                    let ss: f64 = values.iter().map(|z| (z - mean).norm_sqr()).sum();
                    (ss / ((n - 1) as f64 * n as f64)).sqrt()
                } else {
                    0.0
                };
                Ok(TransformValue {
                    value: mean,
                    error_estimate: err,
                })
            }
            MeasureKind::Gaussian { mean, variance } => match g {
                WeightFn::One => {
                    let mut exponent = Complex64::new(0.0, 0.0);
                    for k in 0..self.dim {
                        exponent += Complex64::new(-0.5 * variance[k] * xi[k] * xi[k], mean[k] * xi[k]);
                    }
                    Ok(TransformValue::exact(exponent.exp()))
                }
                WeightFn::Polynomial(coeffs) => {
                    if self.dim != 1 {
                        return Err(Error::UnsupportedDimension {
                            dim: self.dim,
                            context: "polynomial Gaussian reduction is one-dimensional".into(),
                        });
                    }
                    Ok(TransformValue::exact(gaussian_polynomial_transform(
                        mean[0],
                        variance[0],
                        xi[0],
                        coeffs,
                    )))
                }
                WeightFn::Callable(_) => {
                    if self.dim != 1 {
                        return Err(Error::UnsupportedDimension {
                            dim: self.dim,
                            context: "quadrature over Gaussian measures is one-dimensional".into(),
                        });
                    }
                    let (lo, hi) = self.quadrature_window().expect("scalar gaussian window");
                    let m = mean[0];
                    let v = variance[0];
                    let norm = 1.0 / (2.0 * std::f64::consts::PI * v).sqrt();
                    self.quadrature_transform(
                        move |x| norm * (-(x - m) * (x - m) / (2.0 * v)).exp(),
                        g,
                        xi[0],
                        lo,
                        hi,
                        cfg,
                        resolution,
                    )
                }
            },
            MeasureKind::Density { rho, support, .. } => {
                let rho = rho.clone();
                self.quadrature_transform(
                    move |x| rho(x),
                    g,
                    xi[0],
                    support.0,
                    support.1,
                    cfg,
                    resolution,
                )
            }
        }
    }

    pub fn weighted_transform(&self, g: &WeightFn, xi: &DVector<f64>) -> Result<TransformValue> {
        self.weighted_transform_with(g, xi, &QuadConfig::default(), 1)
    }

    /// Scalar convenience for d = 1.
    pub fn weighted_transform1(&self, g: &WeightFn, xi: f64) -> Result<TransformValue> {
        self.weighted_transform(g, &DVector::from_element(1, xi))
    }

    #[allow(clippy::too_many_arguments)]
    fn quadrature_transform(
        &self,
        density: impl Fn(f64) -> f64,
        g: &WeightFn,
        xi: f64,
        lo: f64,
        hi: f64,
        cfg: &QuadConfig,
        resolution: u32,
    ) -> Result<TransformValue> {
        // weight failures surface as non-finite integrand values, which the
        // quadrature reports as an evaluation error with interval context
        let integrand = |x: f64| -> Complex64 {
            match g.eval(&DVector::from_element(1, x)) {
                Ok(z) => z * density(x),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        };
        let (value, err) = quad::oscillatory_transform(integrand, xi, lo, hi, cfg, resolution)?;
        Ok(TransformValue {
            value,
            error_estimate: err,
        })
    }
}

/// ∫ e^{ixξ} (c₀ + c₁x + c₂x²) dN(m, v) via φ, φ′, φ″:
///   ∫ e^{ixξ} x μ(dx) = −i φ′(ξ),  ∫ e^{ixξ} x² μ(dx) = −φ″(ξ).
fn gaussian_polynomial_transform(m: f64, v: f64, xi: f64, c: &[Complex64; 3]) -> Complex64 {
    let phi = Complex64::new(-0.5 * v * xi * xi, m * xi).exp();
    let u = Complex64::new(-v * xi, m); // φ′ = u·φ with u = im − vξ
    let phi_p = u * phi;
    let phi_pp = (u * u - v) * phi;
    c[0] * phi + c[1] * (-Complex64::i() * phi_p) + c[2] * (-phi_pp)
}

/// Pairwise summation keeps Monte Carlo accumulation reproducible at
/// tolerance level regardless of length.
fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gaussian_pdf(m: f64, v: f64) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
        move |x: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    #[test]
    fn gaussian_char_fn_closed_form() {
        let mu = Measure::gaussian(0.0, 1.0).unwrap();
        let phi0 = mu.char_fn1(0.0).unwrap();
        assert_eq!(phi0.value, Complex64::new(1.0, 0.0));
        let phi1 = mu.char_fn1(1.0).unwrap();
        assert_abs_diff_eq!(phi1.value.re, (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(phi1.value.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dirac_char_fn() {
        let mu = Measure::dirac_1d(3.0).unwrap();
        let t = mu.char_fn1(2.0).unwrap();
        assert_abs_diff_eq!(t.value.re, 6.0f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(t.value.im, 6.0f64.sin(), epsilon = 1e-15);
        assert_eq!(t.error_estimate, 0.0);
    }

    #[test]
    fn samples_average_of_ones() {
        let mu = Measure::samples_1d(vec![1.0, 2.0, 3.0]).unwrap();
        let t = mu.weighted_transform1(&WeightFn::One, 0.0).unwrap();
        assert_eq!(t.value, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn samples_path_is_a_plain_average() {
        let pts = vec![0.3, -1.2, 2.5, 0.0, 4.4];
        let mu = Measure::samples_1d(pts.clone()).unwrap();
        let xi = 1.3;
        let t = mu.char_fn1(xi).unwrap();
        let brute: Complex64 = pts
            .iter()
            .map(|&x| Complex64::new(0.0, x * xi).exp())
            .sum::<Complex64>()
            / pts.len() as f64;
        assert!((t.value - brute).norm() < 1e-15);
    }

    #[test]
    fn gaussian_first_moment_identity() {
        // ∫ e^{ixξ} x μ(dx) = −i φ′(ξ); checked against quadrature
        let mu = Measure::gaussian(0.0, 1.0).unwrap();
        let g = WeightFn::Polynomial([
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let xi = 1.0;
        let closed = mu.weighted_transform1(&g, xi).unwrap();
        // φ′(1) = −e^{−1/2}, so the transform is i·e^{−1/2}
        assert_abs_diff_eq!(closed.value.im, (-0.5f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(closed.value.re, 0.0, epsilon = 1e-14);

        let dens = Measure::density(gaussian_pdf(0.0, 1.0), -12.0, 12.0).unwrap();
        let quad_path = dens.weighted_transform1(&g, xi).unwrap();
        assert!((closed.value - quad_path.value).norm() < 1e-8);
    }

    #[test]
    fn gaussian_second_moment_at_zero() {
        let mu = Measure::gaussian(0.0, 1.0).unwrap();
        let g = WeightFn::Polynomial([
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let t = mu.weighted_transform1(&g, 0.0).unwrap();
        assert_abs_diff_eq!(t.value.re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.value.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_quadrature_for_quadratic_weights() {
        let m = 0.3;
        let v = 0.8;
        let mu = Measure::gaussian(m, v).unwrap();
        let dens = Measure::density(gaussian_pdf(m, v), -14.0, 14.0).unwrap();
        let g = WeightFn::Polynomial([
            Complex64::new(0.4, -0.2),
            Complex64::new(-1.0, 0.7),
            Complex64::new(0.3, 0.1),
        ]);
        for &xi in &[-4.7, -1.0, 0.0, 0.6, 3.9] {
            let a = mu.weighted_transform1(&g, xi).unwrap();
            let b = dens.weighted_transform1(&g, xi).unwrap();
            assert!(
                (a.value - b.value).norm() < 1e-8,
                "xi={xi}: {} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn weight_one_equals_char_fn() {
        let measures = vec![
            Measure::gaussian(0.1, 0.5).unwrap(),
            Measure::dirac_1d(-2.0).unwrap(),
            Measure::samples_1d(vec![0.0, 1.0, -1.0, 0.4]).unwrap(),
            Measure::density(gaussian_pdf(0.0, 1.0), -12.0, 12.0).unwrap(),
        ];
        for mu in &measures {
            for &xi in &[0.0, 1.1, -2.4] {
                let a = mu.char_fn1(xi).unwrap();
                let b = mu.weighted_transform1(&WeightFn::One, xi).unwrap();
                assert!((a.value - b.value).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn char_fn_hermitian_and_bounded() {
        let measures = vec![
            Measure::gaussian(0.4, 2.0).unwrap(),
            Measure::samples_1d(vec![0.2, -0.9, 1.7]).unwrap(),
            Measure::density(gaussian_pdf(-0.5, 0.7), -13.0, 13.0).unwrap(),
            Measure::dirac_1d(0.8).unwrap(),
        ];
        for mu in &measures {
            for k in 0..15 {
                let xi = -3.0 + 0.4 * k as f64;
                let t = mu.char_fn1(xi).unwrap();
                let tm = mu.char_fn1(-xi).unwrap();
                assert!((tm.value - t.value.conj()).norm() < 1e-12);
                assert!(t.value.norm() <= 1.0 + t.error_estimate + 1e-12);
            }
        }
    }

    #[test]
    fn density_normalization_is_enforced() {
        // unnormalized shape rejected
        assert!(Measure::density(|x: f64| (-x * x).exp(), -10.0, 10.0).is_err());
        // but accepted via the normalizing constructor
        let mu = Measure::density_normalized(|x: f64| (-x * x).exp(), -10.0, 10.0).unwrap();
        let t = mu.char_fn1(0.0).unwrap();
        assert_abs_diff_eq!(t.value.re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn invalid_measures_rejected() {
        assert!(Measure::gaussian(0.0, 0.0).is_err());
        assert!(Measure::gaussian(0.0, -1.0).is_err());
        assert!(Measure::samples(Vec::new()).is_err());
        assert!(Measure::samples_1d(vec![f64::NAN]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let data = "0.5\n-1.25\n3.0\n";
        let mu = Measure::samples_from_reader(data.as_bytes()).unwrap();
        assert_eq!(mu.points().unwrap().len(), 3);
        assert_eq!(mu.dim(), 1);

        let data2 = "0.5,1.0\n-1.25,2.0\n";
        let mu2 = Measure::samples_from_reader(data2.as_bytes()).unwrap();
        assert_eq!(mu2.dim(), 2);

        assert!(Measure::samples_from_reader("abc\n".as_bytes()).is_err());
        assert!(Measure::samples_from_reader("".as_bytes()).is_err());
        // ragged rows: dimension mismatch
        assert!(Measure::samples_from_reader("1.0,2.0\n3.0\n".as_bytes()).is_err());
    }

    #[test]
    fn diagonal_gaussian_char_fn() {
        let mu = Measure::gaussian_diag(
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![1.0, 2.0]),
        )
        .unwrap();
        let xi = DVector::from_vec(vec![0.5, -0.5]);
        let t = mu.char_fn(&xi).unwrap();
        let expected = Complex64::new(-0.5 * (1.0 * 0.25 + 2.0 * 0.25), 1.0 * -0.5).exp();
        assert!((t.value - expected).norm() < 1e-14);
    }
}
