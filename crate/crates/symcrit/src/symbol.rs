//! Probabilistic symbols p(x, ξ) of Itô processes.
//!
//! A symbol is built either from differential characteristics
//!
//!   p(x,ξ) = −i ℓ(x)'ξ + ½ ξ'Q(x)ξ − ∫ (e^{iy'ξ} − 1 − i y'ξ χ(y)) N(x, dy)
//!
//! or from one of the structured SDE forms (Lévy-driven mean reversion,
//! additive noise, Brownian diffusion, generalized Ornstein–Uhlenbeck),
//! whose symbols compose out of driver exponents.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy::{JumpMeasure, LevyTriplet, PSD_TOLERANCE};
use crate::quad::QuadConfig;

/// Gaussian-part convention.
///
/// `Canonical` keeps the ½ξ'Qξ factor of the characteristics formula (a
/// Brownian driver contributes ½|Φ'ξ|²). `Paper` reproduces the printed
/// diffusion form |Φ'ξ|², which differs by a factor two in the Gaussian part
/// and pairs with the stationary variance σ²/λ instead of σ²/(2λ).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    Canonical,
    Paper,
}

/// Structural origin of a symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolForm {
    FromCharacteristics,
    LevyConstant,
    OuType,
    Additive,
    Diffusion,
    Gou,
    Custom,
}

/// Scalar coefficient map x ↦ f(x), optionally declared polynomial. The
/// polynomial declaration travels with the coefficient and unlocks
/// closed-form Gaussian transforms downstream.
#[derive(Clone)]
pub struct Coeff1 {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    poly: Option<Vec<f64>>,
}

impl Coeff1 {
    pub fn constant(c: f64) -> Self {
        Coeff1 {
            f: Arc::new(move |_| c),
            poly: Some(vec![c]),
        }
    }

    /// c0 + c1·x
    pub fn linear(c0: f64, c1: f64) -> Self {
        Coeff1 {
            f: Arc::new(move |x| c0 + c1 * x),
            poly: Some(vec![c0, c1]),
        }
    }

    /// Declared polynomial Σ coeffs[k] x^k.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let c = coeffs.clone();
        Coeff1 {
            f: Arc::new(move |x| c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck)),
            poly: Some(coeffs),
        }
    }

    /// Opaque callable; the closed-form path will not be used.
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coeff1 {
            f: Arc::new(f),
            poly: None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn poly(&self) -> Option<&[f64]> {
        self.poly.as_deref()
    }
}

/// Matrix coefficient Φ : ℝ^d → ℝ^{d×n}. Scalar constructions carry their
/// linear structure so quadratic symbols reduce in closed form.
#[derive(Clone)]
pub struct MatrixMap {
    dim_state: usize,
    rows: usize,
    cols: usize,
    f: Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>,
    linear1: Option<(f64, f64)>,
}

impl MatrixMap {
    /// Constant scalar Φ(x) ≡ c (d = n = 1).
    pub fn scalar_const(c: f64) -> Self {
        MatrixMap {
            dim_state: 1,
            rows: 1,
            cols: 1,
            f: Arc::new(move |_| DMatrix::from_element(1, 1, c)),
            linear1: Some((c, 0.0)),
        }
    }

    /// Scalar Φ(x) = a0 + a1·x (d = n = 1).
    pub fn scalar_linear(a0: f64, a1: f64) -> Self {
        MatrixMap {
            dim_state: 1,
            rows: 1,
            cols: 1,
            f: Arc::new(move |x| DMatrix::from_element(1, 1, a0 + a1 * x[0])),
            linear1: Some((a0, a1)),
        }
    }

    /// Scalar callable Φ (d = n = 1).
    pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        MatrixMap {
            dim_state: 1,
            rows: 1,
            cols: 1,
            f: Arc::new(move |x| DMatrix::from_element(1, 1, f(x[0]))),
            linear1: None,
        }
    }

    /// Constant matrix.
    pub fn constant(m: DMatrix<f64>) -> Self {
        let rows = m.nrows();
        let cols = m.ncols();
        let linear1 = if rows == 1 && cols == 1 {
            Some((m[(0, 0)], 0.0))
        } else {
            None
        };
        MatrixMap {
            dim_state: rows,
            rows,
            cols,
            f: Arc::new(move |_| m.clone()),
            linear1,
        }
    }

    /// General matrix field.
    pub fn new(
        dim_state: usize,
        rows: usize,
        cols: usize,
        f: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        MatrixMap {
            dim_state,
            rows,
            cols,
            f: Arc::new(f),
            linear1: None,
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.f)(x)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    /// Linear scalar structure (a0, a1) when Φ(x) = a0 + a1·x with d = n = 1.
    pub fn linear1(&self) -> Option<(f64, f64)> {
        self.linear1
    }
}

type JumpField = Arc<dyn Fn(&DVector<f64>) -> JumpMeasure + Send + Sync>;

/// State-dependent differential characteristics (ℓ(x), Q(x), N(x, dy)).
/// Jump measures are probed lazily per x; there is no global integrability
/// scan.
#[derive(Clone)]
pub struct DifferentialCharacteristics {
    dim: usize,
    ell: Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>,
    q: Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>,
    jumps: Option<JumpField>,
    ell_poly: Option<Vec<f64>>,
    q_poly: Option<Vec<f64>>,
}

impl DifferentialCharacteristics {
    pub fn new(
        dim: usize,
        ell: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        q: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        jumps: Option<JumpField>,
    ) -> Self {
        DifferentialCharacteristics {
            dim,
            ell: Arc::new(ell),
            q: Arc::new(q),
            jumps,
            ell_poly: None,
            q_poly: None,
        }
    }

    /// One-dimensional characteristics from scalar coefficients; polynomial
    /// declarations on `ell` and `q` propagate to the symbol.
    pub fn scalar(ell: Coeff1, q: Coeff1, jumps: Option<JumpField>) -> Self {
        let ell_poly = ell.poly.clone();
        let q_poly = q.poly.clone();
        let ef = ell.f.clone();
        let qf = q.f.clone();
        DifferentialCharacteristics {
            dim: 1,
            ell: Arc::new(move |x: &DVector<f64>| DVector::from_element(1, ef(x[0]))),
            q: Arc::new(move |x: &DVector<f64>| DMatrix::from_element(1, 1, qf(x[0]))),
            jumps,
            ell_poly,
            q_poly,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn has_jumps(&self) -> bool {
        self.jumps.is_some()
    }
}

#[derive(Clone)]
enum Kind {
    Characteristics(DifferentialCharacteristics),
    LevyConstant(LevyTriplet),
    OuType {
        a: f64,
        phi: MatrixMap,
        driver: LevyTriplet,
    },
    Additive {
        b: f64,
        phi: MatrixMap,
        driver_l: LevyTriplet,
        driver_z: LevyTriplet,
    },
    Diffusion {
        a: f64,
        phi: MatrixMap,
        convention: Convention,
    },
    Gou {
        driver_u: LevyTriplet,
        driver_l: LevyTriplet,
    },
    Custom(Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<Complex64> + Send + Sync>),
}

/// An evaluable probabilistic symbol with structural metadata.
#[derive(Clone)]
pub struct Symbol {
    form: SymbolForm,
    dim: usize,
    kind: Kind,
    notes: Vec<String>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("form", &self.form)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

fn driver_moment_notes(driver: &LevyTriplet, role: &str, notes: &mut Vec<String>) {
    if let JumpMeasure::StableSymmetric { alpha, .. } = driver.jumps() {
        if *alpha <= 1.0 {
            notes.push(format!(
                "{role} is {alpha}-stable with alpha <= 1: the finite-first-moment \
                 hypothesis E|L_1| < infinity fails, so the necessity statement \
                 does not cover this configuration"
            ));
        }
    }
}

impl Symbol {
    /// Symbol of an Itô process from its differential characteristics
    /// (the ½-convention characteristics formula).
    pub fn from_characteristics(chars: DifferentialCharacteristics) -> Symbol {
        let dim = chars.dim();
        let mut notes = vec![
            "differential characteristics are assumed bounded and finely continuous; \
             neither is checked numerically"
                .to_string(),
        ];
        if chars.has_jumps() {
            notes.push(
                "state-dependent jump measures are probed lazily at each x; \
                 integrability is validated per probe only"
                    .to_string(),
            );
        }
        Symbol {
            form: SymbolForm::FromCharacteristics,
            dim,
            kind: Kind::Characteristics(chars),
            notes,
        }
    }

    /// x-independent symbol ψ(ξ) of a Lévy process.
    pub fn levy(driver: LevyTriplet) -> Symbol {
        Symbol {
            form: SymbolForm::LevyConstant,
            dim: driver.dim(),
            kind: Kind::LevyConstant(driver),
            notes: Vec::new(),
        }
    }

    /// The zero process (a Lévy process with vanishing exponent).
    pub fn zero(dim: usize) -> Symbol {
        Symbol::levy(LevyTriplet::zero(dim))
    }

    /// Symbol p(x,ξ) = ψ_L(Φ(x)'ξ) + i a x'ξ of dX = −aX dt + Φ(X₋) dL.
    pub fn ou_type(a: f64, phi: MatrixMap, driver: LevyTriplet) -> Result<Symbol> {
        if driver.dim() != phi.cols() {
            return Err(Error::DimensionMismatch {
                expected: phi.cols(),
                got: driver.dim(),
            });
        }
        let mut notes = vec![
            "coefficient boundedness and local Lipschitz continuity of the SDE \
             coefficient are unchecked hypotheses of the criterion"
                .to_string(),
        ];
        driver_moment_notes(&driver, "the driving process", &mut notes);
        Ok(Symbol {
            form: SymbolForm::OuType,
            dim: phi.rows(),
            kind: Kind::OuType { a, phi, driver },
            notes,
        })
    }

    /// Symbol p(x,ξ) = ψ_L(Φ(x)'ξ) + ψ_Z(bξ) of dX = b dZ + Φ(X₋) dL with
    /// independent drivers (Z is d-dimensional, L is n-dimensional).
    pub fn additive(
        b: f64,
        phi: MatrixMap,
        driver_l: LevyTriplet,
        driver_z: LevyTriplet,
    ) -> Result<Symbol> {
        if driver_l.dim() != phi.cols() {
            return Err(Error::DimensionMismatch {
                expected: phi.cols(),
                got: driver_l.dim(),
            });
        }
        if driver_z.dim() != phi.rows() {
            return Err(Error::DimensionMismatch {
                expected: phi.rows(),
                got: driver_z.dim(),
            });
        }
        let mut notes = vec![
            "coefficient boundedness and local Lipschitz continuity of the SDE \
             coefficient are unchecked hypotheses of the criterion"
                .to_string(),
        ];
        driver_moment_notes(&driver_l, "the multiplicative driver", &mut notes);
        Ok(Symbol {
            form: SymbolForm::Additive,
            dim: phi.rows(),
            kind: Kind::Additive {
                b,
                phi,
                driver_l,
                driver_z,
            },
            notes,
        })
    }

    /// Symbol of the Brownian SDE dX = −aX dt + Φ(X) dW.
    ///
    /// `Canonical` evaluates ½|Φ(x)'ξ|² + i a x'ξ; `Paper` reproduces the
    /// printed form |Φ(x)'ξ|² + i a x'ξ.
    pub fn diffusion(a: f64, phi: MatrixMap, convention: Convention) -> Symbol {
        let mut notes = vec![
            "the diffusion coefficient is assumed continuously differentiable with \
             bounded derivative (unchecked)"
                .to_string(),
        ];
        if convention == Convention::Paper {
            notes.push(
                "paper convention: Gaussian part carries |Phi'xi|^2 instead of the \
                 canonical half, changing residuals by design"
                    .to_string(),
            );
        }
        Symbol {
            form: SymbolForm::Diffusion,
            dim: phi.rows(),
            kind: Kind::Diffusion { a, phi, convention },
            notes,
        }
    }

    /// Generalized Ornstein–Uhlenbeck symbol p(x,ξ) = ψ_U(xξ) + ψ_L(ξ)
    /// (scalar state only).
    pub fn gou(driver_u: LevyTriplet, driver_l: LevyTriplet) -> Result<Symbol> {
        if driver_u.dim() != 1 || driver_l.dim() != 1 {
            return Err(Error::UnsupportedDimension {
                dim: driver_u.dim().max(driver_l.dim()),
                context: "generalized Ornstein-Uhlenbeck symbols are one-dimensional".into(),
            });
        }
        let notes = vec![
            "the criterion for this form assumes a candidate law with finite second \
             moment (unchecked for black-box measures)"
                .to_string(),
        ];
        Ok(Symbol {
            form: SymbolForm::Gou,
            dim: 1,
            kind: Kind::Gou { driver_u, driver_l },
            notes,
        })
    }

    /// Classical Ornstein–Uhlenbeck symbol for dX = −λX dt + σ dW under the
    /// chosen convention: iλxξ + ½σ²ξ² (canonical) or iλxξ + σ²ξ² (paper).
    pub fn ornstein_uhlenbeck(lambda: f64, sigma: f64, convention: Convention) -> Symbol {
        Symbol::diffusion(lambda, MatrixMap::scalar_const(sigma), convention)
    }

    /// Arbitrary user symbol.
    pub fn custom(
        dim: usize,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Symbol {
        Symbol {
            form: SymbolForm::Custom,
            dim,
            kind: Kind::Custom(Arc::new(f)),
            notes: vec!["custom symbols bypass all structural validation".to_string()],
        }
    }

    pub fn form(&self) -> SymbolForm {
        self.form
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hypothesis disclaimers accumulated at construction.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn push_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Evaluates p(x, ξ).
    pub fn eval_with(
        &self,
        x: &DVector<f64>,
        xi: &DVector<f64>,
        cfg: &QuadConfig,
    ) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xi.len(),
            });
        }
        if !x.iter().chain(xi.iter()).all(|v| v.is_finite()) {
            return Err(Error::invalid("symbol arguments must be finite"));
        }
        match &self.kind {
            Kind::Characteristics(chars) => {
                let ell = (chars.ell)(x);
                let q = (chars.q)(x);
                if ell.len() != self.dim || q.nrows() != self.dim || q.ncols() != self.dim {
                    return Err(Error::Evaluation(format!(
                        "characteristics returned wrong dimensions at x = {x:?}"
                    )));
                }
                let q = (&q + q.transpose()) * 0.5;
                if self.dim == 1 {
                    if q[(0, 0)] < -PSD_TOLERANCE {
                        return Err(Error::Evaluation(format!(
                            "Q({}) = {} is negative",
                            x[0],
                            q[(0, 0)]
                        )));
                    }
                } else if q
                    .clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .any(|&e| e < -PSD_TOLERANCE)
                {
                    return Err(Error::Evaluation(format!(
                        "Q(x) is not positive semi-definite at x = {x:?}"
                    )));
                }
                let mut p = Complex64::new(0.5 * (&q * xi).dot(xi), -ell.dot(xi));
                if let Some(jumps) = &chars.jumps {
                    let measure = jumps(x);
                    measure
                        .compensated_integral(xi, cfg)
                        .map(|j| p -= j)
                        .map_err(|e| {
                            Error::Evaluation(format!("jump integral failed at x = {x:?}: {e}"))
                        })?;
                }
                Ok(p)
            }
            Kind::LevyConstant(driver) => driver.exponent_with(xi, cfg),
            Kind::OuType { a, phi, driver } => {
                let u = phi.eval(x).transpose() * xi;
                let psi = driver.exponent_with(&u, cfg)?;
                Ok(psi + Complex64::new(0.0, a * x.dot(xi)))
            }
            Kind::Additive {
                b,
                phi,
                driver_l,
                driver_z,
            } => {
                let u = phi.eval(x).transpose() * xi;
                let psi_l = driver_l.exponent_with(&u, cfg)?;
                let psi_z = driver_z.exponent_with(&(xi * *b), cfg)?;
                Ok(psi_l + psi_z)
            }
            Kind::Diffusion { a, phi, convention } => {
                let u = phi.eval(x).transpose() * xi;
                let factor = match convention {
                    Convention::Canonical => 0.5,
                    Convention::Paper => 1.0,
                };
                Ok(Complex64::new(
                    factor * u.norm_squared(),
                    a * x.dot(xi),
                ))
            }
            Kind::Gou { driver_u, driver_l } => {
                let arg = DVector::from_element(1, x[0] * xi[0]);
                Ok(driver_u.exponent_with(&arg, cfg)? + driver_l.exponent_with(xi, cfg)?)
            }
            Kind::Custom(f) => f(x, xi),
        }
    }

    pub fn eval(&self, x: &DVector<f64>, xi: &DVector<f64>) -> Result<Complex64> {
        self.eval_with(x, xi, &QuadConfig::default())
    }

    /// Scalar convenience for one-dimensional symbols.
    pub fn eval1(&self, x: f64, xi: f64) -> Result<Complex64> {
        self.eval(&DVector::from_element(1, x), &DVector::from_element(1, xi))
    }

    /// For one-dimensional symbols that are polynomials of x at fixed ξ,
    /// the coefficients [c₀, c₁, c₂] with p(x,ξ) = c₀ + c₁x + c₂x².
    ///
    /// This is what makes exact-zero residuals observable for the
    /// Gaussian-measure closed form. Returns Ok(None) when no quadratic
    /// structure is available.
    pub fn x_polynomial_with(
        &self,
        xi: f64,
        cfg: &QuadConfig,
    ) -> Result<Option<[Complex64; 3]>> {
        if self.dim != 1 {
            return Ok(None);
        }
        let zero = Complex64::new(0.0, 0.0);
        let xiv = DVector::from_element(1, xi);
        match &self.kind {
            Kind::LevyConstant(driver) => {
                let psi = driver.exponent_with(&xiv, cfg)?;
                Ok(Some([psi, zero, zero]))
            }
            Kind::OuType { a, phi, driver } => {
                let Some((a0, a1)) = phi.linear1() else {
                    return Ok(None);
                };
                let linear_term = Complex64::new(0.0, a * xi);
                if a1 == 0.0 {
                    let psi = driver.exponent_with(&DVector::from_element(1, a0 * xi), cfg)?;
                    Ok(Some([psi, linear_term, zero]))
                } else if driver.is_quadratic() {
                    // ψ(u) = −iℓu + ½Qu², u = (a0 + a1 x)ξ
                    let ell = driver.drift()[0];
                    let q = driver.gaussian()[(0, 0)];
                    let c0 = Complex64::new(0.5 * q * (a0 * xi).powi(2), -ell * a0 * xi);
                    let c1 = Complex64::new(q * a0 * a1 * xi * xi, -ell * a1 * xi) + linear_term;
                    let c2 = Complex64::new(0.5 * q * (a1 * xi).powi(2), 0.0);
                    Ok(Some([c0, c1, c2]))
                } else {
                    Ok(None)
                }
            }
            Kind::Additive {
                b,
                phi,
                driver_l,
                driver_z,
            } => {
                let Some((a0, a1)) = phi.linear1() else {
                    return Ok(None);
                };
                let psi_z = driver_z.exponent_with(&DVector::from_element(1, b * xi), cfg)?;
                if a1 == 0.0 {
                    let psi_l =
                        driver_l.exponent_with(&DVector::from_element(1, a0 * xi), cfg)?;
                    Ok(Some([psi_l + psi_z, zero, zero]))
                } else if driver_l.is_quadratic() {
                    let ell = driver_l.drift()[0];
                    let q = driver_l.gaussian()[(0, 0)];
                    let c0 = Complex64::new(0.5 * q * (a0 * xi).powi(2), -ell * a0 * xi) + psi_z;
                    let c1 = Complex64::new(q * a0 * a1 * xi * xi, -ell * a1 * xi);
                    let c2 = Complex64::new(0.5 * q * (a1 * xi).powi(2), 0.0);
                    Ok(Some([c0, c1, c2]))
                } else {
                    Ok(None)
                }
            }
            Kind::Diffusion { a, phi, convention } => {
                let Some((a0, a1)) = phi.linear1() else {
                    return Ok(None);
                };
                let factor = match convention {
                    Convention::Canonical => 0.5,
                    Convention::Paper => 1.0,
                };
                let xi2 = xi * xi;
                let c0 = Complex64::new(factor * a0 * a0 * xi2, 0.0);
                let c1 = Complex64::new(factor * 2.0 * a0 * a1 * xi2, a * xi);
                let c2 = Complex64::new(factor * a1 * a1 * xi2, 0.0);
                Ok(Some([c0, c1, c2]))
            }
            Kind::Gou { driver_u, driver_l } => {
                if !driver_u.is_quadratic() {
                    return Ok(None);
                }
                let psi_l = driver_l.exponent_with(&xiv, cfg)?;
                let ell = driver_u.drift()[0];
                let q = driver_u.gaussian()[(0, 0)];
                // ψ_U(xξ) = −iℓ·xξ + ½Q·x²ξ²
                Ok(Some([
                    psi_l,
                    Complex64::new(0.0, -ell * xi),
                    Complex64::new(0.5 * q * xi * xi, 0.0),
                ]))
            }
            Kind::Characteristics(chars) => {
                if chars.has_jumps() {
                    return Ok(None);
                }
                let (Some(lp), Some(qp)) = (&chars.ell_poly, &chars.q_poly) else {
                    return Ok(None);
                };
                if lp.len() > 3 || qp.len() > 3 {
                    return Ok(None);
                }
                let mut c = [zero; 3];
                for (k, &lk) in lp.iter().enumerate() {
                    c[k] += Complex64::new(0.0, -lk * xi);
                }
                for (k, &qk) in qp.iter().enumerate() {
                    c[k] += Complex64::new(0.5 * qk * xi * xi, 0.0);
                }
                Ok(Some(c))
            }
            Kind::Custom(_) => Ok(None),
        }
    }

    pub fn x_polynomial(&self, xi: f64) -> Result<Option<[Complex64; 3]>> {
        self.x_polynomial_with(xi, &QuadConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() <= tol, "{a} vs {b}");
    }

    #[test]
    fn characteristics_hand_value() {
        // ℓ(x) = −x, Q = 1, no jumps at (x,ξ) = (1,2): p = 2i + 2
        let chars = DifferentialCharacteristics::scalar(
            Coeff1::linear(0.0, -1.0),
            Coeff1::constant(1.0),
            None,
        );
        let sym = Symbol::from_characteristics(chars);
        close(sym.eval1(1.0, 2.0).unwrap(), Complex64::new(2.0, 2.0), 1e-14);
    }

    #[test]
    fn characteristics_state_dependent_atom() {
        // N(x,·) = atom at y=2 with mass |x| ∧ 1; χ(2) = 0
        let jumps: JumpField = Arc::new(|x: &DVector<f64>| {
            JumpMeasure::atoms_1d(&[(2.0, x[0].abs().clamp(1e-12, 1.0))])
        });
        let chars = DifferentialCharacteristics::scalar(
            Coeff1::constant(0.0),
            Coeff1::constant(0.0),
            Some(jumps),
        );
        let sym = Symbol::from_characteristics(chars);
        // p(1, π/2) = −(e^{iπ} − 1) = 2
        close(sym.eval1(1.0, PI / 2.0).unwrap(), Complex64::new(2.0, 0.0), 1e-12);
    }

    #[test]
    fn ou_type_brownian_hand_value() {
        let sym = Symbol::ou_type(
            1.0,
            MatrixMap::scalar_const(1.0),
            LevyTriplet::standard_bm(1),
        )
        .unwrap();
        close(sym.eval1(1.0, 1.0).unwrap(), Complex64::new(0.5, 1.0), 1e-15);
    }

    #[test]
    fn ou_type_stable_driver() {
        // p(x,ξ) = iλxξ + |ξ|^α
        let lambda = 0.7;
        let alpha = 1.4;
        let sym = Symbol::ou_type(
            lambda,
            MatrixMap::scalar_const(1.0),
            LevyTriplet::stable_1d(alpha, 1.0).unwrap(),
        )
        .unwrap();
        let p = sym.eval1(2.0, 1.5).unwrap();
        close(
            p,
            Complex64::new(1.5f64.powf(alpha), lambda * 2.0 * 1.5),
            1e-12,
        );
        // alpha <= 1 flags the moment hypothesis
        let flagged = Symbol::ou_type(
            1.0,
            MatrixMap::scalar_const(1.0),
            LevyTriplet::stable_1d(0.8, 1.0).unwrap(),
        )
        .unwrap();
        assert!(flagged.notes().iter().any(|n| n.contains("alpha <= 1")));
    }

    #[test]
    fn additive_kills_multiplicative_term() {
        // b=1, Φ≡0, Z = BM(Q=2): p(x,ξ) = ξ², x-independent
        let sym = Symbol::additive(
            1.0,
            MatrixMap::scalar_const(0.0),
            LevyTriplet::standard_bm(1),
            LevyTriplet::brownian_1d(2.0).unwrap(),
        )
        .unwrap();
        for &(x, xi) in &[(0.0, 1.0), (5.0, 1.0), (-3.0, 2.0)] {
            close(
                sym.eval1(x, xi).unwrap(),
                Complex64::new(xi * xi, 0.0),
                1e-14,
            );
        }
    }

    #[test]
    fn additive_stable_plus_gaussian_composition() {
        // symbol of dX = √(2a₁) dW + a₂ dZ-style noise with unit terms:
        // a₁ξ² + scale·|ξ|^α through additive composition
        let a1: f64 = 1.0;
        let alpha = 1.5;
        let scale = 0.9;
        let sym = Symbol::additive(
            1.0,
            MatrixMap::scalar_const((2.0 * a1).sqrt()),
            LevyTriplet::standard_bm(1),
            LevyTriplet::stable_1d(alpha, scale).unwrap(),
        )
        .unwrap();
        let xi = 1.3;
        close(
            sym.eval1(0.4, xi).unwrap(),
            Complex64::new(a1 * xi * xi + scale * xi.abs().powf(alpha), 0.0),
            1e-13,
        );
    }

    #[test]
    fn diffusion_conventions() {
        // canonical equals the OU symbol; paper mode doubles the Gaussian part
        let canonical = Symbol::diffusion(1.0, MatrixMap::scalar_const(1.0), Convention::Canonical);
        close(canonical.eval1(1.0, 1.0).unwrap(), Complex64::new(0.5, 1.0), 1e-15);

        // stochastic exponential in paper mode: p(x,ξ) = x²ξ²
        let stoch_exp = Symbol::diffusion(0.0, MatrixMap::scalar_linear(0.0, 1.0), Convention::Paper);
        close(stoch_exp.eval1(2.0, 3.0).unwrap(), Complex64::new(36.0, 0.0), 1e-12);
    }

    #[test]
    fn gou_deterministic_drift_matches_ou() {
        // U with drift −λ: ψ_U(u) = iλu, so p = iλxξ + ½σ²ξ²
        let lambda = 1.0;
        let sigma2 = 1.0;
        let gou = Symbol::gou(
            LevyTriplet::drift_1d(-lambda),
            LevyTriplet::brownian_1d(sigma2).unwrap(),
        )
        .unwrap();
        let ou = Symbol::ou_type(
            lambda,
            MatrixMap::scalar_const(1.0),
            LevyTriplet::brownian_1d(sigma2).unwrap(),
        )
        .unwrap();
        for &(x, xi) in &[(1.0, 1.0), (-0.3, 2.7), (2.0, -1.1)] {
            close(
                gou.eval1(x, xi).unwrap(),
                ou.eval1(x, xi).unwrap(),
                1e-12,
            );
        }
    }

    #[test]
    fn gou_degenerate_is_levy() {
        let gou = Symbol::gou(
            LevyTriplet::zero(1),
            LevyTriplet::brownian_1d(1.0).unwrap(),
        )
        .unwrap();
        let xi = 1.8;
        close(
            gou.eval1(42.0, xi).unwrap(),
            Complex64::new(0.5 * xi * xi, 0.0),
            1e-14,
        );
    }

    #[test]
    fn levy_constant_ignores_state() {
        let sym = Symbol::levy(LevyTriplet::brownian_1d(1.0).unwrap());
        close(sym.eval1(7.0, 2.0).unwrap(), Complex64::new(2.0, 0.0), 1e-14);
        close(
            sym.eval1(7.0, 2.0).unwrap(),
            sym.eval1(-100.0, 2.0).unwrap(),
            0.0,
        );
    }

    #[test]
    fn all_forms_vanish_at_zero_frequency() {
        let symbols = builtin_samples();
        for (name, sym) in &symbols {
            for &x in &[0.0, 1.0, -2.5] {
                let p = sym.eval1(x, 0.0).unwrap();
                assert_eq!(p, Complex64::new(0.0, 0.0), "{name} at x={x}");
            }
        }
    }

    #[test]
    fn all_forms_hermitian_nonnegative() {
        let symbols = builtin_samples();
        for (name, sym) in &symbols {
            for k in -7..=7 {
                let xi = 0.61 * k as f64;
                for &x in &[0.0, 0.8, -1.7] {
                    let p = sym.eval1(x, xi).unwrap();
                    let pm = sym.eval1(x, -xi).unwrap();
                    assert!(p.re >= -1e-10, "{name}: Re p({x},{xi}) = {}", p.re);
                    assert!((pm - p.conj()).norm() < 1e-12, "{name} at ({x},{xi})");
                }
            }
        }
    }

    #[test]
    fn cross_construction_ou_vs_diffusion() {
        let phi = MatrixMap::scalar_linear(0.4, 0.3);
        let ou = Symbol::ou_type(0.9, phi.clone(), LevyTriplet::standard_bm(1)).unwrap();
        let diff = Symbol::diffusion(0.9, phi, Convention::Canonical);
        for &(x, xi) in &[(0.0, 1.0), (1.2, -2.3), (-0.7, 0.4)] {
            close(ou.eval1(x, xi).unwrap(), diff.eval1(x, xi).unwrap(), 1e-12);
        }
    }

    #[test]
    fn cross_construction_characteristics_vs_diffusion() {
        // ℓ(x) = −ax, Q(x) = Φ(x)² with Φ = c: characteristics equal diffusion
        let a = 1.3;
        let c = 0.8;
        let chars = DifferentialCharacteristics::scalar(
            Coeff1::linear(0.0, -a),
            Coeff1::constant(c * c),
            None,
        );
        let from_chars = Symbol::from_characteristics(chars);
        let diff = Symbol::diffusion(a, MatrixMap::scalar_const(c), Convention::Canonical);
        for &(x, xi) in &[(0.5, 1.5), (-2.0, 0.7), (3.0, -3.0)] {
            close(
                from_chars.eval1(x, xi).unwrap(),
                diff.eval1(x, xi).unwrap(),
                1e-12,
            );
        }
    }

    #[test]
    fn polynomial_decomposition_matches_eval() {
        let symbols = builtin_samples();
        for (name, sym) in &symbols {
            for &xi in &[0.0, 0.9, -2.2] {
                if let Some([c0, c1, c2]) = sym.x_polynomial(xi).unwrap() {
                    for &x in &[0.0, 1.0, -1.4, 2.6] {
                        let poly = c0 + c1 * x + c2 * x * x;
                        let direct = sym.eval1(x, xi).unwrap();
                        assert!(
                            (poly - direct).norm() < 1e-11,
                            "{name} at ({x},{xi}): {poly} vs {direct}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let sym = Symbol::ornstein_uhlenbeck(1.0, 1.0, Convention::Canonical);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let xi = DVector::from_element(1, 1.0);
        assert!(sym.eval(&x, &xi).is_err());
        assert!(Symbol::gou(
            LevyTriplet::standard_bm(2),
            LevyTriplet::standard_bm(2)
        )
        .is_err());
    }

    fn builtin_samples() -> Vec<(&'static str, Symbol)> {
        vec![
            (
                "ou-bm",
                Symbol::ou_type(
                    1.0,
                    MatrixMap::scalar_const(1.0),
                    LevyTriplet::standard_bm(1),
                )
                .unwrap(),
            ),
            (
                "ou-atoms",
                Symbol::ou_type(
                    0.5,
                    MatrixMap::scalar_const(0.7),
                    LevyTriplet::scalar(0.0, 0.3, JumpMeasure::atoms_1d(&[(0.4, 1.0), (-2.0, 0.2)]))
                        .unwrap(),
                )
                .unwrap(),
            ),
            (
                "ou-stable",
                Symbol::ou_type(
                    1.0,
                    MatrixMap::scalar_const(1.0),
                    LevyTriplet::stable_1d(1.5, 1.0).unwrap(),
                )
                .unwrap(),
            ),
            (
                "additive",
                Symbol::additive(
                    0.8,
                    MatrixMap::scalar_linear(0.2, 0.1),
                    LevyTriplet::standard_bm(1),
                    LevyTriplet::brownian_1d(2.0).unwrap(),
                )
                .unwrap(),
            ),
            (
                "diffusion-canonical",
                Symbol::diffusion(1.0, MatrixMap::scalar_linear(0.3, 0.5), Convention::Canonical),
            ),
            (
                "diffusion-paper",
                Symbol::diffusion(0.0, MatrixMap::scalar_linear(0.0, 1.0), Convention::Paper),
            ),
            (
                "gou",
                Symbol::gou(
                    LevyTriplet::scalar(-1.0, 0.4, JumpMeasure::None).unwrap(),
                    LevyTriplet::brownian_1d(1.0).unwrap(),
                )
                .unwrap(),
            ),
            ("levy-bm", Symbol::levy(LevyTriplet::brownian_1d(1.0).unwrap())),
            ("zero", Symbol::zero(1)),
            (
                "characteristics",
                Symbol::from_characteristics(DifferentialCharacteristics::scalar(
                    Coeff1::linear(0.1, -0.9),
                    Coeff1::polynomial(vec![0.5, 0.0, 0.2]),
                    None,
                )),
            ),
        ]
    }

    #[test]
    fn coeff1_polynomial_eval() {
        let c = Coeff1::polynomial(vec![1.0, -2.0, 3.0]);
        assert_abs_diff_eq!(c.eval(2.0), 1.0 - 4.0 + 12.0, epsilon = 1e-14);
    }
}
