//! TOML process/measure spec files: the portable surface the CLI consumes.
//!
//! A spec document has tables `[process]`, `[measure]`, `[grid]`,
//! `[quadrature]`, `[simulate]`, `[mode]`, `[criterion]` and `[fit]`.
//! Unknown keys are rejected; coefficient functions are expression strings
//! in `x` parsed by [`crate::expr`]. `normalize` materializes every default
//! so a printed spec re-validates to an identical document.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

use crate::criterion::CriterionConfig;
use crate::diffusion::Diffusion1D;
use crate::error::Result;
use crate::expr::{self, Expr};
use crate::fit::{FitOptions, FitProblem, MeasureFamily, Objective};
use crate::levy::{JumpMeasure, LevyTriplet};
use crate::measure::Measure;
use crate::quad::QuadConfig;
use crate::simulate::SdeSpec;
use crate::symbol::{Coeff1, Convention, DifferentialCharacteristics, MatrixMap, Symbol};

/// Validation or parse failure of a process spec, with position context
/// where available.
#[derive(Debug, Error)]
#[error("{message}{}", location.as_ref().map(|l| format!(" (at {l})")).unwrap_or_default())]
pub struct SpecError {
    pub message: String,
    pub location: Option<String>,
}

impl SpecError {
    pub fn new(message: impl Into<String>) -> Self {
        SpecError {
            message: message.into(),
            location: None,
        }
    }

    pub fn located(message: impl Into<String>, location: impl Into<String>) -> Self {
        SpecError {
            message: message.into(),
            location: Some(location.into()),
        }
    }
}

fn spec_err<T>(message: impl Into<String>) -> std::result::Result<T, SpecError> {
    Err(SpecError::new(message))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Levy,
    Ou,
    Sde,
    Additive,
    Diffusion1d,
    Gou,
    Characteristics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKindTag {
    Gaussian,
    Density,
    Samples,
    Dirac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionTag {
    Canonical,
    Paper,
}

impl From<ConventionTag> for Convention {
    fn from(tag: ConventionTag) -> Convention {
        match tag {
            ConventionTag::Canonical => Convention::Canonical,
            ConventionTag::Paper => Convention::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveTag {
    Sup,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StableTable {
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// A Lévy triplet on the CLI surface (one-dimensional).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable: Option<StableTable>,
}

impl DriverTable {
    fn build(&self, context: &str) -> std::result::Result<LevyTriplet, SpecError> {
        let jumps = match (&self.atoms, &self.stable) {
            (Some(_), Some(_)) => {
                return spec_err(format!(
                    "{context}: `atoms` and `stable` are mutually exclusive"
                ))
            }
            (Some(atoms), None) => {
                JumpMeasure::atoms_1d(&atoms.iter().map(|a| (a[0], a[1])).collect::<Vec<_>>())
            }
            (None, Some(stable)) => JumpMeasure::stable(stable.alpha, stable.scale.unwrap_or(1.0)),
            (None, None) => JumpMeasure::None,
        };
        LevyTriplet::scalar(self.ell.unwrap_or(0.0), self.q.unwrap_or(0.0), jumps)
            .map_err(|e| SpecError::new(format!("{context}: {e}")))
    }

    fn normalized(&self) -> DriverTable {
        DriverTable {
            ell: Some(self.ell.unwrap_or(0.0)),
            q: Some(self.q.unwrap_or(0.0)),
            atoms: self.atoms.clone(),
            stable: self.stable.as_ref().map(|s| StableTable {
                alpha: s.alpha,
                scale: Some(s.scale.unwrap_or(1.0)),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessTable {
    pub kind: ProcessKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Φ(x) for `sde`/`additive`, σ(x) for `diffusion1d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    /// Drift expression: b(x) for `diffusion1d`, ℓ(x) for `characteristics`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_drift: Option<String>,
    /// Q(x) for `characteristics`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_expr: Option<String>,
    /// State interval for `diffusion1d` (defaults to the whole line).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver: Option<DriverTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver_z: Option<DriverTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver_u: Option<DriverTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver_l: Option<DriverTable>,
    /// x-independent jump measure for `characteristics`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jumps: Option<DriverTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureTable {
    pub kind: MeasureKindTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<[f64; 2]>,
    /// Rescale the density expression by its computed mass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionTag>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitTable {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fix_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveTag>,
}

/// A parsed, validated process spec document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpecFile {
    pub process: ProcessTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitTable>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let clamped = offset.min(src.len());
    let mut line = 1;
    let mut col = 1;
    for (i, c) in src.char_indices() {
        if i >= clamped {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn parse_expr_key(
    src: &Option<String>,
    key: &str,
    kind: &str,
) -> std::result::Result<Option<Expr>, SpecError> {
    match src {
        None => Ok(None),
        Some(text) => expr::parse(text).map(Some).map_err(|e| {
            SpecError::located(
                format!("[process] {key} for kind `{kind}`: {}", e.message),
                format!("expression byte {}", e.position),
            )
        }),
    }
}

impl ProcessSpecFile {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(src: &str) -> std::result::Result<Self, SpecError> {
        let spec: ProcessSpecFile = toml::from_str(src).map_err(|e| {
            let location = e.span().map(|s| {
                let (line, col) = line_col(src, s.start);
                format!("line {line}, column {col}")
            });
            SpecError {
                message: e.message().to_string(),
                location,
            }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> std::result::Result<Self, SpecError> {
        let src = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SpecError::new(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&src)
    }

    /// Serializes with every default materialized; the output re-validates
    /// to an identical document.
    pub fn to_normalized_toml(&self) -> std::result::Result<String, SpecError> {
        toml::to_string_pretty(&self.normalize())
            .map_err(|e| SpecError::new(format!("serialization failed: {e}")))
    }

    /// Fills in defaults for every optional table and key.
    pub fn normalize(&self) -> Self {
        let mut spec = self.clone();
        let grid = spec.grid.take().unwrap_or_default();
        spec.grid = Some(GridTable {
            xi_min: Some(grid.xi_min.unwrap_or(-5.0)),
            xi_max: Some(grid.xi_max.unwrap_or(5.0)),
            n: Some(grid.n.unwrap_or(101)),
        });
        let quad = spec.quadrature.take().unwrap_or_default();
        spec.quadrature = Some(QuadratureTable {
            rel_tol: Some(quad.rel_tol.unwrap_or(1e-9)),
        });
        let sim = spec.simulate.take().unwrap_or_default();
        spec.simulate = Some(SimulateTable {
            t: Some(sim.t.unwrap_or(1.0)),
            dt: Some(sim.dt.unwrap_or(0.01)),
            n_paths: Some(sim.n_paths.unwrap_or(10_000)),
            burn_in: Some(sim.burn_in.unwrap_or(10.0)),
            seed: Some(sim.seed.unwrap_or(42)),
            x0: Some(sim.x0.unwrap_or(0.0)),
            n_samples: sim.n_samples,
            sample_gap: sim.sample_gap,
        });
        let mode = spec.mode.take().unwrap_or_default();
        spec.mode = Some(ModeTable {
            convention: Some(mode.convention.unwrap_or(ConventionTag::Canonical)),
        });
        let criterion = spec.criterion.take().unwrap_or_default();
        spec.criterion = Some(CriterionTable {
            tolerance: Some(criterion.tolerance.unwrap_or(1e-6)),
        });
        let fit = spec.fit.take().unwrap_or_default();
        spec.fit = Some(FitTable {
            fix_mean: Some(fit.fix_mean.unwrap_or(0.0)),
            v_min: Some(fit.v_min.unwrap_or(0.01)),
            v_max: Some(fit.v_max.unwrap_or(10.0)),
            max_iter: Some(fit.max_iter.unwrap_or(500)),
            tol: Some(fit.tol.unwrap_or(1e-10)),
            restarts: Some(fit.restarts.unwrap_or(5)),
            objective: Some(fit.objective.unwrap_or(ObjectiveTag::Sup)),
        });
        spec.process.driver = spec.process.driver.as_ref().map(DriverTable::normalized);
        spec.process.driver_z = spec.process.driver_z.as_ref().map(DriverTable::normalized);
        spec.process.driver_u = spec.process.driver_u.as_ref().map(DriverTable::normalized);
        spec.process.driver_l = spec.process.driver_l.as_ref().map(DriverTable::normalized);
        spec.process.jumps = spec.process.jumps.as_ref().map(DriverTable::normalized);
        spec
    }

    fn validate(&self) -> std::result::Result<(), SpecError> {
        let p = &self.process;
        let kind_name = format!("{:?}", p.kind).to_lowercase();
        let need = |cond: bool, what: &str| -> std::result::Result<(), SpecError> {
            if cond {
                Ok(())
            } else {
                spec_err(format!("[process] kind `{kind_name}` requires {what}"))
            }
        };
        match p.kind {
            ProcessKind::Levy => need(p.driver.is_some(), "a [process.driver] table")?,
            ProcessKind::Ou => {
                need(p.lambda.is_some(), "`lambda`")?;
                need(p.sigma.is_some(), "`sigma`")?;
                if !(p.lambda.unwrap() > 0.0) {
                    return spec_err("[process] `lambda` must be positive");
                }
            }
            ProcessKind::Sde => {
                need(p.a.is_some(), "`a`")?;
                need(p.phi.is_some(), "`phi`")?;
                need(p.driver.is_some(), "a [process.driver] table")?;
            }
            ProcessKind::Additive => {
                need(p.b.is_some(), "`b`")?;
                need(p.phi.is_some(), "`phi`")?;
                need(p.driver.is_some(), "a [process.driver] table (L)")?;
                need(p.driver_z.is_some(), "a [process.driver_z] table (Z)")?;
            }
            ProcessKind::Diffusion1d => {
                need(p.b_drift.is_some(), "`b_drift`")?;
                need(p.phi.is_some(), "`phi` (the sigma expression)")?;
            }
            ProcessKind::Gou => {
                need(p.driver_u.is_some(), "a [process.driver_u] table")?;
                need(p.driver_l.is_some(), "a [process.driver_l] table")?;
            }
            ProcessKind::Characteristics => {
                need(p.b_drift.is_some(), "`b_drift` (the ell expression)")?;
                need(p.q_expr.is_some(), "`q_expr`")?;
            }
        }
        parse_expr_key(&p.phi, "phi", &kind_name)?;
        parse_expr_key(&p.b_drift, "b_drift", &kind_name)?;
        parse_expr_key(&p.q_expr, "q_expr", &kind_name)?;
        if let Some([lo, hi]) = p.support {
            if !(lo < hi) {
                return spec_err(format!("[process] support [{lo}, {hi}] is empty"));
            }
        }
        for (table, name) in [
            (&p.driver, "driver"),
            (&p.driver_z, "driver_z"),
            (&p.driver_u, "driver_u"),
            (&p.driver_l, "driver_l"),
            (&p.jumps, "jumps"),
        ] {
            if let Some(t) = table {
                t.build(&format!("[process.{name}]"))?;
            }
        }

        if let Some(m) = &self.measure {
            match m.kind {
                MeasureKindTag::Gaussian => {
                    if m.variance.is_none() {
                        return spec_err("[measure] gaussian requires `variance`");
                    }
                    if !(m.variance.unwrap() > 0.0) {
                        return spec_err("[measure] `variance` must be positive");
                    }
                }
                MeasureKindTag::Density => {
                    if m.density.is_none() || m.support.is_none() {
                        return spec_err("[measure] density requires `density` and `support`");
                    }
                    expr::parse(m.density.as_ref().unwrap()).map_err(|e| {
                        SpecError::located(
                            format!("[measure] density: {}", e.message),
                            format!("expression byte {}", e.position),
                        )
                    })?;
                    let [lo, hi] = m.support.unwrap();
                    if !(lo < hi) {
                        return spec_err(format!("[measure] support [{lo}, {hi}] is empty"));
                    }
                }
                MeasureKindTag::Samples => {
                    if m.file.is_none() {
                        return spec_err("[measure] samples requires `file`");
                    }
                }
                MeasureKindTag::Dirac => {
                    if m.at.is_none() {
                        return spec_err("[measure] dirac requires `at`");
                    }
                }
            }
        }

        if let Some(g) = &self.grid {
            let lo = g.xi_min.unwrap_or(-5.0);
            let hi = g.xi_max.unwrap_or(5.0);
            if !(lo < hi) {
                return spec_err(format!("[grid] xi range [{lo}, {hi}] is empty"));
            }
            if g.n == Some(0) {
                return spec_err("[grid] n must be at least 1");
            }
        }
        if let Some(q) = &self.quadrature {
            if let Some(r) = q.rel_tol {
                if !(r > 0.0 && r < 1.0) {
                    return spec_err(format!("[quadrature] rel_tol {r} out of (0, 1)"));
                }
            }
        }
        if let Some(c) = &self.criterion {
            if let Some(t) = c.tolerance {
                if !(t > 0.0) {
                    return spec_err(format!("[criterion] tolerance {t} must be positive"));
                }
            }
        }
        if let Some(f) = &self.fit {
            let v_min = f.v_min.unwrap_or(0.01);
            let v_max = f.v_max.unwrap_or(10.0);
            if !(v_min > 0.0 && v_min < v_max) {
                return spec_err(format!("[fit] variance box [{v_min}, {v_max}] is invalid"));
            }
        }
        Ok(())
    }

    pub fn convention(&self) -> Convention {
        self.mode
            .as_ref()
            .and_then(|m| m.convention)
            .unwrap_or(ConventionTag::Canonical)
            .into()
    }

    pub fn grid_points(&self) -> Vec<f64> {
        let g = self.grid.clone().unwrap_or_default();
        crate::criterion::linspace(
            g.xi_min.unwrap_or(-5.0),
            g.xi_max.unwrap_or(5.0),
            g.n.unwrap_or(101),
        )
    }

    pub fn quad_config(&self) -> QuadConfig {
        QuadConfig::with_rel_tol(
            self.quadrature
                .as_ref()
                .and_then(|q| q.rel_tol)
                .unwrap_or(1e-9),
        )
    }

    pub fn criterion_config(&self) -> CriterionConfig {
        CriterionConfig {
            tolerance: self
                .criterion
                .as_ref()
                .and_then(|c| c.tolerance)
                .unwrap_or(1e-6),
            quad: self.quad_config(),
            resolution: 1,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.criterion_config().tolerance
    }

    /// The probabilistic symbol of the declared process under the declared
    /// convention.
    pub fn build_symbol(&self) -> Result<Symbol> {
        let p = &self.process;
        let convention = self.convention();
        let symbol = match p.kind {
            ProcessKind::Levy => {
                Symbol::levy(p.driver.as_ref().expect("validated").build("[process.driver]")?)
            }
            ProcessKind::Ou => Symbol::ornstein_uhlenbeck(
                p.lambda.expect("validated"),
                p.sigma.expect("validated"),
                convention,
            ),
            ProcessKind::Sde => {
                let phi = expr_to_matrix_map(p.phi.as_deref().expect("validated"))?;
                let driver = p.driver.as_ref().expect("validated").build("[process.driver]")?;
                Symbol::ou_type(p.a.expect("validated"), phi, driver)?
            }
            ProcessKind::Additive => {
                let phi = expr_to_matrix_map(p.phi.as_deref().expect("validated"))?;
                let l = p.driver.as_ref().expect("validated").build("[process.driver]")?;
                let z = p
                    .driver_z
                    .as_ref()
                    .expect("validated")
                    .build("[process.driver_z]")?;
                Symbol::additive(p.b.expect("validated"), phi, l, z)?
            }
            ProcessKind::Diffusion1d => {
                let b = expr_to_coeff(p.b_drift.as_deref().expect("validated"))?;
                let sigma_expr =
                    expr::parse(p.phi.as_deref().expect("validated")).expect("validated");
                let q = sigma_squared_coeff(&sigma_expr, convention);
                Symbol::from_characteristics(DifferentialCharacteristics::scalar(b, q, None))
            }
            ProcessKind::Gou => {
                let u = p
                    .driver_u
                    .as_ref()
                    .expect("validated")
                    .build("[process.driver_u]")?;
                let l = p
                    .driver_l
                    .as_ref()
                    .expect("validated")
                    .build("[process.driver_l]")?;
                Symbol::gou(u, l)?
            }
            ProcessKind::Characteristics => {
                let ell = expr_to_coeff(p.b_drift.as_deref().expect("validated"))?;
                let q = expr_to_coeff(p.q_expr.as_deref().expect("validated"))?;
                let jumps = match &p.jumps {
                    Some(j) => {
                        let triplet = j.build("[process.jumps]")?;
                        let measure = triplet.jumps().clone();
                        Some(Arc::new(move |_: &DVector<f64>| measure.clone())
                            as Arc<dyn Fn(&DVector<f64>) -> JumpMeasure + Send + Sync>)
                    }
                    None => None,
                };
                Symbol::from_characteristics(DifferentialCharacteristics::scalar(ell, q, jumps))
            }
        };
        Ok(symbol)
    }

    /// The candidate measure, if a `[measure]` table is present. Sample files
    /// resolve relative to `base_dir`.
    pub fn build_measure(&self, base_dir: &Path) -> Result<Option<Measure>> {
        let Some(m) = &self.measure else {
            return Ok(None);
        };
        let measure = match m.kind {
            MeasureKindTag::Gaussian => {
                Measure::gaussian(m.mean.unwrap_or(0.0), m.variance.expect("validated"))?
            }
            MeasureKindTag::Density => {
                let e = expr::parse(m.density.as_deref().expect("validated")).expect("validated");
                let [lo, hi] = m.support.expect("validated");
                let f = move |x: f64| e.eval(x);
                if m.normalize.unwrap_or(false) {
                    Measure::density_normalized(f, lo, hi)?
                } else {
                    Measure::density(f, lo, hi)?
                }
            }
            MeasureKindTag::Samples => {
                let file = m.file.as_deref().expect("validated");
                Measure::samples_from_csv(base_dir.join(file))?
            }
            MeasureKindTag::Dirac => Measure::dirac_1d(m.at.expect("validated"))?,
        };
        Ok(Some(measure))
    }

    /// Simulation coefficients for the declared process.
    pub fn build_sde(&self) -> Result<SdeSpec> {
        let p = &self.process;
        Ok(match p.kind {
            ProcessKind::Levy => {
                // dX = dL
                let driver = p.driver.as_ref().expect("validated").build("[process.driver]")?;
                SdeSpec::new(0.0, MatrixMap::scalar_const(1.0), driver)?
            }
            ProcessKind::Ou => SdeSpec::ornstein_uhlenbeck(
                p.lambda.expect("validated"),
                p.sigma.expect("validated"),
            ),
            ProcessKind::Sde => SdeSpec::new(
                p.a.expect("validated"),
                expr_to_matrix_map(p.phi.as_deref().expect("validated"))?,
                p.driver.as_ref().expect("validated").build("[process.driver]")?,
            )?,
            ProcessKind::Additive => SdeSpec::new(
                0.0,
                expr_to_matrix_map(p.phi.as_deref().expect("validated"))?,
                p.driver.as_ref().expect("validated").build("[process.driver]")?,
            )?
            .with_additive(
                p.b.expect("validated"),
                p.driver_z
                    .as_ref()
                    .expect("validated")
                    .build("[process.driver_z]")?,
            )?,
            ProcessKind::Diffusion1d => {
                let b = expr::parse(p.b_drift.as_deref().expect("validated")).expect("validated");
                let sigma = expr_to_matrix_map(p.phi.as_deref().expect("validated"))?;
                SdeSpec::new(0.0, sigma, LevyTriplet::standard_bm(1))?
                    .with_extra_drift_1d(move |x| b.eval(x))
            }
            ProcessKind::Gou => {
                // dX = X₋ dU + dL
                let u = p
                    .driver_u
                    .as_ref()
                    .expect("validated")
                    .build("[process.driver_u]")?;
                let l = p
                    .driver_l
                    .as_ref()
                    .expect("validated")
                    .build("[process.driver_l]")?;
                SdeSpec::new(0.0, MatrixMap::scalar_linear(0.0, 1.0), u)?.with_additive(1.0, l)?
            }
            ProcessKind::Characteristics => {
                return Err(crate::error::Error::invalid(
                    "kind `characteristics` declares a symbol only; give an SDE form to simulate",
                ))
            }
        })
    }

    /// The diffusion coefficients for `diffusion1d` specs.
    pub fn build_diffusion(&self) -> Result<Diffusion1D> {
        let p = &self.process;
        if p.kind != ProcessKind::Diffusion1d {
            return Err(crate::error::Error::invalid(format!(
                "kind `{:?}` has no scale/speed-density machinery (need diffusion1d)",
                p.kind
            )));
        }
        let b = expr::parse(p.b_drift.as_deref().expect("validated")).expect("validated");
        let s = expr::parse(p.phi.as_deref().expect("validated")).expect("validated");
        let x0 = self.simulate.as_ref().and_then(|t| t.x0).unwrap_or(0.0);
        let (lo, hi) = match p.support {
            Some([lo, hi]) => (lo, hi),
            None => (f64::NEG_INFINITY, f64::INFINITY),
        };
        Diffusion1D::new(move |x| b.eval(x), move |x| s.eval(x), x0, lo, hi)
    }

    /// The fitting problem for the `fit` subcommand (Gaussian family).
    pub fn build_fit(&self) -> Result<(FitProblem, FitOptions)> {
        let f = self.fit.clone().unwrap_or_default();
        let problem = FitProblem {
            symbol: self.build_symbol()?,
            family: MeasureFamily::Gaussian {
                fixed_mean: Some(f.fix_mean.unwrap_or(0.0)),
            },
            grid: self.grid_points(),
            weights: None,
            objective: match f.objective.unwrap_or(ObjectiveTag::Sup) {
                ObjectiveTag::Sup => Objective::SupAbs,
                ObjectiveTag::L2 => Objective::L2,
            },
            bounds: vec![(f.v_min.unwrap_or(0.01), f.v_max.unwrap_or(10.0))],
        };
        let opts = FitOptions {
            max_iter: f.max_iter.unwrap_or(500),
            tol: f.tol.unwrap_or(1e-10),
            restarts: f.restarts.unwrap_or(5),
            seed: self
                .simulate
                .as_ref()
                .and_then(|s| s.seed)
                .unwrap_or(42),
        };
        Ok((problem, opts))
    }

    pub fn simulate_params(&self) -> SimulateTable {
        self.normalize().simulate.expect("normalized")
    }
}

fn expr_to_coeff(src: &str) -> Result<Coeff1> {
    let e = expr::parse(src)
        .map_err(|err| crate::error::Error::Spec(SpecError::new(err.to_string())))?;
    Ok(match e.poly_coeffs() {
        Some(coeffs) => Coeff1::polynomial(coeffs),
        None => Coeff1::function(move |x| e.eval(x)),
    })
}

fn expr_to_matrix_map(src: &str) -> Result<MatrixMap> {
    let e = expr::parse(src)
        .map_err(|err| crate::error::Error::Spec(SpecError::new(err.to_string())))?;
    Ok(match e.poly_coeffs() {
        Some(c) if c.len() == 1 => MatrixMap::scalar_const(c[0]),
        Some(c) if c.len() == 2 => MatrixMap::scalar_linear(c[0], c[1]),
        _ => MatrixMap::scalar_fn(move |x| e.eval(x)),
    })
}

/// Q(x) = σ(x)² (canonical) or 2σ(x)² (paper), keeping polynomial structure
/// when σ has it.
fn sigma_squared_coeff(sigma: &Expr, convention: Convention) -> Coeff1 {
    let factor = match convention {
        Convention::Canonical => 1.0,
        Convention::Paper => 2.0,
    };
    match sigma.poly_coeffs() {
        Some(p) if p.len() <= 2 => {
            let mut sq = vec![0.0; 2 * p.len() - 1];
            for (i, a) in p.iter().enumerate() {
                for (j, b) in p.iter().enumerate() {
                    sq[i + j] += factor * a * b;
                }
            }
            Coeff1::polynomial(sq)
        }
        _ => {
            let s = sigma.clone();
            Coeff1::function(move |x| {
                let v = s.eval(x);
                factor * v * v
            })
        }
    }
}
