//! The TOML experiment file.
//!
//! ```toml
//! schema = 1
//! seed = 42
//! t_values = [2000.0]
//! replications = 10000
//! compute_stress = false
//!
//! [window]
//! kind = "cube"        # or "ball"
//! dim = 3
//!
//! [plane]              # optional, defaults to the first two axes
//! axes = [0, 1]        # or: basis = [[...], [...]]
//!
//! [regime]
//! kind = "sparse"      # "thermodynamic" or "explicit" (with `delta`)
//! c = 4.14
//!
//! [[regions]]
//! kind = "rectangle"
//! lo = [0.0, 0.0]
//! hi = [0.5, 0.5]
//!
//! [tests]              # optional
//! level = 0.01
//! ```

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use projrgg::stats::ExperimentConfig;
use projrgg::theory::S1Quadrature;
use projrgg::{ProjectionPlane, Regime, Region2, StressWeight, Window, WindowKind};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    pub seed: u64,
    pub t_values: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub compute_stress: bool,
    pub window: WindowSection,
    #[serde(default)]
    pub plane: Option<PlaneSection>,
    pub regime: Regime,
    #[serde(default)]
    pub weight: StressWeight,
    #[serde(default)]
    pub regions: Vec<Region2>,
    #[serde(default)]
    pub tests: TestSettings,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub kind: WindowKind,
    pub dim: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSection {
    #[serde(default)]
    pub axes: Option<[usize; 2]>,
    #[serde(default)]
    pub basis: Option<[Vec<f64>; 2]>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TestSettings {
    /// Significance level of every test (overridden by `--level`).
    pub level: f64,
    /// Relative slack on per-region intensity references.
    pub intensity_slack: f64,
    /// Relative slack on `(Σ₁₁, Σ₁₂, Σ₂₂)` in the CLT covariance check.
    pub sigma_tolerance: [f64; 3],
    /// Cells per axis for planar fiber integrals.
    pub quadrature_cells: usize,
    pub s1_outer_per_axis: usize,
    pub s1_inner_points: usize,
}

impl Default for TestSettings {
    fn default() -> Self {
        let s1 = S1Quadrature::default();
        Self {
            level: 0.01,
            intensity_slack: 0.05,
            sigma_tolerance: [0.10, 0.15, 0.10],
            quadrature_cells: 1024,
            s1_outer_per_axis: s1.outer_per_axis,
            s1_inner_points: s1.inner_points,
        }
    }
}

impl TestSettings {
    fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            bail!("tests.level: must lie in (0, 1), got {}", self.level);
        }
        if !(self.intensity_slack >= 0.0) {
            bail!("tests.intensity_slack: must be non-negative");
        }
        if self.sigma_tolerance.iter().any(|x| !(*x >= 0.0)) {
            bail!("tests.sigma_tolerance: entries must be non-negative");
        }
        if self.quadrature_cells == 0 || self.s1_outer_per_axis == 0 || self.s1_inner_points == 0 {
            bail!("tests: quadrature sizes must be positive");
        }
        Ok(())
    }

    pub fn s1_quadrature(&self) -> S1Quadrature {
        S1Quadrature { outer_per_axis: self.s1_outer_per_axis, inner_points: self.s1_inner_points }
    }
}

/// A parsed and validated configuration, with the text it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub text: String,
    pub experiment: ExperimentConfig,
}

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).context("invalid configuration")?;
        if file.schema != SCHEMA {
            bail!("schema: unsupported version {} (expected {SCHEMA})", file.schema);
        }
        file.tests.validate()?;
        let window = Window::new(file.window.kind, file.window.dim).context("window")?;
        let plane = match &file.plane {
            None => ProjectionPlane::coordinate(file.window.dim),
            Some(PlaneSection { axes: Some([i, j]), basis: None }) => {
                ProjectionPlane::axes(file.window.dim, *i, *j).context("plane.axes")?
            }
            Some(PlaneSection { axes: None, basis: Some([b1, b2]) }) => {
                ProjectionPlane::from_basis(b1.clone(), b2.clone()).context("plane.basis")?
            }
            Some(_) => bail!("plane: give exactly one of `axes` or `basis`"),
        };
        let experiment = ExperimentConfig {
            window,
            plane,
            regime: file.regime,
            t_values: file.t_values.clone(),
            replications: file.replications,
            regions: file.regions.clone(),
            seed: file.seed,
            weight: file.weight.clone(),
            compute_stress: file.compute_stress,
        };
        experiment.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(Self { file, text: text.to_owned(), experiment })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }
}
