//! Strict TOML run configuration.
//!
//! ```toml
//! [problem]
//! k = 0.9
//! theta = 0.0            # degrees, d = (sin θ, −cos θ)
//!
//! [problem.contrast]
//! shape = "slab"         # slab | two-layer | rectangle | circle | raster
//! h = 0.5
//! q = 3.0                # real, [re, im], or { q11, q12, q22 }
//!
//! [numerics]
//! n1 = 64
//! n2 = 64
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected before any computation.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Raster;
use crate::problem::{build_problem, default_box_height, ContrastField, Grid, IncidentWave, Problem};
use crate::solver::SolveOptions;
use crate::tensor::Sym2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub k: f64,
    /// Incidence angle in degrees.
    pub theta: f64,
    pub contrast: ContrastConfig,
}

/// A complex number written as a real or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(x) => Complex64::new(x, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorValue {
    pub q11: ComplexValue,
    #[serde(default = "zero_value")]
    pub q12: ComplexValue,
    pub q22: ComplexValue,
}

fn zero_value() -> ComplexValue {
    ComplexValue::Real(0.0)
}

/// Contrast matrix entries: a scalar multiple of the identity or a full symmetric tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixValue {
    Scalar(ComplexValue),
    Tensor(TensorValue),
}

impl MatrixValue {
    pub fn value(self) -> Sym2 {
        match self {
            MatrixValue::Scalar(q) => Sym2::scalar(q.value()),
            MatrixValue::Tensor(t) => Sym2::new(t.q11.value(), t.q12.value(), t.q22.value()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContrastConfig {
    Slab { h: f64, q: MatrixValue },
    TwoLayer { h: f64, upper: MatrixValue, lower: MatrixValue },
    Rectangle { h: f64, half_width: f64, q: MatrixValue },
    Circle { center: [f64; 2], radius: f64, q: MatrixValue },
    /// Path relative to the configuration file.
    Raster { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub n1: usize,
    pub n2: usize,
    pub rho_box: Option<f64>,
    pub rho_ref: Option<f64>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default)]
    pub dealias: bool,
}

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_max_iterations() -> usize {
    500
}

fn default_restart() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory, relative to the configuration file.
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File-name prefix; defaults to the configuration file stem.
    pub prefix: Option<String>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: default_dir(), prefix: None, formats: default_formats() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// The user vouches for smoothness of `sqrt|q|` and of the support boundary.
    #[serde(default)]
    pub smoothness_asserted: bool,
}

/// A parsed configuration together with the directory relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    pub stem: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LoadedConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = RunConfig::parse(&text)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
        Ok(LoadedConfig { config, base_dir, stem })
    }

    /// Range checks that do not need the contrast itself.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !p.theta.is_finite() || p.theta.abs() >= 90.0 {
            return Err(Error::Config(format!("theta must lie in (−90°, 90°), got {}", p.theta)));
        }
        let n = &self.numerics;
        for (name, v) in [("n1", n.n1), ("n2", n.n2)] {
            if v < 2 || v % 2 != 0 {
                return Err(Error::Config(format!("numerics.{name} must be even and at least 2, got {v}")));
            }
        }
        if self.output.formats.is_empty() {
            return Err(Error::Config("output.formats must name at least one format".into()));
        }
        self.solve_options().validate()
    }

    pub fn wave(&self) -> Result<IncidentWave> {
        IncidentWave::from_angle(self.problem.k, self.problem.theta.to_radians())
    }

    pub fn solve_options(&self) -> SolveOptions {
        let n = &self.numerics;
        SolveOptions {
            rel_tol: n.rel_tol,
            max_iterations: n.max_iterations,
            restart: n.restart,
            record_residuals: true,
            dealias: n.dealias,
        }
    }

    pub fn contrast(&self, base_dir: &Path) -> Result<ContrastField> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        Ok(match &self.problem.contrast {
            ContrastConfig::Slab { h, q } => {
                positive("h", *h)?;
                ContrastField::slab(*h, q.value())
            }
            ContrastConfig::TwoLayer { h, upper, lower } => {
                positive("h", *h)?;
                ContrastField::two_layer(*h, upper.value(), lower.value())
            }
            ContrastConfig::Rectangle { h, half_width, q } => {
                positive("h", *h)?;
                positive("half_width", *half_width)?;
                ContrastField::rectangle(*half_width, *h, q.value())
            }
            ContrastConfig::Circle { center, radius, q } => {
                positive("radius", *radius)?;
                ContrastField::circle(*center, *radius, q.value())
            }
            ContrastConfig::Raster { path } => {
                let full = base_dir.join(path);
                Raster::load(&full)
                    .map_err(|e| Error::Config(format!("raster {}: {e}", full.display())))?
                    .to_contrast()?
            }
        })
    }

    /// Builds the discrete problem: wave, contrast, grid and reference height.
    pub fn build(&self, base_dir: &Path) -> Result<Problem> {
        let wave = self.wave()?;
        let contrast = self.contrast(base_dir)?;
        let n = &self.numerics;
        let rho = n.rho_box.unwrap_or_else(|| default_box_height(n.n2, contrast.half_height()));
        let grid = Grid::new(n.n1, n.n2, rho)?;
        let problem = build_problem(wave, contrast, grid)?;
        match n.rho_ref {
            Some(r) => problem.with_reference_height(r),
            None => Ok(problem),
        }
    }
}

impl LoadedConfig {
    pub fn build(&self) -> Result<Problem> {
        self.config.build(&self.base_dir)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.config.output.dir)
    }

    pub fn prefix(&self) -> &str {
        self.config.output.prefix.as_deref().unwrap_or(&self.stem)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.config.output.formats.contains(&f)
    }
}
