use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_domain, make_partition, BoundingBox, CutSpec, Domain, Partition, ShapeSpec};
use crate::index::IndexParams;
use crate::operators::Model;
use crate::spectral::StepKind;

pub const SCHEMA_VERSION: u32 = 1;

fn schema() -> u32 {
    SCHEMA_VERSION
}

fn check_schema(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Config(format!("schema_version {v} unsupported; expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn bbox(size: [usize; 2]) -> BoundingBox {
    BoundingBox::new(size[0], size[1])
}

/// Options shared by every suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Window radius for index and current windows; the default is the whole Voronoi cell.
    #[serde(default)]
    pub window: Option<f64>,
    /// Overrides the tolerance of index and current assertions.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Number of seeded variants per deformation family in the cobordism suite.
    #[serde(default = "default_variants")]
    pub variants: usize,
}

fn default_seed() -> u64 {
    7
}

fn default_variants() -> usize {
    3
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { schema_version: SCHEMA_VERSION, seed: default_seed(), window: None, tolerance: None, variants: default_variants() }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        positive("window", self.window)?;
        positive("tolerance", self.tolerance)?;
        if self.variants == 0 {
            return Err(Error::Config("variants must be at least 1".into()));
        }
        Ok(())
    }
}

/// Torus spectrum and Chern numbers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BulkConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub model: Model,
    #[serde(default = "default_size")]
    pub size: [usize; 2],
    #[serde(default)]
    pub k_grid: Option<usize>,
}

fn default_size() -> [usize; 2] {
    [30, 30]
}

impl BulkConfig {
    pub fn validate(&self) -> Result<Domain> {
        check_schema(self.schema_version)?;
        let d = build_domain(&ShapeSpec::Torus, bbox(self.size))?;
        self.model.validate(&d)?;
        Ok(d)
    }

    pub fn k_grid(&self) -> usize {
        self.k_grid.unwrap_or((6 * self.model.flux.q as usize).max(24))
    }
}

/// Gap filling of a domain against its bulk torus.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub model: Model,
    pub shape: ShapeSpec,
    pub size: [usize; 2],
    #[serde(default = "default_size")]
    pub bulk_size: [usize; 2],
    /// Fill resolution as a fraction of each gap's width.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_resolution() -> f64 {
    0.05
}

impl DomainConfig {
    /// Returns `(domain, bulk torus)`.
    pub fn validate(&self) -> Result<(Domain, Domain)> {
        check_schema(self.schema_version)?;
        positive("resolution", Some(self.resolution))?;
        let d = build_domain(&self.shape, bbox(self.size))?;
        let t = build_domain(&ShapeSpec::Torus, bbox(self.bulk_size))?;
        self.model.validate(&d)?;
        self.model.validate(&t)?;
        Ok((d, t))
    }
}

/// Windowed relative index for one partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    #[serde(flatten)]
    pub model: Model,
    pub shape: ShapeSpec,
    pub size: [usize; 2],
    pub cut: CutSpec,
    #[serde(default = "default_gap")]
    pub gap_index: usize,
    #[serde(default)]
    pub kind: StepKind,
    #[serde(default)]
    pub window: Option<f64>,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Exchange `W₊` and `W₋`.
    #[serde(default)]
    pub swap: bool,
    /// Use `Π = I` instead of the indicator of `W₊` (current only).
    #[serde(default)]
    pub identity_projection: bool,
    /// Expected rounded values per crossing, checked when present.
    #[serde(default)]
    pub expected: Option<Vec<i64>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

/// The current command reads the same document.
pub type CurrentConfig = IndexConfig;

fn default_gap() -> usize {
    1
}

fn default_r_max() -> usize {
    2
}

fn default_tolerance() -> f64 {
    0.05
}

impl IndexConfig {
    pub fn validate(&self) -> Result<(Domain, Partition)> {
        check_schema(self.schema_version)?;
        positive("window", self.window)?;
        positive("tolerance", Some(self.tolerance))?;
        positive("threshold", self.threshold)?;
        if self.gap_index == 0 {
            return Err(Error::Config("gap_index is 1-based".into()));
        }
        let d = build_domain(&self.shape, bbox(self.size))?;
        self.model.validate(&d)?;
        let p = make_partition(&d, &self.cut)?;
        Ok((d, if self.swap { p.swap() } else { p }))
    }

    pub fn params(&self) -> IndexParams {
        IndexParams {
            gap_index: self.gap_index,
            kind: self.kind,
            window: self.window,
            r_max: self.r_max,
            threshold: self.threshold,
            ..IndexParams::default()
        }
    }
}
