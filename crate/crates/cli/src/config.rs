//! Scenario configuration: one JSON document naming algebras, families,
//! grids and the checks each subcommand runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pbam_core::asymptotic::{
    compression_family, exact_hom, perturbed_hom, toeplitz_family, trace_shift, uniform_times, Family,
};
use pbam_core::composition::TolSchedule;
use pbam_core::random::{random_element, random_hermitian, random_quasi_unitary, stream_rng, supported_quasi_unitary};
use pbam_core::unitary::QuasiUnitaryNet;
use pbam_core::{Algebra, Element, C64};
use serde::Deserialize;

use crate::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub algebras: BTreeMap<String, AlgebraSpec>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilySpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub verify_algebra: Vec<AlgebraCheckSpec>,
    #[serde(default)]
    pub funcalc: Vec<FuncalcSpec>,
    #[serde(default)]
    pub pbam: Vec<PbamSpec>,
    #[serde(default)]
    pub retract: Vec<RetractSpec>,
    #[serde(default)]
    pub compose: Vec<ComposeSpec>,
    #[serde(default)]
    pub functoriality: Vec<FunctorialitySpec>,
    /// Directory of the config file; relative paths (baselines) resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    Matrix {
        dim: usize,
        #[serde(default)]
        tracial: bool,
        levels: Option<usize>,
    },
    Circle { degree_cap: usize, levels: usize },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Exact { algebra: String },
    Compression {
        algebra: String,
        #[serde(default = "one")]
        speed: f64,
    },
    Perturbed { algebra: String, rate: f64 },
    Toeplitz { circle: String, order: usize },
    TraceShift { algebra: String },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub t_step: f64,
    pub horizon: f64,
    pub s_step: Option<f64>,
    pub s_horizon: Option<f64>,
    pub p_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { t_step: 1.0, horizon: 10.0, s_step: None, s_horizon: None, p_points: 11 }
    }
}

impl GridSpec {
    pub fn t_values(&self) -> Result<Vec<f64>, ConfigError> {
        uniform_times(self.t_step, self.horizon).map_err(|e| ConfigError::Invalid(format!("t grid: {e}")))
    }

    pub fn s_step(&self) -> f64 {
        self.s_step.unwrap_or(self.t_step)
    }

    pub fn s_values(&self) -> Result<Vec<f64>, ConfigError> {
        uniform_times(self.s_step(), self.s_horizon.unwrap_or(self.horizon))
            .map_err(|e| ConfigError::Invalid(format!("s grid: {e}")))
    }

    pub fn p_values(&self) -> Result<Vec<f64>, ConfigError> {
        if self.p_points < 2 {
            return Err(ConfigError::Invalid("p_points must be at least 2".into()));
        }
        let last = (self.p_points - 1) as f64;
        Ok((0..self.p_points).map(|k| k as f64 / last).collect())
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    /// `|a|_level` uniform in `(0.05 scale, scale]`.
    Random {
        count: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        level: usize,
    },
    /// Circle monomials `e^{ikθ}`.
    Modes { modes: Vec<i64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetSpec {
    /// `W - 1` with `W` Haar unitary on the leading `support × support` block.
    Supported { count: usize, support: usize },
    /// Quasi-polar retractions of small perturbations of known quasi-unitaries.
    Random { count: usize, perturbation: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraCheckSpec {
    pub algebra: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "one")]
    pub scale: f64,
    /// Bound on `|a • a'|_0`; truncated algebras need more than the default.
    #[serde(default = "default_inverse_tol")]
    pub inverse_tolerance: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuncalcSpec {
    pub algebra: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_max_norm")]
    pub max_norm: f64,
    #[serde(default = "default_taylor_terms")]
    pub taylor_terms: usize,
    #[serde(default = "default_samples")]
    pub scalar_samples: usize,
    #[serde(default = "default_inverse_sqrt_tol")]
    pub tolerance: f64,
    #[serde(default = "default_polar_tol")]
    pub polar_tolerance: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbamSpec {
    pub family: String,
    pub elements: ElementSpec,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_pbam_tol")]
    pub tolerance: f64,
    #[serde(default = "default_lambda")]
    pub lambda: [f64; 2],
    #[serde(default)]
    pub moduli: Option<Vec<f64>>,
    /// CSV of defect rows to reproduce, relative to the config file.
    #[serde(default)]
    pub baseline: Option<String>,
    #[serde(default = "default_baseline_tol")]
    pub baseline_tolerance: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlendSpec {
    pub f: String,
    pub g: String,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetractSpec {
    pub family: String,
    pub net: NetSpec,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "one")]
    pub radius: f64,
    /// `γ = α + gamma_shift` for the α-independence sweep.
    #[serde(default = "one")]
    pub gamma_shift: f64,
    #[serde(default = "default_representative_tol")]
    pub representative_tolerance: f64,
    #[serde(default = "default_homotopy_tol")]
    pub homotopy_tolerance: f64,
    #[serde(default)]
    pub blend: Option<BlendSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeSpec {
    pub f: String,
    pub g: String,
    pub elements: ElementSpec,
    #[serde(default = "default_nus")]
    pub nus: Vec<f64>,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default)]
    pub tol: TolSchedule,
    #[serde(default = "default_lambda")]
    pub lambda: [f64; 2],
    /// Offset of the dominating `θ = φ + shift`; defaults to one s-step.
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_pbam_tol")]
    pub pbam_tolerance: f64,
    /// Count incomplete C1/C3 certificates as failures.
    #[serde(default)]
    pub require_certificates: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorialitySpec {
    pub f: String,
    pub g: String,
    pub net: NetSpec,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_scan_shrink")]
    pub scan_shrink: f64,
    #[serde(default = "default_representative_tol")]
    pub tolerance: f64,
    #[serde(default = "default_representative_tol")]
    pub endpoint_tolerance: f64,
    #[serde(default)]
    pub tol: TolSchedule,
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: [f64; 2],
}

fn one() -> f64 {
    1.0
}
fn default_samples() -> usize {
    200
}
fn default_max_norm() -> f64 {
    0.45
}
fn default_taylor_terms() -> usize {
    60
}
fn default_inverse_sqrt_tol() -> f64 {
    1e-10
}
fn default_inverse_tol() -> f64 {
    1e-10
}
fn default_polar_tol() -> f64 {
    1e-9
}
fn default_levels() -> Vec<usize> {
    vec![0]
}
fn default_pbam_tol() -> f64 {
    1e-6
}
fn default_lambda() -> [f64; 2] {
    [0.6, -0.8]
}
fn default_baseline_tol() -> f64 {
    1e-12
}
fn default_nodes() -> usize {
    5
}
fn default_margin() -> f64 {
    0.5
}
fn default_representative_tol() -> f64 {
    1e-8
}
fn default_homotopy_tol() -> f64 {
    1e-7
}
fn default_nus() -> Vec<f64> {
    vec![0.1]
}
fn default_scan_shrink() -> f64 {
    0.9
}

pub fn complex(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }
}

/// Algebras and families built from a config.
#[derive(Debug)]
pub struct Registry {
    pub algebras: BTreeMap<String, Algebra>,
    pub families: BTreeMap<String, Family>,
}

impl Registry {
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, ConfigError> {
        let invalid = |what: &str, e: pbam_core::Error| ConfigError::Invalid(format!("{what}: {e}"));
        let mut algebras = BTreeMap::new();
        for (name, spec) in &cfg.algebras {
            let alg = match *spec {
                AlgebraSpec::Matrix { dim, tracial, levels } => {
                    let base = if tracial { Algebra::tracial_matrix(dim) } else { Algebra::matrix(dim) };
                    match levels {
                        Some(l) => base.and_then(|a| a.with_levels(l)),
                        None => base,
                    }
                }
                AlgebraSpec::Circle { degree_cap, levels } => Algebra::smooth_circle(degree_cap, levels),
            }
            .map_err(|e| invalid(&format!("algebra `{name}`"), e))?;
            algebras.insert(name.clone(), alg);
        }
        let lookup = |name: &str| {
            algebras.get(name).ok_or_else(|| ConfigError::Invalid(format!("unknown algebra `{name}`")))
        };
        let mut families = BTreeMap::new();
        for (name, spec) in &cfg.families {
            let built = match spec {
                FamilySpec::Exact { algebra } => Ok(exact_hom(lookup(algebra)?)),
                FamilySpec::Compression { algebra, speed } => compression_family(lookup(algebra)?, *speed),
                FamilySpec::Perturbed { algebra, rate } => perturbed_hom(lookup(algebra)?, *rate),
                FamilySpec::Toeplitz { circle, order } => toeplitz_family(lookup(circle)?, *order),
                FamilySpec::TraceShift { algebra } => trace_shift(lookup(algebra)?),
            }
            .map_err(|e| invalid(&format!("family `{name}`"), e))?;
            families.insert(name.clone(), built);
        }
        let registry = Self { algebras, families };
        registry.check_references(cfg)?;
        cfg.grid.t_values()?;
        cfg.grid.s_values()?;
        cfg.grid.p_values()?;
        Ok(registry)
    }

    /// Every section must name known algebras and families, whichever
    /// subcommand runs.
    fn check_references(&self, cfg: &ScenarioConfig) -> Result<(), ConfigError> {
        for s in &cfg.verify_algebra {
            self.algebra(&s.algebra)?;
        }
        for s in &cfg.funcalc {
            self.algebra(&s.algebra)?;
        }
        let mut families: Vec<&str> = cfg.pbam.iter().map(|s| s.family.as_str()).collect();
        for s in &cfg.retract {
            families.push(&s.family);
            if let Some(b) = &s.blend {
                families.extend([b.f.as_str(), b.g.as_str()]);
            }
        }
        families.extend(cfg.compose.iter().flat_map(|s| [s.f.as_str(), s.g.as_str()]));
        families.extend(cfg.functoriality.iter().flat_map(|s| [s.f.as_str(), s.g.as_str()]));
        for name in families {
            self.family(name)?;
        }
        Ok(())
    }

    pub fn algebra(&self, name: &str) -> Result<&Algebra, ConfigError> {
        self.algebras.get(name).ok_or_else(|| ConfigError::Invalid(format!("unknown algebra `{name}`")))
    }

    pub fn family(&self, name: &str) -> Result<&Family, ConfigError> {
        self.families.get(name).ok_or_else(|| ConfigError::Invalid(format!("unknown family `{name}`")))
    }
}

pub fn build_elements(alg: &Algebra, spec: &ElementSpec, seed: u64, stream: u64) -> Result<Vec<Element>, ConfigError> {
    let invalid = |e: pbam_core::Error| ConfigError::Invalid(format!("test elements: {e}"));
    match spec {
        ElementSpec::Random { count, scale, level } => {
            let mut rng = stream_rng(seed, stream);
            (0..*count).map(|_| random_element(alg, &mut rng, *level, *scale).map_err(invalid)).collect()
        }
        ElementSpec::Modes { modes } => {
            let space = alg
                .circle()
                .ok_or_else(|| ConfigError::Invalid(format!("modes need a circle algebra, not `{}`", alg.id())))?;
            modes
                .iter()
                .map(|&k| {
                    let slot = space
                        .slot(k)
                        .ok_or_else(|| ConfigError::Invalid(format!("mode {k} exceeds the degree cap")))?;
                    let mut c = vec![C64::new(0.0, 0.0); space.len()];
                    c[slot] = C64::new(1.0, 0.0);
                    alg.from_fourier(c).map_err(invalid)
                })
                .collect()
        }
    }
}

pub fn build_net(alg: &Algebra, spec: &NetSpec, seed: u64, stream: u64) -> Result<QuasiUnitaryNet, ConfigError> {
    let invalid = |e: pbam_core::Error| ConfigError::Invalid(format!("net: {e}"));
    let mut rng = stream_rng(seed, stream);
    let points = match *spec {
        NetSpec::Supported { count, support } => (0..count)
            .map(|_| supported_quasi_unitary(alg, &mut rng, support).map_err(invalid))
            .collect::<Result<Vec<_>, _>>()?,
        NetSpec::Random { count, perturbation } => (0..count)
            .map(|_| random_quasi_unitary(alg, &mut rng, perturbation).map_err(invalid))
            .collect::<Result<Vec<_>, _>>()?,
    };
    QuasiUnitaryNet::new(alg, points, 1e-8).map_err(invalid)
}

pub fn hermitian_samples(alg: &Algebra, count: usize, max_norm: f64, seed: u64, stream: u64) -> Result<Vec<Element>, ConfigError> {
    use rand::Rng;
    let mut rng = stream_rng(seed, stream);
    (0..count)
        .map(|_| {
            let norm = rng.random_range(0.01..max_norm);
            random_hermitian(alg, &mut rng, 0, norm).map_err(|e| ConfigError::Invalid(format!("samples: {e}")))
        })
        .collect()
}
