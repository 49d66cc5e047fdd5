//! TOML experiment configuration.
//!
//! Only `kind` is required. Absent keys take the defaults of that kind, which
//! reproduce the desk-scale runs documented in the README.
//!
//! ```toml
//! kind = "decay"
//! seed = 0
//! output = "out/decay"
//!
//! [grid]
//! dim = 1
//! half_width = 12.0
//! spacing = 0.05
//! boundary = "dirichlet"
//!
//! [family]
//! kind = "power-law"
//! exponent = 2.0
//! lattice = [-8, 8]
//!
//! [sweep]
//! s = [1.2]
//! cutoffs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::grid::{Boundary, Grid};
use crate::models::DeformationKind;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LemmaSweep,
    Decay,
    ModelPipeline,
    Probes,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::LemmaSweep => "lemma-sweep",
            ExperimentKind::Decay => "decay",
            ExperimentKind::ModelPipeline => "model-pipeline",
            ExperimentKind::Probes => "probes",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    /// Box `[-L, L]^d`.
    pub half_width: f64,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { dim: 1, half_width: 12.0, spacing: 0.05, boundary: Boundary::Dirichlet }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<std::sync::Arc<Grid>> {
        Grid::new(self.dim, self.half_width, self.spacing, self.boundary)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// Löwdin-orthonormalized `⟨x−γ⟩^{-p}` profiles.
    PowerLaw,
    /// Ball indicators, so that `ψ = φ`.
    ExtremelyLocalized,
    /// Extracted from the lowest Kronig-Penney island.
    Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: FamilyKind,
    /// Power-law exponent `p`.
    pub exponent: f64,
    /// Centers `ℤ^d ∩ [lo, hi]^d`.
    pub lattice: [i64; 2],
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig { kind: FamilyKind::PowerLaw, exponent: 2.0, lattice: [-8, 8] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub v0: f64,
    pub a: f64,
    pub gap_tol: f64,
    /// Islands must lie below this energy; the 40th eigenvalue when absent.
    pub energy_cap: Option<f64>,
    pub eigenpairs: usize,
    /// Exponential rate `α` certified on the extracted family.
    pub alpha: f64,
    /// Gap between projected-position clusters, in length units.
    pub cluster_gap: f64,
    /// `sine` or `linear`; the amplitude comes from `sweep.xi`.
    pub deformation: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            v0: 100.0,
            a: 0.5,
            gap_tol: 5.0,
            energy_cap: None,
            eigenpairs: 60,
            alpha: 1.0,
            cluster_gap: 0.3,
            deformation: "sine".into(),
        }
    }
}

impl ModelConfig {
    pub fn deformation(&self, xi: f64) -> Result<DeformationKind> {
        if xi == 0.0 {
            return Ok(DeformationKind::Zero);
        }
        match self.deformation.as_str() {
            "sine" => Ok(DeformationKind::Sine { eps: xi }),
            "linear" => Ok(DeformationKind::Linear { eps: xi }),
            other => Err(Error::Config(format!("unknown deformation kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub s: Vec<f64>,
    pub cutoffs: Vec<f64>,
    pub xi: Vec<f64>,
    /// Random evaluation points per `(s, R)` cell.
    pub samples: usize,
    /// Points `x` are drawn from `[-x_range, x_range]^d`.
    pub x_range: f64,
    /// Tail sums range over `ℤ^d ∩ [-N, N]^d`.
    pub lattice_extent: i64,
    /// Random ball pairs per propagation probe.
    pub trials: usize,
    /// Point sources used to measure propagation.
    pub sources: usize,
    /// Convolution kernel radii; two or more enable the composition probe.
    pub kernel_radii: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            s: vec![1.2],
            cutoffs: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            xi: vec![0.0, 0.05],
            samples: 100,
            x_range: 2.0,
            lattice_extent: 200,
            trials: 200,
            sources: 400,
            kernel_radii: vec![1.0, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed excess of a fitted slope over its target.
    pub slope: f64,
    /// Relative growth allowed for a transported exponential constant.
    pub certification: f64,
    pub probe: f64,
    /// Residuals of `Y` round trips and inner products.
    pub transport: f64,
    pub mvn: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { slope: 0.15, certification: 1e-2, probe: 1e-12, transport: 1e-4, mvn: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Defaults for the given experiment.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            kind,
            seed: 0,
            output: default_output().join(kind.name()),
            grid: GridConfig::default(),
            family: FamilyConfig::default(),
            model: ModelConfig::default(),
            sweep: SweepConfig::default(),
            tolerances: Tolerances::default(),
        };
        match kind {
            ExperimentKind::LemmaSweep => {
                c.sweep.s = vec![0.6, 1.0, 1.5];
                c.sweep.cutoffs = vec![1.0, 2.0, 4.0, 8.0];
            }
            ExperimentKind::Decay => {}
            ExperimentKind::ModelPipeline => {
                c.grid = GridConfig { dim: 1, half_width: 10.0, spacing: 1.0 / 32.0, boundary: Boundary::Dirichlet };
                c.family.kind = FamilyKind::Model;
                c.sweep.s = vec![1.0, 2.0, 4.0];
                c.sweep.cutoffs = vec![0.5, 0.75, 1.0, 1.5, 2.0, 2.5];
            }
            ExperimentKind::Probes => {
                c.grid = GridConfig { dim: 1, half_width: 6.0, spacing: 0.05, boundary: Boundary::Dirichlet };
                c.family.lattice = [-3, 3];
                c.sweep.cutoffs = vec![0.5, 1.0, 2.0];
            }
        }
        c
    }

    /// Parses a config, filling absent keys from the defaults of its kind.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let kind: ExperimentKind = user
            .get("kind")
            .cloned()
            .ok_or_else(|| Error::Config("missing experiment kind".into()))?
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut merged = toml::Table::try_from(Self::new(kind)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        let c: ExperimentConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        for (name, v) in [
            ("slope", t.slope),
            ("certification", t.certification),
            ("probe", t.probe),
            ("transport", t.transport),
            ("mvn", t.mvn),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        let sw = &self.sweep;
        let need = |name: &str, empty: bool| {
            if empty {
                Err(Error::Config(format!("sweep list {name} is empty")))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ExperimentKind::LemmaSweep => {
                need("s", sw.s.is_empty())?;
                need("cutoffs", sw.cutoffs.is_empty())?;
                if sw.samples == 0 {
                    return Err(Error::Config("samples must be positive".into()));
                }
                if sw.lattice_extent < 1 {
                    return Err(Error::Config("lattice_extent must be at least 1".into()));
                }
            }
            ExperimentKind::Decay => {
                need("s", sw.s.is_empty())?;
                need("cutoffs", sw.cutoffs.is_empty())?;
            }
            ExperimentKind::ModelPipeline => {
                need("s", sw.s.is_empty())?;
                need("cutoffs", sw.cutoffs.is_empty())?;
                need("xi", sw.xi.is_empty())?;
            }
            ExperimentKind::Probes => {
                need("cutoffs", sw.cutoffs.is_empty())?;
                need("kernel_radii", sw.kernel_radii.is_empty())?;
            }
        }
        if self.family.lattice[0] > self.family.lattice[1] {
            return Err(Error::Config(format!("empty center lattice {:?}", self.family.lattice)));
        }
        if !matches!(self.kind, ExperimentKind::LemmaSweep) && !(1..=2).contains(&self.grid.dim) {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {}", self.grid.dim)));
        }
        Ok(())
    }
}
