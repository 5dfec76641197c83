//! Run configuration: JSON on disk, overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use bwsolve::bridge_model::{preset, BridgeSystem, Profile, SystemSpec, PRESET_NAMES};
use bwsolve::evolve::SolverConfig;
use bwsolve::paralin::complexify;
use bwsolve::spectral_core::{StateVector, TorusGrid};
use bwsolve::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSource {
    Preset { name: String },
    /// Path to a JSON system document.
    File { path: PathBuf },
    Inline { spec: SystemSpec },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Kato,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Operators,
    Parametrix,
    Energy,
    Oracle,
}

/// Initial data (y, yₜ, θ, θₜ). With `amplitude` set, the complexified state
/// is rescaled to that H^{s₁} norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSpec {
    pub y0: Profile,
    pub y1: Profile,
    pub theta0: Profile,
    pub theta1: Profile,
    pub amplitude: Option<f64>,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            y0: Profile::Fourier {
                modes: vec![(1, 0.0, -0.5), (2, 0.25, 0.0)],
            },
            y1: Profile::Cosine {
                mean: 0.0,
                amplitude: 0.3,
                mode: 1,
            },
            theta0: Profile::Fourier {
                modes: vec![(1, 0.5, 0.0), (3, 0.0, 0.2)],
            },
            theta1: Profile::Sine {
                mean: 0.0,
                amplitude: 0.2,
                mode: 2,
            },
            amplitude: Some(1e-2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSource,
    pub n_points: usize,
    pub eps_para: f64,
    pub solver: SolverConfig,
    pub data: DataSpec,
    pub integrator: Integrator,
    pub suite: Option<SuiteName>,
    /// Grid sizes for the N-stability suites.
    pub n_list: Vec<usize>,
    /// Random samples for the energy suite.
    pub samples: usize,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemSource::Preset {
                name: "theta_xx_squared".into(),
            },
            n_points: 128,
            eps_para: 0.5,
            solver: SolverConfig::default(),
            data: DataSpec::default(),
            integrator: Integrator::Kato,
            suite: None,
            n_list: vec![32, 64, 128],
            samples: 100,
            output_dir: None,
            seed: 11,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        TorusGrid::new(self.n_points).map_err(|e| Error::Config(e.to_string()))?;
        if !(self.eps_para > 0.0 && self.eps_para < 1.0) {
            return Err(Error::Config("eps_para must lie in (0, 1)".into()));
        }
        if let Some(a) = self.data.amplitude {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config("amplitude must be finite and nonnegative".into()));
            }
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON with `output_dir` cleared, so the hash
    /// identifies the computation rather than where it was written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn system_spec(&self) -> Result<SystemSpec> {
        match &self.system {
            SystemSource::Preset { name } => preset(name).ok_or_else(|| {
                Error::Config(format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", ")))
            }),
            SystemSource::File { path } => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
            SystemSource::Inline { spec } => Ok(spec.clone()),
        }
    }

    pub fn build_system(&self, n: usize) -> Result<BridgeSystem> {
        self.system_spec()?.build(&TorusGrid::new(n)?)
    }

    pub fn build_data(&self, n: usize) -> Result<StateVector> {
        let g = TorusGrid::new(n)?;
        let d = &self.data;
        let v = complexify(&d.y0.build(&g)?, &d.y1.build(&g)?, &d.theta0.build(&g)?, &d.theta1.build(&g)?)?;
        Ok(match d.amplitude {
            Some(a) => {
                let norm = v.sobolev_norm(self.solver.ladder.s1);
                if norm == 0.0 {
                    v
                } else {
                    v.scale(a / norm)
                }
            }
            None => v,
        })
    }
}
