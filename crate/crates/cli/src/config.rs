//! Run configuration. JSON with explicit units in field names; every field
//! except the scattering model has a default, and the fully resolved form is
//! embedded in each output so a run can be repeated from its own result file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wssus_core::optimizer::{Method, SEPARABILITY_TOL};
use wssus_core::{LatticeParams, Moments, ScatteringGrid, TimeGrid};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridConfig,
    pub scattering: ScatteringConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_method() -> Method {
    Method::Alternating
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_samples: usize,
    pub t_span_seconds: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_samples: TimeGrid::DEFAULT_SAMPLES,
            t_span_seconds: TimeGrid::DEFAULT_SPAN,
        }
    }
}

fn default_resolution() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScatteringConfig {
    GaussianSymmetric {
        alpha: f64,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    Rectangular {
        tau_max_seconds: f64,
        nu_max_hertz: f64,
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
    PointMass {
        tau_seconds: f64,
        nu_hertz: f64,
    },
    /// CSV with columns `tau, nu, w`.
    Custom { path: PathBuf },
}

impl ScatteringConfig {
    pub fn build(&self) -> CliResult<ScatteringGrid> {
        Ok(match self {
            ScatteringConfig::GaussianSymmetric { alpha, resolution } => ScatteringGrid::gaussian(*alpha, *resolution)?,
            ScatteringConfig::Rectangular {
                tau_max_seconds,
                nu_max_hertz,
                resolution,
            } => ScatteringGrid::rectangular(*tau_max_seconds, *nu_max_hertz, *resolution)?,
            ScatteringConfig::PointMass { tau_seconds, nu_hertz } => {
                if !(tau_seconds.is_finite() && nu_hertz.is_finite()) {
                    return Err(CliError::Config("point mass location must be finite".into()));
                }
                ScatteringGrid::point_mass(*tau_seconds, *nu_hertz)
            }
            ScatteringConfig::Custom { path } => wssus_core::io::read_scattering_csv(path)?,
        })
    }

    /// Same model at another quadrature resolution.
    pub fn with_resolution(&self, res: usize) -> CliResult<Self> {
        match self {
            ScatteringConfig::GaussianSymmetric { alpha, .. } => Ok(ScatteringConfig::GaussianSymmetric {
                alpha: *alpha,
                resolution: res,
            }),
            ScatteringConfig::Rectangular {
                tau_max_seconds,
                nu_max_hertz,
                ..
            } => Ok(ScatteringConfig::Rectangular {
                tau_max_seconds: *tau_max_seconds,
                nu_max_hertz: *nu_max_hertz,
                resolution: res,
            }),
            _ => Err(CliError::Config(
                "a resolution sweep needs a gaussian_symmetric or rectangular scattering model".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
    #[serde(rename = "F_hertz")]
    pub f_hertz: f64,
    /// Index set `|m|, |n| <= index_radius`.
    pub index_radius: u32,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            t_seconds: 2.0,
            f_hertz: 2.0,
            index_radius: 1,
        }
    }
}

impl LatticeConfig {
    pub fn build(&self) -> CliResult<LatticeParams> {
        Ok(LatticeParams::square(self.t_seconds, self.f_hertz, self.index_radius)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Hermite order of the alternating start pulse; the Gaussian ansatz when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_hermite: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: wssus_core::optimizer::DEFAULT_MAX_ITERS,
            tol: wssus_core::optimizer::DEFAULT_TOL,
            init_hermite: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n_realizations: usize,
    pub seed: u64,
    pub sigma2: f64,
    /// Write per-realization `(a, b)` traces from `simulate`.
    pub write_traces: bool,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_realizations: 20_000,
            seed: 1,
            sigma2: 0.1,
            write_traces: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "F")]
    F,
    #[serde(rename = "n_realizations")]
    NRealizations,
    #[serde(rename = "resolution")]
    Resolution,
}

impl SweepParameter {
    pub fn parse(s: &str) -> CliResult<Self> {
        serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| {
            CliError::Config(format!(
                "unknown sweep parameter {s:?}; expected one of alpha, T, F, n_realizations, resolution"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Everything a command needs, built once and validated up front.
pub struct Resolved {
    pub config: RunConfig,
    pub grid: TimeGrid,
    pub scattering: ScatteringGrid,
    pub moments: Moments,
    pub lattice: LatticeParams,
}

impl RunConfig {
    /// Parse a config file. A previous `result.json` (or any output embedding
    /// a `config` object) is accepted as well.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)?;
        if let Some(inner) = value.get("config") {
            value = inner.clone();
        }
        let mut cfg: RunConfig = serde_json::from_value(value)?;
        if let ScatteringConfig::Custom { path: p } = &mut cfg.scattering {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                *p = base.join(&p);
            }
            if let Ok(abs) = std::fs::canonicalize(&p) {
                *p = abs;
            }
        }
        Ok(cfg)
    }

    /// Check every precondition before any heavy computation.
    pub fn resolve(self) -> CliResult<Resolved> {
        let grid = TimeGrid::new(self.grid.n_samples, self.grid.t_span_seconds)?;
        let scattering = self.scattering.build()?;
        scattering.check_guard(&grid)?;
        let moments = Moments::compute(&scattering)?;
        let lattice = self.lattice.build()?;
        lattice.check_guard(&grid)?;
        if self.method == Method::LocalEigen && moments.c11.abs() > SEPARABILITY_TOL {
            return Err(wssus_core::Error::NotSeparable(moments.c11).into());
        }
        if self.optimizer.max_iters == 0 || !(self.optimizer.tol > 0.0) {
            return Err(CliError::Config("optimizer needs max_iters >= 1 and tol > 0".into()));
        }
        let mc = &self.monte_carlo;
        if mc.n_realizations < wssus_core::sim::MIN_REALIZATIONS {
            return Err(CliError::Config(format!(
                "monte_carlo.n_realizations must be at least {}",
                wssus_core::sim::MIN_REALIZATIONS
            )));
        }
        if !(mc.sigma2 >= 0.0 && mc.sigma2.is_finite()) {
            return Err(CliError::Config("monte_carlo.sigma2 must be nonnegative".into()));
        }
        Ok(Resolved {
            config: self,
            grid,
            scattering,
            moments,
            lattice,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"scattering": {"model": "gaussian_symmetric", "alpha": 2.0}}"#).unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.method, Method::Alternating);
        assert_eq!(cfg.lattice.t_seconds, 2.0);
        assert_eq!(cfg.scattering, ScatteringConfig::GaussianSymmetric { alpha: 2.0, resolution: 64 });
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unit_suffixed_names() {
        let s = serde_json::to_string(&LatticeConfig::default()).unwrap();
        assert!(s.contains("\"T_seconds\"") && s.contains("\"F_hertz\""));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let r: Result<RunConfig, _> =
            serde_json::from_str(r#"{"scattering": {"model": "point_mass", "tau_seconds": 0, "nu_hertz": 0}, "grdi": {}}"#);
        assert!(r.is_err());
    }

    #[test]
    fn guard_violation_is_caught_in_validation() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"scattering": {"model": "point_mass", "tau_seconds": 0, "nu_hertz": 0},
                "lattice": {"T_seconds": 3.0, "F_hertz": 1.0, "index_radius": 2}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(CliError::Core(wssus_core::Error::OutOfGuard { .. }))));
    }

    #[test]
    fn sweep_parameter_names() {
        assert_eq!(SweepParameter::parse("T").unwrap(), SweepParameter::T);
        assert_eq!(SweepParameter::parse("n_realizations").unwrap(), SweepParameter::NRealizations);
        assert!(SweepParameter::parse("beta").is_err());
    }
}
