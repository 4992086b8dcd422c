//! Experiment configuration: one documented TOML schema with nested
//! sections for grid, params, initial data, and run control.

use crate::error::{Error, Result};
use crate::kg::Params;
use crate::limits::LimitKind;
use crate::spectral::{SpectralGrid, TWO_PI};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Kg,
    Rqhd,
    Equivalence,
    Limits,
    Identities,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DtSpec {
    Auto(String),
    Fixed(f64),
}

impl Default for DtSpec {
    fn default() -> Self {
        DtSpec::Auto("auto".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub points: Vec<usize>,
    #[serde(default)]
    pub extent: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub epsilon: f64,
    pub upsilon: f64,
    pub b0: f64,
    pub nbar: f64,
    #[serde(default = "default_n_floor_frac")]
    pub n_floor_frac: f64,
    #[serde(default = "default_delta_frac")]
    pub delta_frac: f64,
    #[serde(default = "default_compat_tol")]
    pub compat_tol: f64,
}

fn default_n_floor_frac() -> f64 {
    1e-8
}

fn default_delta_frac() -> f64 {
    0.1
}

fn default_compat_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Constant,
    PlaneWave,
    GaussianBump,
    SinePerturbation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Named family, or absent when `snapshot_density` is given.
    #[serde(default)]
    pub family: Option<Family>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub wavevector: Option<Vec<i64>>,
    #[serde(default)]
    pub width: Option<f64>,
    /// Path of a real-field snapshot holding n(x, 0); S0 = 0.
    #[serde(default)]
    pub snapshot_density: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub horizon: f64,
    #[serde(default)]
    pub dt: DtSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(default = "default_one")]
    pub n: f64,
    #[serde(default = "default_one")]
    pub c: f64,
}

fn default_one() -> f64 {
    1.0
}

impl Default for ConstantsSection {
    fn default() -> Self {
        ConstantsSection { n: 1.0, c: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub kind: LimitKindConfig,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitKindConfig {
    Semiclassical,
    Nonrelativistic,
    Combined,
}

impl From<LimitKindConfig> for LimitKind {
    fn from(k: LimitKindConfig) -> LimitKind {
        match k {
            LimitKindConfig::Semiclassical => LimitKind::Semiclassical,
            LimitKindConfig::Nonrelativistic => LimitKind::Nonrelativistic,
            LimitKindConfig::Combined => LimitKind::Combined,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// Parsed and validated experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub grid: GridSection,
    pub params: ParamsSection,
    pub initial: InitialSection,
    pub run: RunSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub limits: Option<LimitsSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Parse the TOML text and validate every invariant, reporting the first
/// violation with its field name.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn serialize_config(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| Error::Parse(e.to_string()))
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    validate_sections(cfg)?;
    validate_initial(cfg)?;
    validate_run_and_limits(cfg)
}

fn validate_sections(cfg: &ExperimentConfig) -> Result<()> {
    let g = &cfg.grid;
    if g.dim == 0 || g.dim > 3 {
        return Err(Error::validation("grid.dim", "dim must be 1, 2, or 3"));
    }
    if g.points.len() != g.dim {
        return Err(Error::validation("grid.points", "one entry per axis required"));
    }
    for &n in &g.points {
        if n < 8 || n % 2 != 0 {
            return Err(Error::validation("grid.points", "points per axis must be even and >= 8"));
        }
        if n > 256 {
            return Err(Error::validation("grid.points", "desk scale caps points per axis at 256"));
        }
    }
    if let Some(extent) = &g.extent {
        if extent.len() != g.dim {
            return Err(Error::validation("grid.extent", "one entry per axis required"));
        }
        if extent.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::validation("grid.extent", "extent must be positive"));
        }
    }

    let p = &cfg.params;
    if !(p.epsilon >= 0.0) {
        return Err(Error::validation("params.epsilon", "epsilon must be >= 0"));
    }
    if !(p.upsilon >= 0.0) {
        return Err(Error::validation("params.upsilon", "upsilon must be >= 0"));
    }
    if !(p.b0 > 0.0) {
        return Err(Error::validation("params.b0", "b0 must be > 0"));
    }
    if !(p.nbar > 0.0) {
        return Err(Error::validation("params.nbar", "nbar must be > 0"));
    }
    if !(p.n_floor_frac > 0.0) {
        return Err(Error::validation("params.n_floor_frac", "n_floor_frac must be > 0"));
    }
    if !(p.delta_frac > 0.0) {
        return Err(Error::validation("params.delta_frac", "delta_frac must be > 0"));
    }
    if !(p.compat_tol > 0.0) {
        return Err(Error::validation("params.compat_tol", "compat_tol must be > 0"));
    }

    Ok(())
}

fn validate_initial(cfg: &ExperimentConfig) -> Result<()> {
    let g = &cfg.grid;
    let family = match (&cfg.initial.family, &cfg.initial.snapshot_density) {
        (Some(f), None) => f.clone(),
        (None, Some(_)) => return Ok(()),
        (Some(_), Some(_)) => {
            return Err(Error::validation(
                "initial",
                "give either a family or a snapshot_density, not both",
            ))
        }
        (None, None) => {
            return Err(Error::validation(
                "initial",
                "either a family or a snapshot_density is required",
            ))
        }
    };
    match family {
        Family::PlaneWave => {
            let k = cfg.initial.wavevector.as_ref().ok_or_else(|| {
                Error::validation("initial.wavevector", "plane-wave needs a wavevector")
            })?;
            if k.len() != g.dim {
                return Err(Error::validation("initial.wavevector", "one entry per axis required"));
            }
            if cfg.initial.amplitude.is_none() {
                return Err(Error::validation("initial.amplitude", "plane-wave needs an amplitude"));
            }
        }
        Family::GaussianBump => {
            if !(cfg.initial.width.unwrap_or(0.0) > 0.0) {
                return Err(Error::validation("initial.width", "gaussian-bump needs a positive width"));
            }
            if cfg.initial.amplitude.is_none() {
                return Err(Error::validation(
                    "initial.amplitude",
                    "gaussian-bump needs an amplitude",
                ));
            }
        }
        Family::SinePerturbation => {
            if cfg.initial.amplitude.is_none() {
                return Err(Error::validation(
                    "initial.amplitude",
                    "sine-perturbation needs an amplitude",
                ));
            }
            if let Some(k) = &cfg.initial.wavevector {
                if k.len() != g.dim {
                    return Err(Error::validation(
                        "initial.wavevector",
                        "one entry per axis required",
                    ));
                }
            }
        }
        Family::Constant => {}
    }
    Ok(())
}

fn validate_run_and_limits(cfg: &ExperimentConfig) -> Result<()> {
    let r = &cfg.run;
    if !(r.horizon >= 0.0) {
        return Err(Error::validation("run.horizon", "horizon must be >= 0"));
    }
    if let DtSpec::Fixed(dt) = r.dt {
        if !(dt > 0.0) {
            return Err(Error::validation("run.dt", "dt must be > 0 or \"auto\""));
        }
    }
    if let DtSpec::Auto(word) = &r.dt {
        if word != "auto" {
            return Err(Error::validation("run.dt", "dt must be a number or \"auto\""));
        }
    }
    if !(r.tol > 0.0) {
        return Err(Error::validation("run.tol", "tol must be > 0"));
    }
    if r.max_iter == 0 {
        return Err(Error::validation("run.max_iter", "max_iter must be >= 1"));
    }

    if !(cfg.constants.n > 0.0) || !(cfg.constants.c > 0.0) {
        return Err(Error::validation("constants", "N and C must be > 0"));
    }

    if cfg.mode == Mode::Limits {
        let l = cfg
            .limits
            .as_ref()
            .ok_or_else(|| Error::validation("limits", "limits mode needs a [limits] section"))?;
        if l.values.len() < 3 {
            return Err(Error::validation("limits.values", "need at least 3 parameter values"));
        }
        if !l.values.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::validation(
                "limits.values",
                "parameter values must be strictly decreasing",
            ));
        }
        if l.values.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::validation("limits.values", "parameter values must be positive"));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn build_grid(&self) -> Result<Arc<SpectralGrid>> {
        let extent = self
            .grid
            .extent
            .clone()
            .unwrap_or_else(|| vec![TWO_PI; self.grid.dim]);
        SpectralGrid::new(&self.grid.points, &extent)
    }

    pub fn build_params(&self) -> Result<Params> {
        let p = &self.params;
        Ok(Params::new(p.epsilon, p.upsilon, p.b0, p.nbar)?
            .with_n_floor(p.n_floor_frac * p.nbar)
            .with_delta(p.delta_frac * p.nbar)
            .with_compat_tol(p.compat_tol))
    }
}
