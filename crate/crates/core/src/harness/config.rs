use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aperture::{ApertureGeometry, SteeringLaw, SteeringSpec};
use crate::channel::ChannelModel;
use crate::im_schemes::{MbmStates, Scheme, SchemeConfig};
use crate::math::TWO_PI;
use crate::{Error, Result};

pub const DEFAULT_MIN_ERRORS: u64 = 200;
pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;

fn default_nr() -> usize {
    1
}

fn default_rayleigh() -> ChannelModel {
    ChannelModel::Rayleigh {}
}

fn default_capacity_trials() -> u64 {
    20_000
}

fn default_grid_step() -> f64 {
    1.0
}

fn default_resistance() -> f64 {
    0.5
}

/// Adaptive stop rule: a point ends once `min_errors` bit errors or `max_trials` trials are reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
}

fn default_min_errors() -> u64 {
    DEFAULT_MIN_ERRORS
}

fn default_max_trials() -> u64 {
    DEFAULT_MAX_TRIALS
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_errors: DEFAULT_MIN_ERRORS,
            max_trials: DEFAULT_MAX_TRIALS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub scheme: SchemeConfig,
    #[serde(default = "default_nr")]
    pub nr: usize,
    #[serde(default = "default_rayleigh")]
    pub channel: ChannelModel,
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Fixed trial count per point; overrides `stop` when present.
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// `[nt, nr]` pairs.
    pub antennas: Vec<[usize; 2]>,
    #[serde(default = "default_rayleigh")]
    pub channel: ChannelModel,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_capacity_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub nx: usize,
    pub ny: usize,
    pub spacing_mm: f64,
    pub fc_ghz: f64,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ApertureGeometry> {
        ApertureGeometry::new(self.nx, self.ny, self.spacing_mm * 1e-3, self.spacing_mm * 1e-3, self.fc_ghz * 1e9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LawConfig {
    #[default]
    Gradient,
    Sawtooth,
}

/// Steering along x. Give either the target angle or the phase range per period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteeringConfig {
    #[serde(default = "default_period")]
    pub period: usize,
    #[serde(default)]
    pub theta_deg: Option<f64>,
    #[serde(default)]
    pub phase_range_deg: Option<f64>,
    #[serde(default)]
    pub law: LawConfig,
}

fn default_period() -> usize {
    1
}

impl SteeringConfig {
    pub fn build(&self, geom: &ApertureGeometry) -> Result<SteeringSpec> {
        let spec = match (self.theta_deg, self.phase_range_deg) {
            (Some(theta), None) => SteeringSpec::toward(theta.to_radians(), self.period, geom.dx, geom.wavelength())?,
            (None, Some(range)) => SteeringSpec::new(self.period, range.to_radians(), geom.dx)?,
            _ => {
                return Err(Error::Config(
                    "steering needs exactly one of theta_deg and phase_range_deg".into(),
                ))
            }
        };
        if spec.phase_range > TWO_PI + 1e-9 {
            return Err(Error::Config(format!(
                "steering needs {:.1} deg per period, above 360 deg; use a smaller period",
                spec.phase_range.to_degrees()
            )));
        }
        Ok(spec.with_law(match self.law {
            LawConfig::Gradient => SteeringLaw::Gradient,
            LawConfig::Sawtooth => SteeringLaw::Sawtooth,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub steering: Option<SteeringConfig>,
    /// Common modulation phase added to every element.
    #[serde(default)]
    pub modulation_phase_deg: f64,
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    /// Exponent `q` of the element factor `cos^q(theta)`.
    #[serde(default)]
    pub element_exponent: f64,
    #[serde(default)]
    pub quantize_bits: Option<u32>,
    /// Take element amplitudes from the meta-atom table.
    #[serde(default)]
    pub couple_atom_loss: bool,
    #[serde(default = "default_resistance")]
    pub resistance_ohm: f64,
    /// Response table CSV; the shipped table when absent.
    #[serde(default)]
    pub table: Option<PathBuf>,
    /// Side of the `(u, v)` sampling grid; 0 disables the export.
    #[serde(default)]
    pub uv_samples: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceConfig {
    /// Phase ramp for harmonic `m`, optionally rotated by a whole-step shift.
    Single {
        m: i32,
        #[serde(default)]
        shift_deg: f64,
    },
    /// Phase-only sequence approximating several harmonics; targets are `[m, weight]`.
    Multi { targets: Vec<(i32, f64)> },
    /// Explicit per-step phases.
    Phases { phases_deg: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicPatternConfig {
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub steering: Option<SteeringConfig>,
    pub harmonics: Vec<i32>,
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    #[serde(default)]
    pub element_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicsConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub steps: usize,
    pub sequences: Vec<SequenceConfig>,
    /// Largest `|m|` reported; defaults to `steps`.
    #[serde(default)]
    pub m_max: Option<i32>,
    #[serde(default)]
    pub seed: u64,
    /// Far-field patterns of the first sequence applied to every element.
    #[serde(default)]
    pub pattern: Option<HarmonicPatternConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Ber(BerConfig),
    Capacity(CapacityConfig),
    Pattern(PatternConfig),
    Harmonics(HarmonicsConfig),
}

fn check_snr(snr: &[f64]) -> Result<()> {
    if snr.is_empty() {
        return Err(Error::Config("snr_db must list at least one point".into()));
    }
    if let Some(s) = snr.iter().find(|s| !s.is_finite()) {
        return Err(Error::Config(format!("snr_db entry {s} is not finite")));
    }
    Ok(())
}

impl BerConfig {
    pub fn validate(&self) -> Result<Scheme> {
        check_snr(&self.snr_db)?;
        self.channel.validate()?;
        if self.nr == 0 {
            return Err(Error::Config("nr must be at least 1".into()));
        }
        if self.trials == Some(0) || self.stop.max_trials == 0 {
            return Err(Error::Config("trial counts must be at least 1".into()));
        }
        let scheme = Scheme::new(self.scheme.clone())?;
        if let SchemeConfig::Mbm { state_source, .. } = &self.scheme {
            match state_source {
                MbmStates::Abstract if !self.channel.is_fading() => {
                    return Err(Error::Config(
                        "abstract MBM states are channel draws; choose a fading channel model".into(),
                    ))
                }
                MbmStates::Pattern { directions, .. } => {
                    if directions.len() != self.nr {
                        return Err(Error::Config(format!(
                            "pattern MBM lists {} directions but nr = {}",
                            directions.len(),
                            self.nr
                        )));
                    }
                    if self.channel.is_fading() {
                        return Err(Error::Config(
                            "pattern MBM states are fixed responses; use the awgn channel model".into(),
                        ));
                    }
                }
                _ => {}
            }
        }
        Ok(scheme)
    }
}

impl CapacityConfig {
    pub fn validate(&self) -> Result<()> {
        check_snr(&self.snr_db)?;
        self.channel.validate()?;
        if self.antennas.is_empty() || self.antennas.iter().any(|a| a[0] == 0 || a[1] == 0) {
            return Err(Error::Config("antennas must list positive [nt, nr] pairs".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }
}

impl PatternConfig {
    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry.build()?;
        if let Some(s) = &self.steering {
            s.build(&geom)?;
        }
        if let Some(b) = self.quantize_bits {
            if b == 0 || b > 16 {
                return Err(Error::Config(format!("quantize_bits must be in 1..=16, got {b}")));
            }
        }
        Ok(())
    }
}

impl HarmonicsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        if self.sequences.is_empty() {
            return Err(Error::Config("list at least one sequence".into()));
        }
        for s in &self.sequences {
            if let SequenceConfig::Phases { phases_deg } = s {
                if phases_deg.len() != self.steps {
                    return Err(Error::Config(format!(
                        "explicit sequence has {} phases but steps = {}",
                        phases_deg.len(),
                        self.steps
                    )));
                }
            }
        }
        if let Some(p) = &self.pattern {
            let geom = p.geometry.build()?;
            if let Some(s) = &p.steering {
                s.build(&geom)?;
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ExperimentConfig::Ber(c) => c.validate().map(|_| ()),
            ExperimentConfig::Capacity(c) => c.validate(),
            ExperimentConfig::Pattern(c) => c.validate(),
            ExperimentConfig::Harmonics(c) => c.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Ber(_) => "ber",
            ExperimentConfig::Capacity(_) => "capacity",
            ExperimentConfig::Pattern(_) => "pattern",
            ExperimentConfig::Harmonics(_) => "harmonics",
        }
    }

    pub fn output(&self) -> Option<&Path> {
        match self {
            ExperimentConfig::Ber(c) => c.output.as_deref(),
            ExperimentConfig::Capacity(c) => c.output.as_deref(),
            ExperimentConfig::Pattern(c) => c.output.as_deref(),
            ExperimentConfig::Harmonics(c) => c.output.as_deref(),
        }
    }

    pub fn name(&self) -> &str {
        let n = match self {
            ExperimentConfig::Ber(c) => c.name.as_deref(),
            ExperimentConfig::Capacity(c) => c.name.as_deref(),
            ExperimentConfig::Pattern(c) => c.name.as_deref(),
            ExperimentConfig::Harmonics(c) => c.name.as_deref(),
        };
        n.unwrap_or_else(|| self.kind())
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::Ber(c) => c.seed = seed,
            ExperimentConfig::Capacity(c) => c.seed = seed,
            ExperimentConfig::Harmonics(c) => c.seed = seed,
            ExperimentConfig::Pattern(_) => {}
        }
    }
}

fn path_error<E: std::fmt::Display>(origin: &str, e: serde_path_to_error::Error<E>) -> Error {
    let path = e.path().to_string();
    let inner = e.into_inner();
    if path == "." || path.is_empty() {
        Error::Config(format!("{origin}: {inner}"))
    } else {
        Error::Config(format!("{origin}: at `{path}`: {inner}"))
    }
}

fn from_value<T: serde::de::DeserializeOwned>(value: serde_json::Value, origin: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| path_error(origin, e))
}

fn from_json_str<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| path_error(origin, e))
}

/// Parses and validates an experiment description.
pub fn parse_config_str(text: &str, origin: &str) -> Result<ExperimentConfig> {
    // The tag is dispatched by hand so that key paths survive into error messages.
    let mut value: serde_json::Value = from_json_str(text, origin)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("{origin}: expected a JSON object")))?;
    let kind = match obj.remove("experiment") {
        Some(serde_json::Value::String(k)) => k,
        Some(other) => return Err(Error::Config(format!("{origin}: at `experiment`: expected a string, got {other}"))),
        None => return Err(Error::Config(format!("{origin}: missing key `experiment`"))),
    };
    let cfg = match kind.as_str() {
        "ber" => ExperimentConfig::Ber(from_value(value, origin)?),
        "capacity" => ExperimentConfig::Capacity(from_value(value, origin)?),
        "pattern" => ExperimentConfig::Pattern(from_value(value, origin)?),
        "harmonics" => ExperimentConfig::Harmonics(from_value(value, origin)?),
        other => {
            return Err(Error::Config(format!(
                "{origin}: at `experiment`: unknown experiment `{other}`, expected one of ber, capacity, pattern, harmonics"
            )))
        }
    };
    cfg.validate().map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{origin}: {m}")),
        other => other,
    })?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, &path.display().to_string())
}

/// A bare scheme object, or the scheme of a `ber` experiment.
pub fn parse_scheme_str(text: &str, origin: &str) -> Result<SchemeConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
    if value.get("experiment").is_some() {
        match parse_config_str(text, origin)? {
            ExperimentConfig::Ber(c) => Ok(c.scheme),
            other => Err(Error::Config(format!(
                "{origin}: a {} experiment has no scheme",
                other.kind()
            ))),
        }
    } else {
        from_json_str(text, origin)
    }
}

pub fn parse_scheme(path: impl AsRef<Path>) -> Result<SchemeConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scheme_str(&text, &path.display().to_string())
}
