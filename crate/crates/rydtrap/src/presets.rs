//! Built-in trap settings and the run configuration file.
//!
//! Configuration is TOML. Every physical quantity is a string carrying its
//! unit, e.g. `u2 = "-3 mV"` or `frequency = "430 Hz"`; bare numbers are
//! rejected for dimensioned fields.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{CoefficientTable, DriveSettings, FieldError, HarmonicPotential};
use crate::units;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown geometry '{0}' (expected trapA, trapB-alpha, trapB-beta or a coefficient file)")]
    UnknownGeometry(String),
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("quantity '{text}' for {field}: {reason}")]
    Quantity { field: String, text: String, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Physical dimension expected for a configuration value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Voltage,
    Frequency,
    Time,
    Temperature,
    Length,
    Field,
}

impl Dim {
    fn base(&self) -> &'static str {
        match self {
            Dim::Voltage => "V",
            Dim::Frequency => "Hz",
            Dim::Time => "s",
            Dim::Temperature => "K",
            Dim::Length => "m",
            Dim::Field => "V/m",
        }
    }
}

fn prefix(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "G" => 1e9,
        "M" => 1e6,
        "k" => 1e3,
        "m" => 1e-3,
        "u" | "µ" | "μ" => 1e-6,
        "n" => 1e-9,
        "p" => 1e-12,
        _ => return None,
    })
}

/// Parse "value unit" into SI, checking the unit against `dim`.
pub fn parse_quantity(field: &str, text: &str, dim: Dim) -> Result<f64, ConfigError> {
    let err = |reason: &str| ConfigError::Quantity { field: field.into(), text: text.into(), reason: reason.into() };
    let t = text.trim();
    let split = t.find(|c: char| c.is_whitespace()).ok_or_else(|| err(&format!("missing unit (expected {})", dim.base())))?;
    let (num, unit) = t.split_at(split);
    let value: f64 = num.parse().map_err(|_| err("not a number"))?;
    let unit = unit.trim();
    let base = dim.base();
    let pre = unit.strip_suffix(base).ok_or_else(|| err(&format!("unit must be {base} with an optional prefix")))?;
    // "m" alone is metres, not a milli prefix on nothing
    let scale = prefix(pre).ok_or_else(|| err(&format!("unknown prefix '{pre}'")))?;
    if !value.is_finite() {
        return Err(err("not finite"));
    }
    Ok(value * scale)
}

/// One row of the built-in trap table with its published performance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub geometry: &'static str,
    pub drive: DriveSettings,
    /// (transverse, longitudinal) macromotion [Hz]
    pub macromotion_hz: (f64, f64),
    /// 50% survival temperature [K]
    pub depth_k: f64,
    /// mean tilt at half the depth [rad]
    pub mean_theta: f64,
}

const fn drive(u1: f64, u2: f64, u30: f64, f_hz: f64, eta: f64) -> DriveSettings {
    DriveSettings { u1, u2, u30, omega: units::TWO_PI * f_hz, eta }
}

pub const TRAP_A: Preset = Preset {
    name: "trapA",
    geometry: "trapA",
    drive: drive(0.2, -0.003, 0.056, 430.0, 4.49),
    macromotion_hz: (64.0, 175.0),
    depth_k: 180e-6,
    mean_theta: 9.38e-3,
};

pub const TRAP_B_ALPHA: Preset = Preset {
    name: "trapB-alpha",
    geometry: "trapB",
    drive: drive(1.5, 0.0, 0.5, 20700.0, 0.05),
    macromotion_hz: (1460.0, 2910.0),
    depth_k: 1000e-6,
    mean_theta: 4.22e-3,
};

pub const TRAP_B_BETA: Preset = Preset {
    name: "trapB-beta",
    geometry: "trapB",
    drive: drive(0.2, -0.00045, 0.14, 2860.0, 0.05),
    macromotion_hz: (207.0, 414.0),
    depth_k: 35e-6,
    mean_theta: 3.57e-3,
};

pub const PRESETS: [Preset; 3] = [TRAP_A, TRAP_B_ALPHA, TRAP_B_BETA];

pub fn preset(name: &str) -> Result<Preset, ConfigError> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name)).copied().ok_or_else(|| ConfigError::UnknownGeometry(name.into()))
}

impl Preset {
    pub fn potential(&self) -> Result<HarmonicPotential, ConfigError> {
        Ok(HarmonicPotential::bundled(self.geometry, self.drive.eta)?)
    }
}

/// Which level's polarizability drives the motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AtomState {
    #[default]
    G,
    E,
}

impl AtomState {
    pub fn alpha_hz(&self) -> f64 {
        use crate::stark::{polarizability_hz, RydbergLevel};
        match self {
            AtomState::G => polarizability_hz(&RydbergLevel::circular(50)),
            AtomState::E => polarizability_hz(&RydbergLevel::circular(51)),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    u1: Option<String>,
    u2: Option<String>,
    u30: Option<String>,
    frequency: Option<String>,
    eta: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    temperature: Option<String>,
    count: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    duration: Option<String>,
    workers: Option<usize>,
    state: Option<AtomState>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: Option<String>,
    #[serde(default)]
    drive: RawDrive,
    #[serde(default)]
    ensemble: RawEnsemble,
    #[serde(default)]
    run: RawRun,
}

/// Where the potential coefficients come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GeometrySource {
    Preset(&'static str),
    File(PathBuf),
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub geometry: GeometrySource,
    /// bundled table name used with the preset or file
    pub table: String,
    pub drive: DriveSettings,
    pub temperature: f64,
    pub count: usize,
    pub seed: u64,
    pub duration: f64,
    pub workers: usize,
    pub state: AtomState,
}

impl RunConfig {
    /// Defaults of a built-in geometry.
    pub fn from_preset(p: &Preset) -> Self {
        Self {
            geometry: GeometrySource::Preset(p.name),
            table: p.geometry.to_string(),
            drive: p.drive,
            temperature: 300e-9,
            count: 100,
            seed: 1,
            duration: 1.0,
            workers: 0,
            state: AtomState::G,
        }
    }

    /// Resolve a geometry name: a preset, or a path to a coefficient CSV.
    pub fn for_geometry(name: &str) -> Result<Self, ConfigError> {
        if let Ok(p) = preset(name) {
            return Ok(Self::from_preset(&p));
        }
        let path = Path::new(name);
        if path.exists() {
            let table = CoefficientTable::from_path(path)?;
            let g = table.rows.first().map(|r| r.geometry.clone()).ok_or_else(|| ConfigError::Malformed("empty coefficient file".into()))?;
            let mut cfg = Self::from_preset(&TRAP_A);
            cfg.geometry = GeometrySource::File(path.to_path_buf());
            cfg.table = g;
            return Ok(cfg);
        }
        Err(ConfigError::UnknownGeometry(name.into()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Malformed(e.to_string()))?;
        let mut cfg = Self::for_geometry(raw.geometry.as_deref().unwrap_or("trapA"))?;
        let d = &raw.drive;
        if let Some(s) = &d.u1 {
            cfg.drive.u1 = parse_quantity("drive.u1", s, Dim::Voltage)?;
        }
        if let Some(s) = &d.u2 {
            cfg.drive.u2 = parse_quantity("drive.u2", s, Dim::Voltage)?;
        }
        if let Some(s) = &d.u30 {
            cfg.drive.u30 = parse_quantity("drive.u30", s, Dim::Voltage)?;
        }
        if let Some(s) = &d.frequency {
            cfg.drive.omega = units::TWO_PI * parse_quantity("drive.frequency", s, Dim::Frequency)?;
        }
        if let Some(eta) = d.eta {
            cfg.drive.eta = eta;
        }
        if let Some(s) = &raw.ensemble.temperature {
            cfg.temperature = parse_quantity("ensemble.temperature", s, Dim::Temperature)?;
        }
        if let Some(n) = raw.ensemble.count {
            cfg.count = n;
        }
        if let Some(s) = raw.ensemble.seed {
            cfg.seed = s;
        }
        if let Some(s) = &raw.run.duration {
            cfg.duration = parse_quantity("run.duration", s, Dim::Time)?;
        }
        if let Some(w) = raw.run.workers {
            cfg.workers = w;
        }
        if let Some(st) = raw.run.state {
            cfg.state = st;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.drive.validate().map_err(ConfigError::Malformed)?;
        if !(self.temperature >= 0.0) {
            return Err(ConfigError::Malformed("temperature must be non-negative".into()));
        }
        if !(self.duration > 0.0) {
            return Err(ConfigError::Malformed("duration must be positive".into()));
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<HarmonicPotential, ConfigError> {
        let table = match &self.geometry {
            GeometrySource::Preset(_) => CoefficientTable::bundled(&self.table)?,
            GeometrySource::File(p) => CoefficientTable::from_path(p)?,
        };
        Ok(table.potential(self.drive.eta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantities_need_units() {
        assert_eq!(parse_quantity("x", "-3 mV", Dim::Voltage).unwrap(), -3e-3);
        assert!((parse_quantity("x", "300 nK", Dim::Temperature).unwrap() - 3e-7).abs() < 1e-20);
        assert_eq!(parse_quantity("x", "2 m", Dim::Length).unwrap(), 2.0);
        assert!(parse_quantity("x", "0.2", Dim::Voltage).is_err());
        assert!(parse_quantity("x", "0.2 Hz", Dim::Voltage).is_err());
    }

    #[test]
    fn presets_match_table() {
        let a = preset("trapA").unwrap();
        assert_eq!((a.drive.u1, a.drive.u2, a.drive.u30, a.drive.eta), (0.2, -0.003, 0.056, 4.49));
        assert!((a.drive.omega / units::TWO_PI - 430.0).abs() < 1e-9);
        let b = preset("trapB-beta").unwrap();
        assert_eq!((b.drive.u1, b.drive.u2, b.drive.u30), (0.2, -0.00045, 0.14));
    }

    #[test]
    fn toml_overrides() {
        let cfg = RunConfig::from_toml_str(
            "geometry = \"trapB-alpha\"\n[drive]\nfrequency = \"21 kHz\"\n[ensemble]\ntemperature = \"1 uK\"\ncount = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.table, "trapB");
        assert!((cfg.drive.omega / units::TWO_PI - 21e3).abs() < 1e-6);
        assert_eq!(cfg.count, 7);
        assert!(RunConfig::from_toml_str("[drive]\nu1 = 0.2\n").is_err());
        assert!(RunConfig::from_toml_str("geometry = \"nowhere\"").is_err());
    }
}
