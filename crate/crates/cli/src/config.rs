//! Flat `section.key=value` configuration files.
//!
//! Missing keys keep their defaults; unknown or duplicate keys are errors.
//! Lines starting with `#` are comments.

use std::collections::HashSet;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use noonring_core::pairgen::CalibrationTarget;
use noonring_core::CircuitConfig;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key=value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for key `{key}`: {msg}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        msg: String,
    },
    #[error("invalid value for key `{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

/// Everything a config file can set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FileConfig {
    pub circuit: CircuitConfig,
    pub calibration: CalibrationTarget,
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        msg: e.to_string(),
    })
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: trimmed.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
            }
            cfg.set(line, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let c = &mut self.circuit;
        let f = || parse_value::<f64>(line, key, value);
        match key {
            "ring.center_wavelength_nm" => c.ring.center_wavelength = f()?,
            "ring.fsr_nm" => c.ring.fsr = f()?,
            "ring.loaded_q" => c.ring.loaded_q = f()?,
            "ring.extinction" => c.ring.extinction = f()?,
            "ring.dispersion_quadratic_nm" => c.ring.dispersion_quadratic = f()?,
            "ring.mode_span" => c.ring.mode_span = parse_value(line, key, value)?,
            "ring.radius_um" => c.ring.radius_um = f()?,
            "ring.gap_nm" => c.ring.gap_nm = f()?,
            "pumps.lambda1_nm" => c.pumps.lambda1 = f()?,
            "pumps.lambda2_nm" => c.pumps.lambda2 = f()?,
            "pumps.power1_w" => c.pumps.power1 = f()?,
            "pumps.power2_w" => c.pumps.power2 = f()?,
            "rates.gamma_pair" => c.rates.gamma_pair = f()?,
            "rates.gamma_self" => c.rates.gamma_self = f()?,
            "rates.raman_rate_hz" => c.rates.raman_rate = f()?,
            "rates.extraction_efficiency" => c.rates.extraction_efficiency = f()?,
            "source.pair_coherence" => c.pair_coherence = f()?,
            "mzi.reflectivity" => c.mzi_reflectivity = f()?,
            "mzi.phase_per_heater_mw" => c.phase_per_heater_mw = f()?,
            "mzi.path_loss_ratio" => c.path_loss_ratio = f()?,
            "mzi.phase_offset_rad" => c.phase_offset = f()?,
            "mzi.phase_walk_sigma_rad" => c.phase_walk_sigma = f()?,
            "detector_a.efficiency" => c.detectors.0.efficiency = f()?,
            "detector_a.dark_rate_hz" => c.detectors.0.dark_rate = f()?,
            "detector_a.dead_time_s" => c.detectors.0.dead_time = f()?,
            "detector_a.jitter_sigma_s" => c.detectors.0.jitter_sigma = f()?,
            "detector_b.efficiency" => c.detectors.1.efficiency = f()?,
            "detector_b.dark_rate_hz" => c.detectors.1.dark_rate = f()?,
            "detector_b.dead_time_s" => c.detectors.1.dead_time = f()?,
            "detector_b.jitter_sigma_s" => c.detectors.1.jitter_sigma = f()?,
            "analysis.bin_width_s" => c.analysis.bin_width = f()?,
            "analysis.delay_range_s" => c.analysis.delay_range = f()?,
            "analysis.window_s" => c.analysis.window = f()?,
            "analysis.accidental_offset_s" => c.analysis.accidental_offset = f()?,
            "analysis.accidental_span_s" => c.analysis.accidental_span = f()?,
            "run.integration_time_s" => c.integration_time = f()?,
            "run.base_seed" => c.base_seed = parse_value(line, key, value)?,
            "calibration.target_car" => self.calibration.car = f()?,
            "calibration.target_dead_time_loss" => self.calibration.dead_time_loss = f()?,
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    fn validate(&mut self) -> Result<(), ConfigError> {
        self.calibration.window = self.circuit.analysis.window;
        self.circuit.validate().map_err(|e| ConfigError::Invalid {
            key: invalid_key(&e),
            msg: e.to_string(),
        })?;
        let t = &self.calibration;
        if !(t.car.is_finite() && t.car > 0.0) {
            return Err(ConfigError::Invalid {
                key: "calibration.target_car".into(),
                msg: format!("{} must be > 0", t.car),
            });
        }
        if !(t.dead_time_loss > 0.0 && t.dead_time_loss < 1.0) {
            return Err(ConfigError::Invalid {
                key: "calibration.target_dead_time_loss".into(),
                msg: format!("{} must be in (0, 1)", t.dead_time_loss),
            });
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.circuit;
        let (a, b) = &c.detectors;
        let s = fmt_f64;
        vec![
            ("ring.center_wavelength_nm", s(c.ring.center_wavelength)),
            ("ring.fsr_nm", s(c.ring.fsr)),
            ("ring.loaded_q", s(c.ring.loaded_q)),
            ("ring.extinction", s(c.ring.extinction)),
            ("ring.dispersion_quadratic_nm", s(c.ring.dispersion_quadratic)),
            ("ring.mode_span", c.ring.mode_span.to_string()),
            ("ring.radius_um", s(c.ring.radius_um)),
            ("ring.gap_nm", s(c.ring.gap_nm)),
            ("pumps.lambda1_nm", s(c.pumps.lambda1)),
            ("pumps.lambda2_nm", s(c.pumps.lambda2)),
            ("pumps.power1_w", s(c.pumps.power1)),
            ("pumps.power2_w", s(c.pumps.power2)),
            ("rates.gamma_pair", s(c.rates.gamma_pair)),
            ("rates.gamma_self", s(c.rates.gamma_self)),
            ("rates.raman_rate_hz", s(c.rates.raman_rate)),
            ("rates.extraction_efficiency", s(c.rates.extraction_efficiency)),
            ("source.pair_coherence", s(c.pair_coherence)),
            ("mzi.reflectivity", s(c.mzi_reflectivity)),
            ("mzi.phase_per_heater_mw", s(c.phase_per_heater_mw)),
            ("mzi.path_loss_ratio", s(c.path_loss_ratio)),
            ("mzi.phase_offset_rad", s(c.phase_offset)),
            ("mzi.phase_walk_sigma_rad", s(c.phase_walk_sigma)),
            ("detector_a.efficiency", s(a.efficiency)),
            ("detector_a.dark_rate_hz", s(a.dark_rate)),
            ("detector_a.dead_time_s", s(a.dead_time)),
            ("detector_a.jitter_sigma_s", s(a.jitter_sigma)),
            ("detector_b.efficiency", s(b.efficiency)),
            ("detector_b.dark_rate_hz", s(b.dark_rate)),
            ("detector_b.dead_time_s", s(b.dead_time)),
            ("detector_b.jitter_sigma_s", s(b.jitter_sigma)),
            ("analysis.bin_width_s", s(c.analysis.bin_width)),
            ("analysis.delay_range_s", s(c.analysis.delay_range)),
            ("analysis.window_s", s(c.analysis.window)),
            ("analysis.accidental_offset_s", s(c.analysis.accidental_offset)),
            ("analysis.accidental_span_s", s(c.analysis.accidental_span)),
            ("run.integration_time_s", s(c.integration_time)),
            ("run.base_seed", c.base_seed.to_string()),
            ("calibration.target_car", s(self.calibration.car)),
            ("calibration.target_dead_time_loss", s(self.calibration.dead_time_loss)),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Shortest round-tripping text, in exponent form for very small or large values.
fn fmt_f64(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-3..1e7).contains(&v.abs()) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Maps a validation failure back to the config key that caused it.
fn invalid_key(err: &noonring_core::ExperimentError) -> String {
    use noonring_core::experiment::ExperimentError as E;
    use noonring_core::pairgen::PairgenError as P;
    use noonring_core::{DetectorError, ResonatorError};
    let field = match err {
        E::InvalidConfig(f, _) => *f,
        E::Resonator(ResonatorError::InvalidSpec(f, _)) => return format!("ring.{f}"),
        E::Pairgen(P::InvalidParameter(f, _)) => return format!("pumps/rates {f}"),
        E::Detector(DetectorError::InvalidSpec(f, _)) => return format!("detector_a/detector_b {f}"),
        _ => return "config".into(),
    };
    match field {
        "mzi_reflectivity" => "mzi.reflectivity".into(),
        "path_loss_ratio" => "mzi.path_loss_ratio".into(),
        "integration_time" => "run.integration_time_s".into(),
        "pair_coherence" => "source.pair_coherence".into(),
        "phase_walk_sigma" => "mzi.phase_walk_sigma_rad".into(),
        "phase_offset" => "mzi.phase_offset_rad".into(),
        "phase_per_heater_mw" => "mzi.phase_per_heater_mw".into(),
        other => other.to_string(),
    }
}
