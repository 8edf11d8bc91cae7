//! Free-running single-photon detectors and the time-correlation chain.
//!
//! [`timetags`] produces click streams from physical rates, [`histogram`]
//! correlates two streams into a start-stop delay histogram and extracts the
//! peak and accidental floor, [`fringe`] fits interference fringes to the
//! resulting counts.

pub mod fringe;
pub mod histogram;
pub mod timetags;

use thiserror::Error;

pub use fringe::{
    best_period, fit_fringe, fit_fringe_with_offset_noise, pointwise_visibility,
    visibility_raw_and_corrected, FringeFit, FringePeriod, PeriodComparison, VisibilityPair,
};
pub use histogram::{
    estimate_accidentals, histogram, histogram_tags, integrate_peak, AccidentalEstimate,
    CoincidenceHistogram,
};
pub use timetags::{generate_timetags, read_timetags, write_timetags, Channel, TimeTagStream};

/// Picoseconds per second.
pub const PS_PER_S: f64 = 1e12;

/// Largest number of expected Monte-Carlo events accepted per call.
pub const MAX_EXPECTED_EVENTS: f64 = 1e9;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("invalid detector parameter `{0}`: {1}")]
    InvalidSpec(&'static str, String),
    #[error("invalid duration {0} s")]
    InvalidDuration(f64),
    #[error("invalid rate `{0}`: {1}")]
    InvalidRate(&'static str, f64),
    #[error("{0:.3e} expected events exceeds the limit of {MAX_EXPECTED_EVENTS:e}")]
    TooManyEvents(f64),
    #[error("time tags on channel {0} are not strictly increasing")]
    UnsortedStream(Channel),
    #[error("time tag {tag} ps on channel {channel} is outside [0, {duration}] ps")]
    TagOutOfRange {
        channel: Channel,
        tag: i64,
        duration: i64,
    },
    #[error("invalid histogram settings: {0}")]
    InvalidHistogram(String),
    #[error("integration window {window} s exceeds the delay range {range} s")]
    WindowExceedsRange { window: f64, range: f64 },
    #[error("insufficient bins for accidental estimation: {0}")]
    InsufficientBins(String),
    #[error("fringe fit needs at least 5 points, got {0}")]
    InsufficientPoints(usize),
    #[error("phases span {span:.4} rad, less than one period {period:.4} rad")]
    InsufficientSpan { span: f64, period: f64 },
    #[error("phase and count arrays differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid fringe data: {0}")]
    InvalidFringeData(String),
    #[error("fringe design matrix is singular")]
    SingularDesign,
    #[error("time-tag parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Click-level detector model. Dead time is non-paralyzable.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub efficiency: f64,
    /// Hz
    pub dark_rate: f64,
    /// s
    pub dead_time: f64,
    /// Gaussian timing jitter standard deviation, s.
    pub jitter_sigma: f64,
}

impl DetectorSpec {
    /// Free-running InGaAs APD, 10 % efficiency, 2.5 kHz dark, 50 us dead time.
    pub fn id210() -> Self {
        Self {
            efficiency: 0.10,
            dark_rate: 2500.0,
            dead_time: 50e-6,
            jitter_sigma: 49.5e-12,
        }
    }

    /// Free-running InGaAs APD, 25 % efficiency, 200 Hz dark, 25 us dead time.
    pub fn id230() -> Self {
        Self {
            efficiency: 0.25,
            dark_rate: 200.0,
            dead_time: 25e-6,
            jitter_sigma: 49.5e-12,
        }
    }

    /// Noiseless detector: unit efficiency, no dark counts, dead time or jitter.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_rate: 0.0,
            dead_time: 0.0,
            jitter_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(DetectorError::InvalidSpec(
                "efficiency",
                format!("{} must be in [0, 1]", self.efficiency),
            ));
        }
        for (name, v) in [
            ("dark_rate", self.dark_rate),
            ("dead_time", self.dead_time),
            ("jitter_sigma", self.jitter_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DetectorError::InvalidSpec(name, format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Same detector behind an extra loss `transmission` (efficiency scales).
    pub fn attenuated(&self, transmission: f64) -> Self {
        Self {
            efficiency: self.efficiency * transmission,
            ..self.clone()
        }
    }
}

/// Fraction of incident events lost to a non-paralyzable dead time: `r tau / (1 + r tau)`.
pub fn dead_time_loss(incident_rate: f64, spec: &DetectorSpec) -> f64 {
    let x = incident_rate * spec.dead_time;
    x / (1.0 + x)
}

/// Recorded rate for Poisson input at `incident_rate`: `r / (1 + r tau)`.
pub fn recorded_rate(incident_rate: f64, spec: &DetectorSpec) -> f64 {
    incident_rate / (1.0 + incident_rate * spec.dead_time)
}

/// Histogram and estimator settings shared by every coincidence measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    /// s
    pub bin_width: f64,
    /// Half-span of the delay histogram, s.
    pub delay_range: f64,
    /// Coincidence integration window, s.
    pub window: f64,
    /// Start of the accidental region, s from zero delay.
    pub accidental_offset: f64,
    /// Length of the accidental region on each side, s.
    pub accidental_span: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            bin_width: 32e-12,
            delay_range: 400e-9,
            window: 224e-12,
            accidental_offset: 80e-9,
            accidental_span: 320e-9,
        }
    }
}

/// Fraction of true pairs whose delay falls in the integration window
/// `[-window/2, window/2)` for the combined Gaussian jitter of two detectors.
pub fn window_capture_fraction(window: f64, a: &DetectorSpec, b: &DetectorSpec) -> f64 {
    let sigma = (a.jitter_sigma.powi(2) + b.jitter_sigma.powi(2)).sqrt();
    if sigma == 0.0 {
        return 1.0;
    }
    statrs::function::erf::erf(window / 2.0 / (sigma * std::f64::consts::SQRT_2))
}
