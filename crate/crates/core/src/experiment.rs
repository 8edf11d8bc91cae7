//! The three measurements: phase sweep (classical and two-photon fringes),
//! incoherent-pump control and the pump-wavelength map.
//!
//! Port 1 of the interferometer is the clockwise output mode. It takes the
//! longer, lossier path (`path_loss_ratio`) and feeds channel A; port 2 feeds
//! channel B.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::derive_seed;
use crate::detector::{
    best_period, dead_time_loss, estimate_accidentals, generate_timetags, histogram,
    integrate_peak, visibility_raw_and_corrected, window_capture_fraction, AnalysisSettings,
    DetectorError, DetectorSpec, FringePeriod, PeriodComparison, VisibilityPair,
};
use crate::fock::{mzi_output_state_with, outcome_probability, FockError, DEFAULT_N_MAX};
use crate::pairgen::{
    car_estimate, noise_singles_rate, signal_pair_rate, Detection, DetectionChannel,
    PairgenError, PumpConfig, RateModel,
};
use crate::resonator::{ResonatorError, RingSpec};

const STREAM_SWEEP: u64 = 1;
const STREAM_MAP: u64 = 2;
const STREAM_WALK: u64 = 3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration `{0}`: {1}")]
    InvalidConfig(&'static str, String),
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Resonator(#[from] ResonatorError),
    #[error(transparent)]
    Pairgen(#[from] PairgenError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitConfig {
    pub ring: RingSpec,
    pub pumps: PumpConfig,
    pub rates: RateModel,
    /// Cross ratio of the output directional coupler.
    pub mzi_reflectivity: f64,
    /// rad/mW
    pub phase_per_heater_mw: f64,
    /// Transmission of port 1 relative to port 2.
    pub path_loss_ratio: f64,
    /// Static phase offset between the two paths, rad.
    pub phase_offset: f64,
    /// Standard deviation of the per-point random-walk phase step, rad.
    pub phase_walk_sigma: f64,
    /// Fraction of pairs emitted in the coherent cw/ccw superposition; the
    /// rest leave as an equal mixture of both photons cw or both ccw.
    pub pair_coherence: f64,
    /// Detectors on port 1 and port 2.
    pub detectors: (DetectorSpec, DetectorSpec),
    pub analysis: AnalysisSettings,
    /// Integration time per point, s.
    pub integration_time: f64,
    pub base_seed: u64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        let ring = RingSpec::default();
        Self {
            pumps: PumpConfig::symmetric(&ring, 3, 350e-6),
            ring,
            rates: RateModel::default(),
            mzi_reflectivity: 0.5,
            phase_per_heater_mw: 0.1,
            path_loss_ratio: 1.0 / 1.67,
            phase_offset: 0.0,
            phase_walk_sigma: 0.0,
            pair_coherence: 0.96,
            detectors: (DetectorSpec::id210(), DetectorSpec::id230()),
            analysis: AnalysisSettings::default(),
            integration_time: 90.0,
            base_seed: 2015,
        }
    }
}

impl CircuitConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.ring.validate()?;
        self.pumps.validate()?;
        self.rates.validate()?;
        self.detectors.0.validate()?;
        self.detectors.1.validate()?;
        let check = |name: &'static str, ok: bool, v: f64, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(ExperimentError::InvalidConfig(name, format!("{v} must be {what}")))
            }
        };
        let r = self.mzi_reflectivity;
        check("mzi_reflectivity", (0.0..=1.0).contains(&r), r, "in [0, 1]")?;
        let l = self.path_loss_ratio;
        check("path_loss_ratio", l > 0.0 && l <= 1.0, l, "in (0, 1]")?;
        let t = self.integration_time;
        check("integration_time", t.is_finite() && t > 0.0, t, "> 0")?;
        let c = self.pair_coherence;
        check("pair_coherence", (0.0..=1.0).contains(&c), c, "in [0, 1]")?;
        let s = self.phase_walk_sigma;
        check("phase_walk_sigma", s.is_finite() && s >= 0.0, s, ">= 0")?;
        let p = self.phase_offset;
        check("phase_offset", p.is_finite(), p, "finite")?;
        let h = self.phase_per_heater_mw;
        check("phase_per_heater_mw", h.is_finite(), h, "finite")?;
        let a = &self.analysis;
        for (name, v) in [
            ("analysis.bin_width", a.bin_width),
            ("analysis.delay_range", a.delay_range),
            ("analysis.window", a.window),
            ("analysis.accidental_offset", a.accidental_offset),
            ("analysis.accidental_span", a.accidental_span),
        ] {
            check(name, v.is_finite() && v > 0.0, v, "> 0")?;
        }
        Ok(())
    }

    /// Pump 2 moved one resonance toward the centre: the harmonic mean of the
    /// pumps no longer lands on a resonance and no degenerate pairs form.
    pub fn incoherent_control(&self) -> Self {
        let toward_centre = if self.pumps.lambda2 > self.ring.center_wavelength {
            -self.ring.fsr
        } else {
            self.ring.fsr
        };
        Self {
            pumps: PumpConfig {
                lambda2: self.pumps.lambda2 + toward_centre,
                ..self.pumps.clone()
            },
            ..self.clone()
        }
    }

    /// Same config with pumps on resonances `-m` and `+m`, total power kept.
    pub fn with_symmetric_pumps(&self, m: i64) -> Self {
        let total = self.pumps.total_power();
        let pumps = PumpConfig::symmetric(&self.ring, m, total / 2.0);
        Self {
            pumps: PumpConfig {
                power1: self.pumps.power1,
                power2: self.pumps.power2,
                ..pumps
            },
            ..self.clone()
        }
    }

    /// Effective detectors of channel A (port 1, with path loss) and B.
    pub fn channel_detectors(&self) -> (DetectorSpec, DetectorSpec) {
        (
            self.detectors.0.attenuated(self.path_loss_ratio),
            self.detectors.1.clone(),
        )
    }

    pub fn detection(&self) -> Detection {
        Detection {
            a: DetectionChannel {
                detector: self.detectors.0.clone(),
                transmission: self.path_loss_ratio,
            },
            b: DetectionChannel {
                detector: self.detectors.1.clone(),
                transmission: 1.0,
            },
        }
    }
}

/// Linear heater calibration. NaN for a negative power.
pub fn heater_to_phase(heater_power_mw: f64, calibration: f64) -> f64 {
    if heater_power_mw < 0.0 {
        f64::NAN
    } else {
        calibration * heater_power_mw
    }
}

/// Phases for a heater-power sequence with a Gaussian random walk of step
/// `walk_sigma` added on top of the linear calibration.
pub fn heater_sweep_phases(
    heater_powers_mw: &[f64],
    calibration: f64,
    walk_sigma: f64,
    seed: u64,
) -> Vec<f64> {
    let nominal: Vec<f64> = heater_powers_mw
        .iter()
        .map(|&p| heater_to_phase(p, calibration))
        .collect();
    add_phase_walk(&nominal, walk_sigma, seed)
}

fn add_phase_walk(phases: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    if sigma == 0.0 {
        return phases.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, sigma).expect("sigma validated");
    let mut drift = 0.0;
    phases
        .iter()
        .map(|&p| {
            drift += step.sample(&mut rng);
            p + drift
        })
        .collect()
}

/// Normalized classical laser power at (port 1, port 2).
///
/// Contrast `2 sqrt(R (1 - R))` for coupler reflectivity `R`; port 1 carries
/// the extra path loss.
pub fn classical_port_powers(theta: f64, config: &CircuitConfig) -> (f64, f64) {
    let r = config.mzi_reflectivity;
    let contrast = 2.0 * (r * (1.0 - r)).sqrt();
    let c = (theta + 2.0 * config.phase_offset).cos();
    (
        (1.0 - contrast * c) / 2.0 * config.path_loss_ratio,
        (1.0 + contrast * c) / 2.0,
    )
}

/// Probabilities of (1,1), (2,0) and (0,2) at the interferometer output for
/// one emitted pair.
pub fn outcome_probabilities(
    theta: f64,
    config: &CircuitConfig,
) -> Result<(f64, f64, f64), ExperimentError> {
    let r = config.mzi_reflectivity;
    let state = mzi_output_state_with(theta + 2.0 * config.phase_offset, r, DEFAULT_N_MAX)?;
    let c = config.pair_coherence;
    let p11 = c * outcome_probability(&state, 1, 1) + (1.0 - c) * 2.0 * r * (1.0 - r);
    let bunched = (1.0 - c) * ((1.0 - r).powi(2) + r * r) / 2.0;
    let p20 = c * outcome_probability(&state, 2, 0) + bunched;
    let p02 = c * outcome_probability(&state, 0, 2) + bunched;
    Ok((p11, p20, p02))
}

/// Source-level rates feeding the two channels at one phase, all in Hz of
/// photons before detection.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRates {
    /// Pairs split one photon per port.
    pub split_pairs: f64,
    /// Photons on port 1 and port 2 with no partner on the other port.
    pub singles: (f64, f64),
}

pub fn channel_rates(theta: f64, config: &CircuitConfig) -> Result<ChannelRates, ExperimentError> {
    let pair = signal_pair_rate(&config.rates, &config.pumps, &config.ring);
    let noise = noise_singles_rate(&config.rates, &config.pumps);
    let (p11, p20, p02) = outcome_probabilities(theta, config)?;
    Ok(ChannelRates {
        split_pairs: pair * p11,
        singles: (noise.0 + 2.0 * pair * p20, noise.1 + 2.0 * pair * p02),
    })
}

/// Mean counts per integration time from the analytic rate model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    /// Counts in the coincidence window, accidentals included.
    pub peak: f64,
    /// Accidental counts per coincidence window.
    pub accidental: f64,
    /// Recorded click rates, Hz.
    pub recorded: (f64, f64),
}

pub fn expected_counts(theta: f64, config: &CircuitConfig) -> Result<ExpectedCounts, ExperimentError> {
    let rates = channel_rates(theta, config)?;
    let (da, db) = config.channel_detectors();
    let incident_a = da.efficiency * (rates.split_pairs + rates.singles.0) + da.dark_rate;
    let incident_b = db.efficiency * (rates.split_pairs + rates.singles.1) + db.dark_rate;
    let live_a = 1.0 - dead_time_loss(incident_a, &da);
    let live_b = 1.0 - dead_time_loss(incident_b, &db);
    let window = config.analysis.window;
    let t = config.integration_time;
    let capture = window_capture_fraction(window, &da, &db);
    let true_rate = rates.split_pairs * da.efficiency * db.efficiency * capture * live_a * live_b;
    let (rec_a, rec_b) = (incident_a * live_a, incident_b * live_b);
    let accidental = rec_a * rec_b * window * t;
    Ok(ExpectedCounts {
        peak: true_rate * t + accidental,
        accidental,
        recorded: (rec_a, rec_b),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Nominal phase.
    pub theta: f64,
    /// Phase actually applied after drift.
    pub applied_theta: f64,
    pub classical_p1: f64,
    pub classical_p2: f64,
    pub peak_counts: u64,
    pub accidental_mean: f64,
    pub accidental_std: f64,
    /// Recorded tag rates on channels A and B, Hz.
    pub recorded_rates: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    /// Two-photon fringe fits at period pi; `None` when the sweep cannot
    /// support a fit.
    pub visibility: Option<VisibilityPair>,
    pub coincidence_period: Option<PeriodComparison>,
    pub classical_period_p1: Option<PeriodComparison>,
    pub classical_period_p2: Option<PeriodComparison>,
    /// CAR of the rate model at the configured pumps.
    pub car_model: f64,
    /// Fitted fringe maximum over the mean accidental floor, floor removed.
    pub car_measured: f64,
    pub mean_accidental: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub summary: SweepSummary,
}

impl SweepResult {
    pub fn phases(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn peak_counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.peak_counts as f64).collect()
    }

    /// Writes the column header, one row per point and the "#" summary footer.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta_rad,classical_p1,classical_p2,peak_counts,accidental_mean,accidental_std")?;
        for p in &self.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p.theta, p.classical_p1, p.classical_p2, p.peak_counts, p.accidental_mean, p.accidental_std
            )?;
        }
        for (k, v) in self.summary_lines() {
            writeln!(w, "#{k}={v}")?;
        }
        Ok(())
    }

    pub fn summary_lines(&self) -> Vec<(String, String)> {
        let s = &self.summary;
        let mut out = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(v) = &s.visibility {
            put("v_raw", v.raw.visibility.to_string());
            put("v_raw_sigma", v.raw.visibility_sigma.to_string());
            put("v_corrected", v.corrected.visibility.to_string());
            put("v_corrected_sigma", v.corrected.visibility_sigma.to_string());
            put("fringe_phase", v.raw.phase.to_string());
            put("fit_degenerate", v.raw.degenerate.to_string());
        }
        for (key, cmp) in [
            ("coincidence_period", &s.coincidence_period),
            ("classical_period_p1", &s.classical_period_p1),
            ("classical_period_p2", &s.classical_period_p2),
        ] {
            if let Some(c) = cmp {
                put(key, period_name(c.best).to_string());
                put(&format!("{key}_residual_ratio"), c.residual_ratio.to_string());
            }
        }
        put("car_model", s.car_model.to_string());
        put("car_measured", s.car_measured.to_string());
        put("mean_accidental", s.mean_accidental.to_string());
        out
    }
}

fn period_name(p: FringePeriod) -> &'static str {
    match p {
        FringePeriod::Pi => "pi",
        FringePeriod::TwoPi => "2pi",
    }
}

/// Monte-Carlo measurement at one phase with its own seed.
pub fn simulate_point(
    config: &CircuitConfig,
    theta: f64,
    applied_theta: f64,
    seed: u64,
) -> Result<SweepPoint, ExperimentError> {
    let rates = channel_rates(applied_theta, config)?;
    let (da, db) = config.channel_detectors();
    let (a, b) = generate_timetags(
        rates.split_pairs,
        rates.singles,
        config.integration_time,
        &da,
        &db,
        seed,
    )?;
    let an = &config.analysis;
    let hist = histogram(&a, &b, an.bin_width, an.delay_range)?;
    let peak = integrate_peak(&hist, an.window)?;
    let acc = estimate_accidentals(&hist, an.accidental_offset, an.accidental_span, an.window)?;
    let (classical_p1, classical_p2) = classical_port_powers(applied_theta, config);
    Ok(SweepPoint {
        theta,
        applied_theta,
        classical_p1,
        classical_p2,
        peak_counts: peak,
        accidental_mean: acc.mean,
        accidental_std: acc.std,
        recorded_rates: (a.rate(), b.rate()),
    })
}

/// Phase sweep: classical port powers and the Monte-Carlo two-photon fringe.
///
/// Points run in parallel; each uses a seed derived from `base_seed` and its
/// index, so the result does not depend on scheduling.
pub fn run_phase_sweep(config: &CircuitConfig, phases: &[f64]) -> Result<SweepResult, ExperimentError> {
    config.validate()?;
    if phases.len() < 2 {
        return Err(ExperimentError::InsufficientPoints(format!(
            "a sweep needs at least 2 phases, got {}",
            phases.len()
        )));
    }
    if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
        return Err(ExperimentError::InvalidConfig("phases", format!("{p} is not finite")));
    }
    let applied = add_phase_walk(
        phases,
        config.phase_walk_sigma,
        derive_seed(config.base_seed, STREAM_WALK, 0),
    );
    let points = (0..phases.len())
        .into_par_iter()
        .map(|i| {
            simulate_point(
                config,
                phases[i],
                applied[i],
                derive_seed(config.base_seed, STREAM_SWEEP, i as u64),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(config, &points)?;
    Ok(SweepResult { points, summary })
}

fn summarize(config: &CircuitConfig, points: &[SweepPoint]) -> Result<SweepSummary, ExperimentError> {
    let phases: Vec<f64> = points.iter().map(|p| p.theta).collect();
    let counts: Vec<f64> = points.iter().map(|p| p.peak_counts as f64).collect();
    let p1: Vec<f64> = points.iter().map(|p| p.classical_p1).collect();
    let p2: Vec<f64> = points.iter().map(|p| p.classical_p2).collect();
    let n = points.len() as f64;
    let mean_accidental = points.iter().map(|p| p.accidental_mean).sum::<f64>() / n;
    // spread of a single window, averaged over points
    let acc_std = points.iter().map(|p| p.accidental_std).sum::<f64>() / n;

    let visibility =
        visibility_raw_and_corrected(&phases, &counts, (mean_accidental, acc_std), FringePeriod::Pi).ok();
    let car_measured = match &visibility {
        Some(v) if mean_accidental > 0.0 => {
            (v.raw.offset + v.raw.amplitude - mean_accidental) / mean_accidental
        }
        _ => f64::INFINITY,
    };
    let car_model = car_estimate(
        &config.rates,
        &config.pumps,
        &config.ring,
        config.analysis.window,
        Some(&config.detection()),
    )?;
    Ok(SweepSummary {
        visibility,
        coincidence_period: best_period(&phases, &counts).ok(),
        classical_period_p1: best_period(&phases, &p1).ok(),
        classical_period_p2: best_period(&phases, &p2).ok(),
        car_model,
        car_measured,
        mean_accidental,
    })
}

/// Outcome of the incoherent-pump control.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlResult {
    pub sweep: SweepResult,
    /// Fitted raw visibility below three of its standard deviations.
    pub visibility_consistent_with_zero: bool,
    /// Total peak-window counts over the sweep.
    pub peak_total: f64,
    /// Accidental expectation for the same windows.
    pub accidental_total: f64,
    /// `(peak_total - accidental_total) / sigma`.
    pub excess_sigma: f64,
    /// Peak window equal to the accidental floor within 5 sigma.
    pub peak_at_floor: bool,
}

impl ControlResult {
    pub fn passed(&self) -> bool {
        self.visibility_consistent_with_zero && self.peak_at_floor
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        self.sweep.write_csv(&mut w)?;
        writeln!(w, "#incoherent_visibility_consistent_with_zero={}", self.visibility_consistent_with_zero)?;
        writeln!(w, "#peak_total={}", self.peak_total)?;
        writeln!(w, "#accidental_total={}", self.accidental_total)?;
        writeln!(w, "#excess_sigma={}", self.excess_sigma)?;
        writeln!(w, "#peak_at_accidental_floor={}", self.peak_at_floor)?;
        writeln!(w, "#control_passed={}", self.passed())
    }
}

/// Phase sweep with pump 2 detuned by one FSR (see
/// [`CircuitConfig::incoherent_control`]), judged against the accidental floor.
pub fn run_incoherent_control(
    config: &CircuitConfig,
    phases: &[f64],
) -> Result<ControlResult, ExperimentError> {
    let sweep = run_phase_sweep(&config.incoherent_control(), phases)?;
    let visibility_consistent_with_zero = match &sweep.summary.visibility {
        Some(v) => v.raw.degenerate || v.raw.visibility < 3.0 * v.raw.visibility_sigma,
        None => true,
    };
    let peak_total: f64 = sweep.points.iter().map(|p| p.peak_counts as f64).sum();
    let accidental_total: f64 = sweep.points.iter().map(|p| p.accidental_mean).sum();
    // Poisson spread of the peak windows plus the uncertainty of each floor estimate
    let floor_var: f64 = sweep
        .points
        .iter()
        .map(|p| {
            let windows = accidental_window_count(&config.analysis) as f64;
            p.accidental_std.powi(2) / windows
        })
        .sum();
    let sigma = (accidental_total.max(peak_total) + floor_var).sqrt();
    let excess_sigma = if sigma > 0.0 {
        (peak_total - accidental_total) / sigma
    } else {
        0.0
    };
    Ok(ControlResult {
        sweep,
        visibility_consistent_with_zero,
        peak_total,
        accidental_total,
        excess_sigma,
        peak_at_floor: excess_sigma.abs() <= 5.0,
    })
}

fn accidental_window_count(a: &AnalysisSettings) -> usize {
    let w = (a.bin_width * 1e12).round();
    let per = ((a.window * 1e12).round() / w).round().max(1.0);
    let first = ((a.accidental_offset * 1e12).round() / w).ceil();
    let last = ((a.accidental_offset + a.accidental_span) * 1e12 / w).floor();
    (2.0 * ((last - first + 1.0) / per).floor()).max(2.0) as usize
}

/// Evenly spaced grid of `round(span / step) + 1` points centred on `centre`.
pub fn wavelength_grid(centre: f64, span: f64, step: f64) -> Result<Vec<f64>, ExperimentError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(ExperimentError::InvalidConfig("step", format!("{step} must be > 0")));
    }
    if !(span.is_finite() && span >= 3.0 * step * (1.0 - 1e-9)) {
        return Err(ExperimentError::InvalidConfig(
            "span",
            format!("{span} must cover at least 3 steps of {step}"),
        ));
    }
    let n = (span / step).round() as usize + 1;
    let half = (n - 1) as f64 / 2.0;
    Ok((0..n).map(|i| centre + (i as f64 - half) * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    pub peak_counts: u64,
    pub expected_peak: f64,
    pub accidental_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub grid1: Vec<f64>,
    pub grid2: Vec<f64>,
    /// Row-major, `grid1` outer.
    pub points: Vec<MapPoint>,
    pub fixed_theta: f64,
    /// FWHM of the `lambda1` cut through the brightest row, nm.
    pub ridge_fwhm: Option<f64>,
    /// `lambda2` of that cut.
    pub cut_lambda2: f64,
}

impl MapResult {
    pub fn at(&self, i: usize, j: usize) -> &MapPoint {
        &self.points[i * self.grid2.len() + j]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "lambda1_nm,lambda2_nm,peak_counts")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.lambda1, p.lambda2, p.peak_counts)?;
        }
        writeln!(w, "#fixed_theta={}", self.fixed_theta)?;
        writeln!(w, "#grid={}x{}", self.grid1.len(), self.grid2.len())?;
        writeln!(w, "#cut_lambda2_nm={}", self.cut_lambda2)?;
        match self.ridge_fwhm {
            Some(f) => writeln!(w, "#ridge_fwhm_nm={f}"),
            None => writeln!(w, "#ridge_fwhm_nm=nan"),
        }
    }
}

/// Peak coincidences over a grid of pump wavelengths at a fixed phase.
///
/// Each point draws Poisson counts around the analytic expectation of
/// [`expected_counts`], which the phase sweep's Monte Carlo reproduces.
pub fn run_wavelength_map(
    config: &CircuitConfig,
    grid1: &[f64],
    grid2: &[f64],
    fixed_theta: f64,
) -> Result<MapResult, ExperimentError> {
    config.validate()?;
    if grid1.is_empty() || grid2.is_empty() {
        return Err(ExperimentError::InsufficientPoints("wavelength grids must be non-empty".into()));
    }
    if !fixed_theta.is_finite() {
        return Err(ExperimentError::InvalidConfig("fixed_theta", format!("{fixed_theta}")));
    }
    let n2 = grid2.len();
    let points = (0..grid1.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let (l1, l2) = (grid1[idx / n2], grid2[idx % n2]);
            let cfg = CircuitConfig {
                pumps: PumpConfig {
                    lambda1: l1,
                    lambda2: l2,
                    ..config.pumps.clone()
                },
                ..config.clone()
            };
            cfg.pumps.validate()?;
            let e = expected_counts(fixed_theta, &cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.base_seed, STREAM_MAP, idx as u64));
            let counts = if e.peak > 0.0 {
                Poisson::new(e.peak)
                    .map_err(|err| ExperimentError::InvalidConfig("map", err.to_string()))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
            Ok(MapPoint {
                lambda1: l1,
                lambda2: l2,
                peak_counts: counts,
                expected_peak: e.peak,
                accidental_mean: e.accidental,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let brightest = points
        .iter()
        .enumerate()
        .max_by_key(|(_, p)| p.peak_counts)
        .map(|(i, _)| i % n2)
        .unwrap_or(0);
    let cut: Vec<(f64, f64)> = (0..grid1.len())
        .map(|i| {
            let p = &points[i * n2 + brightest];
            (p.lambda1, p.peak_counts as f64)
        })
        .collect();
    let floor = (0..grid1.len())
        .map(|i| points[i * n2 + brightest].accidental_mean)
        .sum::<f64>()
        / grid1.len() as f64;
    Ok(MapResult {
        grid1: grid1.to_vec(),
        grid2: grid2.to_vec(),
        points,
        fixed_theta,
        ridge_fwhm: fwhm(&cut, floor),
        cut_lambda2: grid2[brightest],
    })
}

/// Full width at half maximum above `floor`, by linear interpolation of the
/// half-maximum crossings on either side of the largest sample.
pub fn fwhm(samples: &[(f64, f64)], floor: f64) -> Option<f64> {
    let (imax, &(_, ymax)) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    let half = floor + (ymax - floor) / 2.0;
    if ymax <= floor {
        return None;
    }
    let cross = |i: usize, j: usize| {
        let (x0, y0) = samples[i];
        let (x1, y1) = samples[j];
        x0 + (half - y0) * (x1 - x0) / (y1 - y0)
    };
    let left = (0..imax).rev().find(|&i| samples[i].1 < half).map(|i| cross(i, i + 1))?;
    let right = (imax + 1..samples.len()).find(|&i| samples[i].1 < half).map(|i| cross(i - 1, i))?;
    Some((right - left).abs())
}

/// Evenly spaced phases over `[0, theta_max]`, endpoints included.
pub fn phase_grid(n_points: usize, theta_max: f64) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![0.0],
        n => (0..n).map(|i| theta_max * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default sweep: 25 points over one classical period.
pub fn default_phases() -> Vec<f64> {
    phase_grid(25, 2.0 * PI)
}
