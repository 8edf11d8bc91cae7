//! Photon-pair and noise rate model of the bidirectionally pumped ring.
//!
//! The degenerate pair rate is bilinear in the two pump powers (one photon
//! from each pump), while the noise photons each pump creates on its own at
//! the bi-photon resonance scale with the square of that pump's power.

use thiserror::Error;

use crate::detector::{window_capture_fraction, DetectorSpec};
use crate::resonator::{pair_generation_weight, RingSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairgenError {
    #[error("invalid parameter `{0}`: {1}")]
    InvalidParameter(&'static str, String),
    #[error("calibration did not converge: {reason} (CAR {car:.4} vs target {target_car}, channel-A dead-time loss {loss:.4} vs target {target_loss})")]
    NonConvergence {
        reason: String,
        car: f64,
        target_car: f64,
        loss: f64,
        target_loss: f64,
        trace: Vec<CalibrationStep>,
    },
}

/// Pump wavelengths (nm) and at-chip powers (W).
#[derive(Debug, Clone, PartialEq)]
pub struct PumpConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub power1: f64,
    pub power2: f64,
}

impl PumpConfig {
    /// Both pumps on the resonances `-offset` and `+offset` around the centre.
    pub fn symmetric(spec: &RingSpec, offset: i64, power: f64) -> Self {
        Self {
            lambda1: spec.resonance(-offset),
            lambda2: spec.resonance(offset),
            power1: power,
            power2: power,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.power1 + self.power2
    }

    /// Same wavelengths, `total` split as `fraction` to pump 1.
    pub fn with_split(&self, total: f64, fraction: f64) -> Self {
        Self {
            power1: total * fraction,
            power2: total * (1.0 - fraction),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), PairgenError> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(PairgenError::InvalidParameter(name, format!("{v} must be > 0")));
            }
        }
        for (name, v) in [("power1", self.power1), ("power2", self.power2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PairgenError::InvalidParameter(name, format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self::symmetric(&RingSpec::default(), 3, 350e-6)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    /// Degenerate pair rate per W^2 of `power1 * power2`, Hz/W^2.
    pub gamma_pair: f64,
    /// Single-pump noise photons in the bi-photon band per W^2, Hz/W^2.
    pub gamma_self: f64,
    /// Flat Raman background per output channel, Hz.
    pub raman_rate: f64,
    /// Fraction of generated pairs leaving through the bus waveguide.
    pub extraction_efficiency: f64,
}

impl RateModel {
    pub fn validate(&self) -> Result<(), PairgenError> {
        for (name, v) in [
            ("gamma_pair", self.gamma_pair),
            ("gamma_self", self.gamma_self),
            ("raman_rate", self.raman_rate),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PairgenError::InvalidParameter(name, format!("{v} must be >= 0")));
            }
        }
        if !(self.extraction_efficiency > 0.0 && self.extraction_efficiency <= 1.0) {
            return Err(PairgenError::InvalidParameter(
                "extraction_efficiency",
                format!("{} must be in (0, 1]", self.extraction_efficiency),
            ));
        }
        Ok(())
    }
}

impl Default for RateModel {
    /// Calibrated against CAR = 80 and 50 % channel-A dead-time loss at
    /// 350 uW per pump with the default detection chain
    /// (`noonring calibrate` reproduces these constants).
    fn default() -> Self {
        Self {
            gamma_pair: 3.216_200_577_128_974e10,
            gamma_self: 2.206_367_978_236_044e12,
            raman_rate: 20_000.0,
            extraction_efficiency: 0.5,
        }
    }
}

/// Degenerate bi-photon pair rate leaving the ring, Hz.
pub fn signal_pair_rate(model: &RateModel, pumps: &PumpConfig, spec: &RingSpec) -> f64 {
    model.gamma_pair
        * pumps.power1
        * pumps.power2
        * pair_generation_weight(spec, pumps.lambda1, pumps.lambda2)
        * model.extraction_efficiency
}

/// Incoherent photon rate reaching each output channel, Hz.
pub fn noise_singles_rate(model: &RateModel, pumps: &PumpConfig) -> (f64, f64) {
    let r = model.gamma_self * (pumps.power1.powi(2) + pumps.power2.powi(2)) / 2.0
        + model.raman_rate;
    (r, r)
}

/// One detection channel: a detector behind an optical transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionChannel {
    pub detector: DetectorSpec,
    pub transmission: f64,
}

impl DetectionChannel {
    pub fn efficiency(&self) -> f64 {
        self.detector.efficiency * self.transmission
    }
}

/// The two detection channels a pair is split across.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub a: DetectionChannel,
    pub b: DetectionChannel,
}

impl Detection {
    /// Incident click rates (before dead time) when each pair sends one
    /// photon to each channel.
    pub fn click_rates(&self, pair_rate: f64, noise: (f64, f64)) -> (f64, f64) {
        (
            self.a.efficiency() * (noise.0 + pair_rate) + self.a.detector.dark_rate,
            self.b.efficiency() * (noise.1 + pair_rate) + self.b.detector.dark_rate,
        )
    }
}

/// Coincidence-to-accidental ratio with one pair photon per channel.
///
/// Without `detection`, channels are lossless, noiseless and jitter-free.
/// Dead time scales true and accidental coincidences alike and drops out.
/// Returns `+inf` when the accidental rate is zero.
pub fn car_estimate(
    model: &RateModel,
    pumps: &PumpConfig,
    spec: &RingSpec,
    window: f64,
    detection: Option<&Detection>,
) -> Result<f64, PairgenError> {
    if !(window.is_finite() && window > 0.0) {
        return Err(PairgenError::InvalidParameter("window", format!("{window} must be > 0")));
    }
    let pair = signal_pair_rate(model, pumps, spec);
    let noise = noise_singles_rate(model, pumps);
    let (eta_a, eta_b, capture, singles) = match detection {
        Some(d) => (
            d.a.efficiency(),
            d.b.efficiency(),
            window_capture_fraction(window, &d.a.detector, &d.b.detector),
            d.click_rates(pair, noise),
        ),
        None => (1.0, 1.0, 1.0, (noise.0 + pair, noise.1 + pair)),
    };
    let coincidences = pair * eta_a * eta_b * capture;
    let accidentals = singles.0 * singles.1 * window;
    Ok(if accidentals > 0.0 {
        coincidences / accidentals
    } else {
        f64::INFINITY
    })
}

/// Fraction of `total_power` on pump 1 that maximizes the CAR.
///
/// Golden-section search over `[0, 1]`; ties with the symmetric split resolve
/// to 0.5. The CAR is symmetric under swapping the pumps, and it peaks at the
/// even split whenever the pair rate there stays below the noise photon rate.
pub fn optimal_power_split(
    model: &RateModel,
    total_power: f64,
    spec: &RingSpec,
    pumps: &PumpConfig,
    window: f64,
    detection: Option<&Detection>,
) -> Result<f64, PairgenError> {
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(PairgenError::InvalidParameter(
            "total_power",
            format!("{total_power} must be > 0"),
        ));
    }
    let car = |f: f64| car_estimate(model, &pumps.with_split(total_power, f), spec, window, detection);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = car(x1)?;
    let mut f2 = car(x2)?;
    while hi - lo > 1e-9 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = car(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = car(x1)?;
        }
    }
    let best = (lo + hi) / 2.0;
    let at_best = car(best)?;
    let at_half = car(0.5)?;
    if at_half >= at_best * (1.0 - 1e-12) || !at_best.is_finite() && !at_half.is_finite() {
        Ok(0.5)
    } else {
        Ok(best)
    }
}

/// Calibration targets at the operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    pub car: f64,
    /// Dead-time loss fraction of channel A.
    pub dead_time_loss: f64,
    /// Coincidence window, s.
    pub window: f64,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            car: 80.0,
            dead_time_loss: 0.5,
            window: 224e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationStep {
    pub round: usize,
    pub gamma_pair: f64,
    pub gamma_self: f64,
    pub car: f64,
    pub loss_a: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: RateModel,
    pub car: f64,
    pub loss_a: f64,
    pub trace: Vec<CalibrationStep>,
}

const CALIBRATION_ROUNDS: usize = 60;
const CALIBRATION_TOL: f64 = 1e-9;

fn channel_a_loss(
    model: &RateModel,
    pumps: &PumpConfig,
    spec: &RingSpec,
    detection: &Detection,
) -> f64 {
    let pair = signal_pair_rate(model, pumps, spec);
    let (a, _) = detection.click_rates(pair, noise_singles_rate(model, pumps));
    crate::detector::dead_time_loss(a, &detection.a.detector)
}

/// Bisection for an increasing function on `[lo, hi]`, geometric once `lo > 0`.
fn bisect_increasing(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * 1e-15 {
            break;
        }
    }
    (lo + hi) / 2.0
}

/// Fits `gamma_self` and `gamma_pair` so that, at `pumps`, channel A loses
/// `target.dead_time_loss` of its clicks to dead time and the CAR equals
/// `target.car`. The two conditions are solved by alternating 1-D searches.
pub fn calibrate_rate_model(
    prior: &RateModel,
    pumps: &PumpConfig,
    spec: &RingSpec,
    detection: &Detection,
    target: &CalibrationTarget,
) -> Result<Calibration, PairgenError> {
    prior.validate()?;
    pumps.validate()?;
    let mut model = prior.clone();
    let mut trace = Vec::new();
    let car_of = |m: &RateModel| car_estimate(m, pumps, spec, target.window, Some(detection));
    let fail = |reason: String, m: &RateModel, trace: &Vec<CalibrationStep>| {
        Err(PairgenError::NonConvergence {
            reason,
            car: car_of(m).unwrap_or(f64::NAN),
            target_car: target.car,
            loss: channel_a_loss(m, pumps, spec, detection),
            target_loss: target.dead_time_loss,
            trace: trace.clone(),
        })
    };
    if !(target.dead_time_loss > 0.0 && target.dead_time_loss < 1.0 && target.car > 0.0) {
        return Err(PairgenError::InvalidParameter(
            "target",
            "need CAR > 0 and 0 < loss < 1".into(),
        ));
    }

    for round in 0..CALIBRATION_ROUNDS {
        // dead-time loss of channel A through gamma_self
        let loss_at = |g: f64| {
            channel_a_loss(&RateModel { gamma_self: g, ..model.clone() }, pumps, spec, detection)
        };
        if loss_at(0.0) > target.dead_time_loss {
            return fail("background alone exceeds the dead-time loss target".into(), &model, &trace);
        }
        let mut hi = model.gamma_self.max(1.0);
        let mut doublings = 0;
        while loss_at(hi) < target.dead_time_loss {
            hi *= 2.0;
            doublings += 1;
            if doublings > 400 || !hi.is_finite() {
                return fail("dead-time loss target unreachable".into(), &model, &trace);
            }
        }
        model.gamma_self = bisect_increasing(0.0, hi, target.dead_time_loss, loss_at);

        // CAR through gamma_pair, on the rising branch of CAR(gamma_pair)
        let car_at = |g: f64| {
            car_of(&RateModel { gamma_pair: g, ..model.clone() }).unwrap_or(f64::NAN)
        };
        let mut hi = model.gamma_pair.max(1.0) / 1024.0;
        let mut prev = car_at(hi);
        let mut doublings = 0;
        while prev < target.car {
            let next = car_at(hi * 2.0);
            if next.is_nan() || next <= prev || doublings > 400 {
                return fail("CAR target above the reachable maximum".into(), &model, &trace);
            }
            hi *= 2.0;
            prev = next;
            doublings += 1;
        }
        model.gamma_pair = bisect_increasing(0.0, hi, target.car, car_at);

        let car = car_of(&model)?;
        let loss_a = channel_a_loss(&model, pumps, spec, detection);
        trace.push(CalibrationStep {
            round,
            gamma_pair: model.gamma_pair,
            gamma_self: model.gamma_self,
            car,
            loss_a,
        });
        if (car / target.car - 1.0).abs() < CALIBRATION_TOL
            && (loss_a - target.dead_time_loss).abs() < CALIBRATION_TOL
        {
            return Ok(Calibration {
                model,
                car,
                loss_a,
                trace,
            });
        }
    }
    fail("round limit reached".into(), &model, &trace)
}
