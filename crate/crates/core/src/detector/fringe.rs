//! Least-squares fringe fitting and visibility estimators.
//!
//! The model is `C(theta) = B (1 + V cos(k theta + phi))` with `k = 2` for the
//! two-photon fringe (period pi) and `k = 1` for classical light (period 2 pi).
//! It is linear in `(B, B V cos phi, -B V sin phi)`, so the fit is an ordinary
//! linear least-squares problem on the basis `{1, cos k theta, sin k theta}`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};

use super::DetectorError;

/// Coefficient of determination below which a fit is flagged as poor.
pub const POOR_FIT_R_SQUARED: f64 = 0.9;

const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FringePeriod {
    /// Two-photon interference, `cos(2 theta)`.
    Pi,
    /// Classical interference, `cos(theta)`.
    TwoPi,
}

impl FringePeriod {
    pub fn radians(self) -> f64 {
        match self {
            FringePeriod::Pi => PI,
            FringePeriod::TwoPi => TAU,
        }
    }

    fn harmonic(self) -> f64 {
        match self {
            FringePeriod::Pi => 2.0,
            FringePeriod::TwoPi => 1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            FringePeriod::Pi => FringePeriod::TwoPi,
            FringePeriod::TwoPi => FringePeriod::Pi,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeFit {
    pub period: FringePeriod,
    /// Offset `B`.
    pub offset: f64,
    /// Amplitude `A = B V`.
    pub amplitude: f64,
    /// Phase `phi`, in `(-pi, pi]`.
    pub phase: f64,
    /// `A / B` clamped to `[0, 1]`.
    pub visibility: f64,
    /// `A / B` before clamping.
    pub visibility_unclamped: f64,
    /// One-sigma uncertainty of the visibility.
    pub visibility_sigma: f64,
    /// Residual sum of squares.
    pub rss: f64,
    pub r_squared: f64,
    /// All counts equal (or zero): no fringe can be defined.
    pub degenerate: bool,
    /// `r_squared` under [`POOR_FIT_R_SQUARED`].
    pub poor_fit: bool,
}

/// Fits a fringe of the given period to `(phases, counts)`.
pub fn fit_fringe(
    phases: &[f64],
    counts: &[f64],
    period: FringePeriod,
) -> Result<FringeFit, DetectorError> {
    fit_fringe_with_offset_noise(phases, counts, period, 0.0)
}

/// [`fit_fringe`] with an extra one-sigma uncertainty `offset_std` on the
/// offset, e.g. the spread of a subtracted accidental floor.
pub fn fit_fringe_with_offset_noise(
    phases: &[f64],
    counts: &[f64],
    period: FringePeriod,
    offset_std: f64,
) -> Result<FringeFit, DetectorError> {
    if phases.len() != counts.len() {
        return Err(DetectorError::LengthMismatch(phases.len(), counts.len()));
    }
    if phases.len() < MIN_POINTS {
        return Err(DetectorError::InsufficientPoints(phases.len()));
    }
    if phases.iter().chain(counts).any(|v| !v.is_finite()) {
        return Err(DetectorError::InvalidFringeData("non-finite value".into()));
    }
    if counts.iter().any(|&c| c < 0.0) {
        return Err(DetectorError::InvalidFringeData("negative count".into()));
    }
    let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // the endpoint of an inclusive sweep may sit one rounding error short
    if hi - lo < period.radians() * (1.0 - 1e-9) {
        return Err(DetectorError::InsufficientSpan {
            span: hi - lo,
            period: period.radians(),
        });
    }

    let k = period.harmonic();
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for (&theta, &y) in phases.iter().zip(counts) {
        let row = Vector3::new(1.0, (k * theta).cos(), (k * theta).sin());
        xtx += row * row.transpose();
        xty += row * y;
    }
    let inv = xtx.try_inverse().ok_or(DetectorError::SingularDesign)?;
    let beta = inv * xty;

    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let tss: f64 = counts.iter().map(|y| (y - mean).powi(2)).sum();
    let rss: f64 = phases
        .iter()
        .zip(counts)
        .map(|(&theta, &y)| {
            let model = beta[0] + beta[1] * (k * theta).cos() + beta[2] * (k * theta).sin();
            (y - model).powi(2)
        })
        .sum();

    let degenerate = tss == 0.0 || beta[0] <= 0.0;
    let offset = beta[0];
    let amplitude = beta[1].hypot(beta[2]);
    let phase = (-beta[2]).atan2(beta[1]);
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };

    if degenerate {
        return Ok(FringeFit {
            period,
            offset,
            amplitude: if tss == 0.0 { 0.0 } else { amplitude },
            phase: if tss == 0.0 { 0.0 } else { phase },
            visibility: 0.0,
            visibility_unclamped: 0.0,
            visibility_sigma: 0.0,
            rss,
            r_squared,
            degenerate: true,
            poor_fit: true,
        });
    }

    let v = amplitude / offset;
    let s2 = rss / (n - 3.0);
    let cov = inv * s2;
    let grad = if amplitude > 0.0 {
        Vector3::new(
            -amplitude / (offset * offset),
            beta[1] / (amplitude * offset),
            beta[2] / (amplitude * offset),
        )
    } else {
        Vector3::new(0.0, 1.0 / offset, 0.0)
    };
    let fit_var = (grad.transpose() * cov * grad)[(0, 0)].max(0.0);
    let offset_var = (v * offset_std / offset).powi(2);
    let visibility_sigma = (fit_var + offset_var).sqrt();

    Ok(FringeFit {
        period,
        offset,
        amplitude,
        phase,
        visibility: v.clamp(0.0, 1.0),
        visibility_unclamped: v,
        visibility_sigma,
        rss,
        r_squared,
        degenerate: false,
        poor_fit: r_squared < POOR_FIT_R_SQUARED,
    })
}

/// `(max - min) / (max + min)` over the samples; zero for an empty or all-zero set.
pub fn pointwise_visibility(counts: &[f64]) -> f64 {
    let max = counts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
    if counts.is_empty() || max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityPair {
    pub raw: FringeFit,
    pub corrected: FringeFit,
}

/// Raw and accidental-subtracted two-photon fringe visibilities.
///
/// The corrected series is `max(counts - accidental_mean, 0)` per point. Both
/// uncertainties include the accidental spread.
pub fn visibility_raw_and_corrected(
    phases: &[f64],
    peak_counts: &[f64],
    accidentals: (f64, f64),
    period: FringePeriod,
) -> Result<VisibilityPair, DetectorError> {
    let (acc_mean, acc_std) = accidentals;
    let raw = fit_fringe_with_offset_noise(phases, peak_counts, period, acc_std)?;
    let subtracted: Vec<f64> = peak_counts.iter().map(|c| (c - acc_mean).max(0.0)).collect();
    let corrected = fit_fringe_with_offset_noise(phases, &subtracted, period, acc_std)?;
    Ok(VisibilityPair { raw, corrected })
}

/// Fits at both periods and reports which one explains the data.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodComparison {
    pub best: FringePeriod,
    pub fit_pi: FringeFit,
    pub fit_two_pi: FringeFit,
    /// RSS of the rejected period divided by the RSS of the best one
    /// (infinite when the best fit is exact).
    pub residual_ratio: f64,
}

pub fn best_period(phases: &[f64], counts: &[f64]) -> Result<PeriodComparison, DetectorError> {
    let fit_pi = fit_fringe(phases, counts, FringePeriod::Pi)?;
    let fit_two_pi = fit_fringe(phases, counts, FringePeriod::TwoPi)?;
    let (best, good, bad) = if fit_pi.rss <= fit_two_pi.rss {
        (FringePeriod::Pi, fit_pi.rss, fit_two_pi.rss)
    } else {
        (FringePeriod::TwoPi, fit_two_pi.rss, fit_pi.rss)
    };
    // rounding-level residuals count as an exact fit
    let scale = counts.iter().map(|c| c * c).sum::<f64>().max(f64::MIN_POSITIVE);
    let residual_ratio = if good <= scale * 1e-24 {
        f64::INFINITY
    } else {
        bad / good
    };
    Ok(PeriodComparison {
        best,
        fit_pi,
        fit_two_pi,
        residual_ratio,
    })
}
