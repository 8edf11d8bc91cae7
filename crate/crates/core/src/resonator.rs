//! Spectral model of the ring: resonance comb, Lorentzian lineshape,
//! through-port transmission and the energy-conservation selectivity of
//! degenerate pair generation.
//!
//! All wavelengths are in nanometres.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonatorError {
    #[error("invalid ring parameter `{0}`: {1}")]
    InvalidSpec(&'static str, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    /// Central (bi-photon) resonance.
    pub center_wavelength: f64,
    /// Resonance spacing at the centre of the comb.
    pub fsr: f64,
    pub loaded_q: f64,
    /// On-resonance dip depth of the through-port transmission.
    pub extinction: f64,
    /// Quadratic term of the comb, nm per (mode index)^2.
    pub dispersion_quadratic: f64,
    /// Number of resonances kept on each side of the centre.
    pub mode_span: usize,
    /// Geometry metadata only.
    pub radius_um: f64,
    pub gap_nm: f64,
}

impl RingSpec {
    /// Quadratic coefficient that makes the comb equally spaced in optical
    /// frequency to second order: `lambda_m = c / (nu_0 - m dnu)` expands to
    /// `lambda_0 + m fsr + m^2 fsr^2 / lambda_0`.
    pub fn frequency_equidistant_dispersion(center_wavelength: f64, fsr: f64) -> f64 {
        fsr * fsr / center_wavelength
    }

    pub fn validate(&self) -> Result<(), ResonatorError> {
        let positive = [
            ("center_wavelength", self.center_wavelength),
            ("fsr", self.fsr),
            ("loaded_q", self.loaded_q),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ResonatorError::InvalidSpec(name, format!("{v} must be > 0")));
            }
        }
        if !(self.extinction > 0.0 && self.extinction <= 1.0) {
            return Err(ResonatorError::InvalidSpec(
                "extinction",
                format!("{} must be in (0, 1]", self.extinction),
            ));
        }
        if !self.dispersion_quadratic.is_finite() {
            return Err(ResonatorError::InvalidSpec(
                "dispersion_quadratic",
                "must be finite".into(),
            ));
        }
        if self.mode_span < 1 {
            return Err(ResonatorError::InvalidSpec("mode_span", "must be >= 1".into()));
        }
        // the comb must stay strictly increasing and positive over the span
        let grid = self.raw_grid();
        if grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ResonatorError::InvalidSpec(
                "dispersion_quadratic",
                "comb is not strictly increasing over the mode span".into(),
            ));
        }
        Ok(())
    }

    pub fn linewidth_fwhm(&self) -> f64 {
        self.center_wavelength / self.loaded_q
    }

    /// Wavelength of the resonance at signed mode offset `m` from the centre.
    pub fn resonance(&self, m: i64) -> f64 {
        let m = m as f64;
        self.center_wavelength + m * self.fsr + self.dispersion_quadratic * m * m
    }

    fn raw_grid(&self) -> Vec<f64> {
        let span = self.mode_span as i64;
        (-span..=span).map(|m| self.resonance(m)).collect()
    }

    /// Nearest resonance within the span, as `(mode offset, wavelength)`.
    pub fn nearest_resonance(&self, wavelength: f64) -> (i64, f64) {
        let span = self.mode_span as i64;
        let guess = ((wavelength - self.center_wavelength) / self.fsr).round() as i64;
        let lo = (guess - 2).clamp(-span, span);
        let hi = (guess + 2).clamp(-span, span);
        (lo..=hi)
            .map(|m| (m, self.resonance(m)))
            .min_by(|a, b| (a.1 - wavelength).abs().total_cmp(&(b.1 - wavelength).abs()))
            .expect("mode range is non-empty")
    }
}

impl Default for RingSpec {
    fn default() -> Self {
        let center_wavelength = 1551.0;
        let fsr = 5.0;
        Self {
            center_wavelength,
            fsr,
            loaded_q: 15_000.0,
            extinction: 0.95,
            dispersion_quadratic: Self::frequency_equidistant_dispersion(center_wavelength, fsr),
            mode_span: 10,
            radius_um: 18.5,
            gap_nm: 150.0,
        }
    }
}

/// Resonance wavelengths indexed by signed mode offset.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceGrid {
    mode_span: usize,
    wavelengths: Vec<f64>,
}

impl ResonanceGrid {
    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn mode_span(&self) -> usize {
        self.mode_span
    }

    /// Resonance at offset `m`, if inside the span.
    pub fn get(&self, m: i64) -> Option<f64> {
        let idx = m + self.mode_span as i64;
        usize::try_from(idx).ok().and_then(|i| self.wavelengths.get(i).copied())
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let span = self.mode_span as i64;
        (-span..=span).zip(self.wavelengths.iter().copied())
    }
}

pub fn resonance_grid(spec: &RingSpec) -> Result<ResonanceGrid, ResonatorError> {
    spec.validate()?;
    Ok(ResonanceGrid {
        mode_span: spec.mode_span,
        wavelengths: spec.raw_grid(),
    })
}

/// Intra-cavity enhancement against the nearest resonance, peak value 1.
pub fn lorentzian_response(spec: &RingSpec, wavelength: f64) -> f64 {
    let (_, nearest) = spec.nearest_resonance(wavelength);
    let x = 2.0 * (wavelength - nearest) / spec.linewidth_fwhm();
    1.0 / (1.0 + x * x)
}

/// Through-port power transmission.
pub fn transmission(spec: &RingSpec, wavelength: f64) -> f64 {
    1.0 - spec.extinction * lorentzian_response(spec, wavelength)
}

/// Wavelength of the degenerate pair produced by one photon from each pump:
/// `2 / lambda_bi = 1 / lambda1 + 1 / lambda2`.
pub fn biphoton_wavelength(lambda1: f64, lambda2: f64) -> f64 {
    2.0 * lambda1 * lambda2 / (lambda1 + lambda2)
}

/// Relative degenerate-pair generation efficiency: both pump enhancements
/// times the enhancement at the bi-photon wavelength.
pub fn pair_generation_weight(spec: &RingSpec, lambda1: f64, lambda2: f64) -> f64 {
    let bi = biphoton_wavelength(lambda1, lambda2);
    lorentzian_response(spec, lambda1)
        * lorentzian_response(spec, lambda2)
        * lorentzian_response(spec, bi)
}
