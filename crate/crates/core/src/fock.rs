//! Two-mode bosonic Fock-state algebra for the clockwise / counter-clockwise
//! ring modes.
//!
//! States live in the truncated basis `|n_cw, n_ccw>` with
//! `n_cw + n_ccw <= n_max`. Linear-optical elements are 2x2 unitaries acting
//! on the creation-operator pair; [`apply_unitary`] lifts them to the
//! multi-photon space by substituting the transformed creation operators and
//! expanding binomially.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

/// Default photon-number cutoff. The source is post-selected to two photons;
/// the extra headroom keeps higher-order terms representable.
pub const DEFAULT_N_MAX: usize = 4;

/// Largest supported cutoff. Factorials stay exact in `f64` well past this.
pub const MAX_N_MAX: usize = 16;

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("photon-number cutoff {0} is too small (need at least 2)")]
    CutoffTooSmall(usize),
    #[error("photon-number cutoff {0} exceeds the supported maximum {MAX_N_MAX}")]
    CutoffTooLarge(usize),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("reflectivity {0} is outside [0, 1]")]
    ReflectivityOutOfRange(f64),
    #[error("matrix is not unitary (max |U U^dagger - I| = {0:e})")]
    NonUnitary(f64),
    #[error("ket |{0},{1}> exceeds the cutoff {2}")]
    KetOutOfRange(usize, usize, usize),
}

#[inline]
fn sector_offset(total: usize) -> usize {
    total * (total + 1) / 2
}

#[inline]
fn ket_index(n_cw: usize, n_ccw: usize) -> usize {
    sector_offset(n_cw + n_ccw) + n_ccw
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Pure state over the truncated two-mode Fock basis.
///
/// Amplitudes are stored densely over the triangular index set, grouped by
/// total photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    n_max: usize,
    amplitudes: Vec<Complex64>,
}

impl TwoModeFockState {
    pub fn vacuum(n_max: usize) -> Result<Self, FockError> {
        let mut state = Self::zero(n_max)?;
        state.amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// All-zero (unnormalized) vector; useful as an accumulator.
    pub fn zero(n_max: usize) -> Result<Self, FockError> {
        if n_max < 2 {
            return Err(FockError::CutoffTooSmall(n_max));
        }
        if n_max > MAX_N_MAX {
            return Err(FockError::CutoffTooLarge(n_max));
        }
        Ok(Self {
            n_max,
            amplitudes: vec![Complex64::new(0.0, 0.0); sector_offset(n_max + 1)],
        })
    }

    /// Single basis ket `|n_cw, n_ccw>`.
    pub fn basis(n_max: usize, n_cw: usize, n_ccw: usize) -> Result<Self, FockError> {
        let mut state = Self::zero(n_max)?;
        state.set_amplitude(n_cw, n_ccw, Complex64::new(1.0, 0.0))?;
        Ok(state)
    }

    /// Builds a state from `(n_cw, n_ccw, amplitude)` triples; repeated kets add.
    pub fn from_terms<I>(n_max: usize, terms: I) -> Result<Self, FockError>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut state = Self::zero(n_max)?;
        for (n, m, amp) in terms {
            if n + m > n_max {
                return Err(FockError::KetOutOfRange(n, m, n_max));
            }
            state.amplitudes[ket_index(n, m)] += amp;
        }
        Ok(state)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Amplitude of `|n_cw, n_ccw>`; kets beyond the cutoff are absent and read as zero.
    pub fn amplitude(&self, n_cw: usize, n_ccw: usize) -> Complex64 {
        if n_cw + n_ccw > self.n_max {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitudes[ket_index(n_cw, n_ccw)]
        }
    }

    pub fn set_amplitude(
        &mut self,
        n_cw: usize,
        n_ccw: usize,
        amp: Complex64,
    ) -> Result<(), FockError> {
        if n_cw + n_ccw > self.n_max {
            return Err(FockError::KetOutOfRange(n_cw, n_ccw, self.n_max));
        }
        self.amplitudes[ket_index(n_cw, n_ccw)] = amp;
        Ok(())
    }

    /// Iterates `(n_cw, n_ccw, amplitude)` over every ket in the basis.
    pub fn kets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..=self.n_max).flat_map(move |total| {
            (0..=total).map(move |n_ccw| {
                let n_cw = total - n_ccw;
                (n_cw, n_ccw, self.amplitudes[ket_index(n_cw, n_ccw)])
            })
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm. The zero vector is left untouched.
    pub fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in &mut self.amplitudes {
                *a /= norm;
            }
        }
    }

    /// Probability weight in the sector with `total` photons.
    pub fn sector_weight(&self, total: usize) -> f64 {
        if total > self.n_max {
            return 0.0;
        }
        let start = sector_offset(total);
        self.amplitudes[start..start + total + 1]
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Max elementwise difference after removing the global phase, aligned
    /// on the largest-magnitude amplitude of `self`.
    pub fn distance_up_to_global_phase(&self, other: &Self) -> f64 {
        let n_max = self.n_max.max(other.n_max);
        let (n_ref, m_ref, a_ref) = self
            .kets()
            .max_by(|x, y| x.2.norm_sqr().total_cmp(&y.2.norm_sqr()))
            .expect("basis is never empty");
        let b_ref = other.amplitude(n_ref, m_ref);
        let phase = if a_ref.norm() > 0.0 && b_ref.norm() > 0.0 {
            (a_ref / b_ref).unscale((a_ref / b_ref).norm())
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut worst: f64 = 0.0;
        for total in 0..=n_max {
            for m in 0..=total {
                let n = total - m;
                let d = (self.amplitude(n, m) - other.amplitude(n, m) * phase).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// 2x2 unitary acting on the creation-operator pair `(a_cw^dag, a_ccw^dag)`.
///
/// Row `j` is the image of mode `j`: `a_j^dag -> sum_k matrix[j][k] a_k^dag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeUnitary {
    matrix: [[Complex64; 2]; 2],
}

impl ModeUnitary {
    /// Validates unitarity to `1e-10` elementwise.
    pub fn new(matrix: [[Complex64; 2]; 2]) -> Result<Self, FockError> {
        if matrix.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FockError::NonFinite("unitary matrix element"));
        }
        let u = Self { matrix };
        let dev = u.unitarity_defect();
        if dev > UNITARY_TOL {
            return Err(FockError::NonUnitary(dev));
        }
        Ok(u)
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            matrix: [[one, zero], [zero, one]],
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.matrix
    }

    /// `max |U U^dagger - I|` elementwise.
    pub fn unitarity_defect(&self) -> f64 {
        let m = &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[i][0] * m[j][0].conj() + m[i][1] * m[j][1].conj();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }

    /// The element applied first (`self`) followed by `next`.
    pub fn then(&self, next: &ModeUnitary) -> ModeUnitary {
        // a_j -> sum_k S[j][k] a_k -> sum_k S[j][k] sum_l N[k][l] a_l
        let s = &self.matrix;
        let n = &next.matrix;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            for l in 0..2 {
                out[j][l] = s[j][0] * n[0][l] + s[j][1] * n[1][l];
            }
        }
        ModeUnitary { matrix: out }
    }
}

/// Bidirectionally pumped ring output, `(|2,0> + |0,2>)/sqrt(2)`.
pub fn build_ring_state(n_max: usize) -> Result<TwoModeFockState, FockError> {
    let amp = Complex64::new(FRAC_1_SQRT_2, 0.0);
    TwoModeFockState::from_terms(n_max, [(2, 0, amp), (0, 2, amp)])
}

/// Thermo-optic phase `theta` on the heated (counter-clockwise) arm:
/// `diag(1, e^{i theta})`.
pub fn phase_shifter(theta: f64) -> Result<ModeUnitary, FockError> {
    if !theta.is_finite() {
        return Err(FockError::NonFinite("phase"));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Ok(ModeUnitary {
        matrix: [[one, zero], [zero, Complex64::from_polar(1.0, theta)]],
    })
}

/// Symmetric directional coupler with an `i` on the cross terms.
pub fn coupler_50_50() -> ModeUnitary {
    let t = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let r = Complex64::new(0.0, FRAC_1_SQRT_2);
    ModeUnitary {
        matrix: [[t, r], [r, t]],
    }
}

/// Directional coupler with power cross-coupling `reflectivity`.
pub fn coupler_variable(reflectivity: f64) -> Result<ModeUnitary, FockError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(FockError::ReflectivityOutOfRange(reflectivity));
    }
    let t = Complex64::new((1.0 - reflectivity).sqrt(), 0.0);
    let r = Complex64::new(0.0, reflectivity.sqrt());
    Ok(ModeUnitary {
        matrix: [[t, r], [r, t]],
    })
}

/// Evolves `state` under the multi-photon representation of `u`.
pub fn apply_unitary(
    state: &TwoModeFockState,
    u: &ModeUnitary,
) -> Result<TwoModeFockState, FockError> {
    let dev = u.unitarity_defect();
    if dev > UNITARY_TOL {
        return Err(FockError::NonUnitary(dev));
    }
    let [[u00, u01], [u10, u11]] = u.matrix;
    let mut out = TwoModeFockState::zero(state.n_max)?;
    for (n, m, amp) in state.kets() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        // |n,m> = (a^dag)^n (b^dag)^m / sqrt(n! m!) |vac>
        let norm_in = (factorial(n) * factorial(m)).sqrt();
        for p in 0..=n {
            let left = u00.powu(p as u32) * u01.powu((n - p) as u32) * binomial(n, p);
            for q in 0..=m {
                let right = u10.powu(q as u32) * u11.powu((m - q) as u32) * binomial(m, q);
                let out_cw = p + q;
                let out_ccw = n + m - out_cw;
                let norm_out = (factorial(out_cw) * factorial(out_ccw)).sqrt();
                out.amplitudes[ket_index(out_cw, out_ccw)] +=
                    amp * left * right * (norm_out / norm_in);
            }
        }
    }
    Ok(out)
}

/// Ring state through the phase shifter and a coupler of the given reflectivity.
pub fn mzi_output_state_with(
    theta: f64,
    reflectivity: f64,
    n_max: usize,
) -> Result<TwoModeFockState, FockError> {
    let ring = build_ring_state(n_max)?;
    let shifted = apply_unitary(&ring, &phase_shifter(theta)?)?;
    apply_unitary(&shifted, &coupler_variable(reflectivity)?)
}

/// Ring state through the phase shifter and the 50/50 output coupler.
pub fn mzi_output_state(theta: f64) -> Result<TwoModeFockState, FockError> {
    let ring = build_ring_state(DEFAULT_N_MAX)?;
    let shifted = apply_unitary(&ring, &phase_shifter(theta)?)?;
    apply_unitary(&shifted, &coupler_50_50())
}

/// Born-rule probability of detecting `n_cw` and `n_ccw` photons.
pub fn outcome_probability(state: &TwoModeFockState, n_cw: usize, n_ccw: usize) -> f64 {
    state.amplitude(n_cw, n_ccw).norm_sqr()
}

/// Probability of one photon at each MZI output; `cos^2(theta)`.
///
/// Returns NaN for a non-finite phase.
pub fn coincidence_probability(theta: f64) -> f64 {
    match mzi_output_state(theta) {
        Ok(state) => outcome_probability(&state, 1, 1),
        Err(_) => f64::NAN,
    }
}
