//! Randomized invariants shared by the proptest suite and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use noonring_core::detector::{
    dead_time_loss, fit_fringe, generate_timetags, histogram_tags, DetectorSpec, FringePeriod,
};
use noonring_core::experiment::{classical_port_powers, expected_counts, CircuitConfig};
use noonring_core::fock::{
    apply_unitary, coincidence_probability, mzi_output_state_with, ModeUnitary, TwoModeFockState,
};
use noonring_core::pairgen::{
    car_estimate, optimal_power_split, signal_pair_rate, PumpConfig, RateModel,
};
use noonring_core::resonator::{pair_generation_weight, transmission, RingSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const CASES: u32 = 256;

type Check = Result<(), TestCaseError>;

fn random_unitary(p: [f64; 4]) -> ModeUnitary {
    let [alpha, beta, gamma, t] = p;
    let g = Complex64::from_polar(1.0, alpha);
    let (c, s) = (t.cos(), t.sin());
    ModeUnitary::new([
        [g * Complex64::from_polar(c, beta), g * Complex64::from_polar(s, gamma)],
        [-g * Complex64::from_polar(s, -gamma), g * Complex64::from_polar(c, -beta)],
    ])
    .unwrap()
}

pub fn unitary_params() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-PI..PI)
}

pub fn state_and_unitary() -> impl Strategy<Value = (usize, Vec<(f64, f64)>, [f64; 4])> {
    (2usize..=6).prop_flat_map(|n| {
        let kets = (n + 1) * (n + 2) / 2;
        (
            Just(n),
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), kets),
            unitary_params(),
        )
    })
}

fn state_from(n_max: usize, amps: &[(f64, f64)]) -> TwoModeFockState {
    let mut terms = Vec::new();
    let mut i = 0;
    for total in 0..=n_max {
        for ccw in 0..=total {
            let (re, im) = amps[i];
            terms.push((total - ccw, ccw, Complex64::new(re, im)));
            i += 1;
        }
    }
    TwoModeFockState::from_terms(n_max, terms).unwrap()
}

/// Norm and per-photon-number sector weights survive any two-mode unitary.
pub fn unitarity((n_max, amps, p): (usize, Vec<(f64, f64)>, [f64; 4])) -> Check {
    let state = state_from(n_max, &amps);
    let out = apply_unitary(&state, &random_unitary(p)).unwrap();
    let tol = 1e-10 * state.norm_sqr().max(1.0);
    prop_assert!((out.norm_sqr() - state.norm_sqr()).abs() < tol);
    for total in 0..=n_max {
        prop_assert!((out.sector_weight(total) - state.sector_weight(total)).abs() < tol);
    }
    Ok(())
}

/// Applying `u` then `v` equals applying the product unitary once.
pub fn composition((n_max, amps, p): (usize, Vec<(f64, f64)>, [f64; 4])) -> Check {
    let state = state_from(n_max, &amps);
    let u = random_unitary(p);
    let v = random_unitary([p[3], p[0], p[1], p[2]]);
    let stepwise = apply_unitary(&apply_unitary(&state, &u).unwrap(), &v).unwrap();
    let once = apply_unitary(&state, &u.then(&v)).unwrap();
    for (n, m, a) in stepwise.kets() {
        prop_assert!((a - once.amplitude(n, m)).norm() < 1e-9);
    }
    Ok(())
}

pub fn phase_and_reflectivity() -> impl Strategy<Value = (f64, f64)> {
    (-10.0..10.0f64, 0.0..=1.0f64)
}

/// The interferometer output stays normalized and two-photon only, and
/// the coincidence probability at R = 1/2 is `cos^2(theta)`, period pi.
pub fn normalization((theta, r): (f64, f64)) -> Check {
    let out = mzi_output_state_with(theta, r, 4).unwrap();
    prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    prop_assert!((out.sector_weight(2) - 1.0).abs() < 1e-12);
    let p = coincidence_probability(theta);
    prop_assert!((p - theta.cos().powi(2)).abs() < 1e-12);
    prop_assert!((coincidence_probability(theta + PI) - p).abs() < 1e-9);
    Ok(())
}

pub fn power_scales() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (1e-6..2e-3f64, 1e-6..2e-3f64, 0.0..5.0f64, 0.0..5.0f64)
}

/// Pair rate is bilinear in the pump powers and symmetric under swapping
/// them; the CAR is symmetric too.
pub fn bilinearity((p1, p2, k1, k2): (f64, f64, f64, f64)) -> Check {
    let spec = RingSpec::default();
    let model = RateModel::default();
    let base = PumpConfig { power1: p1, power2: p2, ..PumpConfig::default() };
    let scaled = PumpConfig { power1: k1 * p1, power2: k2 * p2, ..base.clone() };
    let r0 = signal_pair_rate(&model, &base, &spec);
    let r1 = signal_pair_rate(&model, &scaled, &spec);
    prop_assert!((r1 - k1 * k2 * r0).abs() <= 1e-12 * r0.max(r1).max(1e-300));
    let swapped = PumpConfig { power1: p2, power2: p1, ..base.clone() };
    prop_assert!((signal_pair_rate(&model, &swapped, &spec) - r0).abs() <= 1e-12 * r0);
    let det = CircuitConfig::default().detection();
    let c0 = car_estimate(&model, &base, &spec, 224e-12, Some(&det)).unwrap();
    let c1 = car_estimate(&model, &swapped, &spec, 224e-12, Some(&det)).unwrap();
    prop_assert!((c0 - c1).abs() <= 1e-12 * c0);
    Ok(())
}

pub fn rate_models() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    // (gamma_pair, gamma_self, raman, total power)
    (1e8..1e11f64, 0.0..1e13f64, 0.0..1e6f64, 1e-5..2e-3f64)
}

/// The best power split is the even one while the pair rate stays below
/// the noise photon rate of each channel.
pub fn split_symmetry((gp, gs, raman, total): (f64, f64, f64, f64)) -> Check {
    let model = RateModel { gamma_pair: gp, gamma_self: gs, raman_rate: raman, ..RateModel::default() };
    let spec = RingSpec::default();
    let pumps = PumpConfig::default().with_split(total, 0.5);
    let pair = signal_pair_rate(&model, &pumps, &spec);
    let noise = gs * total * total / 4.0 + raman;
    prop_assume!(pair <= noise && noise > 0.0);
    let f = optimal_power_split(&model, total, &spec, &pumps, 224e-12, None).unwrap();
    prop_assert!((f - 0.5).abs() < 1e-3, "split {f}");
    Ok(())
}

pub fn timetag_inputs() -> impl Strategy<Value = (f64, f64, f64, f64, u64)> {
    // (pair rate, singles rate, dead time, efficiency, seed)
    (0.0..5e3f64, 0.0..5e4f64, 0.0..1e-4f64, 0.05..=1.0f64, any::<u64>())
}

/// Same seed, same streams; recorded tags respect the dead time.
pub fn seed_determinism((pair, singles, dead, eff, seed): (f64, f64, f64, f64, u64)) -> Check {
    let det = DetectorSpec { efficiency: eff, dark_rate: 100.0, dead_time: dead, jitter_sigma: 50e-12 };
    let run = || generate_timetags(pair, (singles, singles), 0.05, &det, &det, seed).unwrap();
    let (a1, b1) = run();
    let (a2, b2) = run();
    prop_assert_eq!(a1.tags_ps(), a2.tags_ps());
    prop_assert_eq!(b1.tags_ps(), b2.tags_ps());
    let gap = ((dead * 1e12).round() as i64).max(1);
    for s in [&a1, &b1] {
        prop_assert!(s.tags_ps().windows(2).all(|w| w[1] - w[0] >= gap));
        prop_assert!(s.tags_ps().iter().all(|&t| t >= 0 && t <= s.duration_ps()));
    }
    Ok(())
}

pub fn tag_sets() -> impl Strategy<Value = (Vec<i64>, Vec<i64>, i64, i64)> {
    (
        prop::collection::vec(0i64..2_000_000, 0..60),
        prop::collection::vec(0i64..2_000_000, 0..60),
        1i64..200,
        200i64..400_000,
    )
}

/// Every pair within the delay range lands in exactly one bin, the bin a
/// brute-force search assigns it to.
pub fn histogram_conservation((mut a, mut b, w, range): (Vec<i64>, Vec<i64>, i64, i64)) -> Check {
    a.sort_unstable();
    b.sort_unstable();
    let hist = histogram_tags(&a, &b, w as f64 * 1e-12, range as f64 * 1e-12).unwrap();
    let mut oracle: BTreeMap<i64, u64> = BTreeMap::new();
    for &ta in &a {
        for &tb in &b {
            let d = tb - ta;
            if d.abs() <= range {
                // bins are [k w - w/2, k w + w/2)
                let k = (d + w / 2).div_euclid(w);
                *oracle.entry(k).or_default() += 1;
            }
        }
    }
    prop_assert_eq!(hist.total(), oracle.values().sum::<u64>());
    for (k, c) in oracle {
        prop_assert_eq!(hist.count_at(k), c);
    }
    Ok(())
}

pub fn fringe_inputs() -> impl Strategy<Value = (f64, f64, f64, usize, bool)> {
    // 5 points over [0, 2 pi] sample sin(2 theta) only at its zeros
    (1.0..1e4f64, 0.0..=1.0f64, -PI..PI, 6usize..60, any::<bool>())
}

/// Least-squares fit recovers offset, visibility and phase of an exact fringe.
pub fn estimator_sanity((offset, vis, phase, n, pi_period): (f64, f64, f64, usize, bool)) -> Check {
    let (period, k) = if pi_period { (FringePeriod::Pi, 2.0) } else { (FringePeriod::TwoPi, 1.0) };
    let phases: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / (n - 1) as f64).collect();
    let counts: Vec<f64> = phases.iter().map(|t| offset * (1.0 + vis * (k * t + phase).cos())).collect();
    let fit = fit_fringe(&phases, &counts, period).unwrap();
    prop_assert!((fit.offset - offset).abs() < 1e-8 * offset);
    prop_assert!((fit.visibility - vis).abs() < 1e-8);
    prop_assert!((0.0..=1.0).contains(&fit.visibility));
    if vis > 1e-3 {
        let dphi = (fit.phase - phase).rem_euclid(2.0 * PI);
        prop_assert!(dphi < 1e-6 || 2.0 * PI - dphi < 1e-6, "phase {} vs {}", fit.phase, phase);
    }
    Ok(())
}

pub fn phase_shift_inputs() -> impl Strategy<Value = f64> {
    -PI..PI
}

/// Shifting every applied phase by delta moves the fitted fringe phase by
/// 2 delta (period pi) and leaves the visibility alone.
pub fn phase_covariance(delta: f64) -> Check {
    let cfg = CircuitConfig::default();
    let phases: Vec<f64> = (0..25).map(|i| 2.0 * PI * i as f64 / 24.0).collect();
    let fit_at = |shift: f64| {
        let counts: Vec<f64> = phases
            .iter()
            .map(|t| expected_counts(t + shift, &cfg).unwrap().peak)
            .collect();
        fit_fringe(&phases, &counts, FringePeriod::Pi).unwrap()
    };
    let f0 = fit_at(0.0);
    let f1 = fit_at(delta);
    prop_assert!((f0.visibility - f1.visibility).abs() < 1e-3);
    let d = (f1.phase - f0.phase - 2.0 * delta).rem_euclid(2.0 * PI);
    prop_assert!(d < 1e-3 || 2.0 * PI - d < 1e-3, "d={d}");
    Ok(())
}

pub fn classical_inputs() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-10.0..10.0f64, 0.0..=1.0f64, 1e-3..=1.0f64, -PI..PI)
}

/// Classical port powers never exceed the input, with equality when lossless.
pub fn energy_balance((theta, r, loss, phi0): (f64, f64, f64, f64)) -> Check {
    let cfg = CircuitConfig { mzi_reflectivity: r, path_loss_ratio: loss, phase_offset: phi0, ..CircuitConfig::default() };
    let (a, b) = classical_port_powers(theta, &cfg);
    prop_assert!(a >= -1e-15 && b >= -1e-15);
    prop_assert!(a + b <= 1.0 + 1e-12);
    let lossless = CircuitConfig { path_loss_ratio: 1.0, ..cfg };
    let (a, b) = classical_port_powers(theta, &lossless);
    prop_assert!((a + b - 1.0).abs() < 1e-12);
    Ok(())
}

pub fn spectral_inputs() -> impl Strategy<Value = (f64, f64)> {
    (1500.0..1600.0f64, 1500.0..1600.0f64)
}

/// Transmission stays within the extinction band; the generation weight
/// is a product of three unit-peak Lorentzians.
pub fn spectral_bounds((l1, l2): (f64, f64)) -> Check {
    let spec = RingSpec::default();
    for l in [l1, l2] {
        let t = transmission(&spec, l);
        prop_assert!(t >= 1.0 - spec.extinction - 1e-12 && t <= 1.0);
    }
    let w = pair_generation_weight(&spec, l1, l2);
    prop_assert!((0.0..=1.0).contains(&w));
    prop_assert!((w - pair_generation_weight(&spec, l2, l1)).abs() < 1e-15);
    Ok(())
}

pub fn dead_time_inputs() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1e7f64, 0.0..1e-3f64)
}

/// Dead-time loss is in [0, 1) and grows with the incident rate.
pub fn dead_time_monotone((rate, tau): (f64, f64)) -> Check {
    let det = DetectorSpec { dead_time: tau, ..DetectorSpec::ideal() };
    let l = dead_time_loss(rate, &det);
    prop_assert!((0.0..1.0).contains(&l));
    prop_assert!(dead_time_loss(rate * 1.5 + 1.0, &det) >= l);
    Ok(())
}
