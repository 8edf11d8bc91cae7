//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use noonring_core::detector::{generate_timetags, DetectorSpec, FringePeriod};
use noonring_core::experiment::{
    phase_grid, run_incoherent_control, run_phase_sweep, run_wavelength_map, wavelength_grid,
    CircuitConfig,
};
use noonring_core::fock::{build_ring_state, mzi_output_state, TwoModeFockState};
use noonring_core::pairgen::{car_estimate, optimal_power_split};
use num_complex::Complex64;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Closed-form output state, coefficients over `|n_cw, n_ccw>`.
fn closed_form_output(theta: f64) -> [(usize, usize, Complex64); 3] {
    let e2 = Complex64::from_polar(1.0, 2.0 * theta);
    let pre = Complex64::from_polar(0.25, -theta);
    let s2 = 2f64.sqrt();
    // a^dag^2 |vac> = sqrt 2 |2,0>, a^dag b^dag |vac> = |1,1>
    let i = Complex64::i();
    [
        (2, 0, pre * s2 * (1.0 - e2)),
        (0, 2, pre * s2 * (e2 - 1.0)),
        (1, 1, pre * 2.0 * i * (1.0 + e2)),
    ]
}

fn max_error_up_to_phase(state: &TwoModeFockState, expected: &[(usize, usize, Complex64)]) -> f64 {
    let overlap: Complex64 = expected
        .iter()
        .map(|&(n, m, c)| c.conj() * state.amplitude(n, m))
        .sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
    let mut worst: f64 = 0.0;
    for (n, m, a) in state.kets() {
        let c = expected
            .iter()
            .find(|&&(en, em, _)| en == n && em == m)
            .map(|&(_, _, c)| c)
            .unwrap_or_default();
        worst = worst.max((a - phase * c).norm());
    }
    worst
}

fn criterion_1() -> Outcome {
    let ring = build_ring_state(4).unwrap();
    let ring_ok = (ring.amplitude(2, 0) - Complex64::new(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15
        && (ring.amplitude(0, 2) - Complex64::new(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15;
    let worst = (0..64)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / 64.0 - 0.37;
            max_error_up_to_phase(&mzi_output_state(theta).unwrap(), &closed_form_output(theta))
        })
        .fold(0.0, f64::max);
    check(ring_ok && worst < 1e-10, format!("max amplitude error {worst:.2e} over 64 phases"))
}

fn criterion_2() -> Outcome {
    let res = run_phase_sweep(&CircuitConfig::default(), &phase_grid(25, 2.0 * PI)).unwrap();
    let s = &res.summary;
    let coinc = s.coincidence_period.as_ref().unwrap();
    let p1 = s.classical_period_p1.as_ref().unwrap();
    let p2 = s.classical_period_p2.as_ref().unwrap();
    let pass = coinc.best == FringePeriod::Pi
        && p1.best == FringePeriod::TwoPi
        && p2.best == FringePeriod::TwoPi
        && coinc.residual_ratio >= 5.0
        && p1.residual_ratio >= 5.0
        && p2.residual_ratio >= 5.0;
    check(
        pass,
        format!(
            "coincidence period {:?} (ratio {:.1}), classical {:?}/{:?} (ratios {:.1e}/{:.1e})",
            coinc.best, coinc.residual_ratio, p1.best, p2.best, p1.residual_ratio, p2.residual_ratio
        ),
    )
}

fn criterion_3() -> Outcome {
    let res = run_phase_sweep(&CircuitConfig::default(), &phase_grid(73, 2.0 * PI)).unwrap();
    let v = res.summary.visibility.as_ref().unwrap();
    let (raw, cor) = (v.raw.visibility, v.corrected.visibility);
    check(
        (0.89..=0.97).contains(&raw) && (0.93..=0.99).contains(&cor) && cor >= raw,
        format!(
            "V_raw {raw:.4} +- {:.4}, V_corrected {cor:.4} +- {:.4} (73 points, 90 s each)",
            v.raw.visibility_sigma, v.corrected.visibility_sigma
        ),
    )
}

fn criterion_4() -> Outcome {
    let cfg = CircuitConfig::default();
    let det = cfg.detection();
    let window = cfg.analysis.window;
    let total = cfg.pumps.total_power();
    let car = |f: f64| {
        car_estimate(&cfg.rates, &cfg.pumps.with_split(total, f), &cfg.ring, window, Some(&det)).unwrap()
    };
    let (even, skewed) = (car(0.5), car(0.9));
    let split = optimal_power_split(&cfg.rates, total, &cfg.ring, &cfg.pumps, window, Some(&det)).unwrap();
    check(
        (64.0..=96.0).contains(&even) && skewed < even && (split - 0.5).abs() <= 1e-3,
        format!("CAR {even:.2} at 50/50, {skewed:.2} at 90/10, optimal split {split:.6}"),
    )
}

fn criterion_5() -> Outcome {
    let cfg = CircuitConfig::default();
    let g1 = wavelength_grid(cfg.pumps.lambda1, 0.6, 0.02).unwrap();
    let g2 = wavelength_grid(cfg.pumps.lambda2, 0.6, 0.02).unwrap();
    let map = run_wavelength_map(&cfg, &g1, &g2, PI).unwrap();
    match map.ridge_fwhm {
        Some(f) => check(
            (0.07..=0.20).contains(&f),
            format!("ridge FWHM {f:.4} nm on a {}x{} grid (linewidth {:.4} nm)", g1.len(), g2.len(), cfg.ring.linewidth_fwhm()),
        ),
        None => check(false, "no half-maximum crossing in the ridge cut"),
    }
}

fn criterion_6() -> Outcome {
    let res = run_incoherent_control(&CircuitConfig::default(), &phase_grid(25, 2.0 * PI)).unwrap();
    let v = res.sweep.summary.visibility.as_ref().unwrap();
    check(
        res.visibility_consistent_with_zero && res.peak_at_floor,
        format!(
            "V {:.4} vs 3 sigma {:.4}; peak {} vs floor {:.1} ({:+.2} sigma)",
            v.raw.visibility,
            3.0 * v.raw.visibility_sigma,
            res.peak_total,
            res.accidental_total,
            res.excess_sigma
        ),
    )
}

fn criterion_7() -> Outcome {
    let tau = 50e-6;
    let det = DetectorSpec { efficiency: 1.0, dark_rate: 0.0, dead_time: tau, jitter_sigma: 0.0 };
    let duration = 20.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, x) in [0.1, 1.0, 3.0].into_iter().enumerate() {
        let r = x / tau;
        let (a, _) = generate_timetags(0.0, (r, 0.0), duration, &det, &det, 700 + i as u64).unwrap();
        let expected = r / (1.0 + r * tau);
        // renewal process with interval tau + Exp(r): var/mean^3 per unit time
        let mean_gap = tau + 1.0 / r;
        let sigma = ((1.0 / (r * r)) / mean_gap.powi(3) / duration).sqrt();
        let measured = a.rate();
        let z = (measured - expected) / sigma;
        pass &= z.abs() <= 5.0;
        if x == 1.0 {
            let loss = 1.0 - measured / r;
            pass &= (loss - 0.5).abs() <= 0.02;
            parts.push(format!("r tau=1: loss {loss:.4}"));
        }
        parts.push(format!("r tau={x}: {measured:.1} vs {expected:.1} Hz ({z:+.2} sigma)"));
    }
    check(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let base = CircuitConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [2, 4, 6, 8] {
        let cfg = base.with_symmetric_pumps(m);
        let res = run_phase_sweep(&cfg, &phase_grid(25, 2.0 * PI)).unwrap();
        let v = res.summary.visibility.as_ref().unwrap().corrected.visibility;
        pass &= v > 0.85;
        parts.push(format!(
            "|m|={m} (dl={:.1} nm): V_corrected {v:.4}",
            cfg.pumps.lambda2 - cfg.pumps.lambda1
        ));
    }
    check(pass, parts.join("; "))
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: common::CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn criterion_9() -> Outcome {
    use common::*;
    let results = [
        run_property("unitarity", state_and_unitary(), unitarity),
        run_property("composition", state_and_unitary(), composition),
        run_property("normalization", phase_and_reflectivity(), normalization),
        run_property("bilinearity and symmetry", power_scales(), bilinearity),
        run_property("even split", rate_models(), split_symmetry),
        run_property("seed determinism", timetag_inputs(), seed_determinism),
        run_property("histogram conservation", tag_sets(), histogram_conservation),
        run_property("estimator sanity", fringe_inputs(), estimator_sanity),
        run_property("phase covariance", phase_shift_inputs(), phase_covariance),
        run_property("energy balance", classical_inputs(), energy_balance),
        run_property("spectral bounds", spectral_inputs(), spectral_bounds),
        run_property("dead-time monotone", dead_time_inputs(), dead_time_monotone),
    ];
    let failures: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    if failures.is_empty() {
        check(true, format!("{} properties x {} cases", results.len(), CASES))
    } else {
        check(false, failures.join("; "))
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "output state matches closed form", Duration::from_secs(1), criterion_1),
        (2, "fringe doubling", Duration::from_secs(30), criterion_2),
        (3, "visibility", Duration::from_secs(120), criterion_3),
        (4, "CAR and power split", Duration::from_secs(30), criterion_4),
        (5, "spectral selectivity", Duration::from_secs(60), criterion_5),
        (6, "incoherent control", Duration::from_secs(60), criterion_6),
        (7, "dead-time law", Duration::from_secs(30), criterion_7),
        (8, "multi-resonance operation", Duration::from_secs(300), criterion_8),
        (9, "property suites", Duration::from_secs(120), criterion_9),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
