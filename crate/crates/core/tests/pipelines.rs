use std::f64::consts::FRAC_PI_2;

use twistlab::lattice::{build_system, fr_max_qfi, fr_optimize_scan, Branch};
use twistlab::metrology::{
    asymptotic_predictor, max_qfi_over_directions, phase_diagram_scan, qfi_numeric, twist_untwist_scan,
    PredictorParams, Regime,
};
use twistlab::optimize::OptimizerConfig;
use twistlab::Direction;

#[test]
fn predictors_track_the_optimized_qfi() {
    let cfg = OptimizerConfig::default();
    let n = 1000usize;
    let nf = n as f64;
    let cases = [
        (Regime::Plateau, 0.7, PredictorParams::new(n), 0.01),
        (Regime::HeisenbergScaling, 1.0 / nf.sqrt(), PredictorParams::new(n), 0.05),
        (Regime::GhzEdge, FRAC_PI_2 - 1.0 / nf.sqrt(), PredictorParams::new(n), 0.05),
    ];
    for (regime, t, p, tol) in cases {
        let got = max_qfi_over_directions(n, t, &cfg).unwrap().value;
        let want = asymptotic_predictor(regime, &p).unwrap();
        assert!((got / want - 1.0).abs() < tol, "{regime}: {got} vs {want}");
    }
}

#[test]
fn phase_diagram_agrees_with_statevector_qfi() {
    let cfg = OptimizerConfig::default();
    for r in phase_diagram_scan(40, &[-1.3, -0.5, -0.1], &cfg).unwrap() {
        let d = Direction::from_angles(r.argmax_xi, r.argmax_theta);
        let brute = qfi_numeric(40, r.t, &d).unwrap();
        assert!((brute / r.qfi_max - 1.0).abs() < 1e-9);
    }
}

#[test]
fn twist_untwist_scan_respects_the_bound() {
    let cfg = OptimizerConfig::default();
    let rows = twist_untwist_scan(30, &[0.05, 0.2, 0.6], 1e-3, &Direction::X, &Direction::X, &cfg).unwrap();
    for r in rows {
        let opt = r.mom_optimized.unwrap();
        assert!(opt <= r.qfi_max + 1e-6);
        if let Some(fixed) = r.mom_fixed {
            assert!(fixed <= r.qfi_max + 1e-6);
        }
    }
}

#[test]
fn finite_range_scan_stays_below_qfi() {
    let cfg = OptimizerConfig::default();
    let system = build_system(6, 2).unwrap();
    for rec in fr_optimize_scan(&system, &[0.3, 0.8], 1e-3, &cfg).unwrap() {
        assert!(rec.protocol.value <= rec.qfi.value + 1e-3);
        assert!(rec.protocol.value > 0.9 * (rec.n + 2) as f64);
    }
}

#[test]
fn finite_range_reduces_to_all_to_all_twisting() {
    // K = N/2 on N + 2 sites couples every pair except antipodes.
    let cfg = OptimizerConfig::default();
    let fr = fr_max_qfi(98, 49, FRAC_PI_2, Branch::BigK, &cfg).unwrap();
    assert!((fr.value / 200.0 - 1.0).abs() < 0.02);
    assert!((fr.db - 10.0 * 2f64.log10()).abs() < 0.1);
}
