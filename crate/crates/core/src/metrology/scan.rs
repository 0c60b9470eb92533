//! Interaction-time sweeps: the metrological phase diagram and twist-untwist
//! protocol scans.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrology::predictors::Regime;
use crate::metrology::protocol::{protocol_stats, ProtocolSpec, Variant};
use crate::metrology::qfi::max_qfi_over_directions;
use crate::optimize::OptimizerConfig;
use crate::spin::Direction;

/// Width of the band around `q = -1/2` labelled as the `c/√N` regime.
pub const HEISENBERG_BAND: f64 = 0.05;

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub n_particles: usize,
    /// Exponent in `t = N^q`, when the sweep is parametrized that way.
    pub q: Option<f64>,
    pub t: f64,
    pub qfi_max: f64,
    pub argmax_xi: f64,
    pub argmax_theta: f64,
    pub mom_reciprocal: Option<f64>,
    pub regime: String,
    pub converged: bool,
}

/// 60 exponents from `-2.5` to `log_N(π/2)`.
pub fn default_q_grid(n_particles: usize) -> Vec<f64> {
    let hi = FRAC_PI_2.ln() / (n_particles.max(2) as f64).ln();
    let lo = -2.5;
    (0..60).map(|i| lo + (hi - lo) * i as f64 / 59.0).collect()
}

/// Regime of `t = N^q`.
///
/// `q ≤ -1` is SQL and `-1 < q < -1/2` sub-Heisenberg. A band of half-width
/// [`HEISENBERG_BAND`] around `-1/2` is the `c/√N` scaling regime. Above it,
/// times within `1/√N` of `π/2` are the GHZ edge and the rest the plateau.
pub fn regime_label(n_particles: usize, q: f64) -> Regime {
    let t = (n_particles as f64).powf(q).min(FRAC_PI_2);
    if q <= -1.0 {
        Regime::Sql
    } else if q < -0.5 - HEISENBERG_BAND {
        Regime::SubHeisenberg
    } else if q <= -0.5 + HEISENBERG_BAND {
        Regime::HeisenbergScaling
    } else if t >= FRAC_PI_2 - 1.0 / (n_particles as f64).sqrt() {
        Regime::GhzEdge
    } else {
        Regime::Plateau
    }
}

/// Direction-optimized QFI along `t = N^q` (clipped to `(0, π/2]`).
pub fn phase_diagram_scan(n_particles: usize, q_grid: &[f64], cfg: &OptimizerConfig) -> Result<Vec<ScanRecord>> {
    if n_particles < 2 {
        return Err(Error::precondition("phase diagram needs N >= 2"));
    }
    q_grid
        .par_iter()
        .map(|&q| {
            let t = (n_particles as f64).powf(q).min(FRAC_PI_2);
            let best = max_qfi_over_directions(n_particles, t, cfg)?;
            Ok(ScanRecord {
                n_particles,
                q: Some(q),
                t,
                qfi_max: best.value,
                argmax_xi: best.polar,
                argmax_theta: best.azimuth,
                mom_reciprocal: None,
                regime: regime_label(n_particles, q).tag().to_owned(),
                converged: best.converged,
            })
        })
        .collect()
}

/// One time point of a twist-untwist scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistUntwistRecord {
    pub n_particles: usize,
    pub t: f64,
    pub phi: f64,
    pub qfi_max: f64,
    pub argmax_xi: f64,
    pub argmax_theta: f64,
    /// Best readout for rotation about the QFI-optimal axis; `None` when the
    /// point is indeterminate.
    pub mom_optimized: Option<f64>,
    /// Method-of-moments value for the fixed rotation and readout.
    pub mom_fixed: Option<f64>,
}

/// For each `t`: the maximal QFI, the optimized-readout method-of-moments value
/// with rotation about the QFI-optimal axis, and a fixed protocol's value.
pub fn twist_untwist_scan(
    n_particles: usize,
    times: &[f64],
    phi: f64,
    fixed_n: &Direction,
    fixed_m: &Direction,
    cfg: &OptimizerConfig,
) -> Result<Vec<TwistUntwistRecord>> {
    times
        .par_iter()
        .map(|&t| {
            let best = max_qfi_over_directions(n_particles, t, cfg)?;
            let opt = ProtocolSpec::new(n_particles, t, phi, best.direction(), Variant::TwistUntwist);
            let mom_optimized = protocol_stats(&opt)?.optimal_readout().ok().map(|(_, v)| v);
            let fixed = ProtocolSpec::new(n_particles, t, phi, *fixed_n, Variant::TwistUntwist);
            let mom_fixed = protocol_stats(&fixed)?.reciprocal_error(fixed_m).ok();
            Ok(TwistUntwistRecord {
                n_particles,
                t,
                phi,
                qfi_max: best.value,
                argmax_xi: best.polar,
                argmax_theta: best.azimuth,
                mom_optimized,
                mom_fixed,
            })
        })
        .collect()
}
