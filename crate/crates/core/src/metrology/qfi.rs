//! Quantum Fisher information of one-axis-twisted coherent states.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{maximize_on_sphere, OptimizerConfig, SphereDomain};
use crate::quadrature::integrate;
use crate::spin::{coherent_state, oat_evolve, variance, CollectiveOperator, Direction, OperatorKind, TwistSign};

/// `4 Var(n·J)` in `e^{-itJ_z²}|ζ=1⟩`, from the closed-form expression.
pub fn qfi_closed_form(n_particles: usize, t: f64, polar: f64, azimuth: f64) -> f64 {
    let n = n_particles as f64;
    let (s_xi, c_xi) = polar.sin_cos();
    let (s_th, c_th) = azimuth.sin_cos();
    let (s_t, c_t) = t.sin_cos();
    let c2t = (2.0 * t).cos();
    let pair = n * (n - 1.0);
    // The N(N-1) prefactor vanishes for N = 1, where cos^{N-2} would be singular.
    let (pair_2t, pair_t) = if n_particles >= 2 {
        let k = n_particles as i32 - 2;
        (pair * c2t.powi(k), pair * c_t.powi(k))
    } else {
        (0.0, 0.0)
    };
    let bracket = (n * n + n) / 2.0 + 0.5 * (2.0 * azimuth).cos() * pair_2t
        - n * n * c_th * c_th * c_t.powi(2 * (n_particles as i32 - 1));
    s_xi * s_xi * bracket + n * c_xi * c_xi + (2.0 * polar).sin() * s_th * pair_t * s_t
}

/// `4 Var(n·J)` in `e^{-itJ_z²}|ζ=1⟩`, by explicit state evolution.
pub fn qfi_numeric(n_particles: usize, t: f64, n: &Direction) -> Result<f64> {
    let psi = oat_evolve(&coherent_state(n_particles, 1.0)?, t, TwistSign::Twist);
    let gen = CollectiveOperator::new(n_particles, OperatorKind::Dot(*n))?;
    Ok(4.0 * variance(&psi, &gen)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiMax {
    pub value: f64,
    pub polar: f64,
    pub azimuth: f64,
    pub converged: bool,
}

impl QfiMax {
    pub fn direction(&self) -> Direction {
        Direction::from_angles(self.polar, self.azimuth)
    }
}

/// Maximizes the closed-form QFI over rotation axes.
pub fn max_qfi_over_directions(n_particles: usize, t: f64, cfg: &OptimizerConfig) -> Result<QfiMax> {
    if n_particles == 0 {
        return Err(Error::precondition("particle number N must be >= 1"));
    }
    let f = |d: &Direction| qfi_closed_form(n_particles, t, d.polar(), d.azimuth());
    let best = maximize_on_sphere(f, &SphereDomain::full(), cfg)?;
    Ok(QfiMax { value: best.value, polar: best.polar, azimuth: best.azimuth, converged: best.converged })
}

/// `(2/π) ∫₀^{π/2} QFI dt` at fixed direction, to absolute accuracy `1e-6 N²`.
pub fn time_averaged_qfi(n_particles: usize, polar: f64, azimuth: f64) -> Result<f64> {
    if n_particles == 0 {
        return Err(Error::precondition("particle number N must be >= 1"));
    }
    let n = n_particles as f64;
    let tol = 1e-6 * n * n * FRAC_PI_2;
    let r = integrate(|t| qfi_closed_form(n_particles, t, polar, azimuth), 0.0, FRAC_PI_2, tol, 4000)?;
    Ok(r.value / FRAC_PI_2)
}
