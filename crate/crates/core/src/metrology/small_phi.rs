//! Small-angle behavior of the `x`-rotation, `x`-readout twist-untwist probe.
//!
//! Near `φ = 0` the signal is `⟨J_x⟩ = N/2 + O(φ²)` and the variance is
//! `O(φ²)`, so the reciprocal error tends to `slope² / rate` with
//! `slope = ∂_φ⟨J_x⟩ / φ` and `rate = Var(J_x) / φ²`.

use crate::error::{Error, Result};
use crate::metrology::protocol::{protocol_state, richardson, ProtocolSpec, Variant, PHI_LADDER};
use crate::spin::{variance, CollectiveOperator, Direction, OperatorKind};

/// Exact finite-`N` coefficient of `φ` in `∂_φ⟨J_x⟩`.
pub fn small_phi_slope(n_particles: usize, t: f64) -> Result<f64> {
    if n_particles < 3 {
        return Err(Error::precondition("small_phi_slope needs N >= 3"));
    }
    let n = n_particles as f64;
    let c = (2.0 * t).cos();
    let k = n_particles as i32;
    let triple = n * (n - 1.0) * (n - 2.0) / 2.0;
    let second = -(n / 8.0) * (n * n + n + n * (n - 1.0) * c.powi(k - 2));
    let third = 0.25 * (triple * c.powi(k - 3) + n * n * c.powi(k - 1) + 2.0 * n * (n - 1.0) * c + triple * c);
    Ok(second + third)
}

/// `lim_{φ→0} Var(J_x)/φ²`, extrapolated from the shared `φ` ladder.
pub fn small_phi_variance_rate(n_particles: usize, t: f64) -> Result<f64> {
    if n_particles < 4 {
        return Err(Error::precondition("small_phi_variance_rate needs N >= 4"));
    }
    let jx = CollectiveOperator::new(n_particles, OperatorKind::Jx)?;
    let spec = ProtocolSpec::new(n_particles, t, 0.0, Direction::X, Variant::TwistUntwist);
    let mut vals = [0.0; 3];
    for (v, phi) in vals.iter_mut().zip(PHI_LADDER) {
        *v = variance(&protocol_state(&spec.with_phi(phi))?, &jx)? / (phi * phi);
    }
    richardson(vals)
}
