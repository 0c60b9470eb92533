//! Total-spin readout statistics and the method-of-moments error.
//!
//! For a probe `|ψ_φ⟩` and readout `m·J`, the asymptotic estimator variance is
//! `Var(m·J) / (∂_φ⟨m·J⟩)²`. Everything needed for any `m` is captured by the
//! derivative vector `d_a = ∂_φ⟨J_a⟩` and the symmetrized covariance
//! `C_ab = ½⟨{J_a, J_b}⟩ - ⟨J_a⟩⟨J_b⟩`, so readout sweeps never touch the state.

use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::Direction;
use crate::C64;

/// Below this, a squared slope or a variance counts as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutStats {
    pub derivative: [f64; 3],
    pub mean: [f64; 3],
    pub covariance: [[f64; 3]; 3],
}

impl ReadoutStats {
    /// Builds the statistics from `ψ`, `∂_φψ` and `[J_x ψ, J_y ψ, J_z ψ]`.
    pub fn from_vectors(psi: &DVector<C64>, dpsi: &DVector<C64>, j_psi: &[DVector<C64>; 3]) -> Self {
        let mut derivative = [0.0; 3];
        let mut mean = [0.0; 3];
        for a in 0..3 {
            derivative[a] = 2.0 * j_psi[a].dotc(dpsi).re;
            mean[a] = psi.dotc(&j_psi[a]).re;
        }
        let resid: Vec<DVector<C64>> = (0..3).map(|a| &j_psi[a] - psi * C64::new(mean[a], 0.0)).collect();
        let mut covariance = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in a..3 {
                let c = resid[a].dotc(&resid[b]).re;
                covariance[a][b] = c;
                covariance[b][a] = c;
            }
        }
        ReadoutStats { derivative, mean, covariance }
    }

    fn d(&self) -> Vector3<f64> {
        Vector3::from(self.derivative)
    }

    fn c(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.covariance[i][j])
    }

    /// `(∂_φ⟨m·J⟩)²` and `Var(m·J)`.
    pub fn signal_and_variance(&self, m: &Direction) -> (f64, f64) {
        let mv = Vector3::from(m.components());
        let slope = mv.dot(&self.d());
        (slope * slope, mv.dot(&(self.c() * mv)))
    }

    /// Reciprocal method-of-moments error for readout `m·J`.
    pub fn reciprocal_error(&self, m: &Direction) -> Result<f64> {
        let (signal_sq, variance) = self.signal_and_variance(m);
        classify(signal_sq, variance)
    }

    /// Best readout over all directions, `max_m (m·d)²/(mᵀCm) = dᵀC⁻¹d`,
    /// attained at `m ∝ C⁻¹d`. Fails when `C` is singular.
    pub fn optimal_readout(&self) -> Result<(Direction, f64)> {
        let d = self.d();
        let chol = self.c().cholesky().ok_or(Error::VanishingVariance { signal_sq: d.norm_squared() })?;
        let x = chol.solve(&d);
        let value = d.dot(&x);
        let m = Direction::new(x[0], x[1], x[2])?;
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "optimal readout value" });
        }
        Ok((m, value))
    }
}

/// Applies the zero thresholds shared by every method-of-moments evaluation.
pub fn classify(signal_sq: f64, variance: f64) -> Result<f64> {
    if variance < ZERO_TOL {
        if signal_sq < ZERO_TOL {
            Err(Error::Indeterminate { signal_sq, variance })
        } else {
            Err(Error::VanishingVariance { signal_sq })
        }
    } else {
        Ok(signal_sq / variance)
    }
}
