//! Twist-untwist probe states and their method-of-moments error.
//!
//! A protocol is a sequence of layers applied to `|ζ=1⟩`. Exactly one layer
//! depends on the sensed angle `φ`; its generator is applied to the state at
//! that point and carried through the remaining layers, which yields the exact
//! derivative `∂_φ|ψ_φ⟩` alongside the state.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::readout::ReadoutStats;
use crate::spin::{
    apply_components, coherent_state, oat_phase_in_place, CollectiveState, Direction, Rotation, TwistSign,
};
use crate::C64;

/// Richardson ladder used for every `φ → 0` limit.
pub const PHI_LADDER: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Relative disagreement between the last two Richardson levels above which
/// the extrapolation is reported as divergent.
pub const RICHARDSON_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MzAxis {
    X,
    Y,
}

impl MzAxis {
    pub fn direction(self) -> Direction {
        match self {
            MzAxis::X => Direction::X,
            MzAxis::Y => Direction::Y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Variant {
    /// `e^{-iφ n·J} e^{-itJ_z²}|ζ=1⟩`.
    RotationOnly,
    /// `e^{itJ_z²} e^{-iφ n·J} e^{-itJ_z²}|ζ=1⟩`.
    TwistUntwist,
    /// Twist-untwist with the realigning rotation `e^{iφ' n·J}` before the
    /// untwist.
    Realigned { phi_prime: f64 },
    /// Mach-Zehnder form: the sensing rotation about `x` or `y` is written as
    /// a `J_z` phase between two `π/2` pulses, followed by the realigning
    /// rotation `e^{iφ' J_axis}`.
    MachZehnder { axis: MzAxis, phi_prime: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub n_particles: usize,
    pub t: f64,
    pub phi: f64,
    pub n: Direction,
    pub variant: Variant,
}

impl ProtocolSpec {
    pub fn new(n_particles: usize, t: f64, phi: f64, n: Direction, variant: Variant) -> Self {
        ProtocolSpec { n_particles, t, phi, n, variant }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    /// Rotation axis whose generator the sensing layer imprints.
    pub fn generator(&self) -> Direction {
        match self.variant {
            Variant::MachZehnder { axis, .. } => axis.direction(),
            _ => self.n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::precondition("particle number N must be >= 1"));
        }
        if !(self.t.is_finite() && self.phi.is_finite()) {
            return Err(Error::precondition("interaction time and angle must be finite"));
        }
        Ok(())
    }
}

enum Layer {
    Oat(TwistSign),
    Rotate(Direction, f64),
    /// `e^{-i s φ a·J}`.
    Sense(Direction, f64),
}

fn layers(spec: &ProtocolSpec) -> Vec<Layer> {
    use Layer::*;
    let mut out = vec![Oat(TwistSign::Twist)];
    match spec.variant {
        Variant::RotationOnly => out.push(Sense(spec.n, 1.0)),
        Variant::TwistUntwist => out.extend([Sense(spec.n, 1.0), Oat(TwistSign::Untwist)]),
        Variant::Realigned { phi_prime } => {
            out.extend([Sense(spec.n, 1.0), Rotate(spec.n, -phi_prime), Oat(TwistSign::Untwist)])
        }
        Variant::MachZehnder { axis, phi_prime } => {
            // e^{-iφJ_y} = e^{-iπ/2 J_x} e^{+iφJ_z} e^{+iπ/2 J_x}
            // e^{-iφJ_x} = e^{+iπ/2 J_y} e^{+iφJ_z} e^{-iπ/2 J_y}
            let (pulse, first) = match axis {
                MzAxis::Y => (Direction::X, -FRAC_PI_2),
                MzAxis::X => (Direction::Y, FRAC_PI_2),
            };
            out.extend([
                Rotate(pulse, first),
                Sense(Direction::Z, -1.0),
                Rotate(pulse, -first),
                Rotate(axis.direction(), -phi_prime),
                Oat(TwistSign::Untwist),
            ]);
        }
    }
    out
}

/// `(|ψ_φ⟩, ∂_φ|ψ_φ⟩)`.
pub fn protocol_state_and_derivative(spec: &ProtocolSpec) -> Result<(CollectiveState, DVector<C64>)> {
    spec.validate()?;
    let n = spec.n_particles;
    let mut psi = coherent_state(n, 1.0)?.into_amplitudes();
    let mut dpsi: Option<DVector<C64>> = None;
    for layer in layers(spec) {
        match layer {
            Layer::Oat(sign) => {
                oat_phase_in_place(&mut psi, spec.t, sign);
                if let Some(d) = dpsi.as_mut() {
                    oat_phase_in_place(d, spec.t, sign);
                }
            }
            Layer::Rotate(axis, angle) => {
                let rot = Rotation::new(n, &axis)?;
                psi = rot.apply_vec(&psi, angle)?;
                if let Some(d) = dpsi.as_ref() {
                    dpsi = Some(rot.apply_vec(d, angle)?);
                }
            }
            Layer::Sense(axis, sign) => {
                let rot = Rotation::new(n, &axis)?;
                psi = rot.apply_vec(&psi, sign * spec.phi)?;
                let [jx, jy, jz] = apply_components(&psi);
                let gen = jx * C64::new(axis.x(), 0.0) + jy * C64::new(axis.y(), 0.0) + jz * C64::new(axis.z(), 0.0);
                dpsi = Some(gen * C64::new(0.0, -sign));
            }
        }
    }
    let dpsi = dpsi.expect("every protocol has a sensing layer");
    Ok((CollectiveState::from_raw(psi), dpsi))
}

/// The probe state of `spec`.
pub fn protocol_state(spec: &ProtocolSpec) -> Result<CollectiveState> {
    Ok(protocol_state_and_derivative(spec)?.0)
}

/// Readout statistics of the probe for every total-spin readout at once.
pub fn protocol_stats(spec: &ProtocolSpec) -> Result<ReadoutStats> {
    let (psi, dpsi) = protocol_state_and_derivative(spec)?;
    let j_psi = apply_components(psi.amplitudes());
    Ok(ReadoutStats::from_vectors(psi.amplitudes(), &dpsi, &j_psi))
}

/// `(∂_φ⟨m·J⟩)² / Var(m·J)`.
pub fn mom_reciprocal_error(spec: &ProtocolSpec, m: &Direction) -> Result<f64> {
    protocol_stats(spec)?.reciprocal_error(m)
}

/// Two-level Richardson extrapolation of values sampled on a halving ladder.
///
/// The probes are not symmetric under `φ → -φ`, so the expansion has both odd
/// and even powers: the first level removes the `O(h)` term and the second
/// the `O(h²)` term.
pub fn richardson(values: [f64; 3]) -> Result<f64> {
    let l1 = [2.0 * values[1] - values[0], 2.0 * values[2] - values[1]];
    let l2 = (4.0 * l1[1] - l1[0]) / 3.0;
    let scale = l2.abs().max(f64::MIN_POSITIVE);
    if !l2.is_finite() || (l2 - l1[1]).abs() > RICHARDSON_TOL * scale {
        return Err(Error::ExtrapolationDivergence {
            estimates: vec![values[0], values[1], values[2], l1[0], l1[1], l2],
        });
    }
    Ok(l2)
}

/// `lim_{φ→0}` of [`mom_reciprocal_error`]; the `φ` of `spec` is ignored.
pub fn mom_reciprocal_at_zero(spec: &ProtocolSpec, m: &Direction) -> Result<f64> {
    if !matches!(spec.variant, Variant::TwistUntwist) {
        return Err(Error::precondition("the phi -> 0 limit is defined for the plain twist-untwist variant"));
    }
    let mut vals = [0.0; 3];
    for (v, phi) in vals.iter_mut().zip(PHI_LADDER) {
        *v = mom_reciprocal_error(&spec.with_phi(phi), m)?;
    }
    richardson(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::qfi::qfi_numeric;
    use crate::spin::{expectation, rotate, CollectiveOperator, OperatorKind};
    use approx::assert_relative_eq;

    fn tu(n: usize, t: f64, phi: f64, axis: Direction) -> ProtocolSpec {
        ProtocolSpec::new(n, t, phi, axis, Variant::TwistUntwist)
    }

    #[test]
    fn zero_time_is_rotation_only() {
        let s = protocol_state(&tu(6, 0.0, 0.4, Direction::Y)).unwrap();
        let r = rotate(&coherent_state(6, 1.0).unwrap(), &Direction::Y, 0.4).unwrap();
        assert!((s.amplitudes() - r.amplitudes()).norm() < 1e-13);
    }

    #[test]
    fn cat_protocol_amplitudes() {
        let n = 4;
        for phi in [0.1, 0.37, 1.2] {
            let s = protocol_state(&tu(n, FRAC_PI_2, phi, Direction::X)).unwrap();
            let (a, b) = ((n as f64 * phi / 2.0).cos(), (n as f64 * phi / 2.0).sin());
            let plus = coherent_state(n, 1.0).unwrap();
            let minus = coherent_state(n, -1.0).unwrap();
            let want = plus.amplitudes() * C64::new(a, 0.0) - minus.amplitudes() * C64::new(b, 0.0);
            // equal up to a global phase
            let phase = want.dotc(s.amplitudes());
            let phase = phase / phase.norm();
            assert!((s.amplitudes() - want * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let variants = [
            Variant::RotationOnly,
            Variant::TwistUntwist,
            Variant::Realigned { phi_prime: 0.2 },
            Variant::MachZehnder { axis: MzAxis::X, phi_prime: 0.1 },
            Variant::MachZehnder { axis: MzAxis::Y, phi_prime: -0.3 },
        ];
        let n_dir = Direction::from_angles(1.1, 0.6);
        for v in variants {
            let spec = ProtocolSpec::new(7, 0.45, 0.3, n_dir, v);
            let (_, d) = protocol_state_and_derivative(&spec).unwrap();
            let h = 1e-6;
            let p = protocol_state(&spec.with_phi(0.3 + h)).unwrap();
            let m = protocol_state(&spec.with_phi(0.3 - h)).unwrap();
            let fd = (p.amplitudes() - m.amplitudes()) / C64::new(2.0 * h, 0.0);
            assert!((fd - d).norm() < 1e-7, "{v:?}");
        }
    }

    #[test]
    fn realigned_equals_shifted_twist_untwist() {
        let n_dir = Direction::from_angles(0.8, -0.4);
        let (phi, delta) = (0.7, 0.25);
        let a = protocol_state(&ProtocolSpec::new(9, 0.3, phi, n_dir, Variant::Realigned { phi_prime: phi - delta }))
            .unwrap();
        let b = protocol_state(&tu(9, 0.3, delta, n_dir)).unwrap();
        assert_relative_eq!(a.fidelity(&b), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn mach_zehnder_equals_realigned_about_the_same_axis() {
        for (axis, dir) in [(MzAxis::X, Direction::X), (MzAxis::Y, Direction::Y)] {
            let a = protocol_state(&ProtocolSpec::new(
                8,
                0.6,
                0.4,
                Direction::Z,
                Variant::MachZehnder { axis, phi_prime: 0.15 },
            ))
            .unwrap();
            let b =
                protocol_state(&ProtocolSpec::new(8, 0.6, 0.4, dir, Variant::Realigned { phi_prime: 0.15 })).unwrap();
            assert_relative_eq!(a.fidelity(&b), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn untwist_leaves_qfi_unchanged() {
        let n_dir = Direction::from_angles(1.3, 0.2);
        let (n, t, phi) = (12, 0.5, 0.2);
        let gen = CollectiveOperator::new(n, OperatorKind::Dot(n_dir)).unwrap();
        let qfi = |v: Variant| {
            let s = protocol_state(&ProtocolSpec::new(n, t, phi, n_dir, v)).unwrap();
            4.0 * crate::spin::variance(&s, &gen).unwrap()
        };
        let want = qfi_numeric(n, t, &n_dir).unwrap();
        assert_relative_eq!(qfi(Variant::RotationOnly), want, max_relative = 1e-9);
        // the untwisted state's generator is conjugated, so compare via the stats bound instead
        let stats = protocol_stats(&tu(n, t, phi, n_dir)).unwrap();
        let (_, best) = stats.optimal_readout().unwrap();
        assert!(best <= want + 1e-6);
    }

    #[test]
    fn ghz_parity_pipeline() {
        for n in [2usize, 4, 6, 10] {
            let par = CollectiveOperator::new(n, OperatorKind::ParityX).unwrap();
            for k in 0..10 {
                let phi = 0.05 + 0.137 * k as f64;
                let ghz = crate::spin::CollectiveState::ghz(n).unwrap();
                let psi = rotate(&ghz, &Direction::Z, phi).unwrap();
                let var = crate::spin::variance(&psi, &par).unwrap();
                let h = 1e-5;
                let at = |p: f64| expectation(&rotate(&ghz, &Direction::Z, p).unwrap(), &par).unwrap();
                let slope = (at(phi + h) - at(phi - h)) / (2.0 * h);
                assert_relative_eq!(slope, -(n as f64) * (n as f64 * phi).sin(), max_relative = 1e-8);
                let slope = -(n as f64) * (n as f64 * phi).sin();
                let err = var / (slope * slope);
                assert_relative_eq!(err, 1.0 / (n * n) as f64, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn richardson_flags_divergence() {
        let f = |h: f64| 1.0 + 0.3 * h - 2.0 * h * h;
        assert_relative_eq!(richardson([f(1e-3), f(5e-4), f(2.5e-4)]).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(richardson([1.0, 2.0, 5.0]), Err(Error::ExtrapolationDivergence { .. })));
    }
}
