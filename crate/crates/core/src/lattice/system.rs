//! Statevector simulation of finite-range Ising twisting on a periodic ring.
//!
//! Basis index bit `i` is site `i`; bit value 1 means `Z = -1`. The coupling
//! `H_K = ¼ Σ_j Σ_{0<|i-j|≤K} Z_i Z_j` is diagonal, so evolution is a phase
//! multiply, and collective spin operators are applied site by site without
//! forming matrices.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::readout::ReadoutStats;
use crate::spin::{Direction, TwistSign};
use crate::C64;

/// Largest ring a statevector may be allocated for.
pub const HARD_SITE_CAP: usize = 24;

/// Default largest ring used for brute-force cross-checks.
pub const BRUTE_FORCE_SITE_CAP: usize = 14;

/// Validates `N` (ring of `N + 2` sites) and range `K`.
pub fn check_ring(n: usize, k: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::precondition(format!("N must be even and >= 2 (got {n})")));
    }
    if k < 1 || k > n / 2 {
        return Err(Error::precondition(format!("range K must satisfy 1 <= K <= N/2 = {} (got {k})", n / 2)));
    }
    Ok(())
}

/// Ring of `N + 2` sites with interaction range `K` and the diagonal of `H_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSystem {
    n_sites: usize,
    range: usize,
    h_diag: Vec<f64>,
}

fn rotate_bits(b: usize, d: usize, sites: usize) -> usize {
    let mask = (1usize << sites) - 1;
    ((b >> d) | (b << (sites - d))) & mask
}

/// Diagonal of `H_K`: `½ Σ_{d=1}^{K} Σ_j z_j z_{j+d}` per basis state.
fn coupling_diagonal(sites: usize, k: usize) -> Vec<f64> {
    (0..1usize << sites)
        .into_par_iter()
        .map(|b| {
            let mut acc = 0i64;
            for d in 1..=k {
                let differing = (b ^ rotate_bits(b, d, sites)).count_ones() as i64;
                acc += sites as i64 - 2 * differing;
            }
            0.5 * acc as f64
        })
        .collect()
}

/// Builds the ring for `N` (so `N + 2` sites) and range `K`.
pub fn build_system(n: usize, k: usize) -> Result<LatticeSystem> {
    check_ring(n, k)?;
    let sites = n + 2;
    if sites > HARD_SITE_CAP {
        return Err(Error::TooManySites { sites, cap: HARD_SITE_CAP });
    }
    Ok(LatticeSystem { n_sites: sites, range: k, h_diag: coupling_diagonal(sites, k) })
}

impl LatticeSystem {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `N = n_sites - 2`.
    pub fn n(&self) -> usize {
        self.n_sites - 2
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn h_diag(&self) -> &[f64] {
        &self.h_diag
    }
}

/// Pure state of the ring.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState {
    n_sites: usize,
    amplitudes: DVector<C64>,
}

impl LatticeState {
    pub fn from_amplitudes(n_sites: usize, amplitudes: DVector<C64>) -> Result<Self> {
        if n_sites > HARD_SITE_CAP {
            return Err(Error::TooManySites { sites: n_sites, cap: HARD_SITE_CAP });
        }
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::DimensionMismatch { expected: 1 << n_sites, found: amplitudes.len() });
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::precondition(format!("amplitudes are not normalized (|a|^2 = {norm_sq})")));
        }
        Ok(LatticeState { n_sites, amplitudes })
    }

    /// `|+⟩^{⊗ sites}`.
    pub fn plus(n_sites: usize) -> Result<Self> {
        if n_sites > HARD_SITE_CAP {
            return Err(Error::TooManySites { sites: n_sites, cap: HARD_SITE_CAP });
        }
        let dim = 1usize << n_sites;
        let a = C64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(LatticeState { n_sites, amplitudes: DVector::from_element(dim, a) })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn fidelity(&self, other: &LatticeState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

fn check_dims(state: &LatticeState, system: &LatticeSystem) -> Result<()> {
    if state.n_sites != system.n_sites {
        return Err(Error::DimensionMismatch { expected: system.n_sites, found: state.n_sites });
    }
    Ok(())
}

pub(crate) fn phase_in_place(v: &mut DVector<C64>, h: &[f64], t: f64, sign: TwistSign) {
    let s = sign.sign();
    v.as_mut_slice().par_iter_mut().zip(h.par_iter()).for_each(|(a, &e)| *a *= C64::from_polar(1.0, -s * t * e));
}

/// `exp(∓ i t H_K)|state⟩` (upper sign for [`TwistSign::Twist`]).
pub fn fr_evolve(state: &LatticeState, system: &LatticeSystem, t: f64, sign: TwistSign) -> Result<LatticeState> {
    check_dims(state, system)?;
    let mut amps = state.amplitudes.clone();
    phase_in_place(&mut amps, &system.h_diag, t, sign);
    Ok(LatticeState { n_sites: state.n_sites, amplitudes: amps })
}

/// `exp(-iφ n·σ/2)` in the `(|0⟩, |1⟩)` basis, `σ_y|0⟩ = i|1⟩`.
fn single_site_unitary(n: &Direction, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (0.5 * phi).sin_cos();
    let i = C64::new(0.0, 1.0);
    let (nx, ny, nz) = (n.x(), n.y(), n.z());
    [[C64::new(c, 0.0) - i * s * nz, -i * s * nx - s * ny], [-i * s * nx + s * ny, C64::new(c, 0.0) + i * s * nz]]
}

pub(crate) fn rotate_in_place(v: &mut DVector<C64>, n_sites: usize, n: &Direction, phi: f64) {
    let u = single_site_unitary(n, phi);
    let slice = v.as_mut_slice();
    for site in 0..n_sites {
        let stride = 1usize << site;
        // Each chunk of 2·stride holds `stride` independent (|0⟩, |1⟩) pairs.
        slice.par_chunks_mut(2 * stride).for_each(|chunk| {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = u[0][0] * x0 + u[0][1] * x1;
                *a1 = u[1][0] * x0 + u[1][1] * x1;
            }
        });
    }
}

/// `exp(-iφ n·J)` with `J = Σ_i σ_i/2`, applied site by site.
pub fn lattice_rotate(state: &LatticeState, n: &Direction, phi: f64) -> LatticeState {
    let mut amps = state.amplitudes.clone();
    rotate_in_place(&mut amps, state.n_sites, n, phi);
    LatticeState { n_sites: state.n_sites, amplitudes: amps }
}

/// `[J_x v, J_y v, J_z v]` with `J = Σ_i σ_i/2`, streamed over basis states.
pub fn lattice_components(v: &DVector<C64>, n_sites: usize) -> [DVector<C64>; 3] {
    let src = v.as_slice();
    let rows: Vec<[C64; 3]> = (0..src.len())
        .into_par_iter()
        .map(|b| {
            let mut x = C64::new(0.0, 0.0);
            let mut y = C64::new(0.0, 0.0);
            let mut z = 0.0;
            for i in 0..n_sites {
                let mask = 1usize << i;
                let flipped = src[b ^ mask];
                x += flipped;
                if b & mask == 0 {
                    y += C64::new(flipped.im, -flipped.re); // -i·a
                    z += 1.0;
                } else {
                    y += C64::new(-flipped.im, flipped.re); // +i·a
                    z -= 1.0;
                }
            }
            [x * 0.5, y * 0.5, src[b] * (0.5 * z)]
        })
        .collect();
    let dim = src.len();
    [
        DVector::from_iterator(dim, rows.iter().map(|r| r[0])),
        DVector::from_iterator(dim, rows.iter().map(|r| r[1])),
        DVector::from_iterator(dim, rows.iter().map(|r| r[2])),
    ]
}

/// First and second moments of `n·J` and the variance (never negative).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub second: f64,
    pub variance: f64,
}

pub fn lattice_moments(state: &LatticeState, n: &Direction) -> Moments {
    let [jx, jy, jz] = lattice_components(&state.amplitudes, state.n_sites);
    let w = jx * C64::new(n.x(), 0.0) + jy * C64::new(n.y(), 0.0) + jz * C64::new(n.z(), 0.0);
    let mean = state.amplitudes.dotc(&w).re;
    let second = w.norm_squared();
    let variance = (w - &state.amplitudes * C64::new(mean, 0.0)).norm_squared();
    Moments { mean, second, variance }
}

/// `Var(n·J)` in `e^{-itH_K}|+⟩` by statevector evolution.
pub fn fr_variance_brute(system: &LatticeSystem, t: f64, n: &Direction) -> Result<f64> {
    let psi = fr_evolve(&LatticeState::plus(system.n_sites)?, system, t, TwistSign::Twist)?;
    Ok(lattice_moments(&psi, n).variance)
}

/// Readout statistics of `e^{itH_K} e^{-iφ n·J} e^{-itH_K}|+⟩`.
pub fn fr_protocol_stats(system: &LatticeSystem, t: f64, phi: f64, n: &Direction) -> Result<ReadoutStats> {
    let sites = system.n_sites;
    let mut psi = LatticeState::plus(sites)?.amplitudes;
    phase_in_place(&mut psi, &system.h_diag, t, TwistSign::Twist);
    rotate_in_place(&mut psi, sites, n, phi);
    let [jx, jy, jz] = lattice_components(&psi, sites);
    let mut dpsi =
        (jx * C64::new(n.x(), 0.0) + jy * C64::new(n.y(), 0.0) + jz * C64::new(n.z(), 0.0)) * C64::new(0.0, -1.0);
    phase_in_place(&mut psi, &system.h_diag, t, TwistSign::Untwist);
    phase_in_place(&mut dpsi, &system.h_diag, t, TwistSign::Untwist);
    let comps = lattice_components(&psi, sites);
    Ok(ReadoutStats::from_vectors(&psi, &dpsi, &comps))
}

/// Reciprocal method-of-moments error of the finite-range twist-untwist probe.
pub fn fr_mom_reciprocal(system: &LatticeSystem, t: f64, phi: f64, n: &Direction, m: &Direction) -> Result<f64> {
    fr_protocol_stats(system, t, phi, n)?.reciprocal_error(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{coherent_state, rotate, CollectiveOperator, OperatorKind};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coupling_examples() {
        let sys = build_system(2, 1).unwrap();
        assert_eq!(sys.h_diag()[0], 2.0);
        assert_eq!(sys.h_diag()[0b0101], -2.0);
        for k in 1..=3 {
            let sys = build_system(6, k).unwrap();
            let mask = (1 << 8) - 1;
            for b in 0..256usize {
                assert_eq!(sys.h_diag()[b], sys.h_diag()[b ^ mask]);
                assert_eq!(sys.h_diag()[b], sys.h_diag()[rotate_bits(b, 1, 8)]);
            }
        }
        assert!(build_system(3, 1).is_err());
        assert!(build_system(4, 3).is_err());
        assert!(build_system(4, 0).is_err());
    }

    #[test]
    fn evolution_examples() {
        let sys = build_system(4, 2).unwrap();
        let plus = LatticeState::plus(6).unwrap();
        assert_eq!(fr_evolve(&plus, &sys, 0.0, TwistSign::Twist).unwrap(), plus);
        let there = fr_evolve(&plus, &sys, 0.8, TwistSign::Twist).unwrap();
        let back = fr_evolve(&there, &sys, 0.8, TwistSign::Untwist).unwrap();
        assert!((back.amplitudes() - plus.amplitudes()).norm() < 1e-14);
        assert_relative_eq!(there.norm(), 1.0, epsilon = 1e-14);
        assert!(fr_evolve(&LatticeState::plus(4).unwrap(), &sys, 0.1, TwistSign::Twist).is_err());
    }

    #[test]
    fn rotation_examples() {
        let plus = LatticeState::plus(4).unwrap();
        assert_eq!(lattice_rotate(&plus, &Direction::Y, 0.0), plus);
        let minus = lattice_rotate(&plus, &Direction::Z, std::f64::consts::PI);
        let want = DVector::from_fn(16, |b, _| {
            let parity = if (b as u32).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            C64::new(0.25 * parity, 0.0)
        });
        assert_relative_eq!(minus.amplitudes().dotc(&want).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn moment_examples() {
        let m = 7;
        let plus = LatticeState::plus(m).unwrap();
        let x = lattice_moments(&plus, &Direction::X);
        assert_relative_eq!(x.mean, m as f64 / 2.0, epsilon = 1e-12);
        assert!(x.variance < 1e-12);
        assert_relative_eq!(lattice_moments(&plus, &Direction::Z).variance, m as f64 / 4.0, epsilon = 1e-12);
    }

    fn dense_collective(sites: usize, n: &Direction) -> DMatrix<C64> {
        let dim = 1 << sites;
        let mut out = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for col in 0..dim {
            let mut e = DVector::from_element(dim, C64::new(0.0, 0.0));
            e[col] = C64::new(1.0, 0.0);
            let [x, y, z] = lattice_components(&e, sites);
            let v = x * C64::new(n.x(), 0.0) + y * C64::new(n.y(), 0.0) + z * C64::new(n.z(), 0.0);
            out.set_column(col, &v);
        }
        out
    }

    #[test]
    fn moments_match_dense_reference() {
        // The dense reference is built from Kronecker products, independent of
        // the streaming kernel.
        let sites = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let amps = DVector::from_fn(1 << sites, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let state = LatticeState::from_amplitudes(sites, amps.normalize()).unwrap();
        let n = Direction::from_angles(1.0, 2.0);
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let pauli = [
            DMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
            DMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]),
            DMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
        ];
        let g = &pauli[0] * C64::new(n.x() / 2.0, 0.0)
            + &pauli[1] * C64::new(n.y() / 2.0, 0.0)
            + &pauli[2] * C64::new(n.z() / 2.0, 0.0);
        let dim = 1 << sites;
        let mut dense = DMatrix::from_element(dim, dim, zero);
        for site in 0..sites {
            // site 0 is the least significant bit, i.e. the rightmost factor
            let mut term = DMatrix::from_element(1, 1, one);
            for s in (0..sites).rev() {
                let f = if s == site { g.clone() } else { DMatrix::identity(2, 2) };
                term = term.kronecker(&f);
            }
            dense += term;
        }
        assert!((&dense - dense_collective(sites, &n)).norm() < 1e-12);
        let w = &dense * state.amplitudes();
        let mean = state.amplitudes().dotc(&w).re;
        let var = w.norm_squared() - mean * mean;
        let got = lattice_moments(&state, &n);
        assert_relative_eq!(got.mean, mean, epsilon = 1e-12);
        assert_relative_eq!(got.variance, var, epsilon = 1e-12);
    }

    #[test]
    fn agrees_with_dicke_rotation() {
        // Embed a symmetric state and compare collective moments after rotation.
        let sites = 6;
        let n_dir = Direction::from_angles(0.7, -1.2);
        let dicke = coherent_state(sites, C64::new(0.4, 0.9)).unwrap();
        let dim = 1 << sites;
        let mut ln_binom = vec![0.0; sites + 1];
        for l in 1..=sites {
            ln_binom[l] = ln_binom[l - 1] + ((sites - l + 1) as f64).ln() - (l as f64).ln();
        }
        let amps = DVector::from_fn(dim, |b, _| {
            let l = (b as u32).count_ones() as usize;
            dicke.amplitudes()[l] * (-0.5 * ln_binom[l]).exp()
        });
        let lat = lattice_rotate(&LatticeState::from_amplitudes(sites, amps).unwrap(), &n_dir, 0.9);
        let rot = rotate(&dicke, &n_dir, 0.9).unwrap();
        for probe in [Direction::X, Direction::Y, Direction::Z, Direction::from_angles(2.0, 0.3)] {
            let op = CollectiveOperator::new(sites, OperatorKind::Dot(probe)).unwrap();
            let want = crate::spin::expectation(&rot, &op).unwrap();
            assert_relative_eq!(lattice_moments(&lat, &probe).mean, want, epsilon = 1e-10);
            let want = crate::spin::variance(&rot, &op).unwrap();
            assert_relative_eq!(lattice_moments(&lat, &probe).variance, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn protocol_examples() {
        let sys = build_system(6, 2).unwrap();
        let v = fr_mom_reciprocal(&sys, 0.0, 0.37, &Direction::Z, &Direction::Y).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-10);
        let n_dir = Direction::from_angles(1.2, 0.3);
        let stats = fr_protocol_stats(&sys, 0.6, 0.2, &n_dir).unwrap();
        let qfi = 4.0 * fr_variance_brute(&sys, 0.6, &n_dir).unwrap();
        assert!(stats.optimal_readout().unwrap().1 <= qfi + 1e-6);
        assert!(matches!(LatticeState::plus(HARD_SITE_CAP + 1), Err(Error::TooManySites { .. })));
    }
}
