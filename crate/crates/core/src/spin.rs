//! Symmetric (Dicke-basis) states of `N` spin-1/2 particles.
//!
//! A [`CollectiveState`] stores `N + 1` amplitudes indexed by `ℓ`, the number
//! of particles in `|1⟩`. With this ordering `J_z` is diagonal with entries
//! `(N - 2ℓ)/2`, so one-axis twisting is a pure phase multiply.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;

/* Directions *****************************************************************/

/// Unit vector on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    pub const X: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Direction = Direction { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `(x, y, z)`; fails for a zero or non-finite vector.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::precondition(format!("direction ({x}, {y}, {z}) cannot be normalized")));
        }
        Ok(Direction { x: x / norm, y: y / norm, z: z / norm })
    }

    /// `n = (sin ξ cos θ, sin ξ sin θ, cos ξ)`. Any real angles are accepted.
    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        let (sx, cx) = polar.sin_cos();
        let (st, ct) = azimuth.sin_cos();
        Direction { x: sx * ct, y: sx * st, z: cx }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Polar angle ξ ∈ [0, π].
    pub fn polar(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    /// Azimuth θ ∈ [−π, π).
    pub fn azimuth(&self) -> f64 {
        let a = self.y.atan2(self.x);
        if a >= PI {
            a - 2.0 * PI
        } else {
            a
        }
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn antipode(&self) -> Direction {
        Direction { x: -self.x, y: -self.y, z: -self.z }
    }
}

/* Coherent states ************************************************************/

/// Stereographic label of an SU(2) coherent state (projection from the south
/// pole): `ζ = 0` is the north pole `|0…0⟩`, `ζ = ∞` the south pole `|1…1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Zeta {
    Finite(C64),
    Infinity,
}

impl Zeta {
    pub fn from_direction(n: &Direction) -> Self {
        let denom = 1.0 + n.z();
        if denom <= 0.0 {
            Zeta::Infinity
        } else {
            Zeta::Finite(C64::new(n.x() / denom, n.y() / denom))
        }
    }
}

impl From<C64> for Zeta {
    fn from(z: C64) -> Self {
        if z.is_finite() {
            Zeta::Finite(z)
        } else {
            Zeta::Infinity
        }
    }
}

impl From<f64> for Zeta {
    fn from(z: f64) -> Self {
        Zeta::from(C64::new(z, 0.0))
    }
}

/// `ln C(n, k)` for all `k = 0..=n`.
fn ln_binomials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += ((n - k + 1) as f64).ln() - (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Amplitudes `√C(N,ℓ) ζ^ℓ / (1+|ζ|²)^{N/2}`, evaluated in log space so large
/// `N` and large `|ζ|` do not overflow.
fn coherent_amplitudes(n: usize, zeta: Zeta) -> DVector<C64> {
    let mut amps = DVector::from_element(n + 1, C64::new(0.0, 0.0));
    let z = match zeta {
        Zeta::Infinity => {
            amps[n] = C64::new(1.0, 0.0);
            return amps;
        }
        Zeta::Finite(z) => z,
    };
    let r = z.norm();
    if r == 0.0 {
        amps[0] = C64::new(1.0, 0.0);
        return amps;
    }
    let arg = z.arg();
    let ln_r = r.ln();
    let ln_norm = if r > 1.0 { 2.0 * ln_r + (1.0 / (r * r)).ln_1p() } else { (r * r).ln_1p() };
    let lnb = ln_binomials(n);
    for (l, amp) in amps.iter_mut().enumerate() {
        let lf = l as f64;
        let ln_mod = 0.5 * lnb[l] + lf * ln_r - 0.5 * n as f64 * ln_norm;
        *amp = C64::from_polar(ln_mod.exp(), lf * arg);
    }
    // Rounding in the log-binomials accumulates with N; renormalize.
    let norm = amps.norm();
    amps / C64::new(norm, 0.0)
}

/* States *********************************************************************/

/// Pure symmetric state of `N` spin-1/2 particles in the Dicke basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveState {
    amplitudes: DVector<C64>,
}

impl CollectiveState {
    /// Wraps amplitudes `a_ℓ`, `ℓ = 0..=N`; the vector must have unit norm.
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::precondition("a collective state needs N >= 1"));
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::precondition(format!("amplitudes are not normalized (|a|^2 = {norm_sq})")));
        }
        Ok(CollectiveState { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::precondition("cannot normalize a zero vector"));
        }
        Self::from_amplitudes(amplitudes / C64::new(norm, 0.0))
    }

    /// Dicke state `|N-ℓ, ℓ⟩`.
    pub fn dicke(n: usize, l: usize) -> Result<Self> {
        check_particles(n)?;
        if l > n {
            return Err(Error::precondition(format!("Dicke index {l} exceeds N = {n}")));
        }
        let mut amps = DVector::from_element(n + 1, C64::new(0.0, 0.0));
        amps[l] = C64::new(1.0, 0.0);
        Ok(CollectiveState { amplitudes: amps })
    }

    /// `(|N,0⟩ + |0,N⟩)/√2`.
    pub fn ghz(n: usize) -> Result<Self> {
        check_particles(n)?;
        let mut amps = DVector::from_element(n + 1, C64::new(0.0, 0.0));
        amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[n] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Ok(CollectiveState { amplitudes: amps })
    }

    pub fn n_particles(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &CollectiveState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Fidelity `|⟨self|other⟩|²`, insensitive to global phase.
    pub fn fidelity(&self, other: &CollectiveState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub(crate) fn from_raw(amplitudes: DVector<C64>) -> Self {
        CollectiveState { amplitudes }
    }
}

fn check_particles(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::precondition("particle number N must be >= 1"))
    } else {
        Ok(())
    }
}

/// SU(2) coherent state `|ζ⟩` of `N` particles.
pub fn coherent_state(n: usize, zeta: impl Into<Zeta>) -> Result<CollectiveState> {
    check_particles(n)?;
    Ok(CollectiveState { amplitudes: coherent_amplitudes(n, zeta.into()) })
}

/* Operators ******************************************************************/

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind {
    Jx,
    Jy,
    Jz,
    Jplus,
    Jminus,
    /// `n·J`.
    Dot(Direction),
    /// Global parity `X^{⊗N}`, mapping Dicke index `ℓ → N - ℓ`.
    ParityX,
}

/// Matrix in the Dicke basis of `N` particles.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveOperator {
    matrix: DMatrix<C64>,
    hermitian: bool,
}

/// `J_z` eigenvalue of Dicke index `ℓ`.
pub fn jz_eigenvalue(n: usize, l: usize) -> f64 {
    (n as f64 - 2.0 * l as f64) / 2.0
}

fn ladder_plus(n: usize) -> DMatrix<C64> {
    // J_+|ℓ⟩ = √(ℓ(N-ℓ+1)) |ℓ-1⟩, i.e. √(j(j+1) - m(m+1)) with j = N/2.
    let mut m = DMatrix::from_element(n + 1, n + 1, C64::new(0.0, 0.0));
    for l in 1..=n {
        m[(l - 1, l)] = C64::new(((l * (n - l + 1)) as f64).sqrt(), 0.0);
    }
    m
}

fn max_antihermitian(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl CollectiveOperator {
    pub fn new(n: usize, kind: OperatorKind) -> Result<Self> {
        check_particles(n)?;
        let d = n + 1;
        let half = C64::new(0.5, 0.0);
        let matrix = match kind {
            OperatorKind::Jz => {
                DMatrix::from_fn(
                    d,
                    d,
                    |i, j| {
                        if i == j {
                            C64::new(jz_eigenvalue(n, i), 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    },
                )
            }
            OperatorKind::Jplus => ladder_plus(n),
            OperatorKind::Jminus => ladder_plus(n).adjoint(),
            OperatorKind::Jx => {
                let p = ladder_plus(n);
                (&p + p.adjoint()) * half
            }
            OperatorKind::Jy => {
                let p = ladder_plus(n);
                (&p - p.adjoint()) * C64::new(0.0, -0.5)
            }
            OperatorKind::Dot(dir) => {
                let p = ladder_plus(n);
                let jx = (&p + p.adjoint()) * half;
                let jy = (&p - p.adjoint()) * C64::new(0.0, -0.5);
                let jz = Self::new(n, OperatorKind::Jz)?.matrix;
                jx * C64::new(dir.x(), 0.0) + jy * C64::new(dir.y(), 0.0) + jz * C64::new(dir.z(), 0.0)
            }
            OperatorKind::ParityX => {
                DMatrix::from_fn(d, d, |i, j| if i + j == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            }
        };
        Ok(Self::from_matrix(matrix))
    }

    /// Wraps a square matrix; the Hermitian flag is set when
    /// `max |M - M†| < 1e-12`.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        let hermitian = max_antihermitian(&matrix) < HERMITIAN_TOL;
        CollectiveOperator { matrix, hermitian }
    }

    pub fn n_particles(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn apply(&self, state: &CollectiveState) -> Result<DVector<C64>> {
        self.apply_vec(state.amplitudes())
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: self.matrix.ncols(), found: v.len() });
        }
        Ok(&self.matrix * v)
    }

    fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(Error::NotHermitian { max_deviation: max_antihermitian(&self.matrix) })
        }
    }
}

pub fn collective_operator(n: usize, kind: OperatorKind) -> Result<CollectiveOperator> {
    CollectiveOperator::new(n, kind)
}

/// `[J_x v, J_y v, J_z v]` using the tridiagonal structure directly.
pub fn apply_components(v: &DVector<C64>) -> [DVector<C64>; 3] {
    let d = v.len();
    let n = d - 1;
    let coeff = |l: usize| ((l * (n + 1 - l)) as f64).sqrt();
    let mut jx = DVector::from_element(d, C64::new(0.0, 0.0));
    let mut jy = jx.clone();
    let mut jz = jx.clone();
    for k in 0..d {
        // (J_+ v)[k] = c_{k+1} v[k+1], (J_- v)[k] = c_k v[k-1]
        let up = if k + 1 < d { v[k + 1] * coeff(k + 1) } else { C64::new(0.0, 0.0) };
        let down = if k > 0 { v[k - 1] * coeff(k) } else { C64::new(0.0, 0.0) };
        jx[k] = (up + down) * 0.5;
        jy[k] = (up - down) * C64::new(0.0, -0.5);
        jz[k] = v[k] * jz_eigenvalue(n, k);
    }
    [jx, jy, jz]
}

/* Rotations ******************************************************************/

/// Spectral decomposition of `n·J`, reusable for `exp(-iφ n·J)` at many `φ`.
#[derive(Clone, Debug)]
pub struct Rotation {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl Rotation {
    pub fn new(n_particles: usize, axis: &Direction) -> Result<Self> {
        let gen = CollectiveOperator::new(n_particles, OperatorKind::Dot(*axis))?;
        let dim = n_particles + 1;
        let eig =
            SymmetricEigen::try_new(gen.matrix, f64::EPSILON, 1000 * dim).ok_or(Error::Eigendecomposition { dim })?;
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigendecomposition { dim });
        }
        Ok(Rotation { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    /// `exp(-iφ n·J) v`.
    pub fn apply_vec(&self, v: &DVector<C64>, angle: f64) -> Result<DVector<C64>> {
        let dim = self.eigenvalues.len();
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        let mut coeffs = self.eigenvectors.ad_mul(v);
        for (c, lam) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= C64::from_polar(1.0, -angle * lam);
        }
        Ok(&self.eigenvectors * coeffs)
    }

    pub fn apply(&self, state: &CollectiveState, angle: f64) -> Result<CollectiveState> {
        Ok(CollectiveState::from_raw(self.apply_vec(state.amplitudes(), angle)?))
    }
}

/// `exp(-iφ n·J)|state⟩`.
pub fn rotate(state: &CollectiveState, axis: &Direction, angle: f64) -> Result<CollectiveState> {
    Rotation::new(state.n_particles(), axis)?.apply(state, angle)
}

/* One-axis twisting **********************************************************/

/// Sign of the one-axis-twisting interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwistSign {
    /// `exp(-it J_z²)`.
    Twist,
    /// `exp(+it J_z²)`.
    Untwist,
}

impl TwistSign {
    pub fn sign(self) -> f64 {
        match self {
            TwistSign::Twist => 1.0,
            TwistSign::Untwist => -1.0,
        }
    }
}

pub(crate) fn oat_phase_in_place(v: &mut DVector<C64>, t: f64, sign: TwistSign) {
    let n = v.len() - 1;
    let s = sign.sign();
    for (l, a) in v.iter_mut().enumerate() {
        let m = jz_eigenvalue(n, l);
        *a *= C64::from_polar(1.0, -s * t * m * m);
    }
}

/// `exp(∓it J_z²)|state⟩` (upper sign for [`TwistSign::Twist`]).
pub fn oat_evolve(state: &CollectiveState, t: f64, sign: TwistSign) -> CollectiveState {
    let mut amps = state.amplitudes.clone();
    oat_phase_in_place(&mut amps, t, sign);
    CollectiveState { amplitudes: amps }
}

/* Moments ********************************************************************/

/// `⟨ψ|M|ψ⟩` for Hermitian `M`.
pub fn expectation(state: &CollectiveState, op: &CollectiveOperator) -> Result<f64> {
    op.require_hermitian()?;
    let mv = op.apply(state)?;
    let val = state.amplitudes.dotc(&mv);
    if val.im.abs() > 1e-10 * val.re.abs().max(1.0) {
        return Err(Error::NonFinite { what: "imaginary part of a Hermitian expectation" });
    }
    Ok(val.re)
}

/// `⟨M²⟩ - ⟨M⟩²`, evaluated as `‖(M - ⟨M⟩)ψ‖²` so it is never negative.
pub fn variance(state: &CollectiveState, op: &CollectiveOperator) -> Result<f64> {
    op.require_hermitian()?;
    let mv = op.apply(state)?;
    let mean = state.amplitudes.dotc(&mv).re;
    let resid = mv - &state.amplitudes * C64::new(mean, 0.0);
    Ok(resid.norm_squared())
}

/* Husimi Q *******************************************************************/

/// `Q(n) = |⟨ζ(n)|ψ⟩|²` at each direction, values in `[0, 1]`.
pub fn husimi_q(state: &CollectiveState, points: &[Direction]) -> Vec<f64> {
    let n = state.n_particles();
    points
        .iter()
        .map(|p| {
            let c = coherent_amplitudes(n, Zeta::from_direction(p));
            c.dotc(&state.amplitudes).norm_sqr().min(1.0)
        })
        .collect()
}

/// Midpoint grid on the sphere with solid-angle weights summing to `4π`.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub points: Vec<Direction>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn midpoint(n_polar: usize, n_azimuth: usize) -> Self {
        let dxi = PI / n_polar as f64;
        let dth = 2.0 * PI / n_azimuth as f64;
        let mut points = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for i in 0..n_polar {
            let xi = (i as f64 + 0.5) * dxi;
            // exact band area so the weights integrate constants exactly
            let band = (i as f64 * dxi).cos() - ((i + 1) as f64 * dxi).cos();
            for j in 0..n_azimuth {
                let th = -PI + (j as f64 + 0.5) * dth;
                points.push(Direction::from_angles(xi, th));
                weights.push(band * dth);
            }
        }
        SphereGrid { points, weights }
    }
}
