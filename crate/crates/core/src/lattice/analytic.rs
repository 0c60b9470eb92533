//! Closed-form variance of `n·J` in `e^{-itH_K}|+⟩^{⊗(N+2)}`.
//!
//! Two rational-trigonometric forms exist, one for short range and one for
//! long range. Their `1/sin²t` and `1/(cos 2t/cos²t - 1)` factors are
//! geometric sums, so here they are expanded into finite polynomial sums
//! in `cos t` and `cos 2t`, which are exact at `t = 0` as well.
//!
//! The short-range form is exact when `4K ≤ N` and the long-range form when
//! `3K ≥ N`. For `N/4 < K < N/3` neither applies and [`Branch::Auto`] uses
//! the exact pair-correlation [`MomentTable`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::system::check_ring;
use crate::optimize::{maximize_on_sphere, OptimizerConfig, SphereDomain};
use crate::spin::Direction;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Short-range form if `4K ≤ N`, long-range form if `3K ≥ N`, otherwise
    /// the moment table.
    Auto,
    SmallK,
    BigK,
    MomentTable,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Auto => "auto",
            Branch::SmallK => "smallk",
            Branch::BigK => "bigk",
            Branch::MomentTable => "moments",
        }
    }

    /// The concrete branch `Auto` selects for `(N, K)`.
    pub fn resolve(self, n: usize, k: usize) -> Branch {
        match self {
            Branch::Auto if 4 * k <= n => Branch::SmallK,
            Branch::Auto if 3 * k >= n => Branch::BigK,
            Branch::Auto => Branch::MomentTable,
            other => other,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Branch::Auto, Branch::SmallK, Branch::BigK, Branch::MomentTable]
            .into_iter()
            .find(|b| b.tag() == s)
            .ok_or_else(|| Error::UnknownTag(s.to_owned()))
    }
}

/// Direction-independent coefficients of the variance at fixed `(N, K, t)`:
/// `Var = sin²ξ/2·b1 + sin²ξ cos2θ/2·b2 + sin2ξ sinθ/2·cross + P cos²ξ/4
/// - sin²ξ cos²θ·mean_sq`, with `P = N + 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    p: f64,
    b1: f64,
    b2: f64,
    cross: f64,
    mean_sq: f64,
}

impl Coefficients {
    fn shared(n: usize, k: usize, t: f64) -> (f64, f64, f64) {
        let p = (n + 2) as f64;
        let (s, c) = t.sin_cos();
        let cross = p * k as f64 * s * c.powi(2 * k as i32 - 1);
        let mean_sq = p * p / 4.0 * c.powi(4 * k as i32);
        (p, cross, mean_sq)
    }

    fn small_k(n: usize, k: usize, t: f64) -> Self {
        let (p, cross, mean_sq) = Self::shared(n, k, t);
        let c = t.cos();
        let c2 = (2.0 * t).cos();
        let u = c * c;
        let ki = k as i32;
        let geo: f64 = (0..ki).map(|j| u.powi(j)).sum();
        let lead = p / 4.0 * (n as f64 + 1.0 - 4.0 * k as f64) * c.powi(4 * ki);
        let b1 = p / 2.0 + lead + p / 2.0 * c.powi(2 * ki) * geo + p / 2.0 * u * geo;
        let s1: f64 = (1..=ki).map(|j| c.powi(2 * (2 * ki - j)) * c2.powi(j)).sum();
        let s2: f64 = (0..ki).map(|j| c.powi(2 * (ki - j)) * c2.powi(ki - 1 + j)).sum();
        let b2 = lead + p / 2.0 * s1 + p / 2.0 * s2;
        Coefficients { p, b1, b2, cross, mean_sq }
    }

    fn big_k(n: usize, k: usize, t: f64) -> Self {
        let (p, cross, mean_sq) = Self::shared(n, k, t);
        let c = t.cos();
        let c2 = (2.0 * t).cos();
        let u = c * c;
        let (ni, ki) = (n as i32, k as i32);
        let mx = ni + 2 - 2 * ki;
        let tail = p * (3.0 * k as f64 - n as f64 - 1.0) / 2.0;
        let edge = p / 4.0 * (n as f64 + 1.0 - 2.0 * k as f64);
        let geo: f64 = (0..mx).map(|j| u.powi(j)).sum();
        let b1 = p / 2.0 * geo + tail * c.powi(2 * (ni + 1 - 2 * ki)) + edge * c.powi(2 * (ni - 2 * ki));
        let mixed: f64 = (1..mx).map(|j| u.powi(j) * c2.powi(2 * ki - 1 - j)).sum();
        let b2 = p / 2.0 * mixed
            + tail * c.powi(2 * (ni + 1 - 2 * ki)) * c2.powi(4 * ki - ni - 2)
            + edge * c.powi(2 * (ni - 2 * ki)) * c2.powi(4 * ki - ni);
        Coefficients { p, b1, b2, cross, mean_sq }
    }

    fn variance(&self, polar: f64, azimuth: f64) -> f64 {
        let (s_xi, c_xi) = polar.sin_cos();
        let (s_th, c_th) = azimuth.sin_cos();
        let s2 = s_xi * s_xi;
        s2 / 2.0 * self.b1
            + s2 * (2.0 * azimuth).cos() / 2.0 * self.b2
            + (2.0 * polar).sin() / 2.0 * s_th * self.cross
            + self.p * c_xi * c_xi / 4.0
            - s2 * c_th * c_th * self.mean_sq
    }
}

/// Single-site and pair correlations of `e^{-itH_K}|+⟩` for arbitrary
/// single-site operators, reduced by translation invariance to site 0.
///
/// With `A` in the `(z = +1, z = -1)` basis, `⟨A_0⟩ = ½ Σ_{ab} A_{ba} w_{ab}`
/// and `Σ_{j≠0} ⟨A_0 A_j⟩ = ¼ Σ_{abcd} A_{ba} A_{dc} W_{abcd}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    sites: usize,
    one: [[C64; 2]; 2],
    pair: [[[[C64; 2]; 2]; 2]; 2],
}

const SPIN: [f64; 2] = [1.0, -1.0];

impl MomentTable {
    pub fn new(n: usize, k: usize, t: f64) -> Result<Self> {
        check_ring(n, k)?;
        let sites = n + 2;
        let coupling = |i: usize, j: usize| {
            let d = (i as isize - j as isize).rem_euclid(sites as isize) as usize;
            let d = d.min(sites - d);
            if d >= 1 && d <= k {
                0.5
            } else {
                0.0
            }
        };
        let mut one = [[C64::new(0.0, 0.0); 2]; 2];
        for (a, za) in SPIN.iter().enumerate() {
            for (b, zb) in SPIN.iter().enumerate() {
                let prod: f64 = (1..sites).map(|q| (t * coupling(0, q) * (zb - za)).cos()).product();
                one[a][b] = C64::new(prod, 0.0);
            }
        }
        let mut pair = [[[[C64::new(0.0, 0.0); 2]; 2]; 2]; 2];
        for j in 1..sites {
            let j0 = coupling(0, j);
            for (a, za) in SPIN.iter().enumerate() {
                for (b, zb) in SPIN.iter().enumerate() {
                    for (c, zc) in SPIN.iter().enumerate() {
                        for (d, zd) in SPIN.iter().enumerate() {
                            let prod: f64 = (1..sites)
                                .filter(|&q| q != j)
                                .map(|q| (t * (coupling(0, q) * (zb - za) + coupling(j, q) * (zd - zc))).cos())
                                .product();
                            pair[a][b][c][d] += C64::from_polar(prod, t * j0 * (zb * zd - za * zc));
                        }
                    }
                }
            }
        }
        Ok(MomentTable { sites, one, pair })
    }

    /// `Var(n·J)` from the table.
    pub fn variance(&self, n: &Direction) -> f64 {
        let g = site_operator(n);
        let mut mean = C64::new(0.0, 0.0);
        let mut corr = C64::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                mean += g[b][a] * self.one[a][b];
                for c in 0..2 {
                    for d in 0..2 {
                        corr += g[b][a] * g[d][c] * self.pair[a][b][c][d];
                    }
                }
            }
        }
        let m = self.sites as f64;
        let mean = m * 0.5 * mean.re;
        // ⟨G_0²⟩ = |n|²/4 = 1/4.
        m * (0.25 + 0.25 * corr.re) - mean * mean
    }
}

/// `n·σ/2` in the `(z = +1, z = -1)` basis.
fn site_operator(n: &Direction) -> [[C64; 2]; 2] {
    [
        [C64::new(0.5 * n.z(), 0.0), C64::new(0.5 * n.x(), -0.5 * n.y())],
        [C64::new(0.5 * n.x(), 0.5 * n.y()), C64::new(-0.5 * n.z(), 0.0)],
    ]
}

/// Variance evaluator at fixed `(N, K, t)` for any direction.
#[derive(Clone, Debug, PartialEq)]
pub enum VarianceModel {
    Printed(Branch, Coefficients),
    Table(Box<MomentTable>),
}

impl VarianceModel {
    pub fn new(n: usize, k: usize, t: f64, branch: Branch) -> Result<Self> {
        check_ring(n, k)?;
        if !t.is_finite() {
            return Err(Error::precondition("interaction time must be finite"));
        }
        Ok(match branch.resolve(n, k) {
            Branch::SmallK => VarianceModel::Printed(Branch::SmallK, Coefficients::small_k(n, k, t)),
            Branch::BigK => VarianceModel::Printed(Branch::BigK, Coefficients::big_k(n, k, t)),
            _ => VarianceModel::Table(Box::new(MomentTable::new(n, k, t)?)),
        })
    }

    pub fn branch(&self) -> Branch {
        match self {
            VarianceModel::Printed(b, _) => *b,
            VarianceModel::Table(_) => Branch::MomentTable,
        }
    }

    pub fn variance(&self, n: &Direction) -> f64 {
        match self {
            VarianceModel::Printed(_, c) => c.variance(n.polar(), n.azimuth()),
            VarianceModel::Table(t) => t.variance(n),
        }
    }
}

/// `Var(n·J)` in `e^{-itH_K}|+⟩^{⊗(N+2)}`, `n = n(ξ, θ)`.
pub fn fr_variance_analytic(n: usize, k: usize, t: f64, polar: f64, azimuth: f64, branch: Branch) -> Result<f64> {
    let v = VarianceModel::new(n, k, t, branch)?.variance(&Direction::from_angles(polar, azimuth));
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what: "finite-range variance" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrQfi {
    /// `4 max_n Var(n·J)`.
    pub value: f64,
    /// `10 log₁₀(value / (N + 2))`.
    pub db: f64,
    pub polar: f64,
    pub azimuth: f64,
    pub branch: Branch,
    pub converged: bool,
}

/// Maximal QFI over rotation axes for the finite-range twisted state.
pub fn fr_max_qfi(n: usize, k: usize, t: f64, branch: Branch, cfg: &OptimizerConfig) -> Result<FrQfi> {
    let model = VarianceModel::new(n, k, t, branch)?;
    let best = maximize_on_sphere(|d| 4.0 * model.variance(d), &SphereDomain::full(), cfg)?;
    Ok(FrQfi {
        value: best.value,
        db: 10.0 * (best.value / (n + 2) as f64).log10(),
        polar: best.polar,
        azimuth: best.azimuth,
        branch: model.branch(),
        converged: best.converged,
    })
}

/// Overlay curves for the finite-range QFI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Overlay {
    /// `(N+2) sin²ξ / sin²t + (N+2) cos²ξ` (QFI scale).
    Inter1,
    /// Short-range `t = c/√K` form (QFI scale).
    BestShort,
    /// Long-range variance form (variance scale).
    Inter2,
    /// `4 × Inter2` at `ξ = π/2` (QFI scale).
    LargeScale,
    /// `N²(1 - e^{-2c²})/2`.
    LongRangeHeisenberg,
}

impl Overlay {
    pub const ALL: [Overlay; 5] =
        [Overlay::Inter1, Overlay::BestShort, Overlay::Inter2, Overlay::LargeScale, Overlay::LongRangeHeisenberg];

    pub fn tag(self) -> &'static str {
        match self {
            Overlay::Inter1 => "inter1",
            Overlay::BestShort => "bestshort",
            Overlay::Inter2 => "inter2",
            Overlay::LargeScale => "largescale",
            Overlay::LongRangeHeisenberg => "longrange_heisenberg",
        }
    }
}

impl FromStr for Overlay {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Overlay::ALL.into_iter().find(|o| o.tag() == s).ok_or_else(|| Error::UnknownTag(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayParams {
    /// `N` (the ring has `N + 2` sites).
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub c: f64,
    pub polar: f64,
    pub azimuth: f64,
}

pub fn fr_interpolation_forms(which: Overlay, p: &OverlayParams) -> f64 {
    let n = p.n as f64;
    let big = n + 2.0;
    let (s_xi, c_xi) = p.polar.sin_cos();
    let (s2, c2) = (s_xi * s_xi, c_xi * c_xi);
    let ct2 = p.t.cos().powi(2);
    let e2 = (-2.0 * p.c * p.c).exp();
    match which {
        Overlay::Inter1 => big / p.t.sin().powi(2) * s2 + big * c2,
        Overlay::BestShort => {
            let cc = p.c * p.c;
            big * p.k as f64 * s2 / 4.0
                * ((1.0 - e2) / cc - 2.0 * e2 + (2.0 * p.azimuth).cos() * ((e2 - e2 * e2) / cc - 2.0 * e2))
        }
        // (1 - cos⁴t)/sin²t = 1 + cos²t
        Overlay::Inter2 => s2 / 8.0 * (ct2 * (n * n - 4.0) + 2.0 * big * (1.0 + ct2) + big) + big / 4.0 * c2,
        Overlay::LargeScale => (n * n - 4.0) / 2.0 * ct2 + big / 2.0 * (3.0 + 2.0 * ct2),
        Overlay::LongRangeHeisenberg => n * n * (1.0 - e2) / 2.0,
    }
}

/// Residuals of the diagonal identities relating the longest-range coupling
/// to `J_z²` on a ring of `N + 2` sites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityDiagnostic {
    /// `max |H_{N/2} + ¼ Σ_{j=1}^{N} Z_j Z_{(j+1+N/2) mod N} - 2J_z²|`, with the
    /// index ranges read literally (labels taken mod `N + 2`).
    pub literal_residual: f64,
    /// `max |H_{N/2} + ¼ Σ_{j=1}^{N+2} Z_j Z_{j+(N+2)/2} - (J_z² - (N+2)/4)|`.
    pub corrected_residual: f64,
}

pub fn oat_identity_diagnostic(n: usize) -> Result<IdentityDiagnostic> {
    let system = crate::lattice::system::build_system(n, n / 2)?;
    let sites = n + 2;
    let z = |b: usize, site: usize| if (b >> (site % sites)) & 1 == 0 { 1.0 } else { -1.0 };
    let mut literal: f64 = 0.0;
    let mut corrected: f64 = 0.0;
    for (b, &h) in system.h_diag().iter().enumerate() {
        let jz: f64 = (0..sites).map(|s| z(b, s)).sum::<f64>() / 2.0;
        let lit: f64 = (1..=n).map(|j| z(b, j) * z(b, (j + 1 + n / 2) % n)).sum::<f64>() / 4.0;
        let anti: f64 = (0..sites).map(|j| z(b, j) * z(b, j + sites / 2)).sum::<f64>() / 4.0;
        literal = literal.max((h + lit - 2.0 * jz * jz).abs());
        corrected = corrected.max((h + anti - (jz * jz - sites as f64 / 4.0)).abs());
    }
    Ok(IdentityDiagnostic { literal_residual: literal, corrected_residual: corrected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::system::{build_system, fr_variance_brute};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn zero_time_is_coherent() {
        for (n, k) in [(6usize, 1usize), (6, 3), (10, 3), (98, 25)] {
            for branch in [Branch::Auto, Branch::MomentTable] {
                for &(xi, th) in &[(0.3f64, 1.0f64), (1.4, -2.2)] {
                    let want = (n + 2) as f64 / 4.0 * (xi.sin().powi(2) * th.sin().powi(2) + xi.cos().powi(2));
                    let got = fr_variance_analytic(n, k, 0.0, xi, th, branch).unwrap();
                    assert_relative_eq!(got, want, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn branch_resolution() {
        assert_eq!(Branch::Auto.resolve(8, 2), Branch::SmallK);
        assert_eq!(Branch::Auto.resolve(8, 3), Branch::BigK);
        assert_eq!(Branch::Auto.resolve(10, 3), Branch::MomentTable);
        assert_eq!(Branch::SmallK.resolve(10, 3), Branch::SmallK);
        assert_eq!("bigk".parse::<Branch>().unwrap(), Branch::BigK);
        assert!("medium".parse::<Branch>().is_err());
    }

    #[test]
    fn matches_brute_force_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n, k, t) in [(6usize, 2usize, 0.3), (10, 5, 0.7), (10, 3, 0.9)] {
            let sys = build_system(n, k).unwrap();
            for _ in 0..5 {
                let (xi, th) = (rng.random_range(0.0..PI), rng.random_range(-PI..PI));
                let want = fr_variance_brute(&sys, t, &Direction::from_angles(xi, th)).unwrap();
                let got = fr_variance_analytic(n, k, t, xi, th, Branch::Auto).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-9);
                let table = fr_variance_analytic(n, k, t, xi, th, Branch::MomentTable).unwrap();
                assert_relative_eq!(table, want, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn overlay_examples() {
        let p = OverlayParams { n: 98, k: 49, t: FRAC_PI_2, c: 1.0, polar: FRAC_PI_2, azimuth: 0.0 };
        assert_relative_eq!(fr_interpolation_forms(Overlay::LargeScale, &p), 150.0, epsilon = 1e-9);
        assert_relative_eq!(fr_interpolation_forms(Overlay::Inter1, &p), 100.0, epsilon = 1e-9);
        for t in [0.3, 0.9, 1.4] {
            let p = OverlayParams { t, ..p };
            assert_relative_eq!(
                4.0 * fr_interpolation_forms(Overlay::Inter2, &p),
                fr_interpolation_forms(Overlay::LargeScale, &p),
                max_relative = 1e-12
            );
        }
        let p = OverlayParams { n: 400, ..p };
        assert_relative_eq!(
            fr_interpolation_forms(Overlay::LongRangeHeisenberg, &p),
            400.0 * 400.0 * (1.0 - (-2f64).exp()) / 2.0
        );
        assert!("nope".parse::<Overlay>().is_err());
    }

    #[test]
    fn sql_limit_of_max_qfi() {
        let cfg = OptimizerConfig::default();
        for (n, k) in [(8usize, 2usize), (98, 49), (30, 8)] {
            let r = fr_max_qfi(n, k, 1e-8, Branch::Auto, &cfg).unwrap();
            assert_relative_eq!(r.value, (n + 2) as f64, max_relative = 1e-6);
        }
    }

    #[test]
    fn corrected_identity_is_exact() {
        for n in [2usize, 4, 6, 8] {
            let d = oat_identity_diagnostic(n).unwrap();
            assert!(d.corrected_residual < 1e-12);
        }
    }
}
