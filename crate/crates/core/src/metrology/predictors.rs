//! Asymptotic large-`N` forms of the direction-optimized QFI, one per
//! interaction-time regime. These are comparison overlays only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `t = O(N^{-α})`, `α > 1`.
    Sql,
    /// `t = O(N^{-α})`, `1/2 < α < 1`.
    SubHeisenberg,
    /// `t = c/√N`.
    HeisenbergScaling,
    /// `t = O(N^{-α})`, `0 < α < 1/2`: the `N(N+1)/2` plateau.
    Plateau,
    /// `t = π/2 - c/√N`.
    GhzEdge,
    /// Constant `t = π/m`, `m > 2`.
    Equidistant,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::Sql,
        Regime::SubHeisenberg,
        Regime::HeisenbergScaling,
        Regime::Plateau,
        Regime::GhzEdge,
        Regime::Equidistant,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Regime::Sql => "sql",
            Regime::SubHeisenberg => "sub_heisenberg",
            Regime::HeisenbergScaling => "heisenberg_scaling",
            Regime::Plateau => "plateau",
            Regime::GhzEdge => "ghz_edge",
            Regime::Equidistant => "equidistant",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL.into_iter().find(|r| r.tag() == s).ok_or_else(|| Error::UnknownTag(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub n_particles: usize,
    /// Interaction time for the sub-Heisenberg form; `None` uses the
    /// maximal-squeezing time `24^{1/6} 2^{2/3} / (2 N^{2/3})`.
    pub t: Option<f64>,
    /// Constant in `t = c/√N` or `t = π/2 - c/√N`.
    pub c: f64,
    pub polar: f64,
    pub azimuth: f64,
}

impl PredictorParams {
    pub fn new(n_particles: usize) -> Self {
        PredictorParams { n_particles, t: None, c: 1.0, polar: std::f64::consts::FRAC_PI_2, azimuth: 0.0 }
    }
}

/// Interaction time of maximal spin squeezing.
pub fn max_squeezing_time(n_particles: usize) -> f64 {
    24f64.powf(1.0 / 6.0) * 2f64.powf(2.0 / 3.0) / (2.0 * (n_particles as f64).powf(2.0 / 3.0))
}

pub fn asymptotic_predictor(regime: Regime, p: &PredictorParams) -> Result<f64> {
    if p.n_particles == 0 {
        return Err(Error::precondition("particle number N must be >= 1"));
    }
    let n = p.n_particles as f64;
    let (s_xi, c_xi) = p.polar.sin_cos();
    let s_th = p.azimuth.sin();
    Ok(match regime {
        Regime::Sql => n * (s_xi * s_xi * s_th * s_th + c_xi * c_xi),
        Regime::SubHeisenberg => {
            // Second-order expansion of the bracket at ξ = θ = π/2.
            let t = p.t.unwrap_or_else(|| max_squeezing_time(p.n_particles));
            n + n * (n - 1.0) * (n - 2.0) * t * t
        }
        Regime::HeisenbergScaling => n * n * (1.0 - (-2.0 * p.c * p.c).exp()) / 2.0,
        Regime::Plateau => n * (n + 1.0) / 2.0,
        Regime::GhzEdge => {
            let sign = if p.n_particles.is_multiple_of(2) { 1.0 } else { -1.0 };
            let e = (2.0 * p.azimuth).cos() * (-2.0 * p.c * p.c).exp();
            s_xi * s_xi * (n * n / 2.0 * (1.0 + sign * e) + n / 2.0 * (1.0 - sign * e))
        }
        Regime::Equidistant => n * (n + 2.0) / 2.0,
    })
}
