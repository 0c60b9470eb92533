//! Derivative-free maximization over directions on the unit sphere.
//!
//! A coarse `(ξ, θ)` grid is scanned in parallel, then Nelder–Mead refines the
//! best cells and a few analytic seeds. The returned value is never below the
//! best grid value.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::Direction;

/// Rectangle in `(ξ, θ)` with a scan resolution per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereDomain {
    pub polar: (f64, f64),
    pub azimuth: (f64, f64),
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl SphereDomain {
    pub fn new(polar: (f64, f64), azimuth: (f64, f64), n_polar: usize, n_azimuth: usize) -> Result<Self> {
        let ok = 0.0 <= polar.0
            && polar.0 < polar.1
            && polar.1 <= PI
            && -PI <= azimuth.0
            && azimuth.0 < azimuth.1
            && azimuth.1 <= PI
            && n_polar >= 4
            && n_azimuth >= 4;
        if !ok {
            return Err(Error::precondition(format!(
                "invalid sphere domain polar {polar:?} azimuth {azimuth:?} grid {n_polar}x{n_azimuth}"
            )));
        }
        Ok(SphereDomain { polar, azimuth, n_polar, n_azimuth })
    }

    pub fn full() -> Self {
        SphereDomain { polar: (0.0, PI), azimuth: (-PI, PI), n_polar: 24, n_azimuth: 24 }
    }

    /// `ξ ∈ [0, π]`, `θ ∈ [0, π]`: one representative of each `±n` pair.
    pub fn hemisphere() -> Self {
        SphereDomain { polar: (0.0, PI), azimuth: (0.0, PI), n_polar: 24, n_azimuth: 24 }
    }

    pub fn with_resolution(mut self, n_polar: usize, n_azimuth: usize) -> Self {
        self.n_polar = n_polar.max(4);
        self.n_azimuth = n_azimuth.max(4);
        self
    }

    fn is_full_azimuth(&self) -> bool {
        self.azimuth.1 - self.azimuth.0 >= 2.0 * PI - 1e-12
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        (self.polar.0..=self.polar.1).contains(&p[0]) && (self.azimuth.0..=self.azimuth.1).contains(&p[1])
    }

    /// Clamps polar angle; wraps azimuth when the domain covers the full circle.
    fn project(&self, p: [f64; 2]) -> [f64; 2] {
        let xi = p[0].clamp(self.polar.0, self.polar.1);
        let th = if self.is_full_azimuth() {
            (p[1] - self.azimuth.0).rem_euclid(2.0 * PI) + self.azimuth.0
        } else {
            p[1].clamp(self.azimuth.0, self.azimuth.1)
        };
        [xi, th]
    }

    fn cell_centers(&self) -> Vec<[f64; 2]> {
        let dxi = (self.polar.1 - self.polar.0) / self.n_polar as f64;
        let dth = (self.azimuth.1 - self.azimuth.0) / self.n_azimuth as f64;
        let mut out = Vec::with_capacity(self.n_polar * self.n_azimuth);
        for i in 0..self.n_polar {
            for j in 0..self.n_azimuth {
                out.push([self.polar.0 + (i as f64 + 0.5) * dxi, self.azimuth.0 + (j as f64 + 0.5) * dth]);
            }
        }
        out
    }

    fn cell_size(&self) -> [f64; 2] {
        [(self.polar.1 - self.polar.0) / self.n_polar as f64, (self.azimuth.1 - self.azimuth.0) / self.n_azimuth as f64]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop when the simplex value spread falls below this.
    pub value_tol: f64,
    /// Number of best grid cells refined.
    pub refine_top: usize,
    /// Random restarts of the joint optimizer (in addition to analytic seeds).
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iterations: 200, value_tol: 1e-10, refine_top: 3, restarts: 6, seed: 0x5eed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereOptimum {
    pub direction: Direction,
    pub polar: f64,
    pub azimuth: f64,
    pub value: f64,
    pub grid_value: f64,
    /// Grid points where the objective was not finite and were skipped.
    pub skipped: usize,
    /// False if no refinement run met the value tolerance.
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
struct Simplex {
    point: [f64; 2],
    value: f64,
    converged: bool,
}

/// Nelder–Mead maximization in the `(ξ, θ)` chart, projected onto the domain.
fn nelder_mead(
    f: &(impl Fn([f64; 2]) -> f64 + Sync),
    domain: &SphereDomain,
    start: [f64; 2],
    step: [f64; 2],
    cfg: &OptimizerConfig,
) -> Simplex {
    let eval = |p: [f64; 2]| {
        let p = domain.project(p);
        let v = f(p);
        (p, if v.is_finite() { v } else { f64::NEG_INFINITY })
    };
    let mut simplex: Vec<([f64; 2], f64)> =
        vec![eval(start), eval([start[0] + step[0], start[1]]), eval([start[0], start[1] + step[1]])];
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (best, worst) = (simplex[0].1, simplex[2].1);
        if best.is_finite() && worst.is_finite() && (best - worst).abs() <= cfg.value_tol * best.abs().max(1.0) {
            converged = true;
            break;
        }
        let c = [0.5 * (simplex[0].0[0] + simplex[1].0[0]), 0.5 * (simplex[0].0[1] + simplex[1].0[1])];
        let w = simplex[2].0;
        let along = |s: f64| [c[0] + s * (w[0] - c[0]), c[1] + s * (w[1] - c[1])];
        let r = eval(along(-1.0));
        if r.1 > simplex[0].1 {
            let e = eval(along(-2.0));
            simplex[2] = if e.1 > r.1 { e } else { r };
        } else if r.1 > simplex[1].1 {
            simplex[2] = r;
        } else {
            let k = if r.1 > simplex[2].1 { eval(along(-0.5)) } else { eval(along(0.5)) };
            if k.1 > simplex[2].1.max(r.1) {
                simplex[2] = k;
            } else {
                let b = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    *v = eval([b[0] + 0.5 * (v.0[0] - b[0]), b[1] + 0.5 * (v.0[1] - b[1])]);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    Simplex { point: simplex[0].0, value: simplex[0].1, converged }
}

fn seeds_in(domain: &SphereDomain) -> Vec<[f64; 2]> {
    // ξ = π/2 with θ ∈ {0, π/2}, and the pole: the asymptotically optimal
    // directions of one-axis-twisted states.
    [[PI / 2.0, 0.0], [PI / 2.0, PI / 2.0], [0.0, 0.0]].into_iter().filter(|p| domain.contains(*p)).collect()
}

/// Maximizes `objective` over `domain`.
pub fn maximize_on_sphere(
    objective: impl Fn(&Direction) -> f64 + Sync,
    domain: &SphereDomain,
    cfg: &OptimizerConfig,
) -> Result<SphereOptimum> {
    let chart = |p: [f64; 2]| objective(&Direction::from_angles(p[0], p[1]));
    let cells = domain.cell_centers();
    let values: Vec<f64> = cells.par_iter().map(|p| chart(*p)).collect();
    let skipped = values.iter().filter(|v| !v.is_finite()).count();
    let mut ranked: Vec<usize> = (0..cells.len()).filter(|&i| values[i].is_finite()).collect();
    if ranked.is_empty() {
        return Err(Error::NonFinite { what: "objective at every grid point" });
    }
    ranked.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let grid_best = ranked[0];

    let mut starts: Vec<[f64; 2]> = ranked.iter().take(cfg.refine_top.max(1)).map(|&i| cells[i]).collect();
    starts.extend(seeds_in(domain));
    let step = domain.cell_size();
    let runs: Vec<Simplex> = starts.par_iter().map(|s| nelder_mead(&chart, domain, *s, step, cfg)).collect();

    let mut best = Simplex { point: cells[grid_best], value: values[grid_best], converged: false };
    let converged = runs.iter().any(|r| r.converged);
    for r in runs {
        if r.value > best.value {
            best = r;
        }
    }
    Ok(SphereOptimum {
        direction: Direction::from_angles(best.point[0], best.point[1]),
        polar: best.point[0],
        azimuth: best.point[1],
        value: best.value,
        grid_value: values[grid_best],
        skipped,
        converged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointOptimum {
    pub n: SphereOptimum,
    pub m: SphereOptimum,
    pub value: f64,
}

/// Maximizes `eval(prepare(n), m)` over pairs of directions.
///
/// `prepare` carries the expensive, `n`-dependent work (e.g. evolving a
/// probe), so the inner readout search reuses it. The outer search is the
/// sphere maximizer seeded with `cfg.restarts` extra random starts.
pub fn maximize_joint<P: Sync>(
    prepare: impl Fn(&Direction) -> Result<P> + Sync,
    eval: impl Fn(&P, &Direction) -> f64 + Sync,
    n_domain: &SphereDomain,
    m_domain: &SphereDomain,
    cfg: &OptimizerConfig,
) -> Result<JointOptimum> {
    let inner_cfg = OptimizerConfig { refine_top: 2, ..*cfg };
    let inner = |n: &Direction| -> Option<SphereOptimum> {
        let p = prepare(n).ok()?;
        maximize_on_sphere(|m| eval(&p, m), m_domain, &inner_cfg).ok()
    };
    let outer = |n: &Direction| inner(n).map_or(f64::NAN, |o| o.value);

    let mut best = maximize_on_sphere(outer, n_domain, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<[f64; 2]> = (0..cfg.restarts)
        .map(|_| {
            [
                rng.random_range(n_domain.polar.0..=n_domain.polar.1),
                rng.random_range(n_domain.azimuth.0..=n_domain.azimuth.1),
            ]
        })
        .collect();
    let chart = |p: [f64; 2]| outer(&Direction::from_angles(p[0], p[1]));
    let runs: Vec<Simplex> =
        starts.par_iter().map(|s| nelder_mead(&chart, n_domain, *s, n_domain.cell_size(), cfg)).collect();
    for r in runs {
        if r.value > best.value {
            best.value = r.value;
            best.polar = r.point[0];
            best.azimuth = r.point[1];
            best.direction = Direction::from_angles(r.point[0], r.point[1]);
            best.converged |= r.converged;
        }
    }
    let m = inner(&best.direction).ok_or(Error::NonFinite { what: "joint objective at the optimum" })?;
    Ok(JointOptimum { n: best, value: m.value, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn finds_north_pole() {
        let r = maximize_on_sphere(|n| n.z(), &SphereDomain::full(), &OptimizerConfig::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
        assert!(r.value >= r.grid_value);
    }

    #[test]
    fn symmetric_maxima_give_unique_value() {
        let r = maximize_on_sphere(
            |n| (n.x() * 0.6 + n.y() * 0.8).powi(2),
            &SphereDomain::full(),
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn off_seed_maximum_is_refined() {
        let target = Direction::from_angles(2.1, -1.3);
        let r = maximize_on_sphere(|n| n.dot(&target), &SphereDomain::full(), &OptimizerConfig::default()).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-9);
        assert!(r.direction.dot(&target) > 1.0 - 1e-8);
    }

    #[test]
    fn hemisphere_respects_bounds() {
        let target = Direction::from_angles(1.0, -2.0);
        let r =
            maximize_on_sphere(|n| n.dot(&target), &SphereDomain::hemisphere(), &OptimizerConfig::default()).unwrap();
        assert!((0.0..=PI).contains(&r.azimuth));
        assert!(r.value >= r.grid_value);
    }

    #[test]
    fn skips_non_finite_points() {
        let r = maximize_on_sphere(
            |n| if n.z() > 0.9 { f64::NAN } else { -n.z() },
            &SphereDomain::full(),
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert!(r.skipped > 0);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn joint_is_deterministic() {
        let a = Direction::from_angles(0.7, 0.4);
        let b = Direction::from_angles(2.0, 2.5);
        let cfg = OptimizerConfig { restarts: 2, ..Default::default() };
        let dom = SphereDomain::full().with_resolution(8, 8);
        let run = || maximize_joint(|n| Ok(n.dot(&a)), |p: &f64, m| p + m.dot(&b), &dom, &dom, &cfg).unwrap();
        let (r1, r2) = (run(), run());
        assert_eq!(r1.value.to_bits(), r2.value.to_bits());
        assert_relative_eq!(r1.value, 2.0, epsilon = 1e-8);
    }
}
