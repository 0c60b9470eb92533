use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use anyhow::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use twistlab::lattice::{
    build_system, default_time_grid, fr_interpolation_forms, fr_max_qfi, fr_optimize_protocol, fr_variance_analytic,
    fr_variance_brute, Branch, Overlay, OverlayParams, BRUTE_FORCE_SITE_CAP,
};
use twistlab::metrology::{
    default_q_grid, max_qfi_over_directions, phase_diagram_scan, protocol_stats, qfi_closed_form, qfi_numeric,
    richardson, twist_untwist_scan, MzAxis, ProtocolSpec, Variant, PHI_LADDER,
};
use twistlab::optimize::OptimizerConfig;
use twistlab::spin::{coherent_state, husimi_q, oat_evolve, SphereGrid};
use twistlab::{Direction, TwistSign};

use crate::output::{Cell, Table};
use crate::{AxisArg, Command, DirectionArg, GlobalOpts, Suite, TimeGrid, VariantArg};

/// Invalid configuration; exit status 2.
#[derive(Debug)]
pub struct ConfigError(String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A verification suite exceeded its tolerance; exit status 3.
#[derive(Debug)]
pub struct VerificationFailed(pub String);

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

pub fn config_error(msg: impl Into<String>) -> Error {
    ConfigError(msg.into()).into()
}

pub fn exit_code(e: &Error) -> u8 {
    use twistlab::Error as E;
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if e.downcast_ref::<VerificationFailed>().is_some() {
        return 3;
    }
    match e.downcast_ref::<E>() {
        Some(E::Precondition(_) | E::TooManySites { .. } | E::UnknownTag(_) | E::DimensionMismatch { .. }) => 2,
        _ => 1,
    }
}

pub struct Outcome {
    pub table: Table,
    pub verification_failure: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Outcome { table, verification_failure: None }
    }
}

fn times(grid: &TimeGrid) -> Result<Vec<f64>> {
    if grid.t.is_empty() {
        if grid.points == 0 {
            return Err(config_error("--points must be positive"));
        }
        return Ok(default_time_grid(grid.points));
    }
    finite("--t", &grid.t)?;
    Ok(grid.t.clone())
}

fn finite(flag: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(config_error(format!("{flag} must be finite (got {v})"))),
        None => Ok(()),
    }
}

fn particles(n: usize) -> Result<()> {
    if n == 0 {
        return Err(config_error("--n must be at least 1"));
    }
    Ok(())
}

fn fixed(flag: &str, d: DirectionArg) -> Result<Direction> {
    match d {
        DirectionArg::Fixed(d) => Ok(d),
        DirectionArg::Optimize => Err(config_error(format!("{flag} must be a fixed direction here"))),
    }
}

fn dir_cells(d: &Direction) -> [Cell; 3] {
    d.components().map(Cell::from)
}

fn collect_rows(table: &mut Table, rows: Result<Vec<Vec<Cell>>>) -> Result<()> {
    for row in rows? {
        table.push(row);
    }
    Ok(())
}

pub fn run(cmd: &Command, global: &GlobalOpts) -> Result<Outcome> {
    let cfg = OptimizerConfig { seed: global.seed, ..OptimizerConfig::default() };
    match cmd {
        Command::Qfi { n, times: grid, xi, theta } => qfi(*n, &times(grid)?, xi.zip(*theta), &cfg).map(Into::into),
        Command::Mom { n, t, phi, variant, rot, readout, phi_prime, mz_axis } => mom(
            &MomArgs {
                n: *n,
                t,
                phi,
                variant: *variant,
                rot: *rot,
                readout: *readout,
                phi_prime: *phi_prime,
                mz_axis: *mz_axis,
            },
            &cfg,
        )
        .map(Into::into),
        Command::PhaseDiagram { n, q } => phase_diagram(*n, q, &cfg).map(Into::into),
        Command::TwistUntwistScan { n, times: grid, phi, rot, readout } => {
            twist_untwist(*n, &times(grid)?, *phi, fixed("--rot", *rot)?, fixed("--readout", *readout)?, &cfg)
                .map(Into::into)
        }
        Command::FrVariance { n, k, times: grid, xi, theta, branch, brute } => {
            fr_variance(*n, *k, &times(grid)?, (*xi, *theta), (*branch).into(), *brute).map(Into::into)
        }
        Command::FrQfi { n, k, times: grid, branch } => {
            fr_qfi(*n, *k, &times(grid)?, (*branch).into(), &cfg).map(Into::into)
        }
        Command::FrOptimize { n, k, times: grid, phi } => {
            fr_optimize(*n, *k, &times(grid)?, *phi, &cfg).map(Into::into)
        }
        Command::Husimi { n, t, n_polar, n_azimuth } => husimi(*n, *t, *n_polar, *n_azimuth).map(Into::into),
        Command::Verify { suite, sites, draws } => verify(*suite, *sites, *draws, global.seed),
    }
}

fn qfi(n: usize, times: &[f64], angles: Option<(f64, f64)>, cfg: &OptimizerConfig) -> Result<Table> {
    particles(n)?;
    let mut table = Table::new(&["N", "t", "xi", "theta", "qfi_closed", "qfi_numeric"]);
    let rows = times
        .par_iter()
        .map(|&t| {
            let (xi, theta) = match angles {
                Some(a) => a,
                None => {
                    let best = max_qfi_over_directions(n, t, cfg)?;
                    (best.polar, best.azimuth)
                }
            };
            let numeric = qfi_numeric(n, t, &Direction::from_angles(xi, theta))?;
            Ok(vec![
                n.into(),
                t.into(),
                xi.into(),
                theta.into(),
                qfi_closed_form(n, t, xi, theta).into(),
                numeric.into(),
            ])
        })
        .collect();
    collect_rows(&mut table, rows)?;
    Ok(table)
}

struct MomArgs<'a> {
    n: usize,
    t: &'a [f64],
    phi: &'a [f64],
    variant: VariantArg,
    rot: DirectionArg,
    readout: DirectionArg,
    phi_prime: f64,
    mz_axis: AxisArg,
}

/// `(value, readout, flag)` at one sensed angle.
fn mom_point(spec: &ProtocolSpec, readout: DirectionArg) -> Result<(f64, Direction, &'static str)> {
    let stats = protocol_stats(spec)?;
    let res = match readout {
        DirectionArg::Fixed(m) => stats.reciprocal_error(&m).map(|v| (v, m)),
        DirectionArg::Optimize => stats.optimal_readout().map(|(m, v)| (v, m)),
    };
    Ok(match res {
        Ok((v, m)) => (v, m, "ok"),
        Err(twistlab::Error::Indeterminate { .. }) => (f64::NAN, fallback(readout), "indeterminate"),
        Err(twistlab::Error::VanishingVariance { .. }) => (f64::INFINITY, fallback(readout), "vanishing_variance"),
        Err(e) => return Err(e.into()),
    })
}

fn fallback(readout: DirectionArg) -> Direction {
    match readout {
        DirectionArg::Fixed(m) => m,
        DirectionArg::Optimize => Direction::X,
    }
}

fn mom(a: &MomArgs, cfg: &OptimizerConfig) -> Result<Table> {
    particles(a.n)?;
    finite("--t", a.t)?;
    finite("--phi", a.phi)?;
    let variant = match a.variant {
        VariantArg::RotationOnly => Variant::RotationOnly,
        VariantArg::TwistUntwist => Variant::TwistUntwist,
        VariantArg::Realigned => Variant::Realigned { phi_prime: a.phi_prime },
        VariantArg::MachZehnder => {
            let axis = match a.mz_axis {
                AxisArg::X => MzAxis::X,
                AxisArg::Y => MzAxis::Y,
            };
            Variant::MachZehnder { axis, phi_prime: a.phi_prime }
        }
    };
    let mut table =
        Table::new(&["N", "t", "phi", "n_x", "n_y", "n_z", "m_x", "m_y", "m_z", "reciprocal_error", "qfi", "flag"]);
    let points: Vec<(f64, f64)> = a.t.iter().flat_map(|&t| a.phi.iter().map(move |&p| (t, p))).collect();
    let rows = points
        .par_iter()
        .map(|&(t, phi)| {
            let n_dir = match a.rot {
                DirectionArg::Fixed(d) => d,
                DirectionArg::Optimize => max_qfi_over_directions(a.n, t, cfg)?.direction(),
            };
            let spec = ProtocolSpec::new(a.n, t, phi, n_dir, variant);
            let (value, m, flag) = if phi == 0.0 {
                // φ → 0 limit from the Richardson ladder
                let mut vals = [0.0; 3];
                let mut m = fallback(a.readout);
                for (v, p) in vals.iter_mut().zip(PHI_LADDER) {
                    let (val, dir, _) = mom_point(&spec.with_phi(p), a.readout)?;
                    (*v, m) = (val, dir);
                }
                match richardson(vals) {
                    Ok(v) => (v, m, "extrapolated"),
                    Err(twistlab::Error::ExtrapolationDivergence { .. }) => (f64::NAN, m, "divergent"),
                    Err(e) => return Err(e.into()),
                }
            } else {
                mom_point(&spec, a.readout)?
            };
            let g = spec.generator();
            let qfi = qfi_closed_form(a.n, t, g.polar(), g.azimuth());
            let mut row: Vec<Cell> = vec![a.n.into(), t.into(), phi.into()];
            row.extend(dir_cells(&g));
            row.extend(dir_cells(&m));
            row.extend([value.into(), qfi.into(), flag.into()]);
            Ok(row)
        })
        .collect();
    collect_rows(&mut table, rows)?;
    Ok(table)
}

fn phase_diagram(n: usize, q: &[f64], cfg: &OptimizerConfig) -> Result<Table> {
    if n < 2 {
        return Err(config_error("--n must be at least 2 for a phase diagram"));
    }
    finite("--q", q)?;
    let grid = if q.is_empty() { default_q_grid(n) } else { q.to_vec() };
    let mut table = Table::new(&["N", "q", "t", "qfi_max", "xi_opt", "theta_opt", "regime"]);
    for r in phase_diagram_scan(n, &grid, cfg)? {
        table.push(vec![
            n.into(),
            r.q.into(),
            r.t.into(),
            r.qfi_max.into(),
            r.argmax_xi.into(),
            r.argmax_theta.into(),
            r.regime.clone().into(),
        ]);
    }
    Ok(table)
}

fn twist_untwist(
    n: usize,
    times: &[f64],
    phi: f64,
    rot: Direction,
    readout: Direction,
    cfg: &OptimizerConfig,
) -> Result<Table> {
    particles(n)?;
    finite("--phi", &[phi])?;
    let mut table = Table::new(&["N", "t", "phi", "qfi_max", "xi_opt", "theta_opt", "mom_optimized", "mom_fixed"]);
    for r in twist_untwist_scan(n, times, phi, &rot, &readout, cfg)? {
        table.push(vec![
            n.into(),
            r.t.into(),
            phi.into(),
            r.qfi_max.into(),
            r.argmax_xi.into(),
            r.argmax_theta.into(),
            r.mom_optimized.into(),
            r.mom_fixed.into(),
        ]);
    }
    Ok(table)
}

fn fr_variance(
    n: usize,
    k: usize,
    times: &[f64],
    (xi, theta): (f64, f64),
    branch: Branch,
    brute: bool,
) -> Result<Table> {
    twistlab::lattice::system::check_ring(n, k)?;
    if brute && n + 2 > BRUTE_FORCE_SITE_CAP {
        return Err(config_error(format!("--brute supports at most {BRUTE_FORCE_SITE_CAP} sites (N + 2 = {})", n + 2)));
    }
    let system = if brute { Some(build_system(n, k)?) } else { None };
    let dir = Direction::from_angles(xi, theta);
    let mut table = Table::new(&["N", "K", "t", "xi", "theta", "branch", "variance", "variance_brute"]);
    let rows = times
        .par_iter()
        .map(|&t| {
            let v = fr_variance_analytic(n, k, t, xi, theta, branch)?;
            let b = match &system {
                Some(s) => fr_variance_brute(s, t, &dir)?,
                None => f64::NAN,
            };
            Ok(vec![
                n.into(),
                k.into(),
                t.into(),
                xi.into(),
                theta.into(),
                branch.resolve(n, k).tag().into(),
                v.into(),
                b.into(),
            ])
        })
        .collect();
    collect_rows(&mut table, rows)?;
    Ok(table)
}

fn fr_qfi(n: usize, k: usize, times: &[f64], branch: Branch, cfg: &OptimizerConfig) -> Result<Table> {
    twistlab::lattice::system::check_ring(n, k)?;
    let mut table =
        Table::new(&["N", "K", "t", "branch", "var_max", "qfi", "qfi_db", "overlay_inter", "overlay_largescale"]);
    let rows = times
        .par_iter()
        .map(|&t| {
            let q = fr_max_qfi(n, k, t, branch, cfg)?;
            // overlays are evaluated on the equator, where they peak
            let p = OverlayParams { n, k, t, c: 1.0, polar: FRAC_PI_2, azimuth: 0.0 };
            Ok(vec![
                n.into(),
                k.into(),
                t.into(),
                q.branch.tag().into(),
                (q.value / 4.0).into(),
                q.value.into(),
                q.db.into(),
                fr_interpolation_forms(Overlay::Inter1, &p).into(),
                fr_interpolation_forms(Overlay::LargeScale, &p).into(),
            ])
        })
        .collect();
    collect_rows(&mut table, rows)?;
    Ok(table)
}

fn fr_optimize(n: usize, k: usize, times: &[f64], phi: f64, cfg: &OptimizerConfig) -> Result<Table> {
    twistlab::lattice::system::check_ring(n, k)?;
    if phi == 0.0 || !phi.is_finite() {
        return Err(config_error("--phi must be finite and nonzero"));
    }
    let system = build_system(n, k)?;
    let mut table =
        Table::new(&["N", "K", "t", "phi", "qfi", "reciprocal_error", "n_x", "n_y", "n_z", "m_x", "m_y", "m_z"]);
    let rows = times
        .par_iter()
        .map(|&t| {
            let q = fr_max_qfi(n, k, t, Branch::Auto, cfg)?;
            let opt = fr_optimize_protocol(&system, t, phi, cfg)?;
            let mut row: Vec<Cell> = vec![n.into(), k.into(), t.into(), phi.into(), q.value.into(), opt.value.into()];
            row.extend(dir_cells(&opt.n.direction));
            row.extend(dir_cells(&opt.m.direction));
            Ok(row)
        })
        .collect();
    collect_rows(&mut table, rows)?;
    Ok(table)
}

fn husimi(n: usize, t: f64, n_polar: usize, n_azimuth: usize) -> Result<Table> {
    particles(n)?;
    finite("--t", &[t])?;
    if n_polar == 0 || n_azimuth == 0 {
        return Err(config_error("grid resolution must be positive"));
    }
    let state = oat_evolve(&coherent_state(n, 1.0)?, t, TwistSign::Twist);
    let grid = SphereGrid::midpoint(n_polar, n_azimuth);
    let q = husimi_q(&state, &grid.points);
    let mut table = Table::new(&["xi", "theta", "weight", "q"]);
    for ((p, w), q) in grid.points.iter().zip(&grid.weights).zip(q) {
        table.push(vec![p.polar().into(), p.azimuth().into(), (*w).into(), q.into()]);
    }
    Ok(table)
}

const VERIFY_TOL: f64 = 1e-9;

fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    let z: f64 = rng.random_range(-1.0..1.0);
    Direction::from_angles(z.acos(), rng.random_range(-PI..PI))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn verify(suite: Suite, sites: usize, draws: usize, seed: u64) -> Result<Outcome> {
    if draws == 0 {
        return Err(config_error("--draws must be positive"));
    }
    let mut table = Table::new(&["suite", "case", "cases", "max_rel_error", "tolerance", "status"]);
    let mut failed = Vec::new();
    let mut record = |suite: &str, case: String, cases: usize, err: f64, table: &mut Table| {
        let ok = err < VERIFY_TOL;
        if !ok {
            failed.push(format!("{suite} {case}: {err:e}"));
        }
        table.push(vec![
            suite.into(),
            case.into(),
            cases.into(),
            err.into(),
            VERIFY_TOL.into(),
            if ok { "pass" } else { "fail" }.into(),
        ]);
    };

    if matches!(suite, Suite::AppendixC | Suite::All) {
        if !(4..=BRUTE_FORCE_SITE_CAP).contains(&sites) {
            return Err(config_error(format!("--sites must lie in 4..={BRUTE_FORCE_SITE_CAP}")));
        }
        let n = sites - 2;
        twistlab::lattice::system::check_ring(n, 1)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 1..=n / 2 {
            let system = build_system(n, k)?;
            let mut worst: f64 = 0.0;
            for _ in 0..draws {
                let t = rng.random_range(0.0..PI);
                let d = random_direction(&mut rng);
                let a = fr_variance_analytic(n, k, t, d.polar(), d.azimuth(), Branch::Auto)?;
                worst = worst.max(rel(a, fr_variance_brute(&system, t, &d)?));
            }
            let case = format!("sites={sites} K={k} branch={}", Branch::Auto.resolve(n, k).tag());
            record("appendix-c", case, draws, worst, &mut table);
        }
    }
    if matches!(suite, Suite::Qfi | Suite::All) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9f1);
        let mut worst: f64 = 0.0;
        let cases = 10 * draws;
        for _ in 0..cases {
            let n = rng.random_range(2..=50usize);
            let t = FRAC_PI_2 * (1.0 - rng.random::<f64>());
            let d = random_direction(&mut rng);
            worst = worst.max(rel(qfi_closed_form(n, t, d.polar(), d.azimuth()), qfi_numeric(n, t, &d)?));
        }
        record("qfi", "N=2..50".to_owned(), cases, worst, &mut table);
    }
    let verification_failure = (!failed.is_empty()).then(|| failed.join("; "));
    Ok(Outcome { table, verification_failure })
}
