//! Joint optimization of finite-range twist-untwist protocols.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::analytic::{fr_max_qfi, Branch, FrQfi};
use crate::lattice::system::{fr_protocol_stats, LatticeSystem};
use crate::optimize::{maximize_joint, JointOptimum, OptimizerConfig, SphereDomain};
use crate::readout::ReadoutStats;

/// Maximizes the reciprocal method-of-moments error over rotation axis `n`
/// and readout `m`, both restricted to the hemisphere `θ ∈ [0, π]`.
pub fn fr_optimize_protocol(system: &LatticeSystem, t: f64, phi: f64, cfg: &OptimizerConfig) -> Result<JointOptimum> {
    if phi == 0.0 {
        return Err(Error::precondition("the sensed angle must be nonzero"));
    }
    let dom = SphereDomain::hemisphere();
    maximize_joint(
        |n| fr_protocol_stats(system, t, phi, n),
        |stats: &ReadoutStats, m| stats.reciprocal_error(m).unwrap_or(f64::NAN),
        &dom,
        &dom,
        cfg,
    )
}

/// `t_k = k·(π/2)/points`, `k = 1..=points`.
pub fn default_time_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|k| FRAC_PI_2 * k as f64 / points as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrOptimizeRecord {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    pub phi: f64,
    pub qfi: FrQfi,
    pub protocol: JointOptimum,
}

/// For each time: the finite-range QFI and the jointly optimized protocol.
pub fn fr_optimize_scan(
    system: &LatticeSystem,
    times: &[f64],
    phi: f64,
    cfg: &OptimizerConfig,
) -> Result<Vec<FrOptimizeRecord>> {
    times
        .iter()
        .map(|&t| {
            let qfi = fr_max_qfi(system.n(), system.range(), t, Branch::Auto, cfg)?;
            let protocol = fr_optimize_protocol(system, t, phi, cfg)?;
            Ok(FrOptimizeRecord { n: system.n(), k: system.range(), t, phi, qfi, protocol })
        })
        .collect()
}
