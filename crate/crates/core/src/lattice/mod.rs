//! Finite-range one-axis twisting on a periodic ring of `N + 2` spins.

pub mod analytic;
pub mod protocol;
pub mod system;

pub use analytic::{
    fr_interpolation_forms, fr_max_qfi, fr_variance_analytic, oat_identity_diagnostic, Branch, FrQfi,
    IdentityDiagnostic, MomentTable, Overlay, OverlayParams, VarianceModel,
};
pub use protocol::{default_time_grid, fr_optimize_protocol, fr_optimize_scan, FrOptimizeRecord};
pub use system::{
    build_system, fr_evolve, fr_mom_reciprocal, fr_protocol_stats, fr_variance_brute, lattice_components,
    lattice_moments, lattice_rotate, LatticeState, LatticeSystem, Moments, BRUTE_FORCE_SITE_CAP, HARD_SITE_CAP,
};
