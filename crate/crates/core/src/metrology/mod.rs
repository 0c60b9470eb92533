//! Metrology of one-axis-twisted probes.

pub mod predictors;
pub mod protocol;
pub mod qfi;
pub mod scan;
pub mod small_phi;

pub use predictors::{asymptotic_predictor, max_squeezing_time, PredictorParams, Regime};
pub use protocol::{
    mom_reciprocal_at_zero, mom_reciprocal_error, protocol_state, protocol_state_and_derivative, protocol_stats,
    richardson, MzAxis, ProtocolSpec, Variant, PHI_LADDER,
};
pub use qfi::{max_qfi_over_directions, qfi_closed_form, qfi_numeric, time_averaged_qfi, QfiMax};
pub use scan::{default_q_grid, phase_diagram_scan, regime_label, twist_untwist_scan, ScanRecord, TwistUntwistRecord};
pub use small_phi::{small_phi_slope, small_phi_variance_rate};
