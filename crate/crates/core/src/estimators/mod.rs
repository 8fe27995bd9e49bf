//! Finite-scale proxies for the limits: regressions over count tables.

pub mod estimates;
pub mod slope;
pub mod sweep;

pub use estimates::{
    box_dimension_estimate, dynamical_quantization_order, entropy_at_scale, estimate_csv_row, log_plus,
    mdim_estimate, mdim_mo_estimate, mean_box_dimension_estimate, metric_order_estimate, quantization_order,
    ESTIMATE_CSV_HEADER,
};
pub use slope::{envelope, fit_slope, least_squares, FitConfig, SlopeEstimate};
pub use sweep::{csv_field, ScaleSweep, SweepRow};
