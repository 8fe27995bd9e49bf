//! Atomic probability measures: transport and Lévy-Prokhorov distances,
//! quantization numbers, and the induced action on measures.

pub mod atomic;
pub mod dynamics;
pub mod prokhorov;
pub mod quantize;
pub mod transport;

pub use atomic::{parse_rational, AtomicMeasure};
pub use dynamics::{
    apart_count, bb_w1_lower_bound, induced_sweep, log_log, quantization_table, thm4_construction, ApartCount,
    InducedRow, MeasureLattice, Thm4Measure, Thm4Part,
};
pub use prokhorov::{levy_prokhorov, levy_prokhorov_upper, MAX_LP_SUPPORT};
pub use quantize::{CONSTRAINT_SLACK, quantization_number, QuantBudget, QuantizationReport};
pub use transport::{w1, wasserstein, CouplingPlan, MetricKind, Transport};
