//! Dynamical systems with finite certified nets.

pub mod banach;
pub mod descriptor;
pub mod interval;
pub mod kolyada;
pub mod shift;
pub mod system;

pub use banach::{banach_distance, BanachCube, SpanningAudit};
pub use descriptor::{AlphabetSpec, ResolvedSystem, SystemDescriptor};
pub use interval::{harmonic_set, interval_grid, lattice_denominator_for, unit_lattice, IntervalMap};
pub use kolyada::{family_sequences, Family, KolyadaSnohaMap, Zigzag};
pub use shift::{ShiftMetric, ShiftSpace};
pub use system::DynamicalSystem;
