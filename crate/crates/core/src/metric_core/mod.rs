//! Finite metric spaces, Bowen metrics, and the counts S, R, N and Cov.

pub mod bowen;
pub mod chain;
pub mod count;
pub mod graph;
pub mod grid;
pub mod space;

pub use bowen::{bowen_distance, BowenMetric};
pub use chain::{verify_chain, verify_subadditivity, Check, Status};
pub use count::{
    count, max_separated, max_separated_set, min_ball_cover, min_diameter_cover,
    min_diameter_cover_sets, min_spanning, min_spanning_set, Budget, CountBracket, Counted, Mode,
    Quantity,
};
pub use grid::{ScaleGrid, TIE_OFFSET};
pub use space::{DenseMetric, DistanceOracle, FiniteMetricSpace, LineMetric};
