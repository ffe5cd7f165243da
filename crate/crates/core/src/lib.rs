//! Placement of leak-detection devices that may sit anywhere in the plane,
//! covering the weighted length of a pipeline network.
//!
//! A device at `X` with ball `B_R` covers the part of each edge inside
//! `X + B_R`. The crate solves two problems over such devices: cover the most
//! weighted length with `p` devices, and cover a fraction `γ` of it with as
//! few devices as possible.

pub mod compatibility;
pub mod coverage;
pub mod geometry;
pub mod ilp_seed;
pub mod model_export;
pub mod network;
pub mod placement;
pub mod single_device;
pub mod standin;

pub use compatibility::{is_compatible_set, IncompatibilityTable};
pub use coverage::{evaluate, CoverageInterval, CoverageReport, Device, Placement};
pub use geometry::{Ball, GeometryError, Norm, Point, Segment, TOL_EPS};
pub use ilp_seed::{seed_to_placement, solve_seed_ilp, SeedAssignment, SeedError, SeedMode};
pub use model_export::{ConicModel, ExportError};
pub use network::{Edge, Network, NetworkError, NetworkFormat, Node};
pub use placement::{solve, PlacementError, Problem, RunConfig, Strategy};
pub use single_device::{solve_single, SingleSolution, SolverConfig};
