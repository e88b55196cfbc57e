//! Fully discrete approximation of optimal transport on compact metric
//! spaces.
//!
//! The pipeline: partition both spaces into pointed cells of diameter at most
//! `h`, collapse the marginals onto the anchors, solve the resulting finite
//! transportation program with a certified gap, and extract a transport map
//! by barycentric or geometric-median projection. The remaining modules
//! provide the continuous and semidiscrete rewritings of a discrete plan,
//! the comparison functionals (`W_p`, `d_p`, `disc_p`, total variation,
//! Hausdorff, oscillation sums), and scripted convergence experiments with
//! machine-checkable assertions.

pub mod cost;
pub mod error;
pub mod experiment;
pub mod measure;
pub mod metrics;
pub mod partition;
pub mod piecewise;
pub mod projection;
pub mod rng;
pub mod solver;
pub mod space;
pub mod transform;

pub use cost::{estimate_modulus, grid_lipschitz, grid_modulus_pair, CostFunction, ModulusEstimate};
pub use error::{Error, Result};
pub use measure::{Measure, Measure1D, MeasureBox, Segment};
pub use partition::{discretize, AnchorRule, AnchorSpec, Cell, DiscreteMeasure, PointedPartition};
pub use piecewise::{Map1D, Piece, Piecewise1D};
pub use projection::{
    barycentric_projection, gm_projection, gm_projection_hnet, verify_nearness, ProjectionKind,
    ProjectionMap,
};
pub use rng::Rng;
pub use solver::{
    brute_force_solve, plan_cost, solve_entropic, solve_exact, DiscretePlan, DualCertificate,
    HPlan, PlanEntry,
};
pub use space::{CompactSpace, Point, ProductMetric};
