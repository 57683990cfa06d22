//! Bootstrapped re-alignment of pose-biased datasets on compact groups.
//!
//! The crate is organised bottom-up:
//!
//! - [`group`]: supported group manifolds (SO(2), cyclic groups, bounded
//!   log-scale and flat products of those), their geodesic geometry and
//!   planar representation.
//! - [`distribution`]: pose distributions over a manifold (von Mises,
//!   wrapped normal, uniform, Dirac and finite mixtures).
//! - [`frechet`]: Frechet mean and variance via grid-seeded Karcher descent,
//!   an exhaustive grid oracle, and the mixture-variance decomposition.
//! - [`world`]: synthetic point-set specimens, scoring-function
//!   canonicalizers, evaluation grids and a nearest-template classifier.
//! - [`engine`]: the bootstrapping loop, trajectory recording and the
//!   variance-contraction predictors.
//! - [`verify`]: self-contained verification suites used by the CLI.

pub mod distribution;
pub mod engine;
pub mod error;
pub mod frechet;
pub mod group;
pub mod rng;
pub mod verify;
pub mod world;

pub use distribution::{FactorDistribution, PoseDistribution};
pub use engine::{
    BootstrapConfig, CanonicalizerSpec, DatasetState, RunOutcome, Selection, StopReason, TrajectoryRecord,
    TrajectoryRow,
};
pub use error::{Error, Result};
pub use frechet::{FrechetOptions, FrechetSummary, MixtureDecomposition, WeightedPoseSample};
pub use group::{Factor, GroupElement, GroupManifold, Tangent};
pub use world::{Canonicalizer, ClassTemplates, GroupGrid, Shape, Specimen};
