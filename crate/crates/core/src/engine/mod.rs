//! The bootstrapping loop, its trajectory and the contraction predictors.

mod config;
mod run;
mod state;
pub mod theory;
mod trajectory;

pub use config::{BootstrapConfig, CanonicalizerSpec, Selection};
pub use run::{bootstrap_step, run, select_count, RunOutcome, StepOutput, StopReason};
pub use state::DatasetState;
pub use theory::{contraction_rate, estimate_lambda, predict_variance, verify_lemma1, LambdaFit, Lemma1Report};
pub use trajectory::{TrajectoryRecord, TrajectoryRow, TRAJECTORY_FORMAT_VERSION};
