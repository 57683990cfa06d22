//! Synthetic specimens, canonicalizers and the toy classifier.

mod canonicalizer;
mod classify;
mod dataset;
mod grid;
pub mod shape;
mod specimen;

pub use canonicalizer::{Canonicalizer, CanonicalizerKind, Evaluation, TemplateState};
pub use classify::{robustness, toy_classify, CellAccuracy, ClassTemplates};
pub use dataset::{
    generate_dataset, generate_test_set, DatasetFile, DatasetSpec, DATASET_FORMAT, DATASET_FORMAT_VERSION,
    DEFAULT_JITTER,
};
pub use grid::{evaluation_grid, GroupGrid};
pub use shape::Shape;
pub use specimen::Specimen;
