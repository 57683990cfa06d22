use std::sync::Arc;

use crate::error::{Error, Result};
use crate::frechet::{frechet_mean, FrechetOptions, FrechetSummary, WeightedPoseSample};
use crate::group::{GroupElement, GroupManifold};
use crate::world::Specimen;

/// The dataset `D_t` at bootstrap step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetState {
    pub specimens: Vec<Specimen>,
    pub step: u64,
}

impl DatasetState {
    pub fn new(specimens: Vec<Specimen>) -> Result<Self> {
        let first = specimens.first().ok_or(Error::EmptyDataset)?;
        let m = first.true_pose.manifold();
        if let Some(x) = specimens
            .iter()
            .find(|x| *x.true_pose.manifold() != *m || *x.correction.manifold() != *m)
        {
            return Err(Error::InvalidSample(format!(
                "specimen {} lives on another manifold",
                x.id
            )));
        }
        Ok(DatasetState { specimens, step: 0 })
    }

    pub fn manifold(&self) -> &Arc<GroupManifold> {
        self.specimens[0].true_pose.manifold()
    }

    pub fn len(&self) -> usize {
        self.specimens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specimens.is_empty()
    }

    pub fn poses(&self) -> Vec<GroupElement> {
        self.specimens.iter().map(Specimen::current_pose).collect()
    }

    pub fn pose_sample(&self) -> Result<WeightedPoseSample> {
        WeightedPoseSample::uniform(self.poses())
    }

    /// Frechet mean and variance of the current poses.
    pub fn summary(&self) -> Result<FrechetSummary> {
        frechet_mean(&self.pose_sample()?, &FrechetOptions::default())
    }
}
