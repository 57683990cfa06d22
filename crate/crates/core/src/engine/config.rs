use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::GroupManifold;
use crate::world::{shape, Canonicalizer, GroupGrid, Specimen};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Highest identity loss first, ties by ascending id.
    TopLoss,
    /// Uniformly random subset from the step's selection stream.
    Random,
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toploss" | "top-loss" | "top_loss" => Ok(Selection::TopLoss),
            "random" => Ok(Selection::Random),
            other => Err(Error::param(
                "selection",
                format!("expected `toploss` or `random`, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selection::TopLoss => "toploss",
            Selection::Random => "random",
        })
    }
}

/// Serializable description of a canonicalizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CanonicalizerSpec {
    Identity,
    Oracle,
    Noisy {
        kappa: f64,
        /// Bias coordinates; empty means identity.
        #[serde(default)]
        bias: Vec<f64>,
        #[serde(default)]
        wrapped: bool,
    },
    Template {
        rate: f64,
        #[serde(default)]
        per_class: bool,
    },
}

impl CanonicalizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CanonicalizerSpec::Identity => "identity",
            CanonicalizerSpec::Oracle => "oracle",
            CanonicalizerSpec::Noisy { .. } => "noisy",
            CanonicalizerSpec::Template { .. } => "template",
        }
    }

    pub fn is_template(&self) -> bool {
        matches!(self, CanonicalizerSpec::Template { .. })
    }

    /// Instantiates the canonicalizer. Templates start from the index-wise
    /// mean of the observed shapes (per class when requested).
    pub fn build(
        &self,
        manifold: &Arc<GroupManifold>,
        specimens: &[Specimen],
        temperature: f64,
        seed: u64,
    ) -> Result<Canonicalizer> {
        match self {
            CanonicalizerSpec::Identity => Canonicalizer::identity(Arc::clone(manifold), temperature),
            CanonicalizerSpec::Oracle => Canonicalizer::oracle(Arc::clone(manifold), temperature),
            CanonicalizerSpec::Noisy { kappa, bias, wrapped } => {
                let bias = if bias.is_empty() {
                    manifold.identity()
                } else {
                    manifold.element(bias)?
                };
                Ok(Canonicalizer::noisy(*kappa, bias, temperature, seed)?.with_wrapped_noise(*wrapped))
            }
            CanonicalizerSpec::Template { rate, per_class } => {
                let observed: Vec<_> = specimens.iter().map(Specimen::observed).collect();
                let global = shape::mean_shape(&observed).ok_or(Error::EmptyDataset)?;
                let c = Canonicalizer::template(Arc::clone(manifold), global, temperature)?.with_rate(*rate)?;
                if !per_class {
                    return Ok(c);
                }
                let classes = specimens.iter().map(|x| x.label).max().map_or(0, |m| m + 1);
                let templates = (0..classes)
                    .map(|label| {
                        shape::mean_shape(
                            observed
                                .iter()
                                .zip(specimens)
                                .filter(|(_, x)| x.label == label)
                                .map(|(s, _)| s),
                        )
                        .ok_or_else(|| Error::InvalidSample(format!("class {label} is empty")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                c.with_per_class(templates)
            }
        }
    }
}

/// Parameters of a bootstrapping run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Fraction of the dataset re-aligned per step, in `(0, 1]`.
    pub alpha: f64,
    /// Template-update passes between bootstrap steps.
    pub interval_n: usize,
    pub steps: usize,
    pub selection: Selection,
    pub seed: u64,
    /// When set, the noisy canonicalizer's concentration is re-tuned every
    /// step so the updated subset's variance is `beta` times the current one.
    pub beta: Option<f64>,
    /// Search and posterior grid: cells per rotation factor.
    pub grid_resolution: usize,
    /// Cells per log-scale factor.
    pub scale_resolution: usize,
    /// Golden-section refinement of template grid minima.
    pub refine: bool,
    pub temperature: f64,
    pub canonicalizer: CanonicalizerSpec,
    /// Runs stop once the variance falls below this.
    pub variance_floor: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            alpha: 0.01,
            interval_n: 5,
            steps: 60,
            selection: Selection::TopLoss,
            seed: 0,
            beta: None,
            grid_resolution: 64,
            scale_resolution: 9,
            refine: true,
            temperature: 0.1,
            canonicalizer: CanonicalizerSpec::Oracle,
            variance_floor: 1e-14,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param("alpha", format!("must be in (0, 1], got {}", self.alpha)));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::param("beta", format!("must be in (0, 1), got {b}")));
            }
            if !matches!(self.canonicalizer, CanonicalizerSpec::Noisy { .. }) {
                return Err(Error::param("beta", "needs the noisy canonicalizer"));
            }
        }
        if self.grid_resolution == 0 || self.scale_resolution == 0 {
            return Err(Error::param("grid_resolution", "must be >= 1"));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::param(
                "temperature",
                format!("must be positive, got {}", self.temperature),
            ));
        }
        if self.variance_floor.is_nan() || self.variance_floor < 0.0 {
            return Err(Error::param("variance_floor", "must be >= 0"));
        }
        match &self.canonicalizer {
            CanonicalizerSpec::Noisy { kappa, .. } if !(*kappa > 0.0 && kappa.is_finite()) => {
                Err(Error::param("noise_kappa", format!("must be positive, got {kappa}")))
            }
            CanonicalizerSpec::Template { rate, .. } if !(*rate > 0.0 && *rate <= 1.0) => {
                Err(Error::param("template_rate", format!("must be in (0, 1], got {rate}")))
            }
            _ => Ok(()),
        }
    }

    pub fn grid(&self, manifold: &Arc<GroupManifold>) -> Result<GroupGrid> {
        GroupGrid::uniform_with(Arc::clone(manifold), self.grid_resolution, self.scale_resolution)
    }
}
