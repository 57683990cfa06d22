use std::sync::Arc;

use nalgebra::Point2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distribution::PoseDistribution;
use crate::error::{Error, Result};
use crate::group::GroupManifold;
use crate::rng::{stream, stream_rng};

use super::shape::{self, Shape};
use super::specimen::Specimen;

pub const DATASET_FORMAT: &str = "galign-dataset";
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Default per-point jitter (standard deviation, unit-disc units).
pub const DEFAULT_JITTER: f64 = 0.02;

#[derive(Clone, Debug)]
pub struct DatasetSpec {
    pub num_classes: usize,
    pub per_class: usize,
    pub pose: PoseDistribution,
    pub seed: u64,
    pub jitter: f64,
}

impl DatasetSpec {
    pub fn new(num_classes: usize, per_class: usize, pose: PoseDistribution, seed: u64) -> Self {
        DatasetSpec {
            num_classes,
            per_class,
            pose,
            seed,
            jitter: DEFAULT_JITTER,
        }
    }
}

/// A generated dataset together with the information needed to draw
/// matching test specimens.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub manifold: Arc<GroupManifold>,
    pub pose: String,
    pub seed: u64,
    pub jitter: f64,
    pub class_shapes: Vec<Shape>,
    pub specimens: Vec<Specimen>,
}

fn jittered<R: Rng>(base: &[Point2<f64>], sigma: f64, rng: &mut R) -> Shape {
    if sigma == 0.0 {
        return base.to_vec();
    }
    let moved: Shape = base
        .iter()
        .map(|p| {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            Point2::new(p.x + sigma * dx, p.y + sigma * dy)
        })
        .collect();
    let c = shape::centroid(&moved);
    moved.iter().map(|p| Point2::from(p - c)).collect()
}

/// Class prototypes: one shared base profile plus class-specific harmonics.
fn class_shapes(num_classes: usize, seed: u64) -> Vec<Shape> {
    let base = shape::random_base_harmonics(&mut stream_rng(seed, stream::SHAPES, u64::MAX));
    (0..num_classes)
        .map(|c| {
            let mut h = base.clone();
            h.extend(shape::random_class_harmonics(&mut stream_rng(
                seed,
                stream::SHAPES,
                c as u64,
            )));
            shape::normalize(&shape::radial_shape(&h))
        })
        .collect()
}

pub fn generate_dataset(spec: &DatasetSpec) -> Result<DatasetFile> {
    if spec.num_classes == 0 || spec.per_class == 0 {
        return Err(Error::param("counts", "classes and per-class count must be >= 1"));
    }
    if !(spec.jitter.is_finite() && spec.jitter >= 0.0) {
        return Err(Error::param("jitter", format!("must be >= 0, got {}", spec.jitter)));
    }
    let classes = class_shapes(spec.num_classes, spec.seed);
    let n = spec.num_classes * spec.per_class;
    let specimens = (0..n)
        .map(|i| {
            let id = i as u64;
            let label = i / spec.per_class;
            let canonical = jittered(
                &classes[label],
                spec.jitter,
                &mut stream_rng(spec.seed, stream::JITTER, id),
            );
            let pose = spec.pose.sample(&mut stream_rng(spec.seed, stream::POSES, id));
            Specimen::new(id, label, canonical, pose)
        })
        .collect();
    Ok(DatasetFile {
        manifold: Arc::clone(spec.pose.manifold()),
        pose: spec.pose.to_string(),
        seed: spec.seed,
        jitter: spec.jitter,
        class_shapes: classes,
        specimens,
    })
}

/// Fresh canonical-pose specimens drawn around the dataset's class shapes.
pub fn generate_test_set(dataset: &DatasetFile, per_class: usize, seed: u64) -> Vec<Specimen> {
    let identity = dataset.manifold.identity();
    let test_seed = crate::rng::derive_seed(seed, stream::JITTER, u64::MAX);
    (0..dataset.class_shapes.len() * per_class)
        .map(|i| {
            let label = i / per_class;
            let canonical = jittered(
                &dataset.class_shapes[label],
                dataset.jitter,
                &mut stream_rng(test_seed, stream::JITTER, i as u64),
            );
            Specimen::new(i as u64, label, canonical, identity.clone())
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct SpecimenRepr {
    id: u64,
    label: usize,
    canonical: Vec<[f64; 2]>,
    true_pose: Vec<f64>,
    correction: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FileRepr {
    format: String,
    version: u32,
    manifold: String,
    pose: String,
    seed: u64,
    jitter: f64,
    class_shapes: Vec<Vec<[f64; 2]>>,
    specimens: Vec<SpecimenRepr>,
}

fn points(s: &[Point2<f64>]) -> Vec<[f64; 2]> {
    s.iter().map(|p| [p.x, p.y]).collect()
}

fn from_points(v: Vec<[f64; 2]>) -> Shape {
    v.into_iter().map(|[x, y]| Point2::new(x, y)).collect()
}

impl DatasetFile {
    pub fn num_classes(&self) -> usize {
        self.class_shapes.len()
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = FileRepr {
            format: DATASET_FORMAT.into(),
            version: DATASET_FORMAT_VERSION,
            manifold: self.manifold.to_string(),
            pose: self.pose.clone(),
            seed: self.seed,
            jitter: self.jitter,
            class_shapes: self.class_shapes.iter().map(|s| points(s)).collect(),
            specimens: self
                .specimens
                .iter()
                .map(|x| SpecimenRepr {
                    id: x.id,
                    label: x.label,
                    canonical: points(&x.canonical),
                    true_pose: x.true_pose.coords().to_vec(),
                    correction: x.correction.coords().to_vec(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&repr)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: FileRepr = serde_json::from_str(text)?;
        if repr.format != DATASET_FORMAT {
            return Err(Error::Format(format!("not a dataset file (format `{}`)", repr.format)));
        }
        if repr.version != DATASET_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {} (expected {DATASET_FORMAT_VERSION})",
                repr.version
            )));
        }
        let manifold: Arc<GroupManifold> = Arc::new(repr.manifold.parse()?);
        PoseDistribution::parse(Arc::clone(&manifold), &repr.pose)?;
        let num_classes = repr.class_shapes.len();
        let specimens = repr
            .specimens
            .into_iter()
            .map(|s| {
                if s.label >= num_classes {
                    return Err(Error::Format(format!(
                        "specimen {} has label {} of {num_classes}",
                        s.id, s.label
                    )));
                }
                if s.canonical.len() < 3 {
                    return Err(Error::Format(format!("specimen {} has fewer than 3 points", s.id)));
                }
                Ok(Specimen {
                    id: s.id,
                    label: s.label,
                    canonical: from_points(s.canonical),
                    true_pose: manifold.element(&s.true_pose)?,
                    correction: manifold.element(&s.correction)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DatasetFile {
            manifold,
            pose: repr.pose,
            seed: repr.seed,
            jitter: repr.jitter,
            class_shapes: repr.class_shapes.into_iter().map(from_points).collect(),
            specimens,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frechet::{frechet_mean, FrechetOptions, WeightedPoseSample};
    use std::f64::consts::PI;

    fn spec(pose: &str, classes: usize, per_class: usize) -> DatasetSpec {
        let m = Arc::new(GroupManifold::so2());
        DatasetSpec::new(classes, per_class, PoseDistribution::parse(m, pose).unwrap(), 7)
    }

    fn pose_variance(d: &DatasetFile) -> f64 {
        let poses = d.specimens.iter().map(|x| x.true_pose.clone()).collect();
        frechet_mean(&WeightedPoseSample::uniform(poses).unwrap(), &FrechetOptions::default())
            .unwrap()
            .variance
    }

    #[test]
    fn dirac_poses_have_zero_variance() {
        let d = generate_dataset(&spec("dirac:0", 5, 20)).unwrap();
        assert_eq!(d.specimens.len(), 100);
        assert_eq!(pose_variance(&d), 0.0);
        assert_eq!(d.specimens[57].label, 2);
    }

    #[test]
    fn uniform_poses_have_uniform_circle_variance() {
        let d = generate_dataset(&spec("uniform", 10, 100)).unwrap();
        let v = pose_variance(&d);
        // The sample minimum sits a little below the population value.
        assert!((v - PI * PI / 3.0).abs() < 0.3, "{v}");
    }

    #[test]
    fn generation_is_deterministic_and_round_trips() {
        let s = spec("vonmises:0:2", 3, 4);
        let a = generate_dataset(&s).unwrap();
        let b = generate_dataset(&s).unwrap();
        assert_eq!(a, b);
        let text = a.to_json().unwrap();
        assert_eq!(text, b.to_json().unwrap());
        let back = DatasetFile::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.specimens.len(), 12);
    }

    #[test]
    fn unknown_version_rejected() {
        let text = generate_dataset(&spec("uniform", 1, 1)).unwrap().to_json().unwrap();
        let bumped = text.replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(DatasetFile::from_json(&bumped), Err(Error::Format(_))));
    }

    #[test]
    fn test_set_is_canonical() {
        let d = generate_dataset(&spec("uniform", 4, 2)).unwrap();
        let t = generate_test_set(&d, 3, 1);
        assert_eq!(t.len(), 12);
        assert!(t.iter().all(|x| x.true_pose.is_identity()));
        assert_eq!(t[11].label, 3);
    }
}
