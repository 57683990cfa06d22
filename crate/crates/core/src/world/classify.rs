use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupElement;

use super::canonicalizer::Canonicalizer;
use super::grid::GroupGrid;
use super::shape::{self, Shape};
use super::specimen::Specimen;

/// One reference shape per class for nearest-template classification.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassTemplates {
    shapes: Vec<Shape>,
}

impl ClassTemplates {
    pub fn new(shapes: Vec<Shape>) -> Result<Self> {
        if shapes.is_empty() || shapes.iter().any(|s| s.is_empty()) {
            return Err(Error::param("class_templates", "need one non-empty shape per class"));
        }
        Ok(ClassTemplates { shapes })
    }

    /// Per-class mean of the shapes obtained by undoing `canonicalizer`'s
    /// prediction on each training specimen.
    pub fn fit(
        specimens: &[Specimen],
        num_classes: usize,
        canonicalizer: &Canonicalizer,
        search: &GroupGrid,
        refine: bool,
    ) -> Result<Self> {
        let aligned: Vec<(usize, Shape)> = specimens
            .par_iter()
            .map(|x| Ok((x.label, x.aligned_by(&canonicalizer.canonicalize(x, search, refine)?))))
            .collect::<Result<_>>()?;
        let shapes = (0..num_classes)
            .map(|c| {
                shape::mean_shape(aligned.iter().filter(|(l, _)| *l == c).map(|(_, s)| s))
                    .ok_or_else(|| Error::InvalidSample(format!("class {c} has no training specimens")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shapes)
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    /// Nearest template by symmetric chamfer distance; ties go to the lower class.
    pub fn nearest(&self, s: &[nalgebra::Point2<f64>]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (c, t) in self.shapes.iter().enumerate() {
            let d = shape::symmetric_chamfer(s, t);
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }
}

/// Canonicalized nearest-template classifier: undo `φ(x)` then match.
pub fn toy_classify(
    x: &Specimen,
    canonicalizer: &Canonicalizer,
    search: &GroupGrid,
    refine: bool,
    templates: &ClassTemplates,
) -> Result<usize> {
    let g = canonicalizer.canonicalize(x, search, refine)?;
    Ok(templates.nearest(&x.aligned_by(&g)))
}

/// Accuracy of [`toy_classify`] on one evaluation-grid cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellAccuracy {
    pub cell: usize,
    pub rotation: f64,
    pub scale: f64,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// Predicted class per test specimen, in input order.
    #[serde(skip)]
    pub predictions: Vec<usize>,
}

/// Classifies every test specimen transformed by every evaluation cell.
pub fn robustness(
    test: &[Specimen],
    canonicalizer: &Canonicalizer,
    search: &GroupGrid,
    refine: bool,
    templates: &ClassTemplates,
    cells: &GroupGrid,
) -> Result<Vec<CellAccuracy>> {
    cells
        .elements()
        .iter()
        .enumerate()
        .map(|(cell, g): (usize, &GroupElement)| {
            let predictions = test
                .par_iter()
                .map(|x| toy_classify(&x.transformed(g)?, canonicalizer, search, refine, templates))
                .collect::<Result<Vec<_>>>()?;
            let correct = predictions.iter().zip(test).filter(|(p, x)| **p == x.label).count();
            let (rotation, scale) = g.rotation_scale();
            Ok(CellAccuracy {
                cell,
                rotation,
                scale,
                correct,
                total: test.len(),
                accuracy: if test.is_empty() {
                    0.0
                } else {
                    correct as f64 / test.len() as f64
                },
                predictions,
            })
        })
        .collect()
}
