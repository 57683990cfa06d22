use nalgebra::Point2;

use crate::error::Result;
use crate::group::GroupElement;

use super::shape::{self, Shape};

/// A labelled synthetic object.
///
/// The observed shape is never stored: it is `ρ(true_pose ∘ correction⁻¹)`
/// applied once to `canonical`, so accumulated corrections compose as group
/// elements instead of repeatedly resampling points.
#[derive(Clone, Debug, PartialEq)]
pub struct Specimen {
    pub id: u64,
    pub label: usize,
    pub canonical: Shape,
    pub true_pose: GroupElement,
    pub correction: GroupElement,
}

impl Specimen {
    pub fn new(id: u64, label: usize, canonical: Shape, true_pose: GroupElement) -> Self {
        let correction = true_pose.manifold().identity();
        Specimen {
            id,
            label,
            canonical,
            true_pose,
            correction,
        }
    }

    /// The pose the specimen currently appears in, `true_pose ∘ correction⁻¹`.
    pub fn current_pose(&self) -> GroupElement {
        self.true_pose
            .compose(&self.correction.inverse())
            .expect("pose and correction share a manifold")
    }

    pub fn observed(&self) -> Shape {
        shape::transform(&self.canonical, &self.current_pose())
    }

    /// The same object acted on by `ρ(g)`.
    pub fn transformed(&self, g: &GroupElement) -> Result<Specimen> {
        Ok(Specimen {
            true_pose: g.compose(&self.true_pose)?,
            ..self.clone()
        })
    }

    /// Applies `x ← ρ(ĝ)⁻¹ x` by folding `ĝ` into the accumulated correction.
    pub fn apply_correction(&mut self, g_hat: &GroupElement) -> Result<()> {
        self.correction = g_hat.compose(&self.correction)?;
        Ok(())
    }

    pub fn corrected(&self, g_hat: &GroupElement) -> Result<Specimen> {
        let mut s = self.clone();
        s.apply_correction(g_hat)?;
        Ok(s)
    }

    /// `ρ(g)⁻¹` applied to the observed shape.
    pub fn aligned_by(&self, g_hat: &GroupElement) -> Shape {
        let pose = self.current_pose().compose(&g_hat.inverse()).expect("same manifold");
        shape::transform(&self.canonical, &pose)
    }

    pub fn points(&self) -> &[Point2<f64>] {
        &self.canonical
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupManifold;
    use crate::world::shape::radial_shape;
    use std::sync::Arc;

    fn specimen(theta: f64) -> Specimen {
        Specimen::new(0, 0, radial_shape(&[(1, 0.3, 0.2)]), GroupElement::so2(theta))
    }

    #[test]
    fn exact_correction_restores_canonical_shape() {
        let mut s = specimen(1.234);
        let g = s.current_pose();
        s.apply_correction(&g).unwrap();
        assert!(s.current_pose().is_identity());
        for (a, b) in s.observed().iter().zip(&s.canonical) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn corrections_compose() {
        let mut s = specimen(1.0);
        s.apply_correction(&GroupElement::so2(0.4)).unwrap();
        s.apply_correction(&GroupElement::so2(0.5)).unwrap();
        assert!((s.current_pose().coords()[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn transformed_acts_on_observed_shape() {
        let m: Arc<GroupManifold> = Arc::new("so2*logscale:0.5:2".parse().unwrap());
        let s = Specimen::new(3, 1, radial_shape(&[(1, 0.3, 0.0)]), m.identity());
        let g = m.element(&[0.7, 0.2]).unwrap();
        let t = s.transformed(&g).unwrap();
        let expected = shape::transform(&s.observed(), &g);
        for (a, b) in t.observed().iter().zip(&expected) {
            assert!((a - b).norm() <= 1e-12);
        }
    }
}
