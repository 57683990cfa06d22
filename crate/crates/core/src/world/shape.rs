//! Planar point-set shapes.

use nalgebra::{Matrix3, Point2, Vector2};
use rand::Rng;

use crate::group::GroupElement;

pub type Shape = Vec<Point2<f64>>;

/// Number of points in every generated shape.
pub const POINTS_PER_SHAPE: usize = 24;

pub fn transform(shape: &[Point2<f64>], g: &GroupElement) -> Shape {
    let m = g.matrix();
    shape.iter().map(|p| m.transform_point(p)).collect()
}

pub fn centroid(shape: &[Point2<f64>]) -> Point2<f64> {
    let sum = shape.iter().fold(Vector2::zeros(), |acc, p| acc + p.coords);
    Point2::from(sum / shape.len() as f64)
}

/// Centres on the origin and scales so the farthest point has radius one.
pub fn normalize(shape: &[Point2<f64>]) -> Shape {
    let c = centroid(shape);
    let centred: Shape = shape.iter().map(|p| Point2::from(p - c)).collect();
    let r = centred.iter().map(|p| p.coords.norm()).fold(0.0, f64::max);
    if r == 0.0 {
        return centred;
    }
    centred.iter().map(|p| Point2::from(p.coords / r)).collect()
}

/// Mean over points of `a` of the squared distance to the closest point of `b`.
pub fn chamfer(a: &[Point2<f64>], b: &[Point2<f64>]) -> f64 {
    let total: f64 = a
        .iter()
        .map(|p| b.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
        .sum();
    total / a.len() as f64
}

/// [`chamfer`] of `m·a` against `b` without materialising `m·a`.
pub fn chamfer_under(m: &Matrix3<f64>, a: &[Point2<f64>], b: &[Point2<f64>]) -> f64 {
    let (m00, m01, m02) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let (m10, m11, m12) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
    let total: f64 = a
        .iter()
        .map(|p| {
            let x = m00 * p.x + m01 * p.y + m02;
            let y = m10 * p.x + m11 * p.y + m12;
            b.iter()
                .map(|q| (x - q.x) * (x - q.x) + (y - q.y) * (y - q.y))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / a.len() as f64
}

pub fn symmetric_chamfer(a: &[Point2<f64>], b: &[Point2<f64>]) -> f64 {
    chamfer(a, b) + chamfer(b, a)
}

/// Index-wise average of equally sized shapes.
pub fn mean_shape<'a>(shapes: impl IntoIterator<Item = &'a Shape>) -> Option<Shape> {
    let mut sum: Option<Vec<Vector2<f64>>> = None;
    let mut count = 0usize;
    for s in shapes {
        let acc = sum.get_or_insert_with(|| vec![Vector2::zeros(); s.len()]);
        for (a, p) in acc.iter_mut().zip(s) {
            *a += p.coords;
        }
        count += 1;
    }
    sum.map(|v| v.into_iter().map(|x| Point2::from(x / count as f64)).collect())
}

/// Radial profile `r(φ) = 1 + Σ aₘ cos(mφ + cₘ)` sampled at
/// [`POINTS_PER_SHAPE`] evenly spaced angles.
pub fn radial_shape(harmonics: &[(usize, f64, f64)]) -> Shape {
    (0..POINTS_PER_SHAPE)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / POINTS_PER_SHAPE as f64;
            let r = 1.0
                + harmonics
                    .iter()
                    .map(|(m, a, c)| a * (*m as f64 * phi + c).cos())
                    .sum::<f64>();
            Point2::new(r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// Random harmonics for a class-shared base profile. The strong first
/// harmonic rules out rotational self-symmetry.
pub fn random_base_harmonics<R: Rng + ?Sized>(rng: &mut R) -> Vec<(usize, f64, f64)> {
    let mut h = vec![(
        1,
        rng.random_range(0.25..0.35),
        rng.random_range(0.0..std::f64::consts::TAU),
    )];
    for m in 2..=4 {
        h.push((
            m,
            rng.random_range(0.04..0.15),
            rng.random_range(0.0..std::f64::consts::TAU),
        ));
    }
    h
}

pub fn random_class_harmonics<R: Rng + ?Sized>(rng: &mut R) -> Vec<(usize, f64, f64)> {
    (2..=5)
        .map(|m| {
            (
                m,
                rng.random_range(0.02..0.12),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect()
}
