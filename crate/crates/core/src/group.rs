//! Group manifolds, their elements and bi-invariant geometry.
//!
//! Every supported group is abelian and every factor is one-dimensional, so a
//! tangent vector carries exactly one real per factor. Coordinates are kept in
//! a canonical range at all times:
//!
//! | factor      | coordinate                     | canonical range          |
//! |-------------|--------------------------------|--------------------------|
//! | `So2`       | angle θ (radians)              | `[0, 2π)`                |
//! | `Cyclic(n)` | index k (stored as an integer) | `{0, .., n-1}`           |
//! | `LogScale`  | u = ln s                       | `[ln s_min, ln s_max]`   |
//!
//! Cyclic tangents live in angle units (multiples of `2π/n`), so `Cₙ` embeds
//! isometrically into SO(2).

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Matrix3, Point2};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Angles closer than this to `0` or `2π` are stored as exactly `0`.
const ANGLE_SNAP: f64 = 1e-14;

pub type Tangent = SmallVec<[f64; 2]>;
pub type Coords = SmallVec<[f64; 2]>;

/// One factor of a (possibly trivial) product manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    So2,
    Cyclic(u32),
    /// Bounded multiplicative scale, `0 < min <= 1 <= max`.
    LogScale {
        min: f64,
        max: f64,
    },
}

fn canonical_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if !(ANGLE_SNAP..=TAU - ANGLE_SNAP).contains(&r) {
        0.0
    } else {
        r
    }
}

/// Signed minimal arc `to - from` in `(-π, π]`; antipodes resolve to `+π`.
fn signed_arc(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

impl Factor {
    fn validate(&self) -> Result<()> {
        match *self {
            Factor::So2 => Ok(()),
            Factor::Cyclic(n) if n >= 1 => Ok(()),
            Factor::Cyclic(n) => Err(Error::InvalidManifold(format!("cyclic order must be >= 1, got {n}"))),
            Factor::LogScale { min, max } => {
                if min.is_finite() && max.is_finite() && min > 0.0 && min <= 1.0 && max >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidManifold(format!(
                        "log-scale bounds must satisfy 0 < s_min <= 1 <= s_max, got [{min}, {max}]"
                    )))
                }
            }
        }
    }

    /// Bounds of the stored coordinate for log-scale factors.
    pub fn log_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Factor::LogScale { min, max } => Some((min.ln(), max.ln())),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Factor::Cyclic(_))
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, Factor::So2 | Factor::Cyclic(_))
    }

    /// Largest geodesic distance between two points of the factor.
    pub fn diameter(&self) -> f64 {
        match *self {
            Factor::So2 => PI,
            Factor::Cyclic(n) => TAU * f64::from(n / 2) / f64::from(n),
            Factor::LogScale { min, max } => max.ln() - min.ln(),
        }
    }

    pub fn canonical(&self, c: f64) -> f64 {
        match *self {
            Factor::So2 => canonical_angle(c),
            Factor::Cyclic(n) => (c.round() as i64).rem_euclid(i64::from(n)) as f64,
            Factor::LogScale { min, max } => c.clamp(min.ln(), max.ln()),
        }
    }

    pub fn compose(&self, a: f64, b: f64) -> f64 {
        self.canonical(a + b)
    }

    pub fn inverse(&self, a: f64) -> f64 {
        self.canonical(-a)
    }

    pub fn distance(&self, a: f64, b: f64) -> f64 {
        match *self {
            Factor::So2 => {
                let d = (a - b).abs().rem_euclid(TAU);
                d.min(TAU - d)
            }
            Factor::Cyclic(n) => {
                let n = i64::from(n);
                let dk = (a as i64 - b as i64).rem_euclid(n);
                TAU * dk.min(n - dk) as f64 / n as f64
            }
            Factor::LogScale { .. } => (a - b).abs(),
        }
    }

    pub fn log(&self, base: f64, g: f64) -> f64 {
        match *self {
            Factor::So2 => signed_arc(base, g),
            Factor::Cyclic(n) => {
                let n = i64::from(n);
                let mut dk = (g as i64 - base as i64).rem_euclid(n);
                if 2 * dk > n {
                    dk -= n;
                }
                TAU * dk as f64 / n as f64
            }
            Factor::LogScale { .. } => g - base,
        }
    }

    pub fn exp(&self, base: f64, v: f64) -> f64 {
        match *self {
            Factor::So2 | Factor::LogScale { .. } => self.canonical(base + v),
            Factor::Cyclic(n) => {
                let steps = (v * f64::from(n) / TAU).round();
                self.canonical(base + steps)
            }
        }
    }

    /// Rotation angle contributed by a coordinate (zero for scale factors).
    pub fn rotation_angle(&self, c: f64) -> f64 {
        match *self {
            Factor::So2 => c,
            Factor::Cyclic(n) => TAU * c / f64::from(n),
            Factor::LogScale { .. } => 0.0,
        }
    }

    /// Coordinate of the nearest element to a rotation angle (circular
    /// factors) or log-scale value.
    pub fn from_natural(&self, value: f64) -> f64 {
        match *self {
            Factor::Cyclic(n) => self.canonical(value * f64::from(n) / TAU),
            _ => self.canonical(value),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::So2 => write!(f, "so2"),
            Factor::Cyclic(n) => write!(f, "c{n}"),
            Factor::LogScale { min, max } => write!(f, "logscale:{min}:{max}"),
        }
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidManifold(format!("unrecognised factor `{s}`"));
        let factor = if s.eq_ignore_ascii_case("so2") {
            Factor::So2
        } else if let Some(rest) = s.strip_prefix("logscale") {
            let parts: Vec<&str> = rest.split(':').skip(1).collect();
            match parts.as_slice() {
                [] if rest.is_empty() => Factor::LogScale { min: 0.5, max: 2.0 },
                [lo, hi] => Factor::LogScale {
                    min: lo.trim().parse().map_err(|_| bad())?,
                    max: hi.trim().parse().map_err(|_| bad())?,
                },
                _ => return Err(bad()),
            }
        } else if let Some(n) = s.strip_prefix(['c', 'C']) {
            Factor::Cyclic(n.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        factor.validate()?;
        Ok(factor)
    }
}

/// A flat product of one-dimensional factors with a weighted product metric.
///
/// A single-factor manifold with unit weight is the factor itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifoldRepr", into = "ManifoldRepr")]
pub struct GroupManifold {
    factors: Vec<Factor>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ManifoldRepr {
    factors: Vec<Factor>,
    weights: Vec<f64>,
}

impl TryFrom<ManifoldRepr> for GroupManifold {
    type Error = Error;
    fn try_from(r: ManifoldRepr) -> Result<Self> {
        GroupManifold::weighted_product(r.factors, r.weights)
    }
}

impl From<GroupManifold> for ManifoldRepr {
    fn from(m: GroupManifold) -> Self {
        ManifoldRepr {
            factors: m.factors,
            weights: m.weights,
        }
    }
}

impl GroupManifold {
    pub fn so2() -> Self {
        GroupManifold {
            factors: vec![Factor::So2],
            weights: vec![1.0],
        }
    }

    pub fn cyclic(order: u32) -> Result<Self> {
        Self::product(vec![Factor::Cyclic(order)])
    }

    pub fn log_scale(min: f64, max: f64) -> Result<Self> {
        Self::product(vec![Factor::LogScale { min, max }])
    }

    /// Product with unit metric weights.
    pub fn product(factors: Vec<Factor>) -> Result<Self> {
        let weights = vec![1.0; factors.len()];
        Self::weighted_product(factors, weights)
    }

    pub fn weighted_product(factors: Vec<Factor>, weights: Vec<f64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidManifold("no factors".into()));
        }
        if weights.len() != factors.len() {
            return Err(Error::InvalidManifold(format!(
                "{} metric weights for {} factors",
                weights.len(),
                factors.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidManifold(format!(
                "metric weights must be strictly positive, got {w}"
            )));
        }
        for f in &factors {
            f.validate()?;
        }
        Ok(GroupManifold { factors, weights })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// Geodesic diameter under the weighted product metric.
    pub fn diameter(&self) -> f64 {
        self.factors
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| w * f.diameter().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Index of the first rotation factor, if any.
    pub fn rotation_factor(&self) -> Option<usize> {
        self.factors.iter().position(Factor::is_rotation)
    }

    pub fn scale_factor(&self) -> Option<usize> {
        self.factors.iter().position(|f| matches!(f, Factor::LogScale { .. }))
    }

    pub fn identity(self: &Arc<Self>) -> GroupElement {
        GroupElement {
            manifold: Arc::clone(self),
            coords: std::iter::repeat_n(0.0, self.dim()).collect(),
        }
    }

    /// Builds an element from raw coordinates, canonicalising them.
    pub fn element(self: &Arc<Self>, coords: &[f64]) -> Result<GroupElement> {
        GroupElement::new(Arc::clone(self), coords)
    }

    /// Squared norm of a tangent vector under the product metric.
    pub fn tangent_norm_sq(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum()
    }
}

impl fmt::Display for GroupManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{factor}")?;
        }
        if self.weights.iter().any(|w| *w != 1.0) {
            write!(f, "@")?;
            for (i, w) in self.weights.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{w}")?;
            }
        }
        Ok(())
    }
}

/// Parses `so2`, `c17`, `logscale:0.8:1.25` and products such as
/// `so2*logscale:0.5:2@1,0.25` (optional metric weights after `@`).
impl FromStr for GroupManifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (body, weights) = match s.split_once('@') {
            Some((b, w)) => (b, Some(w)),
            None => (s, None),
        };
        let factors = body.split('*').map(str::parse).collect::<Result<Vec<Factor>>>()?;
        match weights {
            None => Self::product(factors),
            Some(w) => {
                let weights = w
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidManifold(format!("bad metric weight `{x}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::weighted_product(factors, weights)
            }
        }
    }
}

fn check_same(a: &Arc<GroupManifold>, b: &Arc<GroupManifold>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ManifoldMismatch {
            left: a.to_string(),
            right: b.to_string(),
        })
    }
}

/// A point on a [`GroupManifold`] with canonical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    manifold: Arc<GroupManifold>,
    coords: Coords,
}

impl GroupElement {
    pub fn new(manifold: Arc<GroupManifold>, coords: &[f64]) -> Result<Self> {
        if coords.len() != manifold.dim() {
            return Err(Error::InvalidElement(format!(
                "{} coordinates for manifold `{manifold}`",
                coords.len()
            )));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidElement(format!("non-finite coordinate {c}")));
        }
        let coords = manifold
            .factors
            .iter()
            .zip(coords)
            .map(|(f, c)| f.canonical(*c))
            .collect();
        Ok(GroupElement { manifold, coords })
    }

    /// Shorthand for an element of a fresh SO(2) manifold.
    pub fn so2(theta: f64) -> Self {
        GroupElement::new(Arc::new(GroupManifold::so2()), &[theta]).expect("finite angle required")
    }

    pub fn manifold(&self) -> &Arc<GroupManifold> {
        &self.manifold
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|c| *c == 0.0)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(&Factor, f64, f64) -> f64) -> Result<Self> {
        check_same(&self.manifold, &other.manifold)?;
        let coords = self
            .manifold
            .factors
            .iter()
            .zip(self.coords.iter().zip(&other.coords))
            .map(|(f, (a, b))| op(f, *a, *b))
            .collect();
        Ok(GroupElement {
            manifold: Arc::clone(&self.manifold),
            coords,
        })
    }

    /// Group law `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |f, a, b| f.compose(a, b))
    }

    pub fn inverse(&self) -> Self {
        let coords = self
            .manifold
            .factors
            .iter()
            .zip(&self.coords)
            .map(|(f, c)| f.inverse(*c))
            .collect();
        GroupElement {
            manifold: Arc::clone(&self.manifold),
            coords,
        }
    }

    /// `self⁻¹ ∘ other`, the element carrying `self` to `other`.
    pub fn between(&self, other: &Self) -> Result<Self> {
        self.inverse().compose(other)
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_same(&self.manifold, &other.manifold)?;
        Ok(self.distance_unchecked(other))
    }

    /// Distance for callers that already know both elements share a manifold.
    pub(crate) fn distance_unchecked(&self, other: &Self) -> f64 {
        self.distance_sq_unchecked(other).sqrt()
    }

    pub(crate) fn distance_sq_unchecked(&self, other: &Self) -> f64 {
        let m = &self.manifold;
        m.factors
            .iter()
            .zip(&m.weights)
            .zip(self.coords.iter().zip(&other.coords))
            .map(|((f, w), (a, b))| w * f.distance(*a, *b).powi(2))
            .sum()
    }

    /// Riemannian logarithm at `self`: the tangent vector pointing to `g`
    /// along the minimal geodesic. Antipodal circular points map to `+π`.
    pub fn log(&self, g: &Self) -> Result<Tangent> {
        check_same(&self.manifold, &g.manifold)?;
        Ok(self
            .manifold
            .factors
            .iter()
            .zip(self.coords.iter().zip(&g.coords))
            .map(|(f, (b, x))| f.log(*b, *x))
            .collect())
    }

    /// Riemannian exponential at `self`. Scale coordinates are clamped to the
    /// manifold bounds and cyclic steps rounded to the nearest lattice point.
    pub fn exp(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.manifold.dim() {
            return Err(Error::InvalidElement(format!(
                "tangent of dimension {} on manifold `{}`",
                v.len(),
                self.manifold
            )));
        }
        let coords = self
            .manifold
            .factors
            .iter()
            .zip(self.coords.iter().zip(v))
            .map(|(f, (b, x))| f.exp(*b, *x))
            .collect();
        Ok(GroupElement {
            manifold: Arc::clone(&self.manifold),
            coords,
        })
    }

    /// Total rotation angle and scale of the planar representation.
    pub fn rotation_scale(&self) -> (f64, f64) {
        let mut angle = 0.0;
        let mut log_scale = 0.0;
        for (f, c) in self.manifold.factors.iter().zip(&self.coords) {
            match f {
                Factor::LogScale { .. } => log_scale += c,
                _ => angle += f.rotation_angle(*c),
            }
        }
        (angle, log_scale.exp())
    }

    /// Homogeneous 3×3 planar transform `ρ(g)`: rotation and uniform scale
    /// about the origin.
    pub fn matrix(&self) -> Matrix3<f64> {
        let mut m = Matrix3::identity();
        for (f, c) in self.manifold.factors.iter().zip(&self.coords) {
            let factor_matrix = match f {
                Factor::LogScale { .. } => {
                    let s = c.exp();
                    Matrix3::new(s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 1.0)
                }
                _ => {
                    let (sin, cos) = f.rotation_angle(*c).sin_cos();
                    Matrix3::new(cos, -sin, 0.0, sin, cos, 0.0, 0.0, 0.0, 1.0)
                }
            };
            m *= factor_matrix;
        }
        m
    }

    /// Applies `ρ(g)` to a point.
    pub fn act(&self, p: &Point2<f64>) -> Point2<f64> {
        self.matrix().transform_point(p)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.manifold)?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}
