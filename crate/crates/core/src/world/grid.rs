use std::f64::consts::TAU;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Factor, GroupElement, GroupManifold};

/// A finite subset of a manifold in lexicographic coordinate order that
/// always contains the identity.
#[derive(Clone, Debug)]
pub struct GroupGrid {
    manifold: Arc<GroupManifold>,
    elements: Vec<GroupElement>,
    /// Ascending per-factor coordinate lists the grid is the product of.
    axes: Vec<Vec<f64>>,
    identity_index: usize,
}

fn log_lattice(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if resolution < 2 || hi <= lo {
        return vec![0.0];
    }
    let step = (hi - lo) / (resolution - 1) as f64;
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

impl GroupGrid {
    /// Uniform grid with `resolution` cells per continuous factor (a lattice
    /// through zero on log-scale factors) and every element of cyclic factors.
    pub fn uniform(manifold: Arc<GroupManifold>, resolution: usize) -> Result<Self> {
        Self::uniform_with(manifold, resolution, resolution)
    }

    /// Like [`Self::uniform`] with a separate cell count for log-scale factors.
    pub fn uniform_with(manifold: Arc<GroupManifold>, resolution: usize, scale_resolution: usize) -> Result<Self> {
        if resolution == 0 || scale_resolution == 0 {
            return Err(Error::param("grid_resolution", "must be >= 1"));
        }
        let axes = manifold
            .factors()
            .iter()
            .map(|f| match *f {
                Factor::So2 => (0..resolution).map(|j| TAU * j as f64 / resolution as f64).collect(),
                Factor::Cyclic(n) => (0..n).map(f64::from).collect(),
                Factor::LogScale { min, max } => log_lattice(min.ln(), max.ln(), scale_resolution),
            })
            .collect();
        Self::from_axes(manifold, axes)
    }

    pub fn from_axes(manifold: Arc<GroupManifold>, axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.len() != manifold.dim() || axes.iter().any(Vec::is_empty) {
            return Err(Error::param("grid", "one non-empty axis per factor required"));
        }
        let mut elements = Vec::with_capacity(axes.iter().map(Vec::len).product());
        let mut index = vec![0usize; axes.len()];
        loop {
            let coords: Vec<f64> = index.iter().zip(&axes).map(|(i, a)| a[*i]).collect();
            elements.push(manifold.element(&coords)?);
            let mut k = axes.len();
            loop {
                if k == 0 {
                    let identity_index = elements
                        .iter()
                        .position(GroupElement::is_identity)
                        .ok_or_else(|| Error::param("grid", "identity element missing"))?;
                    return Ok(GroupGrid {
                        manifold,
                        elements,
                        axes,
                        identity_index,
                    });
                }
                k -= 1;
                index[k] += 1;
                if index[k] < axes[k].len() {
                    break;
                }
                index[k] = 0;
            }
        }
    }

    pub fn manifold(&self) -> &Arc<GroupManifold> {
        &self.manifold
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn identity_index(&self) -> usize {
        self.identity_index
    }

    /// Spacing of a factor's axis (the full range for single-point axes).
    pub fn spacing(&self, factor: usize) -> f64 {
        let axis = &self.axes[factor];
        match self.manifold.factors()[factor] {
            Factor::So2 => TAU / axis.len() as f64,
            Factor::Cyclic(n) => TAU / f64::from(n),
            Factor::LogScale { .. } if axis.len() > 1 => axis[1] - axis[0],
            Factor::LogScale { min, max } => max.ln() - min.ln(),
        }
    }
}

/// Robustness grid: `rotation_order` evenly spaced rotations (starting at 0)
/// times the given multiplicative scales. Other factors stay at identity.
pub fn evaluation_grid(manifold: Arc<GroupManifold>, rotation_order: usize, scales: &[f64]) -> Result<GroupGrid> {
    if rotation_order == 0 {
        return Err(Error::param("rotation_order", "must be >= 1"));
    }
    if scales.is_empty() || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::param("scales", "need at least one positive scale"));
    }
    let rot = manifold
        .rotation_factor()
        .ok_or_else(|| Error::Unsupported(format!("`{manifold}` has no rotation factor")))?;
    let scale = manifold.scale_factor();
    let mut axes: Vec<Vec<f64>> = vec![vec![0.0]; manifold.dim()];
    axes[rot] = match manifold.factors()[rot] {
        Factor::Cyclic(n) => {
            if n as usize % rotation_order != 0 {
                return Err(Error::Unsupported(format!(
                    "C{rotation_order} is not a subgroup of C{n}"
                )));
            }
            (0..rotation_order)
                .map(|k| (k * n as usize / rotation_order) as f64)
                .collect()
        }
        _ => (0..rotation_order)
            .map(|k| TAU * k as f64 / rotation_order as f64)
            .collect(),
    };
    let logs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    match scale {
        Some(i) => {
            let (lo, hi) = manifold.factors()[i].log_bounds().expect("scale factor");
            if let Some(l) = logs.iter().find(|l| **l < lo - 1e-12 || **l > hi + 1e-12) {
                return Err(Error::param(
                    "scales",
                    format!("scale {} outside manifold bounds", l.exp()),
                ));
            }
            axes[i] = logs;
        }
        None if logs.iter().all(|l| *l == 0.0) => {}
        None => {
            return Err(Error::Unsupported(format!(
                "`{manifold}` has no scale factor for scales {scales:?}"
            )))
        }
    }
    GroupGrid::from_axes(manifold, axes)
}
