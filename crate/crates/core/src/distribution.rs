//! Pose distributions over a [`GroupManifold`].
//!
//! A distribution is a finite mixture of independent per-factor
//! distributions. The text form, used by configs and the CLI, is
//!
//! ```text
//! pose      := component ('+' component)*
//! component := [weight '*'] product
//! product   := factor (';' factor)*
//! factor    := 'uniform' | 'dirac:' x | 'vonmises:' mu ':' kappa
//!            | 'wrapped:' mu ':' sigma | 'normal:' mu ':' sigma
//! ```
//!
//! Circular parameters are radians (also for cyclic factors, whose draws are
//! snapped to the nearest lattice point); log-scale parameters are in
//! `ln s` units. For example `0.5*dirac:0+0.5*dirac:3.141592653589793` or
//! `vonmises:0:1;dirac:0` on a roto-scale manifold.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::group::{Factor, GroupElement, GroupManifold};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorDistribution {
    Dirac(f64),
    VonMises {
        mean: f64,
        kappa: f64,
    },
    WrappedNormal {
        mean: f64,
        sigma: f64,
    },
    /// Gaussian on a log-scale factor, clamped to the bounds.
    Normal {
        mean: f64,
        sigma: f64,
    },
    Uniform,
}

impl FactorDistribution {
    fn validate(&self, factor: &Factor) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match *self {
            FactorDistribution::Dirac(x) if !x.is_finite() => bad(format!("dirac at {x}")),
            FactorDistribution::VonMises { mean, kappa } => {
                if !(mean.is_finite() && kappa.is_finite() && kappa >= 0.0) {
                    return bad(format!(
                        "von Mises needs finite mean and kappa >= 0, got ({mean}, {kappa})"
                    ));
                }
                if !factor.is_rotation() {
                    return bad(format!("von Mises is circular; factor `{factor}` is not"));
                }
                Ok(())
            }
            FactorDistribution::WrappedNormal { mean, sigma } => {
                if !(mean.is_finite() && sigma.is_finite() && sigma >= 0.0) {
                    return bad(format!("wrapped normal needs sigma >= 0, got ({mean}, {sigma})"));
                }
                if !factor.is_rotation() {
                    return bad(format!("wrapped normal is circular; factor `{factor}` is not"));
                }
                Ok(())
            }
            FactorDistribution::Normal { mean, sigma } => {
                if !(mean.is_finite() && sigma.is_finite() && sigma >= 0.0) {
                    return bad(format!("normal needs sigma >= 0, got ({mean}, {sigma})"));
                }
                if factor.is_rotation() {
                    return bad(format!("normal is for log-scale factors; use wrapped on `{factor}`"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Draws a coordinate for `factor` (already canonical).
    fn sample<R: Rng + ?Sized>(&self, factor: &Factor, rng: &mut R) -> f64 {
        let natural = match *self {
            FactorDistribution::Dirac(x) => x,
            FactorDistribution::VonMises { mean, kappa } => sample_von_mises(rng, mean, kappa),
            FactorDistribution::WrappedNormal { mean, sigma } | FactorDistribution::Normal { mean, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma * z
            }
            FactorDistribution::Uniform => match *factor {
                Factor::So2 => rng.random_range(0.0..std::f64::consts::TAU),
                Factor::Cyclic(n) => {
                    return f64::from(rng.random_range(0..n));
                }
                Factor::LogScale { min, max } => rng.random_range(min.ln()..=max.ln()),
            },
        };
        factor.from_natural(natural)
    }
}

impl fmt::Display for FactorDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorDistribution::Dirac(x) => write!(f, "dirac:{x}"),
            FactorDistribution::VonMises { mean, kappa } => write!(f, "vonmises:{mean}:{kappa}"),
            FactorDistribution::WrappedNormal { mean, sigma } => write!(f, "wrapped:{mean}:{sigma}"),
            FactorDistribution::Normal { mean, sigma } => write!(f, "normal:{mean}:{sigma}"),
            FactorDistribution::Uniform => write!(f, "uniform"),
        }
    }
}

fn parse_factor_distribution(s: &str) -> Result<FactorDistribution> {
    let s = s.trim();
    let bad = || Error::InvalidDistribution(format!("cannot parse `{s}`"));
    let mut parts = s.split(':');
    let head = parts.next().ok_or_else(bad)?.trim().to_ascii_lowercase();
    let nums = parts
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    Ok(match (head.as_str(), nums.as_slice()) {
        ("uniform", []) => FactorDistribution::Uniform,
        ("dirac", [x]) => FactorDistribution::Dirac(*x),
        ("vonmises", [mean, kappa]) => FactorDistribution::VonMises {
            mean: *mean,
            kappa: *kappa,
        },
        ("wrapped", [mean, sigma]) => FactorDistribution::WrappedNormal {
            mean: *mean,
            sigma: *sigma,
        },
        ("normal", [mean, sigma]) => FactorDistribution::Normal {
            mean: *mean,
            sigma: *sigma,
        },
        _ => return Err(bad()),
    })
}

/// A finite mixture of product distributions, bound to a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseDistribution {
    manifold: Arc<GroupManifold>,
    components: Vec<(f64, Vec<FactorDistribution>)>,
}

impl PoseDistribution {
    pub fn new(manifold: Arc<GroupManifold>, components: Vec<(f64, Vec<FactorDistribution>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDistribution("mixture has no components".into()));
        }
        let mut total = 0.0;
        for (w, factors) in &components {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidDistribution(format!("mixture weight {w}")));
            }
            total += w;
            if factors.len() != manifold.dim() {
                return Err(Error::InvalidDistribution(format!(
                    "{} factor distributions for manifold `{manifold}`",
                    factors.len()
                )));
            }
            for (d, f) in factors.iter().zip(manifold.factors()) {
                d.validate(f)?;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(PoseDistribution { manifold, components })
    }

    /// Independent product of per-factor distributions.
    pub fn product(manifold: Arc<GroupManifold>, factors: Vec<FactorDistribution>) -> Result<Self> {
        Self::new(manifold, vec![(1.0, factors)])
    }

    pub fn uniform(manifold: Arc<GroupManifold>) -> Self {
        let factors = vec![FactorDistribution::Uniform; manifold.dim()];
        PoseDistribution {
            manifold,
            components: vec![(1.0, factors)],
        }
    }

    pub fn dirac(element: &GroupElement) -> Self {
        let manifold = Arc::clone(element.manifold());
        let factors = element
            .coords()
            .iter()
            .zip(manifold.factors())
            .map(|(c, f)| FactorDistribution::Dirac(natural_coordinate(f, *c)))
            .collect();
        PoseDistribution {
            manifold,
            components: vec![(1.0, factors)],
        }
    }

    pub fn von_mises(mean: f64, kappa: f64) -> Result<Self> {
        Self::product(
            Arc::new(GroupManifold::so2()),
            vec![FactorDistribution::VonMises { mean, kappa }],
        )
    }

    pub fn parse(manifold: Arc<GroupManifold>, text: &str) -> Result<Self> {
        let mut components = Vec::new();
        for comp in text.split('+') {
            let comp = comp.trim();
            let (weight, body) = match comp.split_once('*') {
                Some((w, b)) => (
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidDistribution(format!("bad mixture weight in `{comp}`")))?,
                    b,
                ),
                None => (1.0, comp),
            };
            let factors = body
                .split(';')
                .map(parse_factor_distribution)
                .collect::<Result<Vec<_>>>()?;
            components.push((weight, factors));
        }
        Self::new(manifold, components)
    }

    pub fn manifold(&self) -> &Arc<GroupManifold> {
        &self.manifold
    }

    pub fn components(&self) -> &[(f64, Vec<FactorDistribution>)] {
        &self.components
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        let factors = if self.components.len() == 1 {
            &self.components[0].1
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = &self.components[self.components.len() - 1].1;
            for (w, f) in &self.components {
                acc += w;
                if u < acc {
                    chosen = f;
                    break;
                }
            }
            chosen
        };
        let coords: Vec<f64> = factors
            .iter()
            .zip(self.manifold.factors())
            .map(|(d, f)| d.sample(f, rng))
            .collect();
        self.manifold.element(&coords).expect("sampled coordinates are finite")
    }
}

fn natural_coordinate(factor: &Factor, c: f64) -> f64 {
    match factor {
        Factor::Cyclic(_) => factor.rotation_angle(c),
        _ => c,
    }
}

impl fmt::Display for PoseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let single = self.components.len() == 1 && self.components[0].0 == 1.0;
        for (i, (w, factors)) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, "+")?;
            }
            if !single {
                write!(f, "{w}*")?;
            }
            for (j, d) in factors.iter().enumerate() {
                if j > 0 {
                    write!(f, ";")?;
                }
                write!(f, "{d}")?;
            }
        }
        Ok(())
    }
}

/// Draws from von Mises(`mean`, `kappa`) using the Best–Fisher rejection
/// scheme, with the uniform and Gaussian limits for extreme concentrations.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, mean: f64, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return mean + PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    if kappa > 1e6 {
        let z: f64 = rng.sample(StandardNormal);
        return mean + z / kappa.sqrt();
    }
    let s = if kappa < 1e-5 {
        1.0 / kappa + kappa
    } else {
        let r = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
        let rho = (r - (2.0 * r).sqrt()) / (2.0 * kappa);
        (1.0 + rho * rho) / (2.0 * rho)
    };
    let w = loop {
        let u: f64 = rng.random();
        let z = (PI * u).cos();
        let w = (1.0 + s * z) / (s + z);
        let y = kappa * (s - w);
        let v: f64 = rng.random();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            break w;
        }
    };
    let theta = w.clamp(-1.0, 1.0).acos();
    if rng.random::<f64>() < 0.5 {
        mean - theta
    } else {
        mean + theta
    }
}

/// Frechet variance `E[θ²]` (θ in `(-π, π]`) of a zero-mean von Mises law.
///
/// Evaluated by composite Simpson quadrature over the effective support.
pub fn von_mises_variance(kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return PI * PI / 3.0;
    }
    let half_width = if kappa > 1.0 { (14.0 / kappa.sqrt()).min(PI) } else { PI };
    const INTERVALS: usize = 4000;
    let h = 2.0 * half_width / INTERVALS as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=INTERVALS {
        let theta = -half_width + i as f64 * h;
        let coef = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let half_sin = (0.5 * theta).sin();
        let density = (-2.0 * kappa * half_sin * half_sin).exp();
        num += coef * theta * theta * density;
        den += coef * density;
    }
    num / den
}

/// Concentration whose von Mises Frechet variance equals `variance`.
///
/// Returns `0` for targets at or above the uniform variance `π²/3`.
pub fn kappa_for_variance(variance: f64) -> Result<f64> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::param("variance", format!("must be positive, got {variance}")));
    }
    if variance >= PI * PI / 3.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (-30.0f64, 45.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if von_mises_variance(mid.exp()) > variance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}
