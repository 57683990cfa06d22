use std::sync::Arc;

use rand::Rng;

use crate::distribution::sample_von_mises;
use crate::error::{Error, Result};
use crate::group::{Factor, GroupElement, GroupManifold};
use crate::rng::{derive_seed, stream, stream_rng};

use super::grid::GroupGrid;
use super::shape::{self, Shape};
use super::specimen::Specimen;

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const REFINE_TOL: f64 = 1e-6;
const REFINE_SWEEPS: usize = 2;

/// Running template(s) of the learned canonicalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateState {
    pub global: Shape,
    /// One template per class when the per-class option is on.
    pub per_class: Option<Vec<Shape>>,
    /// Exponential moving average rate.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CanonicalizerKind {
    /// Always predicts the identity: the no-canonicalization baseline.
    Identity,
    /// Predicts the current pose exactly.
    Oracle,
    /// Current pose perturbed by per-factor noise of concentration `kappa`
    /// and offset by `bias`, so corrected specimens settle around `bias`.
    Noisy {
        kappa: f64,
        bias: GroupElement,
        wrapped: bool,
    },
    /// Grid search of a chamfer score against a running template.
    Template { state: TemplateState },
}

/// Score-based canonicalizer `φ(x) = argmin_g s(ρ(g), x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Canonicalizer {
    kind: CanonicalizerKind,
    manifold: Arc<GroupManifold>,
    temperature: f64,
    seed: u64,
    epoch: u64,
}

/// Prediction and loss for one specimen, computed from a single score pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub g_hat: GroupElement,
    /// `-log P(identity | x)` under the grid posterior.
    pub loss: f64,
}

fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::param("temperature", format!("must be positive, got {t}")))
    }
}

impl Canonicalizer {
    fn build(manifold: Arc<GroupManifold>, kind: CanonicalizerKind, temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        Ok(Canonicalizer {
            kind,
            manifold,
            temperature,
            seed: 0,
            epoch: 0,
        })
    }

    pub fn identity(manifold: Arc<GroupManifold>, temperature: f64) -> Result<Self> {
        Self::build(manifold, CanonicalizerKind::Identity, temperature)
    }

    pub fn oracle(manifold: Arc<GroupManifold>, temperature: f64) -> Result<Self> {
        Self::build(manifold, CanonicalizerKind::Oracle, temperature)
    }

    pub fn noisy(kappa: f64, bias: GroupElement, temperature: f64, seed: u64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::param("noise_kappa", format!("must be positive, got {kappa}")));
        }
        let manifold = Arc::clone(bias.manifold());
        let mut c = Self::build(
            manifold,
            CanonicalizerKind::Noisy {
                kappa,
                bias,
                wrapped: false,
            },
            temperature,
        )?;
        c.seed = seed;
        Ok(c)
    }

    pub fn template(manifold: Arc<GroupManifold>, initial: Shape, temperature: f64) -> Result<Self> {
        if initial.len() < 3 {
            return Err(Error::param("template", "needs at least 3 points"));
        }
        let state = TemplateState {
            global: shape::normalize(&initial),
            per_class: None,
            rate: 0.1,
        };
        Self::build(manifold, CanonicalizerKind::Template { state }, temperature)
    }

    /// Wrapped-normal instead of von Mises noise (Noisy only).
    pub fn with_wrapped_noise(mut self, on: bool) -> Self {
        if let CanonicalizerKind::Noisy { wrapped, .. } = &mut self.kind {
            *wrapped = on;
        }
        self
    }

    /// EMA rate of [`Self::template_update`] (Template only).
    pub fn with_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::param("template_rate", format!("must be in (0, 1], got {rate}")));
        }
        if let CanonicalizerKind::Template { state, .. } = &mut self.kind {
            state.rate = rate;
        }
        Ok(self)
    }

    /// Switches a Template canonicalizer to one template per class.
    pub fn with_per_class(mut self, templates: Vec<Shape>) -> Result<Self> {
        match &mut self.kind {
            CanonicalizerKind::Template { state, .. } => {
                state.per_class = Some(templates.iter().map(|t| shape::normalize(t)).collect());
                Ok(self)
            }
            _ => Err(Error::Unsupported(
                "per-class templates need a Template canonicalizer".into(),
            )),
        }
    }

    pub fn kind(&self) -> &CanonicalizerKind {
        &self.kind
    }

    pub fn manifold(&self) -> &Arc<GroupManifold> {
        &self.manifold
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn template_state(&self) -> Option<&TemplateState> {
        match &self.kind {
            CanonicalizerKind::Template { state, .. } => Some(state),
            _ => None,
        }
    }

    /// Selects the noise realisation; the engine advances it once per step.
    pub fn set_epoch(&mut self, epoch: u64) {
        self.epoch = epoch;
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn set_noise_kappa(&mut self, new_kappa: f64) -> Result<()> {
        match &mut self.kind {
            CanonicalizerKind::Noisy { kappa, .. } => {
                if !(new_kappa >= 0.0 && !new_kappa.is_nan()) {
                    return Err(Error::param("noise_kappa", format!("got {new_kappa}")));
                }
                *kappa = new_kappa;
                Ok(())
            }
            _ => Err(Error::Unsupported(
                "noise concentration needs a Noisy canonicalizer".into(),
            )),
        }
    }

    /// The per-specimen noise element of the current epoch.
    fn noise(&self, x: &Specimen, kappa: f64, wrapped: bool) -> GroupElement {
        let mut rng = stream_rng(derive_seed(self.seed, stream::NOISE, self.epoch), stream::NOISE, x.id);
        let sigma = if kappa > 0.0 {
            kappa.sqrt().recip()
        } else {
            f64::INFINITY
        };
        let coords: Vec<f64> = self
            .manifold
            .factors()
            .iter()
            .map(|f| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                let natural = match f {
                    Factor::LogScale { .. } => z * sigma.min(1e3),
                    _ if wrapped => z * sigma.min(1e3),
                    _ => sample_von_mises(&mut rng, 0.0, kappa),
                };
                f.from_natural(natural)
            })
            .collect();
        self.manifold.element(&coords).expect("noise coordinates are finite")
    }

    /// The analytic minimiser of the score for non-template variants.
    fn target(&self, x: &Specimen) -> Option<GroupElement> {
        match &self.kind {
            CanonicalizerKind::Identity => Some(self.manifold.identity()),
            CanonicalizerKind::Oracle => Some(x.current_pose()),
            CanonicalizerKind::Noisy { kappa, bias, wrapped } => {
                let noise = self.noise(x, *kappa, *wrapped);
                let g = bias
                    .inverse()
                    .compose(&noise)
                    .and_then(|g| g.compose(&x.current_pose()));
                Some(g.expect("same manifold"))
            }
            CanonicalizerKind::Template { .. } => None,
        }
    }

    fn template_for(&self, state: &'_ TemplateState, x: &Specimen) -> Result<Shape> {
        match &state.per_class {
            Some(t) => t
                .get(x.label)
                .cloned()
                .ok_or_else(|| Error::InvalidSample(format!("no template for class {}", x.label))),
            None => Ok(state.global.clone()),
        }
    }

    fn template_score(template: &[nalgebra::Point2<f64>], x: &Specimen, pose: &GroupElement, g: &GroupElement) -> f64 {
        let p = pose.compose(&g.inverse()).expect("same manifold");
        shape::chamfer_under(&p.matrix(), &x.canonical, template)
    }

    /// `s(ρ(g), x)`: squared distance to the analytic target, or the chamfer
    /// distance between `ρ(g)⁻¹·x` and the template.
    pub fn score(&self, g: &GroupElement, x: &Specimen) -> Result<f64> {
        if **g.manifold() != *self.manifold {
            return Err(Error::ManifoldMismatch {
                left: g.manifold().to_string(),
                right: self.manifold.to_string(),
            });
        }
        match &self.kind {
            CanonicalizerKind::Template { state, .. } => {
                let t = self.template_for(state, x)?;
                Ok(Self::template_score(&t, x, &x.current_pose(), g))
            }
            _ => {
                let target = self.target(x).expect("analytic variant");
                Ok(target.distance_sq_unchecked(g))
            }
        }
    }

    /// Scores of every grid element, in grid order.
    pub fn scores(&self, x: &Specimen, grid: &GroupGrid) -> Result<Vec<f64>> {
        if **grid.manifold() != *self.manifold {
            return Err(Error::ManifoldMismatch {
                left: grid.manifold().to_string(),
                right: self.manifold.to_string(),
            });
        }
        Ok(match &self.kind {
            CanonicalizerKind::Template { state, .. } => {
                let t = self.template_for(state, x)?;
                let pose = x.current_pose();
                grid.elements()
                    .iter()
                    .map(|g| Self::template_score(&t, x, &pose, g))
                    .collect()
            }
            _ => {
                let target = self.target(x).expect("analytic variant");
                grid.elements()
                    .iter()
                    .map(|g| target.distance_sq_unchecked(g))
                    .collect()
            }
        })
    }

    /// Softmax of `-score / temperature` over the grid.
    pub fn posterior(&self, x: &Specimen, grid: &GroupGrid) -> Result<Vec<f64>> {
        let s = self.scores(x, grid)?;
        let (lse, min) = self.log_partition(&s);
        Ok(s.iter().map(|v| (-(v - min) / self.temperature - lse).exp()).collect())
    }

    /// `ln Σ exp(-(s_i - min)/T)` and `min`.
    fn log_partition(&self, scores: &[f64]) -> (f64, f64) {
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = scores.iter().map(|v| (-(v - min) / self.temperature).exp()).sum();
        (sum.ln(), min)
    }

    fn identity_loss(&self, scores: &[f64], grid: &GroupGrid) -> f64 {
        let (lse, min) = self.log_partition(scores);
        ((scores[grid.identity_index()] - min) / self.temperature + lse).max(0.0)
    }

    /// Mean of `-log P(identity | x)` over the batch; zero for an empty batch.
    pub fn prior_loss(&self, batch: &[Specimen], grid: &GroupGrid) -> Result<f64> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for x in batch {
            total += self.identity_loss(&self.scores(x, grid)?, grid);
        }
        Ok(total / batch.len() as f64)
    }

    /// First grid index whose score is within a relative `1e-12` of the
    /// minimum, i.e. the tied minimiser with the smallest coordinates.
    fn grid_argmin(scores: &[f64]) -> usize {
        let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let slack = 1e-12 * min.abs().max(1e-300);
        scores.iter().position(|s| *s <= min + slack).unwrap_or(0)
    }

    /// `argmin_g s(ρ(g), x)` over the grid, optionally refined by
    /// golden-section coordinate descent on continuous factors.
    ///
    /// Analytic variants return their exact minimiser.
    pub fn canonicalize(&self, x: &Specimen, grid: &GroupGrid, refine: bool) -> Result<GroupElement> {
        if let Some(t) = self.target(x) {
            return Ok(t);
        }
        let scores = self.scores(x, grid)?;
        self.template_argmin(x, grid, &scores, refine)
    }

    fn template_argmin(&self, x: &Specimen, grid: &GroupGrid, scores: &[f64], refine: bool) -> Result<GroupElement> {
        let best = Self::grid_argmin(scores);
        let start = grid.elements()[best].clone();
        if !refine {
            return Ok(start);
        }
        let CanonicalizerKind::Template { state, .. } = &self.kind else {
            unreachable!("only templates are searched")
        };
        let template = self.template_for(state, x)?;
        let pose = x.current_pose();
        let eval = |c: &[f64]| -> f64 {
            let g = self.manifold.element(c).expect("finite");
            Self::template_score(&template, x, &pose, &g)
        };
        let mut coords: Vec<f64> = start.coords().to_vec();
        let mut value = scores[best];
        for _ in 0..REFINE_SWEEPS {
            for (i, f) in self.manifold.factors().iter().enumerate() {
                if !f.is_continuous() {
                    continue;
                }
                let h = grid.spacing(i);
                let (mut lo, mut hi) = (coords[i] - h, coords[i] + h);
                if let Some((a, b)) = f.log_bounds() {
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
                let mut probe = coords.clone();
                let (u, fu) = golden_section(lo, hi, |u| {
                    probe[i] = u;
                    eval(&probe)
                });
                if fu < value {
                    coords[i] = u;
                    value = fu;
                }
            }
        }
        self.manifold.element(&coords)
    }

    /// Prediction and identity loss from one pass of grid scores.
    pub fn evaluate(&self, x: &Specimen, grid: &GroupGrid, refine: bool) -> Result<Evaluation> {
        let scores = self.scores(x, grid)?;
        let loss = self.identity_loss(&scores, grid);
        let g_hat = match self.target(x) {
            Some(t) => t,
            None => self.template_argmin(x, grid, &scores, refine)?,
        };
        Ok(Evaluation { g_hat, loss })
    }

    /// One EMA step of the template(s) towards the mean of an already
    /// canonicalized batch. Empty batches leave the state untouched.
    pub fn template_update(&mut self, canonicalized: &[Specimen]) -> Result<()> {
        let CanonicalizerKind::Template { state, .. } = &mut self.kind else {
            return Err(Error::Unsupported(
                "template_update needs a Template canonicalizer".into(),
            ));
        };
        if canonicalized.is_empty() {
            return Ok(());
        }
        let observed: Vec<(usize, Shape)> = canonicalized.iter().map(|x| (x.label, x.observed())).collect();
        let rate = state.rate;
        // Templates are renormalised after blending so that scale keeps the
        // unit-disc convention of canonical shapes.
        let blend = |t: &mut Shape, mean: &Shape| {
            for (p, q) in t.iter_mut().zip(mean) {
                *p = nalgebra::Point2::from(p.coords * (1.0 - rate) + q.coords * rate);
            }
            *t = shape::normalize(t);
        };
        for (_, s) in &observed {
            if s.len() != state.global.len() {
                return Err(Error::InvalidSample(format!(
                    "shape has {} points, template has {}",
                    s.len(),
                    state.global.len()
                )));
            }
        }
        match &mut state.per_class {
            Some(templates) => {
                for (label, t) in templates.iter_mut().enumerate() {
                    if let Some(mean) = shape::mean_shape(observed.iter().filter(|(l, _)| *l == label).map(|(_, s)| s))
                    {
                        blend(t, &mean);
                    }
                }
            }
            None => {
                let mean = shape::mean_shape(observed.iter().map(|(_, s)| s)).expect("non-empty");
                blend(&mut state.global, &mean);
            }
        }
        Ok(())
    }
}

/// Minimises a unimodal-on-bracket function; returns `(argmin, min)`.
fn golden_section(mut a: f64, mut b: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > REFINE_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frechet::{frechet_mean, FrechetOptions, WeightedPoseSample};
    use crate::world::shape::radial_shape;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn so2() -> Arc<GroupManifold> {
        Arc::new(GroupManifold::so2())
    }

    fn blob() -> Shape {
        shape::normalize(&radial_shape(&[(1, 0.3, 0.4), (3, 0.1, 1.0)]))
    }

    fn square() -> Shape {
        shape::normalize(&radial_shape(&[(4, 0.2, 0.0)]))
    }

    fn specimen(id: u64, theta: f64) -> Specimen {
        Specimen::new(id, 0, blob(), GroupElement::so2(theta))
    }

    #[test]
    fn oracle_returns_current_pose_and_scores_zero_there() {
        let c = Canonicalizer::oracle(so2(), 0.01).unwrap();
        let mut x = specimen(1, 2.0);
        x.apply_correction(&GroupElement::so2(0.5)).unwrap();
        let grid = GroupGrid::uniform(so2(), 64).unwrap();
        let g = c.canonicalize(&x, &grid, false).unwrap();
        assert_abs_diff_eq!(g.coords()[0], 1.5, epsilon = 1e-15);
        assert_eq!(c.score(&g, &x).unwrap(), 0.0);
        assert!(c.score(&GroupElement::so2(1.49), &x).unwrap() > 0.0);
    }

    #[test]
    fn oracle_posterior_concentrates_on_true_cell() {
        let c = Canonicalizer::oracle(so2(), 0.01).unwrap();
        let grid = GroupGrid::uniform(so2(), 16).unwrap();
        let x = specimen(0, grid.elements()[10].coords()[0]);
        let p = c.posterior(&x, &grid).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(p[10] >= 0.99);
        let canonical = specimen(0, 0.0);
        assert!(c.prior_loss(&[canonical], &grid).unwrap() <= -(0.99f64.ln()));
    }

    #[test]
    fn flat_posterior_in_high_temperature_limit() {
        let c = Canonicalizer::oracle(so2(), 1e12).unwrap();
        let grid = GroupGrid::uniform(so2(), 17).unwrap();
        let x = specimen(0, 1.0);
        let p = c.posterior(&x, &grid).unwrap();
        let kl: f64 = p.iter().map(|q| q * (q * 17.0).ln()).sum();
        assert!(kl < 1e-6);
        assert_abs_diff_eq!(c.prior_loss(&[x], &grid).unwrap(), 17f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn misaligned_batch_has_larger_loss() {
        let c = Canonicalizer::oracle(so2(), 0.1).unwrap();
        let grid = GroupGrid::uniform(so2(), 64).unwrap();
        let batch: Vec<Specimen> = (0..20).map(|i| specimen(i, 0.3 * i as f64 + 0.1)).collect();
        let fixed: Vec<Specimen> = batch
            .iter()
            .map(|x| x.corrected(&c.canonicalize(x, &grid, false).unwrap()).unwrap())
            .collect();
        assert!(c.prior_loss(&batch, &grid).unwrap() > c.prior_loss(&fixed, &grid).unwrap());
    }

    fn mean_error(c: &Canonicalizer, n: u64) -> (GroupElement, GroupElement) {
        let grid = GroupGrid::uniform(so2(), 16).unwrap();
        let mut errors = Vec::new();
        let mut residuals = Vec::new();
        for id in 0..n {
            let x = specimen(id, id as f64 * 0.7);
            let g = c.canonicalize(&x, &grid, false).unwrap();
            errors.push(g.compose(&x.true_pose.inverse()).unwrap());
            residuals.push(x.corrected(&g).unwrap().current_pose());
        }
        let mean = |v: Vec<GroupElement>| {
            frechet_mean(&WeightedPoseSample::uniform(v).unwrap(), &FrechetOptions::default())
                .unwrap()
                .mean
        };
        (mean(errors), mean(residuals))
    }

    #[test]
    fn unbiased_noise_centres_on_identity() {
        let c = Canonicalizer::noisy(100.0, GroupElement::so2(0.0), 0.1, 11).unwrap();
        let (err, _) = mean_error(&c, 10_000);
        assert!(err.distance(&GroupElement::so2(0.0)).unwrap() < 0.03);
    }

    #[test]
    fn biased_noise_leaves_specimens_tilted_by_bias() {
        let bias = GroupElement::so2(0.3);
        let c = Canonicalizer::noisy(100.0, bias.clone(), 0.1, 11).unwrap();
        let (err, residual) = mean_error(&c, 10_000);
        assert!(err.distance(&bias.inverse()).unwrap() < 0.03);
        assert!(residual.distance(&bias).unwrap() < 0.03);
    }

    #[test]
    fn noise_depends_on_epoch_only_through_stream() {
        let mut c = Canonicalizer::noisy(10.0, GroupElement::so2(0.0), 0.1, 5).unwrap();
        let grid = GroupGrid::uniform(so2(), 8).unwrap();
        let x = specimen(3, 1.0);
        let a = c.canonicalize(&x, &grid, false).unwrap();
        assert_eq!(a, c.canonicalize(&x, &grid, false).unwrap());
        c.set_epoch(1);
        assert_ne!(a, c.canonicalize(&x, &grid, false).unwrap());
    }

    #[test]
    fn template_minimum_at_identity_for_matching_shape() {
        let c = Canonicalizer::template(so2(), blob(), 0.05).unwrap();
        let grid = GroupGrid::uniform(so2(), 64).unwrap();
        let x = specimen(0, 0.0);
        let s = c.scores(&x, &grid).unwrap();
        assert!(s.iter().all(|v| s[grid.identity_index()] <= *v));
        assert!(c.canonicalize(&x, &grid, true).unwrap().is_identity());
    }

    #[test]
    fn template_refinement_recovers_off_grid_pose() {
        let c = Canonicalizer::template(so2(), blob(), 0.05).unwrap();
        let grid = GroupGrid::uniform(so2(), 36).unwrap();
        let x = specimen(0, 1.2345);
        let coarse = c.canonicalize(&x, &grid, false).unwrap();
        let fine = c.canonicalize(&x, &grid, true).unwrap();
        let truth = GroupElement::so2(1.2345);
        assert!(fine.distance(&truth).unwrap() < 1e-4);
        assert!(fine.distance(&truth).unwrap() <= coarse.distance(&truth).unwrap());
    }

    #[test]
    fn symmetric_shape_scores_are_periodic() {
        let c = Canonicalizer::template(so2(), square(), 0.05).unwrap();
        let x = Specimen::new(0, 0, square(), GroupElement::so2(0.2));
        for k in 0..8 {
            let g = GroupElement::so2(0.1 * k as f64);
            let h = GroupElement::so2(0.1 * k as f64 + TAU / 4.0);
            assert_abs_diff_eq!(c.score(&g, &x).unwrap(), c.score(&h, &x).unwrap(), epsilon = 1e-12);
        }
        let grid = GroupGrid::uniform(so2(), 64).unwrap();
        let g = c.canonicalize(&x, &grid, true).unwrap();
        let nearest = (0..4)
            .map(|k| g.distance(&GroupElement::so2(0.2 + TAU * k as f64 / 4.0)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < TAU / 64.0);
        assert!(g.coords()[0] < TAU / 4.0);
    }

    #[test]
    fn template_ema_converges_and_rejects_other_variants() {
        let target = blob();
        let start = radial_shape(&[(2, 0.2, 0.0)]);
        let mut c = Canonicalizer::template(so2(), start, 0.05).unwrap();
        let batch = vec![specimen(0, 0.0), specimen(1, 0.0)];
        c.template_update(&[]).unwrap();
        for _ in 0..200 {
            c.template_update(&batch).unwrap();
        }
        let t = &c.template_state().unwrap().global;
        let dev = t.iter().zip(&target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev}");
        let mut o = Canonicalizer::oracle(so2(), 0.1).unwrap();
        assert!(o.template_update(&batch).is_err());
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(Canonicalizer::oracle(so2(), 0.0).is_err());
        assert!(Canonicalizer::noisy(0.0, GroupElement::so2(0.0), 0.1, 0).is_err());
        assert!(Canonicalizer::template(so2(), vec![], 0.1).is_err());
    }
}
