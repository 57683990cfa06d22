use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::kappa_for_variance;
use crate::error::{Error, Result};
use crate::frechet::{mixture_decomposition, MixtureDecomposition, WeightedPoseSample};
use crate::group::Factor;
use crate::rng::{stream, stream_rng};
use crate::world::{Canonicalizer, Evaluation, GroupGrid};

use super::config::{BootstrapConfig, Selection};
use super::state::DatasetState;
use super::trajectory::{TrajectoryRecord, TrajectoryRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// Variance fell below the floor after this step.
    VarianceCollapsed {
        step: u64,
    },
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: DatasetState,
    pub trajectory: TrajectoryRecord,
    pub stop: StopReason,
    pub canonicalizer: Canonicalizer,
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: DatasetState,
    pub row: TrajectoryRow,
    pub decomposition: MixtureDecomposition,
    /// Ids of the re-aligned specimens, ascending.
    pub updated_ids: Vec<u64>,
}

/// `⌈α·n⌉`, guarding against `α·n` landing a hair above an integer.
pub fn select_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64 - 1e-9).ceil().max(1.0) as usize).min(n)
}

fn select(config: &BootstrapConfig, evals: &[Evaluation], state: &DatasetState, k: usize) -> Vec<usize> {
    let n = evals.len();
    let mut chosen = match config.selection {
        Selection::TopLoss => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                evals[b]
                    .loss
                    .total_cmp(&evals[a].loss)
                    .then(state.specimens[a].id.cmp(&state.specimens[b].id))
            });
            order.truncate(k);
            order
        }
        Selection::Random => {
            let mut rng = stream_rng(config.seed, stream::SELECTION, state.step + 1);
            index::sample(&mut rng, n, k).into_vec()
        }
    };
    chosen.sort_unstable();
    chosen
}

/// One application of the update rule: evaluate every specimen, re-align
/// the selected `⌈α|D|⌉` and account for the resulting variance change.
pub fn bootstrap_step(
    state: &DatasetState,
    config: &BootstrapConfig,
    canonicalizer: &Canonicalizer,
    grid: &GroupGrid,
) -> Result<StepOutput> {
    if state.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let evals: Vec<Evaluation> = state
        .specimens
        .par_iter()
        .map(|x| canonicalizer.evaluate(x, grid, false))
        .collect::<Result<_>>()?;
    let n = state.len();
    let k = select_count(config.alpha, n);
    let chosen = select(config, &evals, state, k);

    // Only the selected predictions are used, so only those are refined.
    let mut next = state.clone();
    let mut is_chosen = vec![false; n];
    for &i in &chosen {
        is_chosen[i] = true;
        let g_hat = if config.refine {
            canonicalizer.canonicalize(&state.specimens[i], grid, true)?
        } else {
            evals[i].g_hat.clone()
        };
        next.specimens[i].apply_correction(&g_hat)?;
    }
    next.step += 1;

    let updated: Vec<_> = chosen.iter().map(|&i| next.specimens[i].current_pose()).collect();
    let kept: Vec<_> = (0..n)
        .filter(|i| !is_chosen[*i])
        .map(|i| next.specimens[i].current_pose())
        .collect();
    let effective_alpha = k as f64 / n as f64;
    let updated = WeightedPoseSample::uniform(updated)?;
    let kept = if kept.is_empty() {
        updated.clone()
    } else {
        WeightedPoseSample::uniform(kept)?
    };
    let decomposition = mixture_decomposition(&kept, &updated, effective_alpha)?;
    let mean_loss = evals.iter().map(|e| e.loss).sum::<f64>() / n as f64;
    let row = TrajectoryRow {
        step: next.step,
        mean: decomposition
            .mean_next
            .as_ref()
            .expect("decomposition records the mixture mean")
            .coords()
            .to_vec(),
        sigma2: decomposition.sigma2_next,
        sigma2_updated: Some(decomposition.sigma2_updated),
        drift_kept: Some(decomposition.drift_kept),
        drift_updated: Some(decomposition.drift_updated),
        residual: Some(decomposition.residual),
        mean_loss: Some(mean_loss),
        n_updated: Some(k),
    };
    let updated_ids = chosen.iter().map(|&i| state.specimens[i].id).collect();
    Ok(StepOutput {
        state: next,
        row,
        decomposition,
        updated_ids,
    })
}

/// Template-update passes preceding a step; a no-op for analytic variants.
fn train(
    canonicalizer: &mut Canonicalizer,
    state: &DatasetState,
    grid: &GroupGrid,
    config: &BootstrapConfig,
) -> Result<()> {
    if canonicalizer.template_state().is_none() {
        return Ok(());
    }
    for _ in 0..config.interval_n {
        let aligned = state
            .specimens
            .par_iter()
            .map(|x| x.corrected(&canonicalizer.canonicalize(x, grid, config.refine)?))
            .collect::<Result<Vec<_>>>()?;
        canonicalizer.template_update(&aligned)?;
    }
    Ok(())
}

fn tune_noise(canonicalizer: &mut Canonicalizer, beta: f64, sigma2: f64) -> Result<()> {
    let factors = canonicalizer.manifold().factors();
    if factors.len() != 1 || !matches!(factors[0], Factor::So2) {
        return Err(Error::Unsupported(
            "beta-controlled noise needs a plain SO(2) manifold".into(),
        ));
    }
    canonicalizer.set_noise_kappa(kappa_for_variance(beta * sigma2)?)
}

/// Runs the bootstrapping loop for `config.steps` steps.
pub fn run(config: &BootstrapConfig, dataset: DatasetState) -> Result<RunOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let manifold = std::sync::Arc::clone(dataset.manifold());
    let grid = config.grid(&manifold)?;
    let mut canonicalizer =
        config
            .canonicalizer
            .build(&manifold, &dataset.specimens, config.temperature, config.seed)?;
    let initial = dataset.summary()?;
    let mut trajectory = TrajectoryRecord::new(manifold.dim());
    trajectory.push(TrajectoryRow::initial(
        dataset.step,
        initial.mean.coords().to_vec(),
        initial.variance,
    ))?;
    let mut sigma2 = initial.variance;
    let mut state = dataset;
    let mut stop = StopReason::Completed;
    if sigma2 < config.variance_floor {
        return Ok(RunOutcome {
            state,
            trajectory,
            stop: StopReason::VarianceCollapsed { step: 0 },
            canonicalizer,
        });
    }
    for _ in 0..config.steps {
        train(&mut canonicalizer, &state, &grid, config)?;
        if let Some(beta) = config.beta {
            tune_noise(&mut canonicalizer, beta, sigma2)?;
        }
        canonicalizer.set_epoch(state.step + 1);
        let out = bootstrap_step(&state, config, &canonicalizer, &grid)?;
        sigma2 = out.row.sigma2;
        trajectory.push(out.row)?;
        state = out.state;
        if sigma2 < config.variance_floor {
            stop = StopReason::VarianceCollapsed { step: state.step };
            break;
        }
    }
    Ok(RunOutcome {
        state,
        trajectory,
        stop,
        canonicalizer,
    })
}
