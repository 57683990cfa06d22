use std::sync::Arc;

use galign::engine::{
    bootstrap_step, contraction_rate, estimate_lambda, predict_variance, run, select_count, BootstrapConfig,
    CanonicalizerSpec, DatasetState, Selection, StopReason, TrajectoryRecord,
};
use galign::frechet::{frechet_mean, FrechetOptions};
use galign::verify::pose_dataset;
use galign::WeightedPoseSample;

fn oracle(alpha: f64, selection: Selection, steps: usize) -> BootstrapConfig {
    BootstrapConfig {
        alpha,
        selection,
        steps,
        canonicalizer: CanonicalizerSpec::Oracle,
        ..BootstrapConfig::default()
    }
}

fn noisy(alpha: f64, kappa: f64, steps: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        alpha,
        steps,
        seed,
        selection: Selection::Random,
        canonicalizer: CanonicalizerSpec::Noisy {
            kappa,
            bias: vec![],
            wrapped: false,
        },
        ..BootstrapConfig::default()
    }
}

fn variance_of(state: &DatasetState) -> f64 {
    let sample = WeightedPoseSample::uniform(state.poses()).unwrap();
    frechet_mean(&sample, &FrechetOptions::default()).unwrap().variance
}

#[test]
fn oracle_full_update_collapses_uniform_poses_in_one_step() {
    let state = pose_dataset(1000, "uniform", 3).unwrap();
    let out = run(&oracle(1.0, Selection::TopLoss, 5), state).unwrap();
    let s = out.trajectory.sigma2();
    assert!((s[0] - std::f64::consts::PI.powi(2) / 3.0).abs() < 0.3, "{}", s[0]);
    assert_eq!(s.len(), 2);
    assert!(s[1] < 1e-12);
    assert_eq!(out.stop, StopReason::VarianceCollapsed { step: 1 });
}

#[test]
fn ceiling_rule_updates_one_of_fifty() {
    assert_eq!(select_count(0.01, 50), 1);
    assert_eq!(select_count(0.2, 50), 10);
    assert_eq!(select_count(0.07, 100), 7);
    let state = pose_dataset(50, "vonmises:0:2", 4).unwrap();
    let config = oracle(0.01, Selection::TopLoss, 1);
    let m = Arc::clone(state.manifold());
    let c = config
        .canonicalizer
        .build(&m, &state.specimens, config.temperature, 0)
        .unwrap();
    let out = bootstrap_step(&state, &config, &c, &config.grid(&m).unwrap()).unwrap();
    assert_eq!(out.updated_ids.len(), 1);
    assert_eq!(out.row.n_updated, Some(1));
    let changed = state
        .specimens
        .iter()
        .zip(&out.state.specimens)
        .filter(|(a, b)| a.correction != b.correction)
        .count();
    assert_eq!(changed, 1);
}

#[test]
fn step_preserves_cardinality_and_leaves_unselected_specimens_untouched() {
    let state = pose_dataset(300, "vonmises:0.5:1", 5).unwrap();
    for selection in [Selection::TopLoss, Selection::Random] {
        let config = BootstrapConfig {
            selection,
            ..noisy(0.1, 20.0, 1, 8)
        };
        let m = Arc::clone(state.manifold());
        let mut c = config
            .canonicalizer
            .build(&m, &state.specimens, config.temperature, 8)
            .unwrap();
        c.set_epoch(1);
        let out = bootstrap_step(&state, &config, &c, &config.grid(&m).unwrap()).unwrap();
        assert_eq!(out.state.len(), state.len());
        assert_eq!(out.state.step, state.step + 1);
        assert_eq!(out.updated_ids.len(), 30);
        for (a, b) in state.specimens.iter().zip(&out.state.specimens) {
            if out.updated_ids.contains(&a.id) {
                assert_ne!(a.correction, b.correction);
            } else {
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn top_loss_selects_the_worst_aligned_specimens() {
    let state = pose_dataset(200, "vonmises:0:1", 6).unwrap();
    let config = oracle(0.1, Selection::TopLoss, 1);
    let m = Arc::clone(state.manifold());
    let c = config
        .canonicalizer
        .build(&m, &state.specimens, config.temperature, 0)
        .unwrap();
    let out = bootstrap_step(&state, &config, &c, &config.grid(&m).unwrap()).unwrap();
    let id = m.identity();
    let mut dist: Vec<(f64, u64)> = state
        .specimens
        .iter()
        .map(|x| (x.current_pose().distance(&id).unwrap(), x.id))
        .collect();
    dist.sort_by(|a, b| b.0.total_cmp(&a.0));
    let worst: Vec<u64> = dist[..20].iter().map(|d| d.1).collect();
    let mut picked = out.updated_ids.clone();
    picked.sort_unstable();
    let mut expected = worst.clone();
    expected.sort_unstable();
    // Posterior loss is monotone in distance only up to grid effects.
    let overlap = picked.iter().filter(|i| expected.contains(i)).count();
    assert!(overlap >= 18, "{overlap}");
}

#[test]
fn random_noisy_updates_shrink_variance_every_step() {
    let state = pose_dataset(2000, "vonmises:0:2", 11).unwrap();
    let out = run(&noisy(0.05, 100.0, 50, 11), state).unwrap();
    let s = out.trajectory.sigma2();
    assert_eq!(s.len(), 51);
    assert!(s.windows(2).all(|w| w[1] < w[0]), "{s:?}");
    assert!(s[50] < 0.15 * s[0], "{s:?}");
}

#[test]
fn zero_steps_records_only_the_initial_state() {
    let state = pose_dataset(100, "vonmises:0:2", 12).unwrap();
    let expected = variance_of(&state);
    let out = run(&oracle(0.5, Selection::TopLoss, 0), state).unwrap();
    assert_eq!(out.trajectory.rows().len(), 1);
    let row = &out.trajectory.rows()[0];
    assert_eq!(row.step, 0);
    assert!((row.sigma2 - expected).abs() < 1e-12);
    assert!(row.n_updated.is_none() && row.drift_kept.is_none());
    assert_eq!(out.stop, StopReason::Completed);
}

#[test]
fn oracle_random_selection_tracks_the_variance_recurrence() {
    let state = pose_dataset(5000, "vonmises:0:1", 13).unwrap();
    let out = run(&oracle(0.2, Selection::Random, 10), state).unwrap();
    let rows = out.trajectory.rows();
    for w in rows.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        assert!(next.sigma2_updated.unwrap() < 1e-20);
        let predicted = predict_variance(prev.sigma2, 0.0, 0.2).unwrap();
        // Kept subset is a random 80%: its variance and mean wander from the
        // full set by sampling error only.
        let bound =
            next.drift_kept.unwrap() + next.drift_updated.unwrap() + next.residual.unwrap().abs() + 0.05 * prev.sigma2;
        assert!(
            (next.sigma2 - predicted).abs() <= bound,
            "step {}: {} vs {predicted}",
            next.step,
            next.sigma2
        );
    }
    let fit = estimate_lambda(&out.trajectory.sigma2(), 0..rows.len()).unwrap();
    assert!((fit.lambda - 0.8).abs() < 0.02, "{fit:?}");
}

#[test]
fn beta_controlled_run_matches_the_contraction_rate() {
    let config = BootstrapConfig {
        beta: Some(0.25),
        steps: 60,
        ..noisy(0.1, 100.0, 60, 5)
    };
    let out = run(&config, pose_dataset(2000, "vonmises:0:5", 5).unwrap()).unwrap();
    let s = out.trajectory.sigma2();
    let fit = estimate_lambda(&s, 0..s.len()).unwrap();
    let lambda = contraction_rate(0.1, 0.25).unwrap();
    assert!((lambda - 0.925).abs() < 1e-15);
    assert!((fit.lambda - lambda).abs() < 0.02, "{fit:?}");
    assert!(fit.r_squared >= 0.99, "{fit:?}");
}

#[test]
fn runs_are_bit_identical_under_a_seed() {
    let a = run(&noisy(0.1, 30.0, 15, 21), pose_dataset(400, "vonmises:1:1", 2).unwrap()).unwrap();
    let b = run(&noisy(0.1, 30.0, 15, 21), pose_dataset(400, "vonmises:1:1", 2).unwrap()).unwrap();
    assert_eq!(a.trajectory.to_csv().unwrap(), b.trajectory.to_csv().unwrap());
    assert_eq!(a.state.specimens, b.state.specimens);
    let c = run(&noisy(0.1, 30.0, 15, 22), pose_dataset(400, "vonmises:1:1", 2).unwrap()).unwrap();
    assert_ne!(a.trajectory.to_csv().unwrap(), c.trajectory.to_csv().unwrap());
}

#[test]
fn recorded_variance_is_recomputable_from_the_final_state() {
    let out = run(&noisy(0.2, 50.0, 12, 9), pose_dataset(600, "vonmises:0:3", 9).unwrap()).unwrap();
    let last = out.trajectory.rows().last().unwrap();
    assert!((last.sigma2 - variance_of(&out.state)).abs() < 1e-10);
    let parsed = TrajectoryRecord::from_csv(&out.trajectory.to_csv().unwrap()).unwrap();
    assert_eq!(parsed.sigma2(), out.trajectory.sigma2());
}

#[test]
fn biased_canonicalizer_pulls_the_mean_towards_the_bias() {
    let config = BootstrapConfig {
        canonicalizer: CanonicalizerSpec::Noisy {
            kappa: 100.0,
            bias: vec![0.3],
            wrapped: false,
        },
        ..noisy(0.5, 100.0, 50, 17)
    };
    let out = run(&config, pose_dataset(2000, "vonmises:0:2", 17).unwrap()).unwrap();
    let rows = out.trajectory.rows();
    let d = |row: &galign::TrajectoryRow| (row.mean[0] - 0.3).abs();
    assert!(d(rows.last().unwrap()) < 0.05);
    assert!(d(rows.last().unwrap()) < d(&rows[0]));
}

#[test]
fn empty_dataset_is_rejected() {
    assert!(DatasetState::new(vec![]).is_err());
}
