use std::f64::consts::TAU;
use std::sync::Arc;

use galign::engine::{bootstrap_step, BootstrapConfig, CanonicalizerSpec, DatasetState, Selection};
use galign::rng::stream_rng;
use galign::world::shape;
use galign::world::{
    evaluation_grid, generate_dataset, generate_test_set, robustness, toy_classify, Canonicalizer, ClassTemplates,
    DatasetSpec, GroupGrid,
};
use galign::{GroupElement, GroupManifold, PoseDistribution, Specimen};
use proptest::prelude::*;
use rand::Rng;

fn roto_scale() -> Arc<GroupManifold> {
    Arc::new("so2*logscale:0.5:2".parse().unwrap())
}

fn dataset(pose: &str, classes: usize, per_class: usize, seed: u64) -> galign::world::DatasetFile {
    let m = roto_scale();
    generate_dataset(&DatasetSpec::new(
        classes,
        per_class,
        PoseDistribution::parse(m, pose).unwrap(),
        seed,
    ))
    .unwrap()
}

fn element(m: &Arc<GroupManifold>, theta: f64, u: f64) -> GroupElement {
    m.element(&[theta, u]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn template_score_is_equivariant(
        i in 0usize..40,
        a in 0.0..6.3f64, b in 0.0..6.3f64, c in 0.0..6.3f64,
        u in -0.17..0.17f64, v in -0.17..0.17f64, w in -0.17..0.17f64,
    ) {
        let m = roto_scale();
        let d = dataset("uniform;uniform", 4, 10, 3);
        let template = Canonicalizer::template(Arc::clone(&m), d.class_shapes[1].clone(), 0.1).unwrap();
        let x = Specimen { true_pose: element(&m, a, u), ..d.specimens[i].clone() };
        let g = element(&m, b, v);
        let h = element(&m, c, w);
        let lhs = template.score(&g, &x.transformed(&h).unwrap()).unwrap();
        let rhs = template.score(&h.inverse().compose(&g).unwrap(), &x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn oracle_is_an_orbit_canonicalizer(i in 0usize..40, a in 0.0..6.3f64, u in -0.3..0.3f64) {
        let m = roto_scale();
        let d = dataset("vonmises:0:1;normal:0:0.1", 4, 10, 5);
        let oracle = Canonicalizer::oracle(Arc::clone(&m), 0.1).unwrap();
        let grid = GroupGrid::uniform(Arc::clone(&m), 8).unwrap();
        let x = Specimen { true_pose: m.identity(), ..d.specimens[i].clone() };
        let g = element(&m, a, u);
        let phi = oracle.canonicalize(&x.transformed(&g).unwrap(), &grid, false).unwrap();
        prop_assert!(phi.distance(&g).unwrap() <= 1e-12);
    }
}

#[test]
fn exact_corrections_reproduce_canonical_points() {
    let d = dataset("uniform;uniform", 3, 20, 8);
    let m = Arc::clone(&d.manifold);
    let oracle = Canonicalizer::oracle(Arc::clone(&m), 0.1).unwrap();
    let grid = GroupGrid::uniform(m, 8).unwrap();
    for x in &d.specimens {
        let mut y = x.clone();
        y.apply_correction(&oracle.canonicalize(x, &grid, false).unwrap())
            .unwrap();
        for (p, q) in y.observed().iter().zip(&y.canonical) {
            assert!((p.x - q.x).abs() <= 1e-12 && (p.y - q.y).abs() <= 1e-12);
        }
    }
}

#[test]
fn classifier_is_invariant_under_oracle_and_correct_on_templates() {
    let d = dataset("uniform;dirac:0", 6, 10, 11);
    let m = Arc::clone(&d.manifold);
    let templates = ClassTemplates::new(d.class_shapes.clone()).unwrap();
    let oracle = Canonicalizer::oracle(Arc::clone(&m), 0.1).unwrap();
    let grid = GroupGrid::uniform(Arc::clone(&m), 8).unwrap();
    for (label, shape) in d.class_shapes.iter().enumerate() {
        let x = Specimen::new(0, label, shape.clone(), m.identity());
        assert_eq!(toy_classify(&x, &oracle, &grid, false, &templates).unwrap(), label);
    }
    let cells = evaluation_grid(Arc::clone(&m), 17, &[1.0, 1.125, 1.25]).unwrap();
    let test = generate_test_set(&d, 5, 2);
    let acc = robustness(&test, &oracle, &grid, false, &templates, &cells).unwrap();
    assert_eq!(acc.len(), 51);
    assert!(acc.iter().all(|c| c.predictions == acc[0].predictions));
}

#[test]
fn identity_baseline_degrades_off_identity() {
    let d = dataset("uniform;dirac:0", 6, 10, 11);
    let m = Arc::clone(&d.manifold);
    let templates = ClassTemplates::new(d.class_shapes.clone()).unwrap();
    let identity = Canonicalizer::identity(Arc::clone(&m), 0.1).unwrap();
    let grid = GroupGrid::uniform(Arc::clone(&m), 8).unwrap();
    let cells = evaluation_grid(Arc::clone(&m), 17, &[1.0, 1.125, 1.25]).unwrap();
    let test = generate_test_set(&d, 5, 2);
    let acc = robustness(&test, &identity, &grid, false, &templates, &cells).unwrap();
    let at_identity = acc[cells.identity_index()].accuracy;
    let off: f64 = acc
        .iter()
        .filter(|c| c.cell != cells.identity_index())
        .map(|c| c.accuracy)
        .sum::<f64>()
        / 50.0;
    assert!(acc.iter().all(|c| c.accuracy <= at_identity));
    assert!(off < at_identity - 0.3, "identity {at_identity}, off {off}");
}

#[test]
fn template_updates_reduce_prior_loss_on_their_batch() {
    let d = dataset("dirac:0;dirac:0", 3, 30, 21);
    let m = Arc::clone(&d.manifold);
    let grid = GroupGrid::uniform_with(Arc::clone(&m), 32, 5).unwrap();
    let start = shape::transform(&d.class_shapes[1], &m.element(&[1.0, 0.0]).unwrap());
    let mut c = Canonicalizer::template(Arc::clone(&m), start, 0.05).unwrap();
    let batch = &d.specimens;
    let mut losses = vec![c.prior_loss(batch, &grid).unwrap()];
    for _ in 0..50 {
        c.template_update(batch).unwrap();
        losses.push(c.prior_loss(batch, &grid).unwrap());
    }
    assert!(losses[50] < 0.9 * losses[0], "{losses:?}");
    let mut best = f64::INFINITY;
    for &l in &losses {
        assert!(l <= best + 0.06, "{losses:?}");
        best = best.min(l);
    }
    assert!(losses[40..].windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
}

#[test]
fn noisy_prediction_error_statistics() {
    let m = Arc::new(GroupManifold::so2());
    let mut rng = stream_rng(1, 2, 3);
    let state = DatasetState::new(
        (0..2000)
            .map(|i| {
                Specimen::new(
                    i,
                    0,
                    shape::radial_shape(&[(1, 0.3, 0.0)]),
                    m.element(&[rng.random_range(0.0..TAU)]).unwrap(),
                )
            })
            .collect(),
    )
    .unwrap();
    let config = BootstrapConfig {
        alpha: 1.0,
        selection: Selection::Random,
        canonicalizer: CanonicalizerSpec::Noisy {
            kappa: 100.0,
            bias: vec![0.3],
            wrapped: false,
        },
        ..BootstrapConfig::default()
    };
    let c = config.canonicalizer.build(&m, &state.specimens, 0.1, 4).unwrap();
    let out = bootstrap_step(&state, &config, &c, &config.grid(&m).unwrap()).unwrap();
    let mean = galign::GroupElement::new(Arc::clone(&m), &out.row.mean).unwrap();
    assert!(mean.distance(&GroupElement::so2(0.3)).unwrap() < 0.03);
}

#[test]
fn template_classifier_is_orbit_constant_on_most_specimens() {
    let m: Arc<GroupManifold> = Arc::new(GroupManifold::so2());
    let spec = DatasetSpec::new(10, 100, PoseDistribution::parse(Arc::clone(&m), "dirac:0").unwrap(), 31);
    let d = generate_dataset(&spec).unwrap();
    let grid = GroupGrid::uniform(Arc::clone(&m), 64).unwrap();
    let observed: Vec<_> = d.specimens.iter().map(Specimen::observed).collect();
    let c = Canonicalizer::template(Arc::clone(&m), shape::mean_shape(&observed).unwrap(), 0.1).unwrap();
    let templates = ClassTemplates::new(d.class_shapes.clone()).unwrap();
    let mut rng = stream_rng(31, 0, 0);
    let constant = d
        .specimens
        .iter()
        .filter(|x| {
            let base = toy_classify(x, &c, &grid, true, &templates).unwrap();
            (0..4).all(|_| {
                let g = m.element(&[rng.random_range(0.0..TAU)]).unwrap();
                toy_classify(&x.transformed(&g).unwrap(), &c, &grid, true, &templates).unwrap() == base
            })
        })
        .count();
    assert!(constant >= 950, "{constant}/1000");
}
