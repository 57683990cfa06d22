use std::f64::consts::TAU;
use std::sync::Arc;

use galign::{GroupElement, GroupManifold};
use proptest::prelude::*;

fn manifolds() -> Vec<Arc<GroupManifold>> {
    [
        "so2",
        "c4",
        "c17",
        "logscale:0.5:2",
        "so2*logscale:0.5:2",
        "c8*logscale:0.8:1.25@2,0.5",
    ]
    .iter()
    .map(|s| Arc::new(s.parse().unwrap()))
    .collect()
}

/// Elements whose log-scale coordinates stay inside a third of the bounds,
/// so that composing three of them never clamps.
fn element(m: &Arc<GroupManifold>, u: &[f64]) -> GroupElement {
    let coords: Vec<f64> = m
        .factors()
        .iter()
        .zip(u)
        .map(|(f, u)| match f.log_bounds() {
            Some((lo, hi)) => lo / 3.0 + u * (hi - lo) / 3.0,
            None => f.from_natural(u * TAU),
        })
        .collect();
    m.element(&coords).unwrap()
}

fn unit2() -> impl Strategy<Value = [f64; 2]> {
    [0.0..1.0f64, 0.0..1.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_axioms(which in 0usize..6, a in unit2(), b in unit2(), c in unit2()) {
        let m = &manifolds()[which];
        let (g, h, k) = (element(m, &a), element(m, &b), element(m, &c));
        let gh = g.distance(&h).unwrap();
        prop_assert_eq!(gh, h.distance(&g).unwrap());
        prop_assert!(gh <= g.distance(&k).unwrap() + k.distance(&h).unwrap() + 1e-12);
        prop_assert_eq!(g.distance(&g).unwrap(), 0.0);
        prop_assert_eq!(gh == 0.0, g == h);
    }

    #[test]
    fn distance_is_bi_invariant(which in 0usize..6, a in unit2(), b in unit2(), c in unit2()) {
        let m = &manifolds()[which];
        let (t, g, h) = (element(m, &a), element(m, &b), element(m, &c));
        let base = g.distance(&h).unwrap();
        let left = t.compose(&g).unwrap().distance(&t.compose(&h).unwrap()).unwrap();
        let right = g.compose(&t).unwrap().distance(&h.compose(&t).unwrap()).unwrap();
        prop_assert!((left - base).abs() <= 1e-12);
        prop_assert!((right - base).abs() <= 1e-12);
    }

    #[test]
    fn representation_is_a_homomorphism(which in 0usize..6, a in unit2(), b in unit2()) {
        let m = &manifolds()[which];
        let (g, h) = (element(m, &a), element(m, &b));
        let lhs = g.compose(&h).unwrap().matrix();
        let rhs = g.matrix() * h.matrix();
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn exp_inverts_log(which in 0usize..6, a in unit2(), b in unit2()) {
        let m = &manifolds()[which];
        let (base, g) = (element(m, &a), element(m, &b));
        let v = base.log(&g).unwrap();
        let back = base.exp(&v).unwrap();
        prop_assert!(back.distance(&g).unwrap() <= 1e-10);
        let norm = m.tangent_norm_sq(&v).sqrt();
        prop_assert!((norm - base.distance(&g).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn inverse_cancels(which in 0usize..6, a in unit2()) {
        let m = &manifolds()[which];
        let g = element(m, &a);
        prop_assert!(g.compose(&g.inverse()).unwrap().distance(&m.identity()).unwrap() <= 1e-12);
    }

    #[test]
    fn cyclic_embeds_isometrically(n in 1u32..40, i in 0u32..40, j in 0u32..40) {
        let c = Arc::new(GroupManifold::cyclic(n).unwrap());
        let (i, j) = (i % n, j % n);
        let dc = c.element(&[i as f64]).unwrap().distance(&c.element(&[j as f64]).unwrap()).unwrap();
        let angle = |k: u32| TAU * k as f64 / n as f64;
        let ds = GroupElement::so2(angle(i)).distance(&GroupElement::so2(angle(j))).unwrap();
        prop_assert!((dc - ds).abs() <= 1e-12);
    }
}
