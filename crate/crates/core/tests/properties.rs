use poscub::cubature::Cubature;
use poscub::function_space::FunctionSpace;
use poscub::geometry::{Domain, WeightFunction};
use poscub::moments::analytic_moments;
use poscub::pipeline::{construct, ConstructionConfig};
use poscub::steinitz::{reduce, SteinitzConfig};
use proptest::prelude::*;

fn assert_contract(domain: &Domain, weight: &WeightFunction, space: &FunctionSpace) -> Cubature {
    let built = construct(domain, weight, space, &ConstructionConfig::default()).unwrap();
    let rule = built.cubature;
    assert!(rule.len() <= space.size());
    assert!(rule.weights().iter().all(|w| *w > 0.0));
    assert!(rule.nodes().iter().all(|x| domain.contains(x)));
    let residual = rule.exactness_residual(space, &built.moments).unwrap();
    assert!(residual <= built.moments.residual_tolerance(), "{residual:e}");
    rule
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shifted_cubes(cx in -3.0..3.0f64, cy in -3.0..3.0f64, r in 0.1..4.0f64, m in 0u32..=4) {
        let c = Domain::cube(&[cx, cy], r).unwrap();
        assert_contract(&c, &WeightFunction::One, &FunctionSpace::algebraic(2, m).unwrap());
    }

    #[test]
    fn shifted_balls(cx in -2.0..2.0f64, cy in -2.0..2.0f64, cz in -2.0..2.0f64, r in 0.2..3.0f64, m in 0u32..=3) {
        let b = Domain::ball(&[cx, cy, cz], r).unwrap();
        assert_contract(&b, &WeightFunction::One, &FunctionSpace::algebraic(3, m).unwrap());
    }

    #[test]
    fn radial_weights(p in -1.5..3.0f64, m in 0u32..=4) {
        let b = Domain::ball(&[0.0, 0.0], 1.0).unwrap();
        let rule = assert_contract(&b, &WeightFunction::RadialPower(p), &FunctionSpace::algebraic(2, m).unwrap());
        // ∫_{B^2} ||x||^p = 2π / (2 + p)
        let mass = 2.0 * std::f64::consts::PI / (2.0 + p);
        prop_assert!((rule.weight_sum() - mass).abs() <= 1e-8 * (1.0 + mass));
    }

    #[test]
    fn trig_on_boxes(cx in -1.0..1.0f64, r in 0.2..1.5f64, m in 0u32..=2) {
        let c = Domain::cube(&[cx, -cx], r).unwrap();
        assert_contract(&c, &WeightFunction::One, &FunctionSpace::trigonometric(2, m).unwrap());
    }

    /// Reducing an exact rule built from arbitrary positive data keeps it exact.
    #[test]
    fn reduction_preserves_moments(
        raw in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, 0.01..1.0f64), 12..40),
        m in 1u32..=3,
    ) {
        let space = FunctionSpace::algebraic(2, m).unwrap();
        let nodes: Vec<Vec<f64>> = raw.iter().map(|(x, y, _)| vec![*x, *y]).collect();
        let weights: Vec<f64> = raw.iter().map(|(_, _, w)| *w).collect();
        // moments of the input rule itself, so it is exact by construction
        let c = Domain::cube(&[0.0, 0.0], 1.0).unwrap();
        let template = analytic_moments(&space, &c, &WeightFunction::One).unwrap().unwrap();
        let mut sums = vec![0.0; space.size()];
        for (x, w) in nodes.iter().zip(&weights) {
            for (s, v) in sums.iter_mut().zip(space.evaluate(x)) {
                *s += w * v;
            }
        }
        let moments = poscub::moments::MomentVector::new(sums, template.provenance()).unwrap();
        let out = reduce(&nodes, &weights, &space, &moments, &SteinitzConfig::default()).unwrap();
        prop_assert!(out.nodes.len() <= space.size());
        prop_assert!(out.weights.iter().all(|w| *w > 0.0));
        prop_assert!(out.residual <= 1e-10 * (1.0 + moments.max_abs()), "{:e}", out.residual);
        for x in &out.nodes {
            prop_assert!(nodes.contains(x));
        }
    }
}
