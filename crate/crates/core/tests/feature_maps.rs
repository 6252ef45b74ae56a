use nalgebra::DMatrix;
use proptest::prelude::*;

use fastfood::baselines::{nystrom_build, DenseGaussianTransform};
use fastfood::fastfood::{AnchoredFeatures, FastfoodTransform};
use fastfood::kernels::KernelSpec;
use fastfood::sampling::SeedSpec;
use fastfood::stats::{mean, McEstimate};
use fastfood::FeatureMap;

fn grid_point(i: usize, d: usize) -> Vec<f64> {
    (0..d).map(|k| ((i * 7 + k * 3) as f64 * 0.61).sin() * 0.5 + 0.5).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_inner_product_is_one(d in 1usize..40, n in 1usize..200, seed in any::<u64>(), scale in 0.1f64..3.0) {
        let tf = FastfoodTransform::build(d, n, KernelSpec::Rbf { sigma: scale }, seed).unwrap();
        let x = grid_point(seed as usize % 97, d);
        let phi = tf.map(&x).unwrap();
        prop_assert_eq!(phi.len(), 2 * n);
        prop_assert!((phi.dot(&phi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_is_symmetric_and_bounded(d in 1usize..20, n in 1usize..100, seed in any::<u64>()) {
        let tf = FastfoodTransform::build(d, n, KernelSpec::Matern { sigma: 1.0, t: 3 }, seed).unwrap();
        let x = grid_point(1, d);
        let xp = grid_point(2, d);
        let a = tf.kernel_estimate(&x, &xp).unwrap();
        let b = tf.kernel_estimate(&xp, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn record_round_trip_preserves_features(d in 1usize..24, n in 1usize..80, seed in any::<u64>(), inline in any::<bool>()) {
        let tf = FastfoodTransform::build(d, n, KernelSpec::Rbf { sigma: 0.7 }, seed).unwrap();
        let back = FastfoodTransform::from_json(&tf.to_json(inline).unwrap()).unwrap();
        let x = grid_point(3, d);
        prop_assert_eq!(tf.map(&x).unwrap().0, back.map(&x).unwrap().0);
    }
}

#[test]
fn fastfood_and_dense_agree_in_mean() {
    let x = grid_point(4, 6);
    let xp = grid_point(9, 6);
    let target = KernelSpec::Rbf { sigma: 1.0 }.evaluate(&x, &xp).unwrap();
    let ff: Vec<f64> = (0..3000)
        .map(|s| FastfoodTransform::build(6, 8, KernelSpec::Rbf { sigma: 1.0 }, s).unwrap().kernel_estimate(&x, &xp).unwrap())
        .collect();
    let rks: Vec<f64> = (0..3000)
        .map(|s| DenseGaussianTransform::build(6, 8, 1.0, s, false).unwrap().kernel_estimate(&x, &xp).unwrap())
        .collect();
    assert!(McEstimate::from_samples(&ff).z_score(target) < 4.0);
    assert!(McEstimate::from_samples(&rks).z_score(target) < 4.0);
}

#[test]
fn anchored_estimate_unbiased_across_seeds() {
    let (a, b) = (1.0, 0.1);
    let x = [0.3, 0.1, 0.7];
    let xp = [0.5, 0.2, 0.4];
    let samples: Vec<f64> = (0..400)
        .map(|s| AnchoredFeatures::build(3, 256, a, b, s).unwrap().kernel_estimate(&x, &xp).unwrap())
        .collect();
    let target = AnchoredFeatures::build(3, 1, a, b, 0).unwrap().spec().evaluate(&x, &xp).unwrap();
    let est = McEstimate::from_samples(&samples);
    assert!(est.z_score(target) < 4.0, "{est:?} vs {target}");
}

#[test]
fn nystrom_error_decreases_with_landmarks() {
    let spec = KernelSpec::Rbf { sigma: 1.0 };
    let data = DMatrix::from_fn(600, 4, |i, k| grid_point(i, 4)[k] * 2.0);
    let probe: Vec<Vec<f64>> = (0..40).map(|i| data.row(i * 13).iter().copied().collect()).collect();
    let err = |n: usize| {
        let map = nystrom_build(&data, n, spec.clone(), SeedSpec::new(5, 0)).unwrap();
        let mut e = Vec::new();
        for (i, x) in probe.iter().enumerate() {
            for xp in &probe[..i] {
                let est = map.map(x).unwrap().dot(&map.map(xp).unwrap());
                e.push((est - spec.evaluate(x, xp).unwrap()).abs());
            }
        }
        mean(&e)
    };
    let errs: Vec<f64> = [8, 32, 128].into_iter().map(err).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn feature_gram_is_positive_semidefinite() {
    let tf = FastfoodTransform::build(5, 64, KernelSpec::Rbf { sigma: 0.8 }, 21).unwrap();
    let pts = DMatrix::from_fn(30, 5, |i, k| grid_point(i, 5)[k]);
    let phi = tf.map_rows(&pts).unwrap();
    let gram = &phi * phi.transpose();
    let eig = gram.symmetric_eigen();
    assert!(eig.eigenvalues.min() > -1e-10);
}
