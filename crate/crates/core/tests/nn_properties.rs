use proptest::prelude::*;
use tensorlite::nn::{batchnorm, conv2d, cross_entropy, dropout, BatchNormConfig, ConvSpec, Mode};
use tensorlite::Tensor;

fn column_stats(y: &[f32], b: usize, d: usize) -> Vec<(f64, f64)> {
    (0..d)
        .map(|j| {
            let col: Vec<f64> = (0..b).map(|i| y[i * d + j] as f64).collect();
            let mean = col.iter().sum::<f64>() / b as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / b as f64;
            (mean, var)
        })
        .collect()
}

proptest! {
    #[test]
    fn batchnorm_centres_on_beta(b in 2usize..16, d in 1usize..5, seed in any::<u64>(), shift in -5.0f32..5.0) {
        let x = Tensor::uniform([b, d], -3.0, 3.0, seed).add_scalar(shift).unwrap();
        let gamma = Tensor::uniform([d], 0.5, 2.0, seed ^ 1);
        let beta = Tensor::uniform([d], -2.0, 2.0, seed ^ 2);
        let y = batchnorm(&x, &gamma, &beta, None, Mode::Train, BatchNormConfig::default()).unwrap();
        for ((mean, _), &bj) in column_stats(&y.to_vec(), b, d).iter().zip(&beta.to_vec()) {
            prop_assert!((mean - bj as f64).abs() <= 1e-5 * (bj as f64).abs() + 1e-5);
        }
    }

    #[test]
    fn batchnorm_unit_variance(b in 8usize..32, d in 1usize..4, seed in any::<u64>()) {
        // Spread ≥ 1 keeps σ² ≫ ε.
        let x = Tensor::uniform([b, d], -4.0, 4.0, seed);
        let stats = column_stats(&x.to_vec(), b, d);
        prop_assume!(stats.iter().all(|&(_, v)| v > 0.5));
        let y = batchnorm(&x, &Tensor::ones([d]), &Tensor::zeros([d]), None, Mode::Train, BatchNormConfig::default()).unwrap();
        for (_, var) in column_stats(&y.to_vec(), b, d) {
            prop_assert!((var - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn dropout_identity_paths_are_bit_exact(n in 1usize..200, p in 0.0f32..0.99, seed in any::<u64>()) {
        let x = Tensor::uniform([n], -1e3, 1e3, seed);
        let bits = |t: &Tensor| t.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&dropout(&x, p, Mode::Eval, seed).unwrap()), bits(&x));
        prop_assert_eq!(bits(&dropout(&x, 0.0, Mode::Train, seed).unwrap()), bits(&x));
    }

    #[test]
    fn cross_entropy_finite_for_large_logits(b in 1usize..6, c in 2usize..6, seed in any::<u64>()) {
        let z = Tensor::uniform([b, c], -1e4, 1e4, seed).requires_grad_(true);
        let labels: Vec<usize> = (0..b).map(|i| (i * 7 + seed as usize) % c).collect();
        tensorlite::reset_tape();
        let loss = cross_entropy(&z, &labels).unwrap();
        prop_assert!(loss.item().unwrap().is_finite());
        let g = loss.backward().unwrap();
        prop_assert!(g.get(&z).unwrap().to_vec().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn conv_identity_kernel_is_bit_exact(b in 1usize..3, c in 1usize..4, h in 1usize..6, w in 1usize..6, seed in any::<u64>()) {
        let x = Tensor::uniform([b, c, h, w], -5.0, 5.0, seed);
        let mut k = vec![0.0; c * c];
        for i in 0..c {
            k[i * c + i] = 1.0;
        }
        let k = Tensor::from_vec(k, [c, c, 1, 1]).unwrap();
        let y = conv2d(&x, &k, None, ConvSpec::new(c, c, (1, 1), 1, 0)).unwrap();
        let bits = |t: &Tensor| t.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&y), bits(&x));
    }
}
