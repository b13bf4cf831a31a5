use alloc::vec;
use alloc::vec::Vec;

use crate::affect::VadVector;
use crate::error::NnError;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Focal loss `-alpha_t (1 - p_t)^gamma ln p_t` on a softmax output, with
/// its exact gradient with respect to the pre-softmax logits.
pub fn focal_loss(
    probs: &[f64],
    target: usize,
    alpha: &[f64],
    gamma: f64,
) -> Result<(f64, Vec<f64>), NnError> {
    let k = probs.len();
    if target >= k {
        return Err(NnError::BadTarget { target, classes: k });
    }
    if alpha.len() != k {
        return Err(NnError::Shape {
            expected: (k, 1),
            actual: (alpha.len(), 1),
        });
    }
    let sum: f64 = probs.iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > 1e-6 {
        return Err(NnError::NotNormalized(sum));
    }

    let p = probs[target].clamp(f64::MIN_POSITIVE, 1.0);
    let log_p = libm::log(p);
    let q = 1.0 - p;
    let a = alpha[target];
    let loss = -a * libm::pow(q, gamma) * log_p;

    // dL/dz_j = g * (delta_tj - p_j) where g = p_t * dL/dp_t.
    let g = if q <= 0.0 {
        0.0
    } else if gamma == 0.0 {
        -a
    } else {
        a * (gamma * libm::pow(q, gamma - 1.0) * p * log_p - libm::pow(q, gamma))
    };
    let mut grad = vec![0.0; k];
    for (j, (gj, pj)) in grad.iter_mut().zip(probs).enumerate() {
        let indicator = if j == target { 1.0 } else { 0.0 };
        *gj = g * (indicator - pj);
    }
    Ok((loss, grad))
}

/// Mean squared error over the three VAD components and its gradient.
pub fn mse_loss(pred: VadVector, target: VadVector) -> (f64, VadVector) {
    let diff = pred - target;
    (pred.mse(target), diff * (2.0 / 3.0))
}

/// Per-class focal weights `total / (k * count_c)`, clipped to `[0.25, 4]`.
/// Classes with no examples get the upper clip.
pub fn inverse_frequency_alpha(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let k = counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                4.0
            } else {
                (total as f64 / (k * c as f64)).clamp(0.25, 4.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{gradient_check, GradCheckOptions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn confident_correct_prediction_costs_nothing() {
        let mut probs = vec![0.0; 7];
        probs[3] = 1.0;
        let (loss, grad) = focal_loss(&probs, 3, &[1.0; 7], 2.0).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
        let (loss, _) = focal_loss(&probs, 3, &[1.0; 7], 0.0).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn gamma_zero_is_cross_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let logits: Vec<f64> = (0..7).map(|_| rng.random_range(-4.0..4.0)).collect();
            let p = softmax(&logits);
            let t = rng.random_range(0..7);
            let (loss, grad) = focal_loss(&p, t, &[1.0; 7], 0.0).unwrap();
            assert!((loss + p[t].ln()).abs() < 1e-12);
            for j in 0..7 {
                let want = p[j] - if j == t { 1.0 } else { 0.0 };
                assert!((grad[j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            focal_loss(&[0.5, 0.6], 0, &[1.0, 1.0], 2.0),
            Err(NnError::NotNormalized(_))
        ));
        assert!(matches!(
            focal_loss(&[0.5, 0.5], 2, &[1.0, 1.0], 2.0),
            Err(NnError::BadTarget { .. })
        ));
    }

    #[test]
    fn focal_gradient_matches_finite_differences() {
        for seed in 0..25 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let logits: Vec<f64> = (0..7).map(|_| rng.random_range(-3.0..3.0)).collect();
            let alpha: Vec<f64> = (0..7).map(|_| rng.random_range(0.25..4.0)).collect();
            let t = rng.random_range(0..7);
            let gamma = if seed % 5 == 0 { 0.5 } else { 2.0 };
            let (_, grad) = focal_loss(&softmax(&logits), t, &alpha, gamma).unwrap();
            let report = gradient_check(
                |z| focal_loss(&softmax(z), t, &alpha, gamma).unwrap().0,
                &logits,
                &grad,
                &GradCheckOptions::default(),
            );
            assert!(report.max_rel_error < 1e-4, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn mse_examples() {
        let x = VadVector::new(0.3, -0.2, 0.9);
        assert_eq!(mse_loss(x, x), (0.0, VadVector::ZERO));
        let (loss, _) = mse_loss(VadVector::new(1.0, 0.0, 0.0), VadVector::ZERO);
        assert!((loss - 1.0 / 3.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let p: [f64; 3] = core::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let t = VadVector::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                0.1,
            );
            let (_, g) = mse_loss(VadVector::from_array(p), t);
            let report = gradient_check(
                |q| mse_loss(VadVector::new(q[0], q[1], q[2]), t).0,
                &p,
                &g.to_array(),
                &GradCheckOptions::default(),
            );
            assert!(report.max_rel_error < 1e-6, "{report:?}");
        }
    }

    #[test]
    fn alpha_weights() {
        let a = inverse_frequency_alpha(&[70, 10, 0, 20]);
        assert_eq!(a, vec![100.0 / 280.0, 2.5, 4.0, 1.25]);
        let skewed = inverse_frequency_alpha(&[1000, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!((skewed[0], skewed[1]), (0.25, 4.0));
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(z in proptest::collection::vec(-800.0f64..800.0, 1..12)) {
            let p = softmax(&z);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|x| *x >= 0.0 && x.is_finite()));
        }

        #[test]
        fn focal_monotone_in_target_probability(
            p1 in 0.001f64..0.999, p2 in 0.001f64..0.999, gamma in 0.0f64..5.0, a in 0.1f64..4.0
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let dist = |p: f64| vec![p, 1.0 - p];
            let l_lo = focal_loss(&dist(lo), 0, &[a, 1.0], gamma).unwrap().0;
            let l_hi = focal_loss(&dist(hi), 0, &[a, 1.0], gamma).unwrap().0;
            prop_assert!(l_hi <= l_lo + 1e-15);
        }
    }
}
