use fairwipe_core::model::{hessian, loss_and_gradient, train_with_perturbation, TrainConfig, TrainingSet};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> (DMatrix<f64>, Vec<u8>, DVector<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(5..40);
    let d = rng.random_range(1..8);
    let x = DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0) / (d as f64).sqrt());
    let y = (0..m).map(|_| rng.random_range(0..2u8)).collect();
    let w = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
    let lambda = rng.random_range(0.01..10.0);
    (x, y, w, lambda)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..100 {
        let (x, y, w, lambda) = instance(seed);
        let b = DVector::from_fn(w.len(), |i, _| 0.01 * i as f64);
        let (_, g) = loss_and_gradient(&w, &x, &y, lambda, Some(&b)).unwrap();
        let h = 1e-6;
        for j in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let fp = loss_and_gradient(&wp, &x, &y, lambda, Some(&b)).unwrap().0;
            let fm = loss_and_gradient(&wm, &x, &y, lambda, Some(&b)).unwrap().0;
            let fd = (fp - fm) / (2.0 * h);
            assert!(rel_err(fd, g[j]) < 1e-5, "seed {seed} coord {j}: {fd} vs {}", g[j]);
        }
    }
}

#[test]
fn hessian_matches_gradient_differences() {
    for seed in 0..100 {
        let (x, y, w, lambda) = instance(seed + 1000);
        let hess = hessian(&w, &x, &y, lambda).unwrap();
        let h = 1e-6;
        for j in 0..w.len() {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let gp = loss_and_gradient(&wp, &x, &y, lambda, None).unwrap().1;
            let gm = loss_and_gradient(&wm, &x, &y, lambda, None).unwrap().1;
            let col = (gp - gm) / (2.0 * h);
            for i in 0..w.len() {
                assert!(rel_err(col[i], hess[(i, j)]) < 1e-5, "seed {seed} ({i},{j})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_is_lambda_m_strongly_convex(seed in any::<u64>()) {
        let (x, y, w, lambda) = instance(seed);
        let hess = hessian(&w, &x, &y, lambda).unwrap();
        let lm = lambda * y.len() as f64;
        let min_eig = hess.symmetric_eigenvalues().min();
        prop_assert!(min_eig >= lm * (1.0 - 1e-12));
        prop_assert!(min_eig <= lm + 0.25 * x.norm_squared() + 1e-9);
    }

    #[test]
    fn trained_weights_are_stationary(seed in any::<u64>()) {
        let (x, y, _, lambda) = instance(seed);
        let b = DVector::from_fn(x.ncols(), |i, _| 0.05 * (i as f64 - 1.0));
        let set = TrainingSet { rows: x.clone(), labels: y.clone() };
        let cfg = TrainConfig { lambda, ..Default::default() };
        let model = train_with_perturbation(&set, &cfg, b.clone()).unwrap();
        let (_, g) = loss_and_gradient(&model.weights, &x, &y, lambda, Some(&b)).unwrap();
        prop_assert!(g.norm() <= cfg.tolerance);
    }
}

#[test]
fn mismatched_inputs_are_rejected() {
    let x = DMatrix::zeros(3, 2);
    assert!(loss_and_gradient(&DVector::zeros(3), &x, &[0, 1, 0], 1.0, None).is_err());
    assert!(loss_and_gradient(&DVector::zeros(2), &x, &[0, 1], 1.0, None).is_err());
    assert!(loss_and_gradient(&DVector::zeros(2), &x, &[0, 2, 0], 1.0, None).is_err());
}
