mod common;

use std::f64::consts::FRAC_PI_2;

use common::*;
use hyqn::dataplane::generate_synthetic;
use hyqn::hybridnet::{evaluate, loss_cross_entropy, HybridModel};
use hyqn::{CircuitSpec, TrainConfig};
use rand::Rng;

fn compositional_logits(m: &HybridModel, x: &[f64]) -> Vec<f64> {
    let (q, d, dim) = (m.spec().qubits(), m.spec().depth(), m.feature_dim());
    let embed: Vec<f64> = (0..q)
        .map(|w| {
            let z: f64 = (0..dim)
                .map(|j| m.pre_weights()[w * dim + j] * x[j])
                .sum::<f64>()
                + m.pre_bias()[w];
            FRAC_PI_2 * z.tanh()
        })
        .collect();
    let qout = dense_circuit(q, d, m.qparams().as_slice(), &embed);
    (0..m.num_classes())
        .map(|c| {
            (0..q)
                .map(|w| m.post_weights()[c * q + w] * qout[w])
                .sum::<f64>()
                + m.post_bias()[c]
        })
        .collect()
}

fn random_model(r: &mut impl Rng, spec: CircuitSpec, dim: usize, classes: usize) -> HybridModel {
    let n = HybridModel::zeros(spec, dim, classes).unwrap().num_params();
    let params = (0..n).map(|_| r.random_range(-0.8..0.8)).collect();
    HybridModel::from_params(spec, dim, classes, params).unwrap()
}

#[test]
fn forward_matches_composition_of_reference_pieces() {
    let mut r = rng(21);
    for _ in 0..20 {
        let spec = random_spec(&mut r, 4, 3);
        let dim = r.random_range(1..=16);
        let classes = r.random_range(2..=4);
        let m = random_model(&mut r, spec, dim, classes);
        let x: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        let got = m.forward(&x).unwrap();
        let want = compositional_logits(&m, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn model_gradient_matches_central_differences() {
    let mut r = rng(34);
    for case in 0..50 {
        let spec = random_spec(&mut r, 4, 3);
        let dim = r.random_range(1..=16);
        let classes = r.random_range(2..=3);
        let m = random_model(&mut r, spec, dim, classes);
        let x: Vec<f64> = (0..dim).map(|_| r.random_range(-1.5..1.5)).collect();
        let y = r.random_range(0..classes);
        let analytic = m.backward(&x, y).unwrap().grads.into_vec();
        let numeric = fd_gradient(&m, &x, y, 1e-5);
        for (i, (a, f)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - f).abs() / a.abs().max(1.0);
            assert!(rel < 1e-5, "case {case}, param {i}: {a} vs {f}");
        }
    }
}

#[test]
fn cross_entropy_matches_naive_formula_in_safe_range() {
    let mut r = rng(4);
    for _ in 0..200 {
        let k = r.random_range(2..6);
        let logits: Vec<f64> = (0..k).map(|_| r.random_range(-20.0..20.0)).collect();
        let y = r.random_range(0..k);
        let naive = -(logits[y].exp() / logits.iter().map(|l| l.exp()).sum::<f64>()).ln();
        let stable = loss_cross_entropy(&logits, y).unwrap();
        assert!((naive - stable).abs() <= 1e-12 * naive.abs().max(1.0));
    }
    assert_eq!(loss_cross_entropy(&[1000.0, -1000.0], 1).unwrap(), 2000.0);
}

#[test]
fn evaluate_matches_manual_count() {
    let data = generate_synthetic(60, 8, 3, 1.0, 9).unwrap();
    let m = HybridModel::init(CircuitSpec::new(3, 2).unwrap(), 8, 3, 5).unwrap();
    let hits = (0..data.len())
        .filter(|&i| m.predict(data.row(i)).unwrap() == data.labels()[i])
        .count();
    assert_eq!(evaluate(&m, &data).unwrap(), hits as f64 / 60.0);
}

#[test]
fn epoch_loss_decreases_on_separable_data() {
    let data = generate_synthetic(245, 512, 2, 3.0, 1).unwrap();
    let model = HybridModel::init(CircuitSpec::default(), 512, 2, 1).unwrap();
    let cfg = TrainConfig {
        epochs: 10,
        seed: 1,
        ..TrainConfig::default()
    };
    assert_eq!(cfg.base_lr, 0.0004);
    let report = hyqn::ddp::train_distributed(&model, &data, None, &cfg).unwrap();
    let losses: Vec<f64> = report.metrics.iter().map(|m| m.mean_loss).collect();
    let rises = losses.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(rises <= 1, "losses {losses:?}");
    assert!(losses[9] < losses[0]);
}

#[test]
fn single_worker_training_is_bit_reproducible() {
    let data = generate_synthetic(80, 32, 2, 2.0, 3).unwrap();
    let model = HybridModel::init(CircuitSpec::new(3, 2).unwrap(), 32, 2, 3).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        seed: 3,
        ..TrainConfig::default()
    };
    let a = hyqn::ddp::train_distributed(&model, &data, None, &cfg).unwrap();
    let b = hyqn::ddp::train_distributed(&model, &data, None, &cfg).unwrap();
    let bits = |m: &HybridModel| m.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.model), bits(&b.model));
}

#[test]
fn zero_margin_data_gives_chance_accuracy() {
    let data = generate_synthetic(1000, 32, 2, 0.0, 17).unwrap();
    let split = data.split_holdout(0.2, 17).unwrap();
    let model = HybridModel::init(CircuitSpec::default(), 32, 2, 17).unwrap();
    let cfg = TrainConfig {
        epochs: 5,
        seed: 17,
        ..TrainConfig::default()
    };
    let report =
        hyqn::ddp::train_distributed(&model, &split.train, Some(&split.validation), &cfg).unwrap();
    let acc = report.final_metrics().val_accuracy.unwrap();
    // 200 held-out samples: three binomial standard deviations is about 0.106.
    assert!((acc - 0.5).abs() < 0.106, "accuracy {acc}");
}
