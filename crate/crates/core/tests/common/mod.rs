//! Test-only reference implementations, independent of the production paths.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use hyqn::hybridnet::{loss_cross_entropy, HybridModel};
use hyqn::varcircuit::CircuitSpec;

pub type C = Complex64;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug)]
pub struct Mat {
    pub n: usize,
    pub a: Vec<C>,
}

impl Mat {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![c(0.0); n * n];
        for i in 0..n {
            a[i * n + i] = c(1.0);
        }
        Self { n, a }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self {
            n,
            a: rows.iter().flat_map(|r| r.iter().map(|&x| c(x))).collect(),
        }
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        let n = self.n * other.n;
        let mut a = vec![c(0.0); n * n];
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..other.n {
                    for l in 0..other.n {
                        a[(i * other.n + k) * n + j * other.n + l] =
                            self.a[i * self.n + j] * other.a[k * other.n + l];
                    }
                }
            }
        }
        Mat { n, a }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.a[i * self.n + j] * v[j]).sum())
            .collect()
    }
}

pub fn h2() -> Mat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from_rows(&[&[s, s], &[s, -s]])
}

pub fn ry2(theta: f64) -> Mat {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat::from_rows(&[&[co, -s], &[s, co]])
}

pub fn x2() -> Mat {
    Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn p0() -> Mat {
    Mat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]])
}

pub fn p1() -> Mat {
    Mat::from_rows(&[&[0.0, 0.0], &[0.0, 1.0]])
}

/// ⊗ over wires 0..q (wire 0 leftmost, i.e. most significant).
pub fn embed_ops(q: usize, ops: &[(usize, Mat)]) -> Mat {
    let mut out: Option<Mat> = None;
    for w in 0..q {
        let m = ops
            .iter()
            .find(|(ow, _)| *ow == w)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| Mat::identity(2));
        out = Some(match out {
            None => m,
            Some(acc) => acc.kron(&m),
        });
    }
    out.unwrap()
}

pub fn dense_1q(q: usize, wire: usize, g: Mat) -> Mat {
    embed_ops(q, &[(wire, g)])
}

/// CNOT = |0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t.
pub fn dense_cnot(q: usize, control: usize, target: usize) -> Mat {
    embed_ops(q, &[(control, p0())]).add(&embed_ops(q, &[(control, p1()), (target, x2())]))
}

#[derive(Clone, Debug)]
pub enum Gate {
    H(usize),
    Ry(usize, f64),
    Cnot(usize, usize),
}

impl Gate {
    pub fn dense(&self, q: usize) -> Mat {
        match *self {
            Gate::H(w) => dense_1q(q, w, h2()),
            Gate::Ry(w, t) => dense_1q(q, w, ry2(t)),
            Gate::Cnot(a, b) => dense_cnot(q, a, b),
        }
    }

    pub fn apply(&self, s: &mut hyqn::StateVector) {
        match *self {
            Gate::H(w) => s.apply_h(w).unwrap(),
            Gate::Ry(w, t) => s.apply_ry(w, t).unwrap(),
            Gate::Cnot(a, b) => s.apply_cnot(a, b).unwrap(),
        }
    }
}

pub fn random_gate(rng: &mut impl Rng, q: usize) -> Gate {
    let w = rng.random_range(0..q);
    match rng.random_range(0..3) {
        0 => Gate::H(w),
        1 if q > 1 => {
            let mut t = rng.random_range(0..q - 1);
            if t >= w {
                t += 1;
            }
            Gate::Cnot(w, t)
        }
        _ => Gate::Ry(
            w,
            rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI),
        ),
    }
}

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// The dressed circuit as a gate list, mirroring the documented layout.
pub fn circuit_gates(q: usize, d: usize, thetas: &[f64], embed: &[f64]) -> Vec<Gate> {
    let mut g: Vec<Gate> = (0..q).map(Gate::H).collect();
    g.extend(embed.iter().enumerate().map(|(w, &a)| Gate::Ry(w, a)));
    for l in 0..d {
        for i in (0..q.saturating_sub(1)).filter(|i| i % 2 == 0) {
            g.push(Gate::Cnot(i, i + 1));
        }
        for i in (0..q.saturating_sub(1)).filter(|i| i % 2 == 1) {
            g.push(Gate::Cnot(i, i + 1));
        }
        for w in 0..q {
            g.push(Gate::Ry(w, thetas[l * q + w]));
        }
    }
    g
}

/// ⟨Z_w⟩ from a dense vector, by the diagonal of the embedded Pauli Z.
pub fn dense_expect_z(v: &[C], q: usize) -> Vec<f64> {
    let z = Mat::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
    (0..q)
        .map(|w| {
            let zv = dense_1q(q, w, z.clone()).apply(v);
            v.iter().zip(&zv).map(|(a, b)| (a.conj() * b).re).sum()
        })
        .collect()
}

/// Circuit output computed entirely through dense matrices.
pub fn dense_circuit(q: usize, d: usize, thetas: &[f64], embed: &[f64]) -> Vec<f64> {
    let mut v = vec![c(0.0); 1 << q];
    v[0] = c(1.0);
    for g in circuit_gates(q, d, thetas, embed) {
        v = g.dense(q).apply(&v);
    }
    dense_expect_z(&v, q)
}

pub fn loss_at(model: &HybridModel, x: &[f64], y: usize) -> f64 {
    loss_cross_entropy(&model.forward(x).unwrap(), y).unwrap()
}

/// Central finite differences of the sample loss over every trainable scalar.
pub fn fd_gradient(model: &HybridModel, x: &[f64], y: usize, h: f64) -> Vec<f64> {
    let mut m = model.clone();
    (0..model.num_params())
        .map(|i| {
            let orig = m.params()[i];
            m.params_mut()[i] = orig + h;
            let up = loss_at(&m, x, y);
            m.params_mut()[i] = orig - h;
            let down = loss_at(&m, x, y);
            m.params_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn random_angles(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

pub fn random_spec(rng: &mut impl Rng, max_q: usize, max_d: usize) -> CircuitSpec {
    CircuitSpec::new(rng.random_range(1..=max_q), rng.random_range(0..=max_d)).unwrap()
}

/// Final weights of N lockstep workers with unscaled lr versus one worker
/// whose batch is the union of theirs. Returns (max abs diff, replica divergence).
pub fn ddp_vs_large_batch(workers: usize, exec: hyqn::ExecMode) -> (f64, f64) {
    use hyqn::{LrScaling, TrainConfig};
    // 240 is divisible by every N tested, so no worker drops a sample.
    let data = hyqn::dataplane::generate_synthetic(240, 16, 2, 2.0, 7).unwrap();
    let model = HybridModel::init(CircuitSpec::new(3, 2).unwrap(), 16, 2, 7).unwrap();
    let base = TrainConfig {
        epochs: 3,
        batch_size: 4,
        base_lr: 0.01,
        seed: 7,
        lr_scaling: LrScaling::Unscaled,
        verify_replicas: true,
        exec,
        ..TrainConfig::default()
    };
    let many = hyqn::ddp::train_distributed(
        &model,
        &data,
        None,
        &TrainConfig {
            workers,
            ..base.clone()
        },
    )
    .unwrap();
    let one = hyqn::ddp::train_distributed(
        &model,
        &data,
        None,
        &TrainConfig {
            workers: 1,
            batch_size: 4 * workers,
            ..base
        },
    )
    .unwrap();
    assert_eq!(many.steps, one.steps);
    let diff = many
        .model
        .params()
        .iter()
        .zip(one.model.params())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (diff, many.max_replica_divergence)
}
