//! The dressed network: linear pre-net, quantum layer, linear post-net.
//!
//! All trainable scalars live in one flat vector in the order
//! `pre_weights (q×D) | pre_bias (q) | thetas (d×q) | post_weights (C×q) | post_bias (C)`,
//! every matrix row-major. Gradients share that layout.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::dataplane::Dataset;
use crate::error::{Error, Result};
use crate::varcircuit::{Circuit, CircuitSpec, QuantumParams};

/// Offsets of each parameter block inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub qubits: usize,
    pub depth: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
}

impl Layout {
    pub fn pre_weights(&self) -> Range<usize> {
        0..self.qubits * self.feature_dim
    }

    pub fn pre_bias(&self) -> Range<usize> {
        let s = self.pre_weights().end;
        s..s + self.qubits
    }

    pub fn thetas(&self) -> Range<usize> {
        let s = self.pre_bias().end;
        s..s + self.depth * self.qubits
    }

    pub fn post_weights(&self) -> Range<usize> {
        let s = self.thetas().end;
        s..s + self.num_classes * self.qubits
    }

    pub fn post_bias(&self) -> Range<usize> {
        let s = self.post_weights().end;
        s..s + self.num_classes
    }

    pub fn len(&self) -> usize {
        self.post_bias().end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    spec: CircuitSpec,
    layout: Layout,
    params: Vec<f64>,
}

/// Gradient of the loss with respect to every trainable scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layout: Layout,
    values: Vec<f64>,
}

impl Gradients {
    pub fn zeros(layout: Layout) -> Self {
        Self {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    pub fn from_vec(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Config(format!(
                "gradient length {} does not match model size {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn pre_weights(&self) -> &[f64] {
        &self.values[self.layout.pre_weights()]
    }

    pub fn pre_bias(&self) -> &[f64] {
        &self.values[self.layout.pre_bias()]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.values[self.layout.thetas()]
    }

    pub fn post_weights(&self) -> &[f64] {
        &self.values[self.layout.post_weights()]
    }

    pub fn post_bias(&self) -> &[f64] {
        &self.values[self.layout.post_bias()]
    }

    fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
    }
}

/// Result of a forward/backward pass on one sample.
#[derive(Debug, Clone)]
pub struct SampleGrad {
    pub grads: Gradients,
    pub loss: f64,
    pub logits: Vec<f64>,
}

/// Mean gradient over a batch together with summed loss and hit count.
#[derive(Debug, Clone)]
pub struct BatchGrad {
    pub grads: Gradients,
    pub loss_sum: f64,
    pub correct: usize,
    pub samples: usize,
}

impl HybridModel {
    /// A model with every weight and bias set to zero.
    pub fn zeros(spec: CircuitSpec, feature_dim: usize, num_classes: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::Config("feature dimension must be at least 1".into()));
        }
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        let layout = Layout {
            qubits: spec.qubits(),
            depth: spec.depth(),
            feature_dim,
            num_classes,
        };
        Ok(Self {
            spec,
            layout,
            params: vec![0.0; layout.len()],
        })
    }

    /// Seeded initialisation: linear weights uniform in ±1/√fan_in, rotation
    /// angles drawn from N(0, 0.01).
    pub fn init(
        spec: CircuitSpec,
        feature_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut model = Self::zeros(spec, feature_dim, num_classes)?;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let l = model.layout;

        let pre = 1.0 / (feature_dim as f64).sqrt();
        for w in &mut model.params[l.pre_weights().start..l.pre_bias().end] {
            *w = rng.random_range(-pre..=pre);
        }
        let normal = Normal::new(0.0, 0.01).expect("valid normal parameters");
        for t in &mut model.params[l.thetas()] {
            *t = normal.sample(&mut rng);
        }
        let post = 1.0 / (spec.qubits() as f64).sqrt();
        for w in &mut model.params[l.post_weights().start..l.post_bias().end] {
            *w = rng.random_range(-post..=post);
        }
        Ok(model)
    }

    /// Builds a model from a flat parameter vector in [`Layout`] order.
    pub fn from_params(
        spec: CircuitSpec,
        feature_dim: usize,
        num_classes: usize,
        params: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Self::zeros(spec, feature_dim, num_classes)?;
        if params.len() != model.params.len() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                model.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("model parameters must be finite".into()));
        }
        model.params = params;
        Ok(model)
    }

    pub fn spec(&self) -> CircuitSpec {
        self.spec
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn feature_dim(&self) -> usize {
        self.layout.feature_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layout.num_classes
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn pre_weights(&self) -> &[f64] {
        &self.params[self.layout.pre_weights()]
    }

    pub fn pre_bias(&self) -> &[f64] {
        &self.params[self.layout.pre_bias()]
    }

    pub fn qparams(&self) -> QuantumParams {
        QuantumParams::from_raw(self.spec, &self.params[self.layout.thetas()])
    }

    pub fn post_weights(&self) -> &[f64] {
        &self.params[self.layout.post_weights()]
    }

    pub fn post_bias(&self) -> &[f64] {
        &self.params[self.layout.post_bias()]
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.layout.feature_dim {
            return Err(Error::Config(format!(
                "expected {} features, got {}",
                self.layout.feature_dim,
                features.len()
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(
                "feature vector contains non-finite values".into(),
            ));
        }
        Ok(())
    }

    /// Pre-activations z = W·x + b of the pre-net.
    fn pre_activations(&self, features: &[f64]) -> Vec<f64> {
        let d = self.layout.feature_dim;
        self.pre_weights()
            .chunks_exact(d)
            .zip(self.pre_bias())
            .map(|(row, b)| row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    fn post_net(&self, qout: &[f64]) -> Vec<f64> {
        let q = self.layout.qubits;
        self.post_weights()
            .chunks_exact(q)
            .zip(self.post_bias())
            .map(|(row, b)| row.iter().zip(qout).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    /// Logits for one feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut circuit = Circuit::new(self.spec)?;
        self.forward_with(&mut circuit, features)
    }

    /// [`forward`](Self::forward) reusing a caller-owned circuit scratch.
    pub fn forward_with(&self, circuit: &mut Circuit, features: &[f64]) -> Result<Vec<f64>> {
        self.check_features(features)?;
        let embed: Vec<f64> = self
            .pre_activations(features)
            .into_iter()
            .map(|z| FRAC_PI_2 * z.tanh())
            .collect();
        let qout = circuit.forward(&self.params[self.layout.thetas()], &embed)?;
        Ok(self.post_net(&qout))
    }

    /// Cross-entropy loss and exact gradients for one labelled sample.
    pub fn backward(&self, features: &[f64], label: usize) -> Result<SampleGrad> {
        let mut circuit = Circuit::new(self.spec)?;
        self.backward_with(&mut circuit, features, label)
    }

    pub fn backward_with(
        &self,
        circuit: &mut Circuit,
        features: &[f64],
        label: usize,
    ) -> Result<SampleGrad> {
        self.check_features(features)?;
        let l = self.layout;
        if label >= l.num_classes {
            return Err(Error::Index {
                what: "label",
                index: label,
                bound: l.num_classes,
            });
        }
        let (q, d) = (l.qubits, l.feature_dim);

        let z = self.pre_activations(features);
        let tanh: Vec<f64> = z.iter().map(|z| z.tanh()).collect();
        let embed: Vec<f64> = tanh.iter().map(|t| FRAC_PI_2 * t).collect();
        let jac = circuit.jacobian(&self.params[l.thetas()], &embed)?;
        let qout = &jac.value;
        let logits = self.post_net(qout);
        let loss = loss_cross_entropy(&logits, label)?;

        let mut dlogits = softmax(&logits);
        dlogits[label] -= 1.0;

        let mut grads = Gradients::zeros(l);
        let g = &mut grads.values;

        // post-net
        let pw = l.post_weights();
        for (c, dl) in dlogits.iter().enumerate() {
            for (k, qv) in qout.iter().enumerate() {
                g[pw.start + c * q + k] = dl * qv;
            }
        }
        g[l.post_bias()].copy_from_slice(&dlogits);

        let post_w = self.post_weights();
        let dqout: Vec<f64> = (0..q)
            .map(|k| {
                (0..l.num_classes)
                    .map(|c| post_w[c * q + k] * dlogits[c])
                    .sum()
            })
            .collect();

        // quantum layer
        let n_theta = l.depth * q;
        let th = l.thetas();
        for p in 0..n_theta {
            g[th.start + p] = (0..q)
                .map(|out| dqout[out] * jac.theta[out * n_theta + p])
                .sum();
        }
        let dz: Vec<f64> = (0..q)
            .map(|i| {
                let dembed: f64 = (0..q).map(|out| dqout[out] * jac.embed[out * q + i]).sum();
                dembed * FRAC_PI_2 * (1.0 - tanh[i] * tanh[i])
            })
            .collect();

        // pre-net
        let pre = l.pre_weights();
        for (i, dzi) in dz.iter().enumerate() {
            let row = &mut g[pre.start + i * d..pre.start + (i + 1) * d];
            for (gw, x) in row.iter_mut().zip(features) {
                *gw = dzi * x;
            }
        }
        g[l.pre_bias()].copy_from_slice(&dz);

        Ok(SampleGrad {
            grads,
            loss,
            logits,
        })
    }

    /// Mean gradient over the given sample indices of `data`.
    pub fn batch_gradient(
        &self,
        circuit: &mut Circuit,
        data: &Dataset,
        indices: &[usize],
    ) -> Result<BatchGrad> {
        if indices.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let mut acc = Gradients::zeros(self.layout);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for &i in indices {
            let (x, y) = data.sample(i)?;
            let s = self.backward_with(circuit, x, y)?;
            acc.add_scaled(&s.grads, 1.0);
            loss_sum += s.loss;
            if argmax(&s.logits) == y {
                correct += 1;
            }
        }
        let inv = 1.0 / indices.len() as f64;
        for v in &mut acc.values {
            *v *= inv;
        }
        Ok(BatchGrad {
            grads: acc,
            loss_sum,
            correct,
            samples: indices.len(),
        })
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(features)?))
    }

    pub(crate) fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.feature_dim() != self.layout.feature_dim {
            return Err(Error::Config(format!(
                "dataset has {} features, model expects {}",
                data.feature_dim(),
                self.layout.feature_dim
            )));
        }
        if data.num_classes() > self.layout.num_classes {
            return Err(Error::Config(format!(
                "dataset has {} classes, model has {}",
                data.num_classes(),
                self.layout.num_classes
            )));
        }
        Ok(())
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// −log softmax(logits)[label], computed with max subtraction.
pub fn loss_cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::Index {
            what: "label",
            index: label,
            bound: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok((lse - logits[label]).max(0.0))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose argmax logit equals the label.
pub fn evaluate(model: &HybridModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty dataset".into()));
    }
    model.check_dataset(data)?;
    let mut circuit = Circuit::new(model.spec)?;
    let mut hits = 0usize;
    for i in 0..data.len() {
        let (x, y) = data.sample(i)?;
        if argmax(&model.forward_with(&mut circuit, x)?) == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// SGD with momentum: `v ← μ·v + g; w ← w − lr·v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sgd {
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    pub fn new(num_params: usize, momentum: f64) -> Self {
        Self {
            momentum,
            velocity: vec![0.0; num_params],
        }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if params.len() != grads.len() || params.len() != self.velocity.len() {
            return Err(Error::Config(format!(
                "optimizer size mismatch: {} params, {} grads, {} velocity",
                params.len(),
                grads.len(),
                self.velocity.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient entry {i} is {}; aborting training",
                grads[i]
            )));
        }
        for ((w, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grads) {
            *v = self.momentum * *v + g;
            *w -= lr * *v;
        }
        Ok(())
    }
}

/// Applies one optimizer step to a model.
pub fn sgd_step(model: &mut HybridModel, grads: &Gradients, lr: f64, opt: &mut Sgd) -> Result<()> {
    if grads.layout != model.layout {
        return Err(Error::Config("gradient layout does not match model".into()));
    }
    opt.step(&mut model.params, &grads.values, lr)
}
