//! The dressed variational circuit and its parameter-shift Jacobians.
//!
//! Layout on `q` wires with `d` entangling layers:
//!
//! 1. H on every wire
//! 2. RY(embed[i]) on wire i
//! 3. per layer: CNOT(i, i+1) for even i, then for odd i, then RY(theta[l][i])
//! 4. ⟨Z⟩ on every wire

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::qsim::{StateVector, MAX_QUBITS};

pub const MAX_DEPTH: usize = 64;

thread_local! {
    static CIRCUIT_EVALS: Cell<u64> = const { Cell::new(0) };
}

/// Number of full circuit evaluations performed on the current thread.
///
/// Every forward evaluation, including each shifted evaluation inside
/// [`Circuit::jacobian`], increments this counter.
pub fn circuit_eval_count() -> u64 {
    CIRCUIT_EVALS.with(Cell::get)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitSpec {
    qubits: usize,
    depth: usize,
}

impl CircuitSpec {
    pub fn new(qubits: usize, depth: usize) -> Result<Self> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count {qubits} outside supported range 1..={MAX_QUBITS}"
            )));
        }
        if depth > MAX_DEPTH {
            return Err(Error::Config(format!(
                "circuit depth {depth} exceeds maximum {MAX_DEPTH}"
            )));
        }
        Ok(Self { qubits, depth })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of trainable rotation angles (d·q).
    pub fn num_thetas(&self) -> usize {
        self.depth * self.qubits
    }
}

impl Default for CircuitSpec {
    fn default() -> Self {
        Self {
            qubits: 4,
            depth: 6,
        }
    }
}

/// Trainable angles, row-major with shape (depth, qubits).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumParams {
    depth: usize,
    qubits: usize,
    thetas: Vec<f64>,
}

impl QuantumParams {
    pub fn zeros(spec: CircuitSpec) -> Self {
        Self {
            depth: spec.depth,
            qubits: spec.qubits,
            thetas: vec![0.0; spec.num_thetas()],
        }
    }

    pub fn from_vec(spec: CircuitSpec, thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() != spec.num_thetas() {
            return Err(Error::Config(format!(
                "expected {}x{} rotation angles, got {}",
                spec.depth,
                spec.qubits,
                thetas.len()
            )));
        }
        if let Some(bad) = thetas.iter().find(|t| !t.is_finite()) {
            return Err(Error::Numeric(format!(
                "rotation angle {bad} is not finite"
            )));
        }
        Ok(Self {
            depth: spec.depth,
            qubits: spec.qubits,
            thetas,
        })
    }

    pub(crate) fn from_raw(spec: CircuitSpec, thetas: &[f64]) -> Self {
        debug_assert_eq!(thetas.len(), spec.num_thetas());
        Self {
            depth: spec.depth,
            qubits: spec.qubits,
            thetas: thetas.to_vec(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.depth, self.qubits)
    }

    pub fn get(&self, layer: usize, wire: usize) -> f64 {
        self.thetas[layer * self.qubits + wire]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.thetas
    }
}

/// Output value plus Jacobians of every output with respect to every angle.
///
/// Both Jacobians are row-major with one row per output wire:
/// `theta[out * (d·q) + l * q + i]` and `embed[out * q + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobians {
    pub value: Vec<f64>,
    pub theta: Vec<f64>,
    pub embed: Vec<f64>,
}

impl Jacobians {
    pub fn d_theta(&self, out: usize, layer: usize, wire: usize) -> f64 {
        let q = self.value.len();
        let n = self.theta.len() / q;
        self.theta[out * n + layer * q + wire]
    }

    pub fn d_embed(&self, out: usize, wire: usize) -> f64 {
        let q = self.value.len();
        self.embed[out * q + wire]
    }
}

/// A circuit evaluator owning one scratch register, reused across calls.
#[derive(Debug, Clone)]
pub struct Circuit {
    spec: CircuitSpec,
    scratch: StateVector,
}

impl Circuit {
    pub fn new(spec: CircuitSpec) -> Result<Self> {
        Ok(Self {
            spec,
            scratch: StateVector::zero(spec.qubits)?,
        })
    }

    pub fn spec(&self) -> CircuitSpec {
        self.spec
    }

    fn check(&self, thetas: &[f64], embed: &[f64]) -> Result<()> {
        if embed.len() != self.spec.qubits {
            return Err(Error::Config(format!(
                "expected {} embedding angles, got {}",
                self.spec.qubits,
                embed.len()
            )));
        }
        if thetas.len() != self.spec.num_thetas() {
            return Err(Error::Config(format!(
                "expected {}x{} rotation angles, got {}",
                self.spec.depth,
                self.spec.qubits,
                thetas.len()
            )));
        }
        Ok(())
    }

    fn run(&mut self, thetas: &[f64], embed: &[f64]) -> Result<Vec<f64>> {
        CIRCUIT_EVALS.with(|c| c.set(c.get() + 1));
        let q = self.spec.qubits;
        let state = &mut self.scratch;
        state.reset();
        for w in 0..q {
            state.apply_h(w)?;
        }
        for (w, &a) in embed.iter().enumerate() {
            state.apply_ry(w, a)?;
        }
        for layer in thetas.chunks_exact(q) {
            for i in (0..q.saturating_sub(1)).step_by(2) {
                state.apply_cnot(i, i + 1)?;
            }
            for i in (1..q.saturating_sub(1)).step_by(2) {
                state.apply_cnot(i, i + 1)?;
            }
            for (w, &t) in layer.iter().enumerate() {
                state.apply_ry(w, t)?;
            }
        }
        Ok(state.expect_z_all())
    }

    /// Per-wire ⟨Z⟩ after running the circuit.
    pub fn forward(&mut self, thetas: &[f64], embed: &[f64]) -> Result<Vec<f64>> {
        self.check(thetas, embed)?;
        self.run(thetas, embed)
    }

    /// Parameter-shift Jacobians: ∂out/∂φ = [f(φ + π/2) − f(φ − π/2)] / 2 for
    /// every rotation and embedding angle φ.
    pub fn jacobian(&mut self, thetas: &[f64], embed: &[f64]) -> Result<Jacobians> {
        self.check(thetas, embed)?;
        let q = self.spec.qubits;
        let n_theta = thetas.len();
        let value = self.run(thetas, embed)?;

        let mut theta_jac = vec![0.0; q * n_theta];
        let mut shifted = thetas.to_vec();
        for p in 0..n_theta {
            shifted[p] = thetas[p] + FRAC_PI_2;
            let plus = self.run(&shifted, embed)?;
            shifted[p] = thetas[p] - FRAC_PI_2;
            let minus = self.run(&shifted, embed)?;
            shifted[p] = thetas[p];
            for out in 0..q {
                theta_jac[out * n_theta + p] = (plus[out] - minus[out]) / 2.0;
            }
        }

        let mut embed_jac = vec![0.0; q * q];
        let mut shifted = embed.to_vec();
        for p in 0..q {
            shifted[p] = embed[p] + FRAC_PI_2;
            let plus = self.run(thetas, &shifted)?;
            shifted[p] = embed[p] - FRAC_PI_2;
            let minus = self.run(thetas, &shifted)?;
            shifted[p] = embed[p];
            for out in 0..q {
                embed_jac[out * q + p] = (plus[out] - minus[out]) / 2.0;
            }
        }

        Ok(Jacobians {
            value,
            theta: theta_jac,
            embed: embed_jac,
        })
    }
}

fn check_params(spec: CircuitSpec, params: &QuantumParams) -> Result<()> {
    if params.shape() != (spec.depth, spec.qubits) {
        return Err(Error::Config(format!(
            "parameter shape {:?} does not match circuit ({}, {})",
            params.shape(),
            spec.depth,
            spec.qubits
        )));
    }
    Ok(())
}

pub fn quantum_forward(
    spec: CircuitSpec,
    params: &QuantumParams,
    embed: &[f64],
) -> Result<Vec<f64>> {
    check_params(spec, params)?;
    Circuit::new(spec)?.forward(params.as_slice(), embed)
}

pub fn param_shift_grad(
    spec: CircuitSpec,
    params: &QuantumParams,
    embed: &[f64],
) -> Result<Jacobians> {
    check_params(spec, params)?;
    Circuit::new(spec)?.jacobian(params.as_slice(), embed)
}

/// Circuit evaluations needed for one sample's gradient: one unshifted
/// forward plus two shifted evaluations per rotation and embedding angle.
pub fn circuit_evals_per_sample(spec: CircuitSpec) -> u64 {
    1 + 2 * (spec.num_thetas() + spec.qubits) as u64
}
