//! Dense statevector simulator.
//!
//! Wire ordering: wire 0 is the most significant bit of the basis-state
//! index, so for `q` qubits wire `w` owns bit `q - 1 - w`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

fn check_qubits(q: usize) -> Result<()> {
    if q == 0 || q > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count {q} outside supported range 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl StateVector {
    /// The all-zero basis state |0...0⟩ on `q` qubits.
    pub fn zero(q: usize) -> Result<Self> {
        check_qubits(q)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << q];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits: q,
            amps,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the vector is
    /// not renormalised.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let q = len.trailing_zeros() as usize;
        check_qubits(q)?;
        Ok(Self {
            num_qubits: q,
            amps,
        })
    }

    /// Resets to |0...0⟩ without reallocating.
    pub fn reset(&mut self) {
        self.amps.fill(Complex64::new(0.0, 0.0));
        self.amps[0] = Complex64::new(1.0, 0.0);
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn stride(&self, wire: usize) -> Result<usize> {
        if wire >= self.num_qubits {
            return Err(Error::Index {
                what: "wire",
                index: wire,
                bound: self.num_qubits,
            });
        }
        Ok(1 << (self.num_qubits - 1 - wire))
    }

    /// Applies the real 2x2 matrix `[[m00, m01], [m10, m11]]` on `wire`.
    fn apply_real_1q(&mut self, wire: usize, m: [f64; 4]) -> Result<()> {
        let stride = self.stride(wire)?;
        for block in self.amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = x0 * m[0] + x1 * m[1];
                *a1 = x0 * m[2] + x1 * m[3];
            }
        }
        Ok(())
    }

    pub fn apply_h(&mut self, wire: usize) -> Result<()> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        self.apply_real_1q(wire, [s, s, s, -s])
    }

    /// RY(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]].
    pub fn apply_ry(&mut self, wire: usize, theta: f64) -> Result<()> {
        if !theta.is_finite() {
            return Err(Error::Numeric(format!("RY angle {theta} is not finite")));
        }
        let (s, c) = (theta / 2.0).sin_cos();
        self.apply_real_1q(wire, [c, -s, s, c])
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        let cbit = self.stride(control)?;
        let tbit = self.stride(target)?;
        if control == target {
            return Err(Error::Index {
                what: "CNOT target equal to control; target",
                index: target,
                bound: self.num_qubits,
            });
        }
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
        Ok(())
    }

    /// ⟨Z⟩ on one wire: Σ |a_b|² · (+1 if the wire's bit is 0, else −1).
    pub fn expect_z(&self, wire: usize) -> Result<f64> {
        let bit = self.stride(wire)?;
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if i & bit == 0 {
                acc += p;
            } else {
                acc -= p;
            }
        }
        Ok(acc.clamp(-1.0, 1.0))
    }

    /// ⟨Z⟩ on every wire in a single pass over the amplitudes.
    pub fn expect_z_all(&self) -> Vec<f64> {
        let q = self.num_qubits;
        let mut out = vec![0.0; q];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (w, o) in out.iter_mut().enumerate() {
                if i & (1 << (q - 1 - w)) == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        for o in &mut out {
            *o = o.clamp(-1.0, 1.0);
        }
        out
    }
}
