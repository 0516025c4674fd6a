//! Dressed quantum circuit classifier.
//!
//! A classical linear pre-net maps feature vectors onto rotation angles of a
//! small variational circuit, which is simulated exactly on a dense
//! statevector. Per-wire Pauli-Z expectations feed a classical linear
//! post-net. Training is synchronous data-parallel SGD over in-process
//! workers with a deterministic allreduce, and the [`bench`] module drives
//! parameter sweeps that emit CSV run records.

pub mod bench;
pub mod checkpoint;
pub mod dataplane;
pub mod ddp;
pub mod error;
pub mod hybridnet;
pub mod latency;
pub mod qsim;
pub mod varcircuit;

pub use dataplane::{Dataset, Shard};
pub use ddp::{ExecMode, LrScaling, TrainConfig, TrainReport};
pub use error::{Error, Result};
pub use hybridnet::{Gradients, HybridModel};
pub use qsim::StateVector;
pub use varcircuit::{CircuitSpec, QuantumParams};
