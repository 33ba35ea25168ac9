//! Quantum circuit simulation on a sparse, hash-map state.
//!
//! A state is a map from basis keys (bit strings packed into `u64`, qubit 0
//! in the most significant position) to complex amplitudes. Only non-zero
//! amplitudes are stored, so structured circuits such as GHZ preparation
//! stay small regardless of register width. Two dense engines, a state
//! vector and a density matrix, share the same [`Engine`] interface and
//! serve as references and as the home of noise channels.
//!
//! ```
//! use sparsim::{BitwiseEngine, Engine};
//!
//! let mut e = BitwiseEngine::new(40, 7).unwrap();
//! e.hadamard(0).unwrap();
//! for q in 1..40 {
//!     e.cnot(q, &[0]).unwrap();
//! }
//! assert_eq!(e.state().len(), 2);
//! ```

pub mod bench;
pub mod bits;
pub mod bitwise;
pub mod circuit;
pub mod dense;
pub mod engine;
pub mod gates;
pub mod state;

pub use num_complex::Complex64;

pub use bits::{BasisKey, BitError, QubitIndex};
pub use bitwise::BitwiseEngine;
pub use circuit::{emit_builtin, parse, run, Circuit, CircuitError, Family, Instruction, ParseError, RunOutput};
pub use dense::{DensityEngine, KrausChannel, PauliAxis, VectorEngine};
pub use engine::{AnyEngine, Engine, EngineError, EngineKind, ScriptedDraws, ShotRng, UniformSource};
pub use gates::{GateError, GateName, GateParams, SparseGate};
pub use state::{Capacity, DenseState, DensityMatrix, MeasurementRecord, SparseState, StateError};
