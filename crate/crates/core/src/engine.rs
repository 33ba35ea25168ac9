//! The operation surface shared by the three engines, the seeded random
//! source used for measurement, and run-time dispatch over engine kinds.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::{BitError, QubitIndex};
use crate::bitwise::BitwiseEngine;
use crate::dense::{DensityEngine, VectorEngine};
use crate::gates::{GateError, GateName, GateParams, SparseGate};
use crate::state::{Capacity, MeasurementRecord, StateError};

/// Tolerance on `|phase| = 1` for controlled phases.
pub const PHASE_TOL: f64 = 1e-9;

/// How far a computed probability may leave `[0, 1]` before it is treated
/// as a corrupted state.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Span(#[from] BitError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error("qubit {q} out of range for {n} qubits")]
    QubitOutOfRange { q: QubitIndex, n: usize },
    #[error("qubit {0} appears more than once among target and controls")]
    RepeatedQubit(QubitIndex),
    #[error("phase {0} is not unimodular")]
    NonUnimodularPhase(Complex64),
    #[error("invalid qubit range {first}..={last}")]
    InvalidRange { first: QubitIndex, last: QubitIndex },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("measurement probability {0} is degenerate; state normalization is corrupted")]
    DegenerateProbability(f64),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Uniform draws in `[0, 1)` consumed by measurements.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

/// Seeded ChaCha8 stream. ChaCha8 output is stable across platforms and
/// `rand_chacha` releases, so a fixed seed reproduces shot strings exactly.
/// Seed 0 draws the key from the operating system instead.
#[derive(Debug, Clone)]
pub struct ShotRng(ChaCha8Rng);

impl ShotRng {
    pub fn new(seed: u64) -> Self {
        if seed == 0 {
            Self(ChaCha8Rng::from_os_rng())
        } else {
            Self(ChaCha8Rng::seed_from_u64(seed))
        }
    }
}

impl UniformSource for ShotRng {
    fn next_uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }
}

/// Replays a fixed list of draws, cycling when exhausted. Used to force a
/// measurement branch.
#[derive(Debug, Clone)]
pub struct ScriptedDraws {
    draws: Vec<f64>,
    next: usize,
}

impl ScriptedDraws {
    pub fn new(draws: impl Into<Vec<f64>>) -> Self {
        let draws = draws.into();
        assert!(!draws.is_empty(), "at least one draw is required");
        Self { draws, next: 0 }
    }

    /// Always 0: every measurement with `p0 > 0` yields 0.
    pub fn low() -> Self {
        Self::new([0.0])
    }

    /// Just below 1: every measurement with `p0 < 1` yields 1.
    pub fn high() -> Self {
        Self::new([1.0 - f64::EPSILON])
    }
}

impl UniformSource for ScriptedDraws {
    fn next_uniform(&mut self) -> f64 {
        let u = self.draws[self.next % self.draws.len()];
        self.next += 1;
        u
    }
}

pub(crate) fn check_qubit(q: QubitIndex, n: usize) -> Result<(), EngineError> {
    if q >= n {
        return Err(EngineError::QubitOutOfRange { q, n });
    }
    Ok(())
}

/// Validates a target plus control list: all in range, no index repeated.
pub(crate) fn check_controlled(
    target: QubitIndex,
    controls: &[QubitIndex],
    n: usize,
) -> Result<(), EngineError> {
    check_qubit(target, n)?;
    for (i, &c) in controls.iter().enumerate() {
        check_qubit(c, n)?;
        if c == target || controls[..i].contains(&c) {
            return Err(EngineError::RepeatedQubit(c));
        }
    }
    Ok(())
}

pub(crate) fn check_phase(phase: Complex64) -> Result<(), EngineError> {
    if !phase.re.is_finite() || !phase.im.is_finite() || (phase.norm() - 1.0).abs() > PHASE_TOL {
        return Err(EngineError::NonUnimodularPhase(phase));
    }
    Ok(())
}

/// Outcome 0 iff `u < p0` (and `p0 > 0`). `p0` slightly outside `[0, 1]`
/// from rounding is clamped; anything further out is an error.
pub(crate) fn choose_outcome(p0: f64, u: f64) -> Result<u8, EngineError> {
    if !p0.is_finite() || !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p0) {
        return Err(EngineError::DegenerateProbability(p0));
    }
    let p0 = p0.clamp(0.0, 1.0);
    Ok(if p0 > 0.0 && u < p0 { 0 } else { 1 })
}

/// Operations every engine supports. Qubit 0 is the most significant bit.
pub trait Engine {
    fn n(&self) -> usize;

    /// Applies a custom gate to the window `[q, q + arity)`.
    fn apply_gate(&mut self, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError>;

    fn hadamard(&mut self, q: QubitIndex) -> Result<(), EngineError>;

    /// Flips `target` on keys whose control bits are all 1. An empty control
    /// list is a plain X.
    fn cnot(&mut self, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError>;

    /// Multiplies by `phase` the keys whose target and control bits are all 1.
    fn cphase(
        &mut self,
        phase: Complex64,
        target: QubitIndex,
        controls: &[QubitIndex],
    ) -> Result<(), EngineError>;

    fn swap(&mut self, a: QubitIndex, b: QubitIndex) -> Result<(), EngineError>;

    /// Measures one qubit in the computational basis.
    fn measure(&mut self, q: QubitIndex) -> Result<u8, EngineError>;

    fn record(&self) -> &MeasurementRecord;

    /// Text dump of the current state.
    fn dump(&self) -> String;

    /// Checks normalization (and Hermiticity for density matrices).
    fn check_invariants(&self) -> Result<(), EngineError>;

    /// Applies a predefined single-qubit gate.
    fn apply_standard(
        &mut self,
        name: GateName,
        params: GateParams,
        q: QubitIndex,
    ) -> Result<(), EngineError> {
        if name == GateName::H {
            return self.hadamard(q);
        }
        let gate = SparseGate::standard(name, params)?;
        self.apply_gate(&gate, q)
    }

    /// Fourier transform of the sub-register `[first, last]`, built from
    /// Hadamards, controlled phases and a final qubit reversal.
    fn qft(&mut self, first: QubitIndex, last: QubitIndex) -> Result<(), EngineError> {
        check_range(first, last, self.n())?;
        for j in first..=last {
            self.hadamard(j)?;
            for k in j + 1..=last {
                let phase = Complex64::from_polar(1.0, PI / (1u64 << (k - j)) as f64);
                self.cphase(phase, j, &[k])?;
            }
        }
        for i in 0..(last - first).div_ceil(2) {
            self.swap(first + i, last - i)?;
        }
        Ok(())
    }

    /// Exact inverse of [`Engine::qft`]: the same circuit reversed with
    /// conjugated phases.
    fn inverse_qft(&mut self, first: QubitIndex, last: QubitIndex) -> Result<(), EngineError> {
        check_range(first, last, self.n())?;
        for i in 0..(last - first).div_ceil(2) {
            self.swap(first + i, last - i)?;
        }
        for j in (first..=last).rev() {
            for k in (j + 1..=last).rev() {
                let phase = Complex64::from_polar(1.0, -PI / (1u64 << (k - j)) as f64);
                self.cphase(phase, j, &[k])?;
            }
            self.hadamard(j)?;
        }
        Ok(())
    }

    /// Measures qubits 0..n in order; returns the outcomes, qubit 0 first.
    fn measure_all(&mut self) -> Result<String, EngineError> {
        let mut out = String::with_capacity(self.n());
        for q in 0..self.n() {
            out.push(if self.measure(q)? == 0 { '0' } else { '1' });
        }
        Ok(out)
    }
}

fn check_range(first: QubitIndex, last: QubitIndex, n: usize) -> Result<(), EngineError> {
    if first > last || last >= n || last - first >= 64 {
        return Err(EngineError::InvalidRange { first, last });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Bitwise,
    Dense,
    Density,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Bitwise, EngineKind::Dense, EngineKind::Density];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Bitwise => "bitwise",
            EngineKind::Dense => "dense",
            EngineKind::Density => "density",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bitwise" => Ok(EngineKind::Bitwise),
            "dense" => Ok(EngineKind::Dense),
            "density" => Ok(EngineKind::Density),
            other => Err(format!("unknown engine `{other}` (expected bitwise, dense or density)")),
        }
    }
}

/// An engine of any kind, selected at run time.
#[derive(Debug, Clone)]
pub enum AnyEngine {
    Bitwise(BitwiseEngine),
    Dense(VectorEngine),
    Density(DensityEngine),
}

impl AnyEngine {
    pub fn new(kind: EngineKind, n: usize, seed: u64, cap: &Capacity) -> Result<Self, EngineError> {
        Ok(match kind {
            EngineKind::Bitwise => AnyEngine::Bitwise(BitwiseEngine::new(n, seed)?),
            EngineKind::Dense => AnyEngine::Dense(VectorEngine::new(n, seed, cap)?),
            EngineKind::Density => AnyEngine::Density(DensityEngine::new(n, seed, cap)?),
        })
    }

    pub fn kind(&self) -> EngineKind {
        match self {
            AnyEngine::Bitwise(_) => EngineKind::Bitwise,
            AnyEngine::Dense(_) => EngineKind::Dense,
            AnyEngine::Density(_) => EngineKind::Density,
        }
    }

    /// Stored key count for the bitwise engine.
    pub fn map_size(&self) -> Option<usize> {
        match self {
            AnyEngine::Bitwise(e) => Some(e.state().len()),
            _ => None,
        }
    }
}

macro_rules! delegate {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            AnyEngine::Bitwise($e) => $body,
            AnyEngine::Dense($e) => $body,
            AnyEngine::Density($e) => $body,
        }
    };
}

impl Engine for AnyEngine {
    fn n(&self) -> usize {
        delegate!(self, e => e.n())
    }
    fn apply_gate(&mut self, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError> {
        delegate!(self, e => e.apply_gate(gate, q))
    }
    fn hadamard(&mut self, q: QubitIndex) -> Result<(), EngineError> {
        delegate!(self, e => e.hadamard(q))
    }
    fn cnot(&mut self, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        delegate!(self, e => e.cnot(target, controls))
    }
    fn cphase(&mut self, phase: Complex64, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        delegate!(self, e => e.cphase(phase, target, controls))
    }
    fn swap(&mut self, a: QubitIndex, b: QubitIndex) -> Result<(), EngineError> {
        delegate!(self, e => e.swap(a, b))
    }
    fn measure(&mut self, q: QubitIndex) -> Result<u8, EngineError> {
        delegate!(self, e => e.measure(q))
    }
    fn record(&self) -> &MeasurementRecord {
        delegate!(self, e => e.record())
    }
    fn dump(&self) -> String {
        delegate!(self, e => e.dump())
    }
    fn check_invariants(&self) -> Result<(), EngineError> {
        delegate!(self, e => e.check_invariants())
    }
    fn apply_standard(&mut self, name: GateName, params: GateParams, q: QubitIndex) -> Result<(), EngineError> {
        delegate!(self, e => e.apply_standard(name, params, q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_rule() {
        assert_eq!(choose_outcome(1.0, 0.999), Ok(0));
        assert_eq!(choose_outcome(0.0, 0.0), Ok(1));
        assert_eq!(choose_outcome(0.5, 0.49), Ok(0));
        assert_eq!(choose_outcome(0.5, 0.5), Ok(1));
        assert_eq!(choose_outcome(1.0 + 1e-12, 0.3), Ok(0));
        assert!(matches!(choose_outcome(1.1, 0.3), Err(EngineError::DegenerateProbability(_))));
        assert!(matches!(choose_outcome(f64::NAN, 0.3), Err(EngineError::DegenerateProbability(_))));
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let mut a = ShotRng::new(7);
        let mut b = ShotRng::new(7);
        let xs: Vec<f64> = (0..5).map(|_| a.next_uniform()).collect();
        let ys: Vec<f64> = (0..5).map(|_| b.next_uniform()).collect();
        assert_eq!(xs, ys);
        assert!(xs.iter().all(|&u| (0.0..1.0).contains(&u)));
        let mut c = ShotRng::new(8);
        assert_ne!(xs[0], c.next_uniform());
    }

    #[test]
    fn controlled_validation() {
        assert!(check_controlled(1, &[0], 2).is_ok());
        assert!(check_controlled(1, &[], 2).is_ok());
        assert_eq!(check_controlled(1, &[1], 2), Err(EngineError::RepeatedQubit(1)));
        assert_eq!(check_controlled(2, &[0, 0], 3), Err(EngineError::RepeatedQubit(0)));
        assert_eq!(check_controlled(0, &[3], 2), Err(EngineError::QubitOutOfRange { q: 3, n: 2 }));
    }

    #[test]
    fn engine_kind_parse() {
        assert_eq!("Dense".parse::<EngineKind>(), Ok(EngineKind::Dense));
        assert!("gpu".parse::<EngineKind>().is_err());
    }
}
