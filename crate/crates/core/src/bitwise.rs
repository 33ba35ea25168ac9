//! Gate application and measurement directly on the key→amplitude map.
//!
//! Every routine walks the stored keys once, so cost scales with the number
//! of basis states present rather than with 2ⁿ. Each routine builds a fresh
//! map and prunes amplitudes that cancel below [`PRUNE_EPS`].

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::bits::{self, low_mask, qubit_mask, split_unchecked, BasisKey, QubitIndex};
use crate::engine::{
    check_controlled, check_phase, check_qubit, choose_outcome, Engine, EngineError, ShotRng,
    UniformSource,
};
use crate::gates::SparseGate;
use crate::state::{AmplitudeMap, MeasurementRecord, SparseState, PRUNE_EPS};

fn map_with_capacity(cap: usize) -> AmplitudeMap {
    AmplitudeMap::with_capacity_and_hasher(cap, Default::default())
}

fn prune_map(map: &mut AmplitudeMap) {
    map.retain(|_, a| a.norm() > PRUNE_EPS);
}

/// Applies `gate` to the qubit window starting at `q`.
///
/// Each key is split into the bits left of the window, the window value `y`
/// and the bits right of it; every term `(α, j)` of `U|y⟩` contributes
/// `α·amp` to the key with the window replaced by `j`.
pub fn apply_gate(
    state: &SparseState,
    gate: &SparseGate,
    q: QubitIndex,
) -> Result<SparseState, EngineError> {
    let n = state.n();
    let w = gate.arity();
    bits::split_key(0, n, q, w)?;
    let shift = n - q - w;
    let bound = if n >= 64 { usize::MAX } else { 1usize << n };
    let mut out = map_with_capacity((state.len() * gate.fanout()).min(bound));
    for (key, amp) in state.iter() {
        let (x, y, z) = split_unchecked(key, shift, w, n);
        for &(alpha, j) in gate.column(y) {
            let xjz = bits::combine(x, bits::shl(j, shift), z);
            *out.entry(xjz).or_default() += alpha * amp;
        }
    }
    prune_map(&mut out);
    Ok(SparseState::from_map(n, out))
}

/// Hadamard on qubit `q` without a gate table: each key sends `±amp/√2`
/// to itself (minus when its `q` bit is 1) and `+amp/√2` to the key with
/// that bit flipped.
pub fn hadamard(state: &SparseState, q: QubitIndex) -> Result<SparseState, EngineError> {
    let n = state.n();
    check_qubit(q, n)?;
    let mask = qubit_mask(n, q);
    let mut out = map_with_capacity((2 * state.len()).min(if n >= 64 { usize::MAX } else { 1 << n }));
    for (key, amp) in state.iter() {
        let half = amp * FRAC_1_SQRT_2;
        let own = out.entry(key).or_default();
        if key & mask != 0 {
            *own -= half;
        } else {
            *own += half;
        }
        *out.entry(key ^ mask).or_default() += half;
    }
    prune_map(&mut out);
    Ok(SparseState::from_map(n, out))
}

/// Multi-controlled NOT: keys whose control bits are all 1 move to the key
/// with the target bit flipped; all others stay. A pure relabelling, so the
/// map size is unchanged.
pub fn cnot(
    state: &SparseState,
    target: QubitIndex,
    controls: &[QubitIndex],
) -> Result<SparseState, EngineError> {
    let n = state.n();
    check_controlled(target, controls, n)?;
    let ctrl = controls.iter().fold(0, |m, &c| m | qubit_mask(n, c));
    let flip = qubit_mask(n, target);
    Ok(relabel(state, |key| if key & ctrl == ctrl { key ^ flip } else { key }))
}

/// Multiplies by `phase` every amplitude whose target and control bits are
/// all 1. Works in place.
pub fn cphase(
    state: &mut SparseState,
    phase: Complex64,
    target: QubitIndex,
    controls: &[QubitIndex],
) -> Result<(), EngineError> {
    let n = state.n();
    check_controlled(target, controls, n)?;
    check_phase(phase)?;
    let mask = controls.iter().fold(qubit_mask(n, target), |m, &c| m | qubit_mask(n, c));
    for (&key, amp) in state.map_mut().iter_mut() {
        if key & mask == mask {
            *amp *= phase;
        }
    }
    Ok(())
}

/// Exchanges qubits `a` and `b` in every key.
pub fn swap(state: &SparseState, a: QubitIndex, b: QubitIndex) -> Result<SparseState, EngineError> {
    let n = state.n();
    check_qubit(a, n)?;
    check_qubit(b, n)?;
    if a == b {
        return Ok(state.clone());
    }
    let (ma, mb) = (qubit_mask(n, a), qubit_mask(n, b));
    Ok(relabel(state, |key| {
        if (key & ma == 0) != (key & mb == 0) {
            key ^ (ma | mb)
        } else {
            key
        }
    }))
}

fn relabel(state: &SparseState, f: impl Fn(BasisKey) -> BasisKey) -> SparseState {
    let mut out = map_with_capacity(state.len());
    for (key, amp) in state.iter() {
        out.insert(f(key), amp);
    }
    SparseState::from_map(state.n(), out)
}

/// Result of a single-qubit measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    pub state: SparseState,
    pub outcome: u8,
    /// Probability of the observed outcome.
    pub probability: f64,
}

/// Measures qubit `q` with the uniform draw `u`: outcome 0 iff `u < p0`.
/// Surviving keys are rescaled by `1/√p`.
pub fn measure(state: &SparseState, q: QubitIndex, u: f64) -> Result<Collapse, EngineError> {
    let n = state.n();
    check_qubit(q, n)?;
    let mask = qubit_mask(n, q);
    let (mut p0, mut p1) = (0.0, 0.0);
    for (key, amp) in state.iter() {
        if key & mask == 0 {
            p0 += amp.norm_sqr();
        } else {
            p1 += amp.norm_sqr();
        }
    }
    let mut outcome = choose_outcome(p0, u)?;
    // u can land in the rounding gap between p0 and 1 when no key has bit 1
    if outcome == 1 && p1 <= 0.0 {
        outcome = 0;
    }
    let (p, wanted) = if outcome == 0 { (p0, 0) } else { (p1, mask) };
    if p <= 0.0 {
        return Err(EngineError::DegenerateProbability(p));
    }
    let scale = 1.0 / p.sqrt();
    let out = state
        .iter()
        .filter(|&(key, _)| key & mask == wanted)
        .map(|(key, amp)| (key, amp * scale))
        .collect();
    Ok(Collapse {
        state: SparseState::from_map(n, out),
        outcome,
        probability: p,
    })
}

/// Pure-state engine over the sparse map.
#[derive(Debug, Clone)]
pub struct BitwiseEngine<R = ShotRng> {
    state: SparseState,
    record: MeasurementRecord,
    rng: R,
}

impl BitwiseEngine<ShotRng> {
    /// `|0…0⟩` on `n ≤ 64` qubits with a seeded measurement stream.
    pub fn new(n: usize, seed: u64) -> Result<Self, EngineError> {
        Self::with_source(SparseState::new(n)?, ShotRng::new(seed))
    }
}

impl<R: UniformSource> BitwiseEngine<R> {
    pub fn with_source(state: SparseState, rng: R) -> Result<Self, EngineError> {
        let record = MeasurementRecord::new(state.n());
        Ok(Self { state, record, rng })
    }

    pub fn state(&self) -> &SparseState {
        &self.state
    }

    pub fn into_state(self) -> SparseState {
        self.state
    }
}

impl<R: UniformSource> Engine for BitwiseEngine<R> {
    fn n(&self) -> usize {
        self.state.n()
    }

    fn apply_gate(&mut self, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError> {
        self.state = apply_gate(&self.state, gate, q)?;
        Ok(())
    }

    fn hadamard(&mut self, q: QubitIndex) -> Result<(), EngineError> {
        self.state = hadamard(&self.state, q)?;
        Ok(())
    }

    fn cnot(&mut self, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        self.state = cnot(&self.state, target, controls)?;
        Ok(())
    }

    fn cphase(
        &mut self,
        phase: Complex64,
        target: QubitIndex,
        controls: &[QubitIndex],
    ) -> Result<(), EngineError> {
        cphase(&mut self.state, phase, target, controls)
    }

    fn swap(&mut self, a: QubitIndex, b: QubitIndex) -> Result<(), EngineError> {
        self.state = swap(&self.state, a, b)?;
        Ok(())
    }

    fn measure(&mut self, q: QubitIndex) -> Result<u8, EngineError> {
        check_qubit(q, self.n())?;
        let u = self.rng.next_uniform();
        let collapse = measure(&self.state, q, u)?;
        self.state = collapse.state;
        self.record.set(q, collapse.outcome);
        Ok(collapse.outcome)
    }

    fn record(&self) -> &MeasurementRecord {
        &self.record
    }

    fn dump(&self) -> String {
        self.state.dump()
    }

    fn check_invariants(&self) -> Result<(), EngineError> {
        let norm = self.state.norm_sqr();
        if !self.state.is_normalized() {
            return Err(EngineError::Invariant(format!("squared norm {norm} differs from 1")));
        }
        let bound = low_mask(self.n());
        if let Some(key) = self.state.map().keys().find(|&&k| k > bound) {
            return Err(EngineError::Invariant(format!("key {key} exceeds register")));
        }
        Ok(())
    }
}
