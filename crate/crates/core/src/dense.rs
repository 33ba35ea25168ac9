//! Dense reference engines: a 2ⁿ state vector and a 2ⁿ×2ⁿ density matrix
//! with single-qubit Kraus channels.
//!
//! Gates are applied by strided iteration over the amplitude array; the
//! full `I ⊗ U ⊗ I` operator is never materialized.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::bits::{qubit_mask, split_key, BasisKey, QubitIndex};
use crate::engine::{
    check_controlled, check_phase, check_qubit, choose_outcome, Engine, EngineError, ShotRng,
    UniformSource,
};
use crate::gates::{Column, Matrix2, SparseGate};
use crate::state::{Capacity, DenseState, DensityMatrix, MeasurementRecord, NORM_TOL};

/// Tolerance for `Σ K†K = I` and for Hermiticity checks.
pub const CHANNEL_TOL: f64 = 1e-10;

/// Applies the operator given by `columns` (2^w inputs) to the logical
/// vector `v[i] = data[offset + i * stride]` of length 2ⁿ, on the window of
/// bits `[shift, shift + w)`.
fn apply_strided(
    data: &mut [Complex64],
    offset: usize,
    stride: usize,
    n: usize,
    columns: &[Column],
    shift: usize,
    scratch: &mut Vec<Complex64>,
) {
    let dim = columns.len();
    let window = (dim - 1) << shift;
    scratch.clear();
    scratch.resize(2 * dim, Complex64::default());
    let (input, output) = scratch.split_at_mut(dim);
    for base in 0..(1usize << n) {
        if base & window != 0 {
            continue;
        }
        for (y, slot) in input.iter_mut().enumerate() {
            *slot = data[offset + (base | (y << shift)) * stride];
        }
        output.fill(Complex64::default());
        for (y, terms) in columns.iter().enumerate() {
            let amp = input[y];
            if amp == Complex64::default() {
                continue;
            }
            for &(alpha, j) in terms {
                output[j as usize] += alpha * amp;
            }
        }
        for (j, &value) in output.iter().enumerate() {
            data[offset + (base | (j << shift)) * stride] = value;
        }
    }
}

fn conj_columns(columns: &[Column]) -> Vec<Column> {
    columns
        .iter()
        .map(|col| col.iter().map(|&(a, j)| (a.conj(), j)).collect())
        .collect()
}

fn matrix2_columns(m: &Matrix2) -> Vec<Column> {
    (0..2)
        .map(|col| (0..2).map(|row| (m[row * 2 + col], row as BasisKey)).collect())
        .collect()
}

/// `ρ ← A ρ A†` with `A` given by its columns, on window bits at `shift`.
fn conjugate_in_place(rho: &mut DensityMatrix, columns: &[Column], shift: usize) {
    let n = rho.n();
    let dim = rho.dim();
    let conj = conj_columns(columns);
    let mut scratch = Vec::new();
    let data = rho.data_mut();
    for c in 0..dim {
        apply_strided(data, c, dim, n, columns, shift, &mut scratch);
    }
    for r in 0..dim {
        apply_strided(data, r * dim, 1, n, &conj, shift, &mut scratch);
    }
}

/// `|ψ⟩ ← (I ⊗ U ⊗ I)|ψ⟩` with `U` on qubits `[q, q + arity)`.
pub fn dense_apply(state: &mut DenseState, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError> {
    let n = state.n();
    split_key(0, n, q, gate.arity())?;
    let shift = n - q - gate.arity();
    let mut scratch = Vec::new();
    apply_strided(state.amplitudes_mut(), 0, 1, n, gate.columns(), shift, &mut scratch);
    Ok(())
}

/// `ρ ← U ρ U†` with `U` on qubits `[q, q + arity)`.
pub fn dm_apply(rho: &mut DensityMatrix, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError> {
    let n = rho.n();
    split_key(0, n, q, gate.arity())?;
    conjugate_in_place(rho, gate.columns(), n - q - gate.arity());
    Ok(())
}

fn check_probability(p: f64) -> Result<(), EngineError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EngineError::InvalidProbability(p));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn matrix(self) -> Matrix2 {
        let zero = Complex64::default();
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::i();
        match self {
            PauliAxis::X => [zero, one, one, zero],
            PauliAxis::Y => [zero, -i, i, zero],
            PauliAxis::Z => [one, zero, zero, -one],
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PauliAxis::X => "X",
            PauliAxis::Y => "Y",
            PauliAxis::Z => "Z",
        })
    }
}

impl FromStr for PauliAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "X" => Ok(PauliAxis::X),
            "Y" => Ok(PauliAxis::Y),
            "Z" => Ok(PauliAxis::Z),
            other => Err(format!("unknown Pauli axis `{other}`")),
        }
    }
}

fn scaled(m: Matrix2, s: f64) -> Matrix2 {
    m.map(|x| x * s)
}

/// Trace-preserving single-qubit channel `ρ ↦ Σ K ρ K†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Matrix2>,
}

impl KrausChannel {
    /// Rejects operator sets with `max |Σ K†K − I| > CHANNEL_TOL`.
    pub fn new(operators: Vec<Matrix2>) -> Result<Self, EngineError> {
        let channel = Self { operators };
        let deviation = channel.completeness_deviation();
        if deviation > CHANNEL_TOL {
            return Err(EngineError::Invariant(format!(
                "Kraus operators are not trace preserving: max |ΣK†K - I| = {deviation:.3e}"
            )));
        }
        Ok(channel)
    }

    /// `(1 − p) ρ + p P ρ P` as the Kraus pair `{√(1−p) I, √p P}`.
    pub fn flip(axis: PauliAxis, p: f64) -> Result<Self, EngineError> {
        check_probability(p)?;
        let id = [1.0, 0.0, 0.0, 1.0].map(Complex64::from);
        Self::new(vec![scaled(id, (1.0 - p).sqrt()), scaled(axis.matrix(), p.sqrt())])
    }

    /// `K0 = diag(1, √(1−p))`, `K1 = √p |0⟩⟨1|`.
    pub fn amplitude_damping(p: f64) -> Result<Self, EngineError> {
        check_probability(p)?;
        let zero = Complex64::default();
        let k0 = [Complex64::new(1.0, 0.0), zero, zero, Complex64::new((1.0 - p).sqrt(), 0.0)];
        let k1 = [zero, Complex64::new(p.sqrt(), 0.0), zero, zero];
        Self::new(vec![k0, k1])
    }

    /// `(1 − 3p/4) ρ + (p/4)(XρX + YρY + ZρZ)`.
    pub fn depolarizing(p: f64) -> Result<Self, EngineError> {
        check_probability(p)?;
        let id = [1.0, 0.0, 0.0, 1.0].map(Complex64::from);
        let pauli = (p / 4.0).sqrt();
        Self::new(vec![
            scaled(id, (1.0 - 0.75 * p).sqrt()),
            scaled(PauliAxis::X.matrix(), pauli),
            scaled(PauliAxis::Y.matrix(), pauli),
            scaled(PauliAxis::Z.matrix(), pauli),
        ])
    }

    pub fn operators(&self) -> &[Matrix2] {
        &self.operators
    }

    /// `max |(Σ K†K − I)_ab|`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = [Complex64::default(); 4];
        for k in &self.operators {
            for a in 0..2 {
                for b in 0..2 {
                    sum[a * 2 + b] += (0..2).map(|j| k[j * 2 + a].conj() * k[j * 2 + b]).sum::<Complex64>();
                }
            }
        }
        let id = [1.0, 0.0, 0.0, 1.0];
        sum.iter().zip(id).map(|(s, e)| (s - e).norm()).fold(0.0, f64::max)
    }

    /// Applies the channel to qubit `q` of `rho`.
    pub fn apply(&self, rho: &mut DensityMatrix, q: QubitIndex) -> Result<(), EngineError> {
        let n = rho.n();
        check_qubit(q, n)?;
        let shift = n - q - 1;
        let mut acc = vec![Complex64::default(); rho.data().len()];
        for k in &self.operators {
            let mut term = rho.clone();
            conjugate_in_place(&mut term, &matrix2_columns(k), shift);
            for (a, t) in acc.iter_mut().zip(term.data()) {
                *a += t;
            }
        }
        *rho.data_mut() = acc;
        Ok(())
    }
}

/// Bit, phase or bit-phase flip with error probability `p` on qubit `q`.
pub fn flip_channel(rho: &mut DensityMatrix, axis: PauliAxis, q: QubitIndex, p: f64) -> Result<(), EngineError> {
    KrausChannel::flip(axis, p)?.apply(rho, q)
}

pub fn amp_damping(rho: &mut DensityMatrix, q: QubitIndex, p: f64) -> Result<(), EngineError> {
    KrausChannel::amplitude_damping(p)?.apply(rho, q)
}

pub fn dpl_channel(rho: &mut DensityMatrix, q: QubitIndex, p: f64) -> Result<(), EngineError> {
    KrausChannel::depolarizing(p)?.apply(rho, q)
}

/// Born-rule measurement of qubit `q` on a state vector with draw `u`.
pub fn dense_measure(state: &mut DenseState, q: QubitIndex, u: f64) -> Result<u8, EngineError> {
    let n = state.n();
    check_qubit(q, n)?;
    let mask = qubit_mask(n, q) as usize;
    let (mut p0, mut p1) = (0.0, 0.0);
    for (i, a) in state.amplitudes().iter().enumerate() {
        if i & mask == 0 {
            p0 += a.norm_sqr();
        } else {
            p1 += a.norm_sqr();
        }
    }
    let mut outcome = choose_outcome(p0, u)?;
    if outcome == 1 && p1 <= 0.0 {
        outcome = 0;
    }
    let (p, wanted) = if outcome == 0 { (p0, 0) } else { (p1, mask) };
    if p <= 0.0 {
        return Err(EngineError::DegenerateProbability(p));
    }
    let scale = 1.0 / p.sqrt();
    for (i, a) in state.amplitudes_mut().iter_mut().enumerate() {
        *a = if i & mask == wanted { *a * scale } else { Complex64::default() };
    }
    Ok(outcome)
}

/// `ρ ← PρP / Tr(Pρ)` for the drawn outcome's projector `P`.
pub fn dm_measure(rho: &mut DensityMatrix, q: QubitIndex, u: f64) -> Result<u8, EngineError> {
    let n = rho.n();
    check_qubit(q, n)?;
    let mask = qubit_mask(n, q) as usize;
    let pops = rho.populations();
    let p0: f64 = pops.iter().enumerate().filter(|(i, _)| i & mask == 0).map(|(_, p)| p).sum();
    let p1: f64 = pops.iter().enumerate().filter(|(i, _)| i & mask != 0).map(|(_, p)| p).sum();
    let mut outcome = choose_outcome(p0, u)?;
    if outcome == 1 && p1 <= 0.0 {
        outcome = 0;
    }
    let (p, wanted) = if outcome == 0 { (p0, 0) } else { (p1, mask) };
    if p <= 0.0 {
        return Err(EngineError::DegenerateProbability(p));
    }
    let dim = rho.dim();
    for (idx, v) in rho.data_mut().iter_mut().enumerate() {
        let (r, c) = (idx / dim, idx % dim);
        *v = if r & mask == wanted && c & mask == wanted { *v / p } else { Complex64::default() };
    }
    Ok(outcome)
}

fn permute_vector(v: &[Complex64], f: impl Fn(usize) -> usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); v.len()];
    for (i, &a) in v.iter().enumerate() {
        out[f(i)] = a;
    }
    out
}

fn permute_matrix(rho: &DensityMatrix, f: impl Fn(usize) -> usize) -> Vec<Complex64> {
    let dim = rho.dim();
    let mut out = vec![Complex64::default(); dim * dim];
    for (idx, &v) in rho.data().iter().enumerate() {
        out[f(idx / dim) * dim + f(idx % dim)] = v;
    }
    out
}

fn cnot_map(n: usize, target: QubitIndex, controls: &[QubitIndex]) -> impl Fn(usize) -> usize {
    let ctrl = controls.iter().fold(0, |m, &c| m | qubit_mask(n, c)) as usize;
    let flip = qubit_mask(n, target) as usize;
    move |i| if i & ctrl == ctrl { i ^ flip } else { i }
}

fn swap_map(n: usize, a: QubitIndex, b: QubitIndex) -> impl Fn(usize) -> usize {
    let (ma, mb) = (qubit_mask(n, a) as usize, qubit_mask(n, b) as usize);
    move |i| if (i & ma == 0) != (i & mb == 0) { i ^ (ma | mb) } else { i }
}

fn hadamard_gate() -> SparseGate {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    SparseGate::from_matrix([h, h, h, -h]).expect("hadamard is unitary")
}

/// State-vector engine; the oracle for the bitwise engine.
#[derive(Debug, Clone)]
pub struct VectorEngine<R = ShotRng> {
    state: DenseState,
    record: MeasurementRecord,
    rng: R,
}

impl VectorEngine<ShotRng> {
    pub fn new(n: usize, seed: u64, cap: &Capacity) -> Result<Self, EngineError> {
        Ok(Self::with_source(DenseState::new(n, cap)?, ShotRng::new(seed)))
    }
}

impl<R: UniformSource> VectorEngine<R> {
    pub fn with_source(state: DenseState, rng: R) -> Self {
        let record = MeasurementRecord::new(state.n());
        Self { state, record, rng }
    }

    pub fn state(&self) -> &DenseState {
        &self.state
    }
}

impl<R: UniformSource> Engine for VectorEngine<R> {
    fn n(&self) -> usize {
        self.state.n()
    }

    fn apply_gate(&mut self, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError> {
        dense_apply(&mut self.state, gate, q)
    }

    fn hadamard(&mut self, q: QubitIndex) -> Result<(), EngineError> {
        check_qubit(q, self.n())?;
        dense_apply(&mut self.state, &hadamard_gate(), q)
    }

    fn cnot(&mut self, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        let n = self.n();
        check_controlled(target, controls, n)?;
        let permuted = permute_vector(self.state.amplitudes(), cnot_map(n, target, controls));
        self.state.amplitudes_mut().copy_from_slice(&permuted);
        Ok(())
    }

    fn cphase(&mut self, phase: Complex64, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        let n = self.n();
        check_controlled(target, controls, n)?;
        check_phase(phase)?;
        let mask = controls.iter().fold(qubit_mask(n, target), |m, &c| m | qubit_mask(n, c)) as usize;
        for (i, a) in self.state.amplitudes_mut().iter_mut().enumerate() {
            if i & mask == mask {
                *a *= phase;
            }
        }
        Ok(())
    }

    fn swap(&mut self, a: QubitIndex, b: QubitIndex) -> Result<(), EngineError> {
        let n = self.n();
        check_qubit(a, n)?;
        check_qubit(b, n)?;
        let permuted = permute_vector(self.state.amplitudes(), swap_map(n, a, b));
        self.state.amplitudes_mut().copy_from_slice(&permuted);
        Ok(())
    }

    fn measure(&mut self, q: QubitIndex) -> Result<u8, EngineError> {
        check_qubit(q, self.n())?;
        let u = self.rng.next_uniform();
        let outcome = dense_measure(&mut self.state, q, u)?;
        self.record.set(q, outcome);
        Ok(outcome)
    }

    fn record(&self) -> &MeasurementRecord {
        &self.record
    }

    fn dump(&self) -> String {
        self.state.dump()
    }

    fn check_invariants(&self) -> Result<(), EngineError> {
        if !self.state.is_normalized() {
            return Err(EngineError::Invariant(format!(
                "squared norm {} differs from 1",
                self.state.norm_sqr()
            )));
        }
        Ok(())
    }
}

/// Density-matrix engine; the only engine that supports noise channels.
#[derive(Debug, Clone)]
pub struct DensityEngine<R = ShotRng> {
    rho: DensityMatrix,
    record: MeasurementRecord,
    rng: R,
}

impl DensityEngine<ShotRng> {
    pub fn new(n: usize, seed: u64, cap: &Capacity) -> Result<Self, EngineError> {
        Ok(Self::with_source(DensityMatrix::new(n, cap)?, ShotRng::new(seed)))
    }
}

impl<R: UniformSource> DensityEngine<R> {
    pub fn with_source(rho: DensityMatrix, rng: R) -> Self {
        let record = MeasurementRecord::new(rho.n());
        Self { rho, record, rng }
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn flip(&mut self, axis: PauliAxis, q: QubitIndex, p: f64) -> Result<(), EngineError> {
        flip_channel(&mut self.rho, axis, q, p)
    }

    pub fn amp_damping(&mut self, q: QubitIndex, p: f64) -> Result<(), EngineError> {
        amp_damping(&mut self.rho, q, p)
    }

    pub fn dpl_channel(&mut self, q: QubitIndex, p: f64) -> Result<(), EngineError> {
        dpl_channel(&mut self.rho, q, p)
    }
}

impl<R: UniformSource> Engine for DensityEngine<R> {
    fn n(&self) -> usize {
        self.rho.n()
    }

    fn apply_gate(&mut self, gate: &SparseGate, q: QubitIndex) -> Result<(), EngineError> {
        dm_apply(&mut self.rho, gate, q)
    }

    fn hadamard(&mut self, q: QubitIndex) -> Result<(), EngineError> {
        check_qubit(q, self.n())?;
        dm_apply(&mut self.rho, &hadamard_gate(), q)
    }

    fn cnot(&mut self, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        let n = self.n();
        check_controlled(target, controls, n)?;
        *self.rho.data_mut() = permute_matrix(&self.rho, cnot_map(n, target, controls));
        Ok(())
    }

    fn cphase(&mut self, phase: Complex64, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), EngineError> {
        let n = self.n();
        check_controlled(target, controls, n)?;
        check_phase(phase)?;
        let mask = controls.iter().fold(qubit_mask(n, target), |m, &c| m | qubit_mask(n, c)) as usize;
        let dim = self.rho.dim();
        let one = Complex64::new(1.0, 0.0);
        let d = |i: usize| if i & mask == mask { phase } else { one };
        for (idx, v) in self.rho.data_mut().iter_mut().enumerate() {
            *v *= d(idx / dim) * d(idx % dim).conj();
        }
        Ok(())
    }

    fn swap(&mut self, a: QubitIndex, b: QubitIndex) -> Result<(), EngineError> {
        let n = self.n();
        check_qubit(a, n)?;
        check_qubit(b, n)?;
        *self.rho.data_mut() = permute_matrix(&self.rho, swap_map(n, a, b));
        Ok(())
    }

    fn measure(&mut self, q: QubitIndex) -> Result<u8, EngineError> {
        check_qubit(q, self.n())?;
        let u = self.rng.next_uniform();
        let outcome = dm_measure(&mut self.rho, q, u)?;
        self.record.set(q, outcome);
        Ok(outcome)
    }

    fn record(&self) -> &MeasurementRecord {
        &self.record
    }

    fn dump(&self) -> String {
        self.rho.dump()
    }

    fn check_invariants(&self) -> Result<(), EngineError> {
        let trace = self.rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(EngineError::Invariant(format!("trace {trace} differs from 1")));
        }
        let herm = self.rho.hermiticity_error();
        if herm > CHANNEL_TOL {
            return Err(EngineError::Invariant(format!("hermiticity error {herm:.3e}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ScriptedDraws;
    use crate::gates::{GateName, GateParams};

    const TOL: f64 = 1e-12;
    const R: f64 = FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn vec_state(amps: &[Complex64]) -> DenseState {
        DenseState::from_vec(amps.to_vec()).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn std_gate(name: GateName) -> SparseGate {
        SparseGate::standard(name, GateParams::default()).unwrap()
    }

    fn diag_rho(d: &[f64]) -> DensityMatrix {
        let dim = d.len();
        let mut data = vec![Complex64::default(); dim * dim];
        for (i, &v) in d.iter().enumerate() {
            data[i * dim + i] = c(v, 0.0);
        }
        DensityMatrix::from_row_major(dim.trailing_zeros() as usize, data).unwrap()
    }

    fn assert_rho(rho: &DensityMatrix, expected: &[Complex64]) {
        assert!(max_diff(rho.data(), expected) < TOL, "{:?}", rho.data());
    }

    #[test]
    fn dense_apply_examples() {
        let h = std_gate(GateName::H);
        let mut s = vec_state(&[c(1.0, 0.0), c(0.0, 0.0)]);
        dense_apply(&mut s, &h, 0).unwrap();
        assert!(max_diff(s.amplitudes(), &[c(R, 0.0), c(R, 0.0)]) < TOL);

        let mut s = vec_state(&[c(0.0, 0.0), c(1.0, 0.0)]);
        dense_apply(&mut s, &h, 0).unwrap();
        assert!(max_diff(s.amplitudes(), &[c(R, 0.0), c(-R, 0.0)]) < TOL);

        let id = SparseGate::from_permutation(|i| i, 2).unwrap();
        let amps = [c(0.1, 0.2), c(0.3, 0.0), c(0.0, -0.5), c(0.7, 0.1)];
        let mut s = vec_state(&amps);
        dense_apply(&mut s, &id, 0).unwrap();
        assert_eq!(s.amplitudes(), &amps);
    }

    #[test]
    fn dense_apply_respects_msb_convention() {
        let x = std_gate(GateName::X);
        let mut s = DenseState::new(3, &Capacity::default()).unwrap();
        dense_apply(&mut s, &x, 0).unwrap();
        assert_eq!(s.amplitudes()[0b100], c(1.0, 0.0));
        assert!(dense_apply(&mut s, &SparseGate::from_permutation(|i| i, 2).unwrap(), 2).is_err());
    }

    #[test]
    fn dm_apply_examples() {
        let mut rho = diag_rho(&[1.0, 0.0]);
        dm_apply(&mut rho, &std_gate(GateName::X), 0).unwrap();
        assert_rho(&rho, diag_rho(&[0.0, 1.0]).data());

        let mut rho = diag_rho(&[1.0, 0.0]);
        dm_apply(&mut rho, &std_gate(GateName::H), 0).unwrap();
        assert_rho(&rho, &[c(0.5, 0.0); 4]);

        let mut rho = diag_rho(&[0.3, 0.7]);
        dm_apply(&mut rho, &SparseGate::from_permutation(|i| i, 1).unwrap(), 0).unwrap();
        assert_rho(&rho, diag_rho(&[0.3, 0.7]).data());
    }

    #[test]
    fn flip_channel_examples() {
        let mut rho = diag_rho(&[1.0, 0.0]);
        flip_channel(&mut rho, PauliAxis::X, 0, 0.0).unwrap();
        assert_rho(&rho, diag_rho(&[1.0, 0.0]).data());

        let mut rho = diag_rho(&[1.0, 0.0]);
        flip_channel(&mut rho, PauliAxis::X, 0, 0.25).unwrap();
        assert_rho(&rho, diag_rho(&[0.75, 0.25]).data());

        let mut rho = DensityMatrix::from_row_major(1, vec![c(0.5, 0.0); 4]).unwrap();
        flip_channel(&mut rho, PauliAxis::Z, 0, 0.5).unwrap();
        assert_rho(&rho, diag_rho(&[0.5, 0.5]).data());

        let mut rho = diag_rho(&[1.0, 0.0]);
        assert_eq!(
            flip_channel(&mut rho, PauliAxis::Y, 0, 1.5),
            Err(EngineError::InvalidProbability(1.5))
        );
    }

    #[test]
    fn amp_damping_examples() {
        let mut rho = diag_rho(&[0.2, 0.8]);
        amp_damping(&mut rho, 0, 0.0).unwrap();
        assert_rho(&rho, diag_rho(&[0.2, 0.8]).data());

        let mut rho = diag_rho(&[0.0, 1.0]);
        amp_damping(&mut rho, 0, 1.0).unwrap();
        assert_rho(&rho, diag_rho(&[1.0, 0.0]).data());

        let mut rho = diag_rho(&[0.0, 1.0]);
        amp_damping(&mut rho, 0, 0.36).unwrap();
        assert_rho(&rho, diag_rho(&[0.36, 0.64]).data());
    }

    #[test]
    fn printed_damping_pair_is_not_trace_preserving() {
        // K1 with √p in the lower-left maps |0⟩ → |1⟩; paired with
        // diag(1, √(1-p)) it sums to diag(1 + p, 1 - p).
        let p: f64 = 0.3;
        let zero = Complex64::default();
        let k0 = [c(1.0, 0.0), zero, zero, c((1.0 - p).sqrt(), 0.0)];
        let k1 = [zero, zero, c(p.sqrt(), 0.0), zero];
        assert!(KrausChannel::new(vec![k0, k1]).is_err());
        assert!(KrausChannel::amplitude_damping(p).unwrap().completeness_deviation() < CHANNEL_TOL);
    }

    #[test]
    fn depolarizing_examples() {
        let mut rho = diag_rho(&[1.0, 0.0]);
        dpl_channel(&mut rho, 0, 0.0).unwrap();
        assert_rho(&rho, diag_rho(&[1.0, 0.0]).data());

        let mut rho = diag_rho(&[1.0, 0.0]);
        dpl_channel(&mut rho, 0, 1.0).unwrap();
        assert_rho(&rho, diag_rho(&[0.5, 0.5]).data());

        let mut rho = diag_rho(&[1.0, 0.0]);
        dpl_channel(&mut rho, 0, 0.4).unwrap();
        assert_rho(&rho, diag_rho(&[0.8, 0.2]).data());
    }

    #[test]
    fn channel_on_second_qubit_of_two() {
        // |01⟩⟨01| with a full bit flip on qubit 1 becomes |00⟩⟨00|
        let mut rho = diag_rho(&[0.0, 1.0, 0.0, 0.0]);
        flip_channel(&mut rho, PauliAxis::X, 1, 1.0).unwrap();
        assert_rho(&rho, diag_rho(&[1.0, 0.0, 0.0, 0.0]).data());
    }

    #[test]
    fn dense_measure_examples() {
        let mut zero = vec_state(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(dense_measure(&mut zero, 0, 0.99).unwrap(), 0);

        let mut plus = vec_state(&[c(R, 0.0), c(R, 0.0)]);
        assert_eq!(dense_measure(&mut plus, 0, 0.0).unwrap(), 0);
        assert!(max_diff(plus.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]) < TOL);

        let mut rho = diag_rho(&[0.75, 0.25]);
        assert_eq!(dm_measure(&mut rho, 0, 0.8).unwrap(), 1);
        assert_rho(&rho, diag_rho(&[0.0, 1.0]).data());
    }

    #[test]
    fn mixed_state_measurement_statistics() {
        let shots = 10_000;
        let mut zeros = 0;
        let mut rng = ShotRng::new(2024);
        for _ in 0..shots {
            let mut rho = diag_rho(&[0.75, 0.25]);
            if dm_measure(&mut rho, 0, rng.next_uniform()).unwrap() == 0 {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / shots as f64;
        assert!((freq - 0.75).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn pure_density_tracks_vector_engine() {
        let cap = Capacity::default();
        let mut v = VectorEngine::with_source(DenseState::new(3, &cap).unwrap(), ScriptedDraws::low());
        let mut d = DensityEngine::with_source(DensityMatrix::new(3, &cap).unwrap(), ScriptedDraws::low());
        let rx = SparseGate::standard(GateName::Rx, GateParams::theta(0.7)).unwrap();
        for e in [&mut v as &mut dyn Engine, &mut d as &mut dyn Engine] {
            e.hadamard(0).unwrap();
            e.apply_gate(&rx, 2).unwrap();
            e.cnot(1, &[0]).unwrap();
            e.cphase(Complex64::from_polar(1.0, 0.4), 2, &[1]).unwrap();
            e.swap(0, 2).unwrap();
            e.qft(0, 2).unwrap();
        }
        let expected = DensityMatrix::from_pure(v.state());
        assert!(max_diff(d.rho().data(), expected.data()) < 1e-10);
        d.check_invariants().unwrap();
        v.check_invariants().unwrap();
    }
}
