//! State representations: the sparse key→amplitude map, the dense vector and
//! the dense density matrix, plus the measurement record.

use std::fmt::Write as _;

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::bits::{low_mask, BasisKey, QubitIndex, KEY_BITS};

/// Amplitudes with modulus at or below this are treated as exact zeros.
pub const PRUNE_EPS: f64 = 1e-12;

/// Allowed drift of the squared norm away from 1.
pub const NORM_TOL: f64 = 1e-9;

/// Environment variable overriding the dense state-vector qubit cap.
pub const DENSE_CAP_ENV: &str = "SPARSIM_DENSE_CAP";

pub type AmplitudeMap = FxHashMap<BasisKey, Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("register size {0} outside 1..=64")]
    InvalidSize(usize),
    #[error("{kind} engine capacity exceeded: {n} qubits > cap {cap}")]
    Capacity {
        kind: &'static str,
        n: usize,
        cap: usize,
    },
    #[error("register size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("basis key {key} does not fit in {n} qubits")]
    KeyOutOfRange { key: BasisKey, n: usize },
    #[error("qubit {q} out of range for {n} qubits")]
    QubitOutOfRange { q: QubitIndex, n: usize },
}

/// Qubit caps for the dense engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capacity {
    pub vector: usize,
    pub density: usize,
}

impl Default for Capacity {
    fn default() -> Self {
        Self {
            vector: 24,
            density: 12,
        }
    }
}

impl Capacity {
    /// Reads `SPARSIM_DENSE_CAP`. It sets the state-vector cap; the density
    /// matrix cap follows as half of it, since ρ holds 4ⁿ entries.
    pub fn from_env() -> Self {
        match std::env::var(DENSE_CAP_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            Some(cap) => Self::with_vector_cap(cap),
            None => Self::default(),
        }
    }

    pub fn with_vector_cap(cap: usize) -> Self {
        let cap = cap.min(KEY_BITS);
        Self {
            vector: cap,
            density: cap / 2,
        }
    }

    pub fn check_vector(&self, n: usize) -> Result<(), StateError> {
        if n > self.vector {
            return Err(StateError::Capacity {
                kind: "dense",
                n,
                cap: self.vector,
            });
        }
        Ok(())
    }

    pub fn check_density(&self, n: usize) -> Result<(), StateError> {
        if n > self.density {
            return Err(StateError::Capacity {
                kind: "density",
                n,
                cap: self.density,
            });
        }
        Ok(())
    }
}

fn check_register(n: usize) -> Result<(), StateError> {
    if n == 0 || n > KEY_BITS {
        return Err(StateError::InvalidSize(n));
    }
    Ok(())
}

/// Pure state stored as a map from basis key to amplitude. Only amplitudes
/// with modulus above [`PRUNE_EPS`] are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    n: usize,
    amps: AmplitudeMap,
}

impl SparseState {
    /// `|0…0⟩` on `n` qubits.
    pub fn new(n: usize) -> Result<Self, StateError> {
        check_register(n)?;
        let mut amps = AmplitudeMap::default();
        amps.insert(0, Complex64::new(1.0, 0.0));
        Ok(Self { n, amps })
    }

    /// Builds a state from explicit `(key, amplitude)` pairs. Repeated keys
    /// accumulate; the result is pruned but not renormalized.
    pub fn from_amplitudes<I>(n: usize, entries: I) -> Result<Self, StateError>
    where
        I: IntoIterator<Item = (BasisKey, Complex64)>,
    {
        check_register(n)?;
        let mut amps = AmplitudeMap::default();
        for (key, amp) in entries {
            if key > low_mask(n) {
                return Err(StateError::KeyOutOfRange { key, n });
            }
            *amps.entry(key).or_default() += amp;
        }
        let mut state = Self { n, amps };
        state.prune();
        Ok(state)
    }

    /// Wraps an already-built map. Callers guarantee keys fit in `n` bits.
    pub(crate) fn from_map(n: usize, amps: AmplitudeMap) -> Self {
        Self { n, amps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored basis states.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, key: BasisKey) -> Complex64 {
        self.amps.get(&key).copied().unwrap_or_default()
    }

    pub fn contains(&self, key: BasisKey) -> bool {
        self.amps.contains_key(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisKey, Complex64)> + '_ {
        self.amps.iter().map(|(&k, &a)| (k, a))
    }

    pub fn map(&self) -> &AmplitudeMap {
        &self.amps
    }

    pub(crate) fn map_mut(&mut self) -> &mut AmplitudeMap {
        &mut self.amps
    }

    /// Stored keys in ascending order.
    pub fn sorted_keys(&self) -> Vec<BasisKey> {
        let mut keys: Vec<_> = self.amps.keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Drops every amplitude with modulus ≤ [`PRUNE_EPS`].
    pub fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() > PRUNE_EPS);
    }

    pub fn pruned(mut self) -> Self {
        self.prune();
        self
    }

    pub fn to_dense(&self, cap: &Capacity) -> Result<DenseState, StateError> {
        cap.check_vector(self.n)?;
        let mut amps = vec![Complex64::default(); 1usize << self.n];
        for (&k, &a) in &self.amps {
            amps[k as usize] = a;
        }
        Ok(DenseState { n: self.n, amps })
    }

    pub fn from_dense(dense: &DenseState) -> Self {
        let amps = dense
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > PRUNE_EPS)
            .map(|(k, &a)| (k as BasisKey, a))
            .collect();
        Self { n: dense.n, amps }
    }

    /// Text dump, one line per stored key in ascending order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for key in self.sorted_keys() {
            dump_line(&mut out, key, self.n, self.amps[&key]);
        }
        out
    }
}

/// Dense length-2ⁿ amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn new(n: usize, cap: &Capacity) -> Result<Self, StateError> {
        check_register(n)?;
        cap.check_vector(n)?;
        let mut amps = vec![Complex64::default(); 1usize << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_vec(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(StateError::InvalidSize(len));
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    /// Same format as [`SparseState::dump`]; zero entries are skipped.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, &a) in self.amps.iter().enumerate() {
            if a.norm() > PRUNE_EPS {
                dump_line(&mut out, k as BasisKey, self.n, a);
            }
        }
        out
    }
}

/// Dense 2ⁿ×2ⁿ density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|`.
    pub fn new(n: usize, cap: &Capacity) -> Result<Self, StateError> {
        check_register(n)?;
        cap.check_density(n)?;
        let dim = 1usize << n;
        let mut data = vec![Complex64::default(); dim * dim];
        data[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, data })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &DenseState) -> Self {
        let amps = psi.amplitudes();
        let dim = amps.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(amps[r] * amps[c].conj());
            }
        }
        Self { n: psi.n(), data }
    }

    /// Wraps a row-major square matrix with power-of-two dimension.
    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Result<Self, StateError> {
        check_register(n)?;
        let dim = 1usize << n;
        if data.len() != dim * dim {
            return Err(StateError::SizeMismatch(data.len(), dim * dim));
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise deviation `|ρ_rc − conj(ρ_cr)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Diagonal of ρ: the computational-basis populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    /// Dumps vec(ρ) as a 2n-qubit state: the key is `row·2ⁿ + col`, so the
    /// binary label is the row bits followed by the column bits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, &a) in self.data.iter().enumerate() {
            if a.norm() > PRUNE_EPS {
                dump_line(&mut out, k as BasisKey, 2 * self.n, a);
            }
        }
        out
    }
}

fn dump_line(out: &mut String, key: BasisKey, width: usize, amp: Complex64) {
    let _ = writeln!(
        out,
        "{key} {key:0width$b} {:.16e} {:.16e}",
        amp.re,
        amp.im,
        width = width
    );
}

/// Latest outcome per qubit; `None` until the qubit is measured.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    bits: Vec<Option<u8>>,
}

impl MeasurementRecord {
    pub fn new(n: usize) -> Self {
        Self { bits: vec![None; n] }
    }

    pub fn set(&mut self, q: QubitIndex, bit: u8) {
        self.bits[q] = Some(bit);
    }

    pub fn get(&self, q: QubitIndex) -> Option<u8> {
        self.bits[q]
    }

    pub fn bits(&self) -> &[Option<u8>] {
        &self.bits
    }

    pub fn any_measured(&self) -> bool {
        self.bits.iter().any(Option::is_some)
    }

    /// Qubit 0 first; unmeasured qubits render as `.`.
    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|b| match b {
                Some(0) => '0',
                Some(_) => '1',
                None => '.',
            })
            .collect()
    }
}

/// Anything that can be read as an amplitude vector over `n` qubits.
pub trait Amplitudes {
    fn n(&self) -> usize;
    fn amplitude_at(&self, key: BasisKey) -> Complex64;
    /// Every key that may hold a nonzero amplitude.
    fn support(&self) -> Vec<BasisKey>;
}

impl Amplitudes for SparseState {
    fn n(&self) -> usize {
        self.n
    }
    fn amplitude_at(&self, key: BasisKey) -> Complex64 {
        self.amplitude(key)
    }
    fn support(&self) -> Vec<BasisKey> {
        self.amps.keys().copied().collect()
    }
}

impl Amplitudes for DenseState {
    fn n(&self) -> usize {
        self.n
    }
    fn amplitude_at(&self, key: BasisKey) -> Complex64 {
        self.amps.get(key as usize).copied().unwrap_or_default()
    }
    fn support(&self) -> Vec<BasisKey> {
        (0..self.amps.len() as BasisKey).collect()
    }
}

/// Largest entrywise amplitude difference `max_i |a_i − b_i|`.
pub fn fidelity_check<A: Amplitudes + ?Sized, B: Amplitudes + ?Sized>(
    a: &A,
    b: &B,
) -> Result<f64, StateError> {
    if a.n() != b.n() {
        return Err(StateError::SizeMismatch(a.n(), b.n()));
    }
    let worst = a
        .support()
        .into_iter()
        .chain(b.support())
        .map(|k| (a.amplitude_at(k) - b.amplitude_at(k)).norm())
        .fold(0.0, f64::max);
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn init_sparse() {
        let s = SparseState::new(3).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(0), c(1.0));
        assert!(SparseState::new(64).is_ok());
        assert_eq!(SparseState::new(65), Err(StateError::InvalidSize(65)));
        assert_eq!(SparseState::new(0), Err(StateError::InvalidSize(0)));
    }

    #[test]
    fn sparse_to_dense_placement() {
        let cap = Capacity::default();
        let s = SparseState::new(1).unwrap();
        assert_eq!(s.to_dense(&cap).unwrap().amplitudes(), &[c(1.0), c(0.0)]);

        let bell = SparseState::from_amplitudes(2, [(0, c(FRAC_1_SQRT_2)), (3, c(FRAC_1_SQRT_2))]).unwrap();
        assert_eq!(
            bell.to_dense(&cap).unwrap().amplitudes(),
            &[c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]
        );

        let big = SparseState::new(30).unwrap();
        assert!(matches!(big.to_dense(&cap), Err(StateError::Capacity { n: 30, cap: 24, .. })));
    }

    #[test]
    fn prune_examples() {
        let mut s = SparseState::from_map(1, [(0, c(1.0)), (1, c(1e-16))].into_iter().collect());
        s.prune();
        assert_eq!(s.sorted_keys(), vec![0]);

        let plus = SparseState::from_amplitudes(1, [(0, c(FRAC_1_SQRT_2)), (1, c(FRAC_1_SQRT_2))]).unwrap();
        assert_eq!(plus.clone().pruned(), plus);

        let empty = SparseState::from_map(2, AmplitudeMap::default()).pruned();
        assert!(empty.is_empty());
    }

    #[test]
    fn fidelity_examples() {
        let zero = SparseState::new(1).unwrap();
        let one = SparseState::from_amplitudes(1, [(1, c(1.0))]).unwrap();
        assert_eq!(fidelity_check(&zero, &zero).unwrap(), 0.0);
        assert_eq!(fidelity_check(&zero, &one).unwrap(), 1.0);
        let dense = zero.to_dense(&Capacity::default()).unwrap();
        assert_eq!(fidelity_check(&zero, &dense).unwrap(), 0.0);
        assert!(fidelity_check(&zero, &SparseState::new(2).unwrap()).is_err());
    }

    #[test]
    fn dense_round_trip_keeps_support() {
        let s = SparseState::from_amplitudes(3, [(1, c(0.6)), (6, Complex64::new(0.0, 0.8))]).unwrap();
        let back = SparseState::from_dense(&s.to_dense(&Capacity::default()).unwrap());
        assert_eq!(back, s);
    }

    #[test]
    fn key_outside_register_rejected() {
        assert_eq!(
            SparseState::from_amplitudes(2, [(4, c(1.0))]),
            Err(StateError::KeyOutOfRange { key: 4, n: 2 })
        );
    }

    #[test]
    fn dump_format() {
        let s = SparseState::from_amplitudes(2, [(3, c(FRAC_1_SQRT_2)), (0, c(FRAC_1_SQRT_2))]).unwrap();
        let dump = s.dump();
        let lines: Vec<_> = dump.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "0 00 7.0710678118654757e-1 0.0000000000000000e0");
        assert!(lines[1].starts_with("3 11 "));
        let dense = s.to_dense(&Capacity::default()).unwrap();
        assert_eq!(dense.dump(), dump);
    }

    #[test]
    fn density_basics() {
        let cap = Capacity::default();
        let rho = DensityMatrix::new(2, &cap).unwrap();
        assert_eq!(rho.trace(), c(1.0));
        assert_eq!(rho.hermiticity_error(), 0.0);
        assert!(DensityMatrix::new(13, &cap).is_err());
        assert_eq!(rho.dump(), "0 0000 1.0000000000000000e0 0.0000000000000000e0\n");
    }

    #[test]
    fn env_cap_halves_for_density() {
        let cap = Capacity::with_vector_cap(20);
        assert_eq!(cap, Capacity { vector: 20, density: 10 });
    }

    #[test]
    fn record_bitstring() {
        let mut r = MeasurementRecord::new(3);
        assert!(!r.any_measured());
        r.set(0, 1);
        r.set(2, 0);
        assert_eq!(r.to_bitstring(), "1.0");
        assert_eq!(r.bits(), &[Some(1), None, Some(0)]);
    }
}
