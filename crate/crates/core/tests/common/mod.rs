#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsim::bits::BasisKey;
use sparsim::{Circuit, Complex64, GateName, GateParams, Instruction, SparseGate, SparseState};

pub const PERM_GATE: &str = "perm";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Two-qubit cyclic shift |i⟩ → |i+1 mod 4⟩.
pub fn perm_gate() -> SparseGate {
    SparseGate::from_permutation(|i| (i + 1) % 4, 2).unwrap()
}

fn distinct_qubits(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<usize> {
    let mut picked = Vec::with_capacity(count);
    while picked.len() < count {
        let q = rng.random_range(0..n);
        if !picked.contains(&q) {
            picked.push(q);
        }
    }
    picked
}

pub fn random_instruction(rng: &mut ChaCha8Rng, n: usize) -> Instruction {
    let angle = |rng: &mut ChaCha8Rng| rng.random_range(-PI..PI);
    match rng.random_range(0..7) {
        0 | 1 => {
            let name = GateName::ALL[rng.random_range(0..GateName::ALL.len())];
            let params = GateParams {
                theta: angle(rng),
                phi: angle(rng),
                lambda: angle(rng),
            };
            Instruction::Single {
                name,
                params,
                qubit: rng.random_range(0..n),
            }
        }
        2 => {
            let k = rng.random_range(2..=3.min(n));
            let qs = distinct_qubits(rng, n, k);
            Instruction::Cnot {
                target: qs[0],
                controls: qs[1..].to_vec(),
            }
        }
        3 => {
            let k = rng.random_range(2..=3.min(n));
            let qs = distinct_qubits(rng, n, k);
            Instruction::Cphase {
                theta: angle(rng),
                target: qs[0],
                controls: qs[1..].to_vec(),
            }
        }
        4 => {
            let qs = distinct_qubits(rng, n, 2);
            Instruction::Swap { a: qs[0], b: qs[1] }
        }
        5 => {
            let first = rng.random_range(0..n);
            Instruction::Qft {
                first,
                last: rng.random_range(first..n),
            }
        }
        _ => Instruction::Apply {
            gate: PERM_GATE.into(),
            qubit: rng.random_range(0..n - 1),
        },
    }
}

/// Unitary circuit on `n ≥ 2` qubits with `depth` random instructions,
/// starting with a layer of Hadamards so the state is not trivially sparse.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Circuit {
    let mut circuit = Circuit::new(n).unwrap();
    circuit.define_gate(PERM_GATE, perm_gate()).unwrap();
    for _ in 0..depth {
        circuit.push(random_instruction(rng, n)).unwrap();
    }
    circuit
}

/// Normalized state on `n` qubits with `support` random keys.
pub fn random_sparse_state(rng: &mut ChaCha8Rng, n: usize, support: usize) -> SparseState {
    let max = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let entries: Vec<(BasisKey, Complex64)> = (0..support)
        .map(|_| {
            (
                rng.random_range(0..=max),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    let raw = SparseState::from_amplitudes(n, entries.clone()).unwrap();
    let norm = raw.norm_sqr().sqrt();
    SparseState::from_amplitudes(n, raw.iter().map(|(k, a)| (k, a / norm)).collect::<Vec<_>>()).unwrap()
}

/// Dense row-major complex matrix used by the reference computations.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for col in 0..dim {
                m.data[r * dim + col] = f(r, col);
            }
        }
        m
    }

    pub fn at(&self, r: usize, col: usize) -> Complex64 {
        self.data[r * self.dim + col]
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.dim, |r, col| (0..self.dim).map(|k| self.at(r, k) * other.at(k, col)).sum())
    }

    pub fn adjoint(&self) -> Mat {
        Mat::from_fn(self.dim, |r, col| self.at(col, r).conj())
    }

    pub fn kron(&self, other: &Mat) -> Mat {
        let dim = self.dim * other.dim;
        Mat::from_fn(dim, |r, col| {
            self.at(r / other.dim, col / other.dim) * other.at(r % other.dim, col % other.dim)
        })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim).map(|r| (0..self.dim).map(|k| self.at(r, k) * v[k]).sum()).collect()
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat::from_fn(self.dim, |r, col| self.at(r, col) + other.at(r, col))
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat::from_fn(self.dim, |r, col| self.at(r, col) * s)
    }

    pub fn max_diff(&self, other: &Mat) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// `I_{2^q} ⊗ G ⊗ I_{2^{n-q-w}}` for a `w`-qubit gate matrix `g`.
pub fn embed(g: &Mat, w: usize, q: usize, n: usize) -> Mat {
    Mat::identity(1 << q).kron(g).kron(&Mat::identity(1 << (n - q - w)))
}

/// Bit of qubit `q` in an `n`-qubit index, qubit 0 most significant.
pub fn bit(index: usize, q: usize, n: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// Full unitary of one instruction, built entry by entry without the
/// engines' index arithmetic.
pub fn reference_unitary(circuit: &Circuit, instruction: &Instruction) -> Mat {
    let n = circuit.n();
    let dim = 1usize << n;
    match instruction {
        Instruction::Single { name, params, qubit } => {
            let g = sparsim::gates::standard_matrix(*name, *params);
            embed(&Mat { dim: 2, data: g.to_vec() }, 1, *qubit, n)
        }
        Instruction::Cnot { target, controls } => Mat::from_fn(dim, |r, col| {
            let fire = controls.iter().all(|&q| bit(col, q, n) == 1);
            let image = if fire { col ^ (1 << (n - 1 - target)) } else { col };
            if r == image { c(1.0, 0.0) } else { c(0.0, 0.0) }
        }),
        Instruction::Cphase { theta, target, controls } => Mat::from_fn(dim, |r, col| {
            if r != col {
                return c(0.0, 0.0);
            }
            let fire = bit(col, *target, n) == 1 && controls.iter().all(|&q| bit(col, q, n) == 1);
            if fire { Complex64::from_polar(1.0, *theta) } else { c(1.0, 0.0) }
        }),
        Instruction::Swap { a, b } => Mat::from_fn(dim, |r, col| {
            let mut image = col & !(1 << (n - 1 - a)) & !(1 << (n - 1 - b));
            image |= bit(col, *a, n) << (n - 1 - b);
            image |= bit(col, *b, n) << (n - 1 - a);
            if r == image { c(1.0, 0.0) } else { c(0.0, 0.0) }
        }),
        Instruction::Qft { first, last } => {
            let w = last - first + 1;
            let size = 1usize << w;
            let dft = Mat::from_fn(size, |j, k| {
                Complex64::from_polar(1.0 / (size as f64).sqrt(), 2.0 * PI * (j * k) as f64 / size as f64)
            });
            embed(&dft, w, *first, n)
        }
        Instruction::Apply { gate, qubit } => {
            let g = circuit.gate(gate).unwrap();
            embed(&Mat { dim: g.dim(), data: g.to_matrix() }, g.arity(), *qubit, n)
        }
        Instruction::Measure { .. } | Instruction::MeasureAll => panic!("not unitary"),
    }
}
