//! Gate construction: the predefined single-qubit catalogue and the custom
//! constructors (2×2 matrix, sparse triplets, permutation).
//!
//! A [`SparseGate`] stores, for each input basis key `i` of its `w`-qubit
//! window, the list of `(amplitude, output key)` pairs of `U|i⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::bits::BasisKey;
use crate::state::PRUNE_EPS;

/// Widest window whose unitarity is verified exhaustively.
pub const UNITARITY_CHECK_MAX_ARITY: usize = 10;

/// Widest custom gate accepted; columns are stored densely by input key.
pub const MAX_GATE_ARITY: usize = 20;

/// Deviation of `U†U` from the identity tolerated by the constructors.
pub const UNITARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate arity {0} outside 1..={MAX_GATE_ARITY}")]
    InvalidArity(usize),
    #[error("row/column/value lists differ in length ({rows}, {cols}, {vals})")]
    LengthMismatch { rows: usize, cols: usize, vals: usize },
    #[error("index {index} does not fit a {arity}-qubit gate")]
    IndexOutOfRange { index: BasisKey, arity: usize },
    #[error("duplicate entry at row {row}, column {col}")]
    DuplicateEntry { row: BasisKey, col: BasisKey },
    #[error("matrix is not unitary: max |U†U - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("function is not a bijection: output {output} reached twice")]
    NotBijective { output: BasisKey },
    #[error("gate parameter is not finite")]
    NonFiniteParameter,
}

/// The predefined single-qubit gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateName {
    X,
    Y,
    Z,
    H,
    S,
    T,
    Rx,
    Ry,
    Rz,
    U1,
    U2,
    U3,
}

impl GateName {
    pub const ALL: [GateName; 12] = [
        GateName::X,
        GateName::Y,
        GateName::Z,
        GateName::H,
        GateName::S,
        GateName::T,
        GateName::Rx,
        GateName::Ry,
        GateName::Rz,
        GateName::U1,
        GateName::U2,
        GateName::U3,
    ];

    /// Number of angle parameters the gate reads.
    pub fn param_count(self) -> usize {
        match self {
            GateName::Rx | GateName::Ry | GateName::Rz | GateName::U1 => 1,
            GateName::U2 => 2,
            GateName::U3 => 3,
            _ => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateName::X => "X",
            GateName::Y => "Y",
            GateName::Z => "Z",
            GateName::H => "H",
            GateName::S => "S",
            GateName::T => "T",
            GateName::Rx => "RX",
            GateName::Ry => "RY",
            GateName::Rz => "RZ",
            GateName::U1 => "U1",
            GateName::U2 => "U2",
            GateName::U3 => "U3",
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateName {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.to_ascii_uppercase();
        GateName::ALL
            .into_iter()
            .find(|g| g.as_str() == upper)
            .ok_or_else(|| GateError::UnknownGate(s.to_string()))
    }
}

/// Rotation angles in radians. Gates read only the fields they need:
/// rotations and `U1` use `theta`/`lambda` as noted on [`standard_matrix`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GateParams {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl GateParams {
    pub fn theta(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }

    pub fn lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn u2(phi: f64, lambda: f64) -> Self {
        Self {
            phi,
            lambda,
            ..Self::default()
        }
    }

    pub fn u3(theta: f64, phi: f64, lambda: f64) -> Self {
        Self { theta, phi, lambda }
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite() && self.lambda.is_finite()
    }
}

/// Row-major 2×2 matrix `[u00, u01, u10, u11]`.
pub type Matrix2 = [Complex64; 4];

fn cis(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

/// Matrix of a predefined gate. Rotations take `theta`; `U1` takes
/// `lambda`; `U2` takes `(phi, lambda)`; `U3` takes all three.
pub fn standard_matrix(name: GateName, p: GateParams) -> Matrix2 {
    let zero = Complex64::default();
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::i();
    let (c, s) = ((p.theta / 2.0).cos(), (p.theta / 2.0).sin());
    match name {
        GateName::X => [zero, one, one, zero],
        GateName::Y => [zero, -i, i, zero],
        GateName::Z => [one, zero, zero, -one],
        GateName::H => {
            let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
            [h, h, h, -h]
        }
        GateName::S => [one, zero, zero, i],
        GateName::T => [one, zero, zero, cis(FRAC_PI_4)],
        GateName::Rx => [c.into(), -i * s, -i * s, c.into()],
        GateName::Ry => [c.into(), (-s).into(), s.into(), c.into()],
        GateName::Rz => [cis(-p.theta / 2.0), zero, zero, cis(p.theta / 2.0)],
        GateName::U1 => [one, zero, zero, cis(p.lambda)],
        GateName::U2 => [
            FRAC_1_SQRT_2.into(),
            -cis(p.lambda) * FRAC_1_SQRT_2,
            cis(p.phi) * FRAC_1_SQRT_2,
            cis(p.lambda + p.phi) * FRAC_1_SQRT_2,
        ],
        GateName::U3 => [
            c.into(),
            -cis(p.lambda) * s,
            cis(p.phi) * s,
            cis(p.lambda + p.phi) * c,
        ],
    }
}

/// One column of a gate: the `(amplitude, output key)` terms of `U|i⟩`.
pub type Column = Vec<(Complex64, BasisKey)>;

/// Gate acting on a contiguous window of `arity` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGate {
    arity: usize,
    columns: Vec<Column>,
    unitarity_verified: bool,
}

impl SparseGate {
    /// Builds a gate from per-input columns, dropping negligible terms and
    /// checking unitarity when the arity allows it.
    fn from_columns(arity: usize, mut columns: Vec<Column>) -> Result<Self, GateError> {
        for col in &mut columns {
            col.retain(|(a, _)| a.norm() > PRUNE_EPS);
            col.sort_by_key(|&(_, out)| out);
        }
        let mut gate = Self {
            arity,
            columns,
            unitarity_verified: false,
        };
        if arity <= UNITARITY_CHECK_MAX_ARITY {
            let deviation = gate.unitarity_deviation();
            if deviation > UNITARY_TOL {
                return Err(GateError::NotUnitary { deviation });
            }
            gate.unitarity_verified = true;
        }
        Ok(gate)
    }

    /// Single-qubit gate from `[u00, u01, u10, u11]`.
    pub fn from_matrix(m: Matrix2) -> Result<Self, GateError> {
        let columns = (0..2)
            .map(|col| (0..2).map(|row| (m[row * 2 + col], row as BasisKey)).collect())
            .collect();
        Self::from_columns(1, columns)
    }

    /// `w`-qubit gate from triplets with `U(rows[i], cols[i]) = vals[i]`.
    pub fn from_sparse(
        arity: usize,
        rows: &[BasisKey],
        cols: &[BasisKey],
        vals: &[Complex64],
    ) -> Result<Self, GateError> {
        check_arity(arity)?;
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return Err(GateError::LengthMismatch {
                rows: rows.len(),
                cols: cols.len(),
                vals: vals.len(),
            });
        }
        let dim = 1u64 << arity;
        let mut columns: Vec<Column> = vec![Vec::new(); dim as usize];
        for ((&row, &col), &val) in rows.iter().zip(cols).zip(vals) {
            for index in [row, col] {
                if index >= dim {
                    return Err(GateError::IndexOutOfRange { index, arity });
                }
            }
            let column = &mut columns[col as usize];
            if column.iter().any(|&(_, r)| r == row) {
                return Err(GateError::DuplicateEntry { row, col });
            }
            column.push((val, row));
        }
        Self::from_columns(arity, columns)
    }

    /// Permutation gate `Σ |f(i)⟩⟨i|` over `arity` qubits.
    pub fn from_permutation<F>(f: F, arity: usize) -> Result<Self, GateError>
    where
        F: Fn(BasisKey) -> BasisKey,
    {
        check_arity(arity)?;
        let dim = 1u64 << arity;
        let mut seen = vec![false; dim as usize];
        let mut columns = Vec::with_capacity(dim as usize);
        for i in 0..dim {
            let out = f(i);
            if out >= dim {
                return Err(GateError::IndexOutOfRange { index: out, arity });
            }
            if std::mem::replace(&mut seen[out as usize], true) {
                return Err(GateError::NotBijective { output: out });
            }
            columns.push(vec![(Complex64::new(1.0, 0.0), out)]);
        }
        Self::from_columns(arity, columns)
    }

    /// A predefined single-qubit gate.
    pub fn standard(name: GateName, params: GateParams) -> Result<Self, GateError> {
        if !params.is_finite() {
            return Err(GateError::NonFiniteParameter);
        }
        Self::from_matrix(standard_matrix(name, params))
    }

    /// Looks a predefined gate up by (case-insensitive) name.
    pub fn by_name(name: &str, params: GateParams) -> Result<Self, GateError> {
        Self::standard(name.parse()?, params)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1usize << self.arity
    }

    /// Terms of `U|input⟩`.
    #[inline]
    pub fn column(&self, input: BasisKey) -> &[(Complex64, BasisKey)] {
        &self.columns[input as usize]
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    /// Largest number of output terms for any input key.
    pub fn fanout(&self) -> usize {
        self.columns.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// False when the arity was too large for an exhaustive unitarity check.
    pub fn unitarity_verified(&self) -> bool {
        self.unitarity_verified
    }

    /// Dense row-major matrix.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let dim = self.dim();
        let mut m = vec![Complex64::default(); dim * dim];
        for (col, terms) in self.columns.iter().enumerate() {
            for &(amp, row) in terms {
                m[row as usize * dim + col] = amp;
            }
        }
        m
    }

    /// `max |(U†U − I)_ab|`, computed from column inner products.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut scratch = vec![Complex64::default(); dim];
        let mut worst = 0.0f64;
        for (a, col_a) in self.columns.iter().enumerate() {
            for &(amp, row) in col_a {
                scratch[row as usize] = amp;
            }
            for (b, col_b) in self.columns.iter().enumerate().skip(a) {
                let dot: Complex64 = col_b.iter().map(|&(amp, row)| scratch[row as usize].conj() * amp).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - expected).norm());
            }
            for &(_, row) in col_a {
                scratch[row as usize] = Complex64::default();
            }
        }
        worst
    }
}

fn check_arity(arity: usize) -> Result<(), GateError> {
    if arity == 0 || arity > MAX_GATE_ARITY {
        return Err(GateError::InvalidArity(arity));
    }
    Ok(())
}
