//! Line-oriented circuit text format.
//!
//! ```text
//! qubits 3            # header, must come first
//! h 0
//! cnot 1 0            # target, then one or more controls
//! cphase 0.785 2 0 1  # angle θ (phase e^{iθ}), target, controls
//! gate perm 2         # user gate: `row col re im` triplets
//! 0 1 1 0
//! 1 0 1 0
//! 2 2 1 0
//! 3 3 1 0
//! endgate
//! apply perm 1
//! measure_all
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::bits::{QubitIndex, KEY_BITS};
use crate::engine::{AnyEngine, Engine, EngineError, EngineKind};
use crate::gates::{GateError, GateName, GateParams, SparseGate};
use crate::state::Capacity;

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    /// A predefined single-qubit gate.
    Single {
        name: GateName,
        params: GateParams,
        qubit: QubitIndex,
    },
    Cnot {
        target: QubitIndex,
        controls: Vec<QubitIndex>,
    },
    /// Controlled phase `e^{iθ}`.
    Cphase {
        theta: f64,
        target: QubitIndex,
        controls: Vec<QubitIndex>,
    },
    Swap {
        a: QubitIndex,
        b: QubitIndex,
    },
    Qft {
        first: QubitIndex,
        last: QubitIndex,
    },
    Apply {
        gate: String,
        qubit: QubitIndex,
    },
    Measure {
        qubit: QubitIndex,
    },
    MeasureAll,
}

impl Instruction {
    pub fn is_measurement(&self) -> bool {
        matches!(self, Instruction::Measure { .. } | Instruction::MeasureAll)
    }
}

fn write_qubits(f: &mut fmt::Formatter<'_>, qubits: &[QubitIndex]) -> fmt::Result {
    for q in qubits {
        write!(f, " {q}")?;
    }
    Ok(())
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Single { name, params, qubit } => {
                write!(f, "{}", name.as_str().to_ascii_lowercase())?;
                match name {
                    GateName::Rx | GateName::Ry | GateName::Rz => write!(f, " {}", params.theta)?,
                    GateName::U1 => write!(f, " {}", params.lambda)?,
                    GateName::U2 => write!(f, " {} {}", params.phi, params.lambda)?,
                    GateName::U3 => write!(f, " {} {} {}", params.theta, params.phi, params.lambda)?,
                    _ => {}
                }
                write!(f, " {qubit}")
            }
            Instruction::Cnot { target, controls } => {
                write!(f, "cnot {target}")?;
                write_qubits(f, controls)
            }
            Instruction::Cphase { theta, target, controls } => {
                write!(f, "cphase {theta} {target}")?;
                write_qubits(f, controls)
            }
            Instruction::Swap { a, b } => write!(f, "swap {a} {b}"),
            Instruction::Qft { first, last } => write!(f, "qft {first} {last}"),
            Instruction::Apply { gate, qubit } => write!(f, "apply {gate} {qubit}"),
            Instruction::Measure { qubit } => write!(f, "measure {qubit}"),
            Instruction::MeasureAll => write!(f, "measure_all"),
        }
    }
}

/// A parsed program: register size, user gate table and instruction list.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: BTreeMap<String, SparseGate>,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self, CircuitError> {
        if n == 0 || n > KEY_BITS {
            return Err(CircuitError::RegisterSize(n));
        }
        Ok(Self {
            n,
            gates: BTreeMap::new(),
            instructions: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn gates(&self) -> &BTreeMap<String, SparseGate> {
        &self.gates
    }

    pub fn gate(&self, name: &str) -> Option<&SparseGate> {
        self.gates.get(name)
    }

    pub fn has_measurement(&self) -> bool {
        self.instructions.iter().any(Instruction::is_measurement)
    }

    /// Registers a user gate. Names must be unique.
    pub fn define_gate(&mut self, name: impl Into<String>, gate: SparseGate) -> Result<(), CircuitError> {
        let name = name.into();
        if self.gates.contains_key(&name) {
            return Err(CircuitError::DuplicateGate(name));
        }
        self.gates.insert(name, gate);
        Ok(())
    }

    /// Appends an instruction after checking operands against the register.
    pub fn push(&mut self, instruction: Instruction) -> Result<(), CircuitError> {
        self.validate(&instruction)?;
        self.instructions.push(instruction);
        Ok(())
    }

    fn check_qubit(&self, q: QubitIndex) -> Result<(), CircuitError> {
        if q >= self.n {
            return Err(CircuitError::QubitOutOfRange { qubit: q, n: self.n });
        }
        Ok(())
    }

    fn check_distinct(&self, target: QubitIndex, controls: &[QubitIndex]) -> Result<(), CircuitError> {
        self.check_qubit(target)?;
        for (i, &c) in controls.iter().enumerate() {
            self.check_qubit(c)?;
            if c == target || controls[..i].contains(&c) {
                return Err(CircuitError::RepeatedQubit(c));
            }
        }
        Ok(())
    }

    fn validate(&self, instruction: &Instruction) -> Result<(), CircuitError> {
        match instruction {
            Instruction::Single { qubit, .. } | Instruction::Measure { qubit } => self.check_qubit(*qubit),
            Instruction::Cnot { target, controls } | Instruction::Cphase { target, controls, .. } => {
                if controls.is_empty() {
                    return Err(CircuitError::Arity {
                        opcode: "controlled gate".into(),
                        expected: "at least one control",
                    });
                }
                self.check_distinct(*target, controls)
            }
            Instruction::Swap { a, b } => {
                self.check_qubit(*a)?;
                self.check_qubit(*b)
            }
            Instruction::Qft { first, last } => {
                self.check_qubit(*first)?;
                self.check_qubit(*last)?;
                if first > last {
                    return Err(CircuitError::InvalidRange {
                        first: *first,
                        last: *last,
                    });
                }
                Ok(())
            }
            Instruction::Apply { gate, qubit } => {
                let g = self
                    .gates
                    .get(gate)
                    .ok_or_else(|| CircuitError::UndefinedGate(gate.clone()))?;
                self.check_qubit(*qubit)?;
                if qubit + g.arity() > self.n {
                    return Err(CircuitError::QubitOutOfRange {
                        qubit: qubit + g.arity() - 1,
                        n: self.n,
                    });
                }
                Ok(())
            }
            Instruction::MeasureAll => Ok(()),
        }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n)?;
        for (name, gate) in &self.gates {
            writeln!(f, "gate {name} {}", gate.arity())?;
            for (col, terms) in gate.columns().iter().enumerate() {
                for (amp, row) in terms {
                    writeln!(f, "{row} {col} {} {}", amp.re, amp.im)?;
                }
            }
            writeln!(f, "endgate")?;
        }
        for instruction in &self.instructions {
            writeln!(f, "{instruction}")?;
        }
        Ok(())
    }
}

/// What went wrong, independent of where.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("missing `qubits <n>` header")]
    MissingHeader,
    #[error("duplicate `qubits` header")]
    DuplicateHeader,
    #[error("register size {0} outside 1..=64")]
    RegisterSize(usize),
    #[error("unknown opcode `{0}`")]
    UnknownOpcode(String),
    #[error("`{opcode}` expects {expected}")]
    Arity { opcode: String, expected: &'static str },
    #[error("qubit {qubit} out of range")]
    QubitOutOfRange { qubit: QubitIndex, n: usize },
    #[error("qubit {0} repeated among target and controls")]
    RepeatedQubit(QubitIndex),
    #[error("invalid qubit range {first}..={last}")]
    InvalidRange { first: QubitIndex, last: QubitIndex },
    #[error("malformed number `{0}`")]
    MalformedNumber(String),
    #[error("invalid gate name `{0}`")]
    InvalidName(String),
    #[error("gate `{0}` already defined")]
    DuplicateGate(String),
    #[error("gate `{0}` is not defined")]
    UndefinedGate(String),
    #[error("gate `{0}` has no `endgate`")]
    UnterminatedGate(String),
    #[error("invalid gate definition: {0}")]
    InvalidGate(#[from] GateError),
    #[error("{family} needs {requirement}, got n = {n}")]
    FamilyBounds {
        family: Family,
        n: usize,
        requirement: &'static str,
    },
}

impl CircuitError {
    /// Stable short code for each error class.
    pub fn code(&self) -> &'static str {
        match self {
            CircuitError::MissingHeader => "missing-header",
            CircuitError::DuplicateHeader => "duplicate-header",
            CircuitError::RegisterSize(_) => "register-size",
            CircuitError::UnknownOpcode(_) => "unknown-opcode",
            CircuitError::Arity { .. } => "arity",
            CircuitError::QubitOutOfRange { .. } => "qubit-range",
            CircuitError::RepeatedQubit(_) => "repeated-qubit",
            CircuitError::InvalidRange { .. } => "invalid-range",
            CircuitError::MalformedNumber(_) => "malformed-number",
            CircuitError::InvalidName(_) => "invalid-name",
            CircuitError::DuplicateGate(_) => "duplicate-gate",
            CircuitError::UndefinedGate(_) => "undefined-gate",
            CircuitError::UnterminatedGate(_) => "unterminated-gate",
            CircuitError::InvalidGate(_) => "invalid-gate",
            CircuitError::FamilyBounds { .. } => "family-bounds",
        }
    }
}

/// A [`CircuitError`] located at a 1-based source line.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: CircuitError,
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        self.kind.code()
    }
}

fn parse_int(token: &str) -> Result<usize, CircuitError> {
    token
        .parse::<usize>()
        .map_err(|_| CircuitError::MalformedNumber(token.to_string()))
}

fn parse_key(token: &str) -> Result<u64, CircuitError> {
    token
        .parse::<u64>()
        .map_err(|_| CircuitError::MalformedNumber(token.to_string()))
}

fn parse_float(token: &str) -> Result<f64, CircuitError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CircuitError::MalformedNumber(token.to_string())),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn arity(opcode: &str, expected: &'static str) -> CircuitError {
    CircuitError::Arity {
        opcode: opcode.to_string(),
        expected,
    }
}

/// Gate definition being collected between `gate` and `endgate`.
struct PendingGate {
    name: String,
    arity: usize,
    line: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
    vals: Vec<Complex64>,
}

/// Parses circuit source text.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    let mut pending: Option<PendingGate> = None;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let at = |kind: CircuitError| ParseError { line, kind };
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((&head, args)) = tokens.split_first() else {
            continue;
        };
        let opcode = head.to_ascii_lowercase();

        if let Some(def) = pending.as_mut() {
            if opcode == "endgate" {
                if !args.is_empty() {
                    return Err(at(arity("endgate", "no operands")));
                }
                let def = pending.take().expect("pending gate");
                let gate = SparseGate::from_sparse(def.arity, &def.rows, &def.cols, &def.vals)
                    .map_err(|e| ParseError { line: def.line, kind: e.into() })?;
                let c = circuit.as_mut().expect("header precedes gate definitions");
                c.define_gate(def.name, gate).map_err(|kind| ParseError { line: def.line, kind })?;
                continue;
            }
            if tokens.len() != 4 {
                return Err(at(arity("gate entry", "`row col re im`")));
            }
            def.rows.push(parse_key(tokens[0]).map_err(at)?);
            def.cols.push(parse_key(tokens[1]).map_err(at)?);
            def.vals.push(Complex64::new(
                parse_float(tokens[2]).map_err(at)?,
                parse_float(tokens[3]).map_err(at)?,
            ));
            continue;
        }

        let Some(c) = circuit.as_mut() else {
            if opcode != "qubits" {
                return Err(at(CircuitError::MissingHeader));
            }
            let [size] = args else {
                return Err(at(arity("qubits", "one register size")));
            };
            circuit = Some(Circuit::new(parse_int(size).map_err(at)?).map_err(at)?);
            continue;
        };

        let instruction = match opcode.as_str() {
            "qubits" => return Err(at(CircuitError::DuplicateHeader)),
            "gate" => {
                let [name, w] = args else {
                    return Err(at(arity("gate", "a name and an arity")));
                };
                if !is_ident(name) {
                    return Err(at(CircuitError::InvalidName(name.to_string())));
                }
                if c.gates.contains_key(*name) {
                    return Err(at(CircuitError::DuplicateGate(name.to_string())));
                }
                pending = Some(PendingGate {
                    name: name.to_string(),
                    arity: parse_int(w).map_err(at)?,
                    line,
                    rows: Vec::new(),
                    cols: Vec::new(),
                    vals: Vec::new(),
                });
                continue;
            }
            "endgate" => return Err(at(CircuitError::UnknownOpcode(head.to_string()))),
            "h" | "x" | "y" | "z" | "s" | "t" => {
                let [q] = args else {
                    return Err(at(arity(&opcode, "one qubit")));
                };
                Instruction::Single {
                    name: opcode.parse().expect("catalogue gate"),
                    params: GateParams::default(),
                    qubit: parse_int(q).map_err(at)?,
                }
            }
            "rx" | "ry" | "rz" | "u1" => {
                let [angle, q] = args else {
                    return Err(at(arity(&opcode, "an angle and one qubit")));
                };
                let name: GateName = opcode.parse().expect("catalogue gate");
                let angle = parse_float(angle).map_err(at)?;
                let params = if name == GateName::U1 {
                    GateParams::lambda(angle)
                } else {
                    GateParams::theta(angle)
                };
                Instruction::Single {
                    name,
                    params,
                    qubit: parse_int(q).map_err(at)?,
                }
            }
            "u2" => {
                let [phi, lambda, q] = args else {
                    return Err(at(arity("u2", "two angles and one qubit")));
                };
                Instruction::Single {
                    name: GateName::U2,
                    params: GateParams::u2(parse_float(phi).map_err(at)?, parse_float(lambda).map_err(at)?),
                    qubit: parse_int(q).map_err(at)?,
                }
            }
            "u3" => {
                let [theta, phi, lambda, q] = args else {
                    return Err(at(arity("u3", "three angles and one qubit")));
                };
                Instruction::Single {
                    name: GateName::U3,
                    params: GateParams::u3(
                        parse_float(theta).map_err(at)?,
                        parse_float(phi).map_err(at)?,
                        parse_float(lambda).map_err(at)?,
                    ),
                    qubit: parse_int(q).map_err(at)?,
                }
            }
            "cnot" => {
                let [target, controls @ ..] = args else {
                    return Err(at(arity("cnot", "a target and at least one control")));
                };
                if controls.is_empty() {
                    return Err(at(arity("cnot", "a target and at least one control")));
                }
                Instruction::Cnot {
                    target: parse_int(target).map_err(at)?,
                    controls: controls.iter().map(|t| parse_int(t)).collect::<Result<_, _>>().map_err(at)?,
                }
            }
            "cphase" => {
                let [theta, target, controls @ ..] = args else {
                    return Err(at(arity("cphase", "an angle, a target and at least one control")));
                };
                if controls.is_empty() {
                    return Err(at(arity("cphase", "an angle, a target and at least one control")));
                }
                Instruction::Cphase {
                    theta: parse_float(theta).map_err(at)?,
                    target: parse_int(target).map_err(at)?,
                    controls: controls.iter().map(|t| parse_int(t)).collect::<Result<_, _>>().map_err(at)?,
                }
            }
            "swap" => {
                let [a, b] = args else {
                    return Err(at(arity("swap", "two qubits")));
                };
                Instruction::Swap {
                    a: parse_int(a).map_err(at)?,
                    b: parse_int(b).map_err(at)?,
                }
            }
            "qft" => {
                let [first, last] = args else {
                    return Err(at(arity("qft", "first and last qubit")));
                };
                Instruction::Qft {
                    first: parse_int(first).map_err(at)?,
                    last: parse_int(last).map_err(at)?,
                }
            }
            "apply" => {
                let [name, q] = args else {
                    return Err(at(arity("apply", "a gate name and one qubit")));
                };
                Instruction::Apply {
                    gate: name.to_string(),
                    qubit: parse_int(q).map_err(at)?,
                }
            }
            "measure" => {
                let [q] = args else {
                    return Err(at(arity("measure", "one qubit")));
                };
                Instruction::Measure {
                    qubit: parse_int(q).map_err(at)?,
                }
            }
            "measure_all" => {
                if !args.is_empty() {
                    return Err(at(arity("measure_all", "no operands")));
                }
                Instruction::MeasureAll
            }
            _ => return Err(at(CircuitError::UnknownOpcode(head.to_string()))),
        };
        c.push(instruction).map_err(at)?;
    }

    if let Some(def) = pending {
        return Err(ParseError {
            line: def.line,
            kind: CircuitError::UnterminatedGate(def.name),
        });
    }
    circuit.ok_or(ParseError {
        line: last_line.max(1),
        kind: CircuitError::MissingHeader,
    })
}

impl FromStr for Circuit {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Executes every instruction in order. With `check` set, engine invariants
/// are verified after each instruction.
pub fn execute<E: Engine + ?Sized>(
    engine: &mut E,
    circuit: &Circuit,
    instructions: &[Instruction],
    check: bool,
) -> Result<(), EngineError> {
    for instruction in instructions {
        match instruction {
            Instruction::Single { name, params, qubit } => engine.apply_standard(*name, *params, *qubit)?,
            Instruction::Cnot { target, controls } => engine.cnot(*target, controls)?,
            Instruction::Cphase { theta, target, controls } => {
                engine.cphase(Complex64::from_polar(1.0, *theta), *target, controls)?
            }
            Instruction::Swap { a, b } => engine.swap(*a, *b)?,
            Instruction::Qft { first, last } => engine.qft(*first, *last)?,
            Instruction::Apply { gate, qubit } => {
                let g = circuit
                    .gate(gate)
                    .ok_or_else(|| EngineError::Invariant(format!("gate `{gate}` is not defined")))?;
                engine.apply_gate(g, *qubit)?
            }
            Instruction::Measure { qubit } => {
                engine.measure(*qubit)?;
            }
            Instruction::MeasureAll => {
                engine.measure_all()?;
            }
        }
        if check {
            engine.check_invariants()?;
        }
    }
    Ok(())
}

/// Final engine of a run plus the outcome string when anything was measured.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub engine: AnyEngine,
    /// Latest outcome per qubit, qubit 0 first, `.` for unmeasured qubits.
    pub shot: Option<String>,
}

/// Runs `circuit` on a fresh engine. Invariants are checked after every
/// instruction in debug builds.
pub fn run(circuit: &Circuit, kind: EngineKind, seed: u64, cap: &Capacity) -> Result<RunOutput, EngineError> {
    let mut engine = AnyEngine::new(kind, circuit.n(), seed, cap)?;
    execute(&mut engine, circuit, circuit.instructions(), cfg!(debug_assertions))?;
    let shot = engine.record().any_measured().then(|| engine.record().to_bitstring());
    Ok(RunOutput { engine, shot })
}

/// The benchmark circuit families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// H on qubit 0, then CNOT from qubit 0 onto every other qubit.
    Ghz,
    /// H on every qubit.
    Superpos,
    /// Two n-qubit registers: superposition on the first, then CNOT from
    /// qubit i of the first onto qubit i of the second.
    EntangledRegisters,
    /// Superposition followed by measure_all.
    SuperposMeasure,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Ghz,
        Family::Superpos,
        Family::EntangledRegisters,
        Family::SuperposMeasure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Ghz => "ghz",
            Family::Superpos => "superpos",
            Family::EntangledRegisters => "entangled_registers",
            Family::SuperposMeasure => "superpos_measure",
        }
    }

    /// Qubits used by the family at size `n`.
    pub fn register_size(self, n: usize) -> usize {
        match self {
            Family::EntangledRegisters => 2 * n,
            _ => n,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected ghz, superpos, entangled_registers or superpos_measure)"))
    }
}

fn hadamard_on(q: QubitIndex) -> Instruction {
    Instruction::Single {
        name: GateName::H,
        params: GateParams::default(),
        qubit: q,
    }
}

/// Builds the benchmark circuit of `family` at size `n`.
pub fn emit_builtin(family: Family, n: usize) -> Result<Circuit, CircuitError> {
    let bounds = |requirement| CircuitError::FamilyBounds { family, n, requirement };
    let mut c = match family {
        Family::EntangledRegisters if n == 0 || 2 * n > KEY_BITS => return Err(bounds("1 <= n <= 32")),
        _ if n == 0 || n > KEY_BITS => return Err(bounds("1 <= n <= 64")),
        _ => Circuit::new(family.register_size(n))?,
    };
    match family {
        Family::Ghz => {
            c.push(hadamard_on(0))?;
            for i in 1..n {
                c.push(Instruction::Cnot { target: i, controls: vec![0] })?;
            }
        }
        Family::Superpos | Family::SuperposMeasure => {
            for q in 0..n {
                c.push(hadamard_on(q))?;
            }
            if family == Family::SuperposMeasure {
                c.push(Instruction::MeasureAll)?;
            }
        }
        Family::EntangledRegisters => {
            for q in 0..n {
                c.push(hadamard_on(q))?;
            }
            for i in 0..n {
                c.push(Instruction::Cnot {
                    target: n + i,
                    controls: vec![i],
                })?;
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn err(text: &str) -> ParseError {
        parse(text).unwrap_err()
    }

    #[test]
    fn parses_ghz2() {
        let c = parse("qubits 2\nh 0\ncnot 1 0\n").unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(
            c.instructions(),
            &[hadamard_on(0), Instruction::Cnot { target: 1, controls: vec![0] }]
        );
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn parses_rotation() {
        let c = parse("qubits 1\nrz 1.5707963 0\n").unwrap();
        assert_eq!(
            c.instructions(),
            &[Instruction::Single {
                name: GateName::Rz,
                params: GateParams::theta(1.5707963),
                qubit: 0
            }]
        );
    }

    #[test]
    fn qubit_out_of_range_message() {
        let e = err("qubits 2\nh 5\n");
        assert_eq!(e.line, 2);
        assert_eq!(e.code(), "qubit-range");
        assert_eq!(e.to_string(), "line 2: qubit 5 out of range");
    }

    #[test]
    fn error_codes_and_lines() {
        let cases = [
            ("h 0\n", 1, "missing-header"),
            ("# c\n\nqubits 1\nfoo 0\n", 4, "unknown-opcode"),
            ("qubits 2\ncnot 1\n", 2, "arity"),
            ("qubits 2\nrx 0\n", 2, "arity"),
            ("qubits 2\nrx abc 0\n", 2, "malformed-number"),
            ("qubits 2\nh -1\n", 2, "malformed-number"),
            ("qubits 1\ngate g 1\n0 0 1 0\n1 1 1 0\nendgate\ngate g 1\n", 6, "duplicate-gate"),
            ("qubits 1\napply g 0\n", 2, "undefined-gate"),
            ("qubits 1\ngate g 1\n0 0 1 0\n", 2, "unterminated-gate"),
            ("qubits 1\ngate g 1\n0 0 2 0\n1 1 1 0\nendgate\n", 2, "invalid-gate"),
            ("qubits 65\n", 1, "register-size"),
            ("qubits 2\nqubits 2\n", 2, "duplicate-header"),
            ("qubits 3\ncnot 1 1\n", 2, "repeated-qubit"),
            ("qubits 3\nqft 2 1\n", 2, "invalid-range"),
            ("", 1, "missing-header"),
        ];
        for (text, line, code) in cases {
            let e = err(text);
            assert_eq!((e.line, e.code()), (line, code), "{text:?}: {e}");
        }
    }

    #[test]
    fn apply_span_is_checked() {
        let text = "qubits 2\ngate sw 2\n0 0 1 0\n2 1 1 0\n1 2 1 0\n3 3 1 0\nendgate\napply sw 1\n";
        let e = err(text);
        assert_eq!((e.line, e.code()), (8, "qubit-range"));
    }

    #[test]
    fn case_insensitive_opcodes_and_comments() {
        let c = parse("QUBITS 2 # register\nH 0 # hadamard\n  # only a comment\nCnot 1 0\n").unwrap();
        assert_eq!(c.instructions().len(), 2);
    }

    #[test]
    fn print_parse_fixed_point() {
        let text = "qubits 3\ngate perm 2\n3 0 1 0\n0 1 1 0\n1 2 1 0\n2 3 1 0\nendgate\n\
                    h 0\nu3 0.1 0.2 0.3 1\nu2 -1 2 2\nu1 0.5 0\nrx 3.14 1\ncphase 0.25 2 0 1\n\
                    swap 0 2\nqft 0 2\napply perm 1\nmeasure 1\nmeasure_all\n";
        let first = parse(text).unwrap();
        let printed = first.to_string();
        let second = parse(&printed).unwrap();
        assert_eq!(first, second);
        assert_eq!(printed, second.to_string());
    }

    #[test]
    fn builtin_shapes() {
        let ghz = emit_builtin(Family::Ghz, 3).unwrap();
        assert_eq!(ghz.n(), 3);
        assert_eq!(ghz.instructions().len(), 3);
        assert_eq!(ghz.instructions()[2], Instruction::Cnot { target: 2, controls: vec![0] });

        assert_eq!(emit_builtin(Family::Superpos, 1).unwrap().instructions(), &[hadamard_on(0)]);

        let ent = emit_builtin(Family::EntangledRegisters, 2).unwrap();
        assert_eq!(ent.n(), 4);
        assert_eq!(
            ent.instructions(),
            &[
                hadamard_on(0),
                hadamard_on(1),
                Instruction::Cnot { target: 2, controls: vec![0] },
                Instruction::Cnot { target: 3, controls: vec![1] },
            ]
        );

        let sm = emit_builtin(Family::SuperposMeasure, 3).unwrap();
        assert_eq!(sm.instructions().last(), Some(&Instruction::MeasureAll));

        assert_eq!(emit_builtin(Family::EntangledRegisters, 33).unwrap_err().code(), "family-bounds");
        assert_eq!(emit_builtin(Family::Ghz, 0).unwrap_err().code(), "family-bounds");
    }

    #[test]
    fn ghz3_run_on_bitwise() {
        let c = emit_builtin(Family::Ghz, 3).unwrap();
        let out = run(&c, EngineKind::Bitwise, 5, &Capacity::default()).unwrap();
        assert_eq!(out.engine.map_size(), Some(2));
        assert!(out.shot.is_none());
        let AnyEngine::Bitwise(e) = &out.engine else { panic!() };
        assert!((e.state().amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((e.state().amplitude(7).re - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_dump() {
        let c = parse("qubits 3\nh 0\nh 1\ncnot 2 1\nmeasure 0\nrx 0.3 2\nmeasure_all\n").unwrap();
        for kind in EngineKind::ALL {
            let a = run(&c, kind, 11, &Capacity::default()).unwrap();
            let b = run(&c, kind, 11, &Capacity::default()).unwrap();
            assert_eq!(a.shot, b.shot);
            assert_eq!(a.engine.dump(), b.engine.dump());
        }
    }

    #[test]
    fn dense_capacity_refused() {
        let c = emit_builtin(Family::Superpos, 25).unwrap();
        let e = run(&c, EngineKind::Dense, 1, &Capacity::default()).unwrap_err();
        assert!(matches!(e, EngineError::State(crate::state::StateError::Capacity { n: 25, .. })));
    }
}
