//! Python bindings. `Simulator` wraps one engine instance; every method maps
//! onto a single engine operation.

use num_complex::Complex64;
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sparsim::dense::PauliAxis;
use sparsim::{
    AnyEngine, Capacity, Engine, EngineError, EngineKind, GateName, GateParams, SparseGate, StateError,
};

fn to_py(e: EngineError) -> PyErr {
    match e {
        EngineError::State(StateError::Capacity { .. }) => PyMemoryError::new_err(e.to_string()),
        EngineError::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn value_err(msg: impl ToString) -> PyErr {
    PyValueError::new_err(msg.to_string())
}

#[pyclass(module = "pysparsim")]
struct Simulator {
    engine: AnyEngine,
}

impl Simulator {
    fn density(&mut self) -> PyResult<&mut sparsim::DensityEngine> {
        match &mut self.engine {
            AnyEngine::Density(d) => Ok(d),
            _ => Err(value_err("noise channels need the density engine")),
        }
    }

    fn standard(&mut self, name: GateName, params: GateParams, q: usize) -> PyResult<()> {
        self.engine.apply_standard(name, params, q).map_err(to_py)
    }
}

#[pymethods]
impl Simulator {
    /// `engine` is one of "bitwise", "dense", "density"; seed 0 draws from
    /// the OS.
    #[new]
    #[pyo3(signature = (n, engine = "bitwise", seed = 0))]
    fn new(n: usize, engine: &str, seed: u64) -> PyResult<Self> {
        let kind: EngineKind = engine.parse().map_err(value_err)?;
        let engine = AnyEngine::new(kind, n, seed, &Capacity::from_env()).map_err(to_py)?;
        Ok(Self { engine })
    }

    #[getter]
    fn n(&self) -> usize {
        self.engine.n()
    }

    #[getter]
    fn engine(&self) -> &'static str {
        self.engine.kind().as_str()
    }

    /// Key count of the sparse map; `None` for dense engines.
    #[getter]
    fn map_size(&self) -> Option<usize> {
        self.engine.map_size()
    }

    /// Parameter-free gate by letter: X, Y, Z, H, S or T.
    fn evol(&mut self, name: &str, q: usize) -> PyResult<()> {
        let gate: GateName = name.parse().map_err(value_err)?;
        if gate.param_count() != 0 {
            return Err(value_err(format!("gate `{name}` takes parameters")));
        }
        self.standard(gate, GateParams::default(), q)
    }

    /// Rotation about axis X, Y or Z.
    fn rot(&mut self, axis: &str, theta: f64, q: usize) -> PyResult<()> {
        let gate = match axis.to_ascii_uppercase().as_str() {
            "X" => GateName::Rx,
            "Y" => GateName::Ry,
            "Z" => GateName::Rz,
            _ => return Err(value_err(format!("unknown rotation axis `{axis}`"))),
        };
        self.standard(gate, GateParams::theta(theta), q)
    }

    fn u1(&mut self, lambda: f64, q: usize) -> PyResult<()> {
        self.standard(GateName::U1, GateParams::lambda(lambda), q)
    }

    fn u2(&mut self, phi: f64, lambda: f64, q: usize) -> PyResult<()> {
        self.standard(GateName::U2, GateParams::u2(phi, lambda), q)
    }

    fn u3(&mut self, theta: f64, phi: f64, lambda: f64, q: usize) -> PyResult<()> {
        self.standard(GateName::U3, GateParams::u3(theta, phi, lambda), q)
    }

    /// Applies a `arity`-qubit gate given as `(row, col, value)` triplets to
    /// qubits `q .. q + arity`.
    fn apply(
        &mut self,
        arity: usize,
        rows: Vec<u64>,
        cols: Vec<u64>,
        values: Vec<Complex64>,
        q: usize,
    ) -> PyResult<()> {
        let gate = SparseGate::from_sparse(arity, &rows, &cols, &values).map_err(value_err)?;
        self.engine.apply_gate(&gate, q).map_err(to_py)
    }

    #[pyo3(signature = (target, ctrls))]
    fn cnot(&mut self, target: usize, ctrls: Vec<usize>) -> PyResult<()> {
        self.engine.cnot(target, &ctrls).map_err(to_py)
    }

    /// Multiplies by `e^{iθ}` where target and controls are all 1.
    #[pyo3(signature = (theta, target, ctrls))]
    fn cphase(&mut self, theta: f64, target: usize, ctrls: Vec<usize>) -> PyResult<()> {
        self.engine
            .cphase(Complex64::from_polar(1.0, theta), target, &ctrls)
            .map_err(to_py)
    }

    fn swap(&mut self, a: usize, b: usize) -> PyResult<()> {
        self.engine.swap(a, b).map_err(to_py)
    }

    fn qft(&mut self, first: usize, last: usize) -> PyResult<()> {
        self.engine.qft(first, last).map_err(to_py)
    }

    fn inverse_qft(&mut self, first: usize, last: usize) -> PyResult<()> {
        self.engine.inverse_qft(first, last).map_err(to_py)
    }

    fn measure(&mut self, q: usize) -> PyResult<u8> {
        self.engine.measure(q).map_err(to_py)
    }

    fn measure_all(&mut self) -> PyResult<String> {
        self.engine.measure_all().map_err(to_py)
    }

    /// Latest outcome per qubit; `None` where nothing was measured.
    fn bits(&self) -> Vec<Option<u8>> {
        self.engine.record().bits().to_vec()
    }

    /// Same text as the command line `--dump-state`.
    fn dump(&self) -> String {
        self.engine.dump()
    }

    fn flip(&mut self, axis: &str, q: usize, p: f64) -> PyResult<()> {
        let axis: PauliAxis = axis.parse().map_err(value_err)?;
        self.density()?.flip(axis, q, p).map_err(to_py)
    }

    fn amp_damping(&mut self, q: usize, p: f64) -> PyResult<()> {
        self.density()?.amp_damping(q, p).map_err(to_py)
    }

    fn dpl_channel(&mut self, q: usize, p: f64) -> PyResult<()> {
        self.density()?.dpl_channel(q, p).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Simulator(n={}, engine='{}')", self.engine.n(), self.engine.kind())
    }
}

/// Parses and runs a circuit program once; returns the outcome string (or
/// `None` if nothing was measured) and the final state dump.
#[pyfunction]
#[pyo3(signature = (source, engine = "bitwise", seed = 0))]
fn run_program(source: &str, engine: &str, seed: u64) -> PyResult<(Option<String>, String)> {
    let kind: EngineKind = engine.parse().map_err(value_err)?;
    let circuit = sparsim::parse(source).map_err(value_err)?;
    let out = sparsim::run(&circuit, kind, seed, &Capacity::from_env()).map_err(to_py)?;
    Ok((out.shot, out.engine.dump()))
}

#[pymodule]
fn pysparsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Simulator>()?;
    m.add_function(wrap_pyfunction!(run_program, m)?)?;
    Ok(())
}
