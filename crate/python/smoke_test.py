"""Smoke test for the Python bindings.

Builds GHZ-5 through the binding and checks it against the command line
binary run on the same program with the same seed.

    maturin develop -m crates/python/Cargo.toml
    cargo build -p sparsim
    python python/smoke_test.py
"""

import math
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import pysparsim

ROOT = Path(__file__).resolve().parent.parent
SEED = 42
GHZ5 = "qubits 5\nh 0\n" + "".join(f"cnot {i} 0\n" for i in range(1, 5)) + "measure_all\n"


def cli(*args):
    binary = os.environ.get("SPARSIM_BIN", str(ROOT / "target" / "debug" / "sparsim"))
    return subprocess.run([binary, *args], check=True, capture_output=True, text=True).stdout


def ghz5():
    sim = pysparsim.Simulator(5, engine="bitwise", seed=SEED)
    assert sim.bits() == [None] * 5
    sim.evol("H", 0)
    for q in range(1, 5):
        sim.cnot(q, [0])
    assert sim.map_size == 2
    return sim, sim.measure_all()


def main():
    sim, outcome = ghz5()
    assert outcome in ("00000", "11111"), outcome
    assert sim.bits() == [int(outcome[0])] * 5

    with tempfile.NamedTemporaryFile("w", suffix=".qc", delete=False) as f:
        f.write(GHZ5)
    try:
        out = cli("run", f.name, "--seed", str(SEED), "--shots", "1", "--dump-state")
    finally:
        os.unlink(f.name)
    lines = out.splitlines()
    assert lines[0] == outcome, (lines[0], outcome)
    assert "\n".join(lines[1:]) + "\n" == sim.dump(), (out, sim.dump())
    assert pysparsim.run_program(GHZ5, "bitwise", SEED) == (outcome, sim.dump())

    again = sim.measure(2)
    assert again == int(outcome[2])

    one = pysparsim.Simulator(1)
    one.evol("H", 0)
    amp = 1 / math.sqrt(2)
    for line in one.dump().splitlines():
        assert abs(float(line.split()[2]) - amp) < 1e-12

    rz = pysparsim.Simulator(1, seed=1)
    rz.rot("Z", 0.0, 0)
    assert rz.dump().split()[0] == "0"

    noisy = pysparsim.Simulator(1, engine="density", seed=3)
    noisy.flip("X", 0, 0.25)
    noisy.dpl_channel(0, 0.1)

    for bad in (lambda: one.evol("Q", 0), lambda: pysparsim.Simulator(30, engine="dense")):
        try:
            bad()
        except (ValueError, MemoryError):
            pass
        else:
            raise AssertionError("expected an error")

    print(f"ok: ghz5 seed {SEED} -> {outcome}, binding matches CLI (pysparsim {pysparsim.__version__})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
