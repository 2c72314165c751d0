"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import json
import sys
import math
from functools import reduce
from pathlib import Path

import numpy as np
import pytest

from qassay.circuit import Circuit, Gate, op

GOLDEN = Path(__file__).parent / "golden"

# Textbook matrices written out independently of the simulator.
_R = 1 / math.sqrt(2)
ORACLE_MATRICES = {
    "h": np.array([[_R, _R], [_R, -_R]]),
    "x": np.array([[0, 1], [1, 0]]),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.array([[1, 0], [0, -1]]),
    "s": np.array([[1, 0], [0, 1j]]),
    "sdg": np.array([[1, 0], [0, -1j]]),
    "t": np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]]),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * math.pi / 4)]]),
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "cz": np.diag([1, 1, 1, -1]),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
_ccx = np.eye(8)
_ccx[6, 6] = _ccx[7, 7] = 0
_ccx[6, 7] = _ccx[7, 6] = 1
ORACLE_MATRICES["ccx"] = _ccx


def oracle_small(g) -> np.ndarray:
    name = g.kind.value
    if name in ORACLE_MATRICES:
        return ORACLE_MATRICES[name].astype(complex)
    t = g.params[0]
    if name == "rx":
        return np.array([[math.cos(t / 2), -1j * math.sin(t / 2)], [-1j * math.sin(t / 2), math.cos(t / 2)]])
    if name == "ry":
        return np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]], dtype=complex)
    if name == "rz":
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    raise ValueError(name)


def kron_operator(g, n: int) -> np.ndarray:
    """Full 2^n operator of ``g`` as a sum of Kronecker products (qubit 0 = rightmost factor)."""
    u = oracle_small(g)
    k = len(g.qubits)
    total = np.zeros((1 << n, 1 << n), dtype=complex)
    for a in range(1 << k):
        for b in range(1 << k):
            if u[a, b] == 0:
                continue
            factors = []
            for q in reversed(range(n)):
                if q in g.qubits:
                    j = g.qubits.index(q)          # operand j is bit (k-1-j) of the small index
                    ab, bb = (a >> (k - 1 - j)) & 1, (b >> (k - 1 - j)) & 1
                    e = np.zeros((2, 2))
                    e[ab, bb] = 1
                    factors.append(e)
                else:
                    factors.append(np.eye(2))
            total += u[a, b] * reduce(np.kron, factors)
    return total


def oracle_state(c: Circuit, input_index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << c.n_qubits, dtype=complex)
    psi[input_index] = 1
    for g in c.gates:
        if g.kind is Gate.BARRIER:
            continue
        psi = kron_operator(g, c.n_qubits) @ psi
    return psi


def partial_trace_probs(psi: np.ndarray, n: int, qubits) -> np.ndarray:
    """Diagonal of the reduced density matrix, little-endian over ``qubits``."""
    rho = np.outer(psi, psi.conj()).reshape((2,) * (2 * n))
    keep = [n - 1 - q for q in qubits]
    # trace out every other axis pair
    drop = [a for a in range(n) if a not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for a in drop:
        col[a] = row[a]
    out_row = "".join(row[n - 1 - q] for q in reversed(qubits))
    out_col = "".join(col[n - 1 - q] for q in reversed(qubits))
    red = np.einsum("".join(row) + "".join(col) + "->" + out_row + out_col, rho)
    d = 1 << len(qubits)
    return np.real(np.diag(red.reshape(d, d)))


UNITARY_1Q = ("h", "x", "y", "z", "s", "sdg", "t", "tdg")


def random_circuit(rng: np.random.Generator, n: int, depth: int, rotations: bool = True,
                   three_qubit: bool = True) -> Circuit:
    kinds = list(UNITARY_1Q) + ["cx", "cz", "swap"]
    if rotations:
        kinds += ["rx", "ry", "rz"]
    if three_qubit and n >= 3:
        kinds.append("ccx")
    gates = []
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        arity = Gate(kind).arity
        if arity > n:
            continue
        qs = [int(q) for q in rng.choice(n, size=arity, replace=False)]
        angle = float(rng.uniform(-math.pi, math.pi)) if kind in ("rx", "ry", "rz") else None
        gates.append(op(kind, *qs, angle=angle))
    return Circuit(n, 0, gates)


def load_golden(name: str):
    return json.loads((GOLDEN / name).read_text(encoding="utf-8"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
