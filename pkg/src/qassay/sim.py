"""Dense statevector simulation with mid-circuit measurement.

Basis convention (used everywhere in the package): little-endian.  Qubit 0
is the least-significant bit of a basis index, and a bitstring is written
most-significant first, so ``int(bits, 2)`` is the basis index and the
rightmost character belongs to qubit 0 (or to the first entry of whatever
qubit/clbit list the string describes).

Circuits whose measurements all sit at the end are sampled from a single
probability readout.  Anything with mid-circuit measurement or reset is
sampled by batched trajectories: the shots that reach a measurement are split
binomially between the two outcomes and each branch continues on its own
collapsed copy of the state.  The result has exactly the per-shot trajectory
distribution, but costs one state copy per distinct branch instead of one
simulation per shot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .circuit import Circuit, Gate, GateOp
from .errors import (
    CapacityExceeded,
    ClbitCollision,
    IndexOutOfRange,
    InvalidCircuit,
    NonUnitaryCircuit,
    ZeroNormCollapse,
)
from .rng import RngSeed, as_seed

MAX_QUBITS = 24
NORM_TOL = 1e-9
COLLAPSE_EPS = 1e-12

_S2 = 1 / math.sqrt(2)
_FIXED = {
    Gate.H: np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    Gate.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Gate.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Gate.Z: np.diag([1, -1]).astype(complex),
    Gate.S: np.diag([1, 1j]),
    Gate.SDG: np.diag([1, -1j]),
    Gate.T: np.diag([1, np.exp(1j * math.pi / 4)]),
    Gate.TDG: np.diag([1, np.exp(-1j * math.pi / 4)]),
    Gate.SWAP: np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
    Gate.CX: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    Gate.CZ: np.diag([1, 1, 1, -1]).astype(complex),
}
_CCX = np.eye(8, dtype=complex)
_CCX[[6, 7]] = _CCX[[7, 6]]
_FIXED[Gate.CCX] = _CCX


def gate_matrix(g: GateOp) -> np.ndarray:
    """Unitary of ``g`` with ``g.qubits[0]`` as the most-significant operand."""
    if g.kind in _FIXED:
        return _FIXED[g.kind]
    if not g.kind.is_unitary:
        raise NonUnitaryCircuit(f"{g.kind} has no matrix")
    t = g.params[0]
    c, s = math.cos(t / 2), math.sin(t / 2)
    if g.kind is Gate.RX:
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if g.kind is Gate.RY:
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def apply_matrix(amps: np.ndarray, n: int, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    k = len(qubits)
    axes = [n - 1 - q for q in qubits]
    psi = np.moveaxis(amps.reshape((2,) * n), axes, range(k))
    shape = psi.shape
    psi = (matrix @ psi.reshape(1 << k, -1)).reshape(shape)
    return np.moveaxis(psi, range(k), axes).reshape(-1)


def bits_to_index(bits: str, n: int) -> int:
    if len(bits) != n or any(ch not in "01" for ch in bits):
        raise InvalidCircuit(f"input {bits!r} is not a {n}-bit string")
    return int(bits, 2) if n else 0


def index_to_bits(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray

    @classmethod
    def basis(cls, n: int, bits: str | int = 0) -> "StateVector":
        if n > MAX_QUBITS:
            raise CapacityExceeded(f"{n} qubits exceeds the {MAX_QUBITS}-qubit bound")
        k = bits if isinstance(bits, (int, np.integer)) else bits_to_index(bits, n)
        amps = np.zeros(1 << n, dtype=complex)
        amps[k] = 1.0
        return cls(n, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def apply(self, g: GateOp) -> "StateVector":
        if g.kind is Gate.BARRIER:
            return self
        if not g.kind.is_unitary:
            raise NonUnitaryCircuit(f"cannot apply {g.kind} as a unitary")
        self.amps = apply_matrix(self.amps, self.n_qubits, gate_matrix(g), g.qubits)
        return self

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def prob_one(self, qubit: int) -> float:
        view = self.probabilities().reshape(-1, 2, 1 << qubit)
        return float(view[:, 1, :].sum())

    def collapse(self, qubit: int, outcome: int, prob: Optional[float] = None) -> "StateVector":
        """Project ``qubit`` onto ``outcome`` and renormalise in place."""
        if prob is None:
            p1 = self.prob_one(qubit)
            prob = p1 if outcome else 1.0 - p1
        if prob < COLLAPSE_EPS:
            raise ZeroNormCollapse(f"collapse of qubit {qubit} onto {outcome} has probability {prob:.3g}")
        view = self.amps.reshape(-1, 2, 1 << qubit)
        view[:, 1 - outcome, :] = 0.0
        self.amps /= math.sqrt(prob)
        return self

    def flip(self, qubit: int) -> "StateVector":
        view = self.amps.reshape(-1, 2, 1 << qubit)
        view[:] = view[:, ::-1, :].copy()
        return self


def _check_capacity(c: Circuit) -> None:
    if c.n_qubits > MAX_QUBITS:
        raise CapacityExceeded(f"{c.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit bound")


def run_statevector(c: Circuit, input: str | None = None, check_norm: bool = False) -> StateVector:
    """Apply the (measurement-free) circuit to basis state ``input``."""
    _check_capacity(c)
    for g in c.gates:
        if g.kind in (Gate.MEASURE, Gate.RESET):
            raise NonUnitaryCircuit(f"{g.kind} at gate {c.gates.index(g)}; use sample() instead")
    sv = StateVector.basis(c.n_qubits, input if input is not None else "0" * c.n_qubits)
    for g in c.gates:
        sv.apply(g)
        if check_norm and abs(sv.norm() - 1.0) > NORM_TOL:
            raise ArithmeticError(f"norm drifted to {sv.norm()!r} after {g.kind}")
    return sv


def reduced_probabilities(sv: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Marginal Born distribution; entry index is little-endian over ``qubits``."""
    n = sv.n_qubits
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise IndexOutOfRange(f"repeated qubit in {qubits}")
    for q in qubits:
        if not 0 <= q < n:
            raise IndexOutOfRange(f"qubit {q} outside 0..{n - 1}")
    probs = sv.probabilities().reshape((2,) * n) if n else sv.probabilities()
    keep = [n - 1 - q for q in qubits]
    others = tuple(a for a in range(n) if a not in keep)
    marg = probs.sum(axis=others) if others else probs
    present = sorted(keep)
    wanted = [n - 1 - q for q in reversed(qubits)]
    if wanted:
        marg = np.transpose(marg, [present.index(a) for a in wanted])
    return np.asarray(marg, dtype=float).reshape(-1)


@dataclass
class OutcomeDistribution:
    """Shot counts keyed by bitstrings (rightmost char = first measured entry)."""

    measured_qubits: tuple[int, ...]
    counts: dict[str, int]
    shots: int
    clbits: tuple[int, ...] = field(default=())

    def __post_init__(self):
        self.measured_qubits = tuple(self.measured_qubits)
        self.clbits = tuple(self.clbits)
        k = len(self.measured_qubits)
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")
        for key in self.counts:
            if len(key) != k:
                raise ValueError(f"key {key!r} does not have {k} bits")

    @property
    def width(self) -> int:
        return len(self.measured_qubits)

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}

    def marginal(self, positions: Sequence[int]) -> "OutcomeDistribution":
        """Restrict to entries ``positions`` (indices into measured_qubits)."""
        k = self.width
        out: dict[str, int] = {}
        for key, n in self.counts.items():
            sub = "".join(key[k - 1 - p] for p in reversed(positions))
            out[sub] = out.get(sub, 0) + n
        clbits = tuple(self.clbits[p] for p in positions) if self.clbits else ()
        return OutcomeDistribution(tuple(self.measured_qubits[p] for p in positions), out, self.shots, clbits)

    def marginal_clbits(self, clbits: Sequence[int]) -> "OutcomeDistribution":
        return self.marginal([self.clbits.index(c) for c in clbits])

    def merge(self, other: "OutcomeDistribution") -> "OutcomeDistribution":
        if other.measured_qubits != self.measured_qubits:
            raise ValueError("cannot merge distributions over different qubits")
        counts = dict(self.counts)
        for key, n in other.counts.items():
            counts[key] = counts.get(key, 0) + n
        return OutcomeDistribution(self.measured_qubits, counts, self.shots + other.shots, self.clbits)

    def to_dict(self) -> dict:
        return {
            "measured_qubits": list(self.measured_qubits),
            "clbits": list(self.clbits),
            "shots": self.shots,
            "counts": dict(sorted(self.counts.items())),
        }


def _measure_layout(c: Circuit) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Written clbits (ascending) and the qubit measured into each."""
    writer: dict[int, int] = {}
    for i, g in enumerate(c.gates):
        if g.kind is Gate.MEASURE:
            cb = g.clbits[0]
            if cb in writer:
                raise ClbitCollision(f"clbit {cb} written twice (gate {i})")
            writer[cb] = g.qubits[0]
    clbits = tuple(sorted(writer))
    return clbits, tuple(writer[c] for c in clbits)


def _terminal_measurements(c: Circuit) -> bool:
    seen_measure = False
    for g in c.gates:
        if g.kind is Gate.RESET:
            return False
        if g.kind is Gate.MEASURE:
            seen_measure = True
        elif g.kind is not Gate.BARRIER and seen_measure:
            return False
    return True


def _prepare(c: Circuit, input: str | None) -> StateVector:
    _check_capacity(c)
    return StateVector.basis(c.n_qubits, input if input is not None else "0" * c.n_qubits)


def sample(c: Circuit, input: str | None, shots: int, seed: RngSeed | int) -> OutcomeDistribution:
    """Sample ``shots`` executions of ``c`` started from basis state ``input``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    clbits, qubits = _measure_layout(c)
    rng = as_seed(seed).generator()
    sv = _prepare(c, input)
    pos = {cb: j for j, cb in enumerate(clbits)}
    width = len(clbits)

    if _terminal_measurements(c):
        for g in c.gates:
            if g.kind.is_unitary:
                sv.apply(g)
        distinct = sorted(set(qubits))
        probs = reduced_probabilities(sv, distinct) if distinct else np.ones(1)
        probs = np.where(probs < COLLAPSE_EPS, 0.0, probs)
        probs = probs / probs.sum()
        draws = rng.multinomial(shots, probs)
        counts: dict[str, int] = {}
        for idx in np.flatnonzero(draws):
            bit = {q: (int(idx) >> j) & 1 for j, q in enumerate(distinct)}
            key = "".join(str(bit[qubits[j]]) for j in reversed(range(width)))
            counts[key] = counts.get(key, 0) + int(draws[idx])
        return OutcomeDistribution(qubits, counts, shots, clbits)

    counts = {}
    # depth-first over measurement branches; outcome 0 is always explored first
    stack = [(0, sv, shots, [0] * width)]
    gates = c.gates
    while stack:
        i, state, n, vals = stack.pop()
        while i < len(gates):
            g = gates[i]
            i += 1
            if g.kind.is_unitary:
                state.apply(g)
                continue
            if g.kind is Gate.BARRIER:
                continue
            q = g.qubits[0]
            p1 = state.prob_one(q)
            p1 = 0.0 if p1 < COLLAPSE_EPS else (1.0 if p1 > 1.0 - COLLAPSE_EPS else p1)
            n1 = int(rng.binomial(n, p1)) if 0.0 < p1 < 1.0 else (n if p1 == 1.0 else 0)
            n0 = n - n1
            branches = [(o, m) for o, m in ((0, n0), (1, n1)) if m]
            if len(branches) == 2:
                other = state.copy().collapse(q, 1, p1)
                ovals = list(vals)
                if g.kind is Gate.MEASURE:
                    ovals[pos[g.clbits[0]]] = 1
                else:
                    other.flip(q)
                stack.append((i, other, n1, ovals))
            outcome, n = branches[0]
            state.collapse(q, outcome, p1 if outcome else 1.0 - p1)
            if g.kind is Gate.MEASURE:
                vals[pos[g.clbits[0]]] = outcome
            elif outcome:
                state.flip(q)
        key = "".join(str(vals[j]) for j in reversed(range(width)))
        counts[key] = counts.get(key, 0) + n
    return OutcomeDistribution(qubits, counts, shots, clbits)


def exact_branches(c: Circuit, input: str | None = None) -> Iterator[tuple[float, StateVector, tuple[int, ...]]]:
    """Enumerate measurement branches: (probability, final state, clbit values).

    Clbit values are listed in ascending clbit order over the written clbits.
    Branches below the collapse threshold are dropped.
    """
    clbits, _ = _measure_layout(c)
    pos = {cb: j for j, cb in enumerate(clbits)}
    stack = [(0, _prepare(c, input), 1.0, [0] * len(clbits))]
    gates = c.gates
    while stack:
        i, state, p, vals = stack.pop()
        while i < len(gates):
            g = gates[i]
            i += 1
            if g.kind.is_unitary:
                state.apply(g)
                continue
            if g.kind is Gate.BARRIER:
                continue
            q = g.qubits[0]
            p1 = state.prob_one(q)
            if p1 >= COLLAPSE_EPS and p1 <= 1.0 - COLLAPSE_EPS:
                other = state.copy().collapse(q, 1, p1)
                ovals = list(vals)
                if g.kind is Gate.MEASURE:
                    ovals[pos[g.clbits[0]]] = 1
                else:
                    other.flip(q)
                stack.append((i, other, p * p1, ovals))
                state.collapse(q, 0, 1.0 - p1)
                p *= 1.0 - p1
            elif p1 > 1.0 - COLLAPSE_EPS:
                state.collapse(q, 1, p1)
                if g.kind is Gate.MEASURE:
                    vals[pos[g.clbits[0]]] = 1
                else:
                    state.flip(q)
            else:
                state.collapse(q, 0, 1.0 - p1)
        yield p, state, tuple(vals)


def exact_distribution(c: Circuit, input: str | None = None) -> dict[str, float]:
    """Exact probability of every clbit string (same key convention as sample)."""
    out: dict[str, float] = {}
    for p, _, vals in exact_branches(c, input):
        key = "".join(str(v) for v in reversed(vals))
        out[key] = out.get(key, 0.0) + p
    return out


def exact_marginal(c: Circuit, qubits: Sequence[int], input: str | None = None) -> np.ndarray:
    """End-of-circuit marginal over ``qubits``, averaged over measurement branches."""
    total = np.zeros(1 << len(qubits))
    for p, state, _ in exact_branches(c, input):
        total += p * reduced_probabilities(state, qubits)
    return total


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of a measurement-free circuit; column j is the image of |j>."""
    n = c.n_qubits
    if n > 12:
        raise CapacityExceeded(f"dense unitary of {n} qubits is too large")
    dim = 1 << n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for i, g in enumerate(c.gates):
        if g.kind is Gate.BARRIER:
            continue
        if not g.kind.is_unitary:
            raise NonUnitaryCircuit(f"{g.kind} at gate {i} has no unitary")
        k = len(g.qubits)
        axes = [n - 1 - q for q in g.qubits]
        psi = np.moveaxis(u, axes, range(k))
        shape = psi.shape
        psi = (gate_matrix(g) @ psi.reshape(1 << k, -1)).reshape(shape)
        u = np.moveaxis(psi, range(k), axes)
    return u.reshape(dim, dim)
