"""Benchmark circuit generators.

Controlled phases are decomposed into RZ/CX (exact up to global phase) and
multi-controlled gates are expanded recursively, so every generator stays
inside the IR's gate alphabet.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from .circuit import Circuit, Gate, GateOp, inverse_ops, op, parse_qasm
from .errors import UnknownBuiltin

PrepHook = Callable[[str, int], list]


def basis_prep(bits: str, n: int) -> list[GateOp]:
    """X on every qubit whose input bit is 1 (rightmost char = qubit 0)."""
    return [op("x", q) for q in range(n) if bits[n - 1 - q] == "1"]


@dataclass(frozen=True)
class Benchmark:
    name: str
    circuit: Circuit
    preps: dict = field(default_factory=dict)  # extra input preparations by name
    description: str = ""

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    def prep(self, name: str = "basis") -> PrepHook:
        if name == "basis":
            return basis_prep
        try:
            return self.preps[name]
        except KeyError:
            raise UnknownBuiltin(f"{self.name} has no input preparation '{name}'") from None

    @property
    def prep_names(self) -> tuple[str, ...]:
        return ("basis",) + tuple(self.preps)


# ------------------------------------------------------------ decompositions

def cphase(lam: float, control: int, target: int) -> list[GateOp]:
    return [
        op("rz", control, angle=lam / 2),
        op("cx", control, target),
        op("rz", target, angle=-lam / 2),
        op("cx", control, target),
        op("rz", target, angle=lam / 2),
    ]


def mcphase(lam: float, controls: list[int], target: int) -> list[GateOp]:
    """Multi-controlled phase diag(1, ..., 1, e^{i lam}) without ancillas."""
    if not controls:
        return [op("rz", target, angle=lam)]
    if len(controls) == 1:
        return cphase(lam, controls[0], target)
    *rest, last = controls
    flip = mcx(rest, last)
    return (
        cphase(lam / 2, last, target)
        + flip
        + cphase(-lam / 2, last, target)
        + flip
        + mcphase(lam / 2, rest, target)
    )


def mcx(controls: list[int], target: int) -> list[GateOp]:
    if len(controls) == 1:
        return [op("cx", controls[0], target)]
    if len(controls) == 2:
        return [op("ccx", controls[0], controls[1], target)]
    return [op("h", target)] + mcphase(math.pi, controls, target) + [op("h", target)]


def mcz(qubits: list[int]) -> list[GateOp]:
    *controls, target = qubits
    if len(controls) == 1:
        return [op("cz", controls[0], target)]
    return mcphase(math.pi, controls, target)


def qft_ops(qubits: list[int], swaps: bool = True) -> list[GateOp]:
    n = len(qubits)
    out: list[GateOp] = []
    for j in reversed(range(n)):
        out.append(op("h", qubits[j]))
        for k in reversed(range(j)):
            out += cphase(math.pi / 2 ** (j - k), qubits[k], qubits[j])
    if swaps:
        out += [op("swap", qubits[i], qubits[n - 1 - i]) for i in range(n // 2)]
    return out


# ------------------------------------------------------------------ circuits

def ghz(n: int = 3) -> Circuit:
    if n < 2:
        raise ValueError("ghz needs n >= 2")
    gates = [op("h", 0)] + [op("cx", i, i + 1) for i in range(n - 1)]
    return Circuit(n, 0, gates, name=f"ghz{n}")


def qft(n: int = 7) -> Circuit:
    return Circuit(n, 0, qft_ops(list(range(n))), name=f"qft{n}")


def adder4() -> Circuit:
    """One-bit full adder on (a, b, carry-in, carry-out) = (q0, q1, q2, q3).

    Leaves a and b unchanged, writes the sum to q2 and the carry to q3.  The
    leading barrier marks the operand register (a, b) right after input
    encoding.
    """
    gates = [
        GateOp(Gate.BARRIER, (0, 1)),
        op("ccx", 0, 1, 3),
        op("cx", 0, 1),
        op("ccx", 1, 2, 3),
        op("cx", 1, 2),
        op("cx", 0, 1),
    ]
    return Circuit(4, 0, gates, name="adder4")


def adder_superposition_prep(bits: str, n: int) -> list[GateOp]:
    """Operand bits set to 1 become |+> (H) instead of |1>; other bits use X."""
    out = []
    for q in range(n):
        if bits[n - 1 - q] == "1":
            out.append(op("h" if q in (0, 1) else "x", q))
    return out


def teleport3() -> Circuit:
    """Teleport q0 onto q2 with deferred-measurement corrections."""
    gates = [
        op("h", 1),
        op("cx", 1, 2),
        op("cx", 0, 1),
        op("h", 0),
        op("cx", 1, 2),
        op("cz", 0, 2),
    ]
    return Circuit(3, 0, gates, name="teleport3")


def simon(n_inputs: int = 3, secret: str = "110") -> Circuit:
    """Simon's algorithm; ``secret`` is little-endian over the input register."""
    if len(secret) != n_inputs or set(secret) - {"0", "1"}:
        raise ValueError(f"secret must be a {n_inputs}-bit string")
    s = [secret[n_inputs - 1 - i] == "1" for i in range(n_inputs)]
    gates = [op("h", i) for i in range(n_inputs)]
    gates += [op("cx", i, n_inputs + i) for i in range(n_inputs)]
    if any(s):
        j = s.index(True)
        gates += [op("cx", j, n_inputs + k) for k in range(n_inputs) if s[k]]
    gates += [op("h", i) for i in range(n_inputs)]
    return Circuit(2 * n_inputs, 0, gates, name=f"simon{2 * n_inputs}")


def grover(n: int = 5, marked: str = "10101", iterations: int = 1) -> Circuit:
    if len(marked) != n or set(marked) - {"0", "1"}:
        raise ValueError(f"marked item must be a {n}-bit string")
    qubits = list(range(n))
    zeros = [q for q in qubits if marked[n - 1 - q] == "0"]
    gates = [op("h", q) for q in qubits]
    for _ in range(iterations):
        gates += [op("x", q) for q in zeros] + mcz(qubits) + [op("x", q) for q in zeros]
        gates += [op("h", q) for q in qubits] + [op("x", q) for q in qubits]
        gates += mcz(qubits)
        gates += [op("x", q) for q in qubits] + [op("h", q) for q in qubits]
    return Circuit(n, 0, gates, name=f"grover{n}")


def shor5_ops() -> list[GateOp]:
    """Compiled order finding for a=11, N=15 (period 2) on 3 + 2 qubits."""
    counting = [0, 1, 2]
    gates = [op("h", q) for q in counting]
    # 11^x mod 15 only toggles bits 1 and 3 of the work register on odd x
    gates += [op("cx", 0, 3), op("cx", 0, 4)]
    gates += inverse_ops(qft_ops(counting))
    return gates


def shor5() -> Circuit:
    text = resources.files("qassay.assets").joinpath("shor5.qasm").read_text(encoding="utf-8")
    return parse_qasm(text, name="shor5")


# ------------------------------------------------------------------- registry

_NAME_RE = re.compile(r"^([a-z]+?)(\d*)$")


def builtin(name: str, **params) -> Benchmark:
    """Resolve ``adder4``, ``shor5``, ``simon6``, ``grover5``, ``qft7``, ``teleport3``,
    ``ghz3`` and the scalable forms ``qft<n>``, ``ghz<n>``, ``simon<2m>``, ``grover<n>``."""
    m = _NAME_RE.match(name.strip().lower())
    if not m:
        raise UnknownBuiltin(f"unknown builtin '{name}'")
    base, digits = m.group(1), m.group(2)
    size = int(digits) if digits else None
    if base == "adder" and size in (None, 4):
        return Benchmark("adder4", adder4(), {"superposition": adder_superposition_prep},
                         "one-bit full adder; operands may be prepared in superposition")
    if base == "shor" and size in (None, 5):
        return Benchmark("shor5", shor5(), {}, "order finding for N=15, a=11")
    if base == "teleport" and size in (None, 3):
        return Benchmark("teleport3", teleport3(), {}, "deferred-measurement teleportation")
    if base == "qft":
        return Benchmark(f"qft{size or 7}", qft(size or 7), {}, "quantum Fourier transform")
    if base == "ghz":
        return Benchmark(f"ghz{size or 3}", ghz(size or 3), {}, "cat-state preparation")
    if base == "simon":
        total = size or 6
        if total % 2:
            raise UnknownBuiltin(f"simon needs an even qubit count, got {total}")
        secret = params.get("secret", "110" if total == 6 else "1" + "0" * (total // 2 - 1))
        return Benchmark(f"simon{total}", simon(total // 2, secret), {}, f"Simon's algorithm, secret {secret}")
    if base == "grover":
        n = size or 5
        marked = params.get("marked", "10101" if n == 5 else "1" * n)
        return Benchmark(f"grover{n}", grover(n, marked), {}, f"Grover search, marked {marked}")
    raise UnknownBuiltin(f"unknown builtin '{name}'")


BUILTIN_NAMES = ("adder4", "shor5", "simon6", "grover5", "qft7", "teleport3", "ghz3")
