"""Basis changes that map each ideal template state onto |0...0>."""

from __future__ import annotations

from typing import Optional, Sequence

from .circuit import GateOp, inverse_ops, op
from .errors import TooFewQubits
from .stats import TemplateKind


def build_projection(kind: TemplateKind, k: int, target: Optional[str] = None,
                     qubits: Optional[Sequence[int]] = None) -> tuple[list[GateOp], list[GateOp]]:
    """Return (P, P_inv) acting on ``qubits`` (default 0..k-1).

    Cat: CX fan-in onto the first qubit then H, k gates.  Uniform: H on every
    qubit.  Classical: X wherever ``target`` (rightmost char = first qubit) is 1.
    """
    kind = TemplateKind(kind)
    qs = list(range(k)) if qubits is None else list(qubits)
    if len(qs) != k:
        raise ValueError(f"expected {k} qubits, got {len(qs)}")
    if k < 1:
        raise TooFewQubits("projection needs at least one qubit")
    if kind is TemplateKind.CAT:
        if k < 2:
            raise TooFewQubits("cat projection needs at least two qubits")
        p = [op("cx", qs[0], qs[j]) for j in reversed(range(1, k))] + [op("h", qs[0])]
    elif kind is TemplateKind.UNIFORM:
        p = [op("h", q) for q in qs]
    else:
        if target is None or len(target) != k or set(target) - {"0", "1"}:
            raise ValueError(f"classical projection needs a {k}-bit target")
        p = [op("x", q) for j, q in enumerate(qs) if target[k - 1 - j] == "1"]
    return p, inverse_ops(p)
