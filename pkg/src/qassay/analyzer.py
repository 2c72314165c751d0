"""Static analysis: propose candidate assertion sites (placeholders).

Five pattern families are recognised, in this priority order:

ClassicalBlock   the region where only X/CX/CCX/SWAP have acted on qubits that
                 are still in a basis state; one cut after its last gate over
                 every qubit the region touched.
HadamardLayer    H gates whose qubits have not been touched again; the layer
                 closes (and yields a cut) when one of its qubits is next used.
EntanglingBlock  an H on a control followed by a CX/CCX fan-out onto fresh
                 basis-state qubits; cut after the chain, over control and
                 targets.
BarrierHint      every barrier, over its qubits, cut just before it.
RandomCut        seeded (position, subset) pairs with subsets of at most four
                 qubits, ranked by how close the cut state is to a template.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .circuit import Circuit, Gate
from .errors import EmptyCircuit, IndexOutOfRange
from .rng import RngSeed, as_seed
from .sim import exact_marginal, reduced_probabilities, run_statevector

CLASSICAL_GATES = frozenset({Gate.X, Gate.CX, Gate.CCX, Gate.SWAP})
MAX_RANDOM_SUBSET = 4
RANDOM_POOL_FACTOR = 4


class Hint(str, Enum):
    CLASSICAL_BLOCK = "ClassicalBlock"
    HADAMARD_LAYER = "HadamardLayer"
    ENTANGLING_BLOCK = "EntanglingBlock"
    BARRIER_HINT = "BarrierHint"
    RANDOM_CUT = "RandomCut"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Placeholder:
    id: str
    position: int
    qubits: tuple[int, ...]
    hint: Hint
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(sorted(int(q) for q in self.qubits)))
        object.__setattr__(self, "hint", Hint(self.hint))
        if len(set(self.qubits)) != len(self.qubits) or not self.qubits:
            raise IndexOutOfRange(f"placeholder qubits {self.qubits} must be distinct and non-empty")

    @property
    def key(self) -> tuple[int, tuple[int, ...]]:
        return (self.position, self.qubits)

    def validate(self, c: Circuit) -> None:
        if not 0 <= self.position <= len(c.gates):
            raise IndexOutOfRange(f"placeholder position {self.position} outside 0..{len(c.gates)}")
        bad = [q for q in self.qubits if q >= c.n_qubits]
        if bad:
            raise IndexOutOfRange(f"placeholder qubit {bad[0]} >= {c.n_qubits}")

    def to_dict(self) -> dict:
        return {"id": self.id, "position": self.position, "qubits": list(self.qubits),
                "hint": self.hint.value, "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> "Placeholder":
        return cls(d["id"], int(d["position"]), tuple(d["qubits"]), Hint(d["hint"]), d.get("provenance", ""))


def _touches(g, qubits) -> bool:
    return any(q in qubits for q in g.qubits)


def _basis_exit(c: Circuit) -> list[int]:
    """Per qubit, index of the first gate after which it may leave a basis state."""
    n, gates = c.n_qubits, c.gates
    exit_at = [len(gates)] * n
    classical = set(range(n))
    for i, g in enumerate(gates):
        if g.kind is Gate.BARRIER:
            continue
        if g.kind in CLASSICAL_GATES and all(q in classical for q in g.qubits):
            continue
        for q in g.qubits:
            if q in classical:
                classical.discard(q)
                exit_at[q] = i
    return exit_at


def classical_blocks(c: Circuit) -> list[tuple[int, tuple[int, ...], str]]:
    exit_at = _basis_exit(c)
    region = [i for i, g in enumerate(c.gates)
              if g.kind in CLASSICAL_GATES and all(i < exit_at[q] for q in g.qubits)]
    if not region:
        return []
    cut = region[-1] + 1
    touched = {q for i in region for q in c.gates[i].qubits}
    subset = tuple(sorted(q for q in touched if exit_at[q] >= cut))
    if not subset:
        return []
    return [(cut, subset, f"classical gates {region[0]}..{region[-1]}")]


def hadamard_layers(c: Circuit) -> list[tuple[int, tuple[int, ...], str]]:
    out = []
    layer: set[int] = set()
    last = -1

    def close():
        if layer:
            out.append((last + 1, tuple(sorted(layer)), f"H layer ending at gate {last}"))
            layer.clear()

    for i, g in enumerate(c.gates):
        if g.kind is Gate.BARRIER:
            continue
        if g.kind is Gate.H and g.qubits[0] not in layer:
            layer.add(g.qubits[0])
            last = i
        elif _touches(g, layer):
            close()
            if g.kind is Gate.H:
                layer.add(g.qubits[0])
                last = i
    close()
    return out


def entangling_blocks(c: Circuit) -> list[tuple[int, tuple[int, ...], str]]:
    out = []
    exit_at = _basis_exit(c)
    gates = c.gates
    for i, g in enumerate(gates):
        if g.kind is not Gate.H:
            continue
        ent = {g.qubits[0]}
        end = None
        for j in range(i + 1, len(gates)):
            h = gates[j]
            if h.kind is Gate.BARRIER or not _touches(h, ent):
                continue
            if h.kind in (Gate.CX, Gate.CCX):
                *controls, target = h.qubits
                # fan-out onto a qubit that is still in a basis state
                if all(q in ent for q in controls) and target not in ent and exit_at[target] >= j:
                    ent.add(target)
                    end = j
                    continue
            break
        if end is not None:
            out.append((end + 1, tuple(sorted(ent)), f"H at gate {i} fanned out through gate {end}"))
    return out


def barrier_hints(c: Circuit) -> list[tuple[int, tuple[int, ...], str]]:
    return [(i, tuple(sorted(g.qubits)), f"barrier at gate {i}")
            for i, g in enumerate(c.gates) if g.kind is Gate.BARRIER]


def _template_closeness(probs: np.ndarray) -> float:
    k = int(round(np.log2(len(probs))))
    candidates = [float(probs.max())]  # point mass at the mode: 1 - TV = p(mode)
    uniform = np.full(len(probs), 1.0 / len(probs))
    candidates.append(1.0 - 0.5 * float(np.abs(probs - uniform).sum()))
    if k >= 2:
        cat = np.zeros(len(probs))
        cat[0] = cat[-1] = 0.5
        candidates.append(1.0 - 0.5 * float(np.abs(probs - cat).sum()))
    return float(min(1.0, max(0.0, max(candidates))))


def score_cut(c: Circuit, p: Placeholder) -> float:
    """Closeness (1 - total variation) of the cut marginal to the nearest template."""
    p.validate(c)
    prefix = c.prefix(p.position)
    if prefix.is_unitary:
        probs = reduced_probabilities(run_statevector(prefix), p.qubits)
    else:
        probs = exact_marginal(prefix, p.qubits)
    return _template_closeness(probs)


def _random_candidates(c: Circuit, count: int, seed: RngSeed) -> list[tuple[int, tuple[int, ...]]]:
    rng = seed.generator()
    m, n = len(c.gates), c.n_qubits
    out = []
    for _ in range(count):
        position = int(rng.integers(0, m + 1))
        size = int(rng.integers(1, min(MAX_RANDOM_SUBSET, n) + 1))
        subset = tuple(sorted(int(q) for q in rng.choice(n, size=size, replace=False)))
        out.append((position, subset))
    return out


def static_analysis(c: Circuit, budget: int = 1, seed: RngSeed | int = 0) -> list[Placeholder]:
    """Heuristic placeholders plus seeded random cuts, up to ``budget`` in total."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not c.gates:
        raise EmptyCircuit("static analysis needs at least one gate")
    found: dict[tuple, tuple[Hint, str]] = {}
    for hint, finder in (
        (Hint.CLASSICAL_BLOCK, classical_blocks),
        (Hint.HADAMARD_LAYER, hadamard_layers),
        (Hint.ENTANGLING_BLOCK, entangling_blocks),
        (Hint.BARRIER_HINT, barrier_hints),
    ):
        for position, qubits, note in finder(c):
            found.setdefault((position, qubits), (hint, note))

    room = budget - len(found)
    if room > 0:
        seed = as_seed(seed)
        pool = []
        for order, key in enumerate(_random_candidates(c, RANDOM_POOL_FACTOR * room, seed.child("random-cut"))):
            if key in found or any(key == k for _, _, k in pool):
                continue
            tmp = Placeholder("tmp", key[0], key[1], Hint.RANDOM_CUT)
            pool.append((-score_cut(c, tmp), order, key))
        pool.sort()
        for neg_score, _, key in pool[:room]:
            found[key] = (Hint.RANDOM_CUT, f"random cut, template closeness {-neg_score:.6f}")

    ordered = sorted(found.items(), key=lambda kv: kv[0])
    return [Placeholder(f"ph{i}", pos, qubits, hint, note)
            for i, ((pos, qubits), (hint, note)) in enumerate(ordered)]


def check_hint(c: Circuit, p: Placeholder) -> bool:
    """Whether ``p`` satisfies the structural promise of its hint."""
    if p.hint is Hint.HADAMARD_LAYER:
        for q in p.qubits:
            latest: Optional[Gate] = None
            for g in c.gates[:p.position]:
                if g.kind is not Gate.BARRIER and q in g.qubits:
                    latest = g.kind
            if latest is not Gate.H:
                return False
        return True
    if p.hint is Hint.CLASSICAL_BLOCK:
        exit_at = _basis_exit(c)
        return all(exit_at[q] >= p.position for q in p.qubits)
    if p.hint is Hint.BARRIER_HINT:
        g = c.gates[p.position] if p.position < len(c.gates) else None
        return g is not None and g.kind is Gate.BARRIER and set(p.qubits) == set(g.qubits)
    if p.hint is Hint.ENTANGLING_BLOCK:
        return len(p.qubits) >= 2
    return True
