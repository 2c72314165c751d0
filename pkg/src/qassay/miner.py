"""Assertion mining: sample each placeholder's sub-circuit over many inputs and
keep the inputs whose measured distribution fits a template."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .analyzer import Placeholder
from .benchmarks import PrepHook, basis_prep
from .circuit import Circuit, Gate, GateOp, op
from .errors import InvalidCircuit
from .parallel import parallel_map
from .rng import RngSeed, as_seed
from .sim import exact_marginal, reduced_probabilities, run_statevector, sample
from .stats import (
    DEFAULT_ALPHA,
    MINIMUM_SHOTS,
    PRECEDENCE,
    ChiSquareResult,
    TemplateKind,
    classify,
)
from .templates import build_projection

EXHAUSTIVE_MAX_QUBITS = 12
CLASSICAL_EXACT_MIN = 0.99  # post-hoc exact check for classical entries
PROJECTABLE_TOL = 1e-9


class InputMode(str, Enum):
    RANDOM = "random"
    EXHAUSTIVE = "exhaustive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MiningConfig:
    iterations: int = 64
    shots: int = 8192
    alpha: float = DEFAULT_ALPHA
    seed: RngSeed = field(default_factory=lambda: RngSeed(0))
    input_mode: InputMode = InputMode.RANDOM
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seed", as_seed(self.seed))
        object.__setattr__(self, "input_mode", InputMode(self.input_mode))
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.shots < MINIMUM_SHOTS:
            raise ValueError(f"shots must be >= {MINIMUM_SHOTS}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    def resolved_mode(self, n_qubits: int) -> InputMode:
        if self.input_mode is InputMode.EXHAUSTIVE:
            return InputMode.EXHAUSTIVE
        if n_qubits <= EXHAUSTIVE_MAX_QUBITS and self.iterations >= (1 << n_qubits):
            return InputMode.EXHAUSTIVE
        return InputMode.RANDOM

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "shots": self.shots, "alpha": self.alpha,
                "seed": self.seed.as_dict(), "input_mode": self.input_mode.value}


@dataclass(frozen=True)
class AssertionRecord:
    """One mined assertion: a template kind at a placeholder under one input prep.

    ``predicate`` maps each covered input to its expected outcome (classical)
    or to ``None`` (uniform and cat, where the input only implies the template).
    """

    id: str
    kind: TemplateKind
    placeholder: Placeholder
    predicate: Mapping[str, Optional[str]]
    evidence: Mapping[str, ChiSquareResult]
    shots: int
    alpha: float = DEFAULT_ALPHA
    prep: str = "basis"
    projectable: frozenset = frozenset()
    seed: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", TemplateKind(self.kind))
        object.__setattr__(self, "predicate", dict(sorted(self.predicate.items())))
        object.__setattr__(self, "evidence", dict(sorted(self.evidence.items())))
        object.__setattr__(self, "projectable", frozenset(self.projectable))
        if self.kind is TemplateKind.CLASSICAL:
            if any(v is None for v in self.predicate.values()):
                raise ValueError("classical predicate entries need an outcome")
        missing = set(self.predicate) - set(self.evidence)
        if missing:
            raise ValueError(f"no evidence for inputs {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.predicate)

    @property
    def inputs(self) -> tuple[str, ...]:
        return tuple(self.predicate)

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.placeholder.qubits

    @property
    def position(self) -> int:
        return self.placeholder.position

    def covers(self, input: str) -> bool:
        return input in self.predicate

    def expected(self, input: str) -> Optional[str]:
        return self.predicate.get(input)

    @property
    def fully_projectable(self) -> bool:
        return bool(self.predicate) and all(x in self.projectable for x in self.predicate)

    def restrict(self, inputs: Sequence[str], new_id: Optional[str] = None) -> "AssertionRecord":
        """The same assertion limited to ``inputs`` (those it covers)."""
        keep = [x for x in inputs if x in self.predicate]
        return AssertionRecord(
            new_id or self.id, self.kind, self.placeholder,
            {x: self.predicate[x] for x in keep}, {x: self.evidence[x] for x in keep},
            self.shots, self.alpha, self.prep, self.projectable & set(keep), self.seed,
        )


def random_input(n: int, seed: RngSeed | int) -> str:
    """Uniform n-bit string; rightmost character is qubit 0."""
    if n < 1:
        raise ValueError("n must be >= 1")
    bits = as_seed(seed).generator().integers(0, 2, size=n)
    return "".join(str(int(b)) for b in bits)


def input_sequence(n: int, cfg: MiningConfig) -> list[str]:
    """Inputs mined under ``cfg``; random draws form a prefix-stable sequence."""
    if cfg.resolved_mode(n) is InputMode.EXHAUSTIVE:
        if n > EXHAUSTIVE_MAX_QUBITS and cfg.input_mode is InputMode.EXHAUSTIVE:
            raise InvalidCircuit(f"exhaustive mining over {n} qubits is too large")
        return [format(i, f"0{n}b") for i in range(1 << n)]
    seen: dict[str, None] = {}
    for i in range(cfg.iterations):
        seen.setdefault(random_input(n, cfg.seed.child("input", i)), None)
    return list(seen)


def instrument_placeholder(c: Circuit, p: Placeholder) -> Circuit:
    """Prefix up to the cut plus a MEASURE per placeholder qubit into fresh clbits."""
    p.validate(c)
    base = c.n_clbits
    measures = [op("measure", q, clbit=base + j) for j, q in enumerate(p.qubits)]
    return c.replace(c.gates[:p.position] + tuple(measures), n_clbits=base + len(p.qubits))


def is_tautological(c: Circuit, p: Placeholder) -> bool:
    """True when no gate before the cut touches the subset: under basis inputs the
    cut state is the input itself and any classical assertion restates it."""
    return not any(g.kind is not Gate.BARRIER and set(g.qubits) & set(p.qubits)
                   for g in c.gates[:p.position])


@dataclass(frozen=True)
class _Task:
    sqc: Circuit
    probe: Circuit
    qubits: tuple[int, ...]
    clbits: tuple[int, ...]
    shots: int
    alpha: float
    seed: RngSeed


@dataclass(frozen=True)
class _Outcome:
    kind: Optional[TemplateKind]
    result: Optional[ChiSquareResult]
    projectable: bool


def _exact_probs(c: Circuit, qubits: Sequence[int]) -> np.ndarray:
    if c.is_unitary:
        return reduced_probabilities(run_statevector(c), qubits)
    return exact_marginal(c, qubits)


def _run_task(t: _Task) -> _Outcome:
    dist = sample(t.sqc, None, t.shots, t.seed).marginal_clbits(t.clbits)
    kind, results = classify(dist, t.alpha)
    if kind is None:
        return _Outcome(None, None, False)
    res = results[kind]
    if kind is TemplateKind.CLASSICAL:
        probs = _exact_probs(t.probe, t.qubits)
        if probs[int(res.mode, 2)] < CLASSICAL_EXACT_MIN:
            return _Outcome(None, None, False)
        return _Outcome(kind, res, True)
    p_ops, _ = build_projection(kind, len(t.qubits), qubits=t.qubits)
    probs = _exact_probs(t.probe.replace(t.probe.gates + tuple(p_ops)), t.qubits)
    return _Outcome(kind, res, bool(probs[0] >= 1.0 - PROJECTABLE_TOL))


def mining_tasks(c: Circuit, placeholders: Sequence[Placeholder], cfg: MiningConfig,
                 preps: Optional[Mapping[str, PrepHook]] = None) -> list[tuple[str, int, str, _Task]]:
    """Every (prep, placeholder index, input, task) that ``mine`` will simulate."""
    preps = {"basis": basis_prep} if preps is None else dict(preps)
    n = c.n_qubits
    inputs = input_sequence(n, cfg)
    out = []
    for pi, p in enumerate(placeholders):
        sqc = instrument_placeholder(c, p)
        clbits = tuple(range(c.n_clbits, sqc.n_clbits))
        for prep_name, hook in preps.items():
            if prep_name == "basis" and is_tautological(c, p):
                continue
            for x in inputs:
                prep_ops: list[GateOp] = list(hook(x, n))
                if prep_name != "basis" and prep_ops == basis_prep(x, n):
                    continue  # identical to the basis-prep task
                task = _Task(
                    sqc.replace(tuple(prep_ops) + sqc.gates),
                    c.replace(tuple(prep_ops) + c.gates[:p.position]),
                    p.qubits, clbits, cfg.shots, cfg.alpha,
                    cfg.seed.child("sample", prep_name, p.id, x),
                )
                out.append((prep_name, pi, x, task))
    return out


def mine(c: Circuit, placeholders: Sequence[Placeholder], cfg: MiningConfig,
         preps: Optional[Mapping[str, PrepHook]] = None) -> list[AssertionRecord]:
    """Mine assertion records for every placeholder (one per placeholder, prep and kind)."""
    tasks = mining_tasks(c, placeholders, cfg, preps)
    outcomes = parallel_map(_run_task, [t for *_, t in tasks], cfg.jobs)
    groups: dict[tuple, dict] = {}
    for (prep_name, pi, x, _), res in zip(tasks, outcomes):
        if res.kind is None:
            continue
        g = groups.setdefault((pi, prep_name, res.kind), {"pred": {}, "ev": {}, "proj": set()})
        g["pred"][x] = res.result.mode if res.kind is TemplateKind.CLASSICAL else None
        g["ev"][x] = res.result
        if res.projectable:
            g["proj"].add(x)

    prep_order = list(({"basis": None} if preps is None else preps))
    records = []
    for pi, p in enumerate(placeholders):
        for prep_name in prep_order:
            for kind in PRECEDENCE:
                g = groups.get((pi, prep_name, kind))
                if not g:
                    continue
                records.append(AssertionRecord(
                    f"a{len(records)}", kind, p, g["pred"], g["ev"], cfg.shots, cfg.alpha,
                    prep_name, frozenset(g["proj"]), cfg.seed.as_dict(),
                ))
    return records


def count_by_kind(records: Sequence[AssertionRecord]) -> dict[TemplateKind, int]:
    """Assertion counts per kind; each predicate entry is one assertion."""
    out = {k: 0 for k in PRECEDENCE}
    for r in records:
        out[r.kind] += len(r)
    return out
