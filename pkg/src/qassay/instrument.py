"""Insert mined assertions into a circuit and check them at runtime.

Three realisations are supported:

* ``AncillaCopy``: CX each asserted qubit onto a fresh ancilla and measure the
  ancillas.  Transparent for classical states only.
* ``MeasureRestart``: measure the data qubits directly.  Everything after the
  measurement is non-authoritative, so ``evaluate`` checks such an assertion
  in its own run truncated right after the measurement and drops it from the
  run that checks the others.
* ``Projection``: apply P (ideal state -> |0...0>), measure, apply P^-1.
  Non-destructive when the state is the ideal one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .benchmarks import PrepHook, basis_prep
from .circuit import Circuit, Gate, GateOp, op
from .errors import CapacityExceeded, OverlapConflict, StrategyMismatch
from .miner import AssertionRecord
from .rng import RngSeed, as_seed
from .sim import MAX_QUBITS, OutcomeDistribution, sample
from .stats import ChiSquareResult, TemplateKind, TESTS
from .templates import build_projection

ALPHA_RUNTIME = 0.01


class Strategy(str, Enum):
    ANCILLA_COPY = "ancilla-copy"
    MEASURE_RESTART = "measure-restart"
    PROJECTION = "projection"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: "str | Strategy") -> "Strategy":
        if isinstance(text, Strategy):
            return text
        key = str(text).strip().lower().replace("_", "-")
        aliases = {"ancillacopy": "ancilla-copy", "measurerestart": "measure-restart"}
        return cls(aliases.get(key, key))


def _check_strategy(r: AssertionRecord, s: Strategy) -> None:
    if s is Strategy.ANCILLA_COPY and r.kind is not TemplateKind.CLASSICAL:
        raise StrategyMismatch(f"{r.id}: ancilla copy would disturb a {r.kind} state")
    if s is Strategy.PROJECTION and r.kind is TemplateKind.CLASSICAL and len(set(r.predicate.values())) > 1:
        raise StrategyMismatch(f"{r.id}: classical projection needs a single target outcome")


def choose_strategy(r: AssertionRecord, override: "Strategy | str | None" = None,
                    ancillas_left: Optional[int] = None) -> Strategy:
    """Default realisation for a record, or the validated override.

    Uniform and cat records use projection only when every covered input
    reaches the ideal state with its exact phases; a state that matches the
    template in the measured distribution alone (e.g. |-> for uniform) would
    fail the all-zeros check, so such records fall back to measure-restart.
    """
    if override is not None:
        s = Strategy.parse(override)
        _check_strategy(r, s)
        return s
    if r.kind is TemplateKind.CLASSICAL:
        if ancillas_left is not None and ancillas_left < len(r.qubits):
            return Strategy.MEASURE_RESTART
        return Strategy.ANCILLA_COPY
    return Strategy.PROJECTION if r.fully_projectable else Strategy.MEASURE_RESTART


@dataclass(frozen=True)
class InstrumentedCircuit:
    circuit: Circuit
    assertion_clbits: dict
    strategy_used: dict
    records: dict
    original_qubits: int
    original_clbits: int
    owners: tuple = ()          # per gate: id of the assertion that inserted it, or None
    prep: str = "basis"
    prep_hook: PrepHook = basis_prep
    ancillas: dict = field(default_factory=dict)

    @property
    def n_ancillas(self) -> int:
        return self.circuit.n_qubits - self.original_qubits

    @property
    def overhead(self) -> int:
        return sum(1 for o in self.owners if o is not None)

    def clbit_map(self) -> dict:
        return {
            aid: {"clbits": list(cb), "strategy": self.strategy_used[aid].value,
                  "ancillas": list(self.ancillas.get(aid, ()))}
            for aid, cb in self.assertion_clbits.items()
        }


@dataclass(frozen=True)
class AssertionVerdict:
    assertion_id: str
    holds: bool
    observed: Optional[OutcomeDistribution] = None
    detail: Optional[ChiSquareResult] = None
    strategy: Optional[Strategy] = None
    vacuous: bool = False
    fraction: Optional[float] = None   # matching-outcome fraction for deterministic checks

    def to_dict(self) -> dict:
        out = {"assertion_id": self.assertion_id, "holds": self.holds, "vacuous": self.vacuous}
        if self.strategy is not None:
            out["strategy"] = self.strategy.value
        if self.fraction is not None:
            out["fraction"] = self.fraction
        if self.detail is not None:
            out["detail"] = self.detail.to_dict()
        return out


def _conflicts(records: Sequence[AssertionRecord]) -> Optional[tuple[str, str]]:
    for i, a in enumerate(records):
        for b in records[i + 1:]:
            if a.position == b.position and set(a.qubits) & set(b.qubits):
                return a.id, b.id
    return None


def instrument(c: Circuit, records: Sequence[AssertionRecord],
               strategies: "Mapping[str, Strategy | str] | Strategy | str | None" = None,
               prep_hook: Optional[PrepHook] = None,
               ancilla_budget: Optional[int] = None,
               check_overlap: bool = True) -> InstrumentedCircuit:
    """Rewrite ``c`` with every record inserted at its cut.

    ``strategies`` is either one override for all records or a map from record
    id to strategy; records without an entry use ``choose_strategy``.  With
    ``check_overlap=False`` records sharing a cut are stacked in sorted order
    (the fault lab needs this when a deleted gate merges two cuts).
    """
    records = sorted(records, key=lambda r: (r.position, r.qubits, r.id))
    if len({r.id for r in records}) != len(records):
        raise OverlapConflict("duplicate assertion ids")
    preps = {r.prep for r in records}
    if len(preps) > 1:
        raise OverlapConflict(f"records mix input preparations {sorted(preps)}")
    prep = preps.pop() if preps else "basis"
    if prep_hook is None:
        if prep != "basis":
            raise ValueError(f"records were mined under prep '{prep}'; pass its hook")
        prep_hook = basis_prep
    clash = _conflicts(records) if check_overlap else None
    if clash:
        raise OverlapConflict(f"assertions {clash[0]} and {clash[1]} claim the same cut and qubits")
    for r in records:
        r.placeholder.validate(c)

    if isinstance(strategies, (str, Strategy)):
        overrides = {r.id: strategies for r in records}
    else:
        overrides = dict(strategies or {})

    n_q, n_c = c.n_qubits, c.n_clbits
    budget = ancilla_budget
    chosen: dict[str, Strategy] = {}
    for r in records:
        s = choose_strategy(r, overrides.get(r.id), budget)
        chosen[r.id] = s
        if s is Strategy.ANCILLA_COPY and budget is not None:
            budget -= len(r.qubits)

    by_pos: dict[int, list[AssertionRecord]] = {}
    for r in records:
        by_pos.setdefault(r.position, []).append(r)

    gates: list[GateOp] = []
    owners: list[Optional[str]] = []
    clbit_map: dict[str, tuple[int, ...]] = {}
    ancillas: dict[str, tuple[int, ...]] = {}

    def emit(aid, ops):
        gates.extend(ops)
        owners.extend([aid] * len(ops))

    for pos in range(len(c.gates) + 1):
        for r in by_pos.get(pos, ()):
            s = chosen[r.id]
            k = len(r.qubits)
            cbs = tuple(range(n_c, n_c + k))
            n_c += k
            clbit_map[r.id] = cbs
            if s is Strategy.ANCILLA_COPY:
                anc = tuple(range(n_q, n_q + k))
                n_q += k
                ancillas[r.id] = anc
                emit(r.id, [op("cx", q, a) for q, a in zip(r.qubits, anc)])
                emit(r.id, [op("measure", a, clbit=cb) for a, cb in zip(anc, cbs)])
            elif s is Strategy.MEASURE_RESTART:
                emit(r.id, [op("measure", q, clbit=cb) for q, cb in zip(r.qubits, cbs)])
            else:
                target = next(iter(r.predicate.values())) if r.kind is TemplateKind.CLASSICAL else None
                p_ops, p_inv = build_projection(r.kind, k, target, r.qubits)
                emit(r.id, p_ops)
                emit(r.id, [op("measure", q, clbit=cb) for q, cb in zip(r.qubits, cbs)])
                emit(r.id, p_inv)
        if pos < len(c.gates):
            emit(None, [c.gates[pos]])

    if n_q > MAX_QUBITS:
        raise CapacityExceeded(f"instrumented circuit needs {n_q} qubits > {MAX_QUBITS}")
    out = c.replace(gates, n_qubits=n_q, n_clbits=n_c)
    return InstrumentedCircuit(
        out, clbit_map, chosen, {r.id: r for r in records}, c.n_qubits, c.n_clbits,
        tuple(owners), prep, prep_hook, ancillas,
    )


def _run_circuit(ic: InstrumentedCircuit, prep_ops: Sequence[GateOp], keep_until: Optional[int],
                 dropped: set) -> Circuit:
    kept = [(g, o) for g, o in zip(ic.circuit.gates, ic.owners) if o not in dropped]
    if keep_until is not None:
        # a restart run ends right after the assertion's own measurements
        last = max(i for i, (_, o) in enumerate(kept) if o == keep_until)
        kept = kept[:last + 1]
    return ic.circuit.replace(tuple(prep_ops) + tuple(g for g, _ in kept))


def evaluate(ic: InstrumentedCircuit, input: str, shots: int, seed: RngSeed | int,
             alpha_runtime: float = ALPHA_RUNTIME) -> list[AssertionVerdict]:
    """Run the instrumented circuit on ``input`` and judge every assertion."""
    seed = as_seed(seed)
    if len(input) != ic.original_qubits:
        raise ValueError(f"input must have {ic.original_qubits} bits")
    prep_ops = list(ic.prep_hook(input, ic.original_qubits))
    restarts = {aid for aid, s in ic.strategy_used.items() if s is Strategy.MEASURE_RESTART}
    covered = {aid for aid, r in ic.records.items() if r.covers(input)}

    dists: dict[str, OutcomeDistribution] = {}
    # assertions that do not cover this input are not armed: their gates are left out
    idle = set(ic.records) - covered
    main_ids = [aid for aid in ic.records if aid in covered and aid not in restarts]
    if main_ids:
        d = sample(_run_circuit(ic, prep_ops, None, restarts | idle), None, shots, seed.child("main"))
        for aid in main_ids:
            dists[aid] = d.marginal_clbits(ic.assertion_clbits[aid])
    for aid in ic.records:
        if aid in covered and aid in restarts:
            circ = _run_circuit(ic, prep_ops, aid, (restarts - {aid}) | idle)
            dists[aid] = sample(circ, None, shots, seed.child("restart", aid)).marginal_clbits(
                ic.assertion_clbits[aid])

    verdicts = []
    for aid, r in ic.records.items():
        s = ic.strategy_used[aid]
        if aid not in covered:
            verdicts.append(AssertionVerdict(aid, True, strategy=s, vacuous=True))
            continue
        d = dists[aid]
        if s is Strategy.PROJECTION:
            want = "0" * len(r.qubits)
        elif r.kind is TemplateKind.CLASSICAL:
            want = r.expected(input)
        else:
            res = TESTS[r.kind](d, r.alpha)
            verdicts.append(AssertionVerdict(aid, res.passed, d, res, s))
            continue
        frac = d.counts.get(want, 0) / d.shots
        verdicts.append(AssertionVerdict(aid, frac >= 1.0 - alpha_runtime, d, None, s, False, frac))
    return verdicts


def all_hold(verdicts: Sequence[AssertionVerdict]) -> bool:
    return all(v.holds for v in verdicts)
