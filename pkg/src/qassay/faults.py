"""Seeded fault injection and the three experiment harnesses.

A bug is one structural edit of the circuit.  Edits that leave the program's
observable behaviour unchanged (same end-of-circuit measurement distribution
for every input under every registered preparation) are equivalent mutants:
no test can reveal them, so they are redrawn unless explicitly allowed.

Detection is differential: a bug counts as detected on an input only when
some assertion fails on the mutant while every assertion holds on the
original circuit with the same random stream.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .benchmarks import PrepHook, basis_prep
from .circuit import (
    ONE_QUBIT,
    ROTATIONS,
    TWO_QUBIT,
    UNITARY_GATES,
    Circuit,
    Gate,
    GateOp,
)
from .errors import (
    EmptyCircuit,
    InsufficientAssertions,
    InvalidCircuit,
    UndetectableBug,
)
from .instrument import all_hold, evaluate, instrument
from .miner import AssertionRecord, MiningConfig, count_by_kind, input_sequence, mine, mining_tasks
from .parallel import parallel_map
from .rng import RngSeed, as_seed
from .sim import circuit_unitary, exact_branches, run_statevector
from .stats import PRECEDENCE

ANGLE_LOW = 0.1
EQUIV_TOL = 1e-9
MAX_REDRAWS = 500
DENSE_MAX_QUBITS = 10
SPOT_CHECK_INPUTS = 64


class MutationKind(str, Enum):
    GATE_SUBSTITUTE = "GateSubstitute"
    GATE_INSERT = "GateInsert"
    GATE_DELETE = "GateDelete"
    RANDOM_ROTATION = "RandomRotation"

    def __str__(self) -> str:
        return self.value


INSERTING = (MutationKind.GATE_INSERT, MutationKind.RANDOM_ROTATION)


@dataclass(frozen=True)
class Mutation:
    kind: MutationKind
    position: int
    detail: Optional[GateOp] = None      # replacement or inserted gate
    original: Optional[GateOp] = None    # replaced or deleted gate

    def __post_init__(self):
        object.__setattr__(self, "kind", MutationKind(self.kind))

    def to_dict(self) -> dict:
        def g(x):
            return None if x is None else {"gate": x.kind.value, "qubits": list(x.qubits), "params": list(x.params)}
        return {"kind": self.kind.value, "position": self.position,
                "detail": g(self.detail), "original": g(self.original)}

    @classmethod
    def from_dict(cls, d: dict) -> "Mutation":
        def g(x):
            return None if x is None else GateOp(Gate(x["gate"]), tuple(x["qubits"]), params=tuple(x["params"]))
        return cls(MutationKind(d["kind"]), int(d["position"]), g(d.get("detail")), g(d.get("original")))

    def describe(self) -> str:
        if self.kind is MutationKind.GATE_DELETE:
            return f"delete {self.original.to_qasm()} at {self.position}"
        if self.kind is MutationKind.GATE_SUBSTITUTE:
            return f"replace {self.original.to_qasm()} by {self.detail.to_qasm()} at {self.position}"
        return f"insert {self.detail.to_qasm()} at {self.position}"


def apply_mutation(c: Circuit, m: Mutation) -> Circuit:
    gates = list(c.gates)
    if m.kind in INSERTING:
        if not 0 <= m.position <= len(gates):
            raise InvalidCircuit(f"insert position {m.position} out of range")
        gates.insert(m.position, m.detail)
    elif m.kind is MutationKind.GATE_DELETE:
        del gates[m.position]
    else:
        gates[m.position] = m.detail
    return c.replace(gates)


def remap_position(position: int, m: Mutation) -> int:
    """Where a cut before original gate ``position`` sits in the mutant.

    An insertion exactly at the cut lands before it, so the edited gate is
    upstream of the assertion.
    """
    if m.kind in INSERTING:
        return position + 1 if position >= m.position else position
    if m.kind is MutationKind.GATE_DELETE:
        return position - 1 if position > m.position else position
    return position


def remap_record(r: AssertionRecord, m: Mutation) -> AssertionRecord:
    ph = dataclasses.replace(r.placeholder, position=remap_position(r.position, m))
    return dataclasses.replace(r, placeholder=ph)


# ------------------------------------------------------------ equivalence

def _prepared_states(n: int, hook: PrepHook, inputs: Sequence[str]) -> np.ndarray:
    cols = []
    for x in inputs:
        cols.append(run_statevector(Circuit(n, 0, hook(x, n))).amps)
    return np.array(cols).T


def _branch_signature(c: Circuit, x: str) -> dict:
    out: dict = {}
    for p, state, vals in exact_branches(c, x):
        acc = out.setdefault(vals, np.zeros(1 << c.n_qubits))
        acc += p * state.probabilities()
    return out


def observably_equivalent(a: Circuit, b: Circuit, preps: Optional[Mapping[str, PrepHook]] = None,
                          inputs: Optional[Sequence[str]] = None) -> bool:
    """Same end-of-circuit outcome distribution for every input and preparation."""
    if a.n_qubits != b.n_qubits:
        return False
    n = a.n_qubits
    preps = {"basis": basis_prep} if preps is None else dict(preps)
    if inputs is None:
        if n <= DENSE_MAX_QUBITS:
            inputs = [format(i, f"0{n}b") for i in range(1 << n)]
        else:
            inputs = input_sequence(n, MiningConfig(iterations=SPOT_CHECK_INPUTS, seed=RngSeed(0)))
    if a.is_unitary and b.is_unitary and n <= DENSE_MAX_QUBITS:
        ua, ub = circuit_unitary(a), circuit_unitary(b)
        for hook in preps.values():
            if hook is basis_prep:
                cols = [int(x, 2) for x in inputs]
                pa, pb = np.abs(ua[:, cols]) ** 2, np.abs(ub[:, cols]) ** 2
            else:
                v = _prepared_states(n, hook, inputs)
                pa, pb = np.abs(ua @ v) ** 2, np.abs(ub @ v) ** 2
            if np.abs(pa - pb).max() > EQUIV_TOL:
                return False
        return True
    for hook in preps.values():
        for x in inputs:
            pre = tuple(hook(x, n))
            sa = _branch_signature(a.replace(pre + a.gates), None)
            sb = _branch_signature(b.replace(pre + b.gates), None)
            if sa.keys() != sb.keys():
                return False
            if any(np.abs(sa[k] - sb[k]).max() > EQUIV_TOL for k in sa):
                return False
    return True


# -------------------------------------------------------------- injection

def _substitutable(c: Circuit) -> list[int]:
    return [i for i, g in enumerate(c.gates) if g.kind in ONE_QUBIT or g.kind in TWO_QUBIT]


def _deletable(c: Circuit) -> list[int]:
    return [i for i, g in enumerate(c.gates) if g.kind.is_unitary]


def _random_gate(rng: np.random.Generator, kinds: Sequence[Gate], qubits: Sequence[int]) -> GateOp:
    kind = kinds[int(rng.integers(len(kinds)))]
    params = (float(rng.uniform(ANGLE_LOW, math.pi)),) if kind in ROTATIONS else ()
    return GateOp(kind, tuple(qubits), params=params)


def draw_mutation(c: Circuit, rng: np.random.Generator) -> Mutation:
    """One uniformly drawn edit: kind first, then a valid position and gate."""
    n, m = c.n_qubits, len(c.gates)
    sub, dele = _substitutable(c), _deletable(c)
    kinds = [MutationKind.GATE_SUBSTITUTE] * bool(sub) + [MutationKind.GATE_INSERT]
    kinds += [MutationKind.GATE_DELETE] * (len(dele) > 0 and m > 1) + [MutationKind.RANDOM_ROTATION]
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind is MutationKind.GATE_SUBSTITUTE:
        pos = sub[int(rng.integers(len(sub)))]
        old = c.gates[pos]
        family = ONE_QUBIT if old.kind in ONE_QUBIT else TWO_QUBIT
        return Mutation(kind, pos, _random_gate(rng, [g for g in family if g is not old.kind], old.qubits), old)
    if kind is MutationKind.GATE_DELETE:
        pos = dele[int(rng.integers(len(dele)))]
        return Mutation(kind, pos, None, c.gates[pos])
    pos = int(rng.integers(m + 1))
    if kind is MutationKind.RANDOM_ROTATION:
        q = int(rng.integers(n))
        return Mutation(kind, pos, _random_gate(rng, sorted(ROTATIONS, key=lambda g: g.value), (q,)))
    pool = [g for g in UNITARY_GATES if g not in ROTATIONS and g.arity <= n]
    kind_g = pool[int(rng.integers(len(pool)))]
    qubits = tuple(int(q) for q in rng.choice(n, size=kind_g.arity, replace=False))
    return Mutation(kind, pos, GateOp(kind_g, qubits))


def inject(c: Circuit, count: int, seed: RngSeed | int,
           preps: Optional[Mapping[str, PrepHook]] = None,
           allow_equivalent: bool = False) -> tuple[Circuit, list[Mutation]]:
    """Apply ``count`` seeded mutations in sequence; each position refers to the
    circuit as left by the previous mutation."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not c.gates:
        raise EmptyCircuit("cannot mutate an empty circuit")
    seed = as_seed(seed)
    log: list[Mutation] = []
    current = c
    for i in range(count):
        rng = seed.child("mutation", i).generator()
        for _ in range(MAX_REDRAWS):
            m = draw_mutation(current, rng)
            mutant = apply_mutation(current, m)
            if allow_equivalent or not observably_equivalent(current, mutant, preps):
                break
        else:
            raise InvalidCircuit(f"no observable mutation found in {MAX_REDRAWS} draws")
        log.append(m)
        current = mutant
    return current, log


def draw_bugs(c: Circuit, n_bugs: int, seed: RngSeed | int,
              preps: Optional[Mapping[str, PrepHook]] = None) -> list[Mutation]:
    """Independent single-edit bugs, each relative to the original circuit."""
    seed = as_seed(seed)
    return [inject(c, 1, seed.child("bug", j), preps)[1][0] for j in range(n_bugs)]


# ---------------------------------------------------------------- reports

@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    series: dict = field(default_factory=dict)      # name -> [(x, y), ...]
    runs: list = field(default_factory=list)

    def rows(self) -> list[tuple]:
        seed = self.config.get("seed", "")
        out = []
        for name, points in self.series.items():
            for x, y in points:
                out.append((f"{self.experiment}/{name}", x, y, seed, f"series/{name}"))
        return out

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "config": self.config,
                "series": {k: [list(p) for p in v] for k, v in self.series.items()},
                "runs": self.runs}


# ----------------------------------------------------------- mining curve

def experiment_mining_curve(c: Circuit, placeholders, cfg: MiningConfig, I_grid: Sequence[int],
                            preps: Optional[Mapping[str, PrepHook]] = None) -> ExperimentReport:
    """Mined-assertion counts per kind as the iteration budget grows."""
    grid = list(I_grid)
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
        raise ValueError("I_grid must be positive and strictly increasing")
    top = dataclasses.replace(cfg, iterations=grid[-1])
    records = mine(c, placeholders, top, preps)
    n = c.n_qubits
    series: dict[str, list] = {k.value: [] for k in PRECEDENCE}
    series["simulations"] = []
    runs = []
    for I in grid:
        sub = dataclasses.replace(cfg, iterations=I)
        inputs = input_sequence(n, sub)
        counts = count_by_kind([r.restrict(inputs) for r in records])
        sims = len(mining_tasks(c, placeholders, sub, preps))
        for k in PRECEDENCE:
            series[k.value].append((I, counts[k]))
        series["simulations"].append((I, sims))
        runs.append({"iterations": I, "inputs": len(inputs), "simulations": sims,
                     "counts": {k.value: v for k, v in counts.items()}})
    config = {**cfg.to_dict(), "seed": cfg.seed.master_seed, "circuit": c.name,
              "I_grid": grid, "placeholders": [p.to_dict() for p in placeholders]}
    return ExperimentReport("mining-curve", config, series, runs)


# ------------------------------------------------------- differential check

def _instrument_groups(c: Circuit, records: Sequence[AssertionRecord], preps: Mapping[str, PrepHook]):
    groups: dict[str, list] = {}
    for r in records:
        groups.setdefault(r.prep, []).append(r)
    out = []
    for prep, rs in groups.items():
        out.append(instrument(c, rs, prep_hook=preps.get(prep, basis_prep), check_overlap=False))
    return out


def _holds(c: Circuit, records, preps, x: str, shots: int, seed: RngSeed) -> bool:
    return all(all_hold(evaluate(ic, x, shots, seed.child(ic.prep))) for ic in _instrument_groups(c, records, preps))


@dataclass(frozen=True)
class _DetectTask:
    golden: Circuit
    records: tuple
    bug: Mutation
    input: str
    shots: int
    seed: RngSeed
    preps: tuple


def _detects(t: _DetectTask) -> bool:
    preps = dict(t.preps)
    if not _holds(t.golden, t.records, preps, t.input, t.shots, t.seed):
        return False  # golden run already fails: not attributable to the bug
    mutant = apply_mutation(t.golden, t.bug)
    remapped = [remap_record(r, t.bug) for r in t.records]
    return not _holds(mutant, remapped, preps, t.input, t.shots, t.seed)


def _prep_tuple(preps: Optional[Mapping[str, PrepHook]]) -> tuple:
    return tuple(({"basis": basis_prep} if preps is None else dict(preps)).items())


def detection_table(c: Circuit, records: Sequence[AssertionRecord], bugs: Sequence[Mutation],
                    inputs: Sequence[str], shots: int, seed: RngSeed,
                    preps: Optional[Mapping[str, PrepHook]] = None, jobs: int = 1) -> dict:
    """{(bug index, input): detected} for every pair."""
    pt = _prep_tuple(preps)
    keys = [(j, x) for j in range(len(bugs)) for x in inputs]
    tasks = [_DetectTask(c, tuple(records), bugs[j], x, shots, seed.child("eval", j, x), pt) for j, x in keys]
    return dict(zip(keys, parallel_map(_detects, tasks, jobs)))


# --------------------------------------------------------------- coverage

def split_units(records: Sequence[AssertionRecord]) -> list[AssertionRecord]:
    """One single-input assertion per (record, covered input)."""
    return [r.restrict([x], f"{r.id}:{x}") for r in records for x in r.inputs]


def _parent(unit_id: str) -> str:
    return unit_id.split(":", 1)[0]


def select_assertions(records: Sequence[AssertionRecord], n: int, seed: RngSeed | int) -> list[AssertionRecord]:
    """Seeded choice of ``n`` single-input assertions that can be instrumented together.

    Units from the same record share its cut and are merged back into one
    record restricted to the chosen inputs; units from different records that
    claim the same cut and qubits are skipped.
    """
    units = split_units(records)
    order = as_seed(seed).generator().permutation(len(units))
    chosen: list[AssertionRecord] = []
    for i in order:
        u = units[int(i)]
        if any(_parent(u.id) != _parent(o.id) and u.prep == o.prep and u.position == o.position
               and set(u.qubits) & set(o.qubits) for o in chosen):
            continue
        chosen.append(u)
        if len(chosen) == n:
            break
    else:
        raise InsufficientAssertions(f"only {len(chosen)} compatible assertions available, need {n}")
    by_parent: dict[str, list[str]] = {}
    for u in chosen:
        by_parent.setdefault(_parent(u.id), []).append(u.inputs[0])
    return [r.restrict(by_parent[r.id]) for r in records if r.id in by_parent]


def experiment_error_coverage(c: Circuit, records: Sequence[AssertionRecord], n_assertions: int = 5,
                              n_bugs: int = 10, vector_grid: Sequence[int] = tuple(range(0, 65)),
                              seed: RngSeed | int = 0, shots: int = 8192,
                              preps: Optional[Mapping[str, PrepHook]] = None, jobs: int = 1,
                              bugs: Optional[Sequence[Mutation]] = None) -> ExperimentReport:
    """Fraction of bugs caught by ``n_assertions`` seeded assertions vs test vectors."""
    seed = as_seed(seed)
    grid = sorted(set(int(t) for t in vector_grid))
    if not grid or grid[0] < 0:
        raise ValueError("vector_grid must hold non-negative counts")
    chosen = select_assertions(records, n_assertions, seed.child("select"))
    if bugs is None:
        bugs = draw_bugs(c, n_bugs, seed, preps)
    n = c.n_qubits
    vec_rng = seed.child("vectors").generator()
    vectors = [format(int(v), f"0{n}b") for v in vec_rng.integers(0, 1 << n, size=grid[-1])]
    table = detection_table(c, chosen, bugs, sorted(set(vectors)), shots, seed, preps, jobs)

    first: list[Optional[int]] = []
    for j in range(len(bugs)):
        hit = next((i + 1 for i, x in enumerate(vectors) if table[(j, x)]), None)
        first.append(hit)
    series = [(t, sum(1 for h in first if h is not None and h <= t) / len(bugs)) for t in grid]
    runs = [{"bug": j, "mutation": b.to_dict(), "description": b.describe(), "detected_at": first[j]}
            for j, b in enumerate(bugs)]
    config = {"seed": seed.master_seed, "circuit": c.name, "n_assertions": n_assertions,
              "n_bugs": len(bugs), "shots": shots, "vector_grid": grid,
              "assertions": [f"{r.id}:{x}" for r in chosen for x in r.inputs], "vectors": vectors}
    return ExperimentReport("coverage", config, {"coverage": series}, runs)


# --------------------------------------------------------------- tradeoff

@dataclass(frozen=True)
class _UnitTask:
    golden: Circuit
    unit: AssertionRecord
    bug: Mutation
    shots: int
    seed: RngSeed
    preps: tuple


def _unit_detects(t: _UnitTask) -> bool:
    x = t.unit.inputs[0]
    return _detects(_DetectTask(t.golden, (t.unit,), t.bug, x, t.shots, t.seed, t.preps))


def sensitive_units(c: Circuit, records: Sequence[AssertionRecord], bug: Mutation, shots: int,
                    seed: RngSeed, preps: Optional[Mapping[str, PrepHook]] = None,
                    jobs: int = 1) -> list[AssertionRecord]:
    units = split_units(records)
    pt = _prep_tuple(preps)
    tasks = [_UnitTask(c, u, bug, shots, seed.child("unit", u.id), pt) for u in units]
    flags = parallel_map(_unit_detects, tasks, jobs)
    return [u for u, f in zip(units, flags) if f]


def iterations_to_detection(pool: Sequence[AssertionRecord], k: int, n_qubits: int,
                            seed: RngSeed, cap: Optional[int] = None) -> int:
    """Draw ``k`` detecting units, then count random vectors until one applies."""
    rng = seed.generator()
    picked = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
    targets = {pool[int(i)].inputs[0] for i in picked}
    cap = 10 * (1 << n_qubits) if cap is None else cap
    for t in range(1, cap + 1):
        if format(int(rng.integers(0, 1 << n_qubits)), f"0{n_qubits}b") in targets:
            return t
    raise UndetectableBug(f"no detection within {cap} vectors")


def experiment_tradeoff(c: Circuit, records: Sequence[AssertionRecord], bug: Mutation,
                        assertion_grid: Sequence[int] = (1, 3, 7, 15), seed: RngSeed | int = 0,
                        repetitions: int = 10, shots: int = 8192,
                        preps: Optional[Mapping[str, PrepHook]] = None, jobs: int = 1,
                        pool: Optional[Sequence[AssertionRecord]] = None) -> ExperimentReport:
    """Vectors needed to expose ``bug`` with k single-input assertions in place."""
    seed = as_seed(seed)
    if pool is None:
        pool = sensitive_units(c, records, bug, shots, seed, preps, jobs)
    if not pool:
        raise UndetectableBug(f"no mined assertion detects: {bug.describe()}")
    grid = [int(k) for k in assertion_grid]
    if any(k < 1 for k in grid):
        raise ValueError("assertion counts must be >= 1")
    medians, minima, runs = [], [], []
    for k in grid:
        its = [iterations_to_detection(pool, k, c.n_qubits, seed.child("tradeoff", k, rep))
               for rep in range(repetitions)]
        medians.append((k, float(np.median(its))))
        minima.append((k, float(min(its))))
        runs.append({"k": k, "iterations": its})
    config = {"seed": seed.master_seed, "circuit": c.name, "bug": bug.to_dict(),
              "bug_description": bug.describe(), "repetitions": repetitions, "shots": shots,
              "assertion_grid": grid, "sensitive_units": len(pool),
              "sensitive_inputs": len({u.inputs[0] for u in pool})}
    return ExperimentReport("tradeoff", config, {"median": medians, "min": minima}, runs)
