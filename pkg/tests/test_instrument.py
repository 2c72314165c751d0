"""Assertion instrumentation and runtime evaluation."""

import dataclasses

import numpy as np
import pytest

from qassay.analyzer import Hint, Placeholder
from qassay.benchmarks import builtin, ghz
from qassay.circuit import Circuit, Gate, emit_qasm, insert_at, op, parse_qasm
from qassay.errors import CapacityExceeded, OverlapConflict, StrategyMismatch, TooFewQubits
from qassay.instrument import Strategy, all_hold, choose_strategy, evaluate, instrument
from qassay.miner import AssertionRecord, InputMode, MiningConfig, mine
from qassay.rng import RngSeed
from qassay.sim import StateVector, exact_branches, reduced_probabilities, run_statevector
from qassay.stats import ChiSquareResult, TemplateKind
from qassay.templates import build_projection

S = 8192


def record(rid, kind, position, qubits, predicate, projectable=None, prep="basis"):
    kind = TemplateKind(kind)
    ev = {x: ChiSquareResult(kind, 0.0, 1, 1.0, 0, y if kind is TemplateKind.CLASSICAL else None)
          for x, y in predicate.items()}
    proj = set(predicate) if projectable is None else set(projectable)
    return AssertionRecord(rid, kind, Placeholder(rid, position, qubits, Hint.RANDOM_CUT), predicate, ev, S,
                           prep=prep, projectable=proj)


CAT = record("c", "cat", 3, (0, 1, 2), {"000": None})
UNI = record("u", "uniform", 1, (0,), {"000": None})
CLS = record("k", "classical", 3, (1, 2), {"000": "00"})


class TestChooseStrategy:
    def test_defaults(self):
        assert choose_strategy(CLS) is Strategy.ANCILLA_COPY
        assert choose_strategy(CAT) is Strategy.PROJECTION
        assert choose_strategy(UNI) is Strategy.PROJECTION

    def test_override(self):
        assert choose_strategy(UNI, "measure-restart") is Strategy.MEASURE_RESTART
        assert choose_strategy(CLS, Strategy.PROJECTION) is Strategy.PROJECTION

    def test_mismatch(self):
        with pytest.raises(StrategyMismatch):
            choose_strategy(CAT, Strategy.ANCILLA_COPY)
        two_targets = record("k2", "classical", 3, (1,), {"000": "0", "001": "1"})
        with pytest.raises(StrategyMismatch):
            choose_strategy(two_targets, "projection")

    def test_ancilla_budget_exhausted(self):
        assert choose_strategy(CLS, ancillas_left=1) is Strategy.MEASURE_RESTART

    def test_not_projectable_falls_back(self):
        r = record("c2", "cat", 3, (0, 1, 2), {"000": None, "001": None}, projectable={"000"})
        assert choose_strategy(r) is Strategy.MEASURE_RESTART

    def test_parse_aliases(self):
        assert Strategy.parse("AncillaCopy") is Strategy.ANCILLA_COPY
        assert Strategy.parse("measure_restart") is Strategy.MEASURE_RESTART


class TestBuildProjection:
    def test_bell(self):
        p, p_inv = build_projection(TemplateKind.CAT, 2)
        assert p == [op("cx", 0, 1), op("h", 0)]
        assert p_inv == [op("h", 0), op("cx", 0, 1)]
        sv = run_statevector(Circuit(2, 0, [op("h", 0), op("cx", 0, 1)] + p))
        np.testing.assert_allclose(np.abs(sv.amps), [1, 0, 0, 0], atol=1e-12)

    def test_uniform(self):
        p, _ = build_projection(TemplateKind.UNIFORM, 3)
        assert p == [op("h", 0), op("h", 1), op("h", 2)]
        sv = run_statevector(Circuit(3, 0, [op("h", q) for q in range(3)] + p))
        assert abs(sv.amps[0]) == pytest.approx(1.0)

    def test_classical(self):
        p, _ = build_projection(TemplateKind.CLASSICAL, 3, "101")
        assert p == [op("x", 0), op("x", 2)]

    def test_cat_linear_size(self):
        for k in range(2, 8):
            assert len(build_projection(TemplateKind.CAT, k)[0]) == k

    def test_cat7_inverse_is_identity(self, rng):
        p, p_inv = build_projection(TemplateKind.CAT, 7)
        c = Circuit(7, 0, p + p_inv)
        for _ in range(1000):
            psi = rng.normal(size=128) + 1j * rng.normal(size=128)
            psi /= np.linalg.norm(psi)
            sv = StateVector(7, psi.copy())
            for g in c.gates:
                sv.apply(g)
            np.testing.assert_allclose(sv.amps, psi, atol=1e-10)

    def test_errors(self):
        with pytest.raises(TooFewQubits):
            build_projection(TemplateKind.CAT, 1)
        with pytest.raises(ValueError):
            build_projection(TemplateKind.CLASSICAL, 2, None)


class TestInstrument:
    def test_ghz_projection_op_count(self):
        """Three circuit gates, three CX/H of P, three measurements, three of P inverse."""
        ic = instrument(ghz(3), [CAT])
        assert ic.strategy_used["c"] is Strategy.PROJECTION
        assert len(ic.circuit) == 12
        assert ic.overhead == 9
        assert ic.n_ancillas == 0

    def test_ancilla_copy_grows_register(self):
        c = parse_qasm("OPENQASM 2.0; qreg q[4]; h q[0]; x q[2]; x q[3]; cx q[0],q[1];")
        r = record("assert0", "classical", 3, (1, 2, 3), {"0000": "110"})
        ic = instrument(c, [r])
        assert ic.circuit.n_qubits == 7
        assert ic.ancillas["assert0"] == (4, 5, 6)
        assert ic.assertion_clbits["assert0"] == (0, 1, 2)

    def test_disjoint_same_position(self):
        a = record("b", "classical", 3, (2,), {"000": "0"})
        b = record("a", "classical", 3, (0,), {"000": "0"})
        ic = instrument(ghz(3), [a, b])
        owners = [o for o in ic.owners if o is not None]
        assert owners == ["a", "a", "b", "b"]
        assert ic.assertion_clbits == {"a": (0,), "b": (1,)}

    def test_overlap_rejected(self):
        a = record("a", "classical", 3, (0, 1), {"000": "00"})
        b = record("b", "classical", 3, (1, 2), {"000": "00"})
        with pytest.raises(OverlapConflict):
            instrument(ghz(3), [a, b])
        ic = instrument(ghz(3), [a, b], check_overlap=False)
        assert set(ic.assertion_clbits) == {"a", "b"}

    def test_mixed_preps_rejected(self):
        a = record("a", "classical", 3, (0,), {"000": "0"})
        b = record("b", "classical", 2, (2,), {"000": "0"}, prep="other")
        with pytest.raises(OverlapConflict):
            instrument(ghz(3), [a, b])

    def test_capacity(self):
        c = Circuit(13, 0, [op("x", q) for q in range(13)])
        r = record("a", "classical", 13, tuple(range(12)), {"0" * 13: "1" * 12})
        with pytest.raises(CapacityExceeded):
            instrument(c, [r])

    def test_qasm_reparses(self):
        ic = instrument(ghz(3), [CAT, record("u0", "uniform", 1, (0,), {"000": None})])
        back = parse_qasm(emit_qasm(ic.circuit))
        assert back.gates == ic.circuit.gates
        assert back.n_clbits == 4


class TestEvaluate:
    def test_ghz_projection_holds(self):
        (v,) = evaluate(instrument(ghz(3), [CAT]), "000", S, RngSeed(0))
        assert v.holds
        assert v.fraction >= 0.999

    def test_injected_x_breaks_cat(self):
        bad = insert_at(ghz(3), 3, [op("x", 1)])
        moved = dataclasses.replace(CAT, placeholder=Placeholder("c", 4, (0, 1, 2), Hint.RANDOM_CUT))
        (v,) = evaluate(instrument(bad, [moved]), "000", S, RngSeed(0))
        assert not v.holds

    def test_adder_classical(self):
        b = builtin("adder4")
        cfg = MiningConfig(iterations=16, shots=S, seed=0, input_mode=InputMode.EXHAUSTIVE)
        (r,) = mine(b.circuit, [Placeholder("o", 6, (0, 1, 2, 3), Hint.CLASSICAL_BLOCK)], cfg)
        ic = instrument(b.circuit, [r])
        (v,) = evaluate(ic, "0011", S, RngSeed(1))
        assert v.holds
        assert v.strategy is Strategy.ANCILLA_COPY
        assert v.observed.counts == {r.expected("0011"): S}
        p = reduced_probabilities(run_statevector(b.circuit, "0011"), [0, 1, 2, 3])
        assert p[int(r.expected("0011"), 2)] == pytest.approx(1.0)

    def test_uncovered_is_vacuous(self):
        (v,) = evaluate(instrument(ghz(3), [CAT]), "010", S, RngSeed(0))
        assert v.holds and v.vacuous

    def test_measure_restart_uses_stat_test(self):
        ic = instrument(ghz(3), [CAT], Strategy.MEASURE_RESTART)
        (v,) = evaluate(ic, "000", S, RngSeed(0))
        assert v.holds
        assert v.detail.template is TemplateKind.CAT

    def test_restart_does_not_disturb_later_assertions(self):
        """A destructive check on q0 mid-GHZ must not break the final cat check."""
        early = record("e", "uniform", 1, (0,), {"000": None})
        ic = instrument(ghz(3), [early, CAT], {"e": Strategy.MEASURE_RESTART})
        verdicts = evaluate(ic, "000", S, RngSeed(2))
        assert all_hold(verdicts)

    def test_deterministic(self):
        ic = instrument(ghz(3), [CAT], Strategy.MEASURE_RESTART)
        a = evaluate(ic, "000", 1024, RngSeed(5))
        b = evaluate(ic, "000", 1024, RngSeed(5))
        assert a[0].observed.counts == b[0].observed.counts

    def test_wrong_input_width(self):
        with pytest.raises(ValueError):
            evaluate(instrument(ghz(3), [CAT]), "00", S, 0)


class TestProjectionSoundness:
    def test_ideal_state_preserved(self, rng):
        """P, measure, P^-1 on an ideal template state returns the original state."""
        for trial in range(60):
            kind = [TemplateKind.CLASSICAL, TemplateKind.UNIFORM, TemplateKind.CAT][trial % 3]
            k = int(rng.integers(2 if kind is TemplateKind.CAT else 1, 5))
            n = k + int(rng.integers(0, 3))
            qs = [int(q) for q in rng.choice(n, k, replace=False)]
            target = "".join(str(int(b)) for b in rng.integers(0, 2, k))
            prep = _template_prep(kind, qs, target)
            others = [q for q in range(n) if q not in qs]
            prep += [op("ry", q, angle=float(rng.uniform(0, 3))) for q in others]
            ideal = run_statevector(Circuit(n, 0, prep)).amps
            p, p_inv = build_projection(kind, k, target, qs)
            meas = [op("measure", q, clbit=j) for j, q in enumerate(qs)]
            branches = list(exact_branches(Circuit(n, k, prep + p + meas + p_inv)))
            assert len(branches) == 1
            prob, state, vals = branches[0]
            assert prob == pytest.approx(1.0)
            assert vals == (0,) * k
            np.testing.assert_allclose(state.amps, ideal, atol=1e-10)


def _template_prep(kind, qs, target):
    """Textbook preparation of each template on ``qs``, independent of the projection code."""
    if kind is TemplateKind.CLASSICAL:
        k = len(qs)
        return [op("x", q) for j, q in enumerate(qs) if target[k - 1 - j] == "1"]
    if kind is TemplateKind.UNIFORM:
        return [op("h", q) for q in qs]
    return [op("h", qs[0])] + [op("cx", qs[0], q) for q in qs[1:]]
