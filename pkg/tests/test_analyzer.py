"""Placeholder discovery and cut scoring."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qassay.analyzer import Hint, Placeholder, check_hint, score_cut, static_analysis
from qassay.benchmarks import builtin, ghz, qft
from qassay.circuit import Circuit, op, parse_qasm
from qassay.errors import EmptyCircuit, IndexOutOfRange
from qassay.rng import RngSeed

from conftest import load_golden, oracle_state, partial_trace_probs, random_circuit

FIG_CIRCUIT = "OPENQASM 2.0; qreg q[4]; h q[0]; x q[2]; x q[3]; cx q[0],q[1];"


def by_hint(phs, hint):
    return [(p.position, p.qubits) for p in phs if p.hint is hint]


class TestStaticAnalysis:
    def test_placement_example(self):
        """H, classical X pair and the post-CX entangled pair are all proposed."""
        phs = static_analysis(parse_qasm(FIG_CIRCUIT), budget=1, seed=0)
        assert (3, (2, 3)) in by_hint(phs, Hint.CLASSICAL_BLOCK)
        assert (1, (0,)) in by_hint(phs, Hint.HADAMARD_LAYER)
        assert (4, (0, 1)) in by_hint(phs, Hint.ENTANGLING_BLOCK)

    def test_ghz3_entangling(self):
        phs = static_analysis(ghz(3))
        assert (3, (0, 1, 2)) in by_hint(phs, Hint.ENTANGLING_BLOCK)

    def test_adder_heuristics(self):
        phs = static_analysis(builtin("adder4").circuit)
        assert (0, (0, 1)) in by_hint(phs, Hint.BARRIER_HINT)
        assert (6, (0, 1, 2, 3)) in by_hint(phs, Hint.CLASSICAL_BLOCK)

    def test_budget_golden(self):
        phs = static_analysis(qft(7), budget=10, seed=RngSeed(3))
        assert [p.to_dict() for p in phs] == load_golden("placeholders_qft7_budget10_seed3.json")

    def test_repeatable(self):
        c = builtin("teleport3").circuit
        assert static_analysis(c, 12, 5) == static_analysis(c, 12, 5)

    def test_budget_fills_with_random_cuts(self):
        phs = static_analysis(ghz(3), budget=6, seed=1)
        assert len(phs) == 6
        assert any(p.hint is Hint.RANDOM_CUT for p in phs)

    def test_ids_sorted_by_position(self):
        phs = static_analysis(qft(5), budget=8, seed=2)
        assert [p.id for p in phs] == [f"ph{i}" for i in range(len(phs))]
        assert [p.key for p in phs] == sorted(p.key for p in phs)

    def test_empty_circuit(self):
        with pytest.raises(EmptyCircuit):
            static_analysis(Circuit(2))

    def test_bad_budget(self):
        with pytest.raises(ValueError):
            static_analysis(ghz(3), budget=0)


class TestScoreCut:
    def test_ghz_cat(self):
        p = Placeholder("p", 3, (0, 1, 2), Hint.ENTANGLING_BLOCK)
        assert score_cut(ghz(3), p) == pytest.approx(1.0)

    def test_phase_gate_invisible(self):
        c = Circuit(1, 0, [op("h", 0), op("t", 0)])
        assert score_cut(c, Placeholder("p", 2, (0,), Hint.RANDOM_CUT)) == pytest.approx(1.0)

    def test_qft_interior_against_partial_trace(self, rng):
        c = qft(7)
        for _ in range(10):
            pos = int(rng.integers(1, len(c)))
            qs = tuple(sorted(int(q) for q in rng.choice(7, 2, replace=False)))
            p = partial_trace_probs(oracle_state(c.prefix(pos)), 7, qs)
            cat = np.array([0.5, 0, 0, 0.5])
            expect = max(p.max(), 1 - 0.5 * np.abs(p - 0.25).sum(), 1 - 0.5 * np.abs(p - cat).sum())
            got = score_cut(c, Placeholder("p", pos, qs, Hint.RANDOM_CUT))
            assert got == pytest.approx(expect, abs=1e-10)

    def test_bounds(self):
        with pytest.raises(IndexOutOfRange):
            score_cut(ghz(3), Placeholder("p", 9, (0,), Hint.RANDOM_CUT))


class TestPlaceholder:
    def test_round_trip(self):
        p = Placeholder("ph1", 2, (3, 1), Hint.BARRIER_HINT, "note")
        assert p.qubits == (1, 3)
        assert Placeholder.from_dict(p.to_dict()) == p

    def test_empty_subset(self):
        with pytest.raises(IndexOutOfRange):
            Placeholder("p", 0, (), Hint.RANDOM_CUT)

    def test_hint_check_detects_broken_promise(self):
        c = Circuit(1, 0, [op("h", 0), op("x", 0)])
        assert not check_hint(c, Placeholder("p", 2, (0,), Hint.HADAMARD_LAYER))
        assert check_hint(c, Placeholder("p", 1, (0,), Hint.HADAMARD_LAYER))


class TestHintInvariant:
    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5), st.integers(1, 20), st.integers(1, 8))
    def test_every_placeholder_keeps_its_promise(self, s, n, depth, budget):
        c = random_circuit(np.random.default_rng(s), n, depth, three_qubit=False)
        if not c.gates:
            return
        for p in static_analysis(c, budget, s):
            p.validate(c)
            assert check_hint(c, p), p
