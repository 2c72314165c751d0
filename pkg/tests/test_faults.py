"""Fault injection and the three experiments."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qassay.analyzer import Hint, Placeholder, static_analysis
from qassay.benchmarks import builtin, ghz, qft
from qassay.circuit import Gate, op
from qassay.errors import InsufficientAssertions, UndetectableBug
from qassay.faults import (Mutation, MutationKind, apply_mutation, draw_bugs, draw_mutation,
                           experiment_error_coverage, experiment_mining_curve, experiment_tradeoff,
                           inject, iterations_to_detection, observably_equivalent, remap_position,
                           select_assertions, sensitive_units, split_units)
from qassay.miner import AssertionRecord, InputMode, MiningConfig, mine
from qassay.rng import RngSeed
from qassay.stats import TemplateKind

from conftest import load_golden

ADDER = builtin("adder4")
ADDER_PREPS = {"basis": ADDER.prep("basis"), "superposition": ADDER.prep("superposition")}


@pytest.fixture(scope="module")
def adder_records():
    cfg = MiningConfig(iterations=16, shots=2048, seed=0, input_mode=InputMode.EXHAUSTIVE)
    return mine(ADDER.circuit, static_analysis(ADDER.circuit), cfg, ADDER_PREPS)


class TestMutations:
    def test_delete_h_from_ghz(self):
        c = ghz(3)
        out = apply_mutation(c, Mutation(MutationKind.GATE_DELETE, 0, None, c.gates[0]))
        assert len(out) == 2
        assert all(g.kind is Gate.CX for g in out.gates)

    def test_injected_delete_shrinks(self):
        for s in range(40):
            out, (m,) = inject(ghz(3), 1, RngSeed(s))
            if m.kind is MutationKind.GATE_DELETE:
                assert len(out) == 2
                return
        pytest.fail("no deletion drawn in 40 seeds")

    def test_golden_log(self):
        _, log = inject(qft(7), 10, RngSeed(7))
        assert [m.to_dict() for m in log] == load_golden("qft7_mutation_log.json")

    def test_log_replays(self):
        c = builtin("teleport3").circuit
        out, log = inject(c, 4, RngSeed(3))
        replay = c
        for m in log:
            replay = apply_mutation(replay, m)
        assert replay.gates == out.gates

    def test_mutants_are_observable(self):
        c = builtin("teleport3").circuit
        for m in draw_bugs(c, 10, RngSeed(1)):
            assert not observably_equivalent(c, apply_mutation(c, m))

    def test_round_trip_dict(self):
        for m in draw_bugs(qft(4), 6, RngSeed(2)):
            assert Mutation.from_dict(m.to_dict()) == m

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_substitution_keeps_arity(self, s):
        c = builtin("teleport3").circuit
        m = draw_mutation(c, np.random.default_rng(s))
        if m.kind is MutationKind.GATE_SUBSTITUTE:
            assert m.detail.kind.arity == m.original.kind.arity
            assert m.detail.qubits == m.original.qubits
            assert m.detail.kind is not m.original.kind
        if m.kind is MutationKind.RANDOM_ROTATION:
            assert 0.1 <= m.detail.params[0] < math.pi
        apply_mutation(c, m)

    def test_phase_only_edit_is_equivalent(self):
        c = qft(3)
        rz = Mutation(MutationKind.RANDOM_ROTATION, len(c), op("rz", 0, angle=0.4))
        assert observably_equivalent(c, apply_mutation(c, rz))


class TestRemap:
    def test_insert(self):
        m = Mutation(MutationKind.GATE_INSERT, 3, op("x", 0))
        assert [remap_position(p, m) for p in (2, 3, 4)] == [2, 4, 5]

    def test_delete(self):
        m = Mutation(MutationKind.GATE_DELETE, 3, None, op("x", 0))
        assert [remap_position(p, m) for p in (2, 3, 4)] == [2, 3, 3]

    def test_substitute(self):
        m = Mutation(MutationKind.GATE_SUBSTITUTE, 3, op("y", 0), op("x", 0))
        assert remap_position(7, m) == 7


class TestMiningCurve:
    def test_adder_saturates(self):
        cfg = MiningConfig(iterations=16, shots=2048, seed=0)
        rep = experiment_mining_curve(ADDER.circuit, static_analysis(ADDER.circuit), cfg, [1, 2, 4, 8, 16],
                                      ADDER_PREPS)
        classical = dict(rep.series["classical"])
        uniform = dict(rep.series["uniform"])
        assert classical[16] == 16
        assert uniform[16] == 4
        for name in ("classical", "uniform", "cat"):
            ys = [y for _, y in rep.series[name]]
            assert ys == sorted(ys)

    def test_ghz_cat_record(self):
        c = ghz(3)
        phs = static_analysis(c)
        cfg = MiningConfig(iterations=8, shots=2048, seed=0)
        rep = experiment_mining_curve(c, phs, cfg, [1, 8])
        recs = mine(c, phs, cfg)
        cat = [r for r in recs if r.kind is TemplateKind.CAT]
        assert len(cat) == sum(p.hint is Hint.ENTANGLING_BLOCK for p in phs) == 1
        assert dict(rep.series["cat"])[8] == len(cat[0])

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            experiment_mining_curve(ghz(3), static_analysis(ghz(3)), MiningConfig(), [4, 2])


class TestSelection:
    def test_units(self, adder_records):
        units = split_units(adder_records)
        assert len(units) == sum(len(r) for r in adder_records)
        assert all(len(u) == 1 for u in units)

    def test_select_merges_per_record(self, adder_records):
        chosen = select_assertions(adder_records, 5, RngSeed(0))
        assert sum(len(r) for r in chosen) == 5
        assert select_assertions(adder_records, 5, RngSeed(0)) == chosen

    def test_too_few(self, adder_records):
        with pytest.raises(InsufficientAssertions):
            select_assertions(adder_records, 500, RngSeed(0))


class TestCoverage:
    def test_shape_and_monotone(self, adder_records):
        rep = experiment_error_coverage(ADDER.circuit, adder_records, 5, 10, range(0, 33), RngSeed(1),
                                        shots=2048, preps=ADDER_PREPS)
        ys = [y for _, y in rep.series["coverage"]]
        assert rep.series["coverage"][0] == (0, 0.0)
        assert ys == sorted(ys)
        assert all(0.0 <= y <= 1.0 for y in ys)
        assert len(rep.runs) == 10

    def test_phase_only_bug_caps_coverage(self):
        """Nine uniformity-breaking bugs and one output phase: coverage stops at 90%."""
        c = qft(7)
        m = len(c)
        recs = mine(c, [Placeholder("end", m, tuple(range(7)), Hint.RANDOM_CUT)],
                    MiningConfig(iterations=32, shots=2048, seed=0))
        assert [r.kind for r in recs] == [TemplateKind.UNIFORM]
        hs = [i for i, g in enumerate(c.gates) if g.kind is Gate.H]
        bugs = [Mutation(MutationKind.GATE_DELETE, i, None, c.gates[i]) for i in hs[:4]]
        bugs += [Mutation(MutationKind.GATE_INSERT, 0, op("h", q)) for q in range(4)]
        bugs += [Mutation(MutationKind.RANDOM_ROTATION, 0, op("ry", 1, angle=math.pi / 2))]
        bugs += [Mutation(MutationKind.RANDOM_ROTATION, m, op("rz", 2, angle=0.7))]
        rep = experiment_error_coverage(c, recs, 5, len(bugs), range(0, 129), RngSeed(0), 2048, bugs=bugs)
        assert rep.series["coverage"][-1] == (128, 0.9)
        assert rep.runs[-1]["detected_at"] is None


class TestTradeoff:
    def test_full_cover_detects_first_vector(self):
        c = ghz(3)
        recs = mine(c, [Placeholder("e", 3, (0, 1, 2), Hint.ENTANGLING_BLOCK)],
                    MiningConfig(iterations=8, shots=2048, seed=0))
        base = split_units(recs)[0]
        # one single-input unit per basis input, so every vector is a target
        pool = [AssertionRecord(f"u{x}", base.kind, base.placeholder, {x: None}, {x: base.evidence[base.inputs[0]]},
                                base.shots) for x in (format(i, "03b") for i in range(8))]
        for rep in range(20):
            assert iterations_to_detection(pool, 8, 3, RngSeed(rep)) == 1

    def test_medians_fall_with_k(self):
        c = qft(4)
        recs = mine(c, static_analysis(c, 6, 0), MiningConfig(iterations=16, shots=2048, seed=0))
        bug = Mutation(MutationKind.GATE_DELETE, 0, None, c.gates[0])
        rep = experiment_tradeoff(c, recs, bug, (1, 3, 7, 15), RngSeed(0), 10, 2048)
        med = [y for _, y in rep.series["median"]]
        assert med == sorted(med, reverse=True)
        assert all(mn <= md for (_, mn), (_, md) in zip(rep.series["min"], rep.series["median"]))

    def test_undetectable(self):
        c = qft(3)
        recs = mine(c, static_analysis(c), MiningConfig(iterations=8, shots=2048, seed=0))
        bug = Mutation(MutationKind.RANDOM_ROTATION, len(c), op("rz", 0, angle=0.4))
        assert sensitive_units(c, recs, bug, 2048, RngSeed(0)) == []
        with pytest.raises(UndetectableBug):
            experiment_tradeoff(c, recs, bug, (1,), RngSeed(0), 3, 2048)

    def test_cap(self):
        u = split_units(mine(ghz(3), [Placeholder("e", 3, (0, 1, 2), Hint.ENTANGLING_BLOCK)],
                             MiningConfig(iterations=8, shots=2048, seed=0)))[0]
        with pytest.raises(UndetectableBug):
            iterations_to_detection([u], 1, 12, RngSeed(0), cap=3)
