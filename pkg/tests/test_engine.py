"""
Tests for protocol execution by branch enumeration
"""

import math

import pytest

from photon_audit.engine import conditional_probability, run_protocol, validate_protocol
from photon_audit.errors import (
    CausalityViolationError,
    ConditioningOnNullError,
    ConfigurationMismatchError,
    UndefinedStateError,
)
from photon_audit.models import (
    ConditionalStep,
    DephaseStep,
    JointDistribution,
    MeasureStep,
    PointerStep,
    Protocol,
)
from photon_audit.optics import BeamSplitter, Phase, Relabel
from photon_audit.predicates import all_of, record_is
from photon_audit.state import basis_state, superpose, tensor, vacuum
from protocols import (
    PAIR_MODES,
    bs_single,
    epr_bs,
    epr_bs_both,
    eraser,
    pair_source,
    unitary,
)


def p(distribution, **record):
    return distribution.get(record)


class TestRunProtocol:
    def test_single_photon_splits_evenly(self):
        distribution, _ = run_protocol(bs_single())
        assert p(distribution, D="10") == pytest.approx(0.5, abs=1e-12)
        assert p(distribution, D="01") == pytest.approx(0.5, abs=1e-12)

    def test_entangled_beam_splitter_amplitudes(self):
        _, tree = run_protocol(epr_bs(measured=False))
        (leaf,) = tree.leaves()
        expected = {(1, 0, 0, 1): 0.5, (0, 1, 0, 1): 0.5j, (1, 0, 1, 0): 0.5j, (0, 1, 1, 0): 0.5}
        # modes sort as G0, G1, gr, gt
        assert leaf.state.modes == ("G0", "G1", "gr", "gt")
        for config, amp in expected.items():
            assert abs(leaf.state.terms()[config] - amp) <= 1e-14

    def test_entangled_beam_splitter_outcomes_are_uniform(self):
        distribution, _ = run_protocol(epr_bs())
        assert len(distribution) == 4
        for _, prob in distribution.entries:
            assert prob == pytest.approx(0.25, abs=1e-12)

    def test_distribution_is_normalized_and_sorted(self):
        distribution, _ = run_protocol(eraser())
        assert distribution.total() == pytest.approx(1.0, abs=1e-12)
        assert all(prob >= 0 for _, prob in distribution.entries)
        keys = [r.entries for r, _ in distribution.entries]
        assert keys == sorted(keys)

    def test_tree_leaves_match_distribution(self):
        distribution, tree = run_protocol(eraser())
        assert tree.to_ensemble().distribution().max_deviation(distribution) <= 1e-15
        assert all(leaf.state.norm_sq == pytest.approx(1.0) for leaf in tree.leaves())

    def test_sibling_order_does_not_matter(self):
        distribution, _ = run_protocol(eraser())
        shuffled = JointDistribution.from_weights(dict(reversed(distribution.entries)))
        assert shuffled == distribution

    def test_negligible_branches_are_pruned(self):
        initial = superpose([({"a": 1, "b": 0}, math.sqrt(1 - 1e-20)), ({"a": 0, "b": 1}, 1e-10)])
        protocol = Protocol(modes=("a", "b"), initial=initial, steps=(MeasureStep(modes=("a", "b"), name="M"),))
        distribution, _ = run_protocol(protocol, threshold=1e-14)
        assert [str(r) for r, _ in distribution.entries] == ["M=10"]


class TestPairs:
    def test_both_beam_splitters_anticorrelate(self):
        distribution, _ = run_protocol(epr_bs_both())
        assert p(distribution, S="10", I="10") <= 1e-12
        assert p(distribution, S="01", I="01") <= 1e-12
        assert distribution.marginal(["S"]).get({"S": "10"}) == pytest.approx(0.5, abs=1e-12)
        assert distribution.marginal(["I"]).get({"I": "01"}) == pytest.approx(0.5, abs=1e-12)

    def test_contingent_eraser_forbids_d1_with_u3(self):
        distribution, _ = run_protocol(eraser())
        assert p(distribution, D="10", U="10") <= 1e-12
        assert p(distribution, D="10", U="01") == pytest.approx(0.5, abs=1e-12)

    def test_which_path_restores_the_coincidence(self):
        distribution, _ = run_protocol(eraser(erase=False))
        assert p(distribution, D="10", U="10") == pytest.approx(0.25, abs=1e-12)

    def test_conditional_probability(self):
        distribution, _ = run_protocol(eraser())
        given_u4 = record_is("U", "01")
        assert conditional_probability(distribution, record_is("D", "10"), given_u4) == pytest.approx(1.0)

    def test_conditioning_on_null_event(self):
        distribution, _ = run_protocol(eraser())
        with pytest.raises(ConditioningOnNullError):
            conditional_probability(distribution, record_is("D", "10"), record_is("U", "11"))


class TestFeedForward:
    def test_dead_conditional_is_a_no_op(self):
        live = eraser()
        dead_step = ConditionalStep(condition=record_is("U", "11"), then=Phase(m="s1", theta=1.3))
        dead = live.model_copy(update={"steps": live.steps[:3] + (dead_step,) + live.steps[3:]})
        (d_live, t_live), (d_dead, t_dead) = run_protocol(live), run_protocol(dead)
        assert d_live == d_dead
        assert [b.state for b in t_live.leaves()] == [b.state for b in t_dead.leaves()]

    def test_else_branch_applies_when_condition_fails(self):
        protocol = Protocol(
            modes=("a", "b", "x"),
            initial=basis_state(["a", "b", "x"], {"a": 1, "b": 0, "x": 0}),
            steps=(
                MeasureStep(modes=("x",), name="X"),
                ConditionalStep(
                    condition=record_is("X", "1"),
                    then=Phase(m="a", theta=1.0),
                    otherwise=Relabel(pairs=(("a", "b"), ("b", "a"))),
                ),
                MeasureStep(modes=("a", "b"), name="M"),
            ),
        )
        distribution, _ = run_protocol(protocol)
        assert p(distribution, X="0", M="01") == pytest.approx(1.0)

    def test_compound_condition(self):
        protocol = epr_bs_both()
        gate = all_of(record_is("S", "10"), record_is("I", "01"))
        steps = protocol.steps + (ConditionalStep(condition=gate, then=Phase(m="s0", theta=0.5)),)
        distribution, _ = run_protocol(protocol.model_copy(update={"steps": steps}))
        assert distribution.total() == pytest.approx(1.0)


class TestPointers:
    def test_pointer_readout_matches_direct_measurement(self):
        direct, _ = run_protocol(bs_single())
        base = bs_single()
        protocol = Protocol(
            modes=("g0", "g1", "p0", "p1"),
            initial=tensor(base.initial, vacuum(["p0", "p1"])),
            steps=(
                base.steps[0],
                PointerStep(watched="g0", pointer="p0"),
                PointerStep(watched="g1", pointer="p1"),
                DephaseStep(pointers=("p0", "p1")),
                MeasureStep(modes=("p0", "p1"), name="D"),
            ),
        )
        deferred, _ = run_protocol(protocol)
        assert deferred.max_deviation(direct) <= 1e-12


class TestValidation:
    def test_conditional_on_future_record(self):
        steps = (
            ConditionalStep(condition=record_is("U", "01"), then=Phase(m="s0", theta=1.0)),
            MeasureStep(modes=("i0", "i1"), name="U"),
        )
        protocol = Protocol(modes=PAIR_MODES, initial=pair_source(), steps=steps)
        with pytest.raises(CausalityViolationError):
            run_protocol(protocol)

    def test_non_unit_initial_state(self):
        protocol = Protocol(modes=("a",), initial=basis_state(["a"], {"a": 1}).scaled(2.0))
        with pytest.raises(UndefinedStateError):
            validate_protocol(protocol)

    def test_initial_modes_must_match(self):
        protocol = Protocol(modes=("a", "b"), initial=vacuum(["a"]))
        with pytest.raises(ConfigurationMismatchError):
            validate_protocol(protocol)

    def test_record_produced_twice(self):
        steps = (MeasureStep(modes=("a",), name="A"), MeasureStep(modes=("a",), name="A"))
        with pytest.raises(ConfigurationMismatchError):
            validate_protocol(Protocol(modes=("a",), initial=vacuum(["a"]), steps=steps))

    def test_measure_after_relabel_uses_new_names(self):
        steps = (unitary(Relabel(pairs=(("a", "b"),))), MeasureStep(modes=("a",), name="A"))
        with pytest.raises(ConfigurationMismatchError):
            validate_protocol(Protocol(modes=("a",), initial=vacuum(["a"]), steps=steps))

    def test_conditional_relabel_must_permute(self):
        steps = (
            MeasureStep(modes=("a",), name="A"),
            ConditionalStep(condition=record_is("A", "1"), then=Relabel(pairs=(("a", "c"),))),
        )
        with pytest.raises(ConfigurationMismatchError):
            validate_protocol(Protocol(modes=("a", "b"), initial=vacuum(["a", "b"]), steps=steps))

    def test_overlapping_wings(self):
        protocol = Protocol(
            modes=("a", "b"), initial=vacuum(["a", "b"]), wings={"left": ("a",), "right": ("a", "b")}
        )
        with pytest.raises(ConfigurationMismatchError):
            validate_protocol(protocol)

    def test_final_modes_follow_relabels(self):
        assert validate_protocol(epr_bs()) == ("G0", "G1", "gr", "gt")

    def test_beam_splitter_on_unknown_mode(self):
        steps = (unitary(BeamSplitter(a="a", b="zz")),)
        with pytest.raises(ConfigurationMismatchError):
            validate_protocol(Protocol(modes=("a",), initial=vacuum(["a"]), steps=steps))
