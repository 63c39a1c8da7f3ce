"""
Tests for backward application of the collapse rule
"""

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photon_audit.errors import ConfigurationMismatchError, EmptyPostselectionError
from photon_audit.optics import BeamSplitter, Circuit, Relabel
from photon_audit.predicates import Projector
from photon_audit.retro import (
    SourceSupport,
    analyze_reversal,
    forbidden_probability,
    reverse_collapse_analysis,
)
from photon_audit.state import basis_state
from strategies import circuits, supports

H = math.sqrt(0.5)

EPR_SUPPORT = SourceSupport.of([
    {"g0": 1, "g1": 0, "G0": 1, "G1": 0},
    {"g0": 0, "g1": 1, "G0": 0, "G1": 1},
])
EPR_CIRCUIT = Circuit(steps=(BeamSplitter(a="g0", b="g1"), Relabel(pairs=(("g0", "gt"), ("g1", "gr")))))


class TestSourceSupport:
    def test_uniform_state(self):
        state = EPR_SUPPORT.uniform_state()
        assert state.amplitude({"g0": 1, "g1": 0, "G0": 1, "G1": 0}) == pytest.approx(H)
        assert state.norm_sq == pytest.approx(1.0)

    def test_empty_support(self):
        with pytest.raises(ConfigurationMismatchError):
            SourceSupport.of([])

    def test_configs_must_share_modes(self):
        with pytest.raises(ConfigurationMismatchError):
            SourceSupport.of([{"a": 1}, {"b": 1}])


class TestReverseCollapse:
    def test_collapsed_entangled_output_reverses_into_forbidden_half(self):
        report = reverse_collapse_analysis(EPR_SUPPORT, EPR_CIRCUIT, Projector.of(gr=1, G0=1))
        reversed_state = report.reversed_state
        assert abs(reversed_state.amplitude({"g0": 0, "g1": 1, "G0": 1, "G1": 0}) - H) <= 1e-14
        assert abs(reversed_state.amplitude({"g0": 1, "g1": 0, "G0": 1, "G1": 0}) + 1j * H) <= 1e-14
        assert forbidden_probability(report) == pytest.approx(0.5, abs=1e-12)
        assert [c for c, _ in report.forbidden_component] == [{"G0": 1, "G1": 0, "g0": 0, "g1": 1}]

    def test_fully_pinned_projector_feeds_back_bare_configuration(self):
        report = reverse_collapse_analysis(EPR_SUPPORT, EPR_CIRCUIT, Projector.of(gt=0, gr=1, G0=1, G1=0))
        assert report.collapsed_state.terms() == pytest.approx({(1, 0, 1, 0): 1}, abs=1e-15)

    def test_no_collapse_baseline(self):
        report = reverse_collapse_analysis(EPR_SUPPORT, EPR_CIRCUIT, Projector())
        assert report.forbidden_probability <= 1e-12
        assert report.reversed_state.allclose(EPR_SUPPORT.uniform_state(), 1e-12)

    def test_wider_projection_keeps_its_phase(self):
        report = reverse_collapse_analysis(EPR_SUPPORT, EPR_CIRCUIT, Projector.of(G0=1))
        collapsed = report.collapsed_state
        assert abs(collapsed.amplitude({"gt": 1, "gr": 0, "G0": 1, "G1": 0}) - H) <= 1e-14
        assert abs(collapsed.amplitude({"gt": 0, "gr": 1, "G0": 1, "G1": 0}) - 1j * H) <= 1e-14
        reversed_state = report.reversed_state
        assert abs(reversed_state.amplitude({"g0": 1, "g1": 0, "G0": 1, "G1": 0}) - 1) <= 1e-14
        assert report.forbidden_probability <= 1e-12

    @given(st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False))
    def test_global_phase_leaves_forbidden_weight_alone(self, angle):
        pinned = reverse_collapse_analysis(EPR_SUPPORT, EPR_CIRCUIT, Projector.of(gr=1, G0=1))
        rotated = pinned.collapsed_state.scaled(cmath.exp(1j * angle))
        report = analyze_reversal(rotated, EPR_CIRCUIT, EPR_SUPPORT)
        assert report.forbidden_probability == pytest.approx(0.5, abs=1e-12)

    def test_projector_selecting_nothing(self):
        with pytest.raises(EmptyPostselectionError):
            reverse_collapse_analysis(EPR_SUPPORT, EPR_CIRCUIT, Projector.of(gt=1, gr=1))

    def test_support_modes_must_match_circuit_input(self):
        collapsed = basis_state(["gt", "gr"], {"gt": 1, "gr": 0})
        support = SourceSupport.of([{"a": 1, "b": 0}])
        with pytest.raises(ConfigurationMismatchError):
            analyze_reversal(collapsed, EPR_CIRCUIT, support)

    @settings(max_examples=100, deadline=None)
    @given(supports(), circuits())
    def test_uncollapsed_image_stays_inside_support(self, configs, circuit):
        report = reverse_collapse_analysis(SourceSupport.of(configs), circuit, Projector())
        assert report.forbidden_probability <= 1e-12
