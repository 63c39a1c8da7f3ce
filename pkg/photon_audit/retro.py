"""
Backward application of the collapse rule.

A collapsed output state is evolved back through the circuit and compared with
what the source can actually emit. Amplitude on configurations outside the
source support is the signature of the backward-collapse inconsistency.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, Mapping, Tuple

from pydantic import BaseModel, ConfigDict

from photon_audit.errors import ConfigurationMismatchError, EmptyPostselectionError
from photon_audit.measurement import collapse
from photon_audit.models import ReversalReport
from photon_audit.optics import Circuit, Direction, apply_circuit
from photon_audit.predicates import Projector
from photon_audit.state import PRUNE_TOLERANCE, PureState, global_phase_fixed, superpose


class SourceSupport(BaseModel):
    """Configurations the source can physically prepare"""
    model_config = ConfigDict(frozen=True)

    allowed: Tuple[Dict[str, int], ...]

    def __init__(self, **data):
        super().__init__(**data)
        if not self.allowed:
            raise ConfigurationMismatchError("source support cannot be empty")
        modes = set(self.allowed[0])
        for config in self.allowed:
            if set(config) != modes:
                raise ConfigurationMismatchError(
                    f"support configurations disagree on modes: {sorted(modes)} vs {sorted(config)}"
                )

    @classmethod
    def of(cls, configs: Iterable[Mapping[str, int]]) -> "SourceSupport":
        return cls(allowed=tuple(dict(c) for c in configs))

    @property
    def modes(self) -> Tuple[str, ...]:
        return tuple(sorted(self.allowed[0]))

    def uniform_state(self, prune: float = PRUNE_TOLERANCE) -> PureState:
        amp = 1.0 / math.sqrt(len(self.allowed))
        return superpose([(config, amp) for config in self.allowed], prune=prune)


def analyze_reversal(
    collapsed: PureState, circuit: Circuit, support: SourceSupport
) -> ReversalReport:
    reversed_state = apply_circuit(collapsed, circuit, Direction.REVERSE)
    if tuple(sorted(support.modes)) != reversed_state.modes:
        raise ConfigurationMismatchError(
            f"support modes {list(support.modes)} do not match the circuit input modes {list(reversed_state.modes)}"
        )
    allowed_configs = {reversed_state.config_of(c) for c in support.allowed}
    allowed, forbidden = [], []
    for config, amp in reversed_state.items():
        entry = (reversed_state.as_mapping(config), amp)
        (allowed if config in allowed_configs else forbidden).append(entry)
    weight = math.fsum(abs(a) ** 2 for _, a in forbidden)
    return ReversalReport(
        collapsed_state=collapsed,
        reversed_state=reversed_state,
        allowed_component=tuple(allowed),
        forbidden_component=tuple(forbidden),
        forbidden_probability=weight / reversed_state.norm_sq if reversed_state.norm_sq else 0.0,
    )


def reverse_collapse_analysis(
    support: SourceSupport, circuit: Circuit, projector: Projector
) -> ReversalReport:
    """
    Collapse the forward image of the source onto `projector`, then run it backward.

    The forward image is taken from the uniform superposition of the support
    and the projection is renormalized. When a single configuration survives
    its phase is dropped, so a projector that pins every mode feeds back the
    bare configuration with amplitude 1. Anything wider is fed back as is.
    """
    forward = apply_circuit(support.uniform_state(), circuit, Direction.FORWARD)
    projected, probability = collapse(forward, projector)
    if probability == 0.0:
        raise EmptyPostselectionError(
            f"projector ({projector.to_text() or 'identity'}) selects the zero vector"
        )
    if len(projected) == 1:
        projected = global_phase_fixed(projected)
    return analyze_reversal(projected, circuit, support)


def forbidden_probability(report: ReversalReport) -> float:
    return report.forbidden_probability
