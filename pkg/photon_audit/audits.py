"""
Audits over protocols: no-signaling, cut invariance, causal consistency,
filtering-vs-switching equivalence, and the backward-collapse check of a
protocol's leading circuit.
"""

from __future__ import annotations

import difflib
from typing import Callable, Dict, List, Set, Tuple, Union

from pydantic import BaseModel

from photon_audit.engine import run_protocol, step_modes, validate_protocol
from photon_audit.errors import (
    AuditPreconditionError,
    CausalityViolationError,
    ConditioningOnNullError,
    EmptyPostselectionError,
)
from photon_audit.measurement import WEIGHT_THRESHOLD, postselect
from photon_audit.models import (
    ConditionalStep,
    DephaseStep,
    MeasureStep,
    OutcomeRecord,
    PointerStep,
    Protocol,
    ReversalReport,
    UnitaryStep,
)
from photon_audit.optics import Circuit, Relabel
from photon_audit.predicates import Projector, RecordPredicate
from photon_audit.retro import SourceSupport, reverse_collapse_analysis
from photon_audit.state import marginal_probabilities, tensor, vacuum

Event = Callable[[OutcomeRecord], bool]


# ============================================================================
# WINGS AND NO-SIGNALING
# ============================================================================

def wing_closure(protocol: Protocol, wing: str) -> Set[str]:
    """Modes of `wing`, following every relabel that renames one of them"""
    if wing not in protocol.wings:
        raise AuditPreconditionError(
            f"protocol '{protocol.name}' has no wing '{wing}' (wings: {', '.join(protocol.wings) or 'none'})"
        )
    members = set(protocol.wings[wing])
    for step in protocol.steps:
        elements = []
        if isinstance(step, UnitaryStep):
            elements = [step.element]
        elif isinstance(step, ConditionalStep):
            elements = [e for e in (step.then, step.otherwise) if e is not None]
        for element in elements:
            if isinstance(element, Relabel):
                members.update(new for old, new in element.pairs if old in members)
    return members


def _wing_marginal(protocol: Protocol, wing_modes: Set[str], threshold: float) -> Dict[Tuple, float]:
    names = {
        s.name for s in protocol.steps
        if isinstance(s, MeasureStep) and set(s.modes) <= wing_modes
    }
    _, tree = run_protocol(protocol, threshold)
    acc: Dict[Tuple, float] = {}
    for leaf in tree.leaves():
        local = tuple(m for m in leaf.state.modes if m in wing_modes)
        record = leaf.record.restricted(names).entries
        for pattern, p in marginal_probabilities(leaf.state, local).items():
            key = (record, local, pattern)
            acc[key] = acc.get(key, 0.0) + leaf.weight * p
    return acc


def no_signaling_audit(
    p_a: Protocol, p_b: Protocol, wing: str, threshold: float = WEIGHT_THRESHOLD
) -> float:
    """Largest change of the wing's marginal statistics between two protocols"""
    if p_a.wings != p_b.wings:
        raise AuditPreconditionError("protocols declare different wing partitions")
    if not p_a.initial.allclose(p_b.initial):
        raise AuditPreconditionError("protocols start from different initial states")
    validate_protocol(p_a)
    validate_protocol(p_b)
    wing_modes = wing_closure(p_a, wing) | wing_closure(p_b, wing)
    matcher = difflib.SequenceMatcher(a=p_a.steps, b=p_b.steps, autojunk=False)
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        for step in p_a.steps[i1:i2] + p_b.steps[j1:j2]:
            inside = sorted(step_modes(step) & wing_modes)
            if inside:
                raise AuditPreconditionError(
                    f"protocols differ in a {step.kind} step touching wing '{wing}' modes {inside}"
                )
    left = _wing_marginal(p_a, wing_modes, threshold)
    right = _wing_marginal(p_b, wing_modes, threshold)
    keys = set(left) | set(right)
    return max((abs(left.get(k, 0.0) - right.get(k, 0.0)) for k in keys), default=0.0)


# ============================================================================
# CUT INVARIANCE
# ============================================================================

def resolve_measure_step(protocol: Protocol, ref: Union[int, str]) -> int:
    """Accepts a step index or the record name of a measure step"""
    if isinstance(ref, str) and ref.lstrip("-").isdigit():
        ref = int(ref)
    if isinstance(ref, int):
        if not 0 <= ref < len(protocol.steps):
            raise AuditPreconditionError(f"step index {ref} is out of range")
        if not isinstance(protocol.steps[ref], MeasureStep):
            raise AuditPreconditionError(f"step {ref} is a {protocol.steps[ref].kind} step, not a measure")
        return ref
    for index, step in enumerate(protocol.steps):
        if isinstance(step, MeasureStep) and step.name == ref:
            return index
    raise AuditPreconditionError(f"no measure step records '{ref}'")


def _fresh_label(base: str, taken: Set[str]) -> str:
    label, n = base, 1
    while label in taken:
        n += 1
        label = f"{base}_{n}"
    taken.add(label)
    return label


def defer_measurement(protocol: Protocol, index: int) -> Protocol:
    """
    Replace the measure at `index` by pointer couplings, dephase the pointers
    at the end of the timeline, and read them out under the same record name.
    """
    index = resolve_measure_step(protocol, index)
    step = protocol.steps[index]
    for later in protocol.steps[index + 1:]:
        if isinstance(later, ConditionalStep) and step.name in later.condition.names():
            raise CausalityViolationError(
                f"record '{step.name}' is consumed by a later conditional and cannot be deferred"
            )
    taken = set(protocol.modes)
    for s in protocol.steps:
        taken |= step_modes(s)
    pointers = tuple(_fresh_label(f"ptr_{step.name}_{m}", taken) for m in step.modes)
    couplings = tuple(PointerStep(watched=m, pointer=p) for m, p in zip(step.modes, pointers))
    wings = {name: tuple(members) for name, members in protocol.wings.items()}
    for name in wings:
        closure = wing_closure(protocol, name)
        extra = tuple(p for m, p in zip(step.modes, pointers) if m in closure)
        wings[name] = wings[name] + extra
    return protocol.model_copy(
        update={
            "name": f"{protocol.name}+deferred:{step.name}",
            "modes": tuple(protocol.modes) + pointers,
            "initial": tensor(protocol.initial, vacuum(pointers, prune=protocol.initial.prune)),
            "steps": protocol.steps[:index] + couplings + protocol.steps[index + 1:] + (
                DephaseStep(pointers=pointers),
                MeasureStep(modes=pointers, name=step.name),
            ),
            "wings": wings,
        }
    )


def cut_invariance_audit(
    protocol: Protocol, index: Union[int, str], threshold: float = WEIGHT_THRESHOLD
) -> float:
    """Distribution change when one collapse is moved to a pointer readout at the end"""
    deferred = defer_measurement(protocol, index)
    now, _ = run_protocol(protocol, threshold)
    later, _ = run_protocol(deferred, threshold)
    return now.max_deviation(later)


def deferable_steps(protocol: Protocol) -> List[int]:
    consumed: Set[str] = set()
    for step in protocol.steps:
        if isinstance(step, ConditionalStep):
            consumed |= step.condition.names()
    return [
        i for i, s in enumerate(protocol.steps)
        if isinstance(s, MeasureStep) and s.name not in consumed
    ]


# ============================================================================
# CAUSAL CONSISTENCY
# ============================================================================

def causal_consistency_audit(
    protocol: Protocol, forbidden: Event, threshold: float = WEIGHT_THRESHOLD
) -> float:
    """Probability the unitary prediction assigns to a forbidden coincidence"""
    distribution, _ = run_protocol(protocol, threshold)
    return distribution.probability(forbidden)


# ============================================================================
# FILTERING VS SWITCHING
# ============================================================================

class FilterComparison(BaseModel):
    deviation: float
    discarded_weight: float
    gate_probability: float


def derive_filtered(p_switch: Protocol, gate: RecordPredicate) -> Protocol:
    """Apply every `gate`-conditioned element unconditionally; post-selection happens later"""
    steps = tuple(
        UnitaryStep(element=s.then)
        if isinstance(s, ConditionalStep) and s.condition == gate else s
        for s in p_switch.steps
    )
    return p_switch.model_copy(update={"name": f"{p_switch.name}+filtered", "steps": steps})


def compare_filtering(
    p_switch: Protocol, p_filter: Protocol, gate: RecordPredicate, threshold: float = WEIGHT_THRESHOLD
) -> FilterComparison:
    if not any(isinstance(s, ConditionalStep) and s.condition == gate for s in p_switch.steps):
        raise AuditPreconditionError(
            f"switching protocol '{p_switch.name}' has no conditional gated on '{gate.to_text()}'"
        )
    if derive_filtered(p_switch, gate).steps != p_filter.steps:
        raise AuditPreconditionError(
            f"'{p_filter.name}' is not the filtered form of '{p_switch.name}' for gate '{gate.to_text()}'"
        )
    switched, _ = run_protocol(p_switch, threshold)
    conditioned = switched.conditioned(gate)
    filtered, tree = run_protocol(p_filter, threshold)
    try:
        kept = postselect(tree.to_ensemble(), gate)
    except EmptyPostselectionError as exc:
        raise ConditioningOnNullError(str(exc)) from exc
    return FilterComparison(
        deviation=conditioned.max_deviation(kept.distribution()),
        discarded_weight=kept.discarded_weight,
        gate_probability=filtered.probability(gate),
    )


def filtering_vs_switching_equivalence(
    p_switch: Protocol, p_filter: Protocol, gate: RecordPredicate
) -> float:
    return compare_filtering(p_switch, p_filter, gate).deviation


# ============================================================================
# BACKWARD COLLAPSE ON A PROTOCOL
# ============================================================================

def leading_circuit(protocol: Protocol) -> Circuit:
    """Unitary steps up to the first measurement, conditional or pointer"""
    elements = []
    for step in protocol.steps:
        if not isinstance(step, UnitaryStep):
            break
        elements.append(step.element)
    return Circuit(steps=tuple(elements))


def retro_audit(protocol: Protocol, support: SourceSupport, projector: Projector) -> ReversalReport:
    return reverse_collapse_analysis(support, leading_circuit(protocol), projector)
