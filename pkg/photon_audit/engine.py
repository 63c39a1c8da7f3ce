"""
Protocol execution: unitary steps, measurements, classical feed-forward,
pointer ancillas and dephasing, evaluated exactly by branch enumeration.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, FrozenSet, List, Set, Tuple

from photon_audit.errors import (
    CausalityViolationError,
    ConditioningOnNullError,
    ConfigurationMismatchError,
    UndefinedStateError,
)
from photon_audit.measurement import WEIGHT_THRESHOLD, dephase, entangle_pointer, measure
from photon_audit.models import (
    BranchNode,
    BranchTree,
    ConditionalStep,
    DephaseStep,
    JointDistribution,
    MeasureStep,
    OutcomeRecord,
    PointerStep,
    Protocol,
    Step,
    UnitaryStep,
)
from photon_audit.optics import Relabel, apply_element, element_modes, trace_modes
from photon_audit.state import PureState

UNIT_NORM_TOLERANCE = 1e-9


def step_modes(step: Step) -> FrozenSet[str]:
    """Every mode label a step reads or writes"""
    if isinstance(step, UnitaryStep):
        return frozenset(element_modes(step.element))
    if isinstance(step, MeasureStep):
        return frozenset(step.modes)
    if isinstance(step, ConditionalStep):
        touched = set(element_modes(step.then))
        if step.otherwise is not None:
            touched.update(element_modes(step.otherwise))
        return frozenset(touched)
    if isinstance(step, PointerStep):
        return frozenset({step.watched, step.pointer})
    return frozenset(step.pointers)


def _require_modes(current: Tuple[str, ...], modes, where: str) -> None:
    missing = [m for m in modes if m not in current]
    if missing:
        raise ConfigurationMismatchError(f"{where}: unknown modes {missing}")


def validate_protocol(protocol: Protocol) -> Tuple[str, ...]:
    """Check mode usage, record causality and wing layout; returns the final mode set"""
    current = tuple(sorted(protocol.modes))
    if protocol.initial.modes != current:
        raise ConfigurationMismatchError(
            f"initial state modes {list(protocol.initial.modes)} differ from protocol modes {list(current)}"
        )
    if abs(protocol.initial.norm_sq - 1.0) > UNIT_NORM_TOLERANCE:
        raise UndefinedStateError(
            f"initial state must be unit-norm (norm^2 = {protocol.initial.norm_sq:.15g})"
        )
    produced: List[str] = []
    seen_modes: Set[str] = set(current)
    for index, step in enumerate(protocol.steps):
        where = f"step {index} ({step.kind})"
        if isinstance(step, UnitaryStep):
            current = trace_modes(current, [step.element])
        elif isinstance(step, MeasureStep):
            _require_modes(current, step.modes, where)
            if not step.modes:
                raise ConfigurationMismatchError(f"{where}: nothing to measure")
            if step.name in produced:
                raise ConfigurationMismatchError(f"{where}: record '{step.name}' is produced twice")
            produced.append(step.name)
        elif isinstance(step, ConditionalStep):
            future = sorted(step.condition.names() - set(produced))
            if future:
                raise CausalityViolationError(
                    f"{where}: condition reads record(s) {future} before they are measured"
                )
            for element in filter(None, (step.then, step.otherwise)):
                if isinstance(element, Relabel) and not element.is_permutation():
                    raise ConfigurationMismatchError(
                        f"{where}: a conditional relabel must permute existing modes"
                    )
                trace_modes(current, [element])
        elif isinstance(step, PointerStep):
            _require_modes(current, (step.watched, step.pointer), where)
        elif isinstance(step, DephaseStep):
            _require_modes(current, step.pointers, where)
        seen_modes.update(current)
    claimed: Dict[str, str] = {}
    for wing, members in protocol.wings.items():
        for mode in members:
            if mode not in seen_modes:
                raise ConfigurationMismatchError(f"wing '{wing}' lists unknown mode '{mode}'")
            if mode in claimed:
                raise ConfigurationMismatchError(
                    f"mode '{mode}' belongs to wings '{claimed[mode]}' and '{wing}'"
                )
            claimed[mode] = wing
    return current


def _apply_step(state: PureState, step: Step, record: OutcomeRecord) -> PureState:
    if isinstance(step, UnitaryStep):
        return apply_element(state, step.element)
    if isinstance(step, ConditionalStep):
        element = step.then if step.condition(record) else step.otherwise
        return state if element is None else apply_element(state, element)
    if isinstance(step, PointerStep):
        return entangle_pointer(state, step.watched, step.pointer)
    raise ConfigurationMismatchError(f"step {step.kind} forks branches")


def _descend(
    protocol: Protocol,
    index: int,
    state: PureState,
    weight: float,
    record: OutcomeRecord,
    label: str,
    created_by: int,
    threshold: float,
) -> BranchNode:
    steps = protocol.steps
    while index < len(steps):
        step = steps[index]
        if isinstance(step, MeasureStep):
            children = tuple(
                _descend(
                    protocol, index + 1, collapsed, weight * p,
                    record.with_entry(step.name, outcome.get(step.name)),
                    f"{step.name}={outcome.get(step.name)}", index, threshold,
                )
                for outcome, p, collapsed in measure(state, step.modes, step.name, threshold)
                if weight * p >= threshold
            )
            return BranchNode(label=label, step=created_by, weight=weight, record=record,
                              state=state, children=children)
        if isinstance(step, DephaseStep):
            ensemble = dephase(state, step.pointers)
            children = tuple(
                _descend(
                    protocol, index + 1, branch.state, weight * branch.weight, record,
                    "dephase:" + branch.state.pattern(next(branch.state.items())[0], step.pointers),
                    index, threshold,
                )
                for branch in ensemble.branches
                if weight * branch.weight >= threshold
            )
            return BranchNode(label=label, step=created_by, weight=weight, record=record,
                              state=state, children=children)
        state = _apply_step(state, step, record)
        index += 1
    return BranchNode(label=label, step=created_by, weight=weight, record=record, state=state)


def run_protocol(
    protocol: Protocol, threshold: float = WEIGHT_THRESHOLD
) -> Tuple[JointDistribution, BranchTree]:
    """Evaluate every measurement branch depth-first; leaf weights form the distribution"""
    validate_protocol(protocol)
    root = _descend(protocol, 0, protocol.initial, 1.0, OutcomeRecord(), "root", -1, threshold)
    tree = BranchTree(root=root)
    acc: Dict[OutcomeRecord, List[float]] = {}
    for leaf in root.leaves():
        acc.setdefault(leaf.record, []).append(leaf.weight)
    distribution = JointDistribution.from_weights({r: math.fsum(ws) for r, ws in acc.items()})
    return distribution, tree


def conditional_probability(
    distribution: JointDistribution,
    event: Callable[[OutcomeRecord], bool],
    given: Callable[[OutcomeRecord], bool],
) -> float:
    norm = distribution.probability(given)
    if norm <= 0.0:
        raise ConditioningOnNullError("P(given) = 0")
    joint = distribution.probability(lambda r: event(r) and given(r))
    return joint / norm
