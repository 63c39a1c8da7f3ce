"""
Projective measurement, post-selection, pointer ancillas and dephasing.

Mixtures are never density matrices here: they are ensembles of pure branches,
each carrying the classical record that produced it.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from photon_audit.errors import (
    AncillaNotFreshError,
    ConfigurationMismatchError,
    EmptyPostselectionError,
    UndefinedStateError,
)
from photon_audit.models import Branch, Ensemble, OutcomeRecord
from photon_audit.predicates import Projector
from photon_audit.state import Config, PureState, marginal_probabilities

WEIGHT_THRESHOLD = 1e-14

Outcome = Tuple[OutcomeRecord, float, PureState]


def _require_norm(state: PureState, what: str) -> None:
    if state.norm_sq == 0.0:
        raise UndefinedStateError(f"{what} of the zero state")


def _partition(state: PureState, modes: Sequence[str]) -> Dict[str, Dict[Config, complex]]:
    if not modes:
        raise ConfigurationMismatchError("at least one mode is required")
    positions = [state.index(m) for m in modes]
    groups: Dict[str, Dict[Config, complex]] = {}
    for config, amp in state.items():
        key = "".join(str(config[p]) for p in positions)
        groups.setdefault(key, {})[config] = amp
    return groups


def collapse(state: PureState, projector: Projector) -> Tuple[PureState, float]:
    """Renormalized projection and its Born probability"""
    _require_norm(state, "collapse")
    positions = projector.positions(state)
    kept = {
        c: a for c, a in state.items() if all(c[i] == v for i, v in positions)
    }
    if not kept:
        return state.with_terms({}), 0.0
    part = state.with_terms(kept)
    return part.scaled(1.0 / part.norm), part.norm_sq / state.norm_sq


def measure(
    state: PureState,
    modes: Sequence[str],
    name: str,
    threshold: float = WEIGHT_THRESHOLD,
) -> List[Outcome]:
    """One entry per observed occupation pattern of `modes`, in pattern order"""
    _require_norm(state, "measurement")
    outcomes: List[Outcome] = []
    for pattern, terms in sorted(_partition(state, modes).items()):
        part = state.with_terms(terms)
        probability = part.norm_sq / state.norm_sq
        if probability < threshold:
            continue
        outcomes.append(
            (OutcomeRecord.of({name: pattern}), probability, part.scaled(1.0 / part.norm))
        )
    return outcomes


def controlled_flip(state: PureState, watched: str, pointer: str) -> PureState:
    if watched == pointer:
        raise ConfigurationMismatchError(f"pointer '{pointer}' cannot watch itself")
    iw, ip = state.index(watched), state.index(pointer)
    flipped: Dict[Config, complex] = {}
    for config, amp in state.items():
        if config[iw]:
            bits = list(config)
            bits[ip] = 1 - bits[ip]
            config = tuple(bits)
        flipped[config] = amp
    return state.with_terms(flipped)


def entangle_pointer(state: PureState, watched: str, pointer: str) -> PureState:
    """von Neumann pointer: flip a fresh ancilla wherever `watched` is occupied"""
    ip = state.index(pointer)
    if any(config[ip] for config, _ in state.items()):
        raise AncillaNotFreshError(f"pointer '{pointer}' is already excited in some term")
    return controlled_flip(state, watched, pointer)


def dephase(
    state: PureState, pointer_modes: Sequence[str], name: Optional[str] = None
) -> Ensemble:
    """Split the state into classical branches, one per pointer pattern"""
    _require_norm(state, "dephasing")
    branches = []
    for pattern, terms in sorted(_partition(state, pointer_modes).items()):
        part = state.with_terms(terms)
        record = OutcomeRecord.of({name: pattern}) if name else OutcomeRecord()
        branches.append(
            Branch(
                weight=part.norm_sq / state.norm_sq,
                state=part.scaled(1.0 / part.norm),
                record=record,
            )
        )
    return Ensemble(branches=tuple(branches))


def ensemble_from_measurement(outcomes: Sequence[Outcome]) -> Ensemble:
    return Ensemble(
        branches=tuple(Branch(weight=p, state=s, record=r) for r, p, s in outcomes)
    )


def marginal(
    source: Union[PureState, Ensemble, Sequence[Outcome]], modes: Sequence[str]
) -> Dict[str, float]:
    """Occupation-pattern distribution of `modes` over a state, ensemble or measure output"""
    if isinstance(source, PureState):
        return marginal_probabilities(source, modes)
    if not isinstance(source, Ensemble):
        source = ensemble_from_measurement(source)
    acc: Dict[str, float] = {}
    for branch in source.branches:
        for pattern, p in marginal_probabilities(branch.state, modes).items():
            acc[pattern] = acc.get(pattern, 0.0) + branch.weight * p
    return {k: acc[k] for k in sorted(acc)}


def postselect(ensemble: Ensemble, keep: Callable[[OutcomeRecord], bool]) -> Ensemble:
    """Keep matching branches, renormalize, and account for what was thrown away"""
    total = ensemble.total_weight()
    survivors = [b for b in ensemble.branches if keep(b.record)]
    kept = math.fsum(b.weight for b in survivors)
    if not survivors or kept <= 0.0:
        raise EmptyPostselectionError("post-selection discarded every branch")
    retained = (1.0 - ensemble.discarded_weight) * kept / total
    return Ensemble(
        branches=tuple(
            Branch(weight=b.weight / kept, state=b.state, record=b.record) for b in survivors
        ),
        discarded_weight=1.0 - retained,
    )
