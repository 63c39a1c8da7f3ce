"""
Unitary optical elements and their forward / reverse application.

Beam splitter convention: a photon in either port is transmitted with 1/sqrt(2)
and reflected with i/sqrt(2). Reverse applies the conjugate transpose.
"""

from __future__ import annotations

import cmath
import math
from enum import Enum
from typing import Annotated, Dict, Iterable, Literal, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from photon_audit.errors import (
    ConfigurationMismatchError,
    LabelCollisionError,
    MultiPhotonUnsupportedError,
)
from photon_audit.state import Config, PureState, check_label

SQRT1_2 = math.sqrt(0.5)


class Direction(str, Enum):
    FORWARD = "forward"
    REVERSE = "reverse"


# ============================================================================
# ELEMENTS
# ============================================================================

class BeamSplitter(BaseModel):
    """Symmetric 50:50 beam splitter acting in place on modes a, b"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["bs"] = "bs"
    a: str
    b: str

    def __init__(self, **data):
        super().__init__(**data)
        check_label(self.a)
        check_label(self.b)
        if self.a == self.b:
            raise ConfigurationMismatchError(f"beam splitter needs two distinct modes, got '{self.a}' twice")


class Phase(BaseModel):
    """Multiplies terms with mode m occupied by exp(i theta)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["phase"] = "phase"
    m: str
    theta: float

    def __init__(self, **data):
        super().__init__(**data)
        check_label(self.m)
        if not math.isfinite(self.theta):
            raise ConfigurationMismatchError(f"phase angle must be finite, got {self.theta}")


class Relabel(BaseModel):
    """Renames modes; mirrors and port naming (gamma_0 -> gamma_t) are relabels"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["relabel"] = "relabel"
    pairs: Tuple[Tuple[str, str], ...]

    def __init__(self, **data):
        pairs = data.get("pairs")
        if isinstance(pairs, dict):
            data["pairs"] = tuple(pairs.items())
        super().__init__(**data)
        olds = [old for old, _ in self.pairs]
        news = [new for _, new in self.pairs]
        for name in olds + news:
            check_label(name)
        if not self.pairs:
            raise ConfigurationMismatchError("relabel needs at least one pair")
        if len(set(olds)) != len(olds):
            raise ConfigurationMismatchError(f"relabel maps a mode twice: {olds}")
        if len(set(news)) != len(news):
            raise LabelCollisionError(f"relabel is not injective: {news}")

    @property
    def mapping(self) -> Dict[str, str]:
        return dict(self.pairs)

    def inverted(self) -> "Relabel":
        return Relabel(pairs=tuple((new, old) for old, new in self.pairs))

    def is_permutation(self) -> bool:
        return {old for old, _ in self.pairs} == {new for _, new in self.pairs}


Element = Annotated[Union[BeamSplitter, Phase, Relabel], Field(discriminator="kind")]


class Circuit(BaseModel):
    model_config = ConfigDict(frozen=True)

    steps: Tuple[Element, ...] = ()


def element_modes(element: Element) -> Tuple[str, ...]:
    if isinstance(element, BeamSplitter):
        return (element.a, element.b)
    if isinstance(element, Phase):
        return (element.m,)
    return tuple(dict.fromkeys(name for pair in element.pairs for name in pair))


def relabeled_modes(modes: Iterable[str], relabel: Relabel) -> Tuple[str, ...]:
    """Mode set after `relabel`, checking its preconditions against `modes`"""
    modes = list(modes)
    mapping = relabel.mapping
    unknown = [old for old in mapping if old not in modes]
    if unknown:
        raise ConfigurationMismatchError(f"relabel of unknown modes: {unknown}")
    untouched = set(modes) - set(mapping)
    clash = sorted(set(mapping.values()) & untouched)
    if clash:
        raise LabelCollisionError(f"relabel targets collide with existing modes: {clash}")
    return tuple(sorted(mapping.get(m, m) for m in modes))


def trace_modes(modes: Iterable[str], elements: Sequence[Element]) -> Tuple[str, ...]:
    """Walk a sequence of elements over a mode set, returning the final mode set"""
    current = tuple(sorted(modes))
    for element in elements:
        if isinstance(element, Relabel):
            current = relabeled_modes(current, element)
            continue
        missing = [m for m in element_modes(element) if m not in current]
        if missing:
            raise ConfigurationMismatchError(f"element {element.kind} uses unknown modes {missing}")
    return current


# ============================================================================
# APPLICATION
# ============================================================================

def _apply_beam_splitter(state: PureState, bs: BeamSplitter, direction: Direction) -> PureState:
    ia, ib = state.index(bs.a), state.index(bs.b)
    stay = SQRT1_2
    cross = 1j * SQRT1_2 if direction == Direction.FORWARD else -1j * SQRT1_2
    out: Dict[Config, complex] = {}

    def add(config: Config, amp: complex) -> None:
        out[config] = out.get(config, 0j) + amp

    for config, amp in state.items():
        occ_a, occ_b = config[ia], config[ib]
        if occ_a and occ_b:
            raise MultiPhotonUnsupportedError(
                f"beam splitter ({bs.a}, {bs.b}) sees both ports occupied"
            )
        if not (occ_a or occ_b):
            add(config, amp)
            continue
        other = list(config)
        other[ia], other[ib] = occ_b, occ_a
        add(config, stay * amp)
        add(tuple(other), cross * amp)
    return state.with_terms(out)


def _apply_phase(state: PureState, phase: Phase, direction: Direction) -> PureState:
    idx = state.index(phase.m)
    theta = phase.theta if direction == Direction.FORWARD else -phase.theta
    factor = cmath.exp(1j * theta)
    return state.with_terms(
        {c: (a * factor if c[idx] else a) for c, a in state.items()}
    )


def _apply_relabel(state: PureState, relabel: Relabel, direction: Direction) -> PureState:
    if direction == Direction.REVERSE:
        relabel = relabel.inverted()
    relabeled_modes(state.modes, relabel)
    mapping = relabel.mapping
    renamed = [mapping.get(m, m) for m in state.modes]
    return PureState(renamed, state.terms(), prune=state.prune)


def apply_element(
    state: PureState, element: Element, direction: Direction = Direction.FORWARD
) -> PureState:
    if isinstance(element, BeamSplitter):
        return _apply_beam_splitter(state, element, direction)
    if isinstance(element, Phase):
        return _apply_phase(state, element, direction)
    if isinstance(element, Relabel):
        return _apply_relabel(state, element, direction)
    raise ConfigurationMismatchError(f"not an optical element: {element!r}")


def apply_circuit(
    state: PureState, circuit: Circuit, direction: Direction = Direction.FORWARD
) -> PureState:
    steps = circuit.steps if direction == Direction.FORWARD else tuple(reversed(circuit.steps))
    for element in steps:
        state = apply_element(state, element, direction)
    return state
