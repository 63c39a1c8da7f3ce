"""
Sparse pure states over hard-core (0/1) occupation modes.

A state keeps its modes sorted by name and stores one amplitude per basis
configuration; a configuration is a tuple of occupations aligned with the
sorted modes. Terms are kept in canonical (sorted) order so that every
printout and JSON dump is byte-stable.
"""

from __future__ import annotations

import math
import re
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from photon_audit.errors import (
    ConfigurationMismatchError,
    LabelCollisionError,
    MultiPhotonUnsupportedError,
    UndefinedStateError,
)

Config = Tuple[int, ...]

PRUNE_TOLERANCE = 1e-15

_LABEL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def check_label(name: str) -> str:
    if not isinstance(name, str) or not _LABEL.match(name):
        raise ConfigurationMismatchError(f"invalid mode label: {name!r}")
    return name


def _check_amplitude(amp: complex) -> complex:
    amp = complex(amp)
    if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
        raise UndefinedStateError(f"non-finite amplitude: {amp}")
    return amp


class PureState:
    """Immutable sparse state; amplitudes below `prune` are dropped on construction"""

    __slots__ = ("_modes", "_index", "_terms", "_norm_sq", "prune")

    def __init__(
        self,
        modes: Iterable[str],
        terms: Optional[Mapping[Config, complex]] = None,
        prune: float = PRUNE_TOLERANCE,
    ):
        names = [check_label(m) for m in modes]
        ordered = tuple(sorted(names))
        if len(set(ordered)) != len(ordered):
            raise ConfigurationMismatchError(f"duplicate mode labels in {names}")
        # callers hand configs aligned with the order they gave the modes in
        perm = [names.index(m) for m in ordered]
        clean: Dict[Config, complex] = {}
        for config, amp in (terms or {}).items():
            config = tuple(config)
            if len(config) != len(names):
                raise ConfigurationMismatchError(
                    f"configuration {config} does not cover modes {names}"
                )
            for bit in config:
                if bit not in (0, 1):
                    if isinstance(bit, int) and bit > 1:
                        raise MultiPhotonUnsupportedError(
                            f"occupation {bit} in {config}; modes are hard-core (0/1)"
                        )
                    raise ConfigurationMismatchError(f"invalid occupation {bit!r} in {config}")
            key = tuple(config[i] for i in perm)
            clean[key] = clean.get(key, 0j) + _check_amplitude(amp)
        self._init(ordered, clean, prune)

    def _init(self, modes: Tuple[str, ...], terms: Dict[Config, complex], prune: float) -> None:
        self._modes = modes
        self._index = {m: i for i, m in enumerate(modes)}
        kept = {k: terms[k] for k in sorted(terms) if abs(terms[k]) >= prune}
        self._terms = kept
        try:
            self._norm_sq = math.fsum(abs(a) ** 2 for a in kept.values())
        except OverflowError:
            raise UndefinedStateError("state norm overflows double precision") from None
        self.prune = prune

    @classmethod
    def _canonical(
        cls, modes: Tuple[str, ...], terms: Dict[Config, complex], prune: float
    ) -> "PureState":
        # trusted path: modes already sorted, configs already aligned
        state = cls.__new__(cls)
        state._init(modes, terms, prune)
        return state

    # ------------------------------------------------------------------
    # accessors
    # ------------------------------------------------------------------

    @property
    def modes(self) -> Tuple[str, ...]:
        return self._modes

    @property
    def norm_sq(self) -> float:
        return self._norm_sq

    @property
    def norm(self) -> float:
        return math.sqrt(self._norm_sq)

    def is_empty(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def items(self) -> Iterator[Tuple[Config, complex]]:
        return iter(self._terms.items())

    def terms(self) -> Dict[Config, complex]:
        return dict(self._terms)

    def index(self, mode: str) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise ConfigurationMismatchError(
                f"unknown mode '{mode}' (state modes: {', '.join(self._modes)})"
            ) from None

    def has_mode(self, mode: str) -> bool:
        return mode in self._index

    def config_of(self, occupations: Mapping[str, int]) -> Config:
        return config_from_mapping(self._modes, occupations)

    def as_mapping(self, config: Config) -> Dict[str, int]:
        return dict(zip(self._modes, config))

    def amplitude(self, occupations: Mapping[str, int]) -> complex:
        return self._terms.get(self.config_of(occupations), 0j)

    def labeled_terms(self) -> List[Tuple[Dict[str, int], complex]]:
        return [(self.as_mapping(c), a) for c, a in self._terms.items()]

    def pattern(self, config: Config, modes: Sequence[str]) -> str:
        return "".join(str(config[self.index(m)]) for m in modes)

    def with_terms(self, terms: Dict[Config, complex]) -> "PureState":
        return PureState._canonical(self._modes, terms, self.prune)

    def scaled(self, factor: complex) -> "PureState":
        return self.with_terms({c: a * factor for c, a in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PureState):
            return NotImplemented
        return self._modes == other._modes and self._terms == other._terms

    __hash__ = None  # type: ignore[assignment]

    def allclose(self, other: "PureState", tol: float = 1e-12) -> bool:
        if self._modes != other._modes:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0j) - other._terms.get(k, 0j)) <= tol for k in keys)

    def __repr__(self) -> str:
        if not self._terms:
            return f"PureState(0, modes={list(self._modes)})"
        parts = []
        for config, amp in self._terms.items():
            occ = ",".join(f"{m}={b}" for m, b in zip(self._modes, config))
            parts.append(f"({amp.real:.6g}{amp.imag:+.6g}j)|{occ}>")
        return " + ".join(parts)


def config_from_mapping(modes: Sequence[str], occupations: Mapping[str, int]) -> Config:
    missing = [m for m in modes if m not in occupations]
    extra = sorted(set(occupations) - set(modes))
    if missing or extra:
        raise ConfigurationMismatchError(
            f"configuration mismatch: missing {missing or 'none'}, extra {extra or 'none'}"
        )
    config = []
    for m in modes:
        bit = occupations[m]
        if bit not in (0, 1):
            if isinstance(bit, int) and bit > 1:
                raise MultiPhotonUnsupportedError(f"occupation {bit} on '{m}'; modes are hard-core")
            raise ConfigurationMismatchError(f"invalid occupation {bit!r} on '{m}'")
        config.append(int(bit))
    return tuple(config)


# ============================================================================
# CONSTRUCTION
# ============================================================================

def basis_state(
    modes: Iterable[str], config: Mapping[str, int], prune: float = PRUNE_TOLERANCE
) -> PureState:
    ordered = tuple(sorted(check_label(m) for m in modes))
    return PureState._canonical(ordered, {config_from_mapping(ordered, config): 1 + 0j}, prune)


def vacuum(modes: Iterable[str], prune: float = PRUNE_TOLERANCE) -> PureState:
    modes = list(modes)
    return basis_state(modes, {m: 0 for m in modes}, prune)


def superpose(
    terms: Sequence[Tuple[Mapping[str, int], complex]], prune: float = PRUNE_TOLERANCE
) -> PureState:
    """Sum labeled terms into one state; duplicates add, nothing is normalized"""
    if not terms:
        raise ConfigurationMismatchError("superpose needs at least one term")
    mode_set = set(terms[0][0])
    for occupations, _ in terms:
        if set(occupations) != mode_set:
            raise ConfigurationMismatchError(
                f"inconsistent mode sets: {sorted(mode_set)} vs {sorted(occupations)}"
            )
    ordered = tuple(sorted(check_label(m) for m in mode_set))
    acc: Dict[Config, complex] = {}
    # sum in canonical order so the result does not depend on input order
    keyed = sorted(
        ((config_from_mapping(ordered, occ), _check_amplitude(amp)) for occ, amp in terms),
        key=lambda item: (item[0], item[1].real, item[1].imag),
    )
    for config, amp in keyed:
        acc[config] = acc.get(config, 0j) + amp
    return PureState._canonical(ordered, acc, prune)


def normalize(state: PureState) -> PureState:
    if state.norm_sq == 0.0:
        raise UndefinedStateError("cannot normalize the zero state")
    return state.scaled(1.0 / state.norm)


# ============================================================================
# COMBINATION
# ============================================================================

def _require_same_modes(a: PureState, b: PureState) -> None:
    if a.modes != b.modes:
        raise ConfigurationMismatchError(
            f"mode sets differ: {list(a.modes)} vs {list(b.modes)}"
        )


def inner_product(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugating the left argument"""
    _require_same_modes(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    large_terms = large.terms()
    total = 0j
    for config, amp in small.items():
        other = large_terms.get(config)
        if other is None:
            continue
        total += amp.conjugate() * other if small is a else other.conjugate() * amp
    return total


def fidelity(a: PureState, b: PureState) -> float:
    if a.norm_sq == 0.0 or b.norm_sq == 0.0:
        raise UndefinedStateError("fidelity is undefined for the zero state")
    return abs(inner_product(a, b)) ** 2 / (a.norm_sq * b.norm_sq)


def tensor(a: PureState, b: PureState) -> PureState:
    shared = set(a.modes) & set(b.modes)
    if shared:
        raise LabelCollisionError(f"tensor factors share modes: {sorted(shared)}")
    ordered = tuple(sorted(a.modes + b.modes))
    source = [(0, a.index(m)) if a.has_mode(m) else (1, b.index(m)) for m in ordered]
    terms: Dict[Config, complex] = {}
    for ca, aa in a.items():
        for cb, ab in b.items():
            parts = (ca, cb)
            terms[tuple(parts[side][pos] for side, pos in source)] = aa * ab
    return PureState._canonical(ordered, terms, min(a.prune, b.prune))


# ============================================================================
# MARGINALS AND REDUCED STATES
# ============================================================================

def marginal_probabilities(state: PureState, modes: Sequence[str]) -> Dict[str, float]:
    """Born distribution of the occupation pattern on `modes` (listed order)"""
    if state.norm_sq == 0.0:
        raise UndefinedStateError("marginal of the zero state")
    positions = [state.index(m) for m in modes]
    acc: Dict[str, float] = {}
    for config, amp in state.items():
        key = "".join(str(config[p]) for p in positions)
        acc[key] = acc.get(key, 0.0) + abs(amp) ** 2
    return {k: acc[k] / state.norm_sq for k in sorted(acc)}


def reduced_density_matrix(state: PureState, modes: Sequence[str]) -> np.ndarray:
    """Partial trace onto `modes`; rows are indexed by the pattern read as binary"""
    if state.norm_sq == 0.0:
        raise UndefinedStateError("reduced state of the zero state")
    keep = [state.index(m) for m in modes]
    rest = [i for i in range(len(state.modes)) if i not in keep]
    groups: Dict[Config, List[Tuple[int, complex]]] = {}
    for config, amp in state.items():
        row = int("".join(str(config[p]) for p in keep) or "0", 2)
        groups.setdefault(tuple(config[p] for p in rest), []).append((row, amp))
    rho = np.zeros((2 ** len(keep), 2 ** len(keep)), dtype=np.complex128)
    for members in groups.values():
        vec = np.zeros(2 ** len(keep), dtype=np.complex128)
        for row, amp in members:
            vec[row] += amp
        rho += np.outer(vec, vec.conj())
    return rho / state.norm_sq


def purity(state: PureState, modes: Sequence[str]) -> float:
    rho = reduced_density_matrix(state, modes)
    return float(np.real(np.trace(rho @ rho)))


def schmidt_rank(state: PureState, modes: Sequence[str], tol: float = 1e-12) -> int:
    eigenvalues = np.linalg.eigvalsh(reduced_density_matrix(state, modes))
    return int(np.sum(eigenvalues > tol))


def global_phase_fixed(state: PureState) -> PureState:
    """Rotate the global phase so the first canonical term is real positive"""
    if state.is_empty():
        return state
    _, first = next(state.items())
    return state.scaled(first.conjugate() / abs(first))
