"""
Projectors on basis configurations and predicates on outcome records
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Annotated, FrozenSet, Literal, Mapping, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from photon_audit.errors import ConfigurationMismatchError
from photon_audit.state import Config, PureState, check_label

if TYPE_CHECKING:
    from photon_audit.models import OutcomeRecord


# ============================================================================
# PROJECTORS
# ============================================================================

class Projector(BaseModel):
    """Conjunction of (mode, occupation) constraints; no constraints matches everything"""
    model_config = ConfigDict(frozen=True)

    constraints: Tuple[Tuple[str, int], ...] = ()

    def __init__(self, **data):
        raw = data.get("constraints", ())
        if isinstance(raw, Mapping):
            raw = tuple(raw.items())
        merged = {}
        for mode, value in raw:
            check_label(mode)
            if value not in (0, 1):
                raise ConfigurationMismatchError(f"projector occupation must be 0 or 1, got {value!r} on '{mode}'")
            if merged.get(mode, value) != value:
                raise ConfigurationMismatchError(f"contradictory constraints on '{mode}'")
            merged[mode] = int(value)
        data["constraints"] = tuple(sorted(merged.items()))
        super().__init__(**data)

    @classmethod
    def of(cls, **occupations: int) -> "Projector":
        return cls(constraints=tuple(occupations.items()))

    @property
    def modes(self) -> Tuple[str, ...]:
        return tuple(m for m, _ in self.constraints)

    def positions(self, state: PureState) -> Tuple[Tuple[int, int], ...]:
        return tuple((state.index(m), v) for m, v in self.constraints)

    def matches(self, state: PureState, config: Config) -> bool:
        return all(config[i] == v for i, v in self.positions(state))

    def to_text(self) -> str:
        return ", ".join(f"{m}={v}" for m, v in self.constraints)


# ============================================================================
# RECORD PREDICATES
# ============================================================================

class RecordMatch(BaseModel):
    """True when record `name` holds exactly `pattern`"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["match"] = "match"
    name: str
    pattern: str

    def __call__(self, record: "OutcomeRecord") -> bool:
        return record.get(self.name) == self.pattern

    def names(self) -> FrozenSet[str]:
        return frozenset({self.name})

    def to_text(self) -> str:
        return f"{self.name} == {self.pattern}"


class Constant(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["const"] = "const"
    value: bool

    def __call__(self, record: "OutcomeRecord") -> bool:
        return self.value

    def names(self) -> FrozenSet[str]:
        return frozenset()

    def to_text(self) -> str:
        return "true" if self.value else "false"


class AllOf(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["all"] = "all"
    items: Tuple["RecordPredicate", ...]

    def __call__(self, record: "OutcomeRecord") -> bool:
        return all(item(record) for item in self.items)

    def names(self) -> FrozenSet[str]:
        return frozenset().union(*(item.names() for item in self.items))

    def to_text(self) -> str:
        return " and ".join(
            f"({item.to_text()})" if isinstance(item, (AllOf, AnyOf)) else item.to_text()
            for item in self.items
        )


class AnyOf(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["any"] = "any"
    items: Tuple["RecordPredicate", ...]

    def __call__(self, record: "OutcomeRecord") -> bool:
        return any(item(record) for item in self.items)

    def names(self) -> FrozenSet[str]:
        return frozenset().union(*(item.names() for item in self.items))

    def to_text(self) -> str:
        return " or ".join(
            f"({item.to_text()})" if isinstance(item, AnyOf) else item.to_text()
            for item in self.items
        )


RecordPredicate = Annotated[
    Union[RecordMatch, Constant, AllOf, AnyOf], Field(discriminator="kind")
]

AllOf.model_rebuild()
AnyOf.model_rebuild()

ALWAYS = Constant(value=True)
NEVER = Constant(value=False)


def record_is(name: str, pattern: str) -> RecordMatch:
    return RecordMatch(name=name, pattern=pattern)


def all_of(*items: RecordPredicate) -> RecordPredicate:
    return items[0] if len(items) == 1 else AllOf(items=items)


def any_of(*items: RecordPredicate) -> RecordPredicate:
    return items[0] if len(items) == 1 else AnyOf(items=items)
