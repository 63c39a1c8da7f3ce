"""
Pydantic models for records, protocols, reports and scenario documents
"""

from __future__ import annotations

import math
from typing import Annotated, Any, Callable, Dict, Iterator, List, Literal, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field

from photon_audit.errors import ConditioningOnNullError, ConfigurationMismatchError
from photon_audit.optics import Element
from photon_audit.predicates import Projector, RecordPredicate
from photon_audit.state import PureState


# ============================================================================
# RECORD MODELS
# ============================================================================

class OutcomeRecord(BaseModel):
    """Classical record: record name -> observed occupation pattern"""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[Tuple[str, str], ...] = ()

    def __init__(self, **data):
        raw = data.get("entries", ())
        if isinstance(raw, Mapping):
            raw = tuple(raw.items())
        names = [name for name, _ in raw]
        if len(set(names)) != len(names):
            raise ConfigurationMismatchError(f"record names must be unique: {names}")
        data["entries"] = tuple(sorted((str(k), str(v)) for k, v in raw))
        super().__init__(**data)

    @classmethod
    def of(cls, mapping: Optional[Mapping[str, str]] = None, **entries: str) -> "OutcomeRecord":
        merged = dict(mapping or {})
        merged.update(entries)
        return cls(entries=tuple(merged.items()))

    def get(self, name: str, default: Optional[str] = None) -> Optional[str]:
        for key, value in self.entries:
            if key == name:
                return value
        return default

    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def with_entry(self, name: str, value: str) -> "OutcomeRecord":
        return OutcomeRecord(entries=self.entries + ((name, value),))

    def restricted(self, names) -> "OutcomeRecord":
        keep = set(names)
        return OutcomeRecord(entries=tuple(e for e in self.entries if e[0] in keep))

    def as_dict(self) -> Dict[str, str]:
        return dict(self.entries)

    def __str__(self) -> str:
        return ", ".join(f"{k}={v}" for k, v in self.entries) or "(empty)"


class JointDistribution(BaseModel):
    """Probabilities over outcome records, kept in canonical record order"""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[Tuple[OutcomeRecord, float], ...] = ()

    @classmethod
    def from_weights(cls, weights: Mapping[OutcomeRecord, float]) -> "JointDistribution":
        ordered = sorted(weights.items(), key=lambda item: item[0].entries)
        return cls(entries=tuple((record, float(p)) for record, p in ordered))

    def as_dict(self) -> Dict[OutcomeRecord, float]:
        return dict(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def total(self) -> float:
        return math.fsum(p for _, p in self.entries)

    def probability(self, event: Callable[[OutcomeRecord], bool]) -> float:
        return math.fsum(p for record, p in self.entries if event(record))

    def get(self, record: Union[OutcomeRecord, Mapping[str, str]]) -> float:
        if not isinstance(record, OutcomeRecord):
            record = OutcomeRecord.of(record)
        return self.as_dict().get(record, 0.0)

    def marginal(self, names) -> "JointDistribution":
        acc: Dict[OutcomeRecord, float] = {}
        for record, p in self.entries:
            key = record.restricted(names)
            acc[key] = acc.get(key, 0.0) + p
        return JointDistribution.from_weights(acc)

    def conditioned(self, given: Callable[[OutcomeRecord], bool]) -> "JointDistribution":
        norm = self.probability(given)
        if norm <= 0.0:
            raise ConditioningOnNullError("conditioning event has probability zero")
        return JointDistribution.from_weights(
            {record: p / norm for record, p in self.entries if given(record)}
        )

    def max_deviation(self, other: "JointDistribution") -> float:
        mine, theirs = self.as_dict(), other.as_dict()
        keys = set(mine) | set(theirs)
        return max((abs(mine.get(k, 0.0) - theirs.get(k, 0.0)) for k in keys), default=0.0)


# ============================================================================
# ENSEMBLE MODELS
# ============================================================================

class Branch(BaseModel):
    """One classical alternative: Born weight, normalized state, record so far"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weight: float
    state: PureState
    record: OutcomeRecord = Field(default_factory=OutcomeRecord)


class Ensemble(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    branches: Tuple[Branch, ...] = ()
    discarded_weight: float = 0.0

    def total_weight(self) -> float:
        return math.fsum(b.weight for b in self.branches)

    def distribution(self) -> JointDistribution:
        acc: Dict[OutcomeRecord, float] = {}
        for branch in self.branches:
            acc[branch.record] = acc.get(branch.record, 0.0) + branch.weight
        return JointDistribution.from_weights(acc)


# ============================================================================
# PROTOCOL MODELS
# ============================================================================

class UnitaryStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["unitary"] = "unitary"
    element: Element


class MeasureStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["measure"] = "measure"
    modes: Tuple[str, ...]
    name: str


class ConditionalStep(BaseModel):
    """Classical feed-forward: apply `then` when the record satisfies `condition`"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["conditional"] = "conditional"
    condition: RecordPredicate
    then: Element
    otherwise: Optional[Element] = None


class PointerStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["pointer"] = "pointer"
    watched: str
    pointer: str


class DephaseStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["dephase"] = "dephase"
    pointers: Tuple[str, ...]


Step = Annotated[
    Union[UnitaryStep, MeasureStep, ConditionalStep, PointerStep, DephaseStep],
    Field(discriminator="kind"),
]


class Protocol(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = "protocol"
    modes: Tuple[str, ...]
    initial: PureState
    steps: Tuple[Step, ...] = ()
    wings: Dict[str, Tuple[str, ...]] = Field(default_factory=dict)


class BranchNode(BaseModel):
    """Node of the measurement tree; `label` is the outcome that created it"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str = "root"
    step: int = -1
    weight: float = 1.0
    record: OutcomeRecord = Field(default_factory=OutcomeRecord)
    state: PureState
    children: Tuple["BranchNode", ...] = ()

    def leaves(self) -> Iterator["BranchNode"]:
        if not self.children:
            yield self
            return
        for child in self.children:
            yield from child.leaves()


class BranchTree(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    root: BranchNode

    def leaves(self) -> List[Branch]:
        return [Branch(weight=n.weight, state=n.state, record=n.record) for n in self.root.leaves()]

    def to_ensemble(self) -> Ensemble:
        return Ensemble(branches=tuple(self.leaves()))


BranchNode.model_rebuild()


# ============================================================================
# REPORT MODELS
# ============================================================================

class ReversalReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    collapsed_state: PureState
    reversed_state: PureState
    allowed_component: Tuple[Tuple[Dict[str, int], complex], ...] = ()
    forbidden_component: Tuple[Tuple[Dict[str, int], complex], ...] = ()
    forbidden_probability: float = 0.0


class AuditResult(BaseModel):
    kind: str
    label: str = ""
    value: Optional[float] = None
    passed: bool = False
    detail: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None


# ============================================================================
# SCENARIO MODELS
# ============================================================================

class StateTerm(BaseModel):
    """One `coeff |m=b, ...>` term of a scenario's initial state"""
    model_config = ConfigDict(frozen=True)

    config: Dict[str, int]
    re: float = 1.0
    im: float = 0.0

    @property
    def amplitude(self) -> complex:
        return complex(self.re, self.im)


AuditKind = Literal["no-signaling", "cut-invariance", "consistency", "filter-equivalence", "retro"]


class AuditDirective(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: AuditKind
    other: Optional[str] = None
    wing: Optional[str] = None
    step: Optional[str] = None
    event: Optional[RecordPredicate] = None
    projector: Optional[Projector] = None
    expect: Optional[float] = None


class ScenarioDoc(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "unnamed"
    modes: Tuple[str, ...] = ()
    state: Tuple[StateTerm, ...] = ()
    steps: Tuple[Step, ...] = ()
    wings: Dict[str, Tuple[str, ...]] = Field(default_factory=dict)
    support: Tuple[Dict[str, int], ...] = ()
    forbidden: Tuple[RecordPredicate, ...] = ()
    audits: Tuple[AuditDirective, ...] = ()


# ============================================================================
# OUTPUT MODELS
# ============================================================================

class RunOutputs(BaseModel):
    """Final outputs of one pipeline run"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: str
    distribution: JointDistribution
    audits: List[AuditResult] = Field(default_factory=list)
    discarded_weight: float = 0.0
    condition: Optional[str] = None
