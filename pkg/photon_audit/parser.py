"""
Scenario text format: parsing, printing, and conversion to protocols.

The format is line oriented; `#` starts a comment. See README.md for the
grammar. Parsing is total: every failure surfaces as ScenarioSyntaxError
(with line, column and the expected tokens) or ScenarioSemanticError (with
the line numbers involved).
"""

from __future__ import annotations

import math
import re
from typing import Dict, List, Optional, Sequence, Set, Tuple

from photon_audit.errors import (
    PhotonAuditError,
    ScenarioSemanticError,
    ScenarioSyntaxError,
)
from photon_audit.models import (
    AuditDirective,
    ConditionalStep,
    DephaseStep,
    MeasureStep,
    PointerStep,
    Protocol,
    ScenarioDoc,
    StateTerm,
    Step,
    UnitaryStep,
)
from photon_audit.optics import BeamSplitter, Element, Phase, Relabel, SQRT1_2
from photon_audit.predicates import (
    Constant,
    Projector,
    RecordMatch,
    RecordPredicate,
    all_of,
    any_of,
)
from photon_audit.retro import SourceSupport
from photon_audit.state import PRUNE_TOLERANCE, superpose

UNIT_NORM_TOLERANCE = 1e-9

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ket>\|[^|>]*>)
  | (?P<eqeq>==)
  | (?P<arrow>->)
  | (?P<punct>[:,=+()])
  | (?P<word>(?:[A-Za-z0-9_.*/]|-(?!>)|(?<=[0-9.][eE])\+)+)
    """,
    re.VERBOSE,
)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_DECIMAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_REAL = re.compile(rf"-?{_DECIMAL}\Z")
_IMAG = re.compile(rf"(-?{_DECIMAL})?i\Z")
_PI = re.compile(rf"(-)?(?:({_DECIMAL})\*?)?pi(?:/({_DECIMAL}))?\Z")
_PATTERN = re.compile(r"[01]+\Z")
_COMPLEX = re.compile(rf"(-?{_DECIMAL})([-+]{_DECIMAL})i\Z")

_SYMBOLIC = (
    ("1/sqrt2", complex(SQRT1_2, 0.0)),
    ("-1/sqrt2", complex(-SQRT1_2, 0.0)),
    ("i/sqrt2", complex(0.0, SQRT1_2)),
    ("-i/sqrt2", complex(0.0, -SQRT1_2)),
)

STATEMENTS = ("scenario", "modes", "state", "step", "wing", "support", "forbid", "audit")
STEP_KINDS = ("bs", "phase", "relabel", "measure", "if", "pointer", "dephase")
AUDIT_KINDS = ("no-signaling", "cut-invariance", "consistency", "filter-equivalence", "retro")


class _Token:
    __slots__ = ("kind", "text", "column")

    def __init__(self, kind: str, text: str, column: int):
        self.kind = kind
        self.text = text
        self.column = column

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text!r}@{self.column}"


class _Cursor:
    """Token stream for one line"""

    def __init__(self, text: str, line: int):
        self.line = line
        self.tokens: List[_Token] = []
        self.end_column = len(text) + 1
        pos = 0
        while pos < len(text):
            match = _TOKEN.match(text, pos)
            if match is None:
                raise ScenarioSyntaxError(f"unexpected character {text[pos]!r}", line, pos + 1)
            kind = match.lastgroup
            if kind != "ws":
                self.tokens.append(_Token(kind, match.group(), pos + 1))
            pos = match.end()
        self.pos = 0

    def peek(self, offset: int = 0) -> Optional[_Token]:
        index = self.pos + offset
        return self.tokens[index] if index < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def column(self) -> int:
        token = self.peek()
        return token.column if token else self.end_column

    def fail(self, message: str, *expected: str) -> ScenarioSyntaxError:
        token = self.peek()
        found = f"'{token.text}'" if token else "end of line"
        return ScenarioSyntaxError(f"{message}, found {found}", self.line, self.column(), expected)

    def take(self, kind: str, expected: str, text: Optional[str] = None) -> _Token:
        token = self.peek()
        if token is None or token.kind != kind or (text is not None and token.text != text):
            raise self.fail("unexpected token", expected)
        self.pos += 1
        return token

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[_Token]:
        token = self.peek()
        if token is not None and token.kind == kind and (text is None or token.text == text):
            self.pos += 1
            return token
        return None

    def ident(self, what: str) -> str:
        token = self.peek()
        if token is None or token.kind != "word" or not _IDENT.match(token.text):
            raise self.fail(f"expected {what}", what)
        self.pos += 1
        return token.text

    def finish(self) -> None:
        if not self.at_end():
            raise self.fail("unexpected trailing input", "end of line")


# ============================================================================
# LEXICAL VALUES
# ============================================================================

def _finite(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


def parse_coefficient(text: str) -> complex:
    for symbol, value in _SYMBOLIC:
        if text == symbol:
            return value
    if text in ("i", "-i"):
        return complex(0.0, -1.0 if text.startswith("-") else 1.0)
    if _REAL.match(text):
        return complex(_finite(text), 0.0)
    if _IMAG.match(text):
        return complex(0.0, _finite(text[:-1]))
    raise ValueError(text)


def format_coefficient(value: complex) -> str:
    for symbol, exact in _SYMBOLIC:
        if value == exact:
            return symbol
    if value.imag == 0.0:
        return repr(value.real)
    if value.real == 0.0:
        return f"{value.imag!r}i"
    sign = "+" if value.imag >= 0 else ""
    return f"({value.real!r}{sign}{value.imag!r}i)"


def parse_angle(text: str) -> float:
    if _REAL.match(text):
        return _finite(text)
    match = _PI.match(text)
    if match is None:
        raise ValueError(text)
    negative, factor, divisor = match.groups()
    scale = _finite(factor) if factor else 1.0
    denominator = _finite(divisor) if divisor else 1.0
    value = math.pi * scale / denominator if denominator else math.inf
    if not math.isfinite(value):
        raise ValueError(text)
    return -value if negative else value


def _parse_ket(token: _Token, line: int) -> Dict[str, int]:
    body = token.text[1:-1]
    config: Dict[str, int] = {}
    offset = token.column + 1
    for part in body.split(","):
        column = offset + len(part) - len(part.lstrip())
        offset += len(part) + 1
        name, eq, bit = (s.strip() for s in part.partition("="))
        if not eq or not _IDENT.match(name) or bit not in ("0", "1"):
            raise ScenarioSyntaxError(
                f"malformed ket entry {part.strip()!r}", line, column, ("<mode>=<0|1>",)
            )
        if name in config:
            raise ScenarioSyntaxError(f"mode '{name}' repeated in ket", line, column)
        config[name] = int(bit)
    return config


def _format_ket(config: Dict[str, int]) -> str:
    return "|" + ", ".join(f"{m}={b}" for m, b in config.items()) + ">"


# ============================================================================
# EXPRESSIONS
# ============================================================================

_STOP_WORDS = ("then", "expect")


def _parse_expr(cur: _Cursor) -> RecordPredicate:
    terms = [_parse_conjunction(cur)]
    while cur.accept("word", "or"):
        terms.append(_parse_conjunction(cur))
    return any_of(*terms)


def _parse_conjunction(cur: _Cursor) -> RecordPredicate:
    atoms = [_parse_atom(cur)]
    while cur.accept("word", "and"):
        atoms.append(_parse_atom(cur))
    return all_of(*atoms)


def _parse_atom(cur: _Cursor) -> RecordPredicate:
    if cur.accept("punct", "("):
        inner = _parse_expr(cur)
        cur.take("punct", "')'", ")")
        return inner
    following = cur.peek(1)
    # keywords are only keywords when no '==' follows
    is_match = following is not None and following.kind == "eqeq"
    if not is_match:
        if cur.accept("word", "true"):
            return Constant(value=True)
        if cur.accept("word", "false"):
            return Constant(value=False)
    token = cur.peek()
    if token is None or token.kind != "word" or (token.text in _STOP_WORDS and not is_match):
        raise cur.fail("expected a condition", "<record> == <pattern>", "true", "false", "'('")
    name = cur.ident("record name")
    cur.take("eqeq", "'=='")
    pattern = cur.peek()
    if pattern is None or pattern.kind != "word" or not _PATTERN.match(pattern.text):
        raise cur.fail("expected an occupation pattern", "<pattern of 0/1>")
    cur.pos += 1
    return RecordMatch(name=name, pattern=pattern.text)


def parse_predicate(text: str) -> RecordPredicate:
    """Parse a stand-alone record predicate such as `D == 10 and U == 01`"""
    cur = _Cursor(text, 1)
    predicate = _parse_expr(cur)
    cur.finish()
    return predicate


def _at_expect(cur: _Cursor) -> bool:
    """`expect` starts the expectation unless it is a mode being constrained"""
    following = cur.peek(1)
    return cur.peek().text == "expect" and (following is None or following.text != "=")


def _parse_projector_items(cur: _Cursor) -> Projector:
    items: List[Tuple[str, int]] = []
    while not cur.at_end() and not _at_expect(cur):
        start = cur.column()
        name = cur.ident("mode name")
        cur.take("punct", "'='", "=")
        bit = cur.take("word", "0 or 1")
        if bit.text not in ("0", "1"):
            raise ScenarioSyntaxError("occupation must be 0 or 1", cur.line, bit.column, ("0", "1"))
        if any(n == name for n, _ in items):
            raise ScenarioSyntaxError(f"mode '{name}' constrained twice", cur.line, start)
        items.append((name, int(bit.text)))
        cur.accept("punct", ",")
    return Projector(constraints=tuple(items))


def parse_projector(text: str) -> Projector:
    cur = _Cursor(text, 1)
    projector = _parse_projector_items(cur)
    cur.finish()
    return projector


def _parse_expect(cur: _Cursor) -> Optional[float]:
    if not cur.accept("word", "expect"):
        return None
    token = cur.take("word", "probability")
    try:
        if not _REAL.match(token.text):
            raise ValueError(token.text)
        return _finite(token.text)
    except ValueError:
        raise ScenarioSyntaxError(
            "expected a probability", cur.line, token.column, ("<decimal>",)
        ) from None


# ============================================================================
# STATEMENTS
# ============================================================================

def _parse_element(cur: _Cursor, kind: str) -> Element:
    if kind == "bs":
        return BeamSplitter(a=cur.ident("mode name"), b=cur.ident("mode name"))
    if kind == "phase":
        mode = cur.ident("mode name")
        token = cur.take("word", "angle in radians")
        try:
            theta = parse_angle(token.text)
        except ValueError:
            raise ScenarioSyntaxError(
                f"invalid angle {token.text!r}", cur.line, token.column, ("<radians>", "pi/<n>")
            ) from None
        return Phase(m=mode, theta=theta)
    if kind == "relabel":
        pairs = []
        while True:
            old = cur.ident("mode name")
            cur.take("arrow", "'->'")
            pairs.append((old, cur.ident("mode name")))
            token = cur.peek()
            if token is None or token.kind != "word":
                break
            following = cur.peek(1)
            if token.text == "else" and (following is None or following.kind != "arrow"):
                break
        return Relabel(pairs=tuple(pairs))
    raise cur.fail("expected an optical element", "bs", "phase", "relabel")


def _parse_step(cur: _Cursor) -> Step:
    token = cur.peek()
    if token is None or token.kind != "word" or token.text not in STEP_KINDS:
        raise cur.fail("unknown step", *STEP_KINDS)
    kind = token.text
    cur.pos += 1
    if kind in ("bs", "phase", "relabel"):
        return UnitaryStep(element=_parse_element(cur, kind))
    if kind == "measure":
        # the record follows the last 'as' that is not itself the final token
        separators = [
            i for i in range(cur.pos + 1, len(cur.tokens) - 1)
            if cur.tokens[i].kind == "word" and cur.tokens[i].text == "as"
        ]
        stop = separators[-1] if separators else len(cur.tokens)
        modes = [cur.ident("mode name")]
        while cur.pos < stop:
            modes.append(cur.ident("mode name or 'as'"))
        cur.take("word", "'as'", "as")
        return MeasureStep(modes=tuple(modes), name=cur.ident("record name"))
    if kind == "if":
        condition = _parse_expr(cur)
        cur.take("word", "'then'", "then")
        then = _parse_element(cur, _element_kind(cur))
        otherwise = None
        if cur.accept("word", "else"):
            otherwise = _parse_element(cur, _element_kind(cur))
        return ConditionalStep(condition=condition, then=then, otherwise=otherwise)
    if kind == "pointer":
        return PointerStep(watched=cur.ident("watched mode"), pointer=cur.ident("pointer mode"))
    pointers = [cur.ident("pointer mode")]
    while not cur.at_end():
        pointers.append(cur.ident("pointer mode"))
    return DephaseStep(pointers=tuple(pointers))


def _element_kind(cur: _Cursor) -> str:
    token = cur.peek()
    if token is None or token.kind != "word" or token.text not in ("bs", "phase", "relabel"):
        raise cur.fail("expected an optical element", "bs", "phase", "relabel")
    cur.pos += 1
    return token.text


def _parse_state(cur: _Cursor) -> List[StateTerm]:
    terms = []
    while True:
        coeff = 1 + 0j
        token = cur.peek()
        if token is not None and token.kind == "punct" and token.text == "(":
            coeff = _parse_paren_coefficient(cur)
        elif token is not None and token.kind == "word":
            try:
                coeff = parse_coefficient(token.text)
            except ValueError:
                raise cur.fail("invalid coefficient", "<decimal>", "<decimal>i", "1/sqrt2", "i/sqrt2") from None
            cur.pos += 1
        ket = cur.take("ket", "|<mode>=<0|1>, ...>")
        config = _parse_ket(ket, cur.line)
        terms.append(StateTerm(config=config, re=coeff.real, im=coeff.imag))
        if cur.at_end():
            return terms
        cur.take("punct", "'+' or end of line", "+")


def _parse_paren_coefficient(cur: _Cursor) -> complex:
    start = cur.take("punct", "'('", "(")
    parts = []
    while not cur.accept("punct", ")"):
        token = cur.peek()
        if token is None:
            raise cur.fail("unclosed coefficient", "')'")
        parts.append(token.text)
        cur.pos += 1
    match = _COMPLEX.match("".join(parts))
    try:
        if match is None:
            raise ValueError(parts)
        return complex(_finite(match.group(1)), _finite(match.group(2)))
    except ValueError:
        raise ScenarioSyntaxError(
            "malformed complex coefficient", cur.line, start.column, ("(<re>+<im>i)",)
        ) from None


def _parse_audit(cur: _Cursor) -> AuditDirective:
    token = cur.peek()
    if token is None or token.kind != "word" or token.text not in AUDIT_KINDS:
        raise cur.fail("unknown audit", *AUDIT_KINDS)
    kind = token.text
    cur.pos += 1
    if kind == "no-signaling":
        other = cur.take("word", "scenario name or path").text
        return AuditDirective(kind=kind, other=other, wing=cur.ident("wing name"))
    if kind == "cut-invariance":
        return AuditDirective(kind=kind, step=cur.take("word", "step index or record name").text)
    if kind == "consistency":
        event = _parse_expr(cur)
        return AuditDirective(kind=kind, event=event, expect=_parse_expect(cur))
    if kind == "filter-equivalence":
        other = cur.take("word", "scenario name or path").text
        return AuditDirective(kind=kind, other=other, event=_parse_expr(cur))
    projector = _parse_projector_items(cur)
    return AuditDirective(kind=kind, projector=projector, expect=_parse_expect(cur))


# ============================================================================
# DOCUMENT
# ============================================================================

class _Draft:
    def __init__(self, name: str):
        self.name = name
        self.lines: Dict[str, int] = {}
        self.modes: Tuple[str, ...] = ()
        self.state: List[StateTerm] = []
        self.steps: List[Tuple[Step, int]] = []
        self.wings: Dict[str, Tuple[str, ...]] = {}
        self.wing_lines: Dict[str, int] = {}
        self.support: List[Tuple[Dict[str, int], int]] = []
        self.forbidden: List[Tuple[RecordPredicate, int]] = []
        self.audits: List[Tuple[AuditDirective, int]] = []


def _once(draft: _Draft, keyword: str, line: int) -> None:
    if keyword in draft.lines:
        raise ScenarioSemanticError(f"'{keyword}' declared twice", (draft.lines[keyword], line))
    draft.lines[keyword] = line


def _parse_line(draft: _Draft, cur: _Cursor) -> None:
    keyword = cur.peek()
    if keyword is None or keyword.kind != "word" or keyword.text not in STATEMENTS:
        raise cur.fail("unknown statement", *STATEMENTS)
    cur.pos += 1
    line = cur.line
    if keyword.text == "scenario":
        _once(draft, "scenario", line)
        draft.name = cur.take("word", "scenario name").text
    elif keyword.text == "modes":
        _once(draft, "modes", line)
        modes = [cur.ident("mode name")]
        while not cur.at_end():
            modes.append(cur.ident("mode name"))
        if len(set(modes)) != len(modes):
            raise ScenarioSemanticError("duplicate mode in 'modes'", (line,))
        draft.modes = tuple(modes)
    elif keyword.text == "state":
        _once(draft, "state", line)
        draft.state = _parse_state(cur)
    elif keyword.text == "step":
        draft.steps.append((_parse_step(cur), line))
    elif keyword.text == "wing":
        name = cur.ident("wing name")
        cur.take("punct", "':'", ":")
        members = [cur.ident("mode name")]
        while not cur.at_end():
            members.append(cur.ident("mode name"))
        if name in draft.wings:
            raise ScenarioSemanticError(f"wing '{name}' declared twice", (draft.wing_lines[name], line))
        draft.wings[name] = tuple(members)
        draft.wing_lines[name] = line
    elif keyword.text == "support":
        _once(draft, "support", line)
        draft.support.append((_parse_ket(cur.take("ket", "|<mode>=<0|1>, ...>"), line), line))
        while not cur.at_end():
            draft.support.append((_parse_ket(cur.take("ket", "|<mode>=<0|1>, ...>"), line), line))
    elif keyword.text == "forbid":
        draft.forbidden.append((_parse_expr(cur), line))
    else:
        draft.audits.append((_parse_audit(cur), line))
    cur.finish()


def _check_document(draft: _Draft, unit_norm_tolerance: float) -> None:
    if "modes" not in draft.lines:
        raise ScenarioSemanticError("missing 'modes' declaration")
    if "state" not in draft.lines:
        raise ScenarioSemanticError("missing 'state' declaration")
    mode_line, state_line = draft.lines["modes"], draft.lines["state"]
    declared = set(draft.modes)
    for term in draft.state:
        if set(term.config) != declared:
            unknown = sorted(set(term.config) - declared)
            missing = sorted(declared - set(term.config))
            raise ScenarioSemanticError(
                f"state term does not match modes (unknown: {unknown or 'none'}, missing: {missing or 'none'})",
                (state_line, mode_line),
            )
    try:
        initial = superpose([(t.config, t.amplitude) for t in draft.state])
    except PhotonAuditError as exc:
        raise ScenarioSemanticError(str(exc), (state_line,)) from exc
    if abs(initial.norm_sq - 1.0) > unit_norm_tolerance:
        raise ScenarioSemanticError(
            f"initial state is not unit-norm (norm^2 = {initial.norm_sq:.15g})", (state_line,)
        )

    # walk the timeline: modes in scope and records produced so far
    current: Set[str] = set(draft.modes)
    every_mode: Set[str] = set(current)
    produced: Dict[str, int] = {}
    measure_lines = {s.name: line for s, line in draft.steps if isinstance(s, MeasureStep)}
    for step, line in draft.steps:
        def need(modes: Sequence[str]) -> None:
            unknown = [m for m in modes if m not in current]
            if unknown:
                raise ScenarioSemanticError(f"unknown mode '{unknown[0]}'", (line,))

        if isinstance(step, UnitaryStep):
            current = _check_element(step.element, current, line, need, conditional=False)
        elif isinstance(step, MeasureStep):
            need(step.modes)
            if step.name in produced:
                raise ScenarioSemanticError(
                    f"record '{step.name}' measured twice", (produced[step.name], line)
                )
            produced[step.name] = line
        elif isinstance(step, ConditionalStep):
            for name in sorted(step.condition.names()):
                if name in produced:
                    continue
                if name in measure_lines:
                    raise ScenarioSemanticError(
                        f"record '{name}' is used before it is measured", (line, measure_lines[name])
                    )
                raise ScenarioSemanticError(f"record '{name}' is never measured", (line,))
            _check_element(step.then, current, line, need, conditional=True)
            if step.otherwise is not None:
                _check_element(step.otherwise, current, line, need, conditional=True)
        elif isinstance(step, PointerStep):
            need((step.watched, step.pointer))
            if step.watched == step.pointer:
                raise ScenarioSemanticError("pointer cannot watch itself", (line,))
        else:
            need(step.pointers)
        every_mode |= current

    claimed: Dict[str, str] = {}
    for wing, members in draft.wings.items():
        for mode in members:
            if mode not in every_mode:
                raise ScenarioSemanticError(f"unknown mode '{mode}' in wing '{wing}'", (draft.wing_lines[wing],))
            if mode in claimed:
                raise ScenarioSemanticError(
                    f"mode '{mode}' is in wings '{claimed[mode]}' and '{wing}'",
                    (draft.wing_lines[claimed[mode]], draft.wing_lines[wing]),
                )
            claimed[mode] = wing
    for config, line in draft.support:
        if set(config) != declared:
            raise ScenarioSemanticError("support configuration does not match modes", (line, mode_line))

    def known_records(predicate: RecordPredicate, line: int) -> None:
        for name in sorted(predicate.names()):
            if name not in produced:
                raise ScenarioSemanticError(f"record '{name}' is never measured", (line,))

    for predicate, line in draft.forbidden:
        known_records(predicate, line)
    for directive, line in draft.audits:
        if directive.event is not None:
            known_records(directive.event, line)
        if directive.kind == "no-signaling" and directive.wing not in draft.wings:
            raise ScenarioSemanticError(f"unknown wing '{directive.wing}'", (line,))
        if directive.kind == "cut-invariance":
            _check_cut_target(directive.step, draft, line)
        if directive.kind == "retro":
            if not draft.support:
                raise ScenarioSemanticError("retro audit needs a 'support' declaration", (line,))
            unknown = [m for m in directive.projector.modes if m not in every_mode]
            if unknown:
                raise ScenarioSemanticError(f"unknown mode '{unknown[0]}' in projector", (line,))


def _check_element(element: Element, current: Set[str], line: int, need, conditional: bool) -> Set[str]:
    if isinstance(element, BeamSplitter):
        need((element.a, element.b))
        return current
    if isinstance(element, Phase):
        need((element.m,))
        return current
    mapping = element.mapping
    need(list(mapping))
    if conditional and not element.is_permutation():
        raise ScenarioSemanticError("a conditional relabel must permute existing modes", (line,))
    clash = sorted(set(mapping.values()) & (current - set(mapping)))
    if clash:
        raise ScenarioSemanticError(f"relabel target '{clash[0]}' already exists", (line,))
    return {mapping.get(m, m) for m in current}


def _check_cut_target(ref: str, draft: _Draft, line: int) -> None:
    steps = [s for s, _ in draft.steps]
    if ref.isdigit():
        index = int(ref)
        if index >= len(steps) or not isinstance(steps[index], MeasureStep):
            raise ScenarioSemanticError(f"step {index} is not a measure step", (line,))
    elif not any(isinstance(s, MeasureStep) and s.name == ref for s in steps):
        raise ScenarioSemanticError(f"record '{ref}' is never measured", (line,))


def parse_scenario(
    text: str, default_name: str = "unnamed", unit_norm_tolerance: float = UNIT_NORM_TOLERANCE
) -> ScenarioDoc:
    """Parse scenario text into a document; raises positioned diagnostics"""
    draft = _Draft(default_name)
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        try:
            _parse_line(draft, _Cursor(content, number))
        except (ScenarioSyntaxError, ScenarioSemanticError):
            raise
        except (PhotonAuditError, ValueError) as exc:
            raise ScenarioSemanticError(str(exc), (number,)) from exc
    try:
        _check_document(draft, unit_norm_tolerance)
    except (ScenarioSyntaxError, ScenarioSemanticError):
        raise
    except (PhotonAuditError, ValueError) as exc:
        raise ScenarioSemanticError(str(exc)) from exc
    return ScenarioDoc(
        name=draft.name,
        modes=draft.modes,
        state=tuple(draft.state),
        steps=tuple(s for s, _ in draft.steps),
        wings=draft.wings,
        support=tuple(c for c, _ in draft.support),
        forbidden=tuple(p for p, _ in draft.forbidden),
        audits=tuple(a for a, _ in draft.audits),
    )


# ============================================================================
# PRINTING
# ============================================================================

def format_element(element: Element) -> str:
    if isinstance(element, BeamSplitter):
        return f"bs {element.a} {element.b}"
    if isinstance(element, Phase):
        return f"phase {element.m} {element.theta!r}"
    return "relabel " + " ".join(f"{old}->{new}" for old, new in element.pairs)


def format_step(step: Step) -> str:
    if isinstance(step, UnitaryStep):
        return format_element(step.element)
    if isinstance(step, MeasureStep):
        return f"measure {' '.join(step.modes)} as {step.name}"
    if isinstance(step, ConditionalStep):
        text = f"if {step.condition.to_text()} then {format_element(step.then)}"
        if step.otherwise is not None:
            text += f" else {format_element(step.otherwise)}"
        return text
    if isinstance(step, PointerStep):
        return f"pointer {step.watched} {step.pointer}"
    return f"dephase {' '.join(step.pointers)}"


def format_audit(directive: AuditDirective) -> str:
    if directive.kind == "no-signaling":
        return f"audit no-signaling {directive.other} {directive.wing}"
    if directive.kind == "cut-invariance":
        return f"audit cut-invariance {directive.step}"
    if directive.kind == "filter-equivalence":
        return f"audit filter-equivalence {directive.other} {directive.event.to_text()}"
    if directive.kind == "consistency":
        text = f"audit consistency {directive.event.to_text()}"
    else:
        text = "audit retro"
        if directive.projector.constraints:
            text += " " + directive.projector.to_text()
    if directive.expect is not None:
        text += f" expect {directive.expect!r}"
    return text


def print_scenario(doc: ScenarioDoc) -> str:
    """Canonical text of a document; parse_scenario(print_scenario(doc)) == doc"""
    lines = [f"scenario {doc.name}", f"modes {' '.join(doc.modes)}"]
    lines.append(
        "state " + " + ".join(f"{format_coefficient(t.amplitude)} {_format_ket(t.config)}" for t in doc.state)
    )
    for name, members in doc.wings.items():
        lines.append(f"wing {name}: {' '.join(members)}")
    if doc.support:
        lines.append("support " + " ".join(_format_ket(c) for c in doc.support))
    lines.extend(f"step {format_step(s)}" for s in doc.steps)
    lines.extend(f"forbid {p.to_text()}" for p in doc.forbidden)
    lines.extend(format_audit(a) for a in doc.audits)
    return "\n".join(lines) + "\n"


# ============================================================================
# CONVERSION
# ============================================================================

def build_protocol(doc: ScenarioDoc, prune: float = PRUNE_TOLERANCE) -> Protocol:
    initial = superpose([(t.config, t.amplitude) for t in doc.state], prune=prune)
    return Protocol(
        name=doc.name,
        modes=doc.modes,
        initial=initial,
        steps=doc.steps,
        wings=dict(doc.wings),
    )


def build_support(doc: ScenarioDoc) -> Optional[SourceSupport]:
    return SourceSupport.of(doc.support) if doc.support else None
