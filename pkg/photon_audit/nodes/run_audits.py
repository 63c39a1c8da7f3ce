"""
Step 3: Run Audits
Evaluate the document's audit directives (or an explicit selection) against the protocol
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from photon_audit.audits import (
    causal_consistency_audit,
    compare_filtering,
    cut_invariance_audit,
    no_signaling_audit,
    retro_audit,
)
from photon_audit.errors import (
    AuditPreconditionError,
    CausalityViolationError,
    ConditioningOnNullError,
    EmptyPostselectionError,
    ScenarioSemanticError,
)
from photon_audit.models import AuditDirective, AuditResult, Protocol, ReversalReport, ScenarioDoc
from photon_audit.parser import build_protocol, build_support, format_audit
from photon_audit.predicates import Projector
from photon_audit.scenario_loader import get_scenario_loader, load_scenario_file
from photon_audit.settings import Settings, status

# failures that belong to the audit, not to the input
AUDIT_ERRORS = (
    AuditPreconditionError,
    CausalityViolationError,
    ConditioningOnNullError,
    EmptyPostselectionError,
)


def run_audits(state: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    """
    Run every selected directive; forbidden events count as consistency
    audits expecting probability zero.
    """

    document: ScenarioDoc = state["document"]
    protocol: Protocol = state["protocol"]
    selected = state.get("selected_audits")
    if selected is None:
        selected = list(document.audits) + [
            AuditDirective(kind="consistency", event=event) for event in document.forbidden
        ]

    context = _AuditContext(document, protocol, state.get("base_dir"), settings)
    results: List[AuditResult] = []
    for directive in selected:
        label = format_audit(directive)[len("audit "):]
        try:
            result = context.evaluate(directive)
        except AUDIT_ERRORS as exc:
            result = AuditResult(kind=directive.kind, passed=False, error=str(exc))
        results.append(result.model_copy(update={"label": label}))

    failed = [r for r in results if not r.passed]
    if failed:
        status(settings, f"⚠ Audits: {len(results) - len(failed)} passed, {len(failed)} failed")
    else:
        status(settings, f"✓ Audits: {len(results)} passed")

    return {
        **state,
        "audit_results": results,
    }


class _AuditContext:
    def __init__(self, document: ScenarioDoc, protocol: Protocol, base_dir: Optional[Path], settings: Settings):
        self.document = document
        self.protocol = protocol
        self.base_dir = base_dir
        self.settings = settings
        self._others: Dict[str, Protocol] = {}

    @property
    def tol(self) -> float:
        return self.settings.audit_tolerance

    def other(self, ref: str) -> Protocol:
        """A builtin name, or a path relative to the document being audited"""
        if ref not in self._others:
            looks_like_path = "/" in ref or ref.endswith(".scn")
            if looks_like_path or self.base_dir is not None and (self.base_dir / ref).is_file():
                path = Path(ref)
                if not path.is_absolute() and self.base_dir is not None:
                    path = self.base_dir / path
                try:
                    doc = load_scenario_file(path, self.settings.unit_norm_tolerance)
                except OSError as exc:
                    raise ScenarioSemanticError(
                        f"cannot read scenario '{ref}': {exc.strerror or exc}"
                    ) from exc
            else:
                doc = get_scenario_loader().load(ref, self.settings.unit_norm_tolerance)
            self._others[ref] = build_protocol(doc, self.settings.prune_tolerance)
        return self._others[ref]

    def evaluate(self, directive: AuditDirective) -> AuditResult:
        threshold = self.settings.weight_threshold
        kind = directive.kind

        if kind == "no-signaling":
            value = no_signaling_audit(self.protocol, self.other(directive.other), directive.wing, threshold)
            return AuditResult(
                kind=kind, value=value, passed=value <= self.tol,
                detail={"other": directive.other, "wing": directive.wing},
            )

        if kind == "cut-invariance":
            value = cut_invariance_audit(self.protocol, directive.step, threshold)
            return AuditResult(kind=kind, value=value, passed=value <= self.tol, detail={"step": directive.step})

        if kind == "consistency":
            value = causal_consistency_audit(self.protocol, directive.event, threshold)
            expect = 0.0 if directive.expect is None else directive.expect
            return AuditResult(
                kind=kind, value=value, passed=abs(value - expect) <= self.tol,
                detail={"event": directive.event.to_text(), "expect": expect},
            )

        if kind == "filter-equivalence":
            comparison = compare_filtering(self.protocol, self.other(directive.other), directive.event, threshold)
            bookkeeping = abs(comparison.discarded_weight - (1.0 - comparison.gate_probability))
            return AuditResult(
                kind=kind,
                value=comparison.deviation,
                passed=comparison.deviation <= self.tol and bookkeeping <= self.tol,
                detail={
                    "other": directive.other,
                    "gate": directive.event.to_text(),
                    "discarded_weight": comparison.discarded_weight,
                    "gate_probability": comparison.gate_probability,
                },
            )

        support = build_support(self.document)
        if support is None:
            raise AuditPreconditionError(f"scenario '{self.document.name}' declares no source support")
        projector = directive.projector or Projector()
        report = retro_audit(self.protocol, support, projector)
        passed = _partition_holds(report, self.tol)
        if directive.expect is not None:
            passed = passed and abs(report.forbidden_probability - directive.expect) <= self.tol
        return AuditResult(
            kind=kind,
            value=report.forbidden_probability,
            passed=passed,
            detail=reversal_detail(report, projector),
        )


def _partition_holds(report: ReversalReport, tol: float) -> bool:
    """Allowed and forbidden parts tile the reversed state, which keeps unit norm"""
    parts = [a for _, a in report.allowed_component] + [a for _, a in report.forbidden_component]
    weight = sum(abs(a) ** 2 for a in parts)
    return (
        len(parts) == len(report.reversed_state)
        and abs(weight - report.reversed_state.norm_sq) <= tol
        and abs(report.reversed_state.norm_sq - 1.0) <= tol
    )


def _amplitudes(component) -> List[Dict[str, Any]]:
    return [
        {"config": dict(sorted(config.items())), "re": amp.real, "im": amp.imag}
        for config, amp in component
    ]


def reversal_detail(report: ReversalReport, projector: Projector) -> Dict[str, Any]:
    return {
        "projector": projector.to_text(),
        "reversed": _amplitudes(report.reversed_state.labeled_terms()),
        "allowed": _amplitudes(report.allowed_component),
        "forbidden": _amplitudes(report.forbidden_component),
    }
