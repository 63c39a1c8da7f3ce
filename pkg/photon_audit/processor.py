"""
Main processor interface: run a scenario through the pipeline and render the results
"""

import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

from photon_audit.graph import run_pipeline
from photon_audit.models import AuditDirective, AuditResult, RunOutputs, ScenarioDoc
from photon_audit.settings import Settings, load_settings

SIGNIFICANT_DIGITS = 15


def process_scenario(
    builtin: Optional[str] = None,
    source: Optional[str] = None,
    text: Optional[str] = None,
    condition: Optional[str] = None,
    audits: Optional[List[AuditDirective]] = None,
    settings: Optional[Settings] = None,
    document: Optional[ScenarioDoc] = None,
    base_dir: Optional[Path] = None,
) -> Dict[str, Any]:
    """
    Simulate and audit one scenario.

    Args:
        builtin: Name of a bundled scenario
        source: Path to a scenario file
        text: Scenario text, used when neither builtin nor source is given
        condition: Record predicate to post-select the distribution on
        audits: Directives to run instead of the ones the document declares
        settings: Tolerances and verbosity (defaults from `.env` when omitted)
        document: An already parsed document; skips loading
        base_dir: Directory that relative `other` scenario references resolve against

    Returns:
        Final pipeline state; `outputs` holds the RunOutputs
    """

    settings = settings or load_settings()
    initial: Dict[str, Any] = {"builtin": builtin, "source": source, "text": text, "condition": condition}
    if audits is not None:
        initial["selected_audits"] = list(audits)
    if document is not None:
        initial.update(document=document, base_dir=base_dir)
    return run_pipeline(initial, settings)


def canonical_float(value: float) -> float:
    # 15 significant digits; adding 0.0 folds -0.0 into 0.0
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}") + 0.0


def _canonical(value: Any) -> Any:
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, float):
        return canonical_float(value)
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    return str(value)


def audit_json(result: AuditResult) -> Dict[str, Any]:
    entry: Dict[str, Any] = {
        "kind": result.kind,
        "label": result.label,
        "value": result.value,
        "pass": result.passed,
    }
    if result.detail:
        entry["detail"] = result.detail
    if result.error:
        entry["error"] = result.error
    return _canonical(entry)


def outputs_json(outputs: RunOutputs) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "scenario": outputs.scenario,
        "distribution": [
            {"record": record.as_dict(), "p": canonical_float(p)}
            for record, p in outputs.distribution.entries
        ],
        "audits": [audit_json(r) for r in outputs.audits],
        "discarded_weight": canonical_float(outputs.discarded_weight),
    }
    if outputs.condition:
        data["condition"] = outputs.condition
    return data


def render_json(outputs: RunOutputs) -> str:
    """Byte-stable JSON: sorted keys, floats at 15 significant digits"""
    return json.dumps(outputs_json(outputs), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def save_outputs(result: Dict[str, Any], output_dir: str = "results") -> str:
    """Save outputs to a JSON file named after the scenario"""

    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)

    outputs = result["outputs"]
    output_data = outputs_json(outputs)
    output_data["metadata"] = {
        "tolerance_passed": result.get("tolerance_passed", False),
        "tolerance_issues": result.get("tolerance_issues", []),
        "processing_started": result.get("processing_started"),
        "processing_completed": result.get("processing_completed"),
    }

    output_file = output_path / f"{outputs.scenario}.json"
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(output_data, f, indent=2, sort_keys=True, ensure_ascii=False)

    return str(output_file)


def _format_value(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{canonical_float(value):.15g}"


def print_outputs(
    result: Dict[str, Any], stream: Optional[TextIO] = None, show_distribution: bool = True
) -> None:
    """Print outputs in a readable format"""

    outputs: RunOutputs = result["outputs"]
    stream = stream or sys.stdout

    def emit(line: str = "") -> None:
        print(line, file=stream)

    emit("=" * 70)
    emit(f"SCENARIO {outputs.scenario}")
    emit("=" * 70)

    if show_distribution:
        heading = f"\nDISTRIBUTION ({len(outputs.distribution)})"
        if outputs.condition:
            heading += f" given {outputs.condition}"
        emit(heading)
        emit("-" * 70)
        for record, p in outputs.distribution.entries:
            emit(f"  {str(record):<40} {_format_value(p)}")
        if outputs.condition:
            emit(f"  discarded weight: {_format_value(outputs.discarded_weight)}")

    if outputs.audits:
        emit(f"\nAUDITS ({len(outputs.audits)})")
        emit("-" * 70)
        for audit in outputs.audits:
            mark = "✓" if audit.passed else "✗"
            emit(f"  {mark} {audit.label:<50} {_format_value(audit.value)}")
            if audit.error:
                emit(f"      {audit.error}")
            if audit.kind == "retro" and audit.detail:
                _print_reversal(audit.detail, emit)

    emit("\n" + "=" * 70)


def _print_reversal(detail: Dict[str, Any], emit) -> None:
    for part in ("reversed", "forbidden"):
        terms = detail.get(part, [])
        if not terms:
            continue
        emit(f"      {part}:")
        for term in terms:
            config = ", ".join(f"{m}={b}" for m, b in term["config"].items())
            amp = complex(canonical_float(term["re"]), canonical_float(term["im"]))
            emit(f"        {amp:.15g} |{config}>")
