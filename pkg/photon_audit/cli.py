"""
Command line interface: run, audit, list and fmt subcommands.

Data goes to stdout, diagnostics to stderr. Exit status is 0 on success,
1 when an audit fails, 2 on unreadable or invalid input.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

from photon_audit.audits import deferable_steps
from photon_audit.errors import PhotonAuditError, ScenarioSyntaxError
from photon_audit.models import AuditDirective, ScenarioDoc
from photon_audit.parser import (
    AUDIT_KINDS,
    build_protocol,
    parse_predicate,
    parse_projector,
    print_scenario,
)
from photon_audit.processor import print_outputs, process_scenario, render_json, save_outputs
from photon_audit.scenario_loader import get_scenario_loader, load_scenario_file
from photon_audit.settings import Settings, load_settings

EXIT_OK = 0
EXIT_AUDIT_FAILED = 1
EXIT_BAD_INPUT = 2


class UsageError(Exception):
    """Command line options that cannot be honoured"""


class _Diagnostic(Exception):
    def __init__(self, text: str):
        super().__init__(text)
        self.text = text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photon-audit",
        description="Exact simulation and consistency audits for single-photon linear-optics scenarios.",
    )
    parser.add_argument("--env", default=".env", help="settings file (dotenv format)")
    parser.add_argument("-v", "--verbose", action="store_true", help="print pipeline progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", nargs="?", help="scenario file")
        p.add_argument("--builtin", metavar="NAME", help="bundled scenario instead of a file")

    run = sub.add_parser("run", help="print the outcome distribution and the declared audits")
    add_source(run)
    run.add_argument("--json", action="store_true", help="emit JSON")
    run.add_argument("--tol", type=float, help="audit tolerance (default 1e-12)")
    run.add_argument("--condition", metavar="EXPR", help="post-select on a record predicate")
    run.add_argument("--save", metavar="DIR", help="also write the JSON outputs into DIR")

    audit = sub.add_parser("audit", help="run audits of one kind")
    add_source(audit)
    audit.add_argument("--kind", required=True, choices=AUDIT_KINDS)
    audit.add_argument("--other", help="scenario to compare with (builtin name or path)")
    audit.add_argument("--wing", help="wing whose marginals must not change")
    audit.add_argument("--step", help="measure step index or record name to defer")
    audit.add_argument("--event", metavar="EXPR", help="event or gate predicate")
    audit.add_argument("--projector", metavar="MODES", help="collapse projector, e.g. 'gr=1, G0=1'")
    audit.add_argument("--expect", type=float, help="expected probability")
    audit.add_argument("--json", action="store_true", help="emit JSON")
    audit.add_argument("--tol", type=float, help="audit tolerance (default 1e-12)")

    sub.add_parser("list", help="list bundled scenarios")

    fmt = sub.add_parser("fmt", help="print a scenario in canonical form")
    add_source(fmt)

    return parser


def _load_document(args: argparse.Namespace, settings: Settings) -> Tuple[ScenarioDoc, Optional[Path], str]:
    if bool(args.file) == bool(args.builtin):
        raise UsageError("give either a scenario file or --builtin NAME")
    if args.builtin:
        label = f"<builtin {args.builtin}>"
        loader = get_scenario_loader()
        try:
            return loader.load(args.builtin, settings.unit_norm_tolerance), None, label
        except ScenarioSyntaxError as exc:
            raise _Diagnostic(f"{label}:{exc}") from exc
    path = Path(args.file)
    try:
        return load_scenario_file(path, settings.unit_norm_tolerance), path.parent, str(path)
    except ScenarioSyntaxError as exc:
        raise _Diagnostic(f"{path}:{exc}") from exc
    except OSError as exc:
        raise _Diagnostic(f"error: cannot read '{path}': {exc.strerror or exc}") from exc


def _parse_option(flag: str, parse, text: str):
    try:
        return parse(text)
    except ScenarioSyntaxError as exc:
        raise _Diagnostic(f"{flag}:{exc}") from exc


def _selected_audits(args: argparse.Namespace, document: ScenarioDoc) -> List[AuditDirective]:
    """Directives for `audit --kind K`: from explicit options, else the declared ones"""
    kind = args.kind
    explicit = any(
        getattr(args, name) is not None for name in ("other", "wing", "step", "event", "projector", "expect")
    )
    if explicit:
        event = _parse_option("--event", parse_predicate, args.event) if args.event else None
        projector = _parse_option("--projector", parse_projector, args.projector) if args.projector else None
        required = {
            "no-signaling": ("other", "wing"),
            "cut-invariance": ("step",),
            "consistency": ("event",),
            "filter-equivalence": ("other", "event"),
            "retro": (),
        }[kind]
        missing = [f"--{name}" for name in required if getattr(args, name) is None]
        if missing:
            raise UsageError(f"--kind {kind} needs {' and '.join(missing)}")
        return [
            AuditDirective(
                kind=kind, other=args.other, wing=args.wing, step=args.step,
                event=event, projector=projector, expect=args.expect,
            )
        ]

    declared = [d for d in document.audits if d.kind == kind]
    if kind == "consistency":
        declared += [AuditDirective(kind=kind, event=e) for e in document.forbidden]
    if declared:
        return declared
    if kind == "retro":
        return [AuditDirective(kind=kind)]
    if kind == "cut-invariance":
        protocol = build_protocol(document)
        return [AuditDirective(kind=kind, step=str(i)) for i in deferable_steps(protocol)]
    raise UsageError(f"scenario '{document.name}' declares no {kind} audit; pass the audit options explicitly")


def _command_list(out: TextIO) -> int:
    for name in get_scenario_loader().list_scenarios():
        print(name, file=out)
    return EXIT_OK


def _command_fmt(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    document, _, _ = _load_document(args, settings)
    out.write(print_scenario(document))
    return EXIT_OK


def _command_run(args: argparse.Namespace, settings: Settings, out: TextIO) -> int:
    document, base_dir, _ = _load_document(args, settings)
    audits = None
    condition = getattr(args, "condition", None)
    if args.command == "audit":
        audits = _selected_audits(args, document)
    elif condition:
        _parse_option("--condition", parse_predicate, condition)

    result = process_scenario(
        condition=condition,
        audits=audits,
        settings=settings,
        document=document,
        base_dir=base_dir,
    )

    if args.json:
        out.write(render_json(result["outputs"]))
    else:
        print_outputs(result, out, show_distribution=args.command == "run")
    if getattr(args, "save", None):
        save_outputs(result, args.save)

    return EXIT_OK if result["tolerance_passed"] else EXIT_AUDIT_FAILED


def run_cli(
    argv: Optional[Sequence[str]] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_BAD_INPUT

    try:
        settings = load_settings(
            args.env,
            audit_tolerance=getattr(args, "tol", None),
            verbose=True if args.verbose else None,
        )
        if args.command == "list":
            return _command_list(out)
        if args.command == "fmt":
            return _command_fmt(args, settings, out)
        return _command_run(args, settings, out)
    except _Diagnostic as exc:
        print(exc.text, file=err)
    except (UsageError, PhotonAuditError) as exc:
        print(f"error: {exc}", file=err)
    return EXIT_BAD_INPUT


def main() -> None:
    sys.exit(run_cli())
