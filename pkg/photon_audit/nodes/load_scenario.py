"""
Step 1: Load Scenario
Resolve the requested scenario (built-in name, file, or inline text) to a parsed document
"""

from pathlib import Path
from typing import Any, Dict

from photon_audit.parser import parse_scenario
from photon_audit.scenario_loader import get_scenario_loader, load_scenario_file
from photon_audit.settings import Settings, status


def load_scenario(state: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    """
    Parse the scenario named by `builtin`, `source` or `text`.

    A document already present in the state is used as is. `base_dir` is set
    for file sources so audits can resolve sibling scenario files.
    """

    if state.get("document") is not None:
        document = state["document"]
        base_dir = state.get("base_dir")
    elif state.get("builtin"):
        document = get_scenario_loader().load(state["builtin"], settings.unit_norm_tolerance)
        base_dir = None
    elif state.get("source"):
        path = Path(state["source"])
        document = load_scenario_file(path, settings.unit_norm_tolerance)
        base_dir = path.parent
    else:
        document = parse_scenario(state.get("text", ""), "inline", settings.unit_norm_tolerance)
        base_dir = None

    status(
        settings,
        f"✓ Loaded scenario '{document.name}': {len(document.modes)} modes, "
        f"{len(document.steps)} steps, {len(document.audits)} audits",
    )

    return {
        **state,
        "document": document,
        "base_dir": base_dir,
    }
