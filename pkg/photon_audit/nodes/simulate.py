"""
Step 2: Simulate
Run the protocol exactly by branch enumeration, optionally post-selecting on a condition
"""

from typing import Any, Dict

from photon_audit.engine import run_protocol
from photon_audit.errors import ScenarioSemanticError
from photon_audit.measurement import postselect
from photon_audit.models import MeasureStep
from photon_audit.parser import build_protocol, parse_predicate
from photon_audit.settings import Settings, status


def simulate(state: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    document = state["document"]
    protocol = build_protocol(document, settings.prune_tolerance)
    distribution, tree = run_protocol(protocol, settings.weight_threshold)
    discarded = 0.0

    condition = state.get("condition")
    if condition:
        gate = parse_predicate(condition)
        records = {s.name for s in protocol.steps if isinstance(s, MeasureStep)}
        unknown = sorted(gate.names() - records)
        if unknown:
            raise ScenarioSemanticError(
                f"condition reads record(s) {unknown} that '{document.name}' never measures"
            )
        kept = postselect(tree.to_ensemble(), gate)
        distribution = kept.distribution()
        discarded = kept.discarded_weight
        status(settings, f"✓ Post-selected on '{gate.to_text()}': discarded weight {discarded:.15g}")

    status(settings, f"✓ Simulated {len(tree.leaves())} branches → {len(distribution)} outcomes")

    return {
        **state,
        "protocol": protocol,
        "distribution": distribution,
        "tree": tree,
        "discarded_weight": discarded,
    }
