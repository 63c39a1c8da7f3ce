"""
photon_audit: exact state-vector simulation of single-photon linear-optics
scenarios, with audits for no-signaling, cut invariance, causal consistency,
filtering-vs-switching equivalence and backward collapse.
"""

from photon_audit.errors import PhotonAuditError
from photon_audit.processor import process_scenario, render_json
from photon_audit.scenario_loader import builtin_scenario, list_builtins

__all__ = [
    "PhotonAuditError",
    "builtin_scenario",
    "list_builtins",
    "process_scenario",
    "render_json",
]
