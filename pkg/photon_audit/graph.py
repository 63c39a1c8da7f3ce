"""
LangGraph workflow for scenario simulation and auditing
"""

from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from photon_audit.models import (
    AuditDirective,
    AuditResult,
    BranchTree,
    JointDistribution,
    Protocol,
    RunOutputs,
    ScenarioDoc,
)
from photon_audit.nodes.load_scenario import load_scenario
from photon_audit.nodes.run_audits import run_audits
from photon_audit.nodes.simulate import simulate
from photon_audit.nodes.tolerance_check import tolerance_check
from photon_audit.settings import Settings, status


# State type for LangGraph
class PipelineState(TypedDict, total=False):
    builtin: Optional[str]
    source: Optional[str]
    text: Optional[str]
    condition: Optional[str]
    selected_audits: Optional[List[AuditDirective]]
    document: ScenarioDoc
    base_dir: Optional[Path]
    protocol: Protocol
    distribution: JointDistribution
    tree: BranchTree
    discarded_weight: float
    audit_results: List[AuditResult]
    outputs: RunOutputs
    tolerance_passed: bool
    tolerance_issues: List[str]
    processing_started: str
    processing_completed: str


def assemble_outputs(state: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    """Assemble distribution and audit results into the final RunOutputs object"""

    outputs = RunOutputs(
        scenario=state["document"].name,
        distribution=state["distribution"],
        audits=state.get("audit_results", []),
        discarded_weight=state.get("discarded_weight", 0.0),
        condition=state.get("condition"),
    )

    status(settings, "\n✓ Assembled final outputs:")
    status(settings, f"  - Outcomes: {len(outputs.distribution)}")
    status(settings, f"  - Audits: {len(outputs.audits)}")
    status(settings, f"  - Discarded weight: {outputs.discarded_weight:.15g}")

    return {**state, "outputs": outputs}


def create_workflow(settings: Settings):
    """
    Create the scenario processing workflow.

    Flow:
    1. Load Scenario → 2. Simulate → 3. Run Audits →
    4. Assemble Outputs → 5. Tolerance Check → END
    """

    workflow = StateGraph(PipelineState)

    # Add nodes
    workflow.add_node("load_scenario", lambda state: load_scenario(state, settings))
    workflow.add_node("simulate", lambda state: simulate(state, settings))
    workflow.add_node("run_audits", lambda state: run_audits(state, settings))
    workflow.add_node("assemble_outputs", lambda state: assemble_outputs(state, settings))
    workflow.add_node("tolerance_check", lambda state: tolerance_check(state, settings))

    # Define edges
    workflow.set_entry_point("load_scenario")
    workflow.add_edge("load_scenario", "simulate")
    workflow.add_edge("simulate", "run_audits")
    workflow.add_edge("run_audits", "assemble_outputs")
    workflow.add_edge("assemble_outputs", "tolerance_check")
    workflow.add_edge("tolerance_check", END)

    return workflow.compile()


def run_pipeline(initial_state: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    app = create_workflow(settings)
    started = datetime.now().isoformat()
    final_state = app.invoke({**initial_state, "processing_started": started})
    final_state["processing_completed"] = datetime.now().isoformat()

    status(settings, "\n" + "=" * 70)
    status(settings, f"SCENARIO {final_state['outputs'].scenario}")
    status(settings, f"Tolerance: {'✓ PASSED' if final_state['tolerance_passed'] else '✗ FAILED'}")
    status(settings, "=" * 70 + "\n")

    return final_state
