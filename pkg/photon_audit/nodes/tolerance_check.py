"""
Step 5: Tolerance Check
Final verification that every audit passed and the distribution is a distribution
"""

import math
from typing import Any, Dict

from photon_audit.settings import Settings, status


def tolerance_check(state: Dict[str, Any], settings: Settings) -> Dict[str, Any]:
    outputs = state.get("outputs")

    if not outputs:
        return {
            **state,
            "tolerance_passed": False,
            "tolerance_issues": ["Missing outputs"],
        }

    issues = []

    total = math.fsum(p for _, p in outputs.distribution.entries)
    if abs(total - 1.0) > settings.audit_tolerance:
        issues.append(f"Distribution sums to {total:.15g}")
    negative = [str(r) for r, p in outputs.distribution.entries if p < 0.0]
    if negative:
        issues.append(f"Negative probabilities on {', '.join(negative)}")

    for result in outputs.audits:
        if result.passed:
            continue
        if result.error:
            issues.append(f"{result.label}: {result.error}")
        else:
            issues.append(f"{result.label}: value {result.value:.15g} outside tolerance")

    if not issues:
        status(settings, "✓ Tolerance check PASSED")
    else:
        status(settings, f"⚠ Tolerance check found {len(issues)} issues:")
        for issue in issues[:3]:
            status(settings, f"  - {issue}")

    return {
        **state,
        "tolerance_passed": not issues,
        "tolerance_issues": issues,
    }
