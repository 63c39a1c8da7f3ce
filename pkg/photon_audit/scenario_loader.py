"""
Scenario Loader - Loads built-in scenario files and scenario files from disk
"""

import difflib
from pathlib import Path
from typing import List, Optional, Union

from photon_audit.errors import ScenarioSyntaxError, UnknownScenarioError
from photon_audit.models import ScenarioDoc
from photon_audit.parser import UNIT_NORM_TOLERANCE, parse_scenario

SCENARIO_SUFFIX = ".scn"


def read_scenario_text(path: Path) -> str:
    """File contents as UTF-8; a bad byte is reported at its line and column"""
    data = path.read_bytes()
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line_start = data.rfind(b"\n", 0, exc.start) + 1
        raise ScenarioSyntaxError(
            f"invalid UTF-8 byte 0x{data[exc.start]:02x}",
            data.count(b"\n", 0, exc.start) + 1,
            exc.start - line_start + 1,
            ("UTF-8 text",),
        ) from None


class ScenarioLoader:
    """Loads scenario files from the bundled scenarios directory"""

    def __init__(self, scenarios_dir: Optional[str] = None):
        if scenarios_dir:
            self.scenarios_dir = Path(scenarios_dir)
        else:
            self.scenarios_dir = Path(__file__).parent / "scenarios"

    def list_scenarios(self) -> List[str]:
        if not self.scenarios_dir.exists():
            return []
        return sorted(f.stem for f in self.scenarios_dir.glob(f"*{SCENARIO_SUFFIX}"))

    def source_path(self, name: str) -> Path:
        path = self.scenarios_dir / f"{name}{SCENARIO_SUFFIX}"
        if not path.is_file():
            available = self.list_scenarios()
            close = difflib.get_close_matches(name, available, n=1)
            raise UnknownScenarioError(name, available, f"did you mean '{close[0]}'?" if close else None)
        return path

    def load_source(self, name: str) -> str:
        return read_scenario_text(self.source_path(name))

    def load(self, name: str, unit_norm_tolerance: float = UNIT_NORM_TOLERANCE) -> ScenarioDoc:
        return parse_scenario(self.load_source(name), name, unit_norm_tolerance)


# Global scenario loader instance
_scenario_loader = None


def get_scenario_loader() -> ScenarioLoader:
    global _scenario_loader
    if _scenario_loader is None:
        _scenario_loader = ScenarioLoader()
    return _scenario_loader


def builtin_scenario(name: str) -> ScenarioDoc:
    """Canonical document of a bundled scenario; unknown names list the available ones"""
    return get_scenario_loader().load(name)


def list_builtins() -> List[str]:
    return get_scenario_loader().list_scenarios()


def load_scenario_file(path: Union[str, Path], unit_norm_tolerance: float = UNIT_NORM_TOLERANCE) -> ScenarioDoc:
    """Parse a scenario file; the file stem names it unless it has a `scenario` line"""
    path = Path(path)
    return parse_scenario(read_scenario_text(path), path.stem, unit_norm_tolerance)
