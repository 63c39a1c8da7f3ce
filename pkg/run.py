#!/usr/bin/env python3
"""
Simple runner for the scenario auditor
Usage: python run.py [scenario.scn | --builtin NAME] [--json]
       python run.py <run|audit|list|fmt> ...
"""

import sys

from photon_audit.cli import run_cli

COMMANDS = ("run", "audit", "list", "fmt")


def main():
    argv = sys.argv[1:]
    if not any(arg in COMMANDS for arg in argv):
        argv = ["run"] + (argv or ["--builtin", "eraser-contingent"])
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
