#!/usr/bin/env python3
"""Re-run every embedded published scenario and print a one-line verdict each.

Usage: python scripts/reproduce_examples.py [name ...]
"""

import sys

from grouprisk.fixtures import EXAMPLES, reproduce


def main(argv=None) -> int:
    names = (argv or sys.argv[1:]) or list(EXAMPLES)
    worst = 0
    for name in names:
        rep = reproduce(name)
        status = "PASS" if rep["passed"] else "FAIL"
        print(f"{name:5s} {status}")
        for c in rep["checks"]:
            mark = "ok " if c["passed"] else "BAD"
            print(f"      [{mark}] {c['check']}: {c['detail']}")
        worst = max(worst, 0 if rep["passed"] else 1)
    return worst


if __name__ == "__main__":
    sys.exit(main())
