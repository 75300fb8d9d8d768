#!/usr/bin/env python3
"""Run the conditioning-stack invariant + gradient + probe suite and print
the JSON report. Equivalent to `camforge condcheck`.

Usage: python3 scripts/run_condcheck.py [--seed N]
"""

import argparse
import json
import sys

from camforge.cond.check import condcheck_report


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    report = condcheck_report(seed=args.seed)
    print(json.dumps(report, indent=2))
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
