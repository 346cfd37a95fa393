"""Run the consistency check on the bundled traffic rules and print the report.

    python scripts/run_traffic_rules.py [--out DIR] [--jobs N]
"""

import argparse
import sys
from pathlib import Path

from tscheck.cli import RunConfig, run_check
from tscheck.dsl import load_spec

CORPUS = Path(__file__).resolve().parent.parent / "src" / "tscheck" / "corpus"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tscheck-out/traffic_rules")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    path = CORPUS / "traffic_rules.tsc"
    spec = load_spec(path)
    code, _ = run_check(RunConfig("check", [str(path)], spec.config, out=args.out, jobs=args.jobs), spec)
    return code


if __name__ == "__main__":
    sys.exit(main())
