"""Pruning statistics for the nine-rule specification without a subset-size limit.

    python scripts/pruning_stats.py [--jobs N] [--file SPEC]
"""

import argparse
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from tscheck.cli import format_report
from tscheck.consistency import analyze
from tscheck.dsl import load_spec

CORPUS = Path(__file__).resolve().parent.parent / "src" / "tscheck" / "corpus"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--file", default=str(CORPUS / "nine_rules.tsc"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    spec = load_spec(args.file)
    cfg = replace(spec.config, max_subset=None)
    rep = analyze(spec, cfg, jobs=args.jobs, witnesses=False)
    print(format_report(rep, cfg), end="")
    sizes = Counter(1 + len(c.context) for c in rep.cases)
    print("solver cases by subset size:", dict(sorted(sizes.items())))
    print("outcomes:", dict(sorted(Counter(c.outcome for c in rep.cases).items())))
    return 0


if __name__ == "__main__":
    sys.exit(main())
