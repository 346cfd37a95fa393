"""Compare necessary-mode BMC verdicts with the grid-trace oracle, chart by chart.

    python scripts/compare_oracle.py [SPEC]
"""

import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracle_compare import compare  # noqa: E402
from tscheck.dsl import load_spec  # noqa: E402
from tscheck.smt import Solver  # noqa: E402


def main() -> int:
    path = sys.argv[1] if len(sys.argv) > 1 else ROOT / "tests" / "fixtures" / "oracle_charts.tsc"
    spec = load_spec(path)
    solver = Solver(timeout=60)
    bad = 0
    for name, chart in spec.charts:
        t0 = time.perf_counter()
        c = compare(spec, name, chart, solver)
        how = "replayed" if c.replayed else f"{c.traces} traces"
        print(f"{name:12s} bmc {c.bmc:7s} oracle {str(c.oracle):5s} {how:14s} "
              f"{'ok' if c.agrees else 'DISAGREE'}  {time.perf_counter() - t0:.2f} s")
        bad += not c.agrees
    print(f"{len(spec.charts)} charts, {bad} disagreements")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
