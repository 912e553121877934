#!/usr/bin/env python3
"""Run the full scanner-vs-oracle selfcheck over the 128-site matrix and
print a per-technique summary. Exits non-zero on any disagreement."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wcdscan.pipeline import run_selfcheck  # noqa: E402
from wcdscan.url_toolkit import PathConfusionTechnique  # noqa: E402


def main() -> int:
    report = run_selfcheck()
    print(
        f"{len(report.sites)} sites x {len(PathConfusionTechnique)} techniques "
        f"in {report.elapsed_seconds:.1f}s"
    )
    print(f"{'technique':<22}{'oracle-vulnerable sites':>26}{'scanner agrees':>16}")
    for technique in PathConfusionTechnique:
        expected = sum(
            1 for (_, t), v in report.oracle.items() if t is technique and v
        )
        agreed = sum(
            1
            for key, v in report.scanned.items()
            if key[1] is technique and v == report.oracle[key]
        )
        print(f"{technique.value:<22}{expected:>26}{agreed:>16}")
    print(f"disagreements: {len(report.disagreements)}  inconclusive: {report.inconclusive}")
    for name, technique, expected, got in report.disagreements:
        print(f"  {name} {technique.value}: oracle={expected} scanner={got}")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
