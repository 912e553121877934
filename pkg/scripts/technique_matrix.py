#!/usr/bin/env python3
"""Enumerate ground truth over the scenario matrix and print which techniques
exploit which origin/cache combinations, plus the uniqueness matrix (sites
exploitable by the row technique where the column technique fails)."""

import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wcdscan.lab import catalog  # noqa: E402
from wcdscan.lab.oracle import enumerate_oracle  # noqa: E402
from wcdscan.url_toolkit import PathConfusionTechnique  # noqa: E402


def main() -> int:
    sites = catalog.matrix_sites()
    techniques = list(PathConfusionTechnique)
    truth = enumerate_oracle(sites)

    exploited = defaultdict(set)
    for (name, technique), vulnerable in truth.items():
        if vulnerable:
            exploited[technique].add(name)

    print(f"{len(sites)} scenario sites, {len(techniques)} techniques\n")
    print(f"{'technique':<22}{'vulnerable sites':>18}")
    for technique in techniques:
        print(f"{technique.value:<22}{len(exploited[technique]):>18}")
    any_encoded = set().union(
        *(exploited[t] for t in techniques if t is not PathConfusionTechnique.PATH_PARAMETER)
    )
    total = set().union(*exploited.values())
    print(f"{'all encoded variants':<22}{len(any_encoded):>18}")
    print(f"{'any technique':<22}{len(total):>18}")

    only_variants = total - exploited[PathConfusionTechnique.PATH_PARAMETER]
    print(f"\nsites exploitable only via an encoded variant: {len(only_variants)}")

    print("\nuniqueness (row exploits, column misses):")
    short = {t: t.value.replace("encoded_", "") for t in techniques}
    print(" " * 16 + "".join(f"{short[t]:>12}" for t in techniques))
    for ti in techniques:
        row = f"{short[ti]:<16}"
        for tj in techniques:
            cell = "-" if ti is tj else str(len(exploited[ti] - exploited[tj]))
            row += f"{cell:>12}"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
