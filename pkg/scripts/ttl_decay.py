#!/usr/bin/env python3
"""Sweep attacker delays against a cached leak to show the exploitation
window closing as entries expire. Fully deterministic: delays advance the
lab's simulated clock, not wall time."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import requests  # noqa: E402

from wcdscan.detector import MarkerSet, WcdTestConfig, run_wcd_test  # noqa: E402
from wcdscan.http_engine import (  # noqa: E402
    Identity,
    LoginDescriptor,
    RateLimiter,
    Role,
    Transport,
    maintain_session,
)
from wcdscan.lab import catalog  # noqa: E402
from wcdscan.lab.server import LabServer  # noqa: E402
from wcdscan.url_toolkit import (  # noqa: E402
    PathConfusionTechnique,
    RandomNameGenerator,
    parse_url,
)

DELAYS = [0, 1800, 3600, 7200, 86400]


def main() -> int:
    site = catalog.classic_site()
    server = LabServer([site]).start()
    transport = Transport(resolve_overrides=server.resolve_overrides())
    limiter = RateLimiter(rate=1000, burst=100)

    def advance(seconds: float) -> None:
        requests.get(
            f"http://{server.address}:{server.port}/_lab/advance",
            params={"seconds": seconds},
            headers={"Host": site.host},
            timeout=10,
        )

    def reset() -> None:
        requests.get(
            f"http://{server.address}:{server.port}/_lab/reset",
            headers={"Host": site.host},
            timeout=10,
        )

    print(f"default TTL: {site.cache_profile.default_ttl}s")
    print(f"{'attacker delay (s)':>20}{'exploitable':>14}")
    try:
        for delay in DELAYS:
            reset()
            victim = Identity(
                role=Role.VICTIM,
                credentials=LoginDescriptor(
                    url=f"http://{site.host}/login",
                    fields={"username": "victim", "password": catalog.VICTIM_PASSWORD},
                ),
            )
            attacker = Identity(
                role=Role.ATTACKER,
                credentials=LoginDescriptor(
                    url=f"http://{site.host}/login",
                    fields={"username": "attacker", "password": catalog.ATTACKER_PASSWORD},
                ),
            )
            maintain_session(victim, limiter, transport)
            maintain_session(attacker, limiter, transport)
            config = WcdTestConfig(
                names=RandomNameGenerator(seed=delay),
                rate_limiter=limiter,
                transport=transport,
                attacker_delay=delay,
                delay_fn=advance,
            )
            verdict = run_wcd_test(
                parse_url(f"http://{site.host}/account.php"),
                PathConfusionTechnique.PATH_PARAMETER,
                victim,
                attacker,
                MarkerSet(list(catalog.victim_markers(site.name).items())),
                config,
            )
            print(f"{delay:>20}{str(verdict.vulnerable):>14}")
    finally:
        server.stop()
    return 0


if __name__ == "__main__":
    sys.exit(main())
