import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from wcdscan.http_engine import RateLimiter, Transport  # noqa: E402
from wcdscan.lab import catalog  # noqa: E402
from wcdscan.lab.server import LabServer  # noqa: E402


def fast_limiter() -> RateLimiter:
    return RateLimiter(rate=10000.0, burst=1000)


@pytest.fixture(scope="session")
def support_lab():
    """One lab server carrying the support sites, shared across tests that
    only read from it; tests that mutate state use /_lab/reset."""
    server = LabServer(catalog.support_sites()).start()
    yield server
    server.stop()


@pytest.fixture(scope="session")
def support_transport(support_lab):
    return Transport(resolve_overrides=support_lab.resolve_overrides())


@pytest.fixture()
def limiter():
    return fast_limiter()
