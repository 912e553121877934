"""End-to-end orchestration: seed pool -> crawl -> attack -> verdicts.

Sites are scanned by a small worker pool (one worker per domain at a time);
within a site everything is sequential, which keeps session state simple and
pacing honest. ``selfcheck`` wires the scanner against the in-process lab
and diffs every (site, technique) verdict against the ground-truth oracle.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Callable

from .crawler import (
    AttackSurface,
    SeedPool,
    SiteConfig,
    crawl_domain,
    filter_marked_pages,
    site_config_from_dict,
)
from .detector import (
    MarkerSet,
    RandomnessConfig,
    ScanVerdict,
    WcdTestConfig,
    run_wcd_test,
)
from .http_engine import (
    DEFAULT_LOGOUT_PATTERNS,
    DEFAULT_USER_AGENT,
    AuthFailure,
    Identity,
    RateLimiter,
    Role,
    Transport,
    maintain_session,
)
from .lab import catalog
from .lab.oracle import enumerate_oracle
from .lab.server import LabServer
from .lab.sim import SimSite
from .reporting import DEFAULT_FINGERPRINTS, CdnFingerprint, cdn_label
from .url_toolkit import PathConfusionTechnique, RandomNameGenerator

log = logging.getLogger(__name__)

ALL_TECHNIQUES = tuple(PathConfusionTechnique)


@dataclass
class ScanSettings:
    """Everything a scan run needs beyond the seed pool itself."""

    techniques: tuple[PathConfusionTechnique, ...] = ALL_TECHNIQUES
    budget: int = 500
    mode: str = "full"  # "full" or "marker-gated"
    rate: float = 2.0
    burst: int = 4
    extension: str = "css"
    seed: int | None = None
    attacker_delay: float = 0.0
    delay_fn: Callable[[float], None] = time.sleep
    workers: int = 4
    user_agent: str = DEFAULT_USER_AGENT
    transport: Transport = field(default_factory=Transport)
    randomness: RandomnessConfig = field(default_factory=RandomnessConfig)
    fingerprints: tuple[CdnFingerprint, ...] = DEFAULT_FINGERPRINTS
    logout_patterns: tuple[str, ...] = DEFAULT_LOGOUT_PATTERNS
    respect_robots: bool = False
    embed_query: str | None = None
    journal: "LockedJournal | None" = None


class LockedJournal:
    """Serializes crawl-journal writes from concurrent site workers."""

    def __init__(self, fh):
        self._fh = fh
        self._lock = threading.Lock()

    def write(self, text: str) -> None:
        with self._lock:
            self._fh.write(text)
            self._fh.flush()


@dataclass
class SiteScanResult:
    site: SiteConfig
    surface: AttackSurface | None
    verdicts: list[ScanVerdict]
    error: str | None = None


@dataclass
class ScanRunResult:
    site_results: list[SiteScanResult]

    @property
    def verdicts(self) -> list[ScanVerdict]:
        return [v for r in self.site_results for v in r.verdicts]

    @property
    def errors(self) -> list[tuple[str, str]]:
        return [(r.site.primary_domain, r.error) for r in self.site_results if r.error]


def _names_for(site: SiteConfig, settings: ScanSettings) -> RandomNameGenerator:
    if settings.seed is None:
        return RandomNameGenerator()
    basis = f"{settings.seed}|{site.primary_domain}".encode()
    return RandomNameGenerator(int.from_bytes(hashlib.sha1(basis).digest()[:8], "big"))


def scan_site(
    site: SiteConfig, settings: ScanSettings, rate_limiter: RateLimiter
) -> SiteScanResult:
    victim = Identity(
        role=Role.VICTIM, credentials=site.victim_login, user_agent=settings.user_agent
    )
    attacker = Identity(
        role=Role.ATTACKER, credentials=site.attacker_login, user_agent=settings.user_agent
    )
    try:
        if victim.credentials:
            maintain_session(victim, rate_limiter, settings.transport)
        if attacker.credentials:
            maintain_session(attacker, rate_limiter, settings.transport)
    except AuthFailure as exc:
        return SiteScanResult(site=site, surface=None, verdicts=[], error=str(exc))

    surface = crawl_domain(
        site,
        victim,
        site.budget or settings.budget,
        rate_limiter,
        settings.transport,
        seed=settings.seed or 0,
        logout_patterns=settings.logout_patterns,
        respect_robots=settings.respect_robots,
        journal=settings.journal,
    )
    markers = site.markers or MarkerSet([])
    if settings.mode == "marker-gated":
        surface = filter_marked_pages(surface, markers)

    config = WcdTestConfig(
        extension=settings.extension,
        randomness=settings.randomness,
        names=_names_for(site, settings),
        rate_limiter=rate_limiter,
        transport=settings.transport,
        attacker_delay=settings.attacker_delay,
        delay_fn=settings.delay_fn,
        embed_query=settings.embed_query,
        label_fn=lambda ex: cdn_label(ex, settings.fingerprints),
    )
    verdicts = []
    for page in surface.pages:
        for technique in settings.techniques:
            if victim.credentials:
                maintain_session(victim, rate_limiter, settings.transport)
            if attacker.credentials:
                maintain_session(attacker, rate_limiter, settings.transport)
            verdicts.append(
                run_wcd_test(page, technique, victim, attacker, markers, config)
            )
    return SiteScanResult(site=site, surface=surface, verdicts=verdicts)


def scan_pool(pool: SeedPool, settings: ScanSettings) -> ScanRunResult:
    """Scan every site in the pool, one concurrent worker per domain."""
    rate_limiter = RateLimiter(rate=settings.rate, burst=settings.burst)
    results: list[SiteScanResult] = []
    if not pool.sites:
        return ScanRunResult(site_results=[])
    with ThreadPoolExecutor(max_workers=max(1, settings.workers)) as pool_exec:
        futures = {
            pool_exec.submit(scan_site, site, settings, rate_limiter): site
            for site in pool.sites
        }
        for future in as_completed(futures):
            try:
                results.append(future.result())
            except Exception as exc:  # defensive: a site crash must not kill the run
                site = futures[future]
                log.exception("site %s scan failed", site.primary_domain)
                results.append(
                    SiteScanResult(site=site, surface=None, verdicts=[], error=str(exc))
                )
    results.sort(key=lambda r: r.site.primary_domain)
    return ScanRunResult(site_results=results)


def pool_from_lab_sites(sites: list[SimSite]) -> SeedPool:
    configs = [
        site_config_from_dict(site.host, (), catalog.seed_entry(site)) for site in sites
    ]
    return SeedPool(sites=tuple(configs))


@dataclass
class SelfcheckReport:
    sites: list[str]
    oracle: dict[tuple[str, PathConfusionTechnique], bool]
    scanned: dict[tuple[str, PathConfusionTechnique], bool]
    disagreements: list[tuple[str, PathConfusionTechnique, bool, bool]]
    verdicts: list[ScanVerdict]
    inconclusive: int
    elapsed_seconds: float

    @property
    def ok(self) -> bool:
        return not self.disagreements and self.inconclusive == 0


def run_selfcheck(
    sites: list[SimSite] | None = None,
    settings: ScanSettings | None = None,
) -> SelfcheckReport:
    """Scan the lab catalog over real sockets and diff against the oracle.

    The scanner's verdict for (site, technique) is "any attacked page on the
    site came back vulnerable with that technique"; the oracle's is direct
    simulation of the site's protected marker page.
    """
    started = time.monotonic()
    if sites is None:
        sites = catalog.matrix_sites() + [catalog.classic_site()]
    settings = settings or ScanSettings(rate=500.0, burst=64, workers=8, seed=0)

    server = LabServer(sites).start()
    try:
        settings = replace(
            settings, transport=Transport(resolve_overrides=server.resolve_overrides())
        )
        pool = pool_from_lab_sites(sites)
        run = scan_pool(pool, settings)
    finally:
        server.stop()

    host_to_name = {site.host: site.name for site in sites}
    scanned: dict[tuple[str, PathConfusionTechnique], bool] = {
        (site.name, technique): False
        for site in sites
        for technique in settings.techniques
    }
    inconclusive = 0
    for verdict in run.verdicts:
        host = verdict.page.split("//", 1)[1].split("/", 1)[0].split(":")[0]
        name = host_to_name.get(host)
        if name is None:
            continue
        if verdict.inconclusive:
            inconclusive += 1
            continue
        if verdict.vulnerable:
            scanned[(name, verdict.technique)] = True

    oracle = enumerate_oracle(sites, settings.techniques, settings.extension)
    disagreements = [
        (name, technique, oracle[(name, technique)], scanned[(name, technique)])
        for (name, technique) in sorted(scanned, key=lambda k: (k[0], k[1].value))
        if oracle[(name, technique)] != scanned[(name, technique)]
    ]
    return SelfcheckReport(
        sites=[site.name for site in sites],
        oracle=oracle,
        scanned=scanned,
        disagreements=disagreements,
        verdicts=run.verdicts,
        inconclusive=inconclusive,
        elapsed_seconds=time.monotonic() - started,
    )
