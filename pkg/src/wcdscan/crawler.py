"""Attack-surface discovery: seed pool ingestion and per-domain crawling.

The crawl walks same-site anchors breadth-first as the victim identity,
groups URLs structurally as it goes, and fetches only one page per group
(plus the group's chosen representative) so that large parameterized
sections cost a handful of requests. Logout-looking links are never
requested. Per-domain crawls may run concurrently; within a domain fetches
are sequential.
"""

from __future__ import annotations

import json
import logging
import re
import urllib.robotparser
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from urllib.parse import urljoin

from .detector import MarkerSet
from .http_engine import (
    DEFAULT_LOGOUT_PATTERNS,
    Identity,
    LoginDescriptor,
    NetworkError,
    RateLimiter,
    Role,
    TooManyRedirects,
    Transport,
    fetch,
    is_logout_link,
)
from .url_toolkit import (
    MalformedUrl,
    ParsedUrl,
    UrlGroupKey,
    group_key,
    parse_url,
    registrable_domain,
    select_representatives,
)

log = logging.getLogger(__name__)

RE_HREF = re.compile(r"""href\s*=\s*["']([^"']+)["']""", re.IGNORECASE)

RAW_PAGE_CAP_FACTOR = 10


class ConfigError(Exception):
    """Malformed seed file or site config; scanning aborts before it starts."""


@dataclass
class SiteConfig:
    """One seed-pool site: its hosts plus login/marker references."""

    primary_domain: str
    subdomains: tuple[str, ...] = ()
    scheme: str = "http"
    victim_login: LoginDescriptor | None = None
    attacker_login: LoginDescriptor | None = None
    markers: MarkerSet | None = None
    budget: int | None = None  # overrides the scan-wide page-group budget

    @property
    def site(self) -> str:
        return registrable_domain(self.primary_domain)

    def hosts(self) -> tuple[str, ...]:
        return (self.primary_domain, *self.subdomains)


@dataclass
class SeedPool:
    sites: tuple[SiteConfig, ...]


@dataclass
class AttackSurface:
    """Representative pages selected for one domain, with the victim bodies
    needed for marker gating."""

    domain: str
    pages: tuple[ParsedUrl, ...]
    pages_seen: int
    truncated: bool
    victim_bodies: dict[str, bytes] = field(default_factory=dict)


def _login_descriptor(scheme: str, host: str, login: dict, role: str) -> LoginDescriptor:
    creds = login.get(role)
    if not creds:
        raise ConfigError(f"login config missing {role!r} credentials")
    fields = {
        login.get("username_field", "username"): creds["username"],
        login.get("password_field", "password"): creds["password"],
    }
    return LoginDescriptor(
        url=f"{scheme}://{host}{login.get('path', '/login')}",
        fields=fields,
        method=login.get("method", "POST"),
        success_statuses=tuple(login.get("success_statuses", [200])),
        success_marker=login.get("success_marker"),
    )


def site_config_from_dict(primary: str, subdomains: tuple[str, ...], data: dict) -> SiteConfig:
    scheme = data.get("scheme", "http")
    victim_login = attacker_login = None
    if "login" in data:
        victim_login = _login_descriptor(scheme, primary, data["login"], "victim")
        attacker_login = _login_descriptor(scheme, primary, data["login"], "attacker")
    markers = None
    if data.get("markers"):
        markers = MarkerSet([(m["label"], m["value"]) for m in data["markers"]])
    return SiteConfig(
        primary_domain=primary,
        subdomains=subdomains,
        scheme=scheme,
        victim_login=victim_login,
        attacker_login=attacker_login,
        markers=markers,
        budget=int(data["budget"]) if "budget" in data else None,
    )


def probe_host(
    scheme: str,
    host: str,
    transport: Transport | None = None,
    rate_limiter: RateLimiter | None = None,
) -> bool:
    """True when the host answers HTTP at all (HEAD first, then GET)."""
    probe_identity = Identity(role=Role.UNAUTHENTICATED)
    for method in ("HEAD", "GET"):
        try:
            fetch(probe_identity, f"{scheme}://{host}/", rate_limiter, transport, method=method)
            return True
        except (NetworkError, TooManyRedirects):
            continue
    return False


def ingest_domains(
    path: str,
    transport: Transport | None = None,
    rate_limiter: RateLimiter | None = None,
    probe: bool = True,
) -> SeedPool:
    """Load a seed file (one host per line, optional site-config reference)
    into a pool, keeping only hosts that answer HTTP(S).

    Hosts sharing a registrable domain form one site; the config reference of
    the first such line applies to the whole site. Malformed lines raise
    ConfigError before any scanning starts.
    """
    seed_path = Path(path)
    if not seed_path.is_file():
        raise ConfigError(f"seed file not found: {path}")

    entries: list[tuple[str, str | None, str | None]] = []
    for lineno, line in enumerate(seed_path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) > 2:
            raise ConfigError(f"{path}:{lineno}: expected 'host [config]', got {line!r}")
        host = tokens[0]
        scheme = None
        if "://" in host:
            try:
                parsed = parse_url(host)
            except MalformedUrl as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            host, scheme = parsed.host, parsed.scheme
        if not re.fullmatch(r"[a-z0-9.-]+", host, re.IGNORECASE):
            raise ConfigError(f"{path}:{lineno}: invalid host {host!r}")
        config_ref = tokens[1] if len(tokens) == 2 else None
        entries.append((host.lower(), config_ref, scheme))

    by_site: dict[str, list[tuple[str, str | None, str | None]]] = {}
    for host, config_ref, scheme in entries:
        by_site.setdefault(registrable_domain(host), []).append((host, config_ref, scheme))

    sites = []
    for site_key in by_site:
        rows = by_site[site_key]
        hosts: list[str] = []
        for host, _, _ in rows:
            if host not in hosts:
                hosts.append(host)
        primary = next((h for h in hosts if h == site_key), hosts[0])
        config_ref = next((ref for _, ref, _ in rows if ref), None)
        scheme = next((s for _, _, s in rows if s), None) or "http"
        data: dict = {"scheme": scheme}
        if config_ref:
            config_path = Path(config_ref)
            if not config_path.is_absolute():
                config_path = seed_path.parent / config_path
            try:
                data.update(json.loads(config_path.read_text(encoding="utf-8")))
            except (OSError, ValueError) as exc:
                raise ConfigError(f"bad site config {config_ref!r}: {exc}") from exc
        scheme = data.get("scheme", scheme)
        live = [
            h for h in hosts
            if not probe or probe_host(scheme, h, transport, rate_limiter)
        ]
        if not live:
            log.info("seed site %s: no live hosts, skipping", site_key)
            continue
        primary = primary if primary in live else live[0]
        subdomains = tuple(h for h in live if h != primary)
        sites.append(site_config_from_dict(primary, subdomains, data))
    return SeedPool(sites=tuple(sites))


def extract_links(body: bytes, base_url: str) -> list[str]:
    """Absolute http(s) URLs from anchor hrefs, in document order."""
    text = body.decode("utf-8", errors="replace")
    out = []
    for href in RE_HREF.findall(text):
        absolute = urljoin(base_url, href.strip())
        if absolute.startswith(("http://", "https://")):
            out.append(absolute)
    return out


def _load_robots(
    start_url: str,
    identity: Identity,
    rate_limiter: RateLimiter | None,
    transport: Transport | None,
) -> urllib.robotparser.RobotFileParser | None:
    robots_url = urljoin(start_url, "/robots.txt")
    try:
        exchange = fetch(identity, robots_url, rate_limiter, transport)
    except (NetworkError, TooManyRedirects):
        return None
    if exchange.status != 200:
        return None
    parser = urllib.robotparser.RobotFileParser()
    parser.parse(exchange.body.decode("utf-8", errors="replace").splitlines())
    return parser


def _group_tag(key: UrlGroupKey) -> str:
    return f"{key.host}{key.abstract_path}?{','.join(key.param_names)}"


def _journal_write(journal, record: dict) -> None:
    if journal is not None:
        journal.write(json.dumps(record) + "\n")


def crawl_domain(
    site: SiteConfig | str,
    identity: Identity,
    budget: int = 500,
    rate_limiter: RateLimiter | None = None,
    transport: Transport | None = None,
    seed: int = 0,
    logout_patterns: tuple[str, ...] = DEFAULT_LOGOUT_PATTERNS,
    respect_robots: bool = False,
    journal=None,
) -> AttackSurface:
    """Breadth-first crawl of one domain up to ``budget`` structural groups.

    Only the first page of each group is fetched for link discovery; the
    seeded representative of each group is fetched once more if it differs,
    so the returned victim bodies correspond exactly to the pages that will
    be attacked. When ``journal`` (a writable text stream) is given, one
    JSON line is emitted per observed page plus a final surface record, so
    an interrupted run can be picked up from the journal.
    """
    if isinstance(site, str):
        site = SiteConfig(primary_domain=site)
    start = f"{site.scheme}://{site.primary_domain}/"
    site_scope = site.site
    raw_cap = budget * RAW_PAGE_CAP_FACTOR

    robots = None
    if respect_robots:
        robots = _load_robots(start, identity, rate_limiter, transport)

    queue: deque[str] = deque([start])
    seen: set[str] = set()
    members: dict[UrlGroupKey, list[ParsedUrl]] = {}
    first_fetched: dict[UrlGroupKey, tuple[str, bytes]] = {}
    pages_seen = 0
    truncated = False

    while queue:
        raw_url = queue.popleft()
        if raw_url in seen:
            continue
        seen.add(raw_url)
        if is_logout_link(raw_url, logout_patterns):
            continue
        if robots is not None and not robots.can_fetch(identity.user_agent, raw_url):
            continue
        try:
            page = parse_url(raw_url)
        except MalformedUrl:
            log.debug("skipping malformed link %s", raw_url)
            continue
        if registrable_domain(page.host) != site_scope:
            continue

        key = group_key(page)
        if key not in members and len(members) >= budget:
            truncated = True
            break
        pages_seen += 1
        if pages_seen > raw_cap:
            truncated = True
            break
        is_new_group = key not in members
        members.setdefault(key, []).append(page)
        _journal_write(
            journal,
            {
                "event": "page",
                "domain": site.primary_domain,
                "url": raw_url,
                "group": _group_tag(key),
                "new_group": is_new_group,
            },
        )
        if not is_new_group:
            continue
        try:
            exchange = fetch(identity, raw_url, rate_limiter, transport)
        except (NetworkError, TooManyRedirects) as exc:
            log.warning("crawl fetch failed for %s: %s", raw_url, exc)
            _journal_write(
                journal,
                {
                    "event": "fetch_error",
                    "domain": site.primary_domain,
                    "url": raw_url,
                    "error": str(exc),
                },
            )
            continue
        first_fetched[key] = (raw_url, exchange.body)
        for link in extract_links(exchange.body, exchange.url):
            if link not in seen:
                queue.append(link)

    all_pages = [page for pages in members.values() for page in pages]
    representatives = select_representatives(all_pages, seed)

    victim_bodies: dict[str, bytes] = {}
    for rep in representatives:
        key = group_key(rep)
        fetched = first_fetched.get(key)
        if fetched is not None and fetched[0] == rep.raw:
            victim_bodies[rep.text()] = fetched[1]
            continue
        try:
            exchange = fetch(identity, rep.text(), rate_limiter, transport)
            victim_bodies[rep.text()] = exchange.body
        except (NetworkError, TooManyRedirects) as exc:
            log.warning("representative fetch failed for %s: %s", rep.text(), exc)
            victim_bodies[rep.text()] = b""

    _journal_write(
        journal,
        {
            "event": "surface",
            "domain": site.primary_domain,
            "pages": [rep.text() for rep in representatives],
            "pages_seen": pages_seen,
            "truncated": truncated,
        },
    )
    return AttackSurface(
        domain=site.primary_domain,
        pages=tuple(representatives),
        pages_seen=pages_seen,
        truncated=truncated,
        victim_bodies=victim_bodies,
    )


def filter_marked_pages(surface: AttackSurface, markers: MarkerSet) -> AttackSurface:
    """Keep only pages whose victim-rendered body embeds at least one marker
    (the marker-gated scan mode)."""
    values = [m.value.encode() for m in markers]
    kept = tuple(
        page
        for page in surface.pages
        if any(v in surface.victim_bodies.get(page.text(), b"") for v in values)
    )
    return replace(surface, pages=kept)
