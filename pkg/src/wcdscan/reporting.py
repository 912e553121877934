"""Verdict aggregation, CDN labeling, and the incidence chi-square test.

Counts roll up page -> domain -> site (site = registrable domain), each
verdict counted once per dimension, so the output matrices match the usual
reporting shape: totals per technique, a technique-uniqueness matrix,
response-code and cache-header breakdowns, leak types, and CDN labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

from .detector import ScanVerdict
from .http_engine import HttpExchange
from .url_toolkit import MalformedUrl, PathConfusionTechnique, parse_url, registrable_domain


class DegenerateTable(ValueError):
    """A 2x2 margin is zero; the chi-square statistic is undefined."""


def chi_square_2x2(a: int, b: int, c: int, d: int) -> tuple[float, float]:
    """Pearson chi-square (no continuity correction) and its df=1 p-value.

    The p-value uses the exact relation of the df=1 survival function to the
    complementary error function, so no numeric tables are needed.
    """
    if min(a, b, c, d) < 0:
        raise ValueError("counts must be non-negative")
    r1, r2, c1, c2 = a + b, c + d, a + c, b + d
    if 0 in (r1, r2, c1, c2):
        raise DegenerateTable("all row/column margins must be positive")
    n = a + b + c + d
    statistic = n * (a * d - b * c) ** 2 / (r1 * r2 * c1 * c2)
    p_value = math.erfc(math.sqrt(statistic / 2.0))
    return statistic, p_value


@dataclass(frozen=True)
class CdnFingerprint:
    """Vendor label plus the header substrings that give it away."""

    vendor: str
    header_patterns: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if not self.header_patterns:
            raise ValueError("fingerprint needs at least one header pattern")

    def matches(self, exchange: HttpExchange) -> bool:
        for header, substring in self.header_patterns:
            value = exchange.header(header)
            if value is not None and (not substring or substring.lower() in value.lower()):
                return True
        return False


DEFAULT_FINGERPRINTS: tuple[CdnFingerprint, ...] = (
    CdnFingerprint(
        "Cloudflare",
        (("cf-ray", ""), ("cf-cache-status", ""), ("server", "cloudflare")),
    ),
    CdnFingerprint(
        "Akamai",
        (
            ("server", "akamaighost"),
            ("x-akamai-transformed", ""),
            ("x-akamai-request-id", ""),
            ("x-cache", "akamai"),
        ),
    ),
    CdnFingerprint(
        "CloudFront",
        (
            ("x-amz-cf-id", ""),
            ("x-amz-cf-pop", ""),
            ("via", "cloudfront"),
            ("x-cache", "cloudfront"),
        ),
    ),
    CdnFingerprint(
        "Fastly",
        (
            ("x-fastly-request-id", ""),
            ("fastly-debug-digest", ""),
            ("x-served-by", "cache-"),
        ),
    ),
)

# Applied only when no named vendor matched: generic cache evidence.
OTHER_CDN_FINGERPRINT = CdnFingerprint(
    "Other",
    (
        ("x-cache", ""),
        ("x-cache-status", ""),
        ("via", ""),
        ("x-varnish", ""),
        ("x-proxy-cache", ""),
    ),
)


def cdn_label(
    exchange: HttpExchange,
    fingerprints: tuple[CdnFingerprint, ...] = DEFAULT_FINGERPRINTS,
    other: CdnFingerprint | None = OTHER_CDN_FINGERPRINT,
) -> list[str]:
    """All vendors whose fingerprint matches; multi-CDN setups return several
    labels, and an empty list means unlabeled."""
    labels = [fp.vendor for fp in fingerprints if fp.matches(exchange)]
    if not labels and other is not None and other.matches(exchange):
        labels = [other.vendor]
    return labels


def fingerprints_from_file(path: str) -> tuple[CdnFingerprint, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return tuple(
        CdnFingerprint(
            vendor=item["vendor"],
            header_patterns=tuple((p["header"], p.get("substring", "")) for p in item["patterns"]),
        )
        for item in data
    )


@dataclass(frozen=True)
class Counts3:
    pages: int = 0
    domains: int = 0
    sites: int = 0

    def __str__(self):
        return f"{self.pages} / {self.domains} / {self.sites}"


@dataclass
class _IdSets:
    """Page/domain/site identifier sets feeding one roll-up cell."""

    pages: set[str] = field(default_factory=set)
    domains: set[str] = field(default_factory=set)
    sites: set[str] = field(default_factory=set)

    def add(self, page: str, domain: str, site: str) -> None:
        self.pages.add(page)
        self.domains.add(domain)
        self.sites.add(site)

    def counts(self) -> Counts3:
        return Counts3(len(self.pages), len(self.domains), len(self.sites))

    def minus(self, other: "_IdSets") -> Counts3:
        return Counts3(
            len(self.pages - other.pages),
            len(self.domains - other.domains),
            len(self.sites - other.sites),
        )


@dataclass
class AggregateStats:
    tested: Counts3
    vulnerable: Counts3
    inconclusive_pages: int
    per_technique: dict[str, Counts3]
    uniqueness: dict[tuple[str, str], Counts3]
    response_codes: dict[int, Counts3]
    cache_control_combos: dict[str, Counts3]
    pragma_no_cache: Counts3
    expires_present: Counts3
    no_cache_headers: Counts3
    leak_types: dict[str, Counts3]
    unauth_exploitable: Counts3
    cdn_tested: dict[str, Counts3]
    cdn_vulnerable: dict[str, Counts3]
    quarantined: list[tuple[str, str]]


def canonical_cache_combo(cache_control: str) -> str:
    """Table-style canonical form: directive names sorted, values elided."""
    names = []
    for token in cache_control.split(","):
        token = token.strip()
        if not token:
            continue
        name, sep, _ = token.partition("=")
        names.append(name.strip().lower() + ("=" if sep else ""))
    return ", ".join(sorted(set(names))) if names else "(none)"


def aggregate(
    verdicts: Iterable[ScanVerdict], site_map: Mapping[str, str]
) -> AggregateStats:
    """Fold a verdict stream into the reporting dimensions.

    ``site_map`` resolves each page's host to its site; verdicts whose host
    is missing are quarantined with a diagnostic rather than dropped
    silently. The fold is permutation-invariant.
    """
    techniques = [t.value for t in PathConfusionTechnique]
    tested = _IdSets()
    vulnerable = _IdSets()
    inconclusive_pages: set[str] = set()
    per_technique = {t: _IdSets() for t in techniques}
    response_codes: dict[int, _IdSets] = {}
    combos: dict[str, _IdSets] = {}
    pragma_no_cache = _IdSets()
    expires_present = _IdSets()
    no_cache_headers = _IdSets()
    leak_types: dict[str, _IdSets] = {}
    unauth = _IdSets()
    cdn_tested: dict[str, _IdSets] = {}
    cdn_vulnerable: dict[str, _IdSets] = {}
    quarantined: list[tuple[str, str]] = []

    for verdict in verdicts:
        try:
            domain = parse_url(verdict.page).host
        except MalformedUrl:
            quarantined.append((verdict.page, "unparseable page URL"))
            continue
        site = site_map.get(domain)
        if site is None:
            quarantined.append((verdict.page, f"domain {domain!r} not in site map"))
            continue
        page = verdict.page

        if verdict.inconclusive:
            inconclusive_pages.add(page)
            continue
        tested.add(page, domain, site)
        for label in verdict.cdn_labels:
            cdn_tested.setdefault(label, _IdSets()).add(page, domain, site)
        if not verdict.vulnerable:
            continue

        vulnerable.add(page, domain, site)
        per_technique[verdict.technique.value].add(page, domain, site)
        response_codes.setdefault(verdict.attacker_status, _IdSets()).add(page, domain, site)

        combo = canonical_cache_combo(verdict.cache_control)
        combos.setdefault(combo, _IdSets()).add(page, domain, site)
        if "no-cache" in verdict.pragma.lower():
            pragma_no_cache.add(page, domain, site)
        if verdict.expires:
            expires_present.add(page, domain, site)
        if combo == "(none)" and not verdict.pragma and not verdict.expires:
            no_cache_headers.add(page, domain, site)

        if verdict.markers_leaked:
            leak_types.setdefault("markers", _IdSets()).add(page, domain, site)
            for label in verdict.markers_leaked:
                leak_types.setdefault(f"marker:{label}", _IdSets()).add(page, domain, site)
        if verdict.secrets:
            leak_types.setdefault("secrets", _IdSets()).add(page, domain, site)
            for secret in verdict.secrets:
                leak_types.setdefault(f"secret:{secret.source.value}", _IdSets()).add(
                    page, domain, site
                )
        if verdict.markers_leaked and verdict.secrets:
            leak_types.setdefault("both", _IdSets()).add(page, domain, site)
        if verdict.unauth_exploitable:
            unauth.add(page, domain, site)
        for label in verdict.cdn_labels:
            cdn_vulnerable.setdefault(label, _IdSets()).add(page, domain, site)

    uniqueness = {
        (ti, tj): per_technique[ti].minus(per_technique[tj])
        for ti in techniques
        for tj in techniques
        if ti != tj
    }
    return AggregateStats(
        tested=tested.counts(),
        vulnerable=vulnerable.counts(),
        inconclusive_pages=len(inconclusive_pages),
        per_technique={t: s.counts() for t, s in per_technique.items()},
        uniqueness=uniqueness,
        response_codes={c: s.counts() for c, s in response_codes.items()},
        cache_control_combos={c: s.counts() for c, s in combos.items()},
        pragma_no_cache=pragma_no_cache.counts(),
        expires_present=expires_present.counts(),
        no_cache_headers=no_cache_headers.counts(),
        leak_types={k: s.counts() for k, s in leak_types.items()},
        unauth_exploitable=unauth.counts(),
        cdn_tested={k: s.counts() for k, s in cdn_tested.items()},
        cdn_vulnerable={k: s.counts() for k, s in cdn_vulnerable.items()},
        quarantined=quarantined,
    )


def build_site_map(hosts: Iterable[str]) -> dict[str, str]:
    return {host: registrable_domain(host) for host in hosts}


_TECH_TITLES = {
    "path_parameter": "Path Parameter",
    "encoded_newline": "Encoded \\n",
    "encoded_semicolon": "Encoded ;",
    "encoded_pound": "Encoded #",
    "encoded_question": "Encoded ?",
}


def render_table(stats: AggregateStats) -> str:
    """Human-readable report with the per-technique totals and uniqueness
    matrix as the centerpiece (cells are pages / domains / sites)."""
    lines: list[str] = []

    def section(title: str):
        lines.append("")
        lines.append(title)
        lines.append("-" * len(title))

    lines.append("SCAN REPORT")
    lines.append("===========")
    section("Summary (pages / domains / sites)")
    lines.append(f"  Tested:        {stats.tested}")
    lines.append(f"  Vulnerable:    {stats.vulnerable}")
    lines.append(f"  Inconclusive pages: {stats.inconclusive_pages}")
    if stats.quarantined:
        lines.append(f"  Quarantined verdicts: {len(stats.quarantined)}")

    section("Vulnerable targets per technique")
    for tech, counts in stats.per_technique.items():
        lines.append(f"  {_TECH_TITLES.get(tech, tech):<18} {counts}")

    section("Technique uniqueness: row exploits what column misses")
    order = [t.value for t in PathConfusionTechnique]
    header = " " * 20 + "".join(f"{_TECH_TITLES[t]:>18}" for t in order)
    lines.append(header)
    for ti in order:
        row = f"  {_TECH_TITLES[ti]:<18}"
        for tj in order:
            cell = "-" if ti == tj else str(stats.uniqueness[(ti, tj)])
            row += f"{cell:>18}"
        lines.append(row)

    section("Response codes on vulnerable pages")
    for code in sorted(stats.response_codes):
        lines.append(f"  {code:<6} {stats.response_codes[code]}")

    section("Cache headers on vulnerable pages")
    for combo in sorted(stats.cache_control_combos):
        lines.append(f"  {'Cache-Control: ' + combo:<68} {stats.cache_control_combos[combo]}")
    lines.append(f"  {'Pragma: no-cache':<68} {stats.pragma_no_cache}")
    lines.append(f"  {'Expires present':<68} {stats.expires_present}")
    lines.append(f"  {'(no caching headers at all)':<68} {stats.no_cache_headers}")

    section("Leak types")
    for kind in sorted(stats.leak_types):
        lines.append(f"  {kind:<28} {stats.leak_types[kind]}")
    lines.append(f"  {'unauthenticated exploitable':<28} {stats.unauth_exploitable}")

    section("CDN labels (tested -> vulnerable)")
    for vendor in sorted(set(stats.cdn_tested) | set(stats.cdn_vulnerable)):
        lines.append(
            f"  {vendor:<14} {stats.cdn_tested.get(vendor, Counts3())}"
            f"  ->  {stats.cdn_vulnerable.get(vendor, Counts3())}"
        )
    lines.append("")
    return "\n".join(lines)


def stats_to_records(stats: AggregateStats) -> dict:
    return {
        "tested": vars(stats.tested),
        "vulnerable": vars(stats.vulnerable),
        "inconclusive_pages": stats.inconclusive_pages,
        "per_technique": {t: vars(c) for t, c in stats.per_technique.items()},
        "uniqueness": {
            f"{ti}|{tj}": vars(c) for (ti, tj), c in stats.uniqueness.items()
        },
        "response_codes": {str(k): vars(c) for k, c in stats.response_codes.items()},
        "cache_control_combos": {k: vars(c) for k, c in stats.cache_control_combos.items()},
        "pragma_no_cache": vars(stats.pragma_no_cache),
        "expires_present": vars(stats.expires_present),
        "no_cache_headers": vars(stats.no_cache_headers),
        "leak_types": {k: vars(c) for k, c in stats.leak_types.items()},
        "unauth_exploitable": vars(stats.unauth_exploitable),
        "cdn_tested": {k: vars(c) for k, c in stats.cdn_tested.items()},
        "cdn_vulnerable": {k: vars(c) for k, c in stats.cdn_vulnerable.items()},
        "quarantined": stats.quarantined,
    }


def write_records(verdicts: Iterable[ScanVerdict], fh: TextIO) -> None:
    for verdict in verdicts:
        fh.write(json.dumps(verdict.to_record()) + "\n")


def read_records(fh: TextIO) -> list[ScanVerdict]:
    out = []
    for line in fh:
        line = line.strip()
        if line:
            out.append(ScanVerdict.from_record(json.loads(line)))
    return out


def redact_verdicts(verdicts: list[ScanVerdict]) -> list[ScanVerdict]:
    """Replace impacted hostnames with stable placeholder names."""
    from dataclasses import replace

    hosts = sorted(
        {parse_url(v.page).host for v in verdicts if not v.page.startswith("site-")}
    )
    mapping = {host: f"site-{i + 1}.redacted" for i, host in enumerate(hosts)}
    out = []
    for verdict in verdicts:
        page = verdict.page
        attack = verdict.attack_url
        for host, alias in mapping.items():
            page = page.replace(host, alias)
            attack = attack.replace(host, alias)
        out.append(replace(verdict, page=page, attack_url=attack))
    return out
