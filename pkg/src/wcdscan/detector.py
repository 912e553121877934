"""Per-page cache-deception probing, marker leakage, and secret extraction.

One test runs the three-step attack (victim, attacker, unauthenticated — in
that order) against a freshly crafted URL, then decides a verdict from the
attacker's response: an exact victim-marker hit is proof; otherwise identical
victim/attacker bodies gate a secret-token sweep by keyword and entropy.
"""

from __future__ import annotations

import logging
import math
import re
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from html.parser import HTMLParser
from typing import Callable
from urllib.parse import parse_qsl, urlsplit

from .http_engine import (
    HttpExchange,
    Identity,
    NetworkError,
    RateLimiter,
    Role,
    TooManyRedirects,
    Transport,
    fetch,
)
from .url_toolkit import (
    AttackUrl,
    ParsedUrl,
    PathConfusionTechnique,
    RandomNameGenerator,
    make_attack_url,
)
from .words import COMMON_WORDS

log = logging.getLogger(__name__)

MIN_MARKER_LENGTH = 12
MIN_MARKER_ENTROPY = 3.0  # bits/char, makes accidental collisions negligible

DEFAULT_KEYWORDS = ("csrf", "xsrf", "token", "state", "client_id")

# Headers that hint at cache involvement. Recorded for reporting only: they
# are an unreliable signal and never feed the vulnerable determination.
CACHE_EVIDENCE_HEADERS = (
    "age", "x-cache", "x-cache-status", "cf-cache-status", "x-served-by", "via",
)

_RFC1123_DATE = re.compile(
    rb"(?:Mon|Tue|Wed|Thu|Fri|Sat|Sun), \d{2} "
    rb"(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec) "
    rb"\d{4} \d{2}:\d{2}:\d{2} GMT"
)

_RE_JS_VAR = re.compile(
    r"\b(?:var|let|const)\s+([A-Za-z_$][\w$]*)\s*=\s*[\"']([^\"']*)[\"']"
)
# Regex fallbacks for when HTML parsing fails outright.
_RE_HIDDEN_INPUT = re.compile(r"<input\b[^>]*>", re.IGNORECASE)
_RE_ATTR = re.compile(r"([a-zA-Z_-]+)\s*=\s*[\"']([^\"']*)[\"']")
_RE_HREF = re.compile(r"<a\b[^>]*\bhref\s*=\s*[\"']([^\"']+)[\"']", re.IGNORECASE)
_RE_SCRIPT_SRC = re.compile(r"<script\b[^>]*\bsrc\s*=\s*[\"']([^\"']+)[\"']", re.IGNORECASE)
_RE_SCRIPT_BLOCK = re.compile(r"<script\b[^>]*>(.*?)</script>", re.IGNORECASE | re.DOTALL)


def shannon_entropy(text: str) -> float:
    """Shannon entropy in bits per character of the string's distribution."""
    if not text:
        return 0.0
    counts = Counter(text)
    total = len(text)
    return max(0.0, -sum((n / total) * math.log2(n / total) for n in counts.values()))


@dataclass(frozen=True)
class Marker:
    """A sentinel value planted in a victim account field."""

    label: str
    value: str


class MarkerSet:
    """Validated collection of high-entropy victim markers.

    Values must be pairwise distinct, at least 12 characters, and carry at
    least 3 bits/char of entropy so a byte-exact hit is conclusive.
    """

    def __init__(self, markers: list[Marker] | list[tuple[str, str]]):
        normalized = [m if isinstance(m, Marker) else Marker(*m) for m in markers]
        values = [m.value for m in normalized]
        if len(set(values)) != len(values):
            raise ValueError("marker values must be pairwise distinct")
        for m in normalized:
            if len(m.value) < MIN_MARKER_LENGTH:
                raise ValueError(f"marker {m.label!r} shorter than {MIN_MARKER_LENGTH}")
            if shannon_entropy(m.value) < MIN_MARKER_ENTROPY:
                raise ValueError(f"marker {m.label!r} entropy below {MIN_MARKER_ENTROPY}")
        self.markers: tuple[Marker, ...] = tuple(normalized)

    def __iter__(self):
        return iter(self.markers)

    def __len__(self):
        return len(self.markers)

    def labels(self) -> list[str]:
        return [m.label for m in self.markers]


@dataclass
class RandomnessConfig:
    """Knobs for the dictionary-strip + entropy randomness test."""

    dictionary: tuple[str, ...] = COMMON_WORDS
    min_residual_length: int = 8
    entropy_threshold_bits_per_char: float = 3.0
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    min_word_length: int = 3

    def __post_init__(self):
        if self.min_residual_length <= 0 or self.entropy_threshold_bits_per_char <= 0:
            raise ValueError("randomness thresholds must be strictly positive")
        self._words = {
            w.lower() for w in self.dictionary if len(w) >= self.min_word_length
        }
        self._max_word = max((len(w) for w in self._words), default=0)


def strip_dictionary_words(value: str, config: RandomnessConfig) -> str:
    """Remove dictionary words greedily (longest match first, left to right,
    case-insensitive); characters not starting a word are kept."""
    lowered = value.lower()
    n = len(value)
    out: list[str] = []
    i = 0
    while i < n:
        matched = 0
        longest = min(config._max_word, n - i)
        for length in range(longest, config.min_word_length - 1, -1):
            if lowered[i : i + length] in config._words:
                matched = length
                break
        if matched:
            i += matched
        else:
            out.append(value[i])
            i += 1
    return "".join(out)


def randomness_score(value: str, config: RandomnessConfig) -> tuple[int, float]:
    """(residual length, Shannon entropy bits/char) after dictionary removal."""
    residual = strip_dictionary_words(value, config)
    if not residual:
        return (0, 0.0)
    return (len(residual), shannon_entropy(residual))


class SecretSource(Enum):
    HIDDEN_FORM_FIELD = "hidden_form_field"
    ANCHOR_QUERY_STRING = "anchor_query_string"
    INLINE_SCRIPT_VARIABLE = "inline_script_variable"
    SCRIPT_FILE_NAME = "script_file_name"


class SecretTrigger(Enum):
    KEYWORD_MATCH = "keyword_match"
    ENTROPY_MATCH = "entropy_match"


@dataclass(frozen=True)
class SecretCandidate:
    name: str
    value: str
    source: SecretSource
    trigger: SecretTrigger
    entropy_bits_per_char: float
    residual_length: int


class _HtmlScan(HTMLParser):
    """Collects the four secret-candidate surfaces from an HTML document."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.hidden_inputs: list[tuple[str, str]] = []
        self.anchor_hrefs: list[str] = []
        self.script_srcs: list[str] = []
        self.inline_scripts: list[str] = []
        self._in_inline_script = False

    def handle_starttag(self, tag, attrs):
        attrs_d = {k.lower(): (v or "") for k, v in attrs}
        if tag == "input" and attrs_d.get("type", "").lower() == "hidden":
            if attrs_d.get("name"):
                self.hidden_inputs.append((attrs_d["name"], attrs_d.get("value", "")))
        elif tag == "a" and attrs_d.get("href"):
            self.anchor_hrefs.append(attrs_d["href"])
        elif tag == "script":
            if attrs_d.get("src"):
                self.script_srcs.append(attrs_d["src"])
            else:
                self._in_inline_script = True

    def handle_endtag(self, tag):
        if tag == "script":
            self._in_inline_script = False

    def handle_data(self, data):
        if self._in_inline_script:
            self.inline_scripts.append(data)


def _scan_html(text: str) -> _HtmlScan:
    scan = _HtmlScan()
    try:
        scan.feed(text)
        scan.close()
    except Exception as exc:
        log.warning("HTML parse failed (%s); falling back to regex extraction", exc)
        scan = _HtmlScan()
        for tag in _RE_HIDDEN_INPUT.findall(text):
            attrs = dict((k.lower(), v) for k, v in _RE_ATTR.findall(tag))
            if attrs.get("type", "").lower() == "hidden" and attrs.get("name"):
                scan.hidden_inputs.append((attrs["name"], attrs.get("value", "")))
        scan.anchor_hrefs = _RE_HREF.findall(text)
        scan.script_srcs = _RE_SCRIPT_SRC.findall(text)
        scan.inline_scripts = _RE_SCRIPT_BLOCK.findall(text)
    return scan


def extract_markers(body: bytes, markers: MarkerSet) -> list[str]:
    """Labels of markers whose value appears byte-for-byte in the body."""
    return [m.label for m in markers if m.value.encode() in body]


def extract_secrets(body: bytes, config: RandomnessConfig) -> list[SecretCandidate]:
    """Candidate leaked tokens from hidden form fields, anchor query strings,
    inline script variables, and script file names.

    A candidate is kept when its name contains a keyword, or its value still
    looks random after dictionary words are stripped.
    """
    text = body.decode("utf-8", errors="replace")
    scan = _scan_html(text)

    pairs: list[tuple[str, str, SecretSource]] = []
    for name, value in scan.hidden_inputs:
        pairs.append((name, value, SecretSource.HIDDEN_FORM_FIELD))
    for href in scan.anchor_hrefs:
        try:
            query = urlsplit(href).query
        except ValueError:
            continue
        for name, value in parse_qsl(query, keep_blank_values=True):
            pairs.append((name, value, SecretSource.ANCHOR_QUERY_STRING))
    for block in scan.inline_scripts:
        for name, value in _RE_JS_VAR.findall(block):
            pairs.append((name, value, SecretSource.INLINE_SCRIPT_VARIABLE))
    for src in scan.script_srcs:
        try:
            path = urlsplit(src).path
        except ValueError:
            continue
        basename = path.rsplit("/", 1)[-1]
        stem = basename.rsplit(".", 1)[0]
        if stem:
            pairs.append((basename, stem, SecretSource.SCRIPT_FILE_NAME))

    out: list[SecretCandidate] = []
    seen: set[tuple[str, str, SecretSource]] = set()
    for name, value, source in pairs:
        if not value or (name, value, source) in seen:
            continue
        seen.add((name, value, source))
        residual, entropy = randomness_score(value, config)
        keyword_hit = any(k in name.lower() for k in config.keywords)
        entropy_hit = (
            residual >= config.min_residual_length
            and entropy >= config.entropy_threshold_bits_per_char
        )
        if keyword_hit:
            trigger = SecretTrigger.KEYWORD_MATCH
        elif entropy_hit:
            trigger = SecretTrigger.ENTROPY_MATCH
        else:
            continue
        out.append(SecretCandidate(name, value, source, trigger, entropy, residual))
    return out


def normalize_body(
    body: bytes, strip: tuple[str, ...] = (), strip_dates: bool = True
) -> bytes:
    """Remove the given nonce strings and (by default) RFC 1123 dates before
    comparison."""
    for token in strip:
        body = body.replace(token.encode(), b"")
    return _RFC1123_DATE.sub(b"", body) if strip_dates else body


def responses_identical(
    a: HttpExchange,
    b: HttpExchange,
    strip: tuple[str, ...] = (),
    strip_dates: bool = True,
) -> bool:
    """Byte-equality of the two bodies after nonce/date normalization;
    headers are deliberately excluded. ``strip_dates=False`` demands the
    stricter, date-sensitive comparison."""
    return normalize_body(a.body, strip, strip_dates) == normalize_body(
        b.body, strip, strip_dates
    )


@dataclass
class WcdTestConfig:
    """Everything one attack run needs besides the page and identities."""

    extension: str = "css"
    randomness: RandomnessConfig = field(default_factory=RandomnessConfig)
    names: RandomNameGenerator = field(default_factory=RandomNameGenerator)
    rate_limiter: RateLimiter | None = None
    transport: Transport | None = None
    attacker_delay: float = 0.0
    delay_fn: Callable[[float], None] = time.sleep
    embed_query: str | None = None
    # Part of the "identical responses" definition: strip RFC 1123 dates
    # before comparing (the nonce is always stripped).
    normalize_dates: bool = True
    # Optional HttpExchange -> vendor labels hook (reporting owns the tables).
    label_fn: Callable[[HttpExchange], list[str]] | None = None


@dataclass(frozen=True)
class ScanVerdict:
    """Outcome of one (page, technique) attack.

    ``vulnerable`` is true iff markers leaked, or the victim/attacker bodies
    were identical and secret candidates were found. ``inconclusive`` flags
    network failure mid-test, distinct from a clean negative. Cache-evidence
    fields are recorded for reporting only.
    """

    page: str
    technique: PathConfusionTechnique
    attack_url: str
    victim_status: int
    attacker_status: int
    unauth_status: int
    markers_leaked: tuple[str, ...]
    secrets: tuple[SecretCandidate, ...]
    responses_identical: bool
    unauth_exploitable: bool
    vulnerable: bool
    inconclusive: bool = False
    error: str | None = None
    cache_control: str = ""
    pragma: str = ""
    expires: str = ""
    cache_evidence: tuple[tuple[str, str], ...] = ()
    cdn_labels: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {
            "page": self.page,
            "technique": self.technique.value,
            "attack_url": self.attack_url,
            "victim_status": self.victim_status,
            "attacker_status": self.attacker_status,
            "unauth_status": self.unauth_status,
            "markers_leaked": list(self.markers_leaked),
            "secrets": [
                {
                    "name": s.name,
                    "value": s.value,
                    "source": s.source.value,
                    "trigger": s.trigger.value,
                    "entropy_bits_per_char": s.entropy_bits_per_char,
                    "residual_length": s.residual_length,
                }
                for s in self.secrets
            ],
            "responses_identical": self.responses_identical,
            "unauth_exploitable": self.unauth_exploitable,
            "vulnerable": self.vulnerable,
            "inconclusive": self.inconclusive,
            "error": self.error,
            "cache_control": self.cache_control,
            "pragma": self.pragma,
            "expires": self.expires,
            "cache_evidence": dict(self.cache_evidence),
            "cdn_labels": list(self.cdn_labels),
        }

    @classmethod
    def from_record(cls, record: dict) -> "ScanVerdict":
        return cls(
            page=record["page"],
            technique=PathConfusionTechnique.from_name(record["technique"]),
            attack_url=record["attack_url"],
            victim_status=record["victim_status"],
            attacker_status=record["attacker_status"],
            unauth_status=record["unauth_status"],
            markers_leaked=tuple(record["markers_leaked"]),
            secrets=tuple(
                SecretCandidate(
                    name=s["name"],
                    value=s["value"],
                    source=SecretSource(s["source"]),
                    trigger=SecretTrigger(s["trigger"]),
                    entropy_bits_per_char=s["entropy_bits_per_char"],
                    residual_length=s["residual_length"],
                )
                for s in record["secrets"]
            ),
            responses_identical=record["responses_identical"],
            unauth_exploitable=record["unauth_exploitable"],
            vulnerable=record["vulnerable"],
            inconclusive=record.get("inconclusive", False),
            error=record.get("error"),
            cache_control=record.get("cache_control", ""),
            pragma=record.get("pragma", ""),
            expires=record.get("expires", ""),
            cache_evidence=tuple(record.get("cache_evidence", {}).items()),
            cdn_labels=tuple(record.get("cdn_labels", ())),
        )


def with_cdn_labels(verdict: ScanVerdict, labels: list[str]) -> ScanVerdict:
    return replace(verdict, cdn_labels=tuple(labels))


def _evidence(exchange: HttpExchange) -> tuple[tuple[str, str], ...]:
    out = []
    for name in CACHE_EVIDENCE_HEADERS:
        value = exchange.header(name)
        if value is not None:
            out.append((name, value))
    return tuple(out)


def run_wcd_test(
    page: ParsedUrl,
    technique: PathConfusionTechnique,
    victim: Identity,
    attacker: Identity,
    markers: MarkerSet,
    config: WcdTestConfig,
) -> ScanVerdict:
    """Execute one attack against one page with a fresh nonce.

    Order is fixed: victim fetch, attacker fetch, unauthenticated fetch.
    Secret extraction runs only when the victim and attacker responses are
    identical or a marker already leaked. Network failures yield an
    inconclusive verdict instead of aborting the scan.
    """
    nonce = config.names.next()
    attack: AttackUrl = make_attack_url(
        page, technique, nonce, config.extension, embed_query=config.embed_query
    )
    unauth = Identity(role=Role.UNAUTHENTICATED, user_agent=victim.user_agent)

    statuses = [0, 0, 0]
    try:
        vex = fetch(victim, attack.rendered, config.rate_limiter, config.transport)
        statuses[0] = vex.status
        if config.attacker_delay:
            config.delay_fn(config.attacker_delay)
        aex = fetch(attacker, attack.rendered, config.rate_limiter, config.transport)
        statuses[1] = aex.status
        uex = fetch(unauth, attack.rendered, config.rate_limiter, config.transport)
        statuses[2] = uex.status
    except (NetworkError, TooManyRedirects) as exc:
        return ScanVerdict(
            page=page.text(),
            technique=technique,
            attack_url=attack.rendered,
            victim_status=statuses[0],
            attacker_status=statuses[1],
            unauth_status=statuses[2],
            markers_leaked=(),
            secrets=(),
            responses_identical=False,
            unauth_exploitable=False,
            vulnerable=False,
            inconclusive=True,
            error=str(exc),
        )

    leaked = tuple(extract_markers(aex.body, markers))
    identical = responses_identical(
        vex, aex, strip=(nonce,), strip_dates=config.normalize_dates
    )
    secrets: tuple[SecretCandidate, ...] = ()
    if identical or leaked:
        secrets = tuple(extract_secrets(aex.body, config.randomness))
    vulnerable = bool(leaked) or (identical and bool(secrets))

    unauth_leak = bool(extract_markers(uex.body, markers))
    unauth_exploitable = vulnerable and (
        unauth_leak
        or (
            bool(secrets)
            and normalize_body(uex.body, (nonce,), config.normalize_dates)
            == normalize_body(aex.body, (nonce,), config.normalize_dates)
        )
    )

    return ScanVerdict(
        page=page.text(),
        technique=technique,
        attack_url=attack.rendered,
        victim_status=vex.status,
        attacker_status=aex.status,
        unauth_status=uex.status,
        markers_leaked=leaked,
        secrets=secrets,
        responses_identical=identical,
        unauth_exploitable=unauth_exploitable,
        vulnerable=vulnerable,
        cache_control=aex.header("Cache-Control") or vex.header("Cache-Control") or "",
        pragma=aex.header("Pragma") or "",
        expires=aex.header("Expires") or "",
        cache_evidence=_evidence(aex),
        cdn_labels=tuple(config.label_fn(aex)) if config.label_fn else (),
    )
