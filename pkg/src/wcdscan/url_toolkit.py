"""URL parsing, structural grouping, and path-confusion payload crafting.

Everything in this module is a pure function over immutable values, so it is
safe to call from any number of concurrent scan workers.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass
from enum import Enum
from urllib.parse import parse_qsl, unquote, urlsplit

NONCE_ALPHABET = string.ascii_lowercase + string.digits
NONCE_LENGTH = 16

_DEFAULT_PORTS = {"http": 80, "https": 443}

# Placeholder substituted for all-digit path segments when grouping.
NUMERIC_PLACEHOLDER = "<num>"

# Country-code suffixes that take a third label for the registrable domain.
# Not a full public-suffix list; see README for the limitation.
_MULTI_PART_SUFFIXES = {
    "co.uk", "org.uk", "ac.uk", "gov.uk", "me.uk",
    "com.au", "net.au", "org.au",
    "co.jp", "ne.jp", "or.jp",
    "co.nz", "org.nz",
    "com.br", "com.cn", "com.mx", "com.tr", "com.ar", "com.sg",
    "co.in", "co.za", "co.kr",
}


class MalformedUrl(ValueError):
    """Raised for inputs that cannot be parsed as absolute http(s) URLs.

    Callers are expected to skip and log the offending input.
    """


class PathConfusionTechnique(Enum):
    """The five URL-crafting variants a scan can probe with."""

    PATH_PARAMETER = "path_parameter"
    ENCODED_NEWLINE = "encoded_newline"
    ENCODED_SEMICOLON = "encoded_semicolon"
    ENCODED_POUND = "encoded_pound"
    ENCODED_QUESTION = "encoded_question"

    @classmethod
    def from_name(cls, name: str) -> "PathConfusionTechnique":
        for t in cls:
            if t.value == name:
                return t
        raise ValueError(f"unknown technique: {name!r}")


# Separator inserted between the base path and the bogus static file name.
_TECHNIQUE_SEPARATORS = {
    PathConfusionTechnique.PATH_PARAMETER: "/",
    PathConfusionTechnique.ENCODED_NEWLINE: "%0A",
    PathConfusionTechnique.ENCODED_SEMICOLON: "%3B",
    PathConfusionTechnique.ENCODED_POUND: "%23",
    PathConfusionTechnique.ENCODED_QUESTION: "%3F",
}


@dataclass(frozen=True)
class ParsedUrl:
    """Structural view of an absolute http(s) URL.

    ``raw_path`` keeps the path portion byte-for-byte as received so that it
    re-serializes exactly; ``path_segments`` are percent-decoded, split on the
    raw (un-encoded) slashes only.
    """

    scheme: str
    host: str
    port: int
    path_segments: tuple[str, ...]
    raw_path: str
    query_params: tuple[tuple[str, str], ...]
    fragment: str | None
    raw: str = ""
    raw_query: str = ""

    def origin(self) -> str:
        host = f"[{self.host}]" if ":" in self.host else self.host
        if self.port == _DEFAULT_PORTS.get(self.scheme):
            return f"{self.scheme}://{host}"
        return f"{self.scheme}://{host}:{self.port}"

    def text(self) -> str:
        """Re-serialize; the path portion is byte-identical to the input."""
        out = self.origin() + self.raw_path
        if self.raw_query:
            out += "?" + self.raw_query
        if self.fragment is not None:
            out += "#" + self.fragment
        return out


@dataclass(frozen=True)
class UrlGroupKey:
    """Structure-only identity of a URL: query values and all-digit path
    segments are abstracted away."""

    host: str
    abstract_path: str
    param_names: tuple[str, ...]

    def sort_key(self) -> tuple:
        return (self.host, self.abstract_path, self.param_names)


@dataclass(frozen=True)
class AttackUrl:
    """A crafted URL that a cache should read as a static resource while the
    origin still resolves it to the base page."""

    base: ParsedUrl
    technique: PathConfusionTechnique
    random_name: str
    extension: str
    rendered: str


class RandomNameGenerator:
    """Produces the bogus file stems (``[a-z0-9]{16}``) appended to attack
    URLs. Seedable so test runs are reproducible."""

    def __init__(self, seed: int | None = None):
        self._rng = random.Random(seed)

    def next(self) -> str:
        return "".join(self._rng.choice(NONCE_ALPHABET) for _ in range(NONCE_LENGTH))


def parse_url(raw: str) -> ParsedUrl:
    """Parse an absolute http(s) URL, preserving the raw path and query order.

    Raises MalformedUrl for non-http(s) schemes, empty hosts, or invalid
    ports; the caller should skip the input and log it.
    """
    try:
        parts = urlsplit(raw)
    except ValueError as exc:
        raise MalformedUrl(f"unparseable URL {raw!r}: {exc}") from exc
    if parts.scheme not in ("http", "https"):
        raise MalformedUrl(f"unsupported scheme in {raw!r}")
    if not parts.hostname:
        raise MalformedUrl(f"missing host in {raw!r}")
    try:
        port = parts.port or _DEFAULT_PORTS[parts.scheme]
    except ValueError as exc:
        raise MalformedUrl(f"invalid port in {raw!r}") from exc

    raw_path = parts.path
    if raw_path in ("", "/"):
        segments: tuple[str, ...] = ()
    else:
        segments = tuple(unquote(seg) for seg in raw_path.lstrip("/").split("/"))

    params = tuple(parse_qsl(parts.query, keep_blank_values=True))
    fragment = parts.fragment if parts.fragment else None
    return ParsedUrl(
        scheme=parts.scheme,
        host=parts.hostname.lower(),
        port=port,
        path_segments=segments,
        raw_path=raw_path,
        query_params=params,
        fragment=fragment,
        raw=raw,
        raw_query=parts.query,
    )


def make_attack_url(
    base: ParsedUrl,
    technique: PathConfusionTechnique,
    random_name: str,
    extension: str = "css",
    embed_query: str | None = None,
) -> AttackUrl:
    """Append a bogus ``<random_name>.<extension>`` to the base path using the
    given technique's separator.

    The base URL's query string and fragment are dropped. ``embed_query``
    switches the encoded-question variant to its embedded-parameter form
    (``%3F<embed_query><name>.<ext>``); it is ignored for other techniques.
    """
    prefix = base.raw_path or "/"
    sep = _TECHNIQUE_SEPARATORS[technique]
    if technique is PathConfusionTechnique.ENCODED_QUESTION and embed_query:
        sep = sep + embed_query
    rendered = f"{base.origin()}{prefix}{sep}{random_name}.{extension}"
    if rendered.count(random_name) != 1:
        raise ValueError(
            f"random name {random_name!r} collides with the base URL {base.raw!r}"
        )
    return AttackUrl(
        base=base,
        technique=technique,
        random_name=random_name,
        extension=extension,
        rendered=rendered,
    )


def _is_numeric_segment(segment: str) -> bool:
    # ASCII digits only; mixed segments like "item28" are not grouped.
    return bool(segment) and all(c in string.digits for c in segment)


def group_key(url: ParsedUrl) -> UrlGroupKey:
    """Structural group key: all-digit path segments are replaced with a
    placeholder and query values are discarded (names kept, sorted)."""
    raw_path = url.raw_path or "/"
    if raw_path == "/":
        abstract = "/"
    else:
        raw_segments = raw_path.lstrip("/").split("/")
        abstract = "/" + "/".join(
            NUMERIC_PLACEHOLDER if _is_numeric_segment(seg) else seg
            for seg in raw_segments
        )
    names = tuple(sorted({name for name, _ in url.query_params}))
    return UrlGroupKey(host=url.host, abstract_path=abstract, param_names=names)


def select_representatives(urls: list[ParsedUrl], seed: int) -> list[ParsedUrl]:
    """Pick one random member per structural group, deterministically.

    The selection depends only on the set of input URLs and the seed: members
    are sorted before the seeded draw, and the output is ordered by group key.
    """
    groups: dict[UrlGroupKey, list[ParsedUrl]] = {}
    for url in urls:
        groups.setdefault(group_key(url), []).append(url)
    rng = random.Random(seed)
    chosen = []
    for key in sorted(groups, key=UrlGroupKey.sort_key):
        members = sorted(set(groups[key]), key=lambda u: u.text())
        chosen.append(members[rng.randrange(len(members))])
    return chosen


def registrable_domain(host: str) -> str:
    """Approximate registrable domain ("site" identity).

    Uses a small built-in table of multi-part country suffixes rather than the
    full public-suffix list; IP addresses and single-label hosts map to
    themselves.
    """
    host = host.lower().rstrip(".")
    labels = host.split(".")
    if len(labels) <= 2 or all(part.isdigit() for part in labels):
        return host
    if ".".join(labels[-2:]) in _MULTI_PART_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])
