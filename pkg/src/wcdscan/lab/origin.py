"""Origin-side URL interpretation variants that enable path confusion.

Each variant models a real server behavior: rewriting extra path segments
into parameters, or cutting the URL at a newline, semicolon, fragment, or
question mark that the fronting cache did not treat as a delimiter.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from urllib.parse import unquote


class OriginVariant(Enum):
    PATH_PARAMETER_FALLBACK = "path_parameter_fallback"
    TRUNCATE_AT_NEWLINE = "truncate_at_newline"
    SEMICOLON_PARAMS = "semicolon_params"
    TRUNCATE_AT_FRAGMENT = "truncate_at_fragment"
    TRUNCATE_AT_QUESTION = "truncate_at_question"


# Applied in this order; the first enabled variant whose delimiter appears
# in the (possibly decoded) path wins.
_TRUNCATION_CHARS = (
    (OriginVariant.TRUNCATE_AT_NEWLINE, "\n"),
    (OriginVariant.SEMICOLON_PARAMS, ";"),
    (OriginVariant.TRUNCATE_AT_FRAGMENT, "#"),
    (OriginVariant.TRUNCATE_AT_QUESTION, "?"),
)


@dataclass(frozen=True)
class OriginSemantics:
    """How the origin maps a wire path to a resource.

    ``decode_before_route`` percent-decodes before any variant is applied;
    without it, encoded delimiters never reach the truncation logic. An empty
    variant set is valid and means exact routing.
    """

    variants: frozenset[OriginVariant] = frozenset()
    decode_before_route: bool = False

    def to_dict(self) -> dict:
        return {
            "variants": sorted(v.value for v in self.variants),
            "decode_before_route": self.decode_before_route,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OriginSemantics":
        return cls(
            variants=frozenset(OriginVariant(v) for v in data.get("variants", [])),
            decode_before_route=bool(data.get("decode_before_route", False)),
        )


def effective_path(semantics: OriginSemantics, raw_path: str) -> str:
    """The path the origin routes on, after decode and truncation."""
    path = unquote(raw_path) if semantics.decode_before_route else raw_path
    for variant, char in _TRUNCATION_CHARS:
        if variant in semantics.variants and char in path:
            return path.split(char, 1)[0]
    return path


def route(semantics: OriginSemantics, raw_path: str, known_paths) -> str | None:
    """Resolve a wire path to a known resource path, or None for a 404.

    With the path-parameter fallback enabled, unmatched paths fall back to
    the longest known prefix ending at a slash (trailing segments become
    parameters the resource ignores).
    """
    path = effective_path(semantics, raw_path)
    if path in known_paths:
        return path
    if OriginVariant.PATH_PARAMETER_FALLBACK in semantics.variants:
        slashes = [i for i, ch in enumerate(path) if ch == "/"]
        for i in reversed(slashes):
            candidate = path[:i] if i > 0 else "/"
            if candidate in known_paths:
                return candidate
    return None
