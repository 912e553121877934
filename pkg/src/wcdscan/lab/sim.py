"""Deterministic origin server + caching proxy pair with a controllable clock.

A SimSite bundles origin URL semantics, a cache rules profile, resources with
per-account template slots, and login state. ``proxy_handle`` is the cache in
front of ``origin_resolve``; entries live and die by the site's SimClock, so
expiry scenarios replay identically every run. One SimSite instance is
single-threaded by contract; independent sites may run concurrently.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from string import Template
from urllib.parse import unquote

from ..cache_policy import (
    CdnProfile,
    builtin_profile,
    parse_cache_control,
    profile_from_dict,
    profile_to_dict,
    decide,
)
from .origin import OriginSemantics, route

GENERIC_404_BODY = (
    "<html><head><title>Not Found</title></head>"
    "<body><h1>404 Not Found</h1>"
    "<p>The requested resource was not found on this server.</p></body></html>"
)
LOGIN_REQUIRED_BODY = (
    '<html><body><p>Sign in required.</p><a href="/login">Sign in</a></body></html>'
)
FORBIDDEN_BODY = "<html><body><h1>403 Forbidden</h1></body></html>"
BAD_LOGIN_BODY = "<html><body><p>Invalid credentials.</p></body></html>"
SIGNED_IN_BODY = '<html><body><p>Signed in.</p><a href="/">Continue</a></body></html>'


class CacheEvent(Enum):
    HIT = "hit"
    MISS_STORED = "miss_stored"
    MISS_NOT_STORED = "miss_not_stored"
    EXPIRED = "expired"


@dataclass
class SimClock:
    """Simulated seconds; advances only via :func:`advance_clock`."""

    now: float = 0.0


def advance_clock(clock: SimClock, seconds: float) -> SimClock:
    if seconds < 0:
        raise ValueError("clock can only move forward")
    clock.now += seconds
    return clock


@dataclass
class CacheEntry:
    key: str
    body: bytes
    status: int
    headers: tuple[tuple[str, str], ...]
    stored_at: float
    ttl: float
    region: str

    def fresh(self, now: float) -> bool:
        return self.stored_at + self.ttl > now


@dataclass
class LabRequest:
    method: str = "GET"
    target: str = "/"  # path[?query], percent-encoding exactly as on the wire
    cookies: dict[str, str] = field(default_factory=dict)
    region: str = "default"
    form: dict[str, str] | None = None


@dataclass
class LabResponse:
    status: int
    headers: list[tuple[str, str]]
    body: bytes

    def header(self, name: str) -> str | None:
        lowered = name.lower()
        for key, value in self.headers:
            if key.lower() == lowered:
                return value
        return None


@dataclass
class OriginResponse:
    resource_path: str | None
    status: int
    body: bytes
    headers: dict[str, str]


@dataclass
class LabResource:
    """One origin resource; the body template may carry ``$field`` slots that
    render from the requesting account's values."""

    path: str
    body_template: str
    status: int = 200
    headers: dict[str, str] = field(default_factory=dict)
    protected: bool = False
    content_type: str = "text/html; charset=utf-8"

    def render(self, values: dict[str, str] | None) -> bytes:
        return Template(self.body_template).safe_substitute(values or {}).encode()


@dataclass
class LabAccount:
    username: str
    password: str
    values: dict[str, str] = field(default_factory=dict)
    is_victim: bool = False


@dataclass
class LabAuth:
    """Login configuration plus live session state for one site."""

    accounts: dict[str, LabAccount]
    marker_labels: tuple[str, ...] = ()
    cookie_name: str = "sid"
    mode: str = "redirect"  # or "forbid"
    login_path: str = "/login"
    rotate: bool = False
    sessions: dict[str, str] = field(default_factory=dict)
    login_count: int = 0

    def victim(self) -> LabAccount:
        for account in self.accounts.values():
            if account.is_victim:
                return account
        raise LookupError("site has no victim account")

    def issue(self, username: str, site_name: str) -> str:
        self.login_count += 1
        basis = f"{site_name}|{username}"
        if self.rotate:
            basis += f"|{self.login_count}"
        token = "s" + hashlib.sha1(basis.encode()).hexdigest()[:15]
        self.sessions[token] = username
        return token

    def resolve(self, cookies: dict[str, str]) -> str | None:
        return self.sessions.get(cookies.get(self.cookie_name, ""))


@dataclass
class SimSite:
    """One simulated site: origin semantics + cache profile + resources."""

    name: str
    host: str
    origin: OriginSemantics
    cache_profile: CdnProfile
    resources: dict[str, LabResource]
    proxy_decodes_percent: bool = False
    auth: LabAuth | None = None
    ttl_overrides: dict[str, int] = field(default_factory=dict)
    tiered_retry: bool = False
    entries: dict[tuple[str, str], CacheEntry] = field(default_factory=dict)
    origin_requests: int = 0

    def __post_init__(self):
        if len({r.path for r in self.resources.values()}) != len(self.resources):
            raise ValueError("resource paths must be unique")

    def reset(self) -> None:
        self.entries.clear()
        self.origin_requests = 0
        if self.auth:
            self.auth.sessions.clear()
            self.auth.login_count = 0

    def session_user(self, cookies: dict[str, str]) -> str | None:
        return self.auth.resolve(cookies) if self.auth else None

    def marker_pages(self) -> list[str]:
        """Protected resource paths whose victim rendering embeds a marker."""
        if not self.auth or not self.auth.marker_labels:
            return []
        victim = self.auth.victim()
        out = []
        for path in sorted(self.resources):
            res = self.resources[path]
            if not res.protected:
                continue
            body = res.render(victim.values)
            if any(victim.values[l].encode() in body for l in self.auth.marker_labels):
                out.append(path)
        return out

    def to_dict(self) -> dict:
        data: dict = {
            "name": self.name,
            "host": self.host,
            "origin": self.origin.to_dict(),
            "cache_profile": profile_to_dict(self.cache_profile),
            "proxy_decodes_percent": self.proxy_decodes_percent,
            "tiered_retry": self.tiered_retry,
            "resources": [
                {
                    "path": r.path,
                    "body": r.body_template,
                    "status": r.status,
                    "headers": r.headers,
                    "protected": r.protected,
                    "content_type": r.content_type,
                }
                for r in self.resources.values()
            ],
        }
        if self.ttl_overrides:
            data["ttl_overrides"] = self.ttl_overrides
        if self.auth:
            data["auth"] = {
                "cookie_name": self.auth.cookie_name,
                "mode": self.auth.mode,
                "login_path": self.auth.login_path,
                "rotate": self.auth.rotate,
                "marker_labels": list(self.auth.marker_labels),
                "accounts": [
                    {
                        "username": a.username,
                        "password": a.password,
                        "values": a.values,
                        "is_victim": a.is_victim,
                    }
                    for a in self.auth.accounts.values()
                ],
            }
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SimSite":
        profile_data = data["cache_profile"]
        if isinstance(profile_data, str):
            profile = builtin_profile(profile_data)
        else:
            profile = profile_from_dict(profile_data)
        auth = None
        if "auth" in data:
            ad = data["auth"]
            auth = LabAuth(
                accounts={
                    a["username"]: LabAccount(
                        username=a["username"],
                        password=a["password"],
                        values=dict(a.get("values", {})),
                        is_victim=bool(a.get("is_victim", False)),
                    )
                    for a in ad["accounts"]
                },
                marker_labels=tuple(ad.get("marker_labels", ())),
                cookie_name=ad.get("cookie_name", "sid"),
                mode=ad.get("mode", "redirect"),
                login_path=ad.get("login_path", "/login"),
                rotate=bool(ad.get("rotate", False)),
            )
        return cls(
            name=data["name"],
            host=data["host"],
            origin=OriginSemantics.from_dict(data["origin"]),
            cache_profile=profile,
            resources={
                r["path"]: LabResource(
                    path=r["path"],
                    body_template=r["body"],
                    status=int(r.get("status", 200)),
                    headers=dict(r.get("headers", {})),
                    protected=bool(r.get("protected", False)),
                    content_type=r.get("content_type", "text/html; charset=utf-8"),
                )
                for r in data["resources"]
            },
            proxy_decodes_percent=bool(data.get("proxy_decodes_percent", False)),
            auth=auth,
            ttl_overrides=dict(data.get("ttl_overrides", {})),
            tiered_retry=bool(data.get("tiered_retry", False)),
        )


def origin_resolve(
    site: SimSite, raw_target: str, session_user: str | None = None
) -> OriginResponse:
    """Resolve a wire target through the site's URL semantics and render it.

    Unauthenticated access to a protected resource yields a login redirect or
    403 per the site's auth mode; unmatched paths yield a generic 404. Total:
    every input produces a response.
    """
    raw_path = raw_target.partition("?")[0]
    resolved = route(site.origin, raw_path, site.resources.keys())
    if resolved is None:
        return OriginResponse(
            None, 404, GENERIC_404_BODY.encode(), {"Content-Type": "text/html; charset=utf-8"}
        )
    res = site.resources[resolved]
    if res.protected:
        if site.auth is None or session_user is None:
            if site.auth is not None and site.auth.mode == "redirect":
                return OriginResponse(
                    resolved,
                    302,
                    LOGIN_REQUIRED_BODY.encode(),
                    {
                        "Content-Type": "text/html; charset=utf-8",
                        "Location": site.auth.login_path,
                    },
                )
            return OriginResponse(
                resolved, 403, FORBIDDEN_BODY.encode(), {"Content-Type": "text/html; charset=utf-8"}
            )
        values = site.auth.accounts[session_user].values
    else:
        values = None
        if site.auth and session_user in site.auth.accounts:
            values = site.auth.accounts[session_user].values
    headers = {"Content-Type": res.content_type}
    headers.update(res.headers)
    return OriginResponse(resolved, res.status, res.render(values), headers)


def handle_login(site: SimSite, form: dict[str, str]) -> LabResponse:
    """POST login flow: valid credentials set the session cookie and redirect
    to the home page."""
    if site.auth is None:
        return LabResponse(404, [("Content-Type", "text/html")], GENERIC_404_BODY.encode())
    account = site.auth.accounts.get(form.get("username", ""))
    if account is None or account.password != form.get("password", ""):
        return LabResponse(403, [("Content-Type", "text/html")], BAD_LOGIN_BODY.encode())
    token = site.auth.issue(account.username, site.name)
    return LabResponse(
        303,
        [
            ("Content-Type", "text/html"),
            ("Location", "/"),
            ("Set-Cookie", f"{site.auth.cookie_name}={token}; Max-Age=3600; Path=/"),
        ],
        SIGNED_IN_BODY.encode(),
    )


def _proxy_view(site: SimSite, target: str) -> tuple[str, str]:
    """(cache key, rule-matching path) for the proxy's view of the target."""
    if site.proxy_decodes_percent:
        decoded = unquote(target).split("#", 1)[0]
        return decoded, decoded.partition("?")[0]
    return target, target.partition("?")[0]


_VENDOR_HEADERS = {
    "akamai_default": lambda hit, tag: [
        ("Server", "AkamaiGHost"),
        ("X-Cache", f"TCP_{'HIT' if hit else 'MISS'} from cache-lab (AkamaiGHost)"),
    ],
    "cloudflare_default": lambda hit, tag: [
        ("Server", "cloudflare"),
        ("CF-Cache-Status", "HIT" if hit else "MISS"),
        ("CF-Ray", f"{tag}-LAB"),
    ],
    "cloudfront_default": lambda hit, tag: [
        ("Via", f"1.1 {tag}.cloudfront.net (CloudFront)"),
        ("X-Amz-Cf-Id", tag),
        ("X-Amz-Cf-Pop", "LAB50-C1"),
        ("X-Cache", f"{'Hit' if hit else 'Miss'} from cloudfront"),
    ],
    "fastly_default": lambda hit, tag: [
        ("X-Served-By", "cache-lab-LAB"),
        ("X-Fastly-Request-Id", tag),
        ("X-Cache", "HIT" if hit else "MISS"),
    ],
}


def _proxy_headers(site: SimSite, hit: bool, key: str) -> list[tuple[str, str]]:
    tag = hashlib.sha1(f"{site.name}|{key}".encode()).hexdigest()[:16]
    make = _VENDOR_HEADERS.get(site.cache_profile.name)
    if make is None:
        return [("X-Cache", "HIT" if hit else "MISS"), ("Via", "1.1 cache-lab")]
    return make(hit, tag)


def proxy_handle(
    site: SimSite, request: LabRequest, clock: SimClock
) -> tuple[LabResponse, CacheEvent]:
    """Serve one request through the caching proxy.

    The cache key is the proxy-visible URL (decoded only when the proxy
    decodes percent-encoding). Fresh entries are served without contacting
    the origin; otherwise the response is forwarded and stored or not per the
    profile decision. With ``tiered_retry``, a miss is converted into a hit
    when any region holds a fresh entry for the key.
    """
    if request.method == "POST":
        if site.auth and request.target.partition("?")[0] == site.auth.login_path:
            response = handle_login(site, request.form or {})
        else:
            site.origin_requests += 1
            o = origin_resolve(site, request.target, site.session_user(request.cookies))
            response = LabResponse(o.status, list(o.headers.items()), o.body)
        response.headers.extend(_proxy_headers(site, False, request.target))
        return response, CacheEvent.MISS_NOT_STORED

    key, rule_path = _proxy_view(site, request.target)
    now = clock.now
    event: CacheEvent | None = None

    entry = site.entries.get((request.region, key))
    if entry is None and site.tiered_retry:
        for (_region, other_key), other in site.entries.items():
            if other_key == key:
                entry = other
                break
    if entry is not None:
        if entry.fresh(now):
            headers = list(entry.headers)
            headers.append(("Age", str(int(now - entry.stored_at))))
            headers.extend(_proxy_headers(site, True, key))
            return LabResponse(entry.status, headers, entry.body), CacheEvent.HIT
        site.entries.pop((entry.region, key), None)
        event = CacheEvent.EXPIRED

    site.origin_requests += 1
    o = origin_resolve(site, request.target, site.session_user(request.cookies))
    directives = parse_cache_control(o.headers.get("Cache-Control", ""))
    decision = decide(site.cache_profile, rule_path, o.status, directives)
    ttl = decision.ttl
    if decision.store:
        for suffix, seconds in site.ttl_overrides.items():
            if rule_path.endswith(suffix):
                ttl = seconds
                break
        site.entries[(request.region, key)] = CacheEntry(
            key=key,
            body=o.body,
            status=o.status,
            headers=tuple(o.headers.items()),
            stored_at=now,
            ttl=ttl,
            region=request.region,
        )
    if event is None:
        event = CacheEvent.MISS_STORED if decision.store else CacheEvent.MISS_NOT_STORED
    headers = list(o.headers.items())
    headers.extend(_proxy_headers(site, False, key))
    return LabResponse(o.status, headers, o.body), event
