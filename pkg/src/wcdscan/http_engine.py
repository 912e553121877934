"""Victim/attacker/unauthenticated HTTP identities, pacing, and fetching.

Every network interaction in the scanner flows through :func:`fetch`, which
keeps per-identity cookie jars authoritative (the transport library is used
for sockets only), follows redirects hop by hop, and takes a pacing token per
request. Identities are confined to one worker at a time; the rate limiter is
shared and internally synchronized; exchanges are immutable once produced.
"""

from __future__ import annotations

import logging
import re
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from email.utils import parsedate_to_datetime
from http.cookies import SimpleCookie
from urllib.parse import urljoin, urlsplit

import requests

log = logging.getLogger(__name__)

DEFAULT_USER_AGENT = (
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 "
    "(KHTML, like Gecko) Chrome/124.0.0.0 Safari/537.36"
)

# Matched on word boundaries against path+query, case-insensitive.
DEFAULT_LOGOUT_PATTERNS = ("logout", "signout", "sign-out", "log-out", "session/destroy")

_REDIRECT_STATUSES = {301, 302, 303, 307, 308}


class NetworkError(Exception):
    """Transport-level failure after bounded retries; the page is skipped."""


class TooManyRedirects(Exception):
    """Redirect chain exceeded the configured depth; the page is skipped."""


class AuthFailure(Exception):
    """Login descriptor did not produce a session; aborts the site scan."""


class Role(Enum):
    VICTIM = "victim"
    ATTACKER = "attacker"
    UNAUTHENTICATED = "unauthenticated"


@dataclass
class Cookie:
    domain: str
    name: str
    value: str
    expiry: float | None = None  # absolute epoch seconds; None = session cookie

    def expired(self, now: float) -> bool:
        return self.expiry is not None and self.expiry <= now


@dataclass
class LoginDescriptor:
    """Declarative login: POST ``fields`` to ``url`` and check the outcome."""

    url: str
    fields: dict[str, str]
    method: str = "POST"
    success_statuses: tuple[int, ...] = (200,)
    success_marker: str | None = None


@dataclass
class Identity:
    """One browsing persona with its own cookie jar.

    The unauthenticated persona never sends nor stores cookies, so its jar is
    empty at every request.
    """

    role: Role
    cookie_jar: dict[tuple[str, str], Cookie] = field(default_factory=dict)
    credentials: LoginDescriptor | None = None
    user_agent: str = DEFAULT_USER_AGENT

    def cookie_header(self, host: str, now: float | None = None) -> str | None:
        if self.role is Role.UNAUTHENTICATED:
            return None
        now = time.time() if now is None else now
        pairs = [
            f"{c.name}={c.value}"
            for c in self.cookie_jar.values()
            if c.domain == host and not c.expired(now)
        ]
        return "; ".join(pairs) if pairs else None

    def store_set_cookie(self, host: str, header_value: str) -> None:
        if self.role is Role.UNAUTHENTICATED:
            return
        jar = SimpleCookie()
        try:
            jar.load(header_value)
        except Exception:  # malformed cookie: ignore, never abort a fetch
            log.debug("unparseable Set-Cookie from %s: %r", host, header_value)
            return
        for name, morsel in jar.items():
            domain = (morsel["domain"] or host).lstrip(".").lower()
            expiry: float | None = None
            if morsel["max-age"]:
                try:
                    expiry = time.time() + int(morsel["max-age"])
                except ValueError:
                    pass
            elif morsel["expires"]:
                try:
                    expiry = parsedate_to_datetime(morsel["expires"]).timestamp()
                except (TypeError, ValueError):
                    pass
            self.cookie_jar[(domain, name)] = Cookie(domain, name, morsel.value, expiry)

    def has_expired_cookies(self, now: float | None = None) -> bool:
        now = time.time() if now is None else now
        return any(c.expired(now) for c in self.cookie_jar.values())


@dataclass(frozen=True)
class HttpExchange:
    """One request/response pair. The body is kept verbatim (bytes) because
    marker search depends on exact content."""

    url: str
    method: str
    request_headers: tuple[tuple[str, str], ...]
    status: int
    response_headers: tuple[tuple[str, str], ...]
    body: bytes
    timing: float  # milliseconds
    identity_role: Role
    history: tuple[tuple[str, int], ...] = ()

    def header(self, name: str) -> str | None:
        lowered = name.lower()
        for key, value in self.response_headers:
            if key.lower() == lowered:
                return value
        return None


class RateLimiter:
    """Per-host pacing: at most ``rate`` requests in any trailing 1 s window.

    A small slack is added to the window so that network jitter downstream of
    the limiter cannot compress two boundary requests into the same observed
    second. ``burst`` bounds how many requests may be dispatched back-to-back
    but never loosens the window guarantee. Thread-safe.
    """

    def __init__(
        self,
        rate: float = 2.0,
        burst: int = 4,
        slack: float = 0.05,
        time_fn=time.monotonic,
        sleep_fn=time.sleep,
    ):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self._max_in_window = max(1, int(rate))
        self.window = (1.0 if rate >= 1 else 1.0 / rate) + slack
        self.burst = max(1, min(int(burst), self._max_in_window))
        self._time = time_fn
        self._sleep = sleep_fn
        self._lock = threading.Lock()
        self._sent: dict[str, deque[float]] = {}

    def acquire(self, host: str) -> None:
        while True:
            with self._lock:
                now = self._time()
                sent = self._sent.setdefault(host, deque())
                while sent and sent[0] <= now - self.window:
                    sent.popleft()
                if len(sent) < self._max_in_window:
                    sent.append(now)
                    return
                wait = sent[0] + self.window - now
            self._sleep(max(wait, 0.001))


@dataclass
class Transport:
    """Socket-level knobs shared by all fetches in a run.

    ``resolve_overrides`` maps a logical hostname to a concrete (ip, port) to
    connect to while still sending the logical Host header; this is how the
    scanner reaches lab vhosts without DNS. Proxy settings are taken from the
    environment by the underlying library.
    """

    resolve_overrides: dict[str, tuple[str, int]] = field(default_factory=dict)
    timeout: float = 10.0
    max_redirects: int = 10
    retries: int = 2
    retry_backoff: float = 0.1


DEFAULT_TRANSPORT = Transport()


def _connect_url(url: str, transport: Transport) -> tuple[str, str | None]:
    """Rewrite the URL for an override target; returns (url, host_header)."""
    parts = urlsplit(url)
    host = (parts.hostname or "").lower()
    if host in transport.resolve_overrides:
        ip, port = transport.resolve_overrides[host]
        rest = parts.path or "/"
        if parts.query:
            rest += "?" + parts.query
        return f"http://{ip}:{port}{rest}", host
    return url, None


def _issue(method: str, url: str, headers: dict, data, transport: Transport):
    last_exc: Exception | None = None
    for attempt in range(transport.retries + 1):
        try:
            return requests.request(
                method,
                url,
                headers=headers,
                data=data,
                allow_redirects=False,
                timeout=transport.timeout,
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_exc = exc
            if attempt < transport.retries:
                time.sleep(transport.retry_backoff)
    raise NetworkError(f"{method} {url} failed after retries: {last_exc}")


def fetch(
    identity: Identity,
    url: str,
    rate_limiter: RateLimiter | None = None,
    transport: Transport | None = None,
    extra_headers: dict[str, str] | None = None,
    method: str = "GET",
    data: dict[str, str] | None = None,
) -> HttpExchange:
    """Fetch a URL as the given identity, following redirects hop by hop.

    Cookies are sent/stored per the identity's jar (never for the
    unauthenticated role), every hop takes a pacing token, and the full hop
    chain is recorded on the returned exchange.
    """
    transport = transport or DEFAULT_TRANSPORT
    history: list[tuple[str, int]] = []
    current = url
    started = time.monotonic()
    for _hop in range(transport.max_redirects + 1):
        parts = urlsplit(current)
        host = (parts.hostname or "").lower()
        if rate_limiter is not None:
            rate_limiter.acquire(host)
        connect_url, host_header = _connect_url(current, transport)
        headers = {"User-Agent": identity.user_agent, "Accept": "*/*"}
        if host_header:
            headers["Host"] = host_header
        cookie = identity.cookie_header(host)
        if cookie:
            headers["Cookie"] = cookie
        if extra_headers:
            headers.update(extra_headers)
        resp = _issue(method, connect_url, headers, data, transport)
        for set_cookie in resp.raw.headers.getlist("Set-Cookie"):
            identity.store_set_cookie(host, set_cookie)
        if resp.status_code in _REDIRECT_STATUSES and resp.headers.get("Location"):
            history.append((current, resp.status_code))
            current = urljoin(current, resp.headers["Location"])
            if resp.status_code in (301, 302, 303):
                method, data = "GET", None
            continue
        elapsed_ms = (time.monotonic() - started) * 1000.0
        return HttpExchange(
            url=current,
            method=method,
            request_headers=tuple(headers.items()),
            status=resp.status_code,
            response_headers=tuple(resp.headers.items()),
            body=resp.content,
            timing=elapsed_ms,
            identity_role=identity.role,
            history=tuple(history),
        )
    raise TooManyRedirects(f"more than {transport.max_redirects} redirects from {url}")


def maintain_session(
    identity: Identity,
    rate_limiter: RateLimiter | None = None,
    transport: Transport | None = None,
) -> Identity:
    """Re-run the login descriptor when the jar is empty or holds expired
    cookies; a fresh jar triggers no network activity."""
    if identity.credentials is None:
        raise AuthFailure("identity has no login descriptor")
    now = time.time()
    if identity.cookie_jar and not identity.has_expired_cookies(now):
        return identity
    for key in [k for k, c in identity.cookie_jar.items() if c.expired(now)]:
        del identity.cookie_jar[key]
    login = identity.credentials
    exchange = fetch(
        identity,
        login.url,
        rate_limiter,
        transport,
        method=login.method,
        data=login.fields,
    )
    ok = exchange.status in login.success_statuses
    if ok and login.success_marker is not None:
        ok = login.success_marker.encode() in exchange.body
    if not ok or not identity.cookie_jar:
        raise AuthFailure(
            f"login to {login.url} failed for {identity.role.value} "
            f"(status {exchange.status}, cookies {len(identity.cookie_jar)})"
        )
    return identity


def is_logout_link(url: str, blacklist: tuple[str, ...] = DEFAULT_LOGOUT_PATTERNS) -> bool:
    """True when any blacklist pattern matches the path or query on word
    boundaries, case-insensitively."""
    parts = urlsplit(url)
    haystack = parts.path
    if parts.query:
        haystack += "?" + parts.query
    for pattern in blacklist:
        rx = r"(?<![a-z0-9])" + re.escape(pattern) + r"(?![a-z0-9])"
        if re.search(rx, haystack, re.IGNORECASE):
            return True
    return False
