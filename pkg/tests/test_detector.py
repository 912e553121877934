"""Marker/secret extraction, randomness scoring, and the full attack step."""

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from wcdscan.cache_policy import CdnProfile, DefaultCached
from wcdscan.detector import (
    Marker,
    MarkerSet,
    RandomnessConfig,
    SecretSource,
    SecretTrigger,
    WcdTestConfig,
    extract_markers,
    extract_secrets,
    normalize_body,
    randomness_score,
    responses_identical,
    run_wcd_test,
    shannon_entropy,
    strip_dictionary_words,
)
from wcdscan.http_engine import HttpExchange, Identity, LoginDescriptor, Role, Transport
from wcdscan.lab import catalog
from wcdscan.lab.origin import OriginVariant
from wcdscan.lab.server import LabServer
from wcdscan.url_toolkit import PathConfusionTechnique, RandomNameGenerator, parse_url

from conftest import fast_limiter


# --- independent reference implementations (kept deliberately separate) ---

def reference_entropy(text: str) -> float:
    n = len(text)
    if n == 0:
        return 0.0
    total = 0.0
    for ch in sorted(set(text)):
        p = text.count(ch) / n
        total += p * math.log2(1.0 / p)
    return total


def reference_strip(value: str, words, min_len: int = 3) -> str:
    vocab = sorted(
        {w.lower() for w in words if len(w) >= min_len}, key=len, reverse=True
    )
    lowered = value.lower()
    out = []
    i = 0
    while i < len(value):
        for word in vocab:
            if lowered.startswith(word, i):
                i += len(word)
                break
        else:
            out.append(value[i])
            i += 1
    return "".join(out)


class TestRandomnessScore:
    def test_single_symbol_distribution(self):
        assert randomness_score("aaaa", RandomnessConfig(dictionary=())) == (4, 0.0)

    def test_uniform_four_symbols(self):
        assert randomness_score("abcd", RandomnessConfig(dictionary=())) == (4, 2.0)

    def test_dictionary_strip_then_entropy(self):
        config = RandomnessConfig(dictionary=("token",))
        assert strip_dictionary_words("tokenx7qz", config) == "x7qz"
        residual, entropy = randomness_score("tokenx7qz", config)
        assert residual == 4
        assert entropy == pytest.approx(reference_entropy("x7qz"), abs=1e-12)
        assert entropy == pytest.approx(2.0)

    def test_empty_residual(self):
        config = RandomnessConfig(dictionary=("token",))
        assert randomness_score("tokentoken", config) == (0, 0.0)

    def test_prose_strips_to_short_residual(self):
        residual, _ = randomness_score("thecatsatonthemat", RandomnessConfig())
        assert residual < RandomnessConfig().min_residual_length

    def test_min_word_length_respected(self):
        config = RandomnessConfig(dictionary=("on", "the"))
        # "on" is below the 3-char minimum and must not be stripped.
        assert strip_dictionary_words("onthe", config) == "on"

    def test_thresholds_must_be_positive(self):
        with pytest.raises(ValueError):
            RandomnessConfig(min_residual_length=0)
        with pytest.raises(ValueError):
            RandomnessConfig(entropy_threshold_bits_per_char=0)

    def test_default_thresholds_pass_hex_tokens_and_fail_prose(self):
        config = RandomnessConfig()
        residual, entropy = randomness_score("9f8e7d6c5b4a3210", config)
        assert residual >= config.min_residual_length
        assert entropy >= config.entropy_threshold_bits_per_char
        residual, entropy = randomness_score("pleaseremembertosavethefile", config)
        assert (
            residual < config.min_residual_length
            or entropy < config.entropy_threshold_bits_per_char
        )


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_-.", max_size=32))
def test_entropy_matches_reference(value):
    assert shannon_entropy(value) == pytest.approx(reference_entropy(value), abs=1e-9)


@settings(deadline=None)
@given(
    st.lists(
        st.sampled_from(["token", "state", "cat", "house", "garden", "blue"]),
        min_size=0,
        max_size=4,
    ),
    st.text(alphabet="xyz0123456789", max_size=10),
)
def test_stripper_matches_reference(words_used, junk):
    value = junk.join(words_used) if words_used else junk
    config = RandomnessConfig()
    assert strip_dictionary_words(value, config) == reference_strip(
        value, config.dictionary
    )


class TestMarkerSet:
    def test_valid(self):
        ms = MarkerSet([("email", "mk9f3kq7zx2w8v4n"), ("name", "mk1a5b8c2d9e4f7g")])
        assert ms.labels() == ["email", "name"]

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            MarkerSet([("email", "short")])

    def test_low_entropy_rejected(self):
        with pytest.raises(ValueError):
            MarkerSet([("email", "aaaaaaaaaaaaaaaa")])

    def test_duplicate_values_rejected(self):
        with pytest.raises(ValueError):
            MarkerSet([("a", "mk9f3kq7zx2w8v4n"), ("b", "mk9f3kq7zx2w8v4n")])


MS = MarkerSet([("email", "zz7q9x2w8v4n6mkp"), ("name", "qq3f8j2k9w5x7vnd")])


class TestExtractMarkers:
    def test_substring_hit(self):
        assert extract_markers(b"<p>contact: zz7q9x2w8v4n6mkp</p>", MS) == ["email"]

    def test_empty_body(self):
        assert extract_markers(b"", MS) == []

    def test_entity_split_marker_is_missed(self):
        # Exact-match only: an HTML entity in the middle breaks the match.
        value = "zz7q9x2w8v4n6mkp"
        body = (value[:8] + "&#x200b;" + value[8:]).encode()
        assert extract_markers(body, MS) == []

    def test_both_markers(self):
        body = b"zz7q9x2w8v4n6mkp qq3f8j2k9w5x7vnd"
        assert extract_markers(body, MS) == ["email", "name"]


class TestExtractSecrets:
    def test_hidden_form_field_keyword(self):
        body = b"<form><input type=hidden name=csrf_token value=abc></form>"
        found = extract_secrets(body, RandomnessConfig())
        assert len(found) == 1
        secret = found[0]
        assert secret.source is SecretSource.HIDDEN_FORM_FIELD
        assert secret.trigger is SecretTrigger.KEYWORD_MATCH
        assert (secret.name, secret.value) == ("csrf_token", "abc")

    def test_anchor_query_keyword(self):
        body = b'<a href="/x?state=9f8e7d6c5b4a3210">next</a>'
        found = extract_secrets(body, RandomnessConfig())
        assert [s.source for s in found] == [SecretSource.ANCHOR_QUERY_STRING]
        assert found[0].trigger is SecretTrigger.KEYWORD_MATCH
        assert found[0].value == "9f8e7d6c5b4a3210"

    def test_inline_variable_prose_is_not_a_candidate(self):
        body = b'<script>var s = "thecatsatonthemat";</script>'
        assert extract_secrets(body, RandomnessConfig()) == []

    def test_inline_variable_entropy_match(self):
        body = b'<script>var blob = "zq8x7w2v9k4j3h6f";</script>'
        found = extract_secrets(body, RandomnessConfig())
        assert len(found) == 1
        assert found[0].source is SecretSource.INLINE_SCRIPT_VARIABLE
        assert found[0].trigger is SecretTrigger.ENTROPY_MATCH
        assert found[0].residual_length >= 8
        assert found[0].entropy_bits_per_char >= 3.0

    def test_script_file_name(self):
        body = b'<script src="/js/a9f3kq7zx2w8v4n6.js"></script>'
        found = extract_secrets(body, RandomnessConfig())
        assert [s.source for s in found] == [SecretSource.SCRIPT_FILE_NAME]
        assert found[0].name == "a9f3kq7zx2w8v4n6.js"
        assert found[0].value == "a9f3kq7zx2w8v4n6"

    def test_plain_script_name_ignored(self):
        body = b'<script src="/js/jquery.min.js"></script>'
        assert extract_secrets(body, RandomnessConfig()) == []

    def test_empty_values_skipped(self):
        body = b'<input type=hidden name=csrf_token value="">'
        assert extract_secrets(body, RandomnessConfig()) == []

    def test_unquoted_and_mixed_markup_survives(self):
        body = (
            b"<html><body><<<broken>> <input type=hidden name=xsrf value=q7w8e9r0>"
            b'<a href="?client_id=xyz123">x</a></body>'
        )
        found = extract_secrets(body, RandomnessConfig())
        names = {s.name for s in found}
        assert "xsrf" in names and "client_id" in names


class _Ex:
    """Tiny HttpExchange factory for body-level tests."""

    @staticmethod
    def make(body: bytes, status: int = 200) -> HttpExchange:
        return HttpExchange(
            url="http://e.com/x",
            method="GET",
            request_headers=(),
            status=status,
            response_headers=(),
            body=body,
            timing=1.0,
            identity_role=Role.VICTIM,
        )


class TestResponsesIdentical:
    def test_identical_bodies(self):
        assert responses_identical(_Ex.make(b"same"), _Ex.make(b"same")) is True

    def test_date_normalization(self):
        a = _Ex.make(b"<p>generated Mon, 13 Jan 2020 10:00:00 GMT</p>")
        b = _Ex.make(b"<p>generated Tue, 14 Jan 2020 11:30:00 GMT</p>")
        assert responses_identical(a, b) is True

    def test_date_normalization_can_be_disabled(self):
        a = _Ex.make(b"<p>generated Mon, 13 Jan 2020 10:00:00 GMT</p>")
        b = _Ex.make(b"<p>generated Tue, 14 Jan 2020 11:30:00 GMT</p>")
        assert responses_identical(a, b, strip_dates=False) is False

    def test_nonce_normalization(self):
        nonce = "n0nc3n0nc3n0nc3x"
        a = _Ex.make(f"<p>missing /{nonce}.css</p>".encode())
        b = _Ex.make(b"<p>missing /.css</p>")
        assert responses_identical(a, b, strip=(nonce,)) is True

    def test_different_pages(self):
        assert responses_identical(_Ex.make(b"404 page"), _Ex.make(b"account page")) is False

    def test_headers_do_not_matter(self):
        a = HttpExchange(
            url="u", method="GET", request_headers=(), status=200,
            response_headers=(("X-Cache", "HIT"),), body=b"x", timing=0,
            identity_role=Role.VICTIM,
        )
        b = HttpExchange(
            url="u", method="GET", request_headers=(), status=200,
            response_headers=(("X-Cache", "MISS"),), body=b"x", timing=0,
            identity_role=Role.ATTACKER,
        )
        assert responses_identical(a, b) is True


def test_normalize_body_strips_all_nonce_occurrences():
    nonce = "abcdefabcdef1234"
    body = f"{nonce} middle {nonce}".encode()
    assert normalize_body(body, (nonce,)) == b" middle "


# --- full attack step against the lab ---


@pytest.fixture(scope="module")
def detector_lab():
    sites = [
        catalog.classic_site(),
        catalog._account_site(
            "det-cf-ns",
            frozenset({OriginVariant.PATH_PARAMETER_FALLBACK}),
            "cloudfront_default",
            no_store=True,
        ),
    ]
    nomatch = catalog._account_site(
        "det-nomatch",
        frozenset({OriginVariant.PATH_PARAMETER_FALLBACK}),
        "akamai_default",
        no_store=False,
    )
    nomatch.cache_profile = CdnProfile(
        name="no_extensions",
        default_cached=DefaultCached.EXTENSION_LIST,
        static_extensions=frozenset(),
        honored=(("no-store", False), ("no-cache", False), ("private", False)),
    )
    sites.append(nomatch)
    server = LabServer(sites).start()
    yield server
    server.stop()


def _identities(host):
    victim = Identity(
        role=Role.VICTIM,
        credentials=LoginDescriptor(
            url=f"http://{host}/login",
            fields={"username": "victim", "password": catalog.VICTIM_PASSWORD},
        ),
    )
    attacker = Identity(
        role=Role.ATTACKER,
        credentials=LoginDescriptor(
            url=f"http://{host}/login",
            fields={"username": "attacker", "password": catalog.ATTACKER_PASSWORD},
        ),
    )
    return victim, attacker


def _config(server, seed=11):
    return WcdTestConfig(
        names=RandomNameGenerator(seed=seed),
        rate_limiter=fast_limiter(),
        transport=Transport(resolve_overrides=server.resolve_overrides()),
    )


def _marker_set(site_name):
    values = catalog.victim_markers(site_name)
    return MarkerSet([(label, value) for label, value in values.items()])


def _login_both(server, host, config):
    from wcdscan.http_engine import maintain_session

    victim, attacker = _identities(host)
    maintain_session(victim, config.rate_limiter, config.transport)
    maintain_session(attacker, config.rate_limiter, config.transport)
    return victim, attacker


class TestRunWcdTest:
    def test_exploitable_page_full_verdict(self, detector_lab):
        host = "classic-pp.test"
        config = _config(detector_lab)
        victim, attacker = _login_both(detector_lab, host, config)
        page = parse_url(f"http://{host}/account.php")
        verdict = run_wcd_test(
            page,
            PathConfusionTechnique.PATH_PARAMETER,
            victim,
            attacker,
            _marker_set("classic-pp"),
            config,
        )
        assert verdict.vulnerable is True
        assert set(verdict.markers_leaked) == {"name", "email"}
        assert verdict.unauth_exploitable is True
        assert verdict.responses_identical is True
        assert verdict.victim_status == 200
        assert verdict.attacker_status == 200
        assert any(s.name == "csrf_token" for s in verdict.secrets)
        assert not verdict.inconclusive

    def test_honored_no_store_is_clean(self, detector_lab):
        host = "det-cf-ns.test"
        config = _config(detector_lab)
        victim, attacker = _login_both(detector_lab, host, config)
        page = parse_url(f"http://{host}/account.php")
        verdict = run_wcd_test(
            page,
            PathConfusionTechnique.PATH_PARAMETER,
            victim,
            attacker,
            _marker_set("det-cf-ns"),
            config,
        )
        assert verdict.vulnerable is False
        assert verdict.markers_leaked == ()
        # Secret gating: both bodies carry csrf fields, but they differ, so
        # no identical-response gate opens and no secrets are reported.
        assert verdict.responses_identical is False
        assert verdict.secrets == ()
        assert verdict.unauth_exploitable is False

    def test_never_stored_profile_is_clean(self, detector_lab):
        host = "det-nomatch.test"
        config = _config(detector_lab)
        victim, attacker = _login_both(detector_lab, host, config)
        page = parse_url(f"http://{host}/account.php")
        verdict = run_wcd_test(
            page,
            PathConfusionTechnique.PATH_PARAMETER,
            victim,
            attacker,
            _marker_set("det-nomatch"),
            config,
        )
        assert verdict.vulnerable is False

    def test_fresh_nonce_per_test(self, detector_lab):
        host = "classic-pp.test"
        config = _config(detector_lab, seed=12)
        victim, attacker = _login_both(detector_lab, host, config)
        page = parse_url(f"http://{host}/account.php")
        markers = _marker_set("classic-pp")
        first = run_wcd_test(
            page, PathConfusionTechnique.PATH_PARAMETER, victim, attacker, markers, config
        )
        second = run_wcd_test(
            page, PathConfusionTechnique.PATH_PARAMETER, victim, attacker, markers, config
        )
        assert first.attack_url != second.attack_url

    def test_fetch_order_victim_attacker_unauth(self, detector_lab):
        host = "classic-pp.test"
        config = _config(detector_lab, seed=13)
        victim, attacker = _login_both(detector_lab, host, config)
        page = parse_url(f"http://{host}/account.php")
        verdict = run_wcd_test(
            page, PathConfusionTechnique.PATH_PARAMETER, victim, attacker,
            _marker_set("classic-pp"), config,
        )
        nonce = verdict.attack_url.rsplit("/", 1)[-1].split(".")[0]
        entries = [
            e for e in detector_lab.request_log(host) if nonce in e.target
        ]
        assert [e.has_cookie for e in entries] == [True, True, False]

    def test_network_failure_is_inconclusive(self):
        config = WcdTestConfig(
            rate_limiter=fast_limiter(),
            transport=Transport(
                resolve_overrides={"gone.test": ("127.0.0.1", 1)},
                retries=0,
                timeout=0.5,
            ),
        )
        victim = Identity(role=Role.VICTIM)
        attacker = Identity(role=Role.ATTACKER)
        page = parse_url("http://gone.test/account.php")
        verdict = run_wcd_test(
            page, PathConfusionTechnique.PATH_PARAMETER, victim, attacker,
            MarkerSet([("email", "zz7q9x2w8v4n6mkp")]), config,
        )
        assert verdict.inconclusive is True
        assert verdict.vulnerable is False
        assert verdict.error

    def test_verdict_record_round_trip(self, detector_lab):
        host = "classic-pp.test"
        config = _config(detector_lab, seed=14)
        victim, attacker = _login_both(detector_lab, host, config)
        page = parse_url(f"http://{host}/account.php")
        verdict = run_wcd_test(
            page, PathConfusionTechnique.PATH_PARAMETER, victim, attacker,
            _marker_set("classic-pp"), config,
        )
        from wcdscan.detector import ScanVerdict

        assert ScanVerdict.from_record(verdict.to_record()) == verdict
