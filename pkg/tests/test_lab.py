"""Origin semantics, caching proxy, clock, oracle, and scenario files."""

import copy

import pytest
from hypothesis import given, settings, strategies as st

from wcdscan.cache_policy import CdnProfile, DefaultCached
from wcdscan.lab import catalog
from wcdscan.lab.oracle import enumerate_oracle, oracle_vulnerable
from wcdscan.lab.origin import OriginSemantics, OriginVariant, effective_path, route
from wcdscan.lab.sim import (
    CacheEvent,
    LabRequest,
    SimClock,
    advance_clock,
    origin_resolve,
    proxy_handle,
)
from wcdscan.url_toolkit import PathConfusionTechnique


def _pp_site(profile_name="akamai_default", no_store=False, **kwargs):
    site = catalog._account_site(
        "unit-pp",
        frozenset({OriginVariant.PATH_PARAMETER_FALLBACK}),
        profile_name,
        no_store,
    )
    for key, value in kwargs.items():
        setattr(site, key, value)
    return site


def _victim_cookie(site):
    return {site.auth.cookie_name: site.auth.issue("victim", site.name)}


def _attacker_cookie(site):
    return {site.auth.cookie_name: site.auth.issue("attacker", site.name)}


class TestOriginResolve:
    def test_newline_truncation_with_decode(self):
        site = catalog._account_site(
            "unit-nl",
            frozenset({OriginVariant.TRUNCATE_AT_NEWLINE}),
            "akamai_default",
            no_store=False,
        )
        response = origin_resolve(site, "/account.php%0Anonexistent.css", "victim")
        assert response.status == 200
        assert response.resource_path == "/account.php"
        assert site.auth.accounts["victim"].values["email"].encode() in response.body

    def test_path_parameter_fallback(self):
        site = _pp_site()
        response = origin_resolve(site, "/account.php/nonexistent.css", "victim")
        assert response.status == 200
        assert response.resource_path == "/account.php"

    def test_exact_routing_404(self):
        site = catalog._account_site(
            "unit-none", frozenset(), "akamai_default", no_store=False
        )
        response = origin_resolve(site, "/account.php/nonexistent.css", "victim")
        assert response.status == 404
        assert b"404" in response.body

    def test_protected_without_session_redirects(self):
        site = _pp_site()
        response = origin_resolve(site, "/account.php", None)
        assert response.status == 302
        assert response.headers["Location"] == "/login"

    def test_forbid_mode(self):
        site = _pp_site()
        site.auth.mode = "forbid"
        response = origin_resolve(site, "/account.php", None)
        assert response.status == 403

    def test_semicolon_without_decode_still_fires_on_literal(self):
        site = catalog._account_site(
            "unit-sc", frozenset({OriginVariant.SEMICOLON_PARAMS}), "akamai_default", False
        )
        site.origin = OriginSemantics(
            variants=site.origin.variants, decode_before_route=False
        )
        response = origin_resolve(site, "/account.php;par1;par2", "victim")
        assert response.resource_path == "/account.php"


class TestEffectivePathAndRoute:
    def test_variant_order_first_match_wins(self):
        semantics = OriginSemantics(
            variants=frozenset(
                {OriginVariant.TRUNCATE_AT_NEWLINE, OriginVariant.TRUNCATE_AT_QUESTION}
            ),
            decode_before_route=True,
        )
        assert effective_path(semantics, "/a%0Ab%3Fc") == "/a"

    def test_fallback_walks_to_longest_prefix(self):
        semantics = OriginSemantics(
            variants=frozenset({OriginVariant.PATH_PARAMETER_FALLBACK})
        )
        known = {"/", "/a", "/a/b"}
        assert route(semantics, "/a/b/x/y.css", known) == "/a/b"
        assert route(semantics, "/zzz.css", known) == "/"

    def test_no_variants_is_exact(self):
        assert route(OriginSemantics(), "/a/b", {"/a"}) is None
        assert route(OriginSemantics(), "/a", {"/a"}) == "/a"


class TestProxyHandle:
    def test_classic_replay_stores_then_hits(self):
        site = _pp_site()
        clock = SimClock()
        target = "/account.php/nonexistent.jpg"

        victim_response, victim_event = proxy_handle(
            site, LabRequest(target=target, cookies=_victim_cookie(site)), clock
        )
        assert victim_event is CacheEvent.MISS_STORED
        email = site.auth.accounts["victim"].values["email"].encode()
        assert email in victim_response.body

        attacker_response, attacker_event = proxy_handle(
            site, LabRequest(target=target, cookies=_attacker_cookie(site)), clock
        )
        assert attacker_event is CacheEvent.HIT
        assert email in attacker_response.body

    def test_honored_no_store_never_stored(self):
        site = catalog._account_site(
            "unit-cf",
            frozenset({OriginVariant.PATH_PARAMETER_FALLBACK}),
            "cloudfront_default",
            no_store=True,
        )
        clock = SimClock()
        target = "/account.php/nonexistent.css"
        _, first = proxy_handle(site, LabRequest(target=target, cookies=_victim_cookie(site)), clock)
        assert first is CacheEvent.MISS_NOT_STORED
        attacker_response, second = proxy_handle(
            site, LabRequest(target=target, cookies=_attacker_cookie(site)), clock
        )
        assert second is CacheEvent.MISS_NOT_STORED
        email = site.auth.accounts["victim"].values["email"].encode()
        assert email not in attacker_response.body
        assert site.auth.accounts["attacker"].values["email"].encode() in attacker_response.body

    def test_ttl_expiry_and_refetch(self):
        site = _pp_site()
        clock = SimClock()
        target = "/account.php/nonexistent.css"
        proxy_handle(site, LabRequest(target=target, cookies=_victim_cookie(site)), clock)
        advance_clock(clock, 7200)
        response, event = proxy_handle(
            site, LabRequest(target=target, cookies=_attacker_cookie(site)), clock
        )
        assert event is CacheEvent.EXPIRED
        assert site.auth.accounts["victim"].values["email"].encode() not in response.body

    def test_boundary_one_second_before_expiry_still_hits(self):
        site = _pp_site()
        clock = SimClock()
        target = "/account.php/nonexistent.css"
        proxy_handle(site, LabRequest(target=target, cookies=_victim_cookie(site)), clock)
        advance_clock(clock, 3599)
        _, event = proxy_handle(
            site, LabRequest(target=target, cookies=_attacker_cookie(site)), clock
        )
        assert event is CacheEvent.HIT

    def test_no_origin_contact_on_hit(self):
        site = _pp_site()
        clock = SimClock()
        target = "/account.php/nonexistent.css"
        proxy_handle(site, LabRequest(target=target, cookies=_victim_cookie(site)), clock)
        count = site.origin_requests
        proxy_handle(site, LabRequest(target=target, cookies=_attacker_cookie(site)), clock)
        assert site.origin_requests == count

    def test_cache_key_discipline(self):
        site = _pp_site()
        clock = SimClock()
        cookie = _victim_cookie(site)
        proxy_handle(site, LabRequest(target="/account.php/aaaa.css", cookies=cookie), clock)
        _, event = proxy_handle(
            site, LabRequest(target="/account.php/bbbb.css", cookies=cookie), clock
        )
        assert event is CacheEvent.MISS_STORED  # different nonce, different entry
        _, replay = proxy_handle(
            site, LabRequest(target="/account.php/aaaa.css", cookies=cookie), clock
        )
        assert replay is CacheEvent.HIT

    def test_tiered_retry_across_regions(self):
        site = _pp_site(tiered_retry=False)
        clock = SimClock()
        target = "/account.php/nonexistent.css"
        proxy_handle(
            site, LabRequest(target=target, cookies=_victim_cookie(site), region="boston"), clock
        )
        _, miss = proxy_handle(
            site, LabRequest(target=target, cookies=_attacker_cookie(site), region="trento"), clock
        )
        assert miss is CacheEvent.MISS_STORED  # other region: plain miss

        tiered = _pp_site(tiered_retry=True)
        tiered.name = "unit-pp-tiered"
        clock = SimClock()
        proxy_handle(
            tiered,
            LabRequest(target=target, cookies=_victim_cookie(tiered), region="boston"),
            clock,
        )
        _, hit = proxy_handle(
            tiered,
            LabRequest(target=target, cookies=_attacker_cookie(tiered), region="trento"),
            clock,
        )
        assert hit is CacheEvent.HIT

    def test_post_is_never_cached(self):
        site = _pp_site()
        clock = SimClock()
        response, event = proxy_handle(
            site,
            LabRequest(
                method="POST",
                target="/login",
                form={"username": "victim", "password": catalog.VICTIM_PASSWORD},
            ),
            clock,
        )
        assert event is CacheEvent.MISS_NOT_STORED
        assert response.status == 303
        assert any(k == "Set-Cookie" for k, _ in response.headers)

    def test_ttl_override_applies(self):
        site = _pp_site(ttl_overrides={".css": 60})
        clock = SimClock()
        target = "/account.php/nonexistent.css"
        proxy_handle(site, LabRequest(target=target, cookies=_victim_cookie(site)), clock)
        advance_clock(clock, 61)
        _, event = proxy_handle(
            site, LabRequest(target=target, cookies=_attacker_cookie(site)), clock
        )
        assert event is CacheEvent.EXPIRED

    def test_proxy_decode_changes_rule_view(self):
        site = _pp_site(proxy_decodes_percent=True)
        site.origin = OriginSemantics(
            variants=frozenset({OriginVariant.TRUNCATE_AT_QUESTION}),
            decode_before_route=True,
        )
        clock = SimClock()
        # Decoded view is /account.php?bogus.css: the extension no longer
        # matches, so the akamai-style profile refuses to store it.
        _, event = proxy_handle(
            site,
            LabRequest(target="/account.php%3Fbogus.css", cookies=_victim_cookie(site)),
            clock,
        )
        assert event is CacheEvent.MISS_NOT_STORED


class TestAdvanceClock:
    def test_zero_is_noop(self):
        clock = SimClock()
        advance_clock(clock, 0)
        assert clock.now == 0

    def test_accumulates(self):
        clock = SimClock()
        advance_clock(clock, 3600)
        advance_clock(clock, 3600)
        assert clock.now == 7200

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            advance_clock(SimClock(), -1)


class TestOracle:
    def test_classic_scenario_is_exploitable(self):
        site = catalog.classic_site()
        assert oracle_vulnerable(site, PathConfusionTechnique.PATH_PARAMETER) is True

    def test_question_only_origin(self):
        site = catalog._account_site(
            "unit-qm", frozenset({OriginVariant.TRUNCATE_AT_QUESTION}), "akamai_default", False
        )
        assert oracle_vulnerable(site, PathConfusionTechnique.PATH_PARAMETER) is False
        assert oracle_vulnerable(site, PathConfusionTechnique.ENCODED_QUESTION) is True

    def test_honored_no_store_blocks_all_techniques(self):
        site = catalog._account_site(
            "unit-allns",
            frozenset(
                {
                    OriginVariant.PATH_PARAMETER_FALLBACK,
                    OriginVariant.TRUNCATE_AT_NEWLINE,
                }
            ),
            "cloudfront_default",
            no_store=True,
        )
        site.origin = OriginSemantics(variants=site.origin.variants, decode_before_route=True)
        for technique in PathConfusionTechnique:
            assert oracle_vulnerable(site, technique) is False

    def test_oracle_is_pure(self):
        site = catalog.classic_site()
        snapshot = copy.deepcopy(site.to_dict())
        first = oracle_vulnerable(site, PathConfusionTechnique.PATH_PARAMETER)
        second = oracle_vulnerable(site, PathConfusionTechnique.PATH_PARAMETER)
        assert first == second
        assert site.to_dict() == snapshot
        assert site.entries == {}

    def test_requires_marker_page(self):
        with pytest.raises(ValueError):
            oracle_vulnerable(catalog.sitemap_site(), PathConfusionTechnique.PATH_PARAMETER)

    def test_unmatchable_rules_mean_never_vulnerable(self):
        profile = CdnProfile(
            name="nothing_matches",
            default_cached=DefaultCached.EXTENSION_LIST,
            static_extensions=frozenset(),
            honored=(("no-store", False), ("no-cache", False), ("private", False)),
        )
        site = catalog._account_site(
            "unit-nomatch",
            frozenset({OriginVariant.PATH_PARAMETER_FALLBACK, OriginVariant.TRUNCATE_AT_NEWLINE}),
            "akamai_default",
            no_store=False,
        )
        site.cache_profile = profile
        site.origin = OriginSemantics(variants=site.origin.variants, decode_before_route=True)
        for technique in PathConfusionTechnique:
            assert oracle_vulnerable(site, technique) is False


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(list(PathConfusionTechnique)), st.booleans(), st.booleans())
def test_oracle_deterministic_property(technique, no_store, use_cloudflare):
    site = catalog._account_site(
        "prop-site",
        frozenset({OriginVariant.PATH_PARAMETER_FALLBACK, OriginVariant.SEMICOLON_PARAMS}),
        "cloudflare_default" if use_cloudflare else "fastly_default",
        no_store,
    )
    site.origin = OriginSemantics(variants=site.origin.variants, decode_before_route=True)
    results = {oracle_vulnerable(site, technique) for _ in range(3)}
    assert len(results) == 1


class TestScenarioFiles:
    def test_round_trip(self, tmp_path):
        sites = [catalog.classic_site(), catalog.pacing_site()]
        path = tmp_path / "scenarios.json"
        catalog.dump_scenarios(sites, str(path))
        loaded = catalog.load_scenarios(str(path))
        assert [s.to_dict() for s in loaded] == [s.to_dict() for s in sites]

    def test_loaded_scenario_behaves_like_the_original(self, tmp_path):
        path = tmp_path / "scenarios.json"
        catalog.dump_scenarios([catalog.classic_site()], str(path))
        loaded = catalog.load_scenarios(str(path))[0]
        assert oracle_vulnerable(loaded, PathConfusionTechnique.PATH_PARAMETER) is True
        assert oracle_vulnerable(loaded, PathConfusionTechnique.ENCODED_POUND) is False


class TestControlEndpoints:
    def test_advance_reset_state_over_http(self):
        import requests as req

        from wcdscan.lab.server import LabServer

        site = catalog.classic_site()
        server = LabServer([site]).start()
        base = f"http://{server.address}:{server.port}"
        headers = {"Host": site.host}
        try:
            state = req.get(f"{base}/_lab/state", headers=headers, timeout=5).json()
            assert state["now"] == 0.0
            advanced = req.get(
                f"{base}/_lab/advance", params={"seconds": 42}, headers=headers, timeout=5
            ).json()
            assert advanced["now"] == 42.0
            req.get(f"{base}/", headers=headers, timeout=5)
            listed = req.get(f"{base}/_lab/requests", headers=headers, timeout=5).json()
            assert len(listed["requests"]) == 1
            reset = req.get(f"{base}/_lab/reset", headers=headers, timeout=5).json()
            assert reset == {"reset": True}
            state = req.get(f"{base}/_lab/state", headers=headers, timeout=5).json()
            assert state == {"now": 0.0, "entries": 0, "origin_requests": 0}
            unknown = req.get(f"{base}/_lab/bogus", headers=headers, timeout=5)
            assert unknown.status_code == 404
        finally:
            server.stop()

    def test_unknown_host_rejected(self):
        import requests as req

        from wcdscan.lab.server import LabServer

        server = LabServer([catalog.pacing_site()]).start()
        try:
            response = req.get(
                f"http://{server.address}:{server.port}/",
                headers={"Host": "stranger.test"},
                timeout=5,
            )
            assert response.status_code == 404
        finally:
            server.stop()

    def test_catalog_shape(self):
        matrix = catalog.matrix_sites()
        assert len(matrix) == 128  # 16 semantics subsets x 4 profiles x 2
        assert len({s.host for s in matrix}) == 128
        names = {s.name for s in matrix}
        assert "none-akamai-std" in names
        assert "pp-qm-fastly-ns" in names
        for site in matrix:
            assert site.marker_pages() == ["/account.php"]

    def test_oracle_enumeration_covers_catalog(self):
        sites = catalog.matrix_sites()[:4]
        truth = enumerate_oracle(sites)
        assert len(truth) == 4 * 5
