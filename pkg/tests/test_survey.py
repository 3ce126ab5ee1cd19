import dataclasses
import json

import pytest

from spotfinder.config import config_from_dict, load_config
from spotfinder.detectors import FixtureBackend
from spotfinder.errors import BackendError, DomainError, FatalFetchError
from spotfinder.geo import GeoPoint
from spotfinder.imagery import (
    CostLedger,
    FixtureProvider,
    ImageCache,
    ImageryClient,
    RateLimiter,
)
from spotfinder.store import SpotStore, candidate_id
from spotfinder.survey import SurveyRunner, dry_run, resolve_backend, resolve_provider, run_survey

from conftest import SURVEY9, fixed_clock

# Post-filter street hit totals authored into the fixture plan.
EXPECTED_TOTALS = {0: 0, 1: 10, 2: 23, 3: 6, 4: 12, 5: 20, 6: 0, 7: 21, 8: 15}
EXPECTED_POSITIVE = {2, 7}


class CountingProvider:
    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name
        self.is_network = inner.is_network
        self.fetches = 0

    def fetch(self, request):
        self.fetches += 1
        return self.inner.fetch(request)


class FatalOnceProvider(CountingProvider):
    """Raises a fatal error the first time a trigger request comes through."""

    def __init__(self, inner, trigger_canonical):
        super().__init__(inner)
        self.trigger = trigger_canonical
        self.armed = True

    def fetch(self, request):
        if self.armed and request.canonical() == self.trigger:
            self.armed = False
            raise FatalFetchError("injected credential failure")
        return super().fetch(request)


def make_client(config, provider=None):
    provider = provider or FixtureProvider(config.provider.split(":", 1)[1])
    return ImageryClient(
        provider=provider,
        cache=ImageCache(config.cache_root),
        ledger=CostLedger(config.pricing),
        limiter=RateLimiter(max_inflight=4, min_spacing_s=0.0),
        clock=fixed_clock,
    )


def run_fixture_survey(config, provider=None, store=None):
    client = make_client(config, provider)
    store = store or SpotStore(config.store_path, clock=fixed_clock)
    stats = run_survey(config, client=client, store=store, clock=fixed_clock)
    return stats, store, client


def records_bytes(store, survey_id):
    return json.dumps([r.to_dict() for r in store.records(survey_id)],
                      sort_keys=True).encode()


class TestDryRun:
    def test_fixture_survey_plan(self, survey9_config):
        plan = dry_run(survey9_config)
        assert plan.n_coordinates == 9
        assert plan.n_requests == 45
        assert plan.cost_usd == pytest.approx(9 * 0.030, abs=1e-9)

    def test_campus_scale_plan(self):
        config = config_from_dict({
            "survey_id": "asu",
            "center": {"lat": 33.4184, "lon": -111.9328},
            "half_extent_m": 650.0,
        })
        plan = dry_run(config)
        assert plan.n_coordinates == 1089
        assert plan.n_requests == 5 * 1089
        assert plan.cost_usd == pytest.approx(1089 * 0.030, abs=1e-6)

    def test_single_coordinate_plan(self):
        config = config_from_dict({
            "survey_id": "one",
            "center": {"lat": 33.4184, "lon": -111.9328},
            "half_extent_m": 0.0,
        })
        plan = dry_run(config)
        assert plan.n_coordinates == 1
        assert plan.n_requests == 5
        assert plan.cost_usd == pytest.approx(0.030, abs=1e-9)


class TestRunSurvey:
    def test_counts_and_positives(self, survey9_config):
        stats, store, _ = run_fixture_survey(survey9_config)
        assert stats.n_coordinates == 9
        assert stats.n_positive == 2
        records = store.records("fixture-9")
        by_index = {r.grid_index: r for r in records}
        assert {i: r.counts.total for i, r in by_index.items()} == EXPECTED_TOTALS
        assert {i for i, r in by_index.items() if r.positive} == EXPECTED_POSITIVE

    def test_boundary_coordinate_is_negative(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        boundary = store.get(candidate_id("fixture-9", 5))
        assert boundary.counts.total == 20
        assert boundary.positive is False
        assert boundary.probability == 0.5

    def test_mixed_class_split(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        record = store.get(candidate_id("fixture-9", 7))
        assert record.counts.short_wall == 6
        assert record.counts.railing == 8
        assert record.counts.stairs == 7
        assert record.probability == pytest.approx(21 / 40)

    def test_no_coverage_paths(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        missing_sat = store.get(candidate_id("fixture-9", 0))
        assert missing_sat.imagery["sat"] is None
        assert missing_sat.sat_probs is None

        partial = store.get(candidate_id("fixture-9", 4))
        street_keys = partial.imagery["street"]
        assert street_keys[2] is None
        assert sum(k is not None for k in street_keys) == 3
        assert partial.detections["street2"] == []

        no_street = store.get(candidate_id("fixture-9", 6))
        assert no_street.imagery["street"] == [None] * 4
        assert no_street.counts.total == 0
        assert no_street.positive is False

    def test_satellite_scores_recorded(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        record = store.get(candidate_id("fixture-9", 2))
        assert record.sat_probs == (0.20, 0.90, 0.40, 0.10)

    def test_fixture_survey_is_free(self, survey9_config):
        _, _, client = run_fixture_survey(survey9_config)
        assert client.ledger.requests == 0
        assert client.ledger.total == 0.0

    def test_survey_record_carries_ledger(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        info = store.survey_info("fixture-9")
        assert info["n_coordinates"] == 9
        assert info["n_positive"] == 2
        assert info["ledger"]["total_usd"] == 0

    def test_detections_persisted_for_review(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        record = store.get(candidate_id("fixture-9", 2))
        street0 = record.detections["street0"]
        assert len(street0) == 6
        assert all(d["confidence"] >= 0.75 for d in street0)
        assert all(len(d["polygon"]) >= 3 for d in street0)


class TestDeterminism:
    def test_two_runs_byte_identical(self, survey9_config, tmp_path):
        _, store_a, _ = run_fixture_survey(survey9_config)

        config_b = dataclasses.replace(survey9_config,
                                       store_path=str(tmp_path / "second.jsonl"))
        _, store_b, _ = run_fixture_survey(config_b)
        assert records_bytes(store_a, "fixture-9") == records_bytes(store_b, "fixture-9")

    def test_warm_cache_run_fetches_nothing(self, survey9_config, tmp_path):
        run_fixture_survey(survey9_config)

        config_b = dataclasses.replace(survey9_config,
                                       store_path=str(tmp_path / "second.jsonl"))
        provider = CountingProvider(FixtureProvider(SURVEY9 / "imagery"))
        _, _, client = run_fixture_survey(config_b, provider=provider)
        # Missing fixtures are not cached, so only the six NoCoverage
        # requests (one satellite, five street headings) consult the
        # provider again; nothing is billed.
        assert provider.fetches == 6
        assert client.ledger.requests == 0

    def test_interrupt_and_resume(self, survey9_config, tmp_path):
        baseline_config = dataclasses.replace(
            survey9_config,
            cache_root=str(tmp_path / "baseline-cache"),
            store_path=str(tmp_path / "baseline.jsonl"))
        _, baseline_store, _ = run_fixture_survey(baseline_config)

        # Interrupt: a fatal error while fetching coordinate 4's satellite
        # on a cold cache.
        from spotfinder.imagery import build_satellite_request
        from spotfinder.geo import make_grid
        points = make_grid(survey9_config.grid_spec())
        trigger = build_satellite_request(points[4]).canonical()

        provider = FatalOnceProvider(FixtureProvider(SURVEY9 / "imagery"), trigger)
        store = SpotStore(survey9_config.store_path, clock=fixed_clock)
        with pytest.raises(FatalFetchError):
            run_fixture_survey(survey9_config, provider=provider, store=store)
        committed = store.records("fixture-9")
        assert 0 < len(committed) < 9
        assert [r.grid_index for r in committed] == list(range(len(committed)))

        # Resume with a healthy provider completes the remaining coordinates.
        resume_provider = CountingProvider(FixtureProvider(SURVEY9 / "imagery"))
        stats, store, client = run_fixture_survey(
            survey9_config, provider=resume_provider, store=store)
        assert stats.n_coordinates == 9
        assert client.ledger.requests == 0
        assert records_bytes(store, "fixture-9") == records_bytes(baseline_store, "fixture-9")

    def test_resume_skips_completed_coordinates(self, survey9_config):
        _, store, _ = run_fixture_survey(survey9_config)
        provider = CountingProvider(FixtureProvider(SURVEY9 / "imagery"))
        run_fixture_survey(survey9_config, provider=provider, store=store)
        assert provider.fetches == 0  # everything skipped by candidate id


class TestErrorHandling:
    def test_backend_error_skips_coordinate(self, survey9_config):
        backend = FixtureBackend.from_manifest(SURVEY9 / "backend.json")

        class FlakyBackend(FixtureBackend):
            name = "flaky"

            def segment_street(self, img, provenance=""):
                if "heading=90" in provenance and "33.418400,-111.932800" in provenance:
                    raise BackendError("synthetic failure", provenance=provenance)
                return backend.segment_street(img, provenance)

            def classify_quadrant(self, tile, provenance=""):
                return backend.classify_quadrant(tile, provenance)

        client = make_client(survey9_config)
        store = SpotStore(survey9_config.store_path, clock=fixed_clock)
        stats = run_survey(survey9_config, backend=FlakyBackend(), client=client,
                           store=store, clock=fixed_clock)
        assert stats.n_coordinates == 8  # center coordinate skipped
        errors = store.survey_errors("fixture-9")
        assert len(errors) == 1
        assert errors[0]["grid_index"] == 4


class SyntheticNetworkProvider:
    """Network-shaped provider with full coverage; bills every fetch."""

    name = "network"
    is_network = True

    def fetch(self, request):
        import numpy as np
        w, h = request.size
        return np.full((h, w, 3), 90, dtype=np.uint8)


class TestLedgerBound:
    def test_cold_cache_full_coverage_hits_five_per_coordinate(self, survey9_config):
        client = make_client(survey9_config, provider=SyntheticNetworkProvider())
        store = SpotStore(survey9_config.store_path, clock=fixed_clock)
        backend = FixtureBackend()  # empty manifest: zero detections everywhere
        stats = run_survey(survey9_config, backend=backend, client=client,
                           store=store, clock=fixed_clock)
        assert stats.n_coordinates == 9
        assert client.ledger.sat_requests == 9
        assert client.ledger.street_requests == 36
        assert client.ledger.requests == 5 * 9  # equality: cold cache, full coverage
        assert client.ledger.total == pytest.approx(9 * 0.030, abs=1e-9)

    def test_warm_cache_bills_nothing(self, survey9_config, tmp_path):
        first = make_client(survey9_config, provider=SyntheticNetworkProvider())
        store = SpotStore(survey9_config.store_path, clock=fixed_clock)
        run_survey(survey9_config, backend=FixtureBackend(), client=first,
                   store=store, clock=fixed_clock)

        config_b = dataclasses.replace(survey9_config,
                                       store_path=str(tmp_path / "second.jsonl"))
        second = make_client(config_b, provider=SyntheticNetworkProvider())
        run_survey(config_b, backend=FixtureBackend(), client=second,
                   store=SpotStore(config_b.store_path, clock=fixed_clock),
                   clock=fixed_clock)
        assert second.ledger.requests == 0  # < 5n: everything came from cache


class TestSelectors:
    def test_resolve_backend_variants(self):
        assert resolve_backend("heuristic").name == "heuristic"
        backend = resolve_backend(f"fixture:{SURVEY9 / 'backend.json'}")
        assert backend.name == "fixture"
        with pytest.raises(DomainError):
            resolve_backend("tarot")

    def test_resolve_provider_variants(self):
        assert resolve_provider("network").is_network is True
        provider = resolve_provider(f"fixture:{SURVEY9 / 'imagery'}")
        assert provider.is_network is False
        with pytest.raises(DomainError):
            resolve_provider("carrier_pigeon")


class TestConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(DomainError):
            config_from_dict({
                "survey_id": "x",
                "center": {"lat": 0, "lon": 0},
                "half_extent_m": 10,
                "spacingm": 40,
            })

    def test_committed_config_loads(self):
        config = load_config(SURVEY9 / "config.json")
        assert config.survey_id == "fixture-9"
        assert config.threshold == 20
        assert config.mode == "street_only"
        assert config.spacing == 40.0

    def test_default_spacing_is_tile_footprint(self):
        config = config_from_dict({
            "survey_id": "x",
            "center": {"lat": 33.4184, "lon": -111.9328},
            "half_extent_m": 650.0,
        })
        assert config.spacing == pytest.approx(39.8748586122, abs=1e-6)

    def test_bad_version_rejected(self):
        with pytest.raises(DomainError):
            config_from_dict({"version": 99, "survey_id": "x",
                              "center": {"lat": 0, "lon": 0}, "half_extent_m": 1})

    def test_missing_required_key(self):
        with pytest.raises(DomainError):
            config_from_dict({"survey_id": "x"})
