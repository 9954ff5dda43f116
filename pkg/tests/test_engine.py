import io

import pytest

from pracsim.config import resolve
from pracsim.engine import Engine, compare, run
from pracsim.errors import ConfigError, TraceError
from pracsim.oracle import read_log, verify, write_log
from pracsim.trace import TraceSpec, generate, save


def sequential_overrides(length=100, **extra):
    base = {
        "trace.generator": "sequential",
        "trace.length": str(length),
        "mitigation.enabled": "false",
    }
    base.update(extra)
    return base


def test_sequential_perrow_quarter_rate():
    config = resolve(overrides=sequential_overrides(100, **{"buffer.design": "perrow"}))
    report = run(config)
    assert report.data_acts == 100
    assert report.counter_acts == 25
    assert report.normalized_acts == 0.25
    assert report.rmw_bytes == 100
    assert report.batch_triggers == {
        "m_ready": 25,
        "k_limit": 0,
        "buffer_full": 0,
        "drain": 0,
    }


def test_chronus_one_batch_per_activation():
    config = resolve(
        overrides={
            "buffer.design": "chronus",
            "trace.length": "500",
            "mitigation.enabled": "false",
        }
    )
    report = run(config)
    assert report.counter_acts == report.data_acts == 500
    assert report.normalized_acts == 1.0
    assert report.rmw_bytes == 500
    assert report.batch_triggers["m_ready"] == 500


def test_trigger_counts_sum_to_counter_acts():
    config = resolve(overrides={"trace.length": "2000", "mitigation.enabled": "false"})
    report = run(config)
    assert sum(report.batch_triggers.values()) == report.counter_acts
    assert report.batch_triggers["drain"] > 0


@pytest.mark.parametrize(
    "design", ["perrow", "unified_fcfs", "unified_sorted", "unified_approxmax"]
)
def test_every_design_matches_baseline_state(design):
    common = {"trace.length": "2000", "mitigation.enabled": "false", "seed": "3"}
    baseline = Engine(resolve(overrides=dict(common, **{"buffer.design": "chronus"})))
    baseline.run()
    engine = Engine(
        resolve(overrides=dict(common, **{"buffer.design": design})), collect_log=True
    )
    report = engine.run()
    assert engine.store.state_equal(baseline.store)
    verdict = verify(
        engine.load_events(),
        engine.batch_log,
        engine.geometry,
        m_batch=engine.config.buffer.m_batch,
        staleness_bound=engine.config.buffer.k_limit,
        reported_counter_acts=report.counter_acts,
        final_values=engine.store.values,
    )
    assert verdict.ok, str(verdict)


def test_batch_log_round_trips_through_csv():
    config = resolve(overrides=sequential_overrides(200))
    engine = Engine(config, collect_log=True)
    engine.run()
    buf = io.StringIO()
    write_log(engine.batch_log, buf)
    assert read_log(io.StringIO(buf.getvalue())) == engine.batch_log


def test_proactive_refresh_trims_the_maximum():
    config = resolve(
        overrides=sequential_overrides(
            100,
            **{
                "mitigation.enabled": "true",
                "mitigation.proactive_interval": "10",
            },
        )
    )
    report = run(config)
    assert report.alerts == 0
    assert report.mitigations == 10


def test_alert_fires_on_threshold_crossing():
    config = resolve(
        overrides={
            "trace.generator": "hammer",
            "trace.length": "100",
            "trace.hammer_gap": "0",
            "buffer.design": "perrow",
            "mitigation.n_bo": "4",
            "mitigation.proactive_interval": "0",
        }
    )
    report = run(config)
    assert report.alerts == 25
    assert report.mitigations == 25


def test_cache_cuts_counter_traffic():
    common = {
        "trace.generator": "hotset",
        "trace.length": "4000",
        "trace.hot_rows": "32",
        "mitigation.enabled": "false",
        "seed": "5",
    }
    plain = run(resolve(overrides=common))
    cached = run(resolve(overrides=dict(common, **{"cache.kind": "lru4way"})))
    assert plain.cache is None
    assert cached.cache["hits"] > 0
    assert cached.cache["hit_rate"] > 0.5
    assert cached.counter_acts < plain.counter_acts


def test_compare_prepends_baseline():
    config = resolve(overrides={"trace.length": "400", "mitigation.enabled": "false"})
    reports = compare(config, ["perrow", "unified_sorted"])
    assert [r.policy for r in reports] == ["chronus", "perrow", "unified_sorted"]
    assert reports[0].normalized_acts == 1.0
    assert all(r.data_acts == 400 for r in reports)
    assert all(r.normalized_acts <= 1.0 for r in reports)


def test_compare_strips_cache_from_baseline():
    config = resolve(
        overrides={
            "trace.length": "400",
            "mitigation.enabled": "false",
            "cache.kind": "lru4way",
        }
    )
    reports = compare(config, ["unified_approxmax"])
    assert reports[0].policy == "chronus"
    assert reports[0].cache is None
    assert reports[1].cache is not None


def test_compare_rejects_empty_policy_list():
    with pytest.raises(ConfigError):
        compare(resolve(), [])


def test_runs_are_deterministic():
    overrides = {"trace.length": "1500", "seed": "8"}
    first = run(resolve(overrides=overrides))
    second = run(resolve(overrides=overrides))
    assert first.to_json() == second.to_json()


def test_trace_file_round_trip(tmp_path):
    config = resolve()
    spec = TraceSpec(generator="uniform", length=300, seed=4, params={"rows": 256})
    events = generate(spec, config.geometry)
    path = tmp_path / "t.bin"
    save(events, str(path))
    from_file = run(config.with_overrides({"trace.path": str(path)}))
    assert from_file.data_acts == 300


def test_empty_run_cannot_finalize():
    engine = Engine(resolve())
    with pytest.raises(TraceError):
        engine.finalize()


def test_finalize_twice_is_an_error():
    config = resolve(overrides=sequential_overrides(10))
    engine = Engine(config)
    engine.run()
    with pytest.raises(ConfigError):
        engine.finalize()


def test_metrics_disabled_leaves_gaps():
    config = resolve(
        overrides=sequential_overrides(100, **{"metrics.enabled": "false"})
    )
    report = run(config)
    assert report.skew_by_bank == {}
    assert report.skew_mean is None
    assert report.window_locality is None
    assert report.footprint == {}


def test_metrics_populated_when_enabled():
    config = resolve(overrides={"trace.length": "2000", "mitigation.enabled": "false"})
    report = run(config)
    assert report.skew_by_bank
    assert report.skew_mean > 0
    assert report.footprint[25] >= 1
    assert report.config["trace.length"] == "2000"
