from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest

from swapsched import (
    BatteryStart,
    BatteryState,
    DimensionError,
    EventProfiles,
    ExplicitShape,
    ExplicitTariff,
    FlatTariff,
    InitialConditions,
    Instance,
    InstanceError,
    PeakedShape,
    ProfileError,
    ScenarioSpec,
    StationConfig,
    TouTariff,
    UniformShape,
    demo_instance,
    generate,
    load_instance,
    load_profiles,
    load_spec,
    save_instance,
    save_profiles,
    solve_greedy,
    validate,
)

E, C, F, O = BatteryState.EMPTY, BatteryState.CHARGING, BatteryState.FULL, BatteryState.OUT


# ---------------------------------------------------------------------------
# Demo instance
# ---------------------------------------------------------------------------


def test_demo_station(demo):
    instance, reference = demo
    cfg = instance.config
    assert (cfg.n_batteries, cfg.n_chargers, cfg.charge_hours, cfg.horizon) == (12, 4, 6, 24)
    assert cfg.capacity_kwh == Fraction(100)
    assert cfg.power_kw == Fraction(100, 6)
    assert reference.n_batteries == 12 and reference.horizon == 24


def test_demo_initial_conditions(demo):
    instance, _ = demo
    init = instance.initial
    assert [e.state for e in init.entries] == [E, E, E, F, F, C, C, C, C, O, O, O]
    assert init.for_battery(4).full_rank == 1
    assert init.for_battery(5).full_rank == 2
    assert init.for_battery(6).progress == 2
    assert init.for_battery(7).progress == 1
    assert init.for_battery(8).progress == 0


def test_demo_profiles_are_the_grid_edges(demo):
    instance, _ = demo
    ev = instance.events
    assert {t: ev.demand[t - 1] for t in range(1, 25) if ev.demand[t - 1]} == {
        2: 1, 5: 1, 7: 1, 11: 1, 13: 1, 14: 1, 19: 1, 21: 1, 23: 1,
    }
    assert {t: ev.arrivals[t - 1] for t in range(1, 25) if ev.arrivals[t - 1]} == {
        2: 1, 5: 1, 7: 1, 11: 1, 13: 1, 14: 1, 20: 1, 21: 1, 23: 1,
    }
    assert ev.price == (Fraction(1),) * 24


def test_demo_is_fresh_each_call():
    a, grid_a = demo_instance()
    b, grid_b = demo_instance()
    assert a == b
    assert grid_a == grid_b


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def small_spec(seed: int, **overrides) -> ScenarioSpec:
    kwargs = dict(
        config=StationConfig(4, 2, 3, Fraction(30), 14),
        demand=UniformShape(total=4),
        arrivals=PeakedShape(total=3, peak_hour=6, width=4),
        tariff=TouTariff(off_peak="0.5", peak=4, peak_hours=((7, 10),)),
        seed=seed,
    )
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


def test_generate_is_deterministic(tmp_path):
    a = generate(small_spec(11))
    b = generate(small_spec(11))
    assert a == b
    save_instance(tmp_path / "a", a)
    save_instance(tmp_path / "b", b)
    for name in ("config.json", "profiles.csv", "initial.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_varies_with_seed():
    drawn = {
        (generate(small_spec(s)).events.demand, generate(small_spec(s)).events.arrivals)
        for s in range(6)
    }
    assert len(drawn) > 1


def test_generated_instances_stay_solvable():
    for seed in range(30):
        spec = ScenarioSpec(
            config=StationConfig(1 + seed % 4, 1 + seed % 2, 2 + seed % 3, Fraction(10), 8 + seed % 8),
            demand=UniformShape(total=seed % 5),
            arrivals=PeakedShape(total=seed % 4, peak_hour=5, width=4),
            tariff=FlatTariff(price=1),
            seed=seed,
        )
        instance = generate(spec)
        grid = solve_greedy(instance)  # must not raise
        report = validate(grid, instance, "strict")
        assert report.feasible, (seed, [v.message for v in report.violations])


def test_generated_events_respect_the_edge_rules():
    for seed in range(20):
        instance = generate(small_spec(seed))
        ev = instance.events
        assert ev.demand[0] == 0
        assert ev.arrivals[0] == 0
        D, T = instance.config.charge_hours, instance.config.horizon
        # arrivals are only drawn where a full charge block still fits
        assert all(ev.arrivals[t - 1] == 0 for t in range(T - D + 1, T + 1))
        assert sum(ev.demand) <= 4
        assert sum(ev.arrivals) <= 3


def test_generated_initial_charging_fits_the_chargers():
    for seed in range(20):
        instance = generate(small_spec(seed))
        assert instance.initial.count(C) <= instance.config.n_chargers


def test_explicit_shapes_are_verbatim():
    demand = (1, 0, 2, 0, 0, 0, 0, 0)  # even a never-servable hour-1 unit survives
    arrivals = (0, 0, 0, 1, 0, 0, 0, 0)
    spec = ScenarioSpec(
        config=StationConfig(2, 1, 2, Fraction(10), 8),
        demand=ExplicitShape(values=demand),
        arrivals=ExplicitShape(values=arrivals),
        tariff=FlatTariff(price=2),
        seed=0,
    )
    instance = generate(spec)
    assert instance.events.demand == demand
    assert instance.events.arrivals == arrivals


def test_explicit_shape_length_is_checked():
    spec = small_spec(0, demand=ExplicitShape(values=(0, 1)))
    with pytest.raises(DimensionError):
        generate(spec)


def test_pinned_initial_conditions_are_used():
    init = InitialConditions(
        (
            BatteryStart(state=F, full_rank=1),
            BatteryStart(state=F, full_rank=2),
            BatteryStart(state=O),
            BatteryStart(state=O),
        )
    )
    instance = generate(small_spec(3, initial=init))
    assert instance.initial == init


# ---------------------------------------------------------------------------
# Tariffs
# ---------------------------------------------------------------------------


def test_flat_tariff():
    assert FlatTariff(price="2.5").render(3) == (Fraction(5, 2),) * 3


def test_tou_tariff():
    tariff = TouTariff(off_peak=1, peak="3", peak_hours=((2, 3), (6, 6)))
    assert tariff.render(6) == tuple(Fraction(p) for p in (1, 3, 3, 1, 1, 3))
    with pytest.raises(InstanceError):
        TouTariff(off_peak=1, peak=2, peak_hours=((5, 3),))


def test_explicit_tariff_checks_length():
    tariff = ExplicitTariff(prices=("1/3", 2))
    assert tariff.render(2) == (Fraction(1, 3), Fraction(2))
    with pytest.raises(DimensionError):
        tariff.render(3)


# ---------------------------------------------------------------------------
# Profiles CSV
# ---------------------------------------------------------------------------


def test_profiles_round_trip_is_exact(tmp_path):
    ev = EventProfiles((0, 1, 0), (0, 0, 1), (Fraction(1, 3), Fraction(1, 2), Fraction(2)))
    path = tmp_path / "profiles.csv"
    save_profiles(path, ev)
    assert load_profiles(path) == ev
    lines = path.read_text().splitlines()
    assert lines[0] == "hour,demand,arrivals,price"
    assert lines[1] == "1,0,0,1/3"  # non-decimal rationals stay exact on disk


@pytest.mark.parametrize(
    "content,fragment",
    [
        ("", "empty"),
        ("hour,demand,price\n", "header"),
        ("hour,demand,arrivals,price\n2,0,0,1\n", "contiguous"),
        ("hour,demand,arrivals,price\n1,0,0,1\n1,0,0,1\n", "contiguous"),
        ("hour,demand,arrivals,price\n1,x,0,1\n", "integer"),
        ("hour,demand,arrivals,price\n1,-1,0,1\n", ">= 0"),
        ("hour,demand,arrivals,price\n1,0,0,cheap\n", "exact number"),
        ("hour,demand,arrivals,price\n1,0,0,-2\n", ">= 0"),
        ("hour,demand,arrivals,price\n1,0,0\n", "fields"),
        ("hour,demand,arrivals,price\n", "no hour rows"),
    ],
)
def test_profiles_csv_errors(tmp_path, content, fragment):
    path = tmp_path / "profiles.csv"
    path.write_text(content)
    with pytest.raises(ProfileError) as exc:
        load_profiles(path)
    assert fragment in str(exc.value)


def test_profiles_missing_file(tmp_path):
    with pytest.raises(ProfileError):
        load_profiles(tmp_path / "nope.csv")


# ---------------------------------------------------------------------------
# Instance bundles
# ---------------------------------------------------------------------------


def test_bundle_round_trip(tmp_path, demo):
    instance, reference = demo
    save_instance(tmp_path / "demo", instance, schedule=reference)
    loaded = load_instance(tmp_path / "demo")
    assert loaded == instance
    schedule = (tmp_path / "demo" / "schedule.txt").read_text()
    assert schedule.startswith("Hours: 1 2")
    assert schedule.count("\n") == 13


def test_bundle_without_schedule(tmp_path, valley):
    save_instance(tmp_path / "v", valley)
    assert not (tmp_path / "v" / "schedule.txt").exists()
    assert load_instance(tmp_path / "v") == valley


def test_bundle_missing_pieces(tmp_path, valley):
    save_instance(tmp_path / "v", valley)
    (tmp_path / "v" / "initial.json").unlink()
    with pytest.raises(InstanceError) as exc:
        load_instance(tmp_path / "v")
    assert "initial" in str(exc.value)
    with pytest.raises(InstanceError):
        load_instance(tmp_path / "missing")


def test_bundle_initial_json_shape(tmp_path, demo):
    instance, _ = demo
    save_instance(tmp_path / "demo", instance)
    data = json.loads((tmp_path / "demo" / "initial.json").read_text())
    assert data[0] == {"battery": 1, "state": "E"}
    assert data[3] == {"battery": 4, "full_rank": 1, "state": "F"}
    assert data[5] == {"battery": 6, "progress": 2, "state": "C"}


@pytest.mark.parametrize(
    "entries,fragment",
    [
        ([{"battery": 1, "state": "E"}, {"battery": 1, "state": "O"}], "twice"),
        ([{"battery": 2, "state": "E"}], "1..1"),
        ([{"battery": 1, "state": "Q"}], "unknown state"),
        ([{"battery": 1, "state": "E", "color": "red"}], "unknown"),
        ([{"state": "E"}], "battery and state"),
        ("not-a-list", "list"),
    ],
)
def test_bad_initial_json(tmp_path, valley, entries, fragment):
    save_instance(tmp_path / "v", valley)
    (tmp_path / "v" / "initial.json").write_text(json.dumps(entries))
    with pytest.raises(InstanceError) as exc:
        load_instance(tmp_path / "v")
    assert fragment in str(exc.value)


# ---------------------------------------------------------------------------
# Scenario spec files
# ---------------------------------------------------------------------------


def spec_document() -> dict:
    return {
        "config": {
            "n_batteries": 3,
            "n_chargers": 2,
            "charge_hours": 3,
            "capacity_kwh": 30,
            "horizon": 14,
        },
        "seed": 5,
        "demand": {"shape": "uniform", "total": 3},
        "arrivals": {"shape": "peaked", "total": 2, "peak_hour": 6, "width": 3},
        "tariff": {"kind": "tou", "off_peak": "0.5", "peak": 4, "peak_hours": [[7, 10]]},
    }


def test_load_spec_round_trips_through_generate(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec_document()))
    spec = load_spec(path)
    assert spec.seed == 5
    assert spec.config.n_batteries == 3
    assert spec.tariff == TouTariff(off_peak="0.5", peak=4, peak_hours=((7, 10),))
    instance = generate(spec)
    assert instance.config == spec.config
    assert instance.events.price[6] == Fraction(4)
    assert instance.events.price[0] == Fraction(1, 2)


def test_load_spec_with_pinned_initial(tmp_path):
    doc = spec_document()
    doc["initial"] = [
        {"battery": 1, "state": "F", "full_rank": 1},
        {"battery": 2, "state": "O"},
        {"battery": 3, "state": "O"},
    ]
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    instance = generate(load_spec(path))
    assert instance.initial.for_battery(1).state is F


@pytest.mark.parametrize(
    "mutate,fragment",
    [
        (lambda d: d.pop("seed"), "missing"),
        (lambda d: d.update(seed="five"), "integer"),
        (lambda d: d.update(extra=1), "unknown"),
        (lambda d: d.update(demand={"shape": "spiky", "total": 1}), "unknown shape"),
        (lambda d: d.update(demand={"shape": "uniform"}), "missing"),
        (lambda d: d.update(tariff={"kind": "dynamic"}), "unknown tariff"),
        (lambda d: d.update(tariff={"kind": "flat"}), "missing"),
    ],
)
def test_load_spec_errors(tmp_path, mutate, fragment):
    doc = spec_document()
    mutate(doc)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(InstanceError) as exc:
        load_spec(path)
    assert fragment in str(exc.value)


def test_load_spec_rejects_junk_json(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text("{not json")
    with pytest.raises(InstanceError):
        load_spec(path)
    with pytest.raises(InstanceError):
        load_spec(tmp_path / "absent.json")
