"""Scenario generation and on-disk persistence.

Instances live on disk as a bundle directory:

* ``config.json``   - station parameters
* ``profiles.csv``  - ``hour,demand,arrivals,price`` rows, one per hour
* ``initial.json``  - per-battery start states
* ``schedule.txt``  - optional rendered schedule grid

Random scenarios are drawn from a :class:`ScenarioSpec` (station config,
demand shape, arrival shape, tariff, seed).  Generation is deterministic:
the same spec always yields byte-identical bundles.  Randomly drawn demand
and arrivals are repaired so the instance stays solvable — demand never
outruns the charge pipeline, arrivals never outnumber the batteries that are
out, and every arrival can still run a full charge block.  Explicit
(hand-written) profiles and explicit initial conditions are echoed verbatim,
repairs and all bets off.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Sequence, Union

from .errors import DimensionError, InstanceError, ProfileError
from .model import (
    BatteryStart,
    BatteryState,
    EventProfiles,
    InitialConditions,
    ScheduleGrid,
    StationConfig,
    extract_events,
    format_exact,
    render_grid,
    to_exact,
)
from .validation import Instance

__all__ = [
    "UniformShape",
    "PeakedShape",
    "ExplicitShape",
    "FlatTariff",
    "TouTariff",
    "ExplicitTariff",
    "ScenarioSpec",
    "generate",
    "save_profiles",
    "load_profiles",
    "save_instance",
    "load_instance",
    "load_spec",
    "demo_instance",
]

_E = BatteryState.EMPTY
_C = BatteryState.CHARGING
_F = BatteryState.FULL
_O = BatteryState.OUT


# ---------------------------------------------------------------------------
# Event shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformShape:
    """``total`` event units spread uniformly at random over the usable hours."""

    total: int

    def __post_init__(self):
        if self.total < 0:
            raise InstanceError("shape total must be >= 0")

    def draw(self, rng: random.Random, lo: int, hi: int) -> list[int]:
        return [rng.randint(lo, hi) for _ in range(self.total)]


@dataclass(frozen=True)
class PeakedShape:
    """``total`` units drawn from a triangular bump around ``peak_hour``."""

    total: int
    peak_hour: int
    width: int

    def __post_init__(self):
        if self.total < 0:
            raise InstanceError("shape total must be >= 0")
        if self.width < 1:
            raise InstanceError("shape width must be >= 1")

    def draw(self, rng: random.Random, lo: int, hi: int) -> list[int]:
        hours = []
        for _ in range(self.total):
            h = round(rng.triangular(self.peak_hour - self.width, self.peak_hour + self.width, self.peak_hour))
            hours.append(min(max(h, lo), hi))
        return hours


@dataclass(frozen=True)
class ExplicitShape:
    """A hand-written per-hour count list, used verbatim (no repairs)."""

    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))


Shape = Union[UniformShape, PeakedShape, ExplicitShape]


# ---------------------------------------------------------------------------
# Tariffs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlatTariff:
    """One price for every hour."""

    price: Fraction

    def __post_init__(self):
        object.__setattr__(self, "price", to_exact(self.price))

    def render(self, horizon: int) -> tuple[Fraction, ...]:
        return (self.price,) * horizon


@dataclass(frozen=True)
class TouTariff:
    """Time-of-use: ``peak`` inside the given inclusive hour ranges, ``off_peak`` elsewhere."""

    off_peak: Fraction
    peak: Fraction
    peak_hours: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "off_peak", to_exact(self.off_peak))
        object.__setattr__(self, "peak", to_exact(self.peak))
        ranges = tuple((int(a), int(b)) for a, b in self.peak_hours)
        for a, b in ranges:
            if a < 1 or b < a:
                raise InstanceError(f"bad peak range {a}..{b}")
        object.__setattr__(self, "peak_hours", ranges)

    def render(self, horizon: int) -> tuple[Fraction, ...]:
        out = []
        for h in range(1, horizon + 1):
            if any(a <= h <= b for a, b in self.peak_hours):
                out.append(self.peak)
            else:
                out.append(self.off_peak)
        return tuple(out)


@dataclass(frozen=True)
class ExplicitTariff:
    """A hand-written per-hour price list."""

    prices: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(to_exact(p) for p in self.prices))

    def render(self, horizon: int) -> tuple[Fraction, ...]:
        if len(self.prices) != horizon:
            raise DimensionError(
                f"tariff lists {len(self.prices)} prices, horizon is {horizon}"
            )
        return self.prices


Tariff = Union[FlatTariff, TouTariff, ExplicitTariff]


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to draw one instance deterministically."""

    config: StationConfig
    demand: Shape
    arrivals: Shape
    tariff: Tariff
    seed: int
    initial: InitialConditions | None = None


def _asap_starts(
    horizon: int,
    n_chargers: int,
    duration: int,
    fixed_lengths: Sequence[int],
    releases: Sequence[int],
) -> list[int | None]:
    """Earliest FIFO start hours for equal-length jobs behind fixed hour-1 blocks.

    ``releases`` must be sorted.  With equal durations and first-in-first-out
    charger assignment, starts are non-decreasing and a job fits a charger at
    hour ``s`` exactly when hour ``s`` itself has a charger free.
    """
    usage = [0] * (horizon + 2)
    for length in fixed_lengths:
        for h in range(1, min(length, horizon) + 1):
            usage[h] += 1
    starts: list[int | None] = []
    floor = 1
    for release in releases:
        s = max(release, floor)
        while s <= horizon and usage[s] >= n_chargers:
            s += 1
        if s > horizon:
            starts.append(None)
            continue
        for h in range(s, min(s + duration - 1, horizon) + 1):
            usage[h] += 1
        starts.append(s)
        floor = s
    return starts


def _draw_initial(rng: random.Random, cfg: StationConfig) -> InitialConditions:
    """Random start states: every charger may hold a battery, the rest split E/F/O.

    Empty batteries that could never finish a full charge block inside the
    horizon (too many ahead of them in the queue, or the horizon too short)
    are flipped to out-of-station so the drawn instance stays well packed.
    """
    n_charging = rng.randint(0, min(cfg.n_chargers, cfg.n_batteries))
    states = [_C] * n_charging
    states += [rng.choice([_E, _F, _O]) for _ in range(cfg.n_batteries - n_charging)]
    rng.shuffle(states)
    progress = [rng.randrange(cfg.charge_hours) if s is _C else 0 for s in states]
    n_full = sum(1 for s in states if s is _F)
    ranks = iter(rng.sample(range(1, n_full + 1), n_full))

    # flip E -> O while some empty battery cannot get a full block
    while True:
        fixed = [cfg.charge_hours - p for s, p in zip(states, progress) if s is _C]
        empties = [i for i, s in enumerate(states) if s is _E]
        starts = _asap_starts(cfg.horizon, cfg.n_chargers, cfg.charge_hours, fixed, [1] * len(empties))
        bad = [
            i
            for i, s in zip(empties, starts)
            if s is None or s + cfg.charge_hours - 1 > cfg.horizon
        ]
        if not bad:
            break
        states[bad[-1]] = _O

    entries = []
    for s, p in zip(states, progress):
        if s is _F:
            entries.append(BatteryStart(state=s, full_rank=next(ranks)))
        elif s is _C:
            entries.append(BatteryStart(state=s, progress=p))
        else:
            entries.append(BatteryStart(state=s))
    return InitialConditions(tuple(entries))


def _supply_completions(cfg: StationConfig, initial: InitialConditions) -> list[int]:
    """Hours at which the initial fleet's charge jobs finish under earliest starts.

    Counts continuations and empty-battery jobs only; arrival jobs are drawn
    later and only ever add supply on top of this.
    """
    completions = []
    fixed = []
    for e in initial.entries:
        if e.state is _C:
            remaining = cfg.charge_hours - e.progress
            fixed.append(remaining)
            if remaining + 1 <= cfg.horizon:
                completions.append(remaining + 1)
    n_empty = initial.count(_E)
    for s in _asap_starts(cfg.horizon, cfg.n_chargers, cfg.charge_hours, fixed, [1] * n_empty):
        if s is not None and s + cfg.charge_hours <= cfg.horizon:
            completions.append(s + cfg.charge_hours)
    return sorted(completions)


def _place_units(
    drawn: list[int],
    horizon: int,
    room: Sequence[int],
) -> list[int]:
    """Push drawn event hours forward until each fits its cumulative headroom.

    ``room[t]`` is how many units may land at hours 1..t in total.  Units are
    placed in hour order; a unit with no legal hour left is dropped.
    """
    counts = [0] * (horizon + 1)
    placed = 0
    floor = 1
    for hour in sorted(drawn):
        h = max(hour, floor)
        while h <= horizon and placed + 1 > room[h]:
            h += 1
        if h > horizon:
            continue
        counts[h] += 1
        placed += 1
        floor = h
    return counts[1:]


def _render_demand(
    rng: random.Random, shape: Shape, cfg: StationConfig, initial: InitialConditions
) -> list[int]:
    if isinstance(shape, ExplicitShape):
        if len(shape.values) != cfg.horizon:
            raise DimensionError(
                f"explicit demand lists {len(shape.values)} hours, horizon is {cfg.horizon}"
            )
        return list(shape.values)
    T = cfg.horizon
    if T < 2 or shape.total == 0:
        return [0] * T
    drawn = shape.draw(rng, 2, T)
    completions = _supply_completions(cfg, initial)
    n_full = initial.count(_F)
    # room[t]: swaps servable by hour t = full stock plus charges finished by t-1
    room = [0] * (T + 1)
    for t in range(1, T + 1):
        room[t] = n_full + sum(1 for c in completions if c <= t - 1)
    return _place_units(drawn, T, room)


def _render_arrivals(
    rng: random.Random,
    shape: Shape,
    cfg: StationConfig,
    initial: InitialConditions,
    demand: Sequence[int],
) -> list[int]:
    if isinstance(shape, ExplicitShape):
        if len(shape.values) != cfg.horizon:
            raise DimensionError(
                f"explicit arrivals list {len(shape.values)} hours, horizon is {cfg.horizon}"
            )
        return list(shape.values)
    T, D = cfg.horizon, cfg.charge_hours
    hi = T - D  # latest hour whose arrival can still run a full block
    if hi < 2 or shape.total == 0:
        return [0] * T
    drawn = shape.draw(rng, 2, hi)
    n_out = initial.count(_O)
    cum_d = [0] * (T + 1)
    for t in range(1, T + 1):
        cum_d[t] = cum_d[t - 1] + demand[t - 1]
    # room[t]: arrivals by hour t can't exceed batteries that have been out
    room = [0] * (T + 1)
    for t in range(1, T + 1):
        room[t] = n_out + cum_d[t - 1]
    counts = _place_units(drawn, T, room)

    # drop latest arrivals until every arrival job can run a full block
    fixed = [cfg.charge_hours - e.progress for e in initial.entries if e.state is _C]
    n_empty = initial.count(_E)
    while True:
        releases = [1] * n_empty + [t + 1 for t in range(1, T + 1) for _ in range(counts[t - 1])]
        starts = _asap_starts(T, cfg.n_chargers, D, fixed, releases)
        arrival_starts = starts[n_empty:]
        if all(s is not None and s + D - 1 <= T for s in arrival_starts):
            break
        last = max(t for t in range(1, T + 1) if counts[t - 1] > 0)
        counts[last - 1] -= 1
    return counts


def generate(spec: ScenarioSpec) -> Instance:
    """Draw one instance from a scenario.  Same scenario, same bytes, every time.

    Draw order is fixed: initial conditions (skipped when ``spec.initial``
    pins them), then demand, then arrivals; the tariff is deterministic.
    """
    cfg = spec.config
    rng = random.Random(spec.seed)
    initial = spec.initial if spec.initial is not None else _draw_initial(rng, cfg)
    demand = _render_demand(rng, spec.demand, cfg, initial)
    arrivals = _render_arrivals(rng, spec.arrivals, cfg, initial, demand)
    price = spec.tariff.render(cfg.horizon)
    events = EventProfiles(tuple(demand), tuple(arrivals), price)
    return Instance(config=cfg, initial=initial, events=events)


# ---------------------------------------------------------------------------
# Profiles CSV
# ---------------------------------------------------------------------------

_CSV_COLUMNS = ["hour", "demand", "arrivals", "price"]


def save_profiles(path: str | Path, events: EventProfiles) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for t in range(1, events.horizon + 1):
            writer.writerow(
                [t, events.demand[t - 1], events.arrivals[t - 1], format_exact(events.price[t - 1])]
            )


def _csv_int(text: str, what: str, hour: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ProfileError(f"{what} {text!r} is not an integer", hour=hour) from None


def load_profiles(path: str | Path) -> EventProfiles:
    """Read a ``hour,demand,arrivals,price`` table; hours must run 1..T with no gaps."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row]
    except FileNotFoundError:
        raise ProfileError(f"no such profiles file: {path}") from None
    if not rows:
        raise ProfileError("profiles file is empty")
    if rows[0] != _CSV_COLUMNS:
        raise ProfileError(
            f"header must be {','.join(_CSV_COLUMNS)!r}, got {','.join(rows[0])!r}"
        )
    demand, arrivals, price = [], [], []
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != 4:
            raise ProfileError(f"row {i + 1} has {len(row)} fields, expected 4", hour=i)
        hour = _csv_int(row[0], "hour", i)
        if hour != i:
            raise ProfileError(f"hours must be contiguous from 1; row {i + 1} says {hour}", hour=i)
        d = _csv_int(row[1], "demand", hour)
        a = _csv_int(row[2], "arrivals", hour)
        if d < 0 or a < 0:
            raise ProfileError("demand and arrivals must be >= 0", hour=hour)
        try:
            p = to_exact(row[3])
        except ValueError as exc:
            raise ProfileError(str(exc), hour=hour) from None
        if p < 0:
            raise ProfileError("price must be >= 0", hour=hour)
        demand.append(d)
        arrivals.append(a)
        price.append(p)
    if not demand:
        raise ProfileError("profiles file has no hour rows")
    return EventProfiles(tuple(demand), tuple(arrivals), tuple(price))


# ---------------------------------------------------------------------------
# Instance bundles
# ---------------------------------------------------------------------------


def _initial_to_json(initial: InitialConditions) -> list[dict]:
    out = []
    for b, e in enumerate(initial.entries, start=1):
        entry: dict = {"battery": b, "state": e.state.letter}
        if e.state is _C:
            entry["progress"] = e.progress
        if e.state is _F:
            entry["full_rank"] = e.full_rank
        out.append(entry)
    return out


def _initial_from_json(data: object) -> InitialConditions:
    if not isinstance(data, list):
        raise InstanceError("initial conditions must be a list of battery entries")
    by_battery: dict[int, BatteryStart] = {}
    for item in data:
        if not isinstance(item, dict):
            raise InstanceError(f"initial entry {item!r} is not an object")
        unknown = set(item) - {"battery", "state", "progress", "full_rank"}
        if unknown:
            raise InstanceError(f"unknown initial-entry keys: {sorted(unknown)}")
        if "battery" not in item or "state" not in item:
            raise InstanceError(f"initial entry {item!r} needs battery and state")
        b = item["battery"]
        if not isinstance(b, int) or b < 1:
            raise InstanceError(f"battery number {b!r} must be a positive integer")
        if b in by_battery:
            raise InstanceError(f"battery B{b} listed twice in initial conditions")
        try:
            state = BatteryState(item["state"])
        except ValueError:
            raise InstanceError(f"battery B{b}: unknown state {item['state']!r}") from None
        by_battery[b] = BatteryStart(
            state=state,
            progress=item.get("progress", 0),
            full_rank=item.get("full_rank"),
        )
    expected = set(range(1, len(by_battery) + 1))
    if set(by_battery) != expected:
        raise InstanceError(
            f"initial conditions must cover batteries 1..{len(by_battery)} exactly"
        )
    return InitialConditions(tuple(by_battery[b] for b in sorted(by_battery)))


def _write_json(path: Path, data: object) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path, what: str) -> object:
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise InstanceError(f"missing {what}: {path}") from None
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{what} is not valid JSON: {exc}") from None


def save_instance(
    directory: str | Path, instance: Instance, schedule: ScheduleGrid | None = None
) -> None:
    """Write an instance bundle (config.json, profiles.csv, initial.json[, schedule.txt])."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_json(d / "config.json", instance.config.to_json_dict())
    save_profiles(d / "profiles.csv", instance.events)
    _write_json(d / "initial.json", _initial_to_json(instance.initial))
    if schedule is not None:
        (d / "schedule.txt").write_text(render_grid(schedule))


def load_instance(directory: str | Path) -> Instance:
    """Read an instance bundle written by :func:`save_instance`."""
    d = Path(directory)
    config_data = _read_json(d / "config.json", "config")
    if not isinstance(config_data, dict):
        raise InstanceError("config.json must hold a JSON object")
    config = StationConfig.from_json_dict(config_data)
    events = load_profiles(d / "profiles.csv")
    initial = _initial_from_json(_read_json(d / "initial.json", "initial conditions"))
    return Instance(config=config, initial=initial, events=events)


# ---------------------------------------------------------------------------
# Scenario spec files
# ---------------------------------------------------------------------------


def _shape_from_json(data: object, what: str) -> Shape:
    if not isinstance(data, dict):
        raise InstanceError(f"{what} must be an object with a 'shape' key")
    kind = data.get("shape")
    if kind == "uniform":
        _require_keys(data, {"shape", "total"}, what)
        return UniformShape(total=data["total"])
    if kind == "peaked":
        _require_keys(data, {"shape", "total", "peak_hour", "width"}, what)
        return PeakedShape(total=data["total"], peak_hour=data["peak_hour"], width=data["width"])
    if kind == "explicit":
        _require_keys(data, {"shape", "values"}, what)
        return ExplicitShape(values=tuple(data["values"]))
    raise InstanceError(f"{what}: unknown shape {kind!r} (uniform, peaked or explicit)")


def _tariff_from_json(data: object) -> Tariff:
    if not isinstance(data, dict):
        raise InstanceError("tariff must be an object with a 'kind' key")
    kind = data.get("kind")
    if kind == "flat":
        _require_keys(data, {"kind", "price"}, "tariff")
        return FlatTariff(price=data["price"])
    if kind == "tou":
        _require_keys(data, {"kind", "off_peak", "peak", "peak_hours"}, "tariff")
        return TouTariff(
            off_peak=data["off_peak"],
            peak=data["peak"],
            peak_hours=tuple(tuple(r) for r in data["peak_hours"]),
        )
    if kind == "explicit":
        _require_keys(data, {"kind", "prices"}, "tariff")
        return ExplicitTariff(prices=tuple(data["prices"]))
    raise InstanceError(f"unknown tariff kind {kind!r} (flat, tou or explicit)")


def _require_keys(data: dict, allowed: set, what: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise InstanceError(f"{what}: unknown keys {sorted(unknown)}")
    missing = allowed - set(data)
    if missing:
        raise InstanceError(f"{what}: missing keys {sorted(missing)}")


def load_spec(path: str | Path) -> ScenarioSpec:
    """Read a scenario spec JSON file.

    Layout::

        {
          "config":   { ... as config.json ... },
          "seed":     7,
          "demand":   {"shape": "uniform", "total": 6},
          "arrivals": {"shape": "peaked", "total": 4, "peak_hour": 9, "width": 3},
          "tariff":   {"kind": "tou", "off_peak": "0.5", "peak": 5,
                       "peak_hours": [[8, 11], [18, 21]]},
          "initial":  [ ... optional, as initial.json ... ]
        }
    """
    data = _read_json(Path(path), "scenario spec")
    if not isinstance(data, dict):
        raise InstanceError("scenario spec must be a JSON object")
    required = {"config", "seed", "demand", "arrivals", "tariff"}
    unknown = set(data) - required - {"initial"}
    if unknown:
        raise InstanceError(f"scenario spec: unknown keys {sorted(unknown)}")
    missing = required - set(data)
    if missing:
        raise InstanceError(f"scenario spec: missing keys {sorted(missing)}")
    if not isinstance(data["seed"], int) or isinstance(data["seed"], bool):
        raise InstanceError("seed must be an integer")
    config = StationConfig.from_json_dict(data["config"])
    initial = _initial_from_json(data["initial"]) if "initial" in data else None
    return ScenarioSpec(
        config=config,
        demand=_shape_from_json(data["demand"], "demand"),
        arrivals=_shape_from_json(data["arrivals"], "arrivals"),
        tariff=_tariff_from_json(data["tariff"]),
        seed=data["seed"],
        initial=initial,
    )


# ---------------------------------------------------------------------------
# Built-in demo
# ---------------------------------------------------------------------------

_DEMO_ROWS = (
    "EEEECCCCCCFFFFFFFFOOOOOO",  # B1
    "EEEEECCCCCCFFFFFFFFFOOOO",  # B2
    "EEEEEECCCCCCFFFFFFFFFFOO",  # B3
    "FOOOOOOOOOEECCCCCCFFFFFF",  # B4
    "FFFFOOOOOOOOECCCCCCFFFFF",  # B5
    "CCCCFFOOOOOOOECCCCCCCCFF",  # B6
    "CCCCCFFFFFOOOOOOOOOECCCC",  # B7
    "CCCCCCFFFFFFOOOOOOOOECCC",  # B8
    "CCCCCCFFFFFFFOOOOOOOOOEC",  # B9
    "OEEEEECCCCCCFFFFFFFFFFFF",  # B10
    "OOOOEEEEEECCCCCCFFFFFFFF",  # B11
    "OOOOOOEEEEECCCCCCFFFFFFF",  # B12
)

_DEMO_INITIAL = (
    BatteryStart(state=_E),
    BatteryStart(state=_E),
    BatteryStart(state=_E),
    BatteryStart(state=_F, full_rank=1),
    BatteryStart(state=_F, full_rank=2),
    BatteryStart(state=_C, progress=2),
    BatteryStart(state=_C, progress=1),
    BatteryStart(state=_C),
    BatteryStart(state=_C),
    BatteryStart(state=_O),
    BatteryStart(state=_O),
    BatteryStart(state=_O),
)


def demo_instance() -> tuple[Instance, ScheduleGrid]:
    """The bundled 12-battery, 4-charger, 24-hour worked example.

    Returns the instance and its hand-written reference schedule.  The
    reference schedule is reproduced exactly as published and is *not*
    clean: at hours 15 and 16 it has five batteries charging on four
    chargers, so lenient validation reports charger-capacity violations
    there and the greedy solver reschedules battery B6 two hours later.
    """
    config = StationConfig(
        n_batteries=12,
        n_chargers=4,
        charge_hours=6,
        capacity_kwh=Fraction(100),
        horizon=24,
    )
    grid = ScheduleGrid.from_rows(_DEMO_ROWS)
    events = extract_events(grid).with_price(1)
    instance = Instance(
        config=config,
        initial=InitialConditions(_DEMO_INITIAL),
        events=events,
    )
    return instance, grid
