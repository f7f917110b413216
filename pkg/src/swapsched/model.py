"""Core domain model for battery-swap-station schedules.

A station holds a fixed fleet of batteries over an hourly horizon.  Every
battery is in exactly one of four states each hour:

* ``E`` - empty, in the station, waiting for a charger
* ``C`` - on a charger
* ``F`` - fully charged, in the station
* ``O`` - out of the station (inside a vehicle)

Batteries move through the cycle E -> C -> F -> O -> E; within an hour a
battery may also stay where it is.  Swaps and arrivals are edge events: a
swap at hour t means the battery was F at t-1 and O at t, an arrival at
hour t means O at t-1 and E at t.  Nothing can land at hour 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DimensionError, GridParseError, InstanceError, TransitionError

__all__ = [
    "BatteryState",
    "LEGAL_TRANSITIONS",
    "legal_transition",
    "to_exact",
    "format_exact",
    "StationConfig",
    "BatteryStart",
    "InitialConditions",
    "ScheduleGrid",
    "EventProfiles",
    "extract_events",
    "render_grid",
    "parse_grid",
]


class BatteryState(Enum):
    """One battery-hour state; the enum value is the grid letter."""

    EMPTY = "E"
    CHARGING = "C"
    FULL = "F"
    OUT = "O"

    @property
    def letter(self) -> str:
        return self.value

    def __repr__(self) -> str:  # terse: grids print as letters everywhere
        return self.value


_E = BatteryState.EMPTY
_C = BatteryState.CHARGING
_F = BatteryState.FULL
_O = BatteryState.OUT

# The eight legal hour-to-hour moves: stay anywhere, or advance one step
# around the cycle.  Everything else (skipping a step, moving backwards)
# is illegal.
LEGAL_TRANSITIONS: frozenset[tuple[BatteryState, BatteryState]] = frozenset(
    {
        (_E, _E), (_E, _C),
        (_C, _C), (_C, _F),
        (_F, _F), (_F, _O),
        (_O, _O), (_O, _E),
    }
)


def legal_transition(previous: BatteryState, current: BatteryState) -> bool:
    """True when a battery may be in ``current`` the hour after ``previous``."""
    return (previous, current) in LEGAL_TRANSITIONS


# ---------------------------------------------------------------------------
# Exact numbers
#
# Prices and charge power enter cost products, and solver/oracle results are
# compared for exact equality, so both are kept as rationals end to end.
# Decimal text round-trips losslessly; non-decimal rationals (e.g. a default
# charge power of 100/6 kW) serialize as "n/d".
# ---------------------------------------------------------------------------


def to_exact(value: object) -> Fraction:
    """Convert int/str/Decimal/Fraction/float input to an exact Fraction.

    Strings accept plain integers, decimal notation, and "n/d" ratios.
    Floats are interpreted through their shortest decimal representation
    ("0.1" means one tenth, not the binary expansion).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(str(value)))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return Fraction(Decimal(text))
        except InvalidOperation:
            raise ValueError(f"not an exact number: {value!r}") from None
    raise ValueError(f"not an exact number: {value!r}")


def format_exact(value: Fraction) -> str:
    """Render a Fraction as minimal exact text (decimal when finite, else n/d)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{value.numerator}/{value.denominator}"
    scale = max(twos, fives)
    scaled = abs(value.numerator) * 10**scale // value.denominator
    sign = "-" if value < 0 else ""
    whole, frac = divmod(scaled, 10**scale)
    return f"{sign}{whole}.{frac:0{scale}d}"


# ---------------------------------------------------------------------------
# Configuration and initial conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StationConfig:
    """Static description of one station.

    ``charge_power_kw`` may be omitted; the effective charging power is then
    ``capacity_kwh / charge_hours`` (a full charge spread evenly over the
    fixed charge duration).
    """

    n_batteries: int
    n_chargers: int
    charge_hours: int
    capacity_kwh: Fraction
    horizon: int
    charge_power_kw: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "capacity_kwh", to_exact(self.capacity_kwh))
        if self.charge_power_kw is not None:
            object.__setattr__(self, "charge_power_kw", to_exact(self.charge_power_kw))
        for name in ("n_batteries", "n_chargers", "charge_hours", "horizon"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise InstanceError(f"{name} must be a positive integer, got {v!r}")
        if self.capacity_kwh <= 0:
            raise InstanceError("capacity_kwh must be positive")
        if self.charge_power_kw is not None and self.charge_power_kw <= 0:
            raise InstanceError("charge_power_kw must be positive when given")

    @property
    def power_kw(self) -> Fraction:
        """Effective charging power per occupied charger."""
        if self.charge_power_kw is not None:
            return self.charge_power_kw
        return self.capacity_kwh / self.charge_hours

    def to_json_dict(self) -> dict:
        data = {
            "n_batteries": self.n_batteries,
            "n_chargers": self.n_chargers,
            "charge_hours": self.charge_hours,
            "capacity_kwh": _json_number(self.capacity_kwh),
            "horizon": self.horizon,
        }
        if self.charge_power_kw is not None:
            data["charge_power_kw"] = _json_number(self.charge_power_kw)
        return data

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "StationConfig":
        required = {"n_batteries", "n_chargers", "charge_hours", "capacity_kwh", "horizon"}
        unknown = set(data) - required - {"charge_power_kw"}
        if unknown:
            raise InstanceError(f"unknown config keys: {sorted(unknown)}")
        missing = required - set(data)
        if missing:
            raise InstanceError(f"missing config keys: {sorted(missing)}")
        return cls(
            n_batteries=data["n_batteries"],
            n_chargers=data["n_chargers"],
            charge_hours=data["charge_hours"],
            capacity_kwh=to_exact(data["capacity_kwh"]),
            horizon=data["horizon"],
            charge_power_kw=(
                to_exact(data["charge_power_kw"]) if data.get("charge_power_kw") is not None else None
            ),
        )


def _json_number(value: Fraction):
    """Ints stay JSON numbers; anything else becomes exact text."""
    if value.denominator == 1:
        return value.numerator
    return format_exact(value)


@dataclass(frozen=True)
class BatteryStart:
    """State of one battery at the start boundary of hour 1.

    ``progress`` counts completed charging hours for a battery that enters
    the horizon on a charger.  ``full_rank`` orders batteries that enter
    fully charged: lower rank means it has waited longer and is swapped
    out first.
    """

    state: BatteryState
    progress: int = 0
    full_rank: int | None = None

    def __post_init__(self):
        if not isinstance(self.state, BatteryState):
            object.__setattr__(self, "state", BatteryState(self.state))
        if self.progress < 0:
            raise InstanceError("progress must be >= 0")
        if self.progress and self.state is not BatteryState.CHARGING:
            raise InstanceError("progress only applies to batteries that start charging")
        if self.full_rank is not None and self.state is not BatteryState.FULL:
            raise InstanceError("full_rank only applies to batteries that start full")
        if self.state is BatteryState.FULL and self.full_rank is None:
            raise InstanceError("batteries that start full need a full_rank")


@dataclass(frozen=True)
class InitialConditions:
    """Per-battery start states, indexed by battery number (1-based)."""

    entries: tuple[BatteryStart, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ranks = [e.full_rank for e in self.entries if e.state is BatteryState.FULL]
        if len(ranks) != len(set(ranks)):
            raise InstanceError("full_rank values must be distinct")

    def __len__(self) -> int:
        return len(self.entries)

    def for_battery(self, battery: int) -> BatteryStart:
        return self.entries[battery - 1]

    def count(self, state: BatteryState) -> int:
        return sum(1 for e in self.entries if e.state is state)


# ---------------------------------------------------------------------------
# Schedule grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleGrid:
    """Immutable battery-by-hour state matrix (rows = batteries, 1-based API).

    Construction checks shape and cell type only.  Adjacency legality is a
    *validation* concern: grids carrying illegal transitions must be
    representable so the validator can report them.
    """

    states: tuple[tuple[BatteryState, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.states)
        object.__setattr__(self, "states", rows)
        if not rows:
            raise DimensionError("a grid needs at least one battery row")
        width = len(rows[0])
        if width < 1:
            raise DimensionError("a grid needs at least one hour column")
        for i, row in enumerate(rows, start=1):
            if len(row) != width:
                raise DimensionError(
                    f"battery B{i} has {len(row)} cells, expected {width}"
                )
            for cell in row:
                if not isinstance(cell, BatteryState):
                    raise DimensionError(f"battery B{i}: cell {cell!r} is not a state")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[BatteryState | str]]) -> "ScheduleGrid":
        return cls(tuple(tuple(BatteryState(c) if not isinstance(c, BatteryState) else c for c in row) for row in rows))

    @property
    def n_batteries(self) -> int:
        return len(self.states)

    @property
    def horizon(self) -> int:
        return len(self.states[0])

    def state(self, battery: int, hour: int) -> BatteryState:
        """State of ``battery`` (1-based) at ``hour`` (1-based)."""
        return self.states[battery - 1][hour - 1]

    def column(self, hour: int) -> tuple[BatteryState, ...]:
        return tuple(row[hour - 1] for row in self.states)

    def count(self, state: BatteryState, hour: int) -> int:
        return sum(1 for row in self.states if row[hour - 1] is state)

    def with_cell(self, battery: int, hour: int, state: BatteryState | str) -> "ScheduleGrid":
        """Copy of the grid with one cell replaced (useful for what-if checks)."""
        state = BatteryState(state) if not isinstance(state, BatteryState) else state
        rows = [list(row) for row in self.states]
        rows[battery - 1][hour - 1] = state
        return ScheduleGrid.from_rows(rows)


# ---------------------------------------------------------------------------
# Event profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EventProfiles:
    """Hourly demand (requested swaps), arrivals (returning batteries), prices."""

    demand: tuple[int, ...]
    arrivals: tuple[int, ...]
    price: tuple[Fraction, ...]

    def __post_init__(self):
        demand = tuple(self.demand)
        arrivals = tuple(self.arrivals)
        price = tuple(to_exact(p) for p in self.price)
        if not (len(demand) == len(arrivals) == len(price)) or not demand:
            raise DimensionError("demand, arrivals and price must share one horizon length")
        for name, seq in (("demand", demand), ("arrivals", arrivals)):
            for h, v in enumerate(seq, start=1):
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise InstanceError(f"{name} at hour {h} must be a non-negative integer")
        for h, p in enumerate(price, start=1):
            if p < 0:
                raise InstanceError(f"price at hour {h} must be non-negative")
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "arrivals", arrivals)
        object.__setattr__(self, "price", price)

    @property
    def horizon(self) -> int:
        return len(self.demand)

    @classmethod
    def from_maps(
        cls,
        horizon: int,
        demand: Mapping[int, int] | None = None,
        arrivals: Mapping[int, int] | None = None,
        price: object = 0,
    ) -> "EventProfiles":
        """Build profiles from sparse {hour: count} maps and a flat or per-hour price."""
        d = [0] * horizon
        a = [0] * horizon
        for hour, v in (demand or {}).items():
            d[hour - 1] = v
        for hour, v in (arrivals or {}).items():
            a[hour - 1] = v
        if isinstance(price, (list, tuple)):
            p = tuple(to_exact(x) for x in price)
        else:
            p = (to_exact(price),) * horizon
        return cls(tuple(d), tuple(a), p)

    def with_price(self, price: Sequence | object) -> "EventProfiles":
        if isinstance(price, (list, tuple)):
            p = tuple(to_exact(x) for x in price)
        else:
            p = (to_exact(price),) * self.horizon
        return EventProfiles(self.demand, self.arrivals, p)


def extract_events(grid: ScheduleGrid) -> EventProfiles:
    """Read demand and arrival counts off a grid's edges; prices come back zero.

    Raises TransitionError on the first illegal adjacency: event extraction
    is only meaningful on grids that respect the state cycle.
    """
    T = grid.horizon
    demand = [0] * T
    arrivals = [0] * T
    for b, row in enumerate(grid.states, start=1):
        for t in range(1, T):
            prev, cur = row[t - 1], row[t]
            if not legal_transition(prev, cur):
                raise TransitionError(
                    b, t + 1, f"illegal transition {prev.letter}->{cur.letter}"
                )
            if prev is _F and cur is _O:
                demand[t] += 1
            elif prev is _O and cur is _E:
                arrivals[t] += 1
    return EventProfiles(tuple(demand), tuple(arrivals), (Fraction(0),) * T)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

_HEADER_PREFIX = "Hours:"


def render_grid(grid: ScheduleGrid) -> str:
    """Render a grid as text: an hour header, then one ``B<i>: E C F ...`` line per battery."""
    lines = [_HEADER_PREFIX + " " + " ".join(str(t) for t in range(1, grid.horizon + 1))]
    for i, row in enumerate(grid.states, start=1):
        lines.append(f"B{i}: " + " ".join(cell.letter for cell in row))
    return "\n".join(lines) + "\n"


def parse_grid(text: str, config: StationConfig) -> ScheduleGrid:
    """Parse ``render_grid`` text against a config; exact inverse of render.

    Any deviation (wrong dimensions, unknown letters, illegal adjacency,
    malformed layout) raises GridParseError carrying line and column.
    """
    lines = text.splitlines()
    if not lines:
        raise GridParseError(1, 1, "empty schedule text")
    header = lines[0]
    if not header.startswith(_HEADER_PREFIX):
        raise GridParseError(1, 1, f"expected header starting with {_HEADER_PREFIX!r}")
    try:
        hours = [int(tok) for tok in header[len(_HEADER_PREFIX):].split()]
    except ValueError:
        raise GridParseError(1, len(_HEADER_PREFIX) + 1, "header hours must be integers") from None
    if hours != list(range(1, config.horizon + 1)):
        raise GridParseError(
            1, len(_HEADER_PREFIX) + 1,
            f"header lists {len(hours)} hours, expected 1..{config.horizon}",
        )
    body = [line for line in lines[1:]]
    if len(body) != config.n_batteries:
        line_no = min(len(body), config.n_batteries) + 2
        raise GridParseError(
            line_no, 1, f"{len(body)} battery lines, expected {config.n_batteries}"
        )
    rows: list[list[BatteryState]] = []
    prefixes: list[str] = []
    for i, line in enumerate(body, start=1):
        line_no = i + 1
        prefix = f"B{i}: "
        if not line.startswith(prefix):
            raise GridParseError(line_no, 1, f"expected line to start with {prefix!r}")
        prefixes.append(prefix)
        payload = line[len(prefix):]
        cells = payload.split(" ")
        if "" in cells:
            raise GridParseError(line_no, len(prefix) + 1, "cells must be single letters separated by single spaces")
        if len(cells) != config.horizon:
            col = len(prefix) + 2 * min(len(cells), config.horizon) + 1
            raise GridParseError(
                line_no, col, f"{len(cells)} cells, expected horizon {config.horizon}"
            )
        row: list[BatteryState] = []
        for t, cell in enumerate(cells, start=1):
            col = len(prefix) + 2 * (t - 1) + 1
            if len(cell) != 1 or cell not in "ECFO":
                raise GridParseError(line_no, col, f"unknown state letter {cell!r} at hour {t}")
            row.append(BatteryState(cell))
        rows.append(row)
    for b, row in enumerate(rows, start=1):
        for t in range(1, len(row)):
            if not legal_transition(row[t - 1], row[t]):
                col = len(prefixes[b - 1]) + 2 * t + 1
                raise GridParseError(
                    b + 1, col,
                    f"illegal transition {row[t - 1].letter}->{row[t].letter} "
                    f"for battery B{b} at hour {t + 1}",
                )
    return ScheduleGrid.from_rows(rows)
