"""Charge scheduling: cost accounting, greedy FIFO, exact search, brute oracle.

Charging work is organized as jobs.  A battery that enters the horizon on a
charger continues as a fixed job (start hour 1, remaining duration); a
battery that enters empty is one job released at hour 1; every arrival unit
is one job released the hour after the arrival lands.  Arrival jobs are
anonymous until the simulation binds them to returning batteries in arrival
order.

Every job is scheduled.  A movable job whose full charge block fits inside
the horizon must run the full block (its start domain is capped so the block
fits); a job released too late to ever complete may start anywhere from its
release and is truncated by the horizon.

Stations serve swaps and bind arrivals first-in-first-out:

* chargers go to the longest-waiting empty battery (queue entry hour, then
  battery index);
* swaps consume the battery that has been fully charged longest (hour it
  entered F, then index; batteries that started the horizon full are ordered
  by their declared rank);
* returning batteries are matched to the battery that has been out longest.

``solve_greedy`` charges as soon as possible under those disciplines.
``solve_exact`` minimizes total electricity cost over all start vectors by
branch-and-bound, breaking cost ties toward the lexicographically earliest
start vector; ``solve_oracle`` does the same by exhaustive enumeration and
exists to cross-check the exact solver.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import DimensionError, EnumerationBudgetError, InfeasibleError
from .model import BatteryState, ScheduleGrid, StationConfig, to_exact
from .validation import Instance, validate

__all__ = [
    "SolveObjective",
    "ChargeJob",
    "CostBreakdown",
    "DEFAULT_ORACLE_BUDGET",
    "build_jobs",
    "start_domain",
    "schedule_cost",
    "solve_greedy",
    "solve_exact",
    "solve_oracle",
]

_E = BatteryState.EMPTY
_C = BatteryState.CHARGING
_F = BatteryState.FULL
_O = BatteryState.OUT

DEFAULT_ORACLE_BUDGET = 200_000


class SolveObjective(Enum):
    FEASIBILITY = "feasibility"
    MIN_COST = "min-cost"


@dataclass(frozen=True)
class ChargeJob:
    """One required charge block.

    ``battery`` is None for arrival jobs until a simulation binds them.
    ``fixed_start`` pins continuation jobs to hour 1; movable jobs have None.
    """

    index: int
    origin: str  # "continuation" | "initial-empty" | "arrival"
    battery: int | None
    release: int
    duration: int
    fixed_start: int | None = None
    arrival_hour: int | None = None

    @property
    def movable(self) -> bool:
        return self.fixed_start is None


def build_jobs(instance: Instance) -> tuple[ChargeJob, ...]:
    """Expand an instance into its charge jobs, in canonical order.

    Order: continuations (battery index), initial-empty batteries (battery
    index), then one job per arrival unit (hour order).  The canonical order
    is also the FIFO priority order and the order of start vectors.
    """
    cfg = instance.config
    jobs: list[ChargeJob] = []
    for b, entry in enumerate(instance.initial.entries, start=1):
        if entry.state is _C:
            jobs.append(
                ChargeJob(
                    index=len(jobs), origin="continuation", battery=b,
                    release=1, duration=cfg.charge_hours - entry.progress,
                    fixed_start=1,
                )
            )
    for b, entry in enumerate(instance.initial.entries, start=1):
        if entry.state is _E:
            jobs.append(
                ChargeJob(
                    index=len(jobs), origin="initial-empty", battery=b,
                    release=1, duration=cfg.charge_hours,
                )
            )
    for t, count in enumerate(instance.events.arrivals, start=1):
        for _ in range(count):
            jobs.append(
                ChargeJob(
                    index=len(jobs), origin="arrival", battery=None,
                    release=t + 1, duration=cfg.charge_hours, arrival_hour=t,
                )
            )
    return tuple(jobs)


def start_domain(job: ChargeJob, config: StationConfig) -> tuple[int, ...]:
    """Legal start hours for a job.

    Movable jobs whose block fits run it in full (start capped at
    horizon - duration + 1); jobs released too late to ever complete may
    start any hour from release to the horizon and run truncated.  A job
    released after the horizon (arrival in the final hour) never starts.
    """
    if not job.movable:
        return (job.fixed_start,)
    T = config.horizon
    lo = job.release
    if lo > T:
        return ()
    hi = T - job.duration + 1
    if hi < lo:
        hi = T
    return tuple(range(lo, hi + 1))


# ---------------------------------------------------------------------------
# Cost accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostBreakdown:
    """Electricity cost of a schedule, exact end to end."""

    total: Fraction
    per_hour: tuple[Fraction, ...]
    per_battery: tuple[Fraction, ...]
    energy_kwh: Fraction

    def to_json_dict(self) -> dict:
        return {
            "total": float(self.total),
            "per_hour": [float(x) for x in self.per_hour],
            "per_battery": [float(x) for x in self.per_battery],
            "energy_kwh": float(self.energy_kwh),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def schedule_cost(grid: ScheduleGrid, config: StationConfig, price: Sequence) -> CostBreakdown:
    """Price out a schedule: every charging battery-hour draws the charge power."""
    if grid.n_batteries != config.n_batteries or grid.horizon != config.horizon:
        raise DimensionError(
            f"grid is {grid.n_batteries}x{grid.horizon}, "
            f"config says {config.n_batteries}x{config.horizon}"
        )
    prices = [to_exact(p) for p in price]
    if len(prices) != config.horizon:
        raise DimensionError(
            f"{len(prices)} prices for a horizon of {config.horizon} hours"
        )
    power = config.power_kw
    per_hour = []
    for t in range(1, config.horizon + 1):
        per_hour.append(prices[t - 1] * power * grid.count(_C, t))
    per_battery = []
    cells = 0
    for row in grid.states:
        acc = Fraction(0)
        for t, cell in enumerate(row, start=1):
            if cell is _C:
                acc += prices[t - 1] * power
                cells += 1
        per_battery.append(acc)
    return CostBreakdown(
        total=sum(per_hour, Fraction(0)),
        per_hour=tuple(per_hour),
        per_battery=tuple(per_battery),
        energy_kwh=power * cells,
    )


# ---------------------------------------------------------------------------
# Simulation engine
#
# One hour loop serves both the greedy solver (starts=None: assign free
# chargers FIFO) and start-vector realization for the exact solver and the
# oracle (starts prescribed per job).  Events within an hour settle in a
# fixed order: arrivals land, charges complete, charges start, swaps land,
# everything else stays put.
# ---------------------------------------------------------------------------


@dataclass
class _SimResult:
    grid: ScheduleGrid
    job_starts: dict[int, int]


def _simulate(
    instance: Instance,
    jobs: tuple[ChargeJob, ...],
    starts: Mapping[int, int | None] | None,
) -> _SimResult:
    cfg = instance.config
    T, NB = cfg.horizon, cfg.n_batteries
    demand, arrivals = instance.events.demand, instance.events.arrivals
    rows: list[list[BatteryState | None]] = [[None] * (T + 1) for _ in range(NB + 1)]

    waiting: dict[int, tuple[int, int, int]] = {}  # battery -> (entry, release, job)
    charge_end: dict[int, int] = {}  # battery -> last charging hour
    full_key: dict[int, tuple[int, int]] = {}  # battery -> (hour entered F, tiebreak)
    out_pool: list[tuple[int, int]] = []  # (hour went out, battery)
    arrival_jobs = deque(j for j in jobs if j.origin == "arrival")
    job_by_initial_battery = {j.battery: j for j in jobs if j.origin == "initial-empty"}
    job_starts: dict[int, int] = {}

    for b, entry in enumerate(instance.initial.entries, start=1):
        if entry.state is _E:
            waiting[b] = (1, 1, job_by_initial_battery[b].index)
        elif entry.state is _C:
            remaining = cfg.charge_hours - entry.progress
            charge_end[b] = min(remaining, T)
            job = next(j for j in jobs if j.origin == "continuation" and j.battery == b)
            job_starts[job.index] = 1
        elif entry.state is _F:
            full_key[b] = (0, entry.full_rank)
        else:
            out_pool.append((0, b))

    for t in range(1, T + 1):
        # 1. arrivals land (battery binding is FIFO on time-went-out)
        need = arrivals[t - 1]
        if need:
            if t == 1:
                raise InfeasibleError(1, "arrivals cannot land at hour 1")
            if len(out_pool) < need:
                raise InfeasibleError(
                    t, f"{need} arrival(s) at hour {t} but only {len(out_pool)} batteries are out"
                )
            out_pool.sort()
            for _ in range(need):
                _, b = out_pool.pop(0)
                job = arrival_jobs.popleft()
                rows[b][t] = _E
                waiting[b] = (t, t + 1, job.index)

        # 2. running charges advance; finished ones become full
        for b in sorted(charge_end):
            if t > charge_end[b]:
                del charge_end[b]
                rows[b][t] = _F
                full_key[b] = (t, b)
            else:
                rows[b][t] = _C

        # 3. charge starts
        if starts is None:
            free = cfg.n_chargers - len(charge_end)
            for entry_hour, b in sorted((w[0], b) for b, w in waiting.items()):
                if free <= 0:
                    break
                if waiting[b][1] <= t:
                    job_index = waiting[b][2]
                    del waiting[b]
                    charge_end[b] = min(t + jobs[job_index].duration - 1, T)
                    rows[b][t] = _C
                    job_starts[job_index] = t
                    free -= 1
        else:
            for b in sorted(waiting):
                job_index = waiting[b][2]
                if starts.get(job_index) == t:
                    del waiting[b]
                    charge_end[b] = min(t + jobs[job_index].duration - 1, T)
                    rows[b][t] = _C
                    job_starts[job_index] = t
            if len(charge_end) > cfg.n_chargers:
                raise InfeasibleError(t, f"{len(charge_end)} concurrent charges at hour {t}")

        # 4. swaps consume hour-(t-1) full stock, longest-full first
        need = demand[t - 1]
        if need:
            if t == 1:
                raise InfeasibleError(1, "demand at hour 1 can never be served")
            stock = sorted(
                (key, b) for b, key in full_key.items() if rows[b][t - 1] is _F
            )
            if len(stock) < need:
                raise InfeasibleError(
                    t,
                    f"demand {need} at hour {t}, only {len(stock)} fully-charged "
                    "batteries available",
                )
            for _ in range(need):
                _, b = stock.pop(0)
                del full_key[b]
                rows[b][t] = _O
                out_pool.append((t, b))

        # 5. everything else keeps its state
        for b in range(1, NB + 1):
            if rows[b][t] is None:
                rows[b][t] = rows[b][t - 1] if t > 1 else instance.initial.for_battery(b).state

    grid = ScheduleGrid.from_rows([rows[b][1:] for b in range(1, NB + 1)])
    return _SimResult(grid=grid, job_starts=job_starts)


def solve_greedy(instance: Instance) -> ScheduleGrid:
    """Charge as soon as possible under the FIFO disciplines.

    Maximizes completions by every hour, so if this raises InfeasibleError
    (carrying the first failing hour) no schedule covers the demand.
    """
    return _simulate(instance, build_jobs(instance), None).grid


# ---------------------------------------------------------------------------
# Exact solver
# ---------------------------------------------------------------------------


def solve_exact(
    instance: Instance,
    objective: SolveObjective = SolveObjective.MIN_COST,
) -> tuple[ScheduleGrid, CostBreakdown]:
    """Minimum-electricity-cost schedule by branch-and-bound over start vectors.

    Depth-first search assigns movable-job starts in canonical order with
    ascending hours, so vectors are visited lexicographically; pruning uses
    per-hour charger usage, an optimistic demand-coverage test, and a lower
    bound of cheapest-remaining-block costs.  Cost ties keep the first
    (lexicographically earliest) vector.  The greedy schedule seeds the
    incumbent, which also makes exact-never-worse-than-greedy structural.
    """
    cfg = instance.config
    prices = instance.events.price
    jobs = build_jobs(instance)
    greedy = _simulate(instance, jobs, None)  # raises InfeasibleError with the proof hour
    if objective is SolveObjective.FEASIBILITY:
        return greedy.grid, schedule_cost(greedy.grid, cfg, prices)

    T = cfg.horizon
    power = cfg.power_kw
    movables = [j for j in jobs if j.movable]
    domains = [start_domain(j, cfg) for j in movables]

    prefix = [Fraction(0)]
    for p in prices:
        prefix.append(prefix[-1] + p)

    def block_cost(s: int, duration: int) -> Fraction:
        e = min(s + duration - 1, T)
        return power * (prefix[e] - prefix[s - 1])

    usage = [0] * (T + 2)
    fixed_cost = Fraction(0)
    comp = [0] * (T + 2)  # completions landing per hour (fixed + chosen + optimistic)
    n_full = instance.initial.count(_F)
    for j in jobs:
        if not j.movable:
            for h in range(j.fixed_start, min(j.fixed_start + j.duration - 1, T) + 1):
                usage[h] += 1
            fixed_cost += block_cost(j.fixed_start, j.duration)
            if j.fixed_start + j.duration <= T:
                comp[j.fixed_start + j.duration] += 1

    cum_demand = [0] * (T + 1)
    for t in range(1, T + 1):
        cum_demand[t] = cum_demand[t - 1] + instance.events.demand[t - 1]
    demand_total = cum_demand[T]

    def completion_hour(s: int | None, duration: int) -> int | None:
        if s is None or s + duration > T:
            return None
        return s + duration

    # optimistic completions: every unchosen job completes as early as it can
    optimistic = []
    for j, dom in zip(movables, domains):
        c = completion_hour(dom[0], j.duration) if dom else None
        optimistic.append(c)
        if c is not None:
            comp[c] += 1

    def coverage_possible() -> bool:
        if demand_total <= n_full:
            return True
        supply = n_full
        for t in range(1, T + 1):
            if cum_demand[t] > supply:
                return False
            supply += comp[t]  # completions at t serve demand from t+1 on
        return True

    min_block = [
        min((block_cost(s, j.duration) for s in dom), default=Fraction(0))
        for j, dom in zip(movables, domains)
    ]
    suffix_bound = [Fraction(0)] * (len(movables) + 1)
    for i in range(len(movables) - 1, -1, -1):
        suffix_bound[i] = suffix_bound[i + 1] + min_block[i]

    best_cost: Fraction | None = None
    best_vec: tuple[int | None, ...] | None = None

    greedy_vec = tuple(greedy.job_starts.get(j.index) for j in movables)
    if all(
        (s is None and not dom) or (dom and s in dom)
        for s, dom in zip(greedy_vec, domains)
    ):
        best_cost = fixed_cost + sum(
            (block_cost(s, j.duration) for s, j in zip(greedy_vec, movables) if s is not None),
            Fraction(0),
        )
        best_vec = greedy_vec

    n = len(movables)
    chosen: list[int | None] = [None] * n

    def dfs(i: int, cost_so_far: Fraction) -> None:
        nonlocal best_cost, best_vec
        if best_cost is not None and cost_so_far + suffix_bound[i] >= best_cost:
            return  # DFS is lexicographic, so an equal-cost incumbent is already earlier
        if not coverage_possible():
            return
        if i == n:
            best_cost = cost_so_far
            best_vec = tuple(chosen)
            return
        job = movables[i]
        dom = domains[i]
        if not dom:
            chosen[i] = None
            dfs(i + 1, cost_so_far)
            return
        opt = optimistic[i]
        if opt is not None:
            comp[opt] -= 1
        for s in dom:
            end = min(s + job.duration - 1, T)
            ok = True
            for h in range(s, end + 1):
                usage[h] += 1
                if usage[h] > cfg.n_chargers:
                    for g in range(s, h + 1):
                        usage[g] -= 1
                    ok = False
                    break
            if not ok:
                continue
            c = completion_hour(s, job.duration)
            if c is not None:
                comp[c] += 1
            chosen[i] = s
            dfs(i + 1, cost_so_far + block_cost(s, job.duration))
            if c is not None:
                comp[c] -= 1
            for h in range(s, end + 1):
                usage[h] -= 1
        chosen[i] = None
        if opt is not None:
            comp[opt] += 1

    dfs(0, fixed_cost)

    if best_vec is None:
        raise InfeasibleError(None, "no arrangement of full charge blocks covers the demand")
    result = _simulate(
        instance, jobs, {j.index: s for j, s in zip(movables, best_vec)}
    )
    return result.grid, schedule_cost(result.grid, cfg, prices)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def solve_oracle(
    instance: Instance,
    objective: SolveObjective = SolveObjective.MIN_COST,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> tuple[ScheduleGrid, CostBreakdown]:
    """Exhaustively enumerate start vectors; cross-check for solve_exact.

    Every realized schedule is filtered through strict validation rather
    than through the exact solver's pruning logic.  Refuses instances whose
    vector count exceeds ``budget``.
    """
    cfg = instance.config
    prices = instance.events.price
    jobs = build_jobs(instance)
    movables = [j for j in jobs if j.movable]
    domains = [start_domain(j, cfg) or (None,) for j in movables]
    size = 1
    for dom in domains:
        size *= len(dom)
    if size > budget:
        raise EnumerationBudgetError(size, budget)

    T = cfg.horizon
    base_usage = [0] * (T + 2)
    for j in jobs:
        if not j.movable:
            for h in range(j.fixed_start, min(j.fixed_start + j.duration - 1, T) + 1):
                base_usage[h] += 1

    best: tuple[Fraction, ScheduleGrid, CostBreakdown] | None = None
    indexes = [j.index for j in movables]
    for combo in itertools.product(*domains):
        usage = base_usage.copy()
        ok = True
        for job, s in zip(movables, combo):
            if s is None:
                continue
            for h in range(s, min(s + job.duration - 1, T) + 1):
                usage[h] += 1
                if usage[h] > cfg.n_chargers:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        try:
            res = _simulate(instance, jobs, dict(zip(indexes, combo)))
        except InfeasibleError:
            continue
        if not validate(res.grid, instance, "strict").feasible:
            continue
        cost = schedule_cost(res.grid, cfg, prices)
        if objective is SolveObjective.FEASIBILITY:
            return res.grid, cost
        if best is None or cost.total < best[0]:
            best = (cost.total, res.grid, cost)
    if best is None:
        _simulate(instance, jobs, None)  # raises with the proof hour when demand is the cause
        raise InfeasibleError(None, "no start vector passes strict validation")
    return best[1], best[2]
