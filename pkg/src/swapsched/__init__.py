"""Battery-swap-station scheduling.

Validate battery-by-hour schedules against station constraints, plan
charging greedily or at exact minimum electricity cost under time-of-use
tariffs, generate reproducible scenarios, and cross-check everything with a
brute-force oracle.
"""

from .errors import (
    DimensionError,
    EnumerationBudgetError,
    GridParseError,
    InfeasibleError,
    InstanceError,
    ProfileError,
    SwapSchedError,
    TransitionError,
)
from .model import (
    LEGAL_TRANSITIONS,
    BatteryStart,
    BatteryState,
    EventProfiles,
    InitialConditions,
    ScheduleGrid,
    StationConfig,
    extract_events,
    format_exact,
    legal_transition,
    parse_grid,
    render_grid,
    to_exact,
)
from .scenario import (
    ExplicitShape,
    ExplicitTariff,
    FlatTariff,
    PeakedShape,
    ScenarioSpec,
    TouTariff,
    UniformShape,
    demo_instance,
    generate,
    load_instance,
    load_profiles,
    load_spec,
    save_instance,
    save_profiles,
)
from .solver import (
    DEFAULT_ORACLE_BUDGET,
    ChargeJob,
    CostBreakdown,
    SolveObjective,
    build_jobs,
    schedule_cost,
    solve_exact,
    solve_greedy,
    solve_oracle,
    start_domain,
)
from .validation import (
    Instance,
    ValidationReport,
    Violation,
    check_arrivals,
    check_charge_duration,
    check_charger_capacity,
    check_conservation,
    check_demand_coverage,
    check_initial,
    check_transitions,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "SwapSchedError",
    "GridParseError",
    "TransitionError",
    "ProfileError",
    "DimensionError",
    "InstanceError",
    "InfeasibleError",
    "EnumerationBudgetError",
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
    "Instance",
    "Violation",
    "ValidationReport",
    "validate",
    "check_transitions",
    "check_conservation",
    "check_charger_capacity",
    "check_demand_coverage",
    "check_arrivals",
    "check_charge_duration",
    "check_initial",
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
    "__version__",
]
