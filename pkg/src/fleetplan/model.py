"""Weekly fleet simulator, cost model, constraint validator, and plan repair.

The simulator advances one week at a time over pools of vessels and
operators.  Pools are stored as {cumulative_maintenance_weeks: count}
maps rather than per-unit ledgers: every rule in the model depends only
on a unit's status and its accumulated maintenance weeks, so units in
the same bucket are interchangeable.  Wherever a subset of a pool must
be picked (deployment, attrition, instructor duty) units are taken in
ascending order of accumulated maintenance weeks, which keeps every run
deterministic.

Within a week the fixed order of events is:
  attrition on last week's working units -> survivors enter one week of
  maintenance (and may be discarded on entry) -> units finishing
  maintenance / commissioning / training / instructing become available
  -> purchases are admitted (new vessels commission, new operators train
  under reserved instructors) -> exactly the demanded deployment is
  staffed -> the week's cost is accrued.

validate() re-derives the constraint set from schedule records alone and
shares no code with step_week, so the two act as independent checks on
each other.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .domain import (CostParams, DemandSeries, FleetParams, ProcurementPlan,
                     ceil_div, round_half_up)

VIOLATION_CODES = frozenset({
    "EQ7_USAGE",
    "EQ9_OPERATOR_USAGE",
    "EQ11_INSTRUCTORS",
    "EQ12_MAINTENANCE",
    "EQ13_COMMISSIONING",
    "EQ18_ATTRITION_SUPPLY",
    "NONNEG",
})

INSUFFICIENT_VESSELS = "INSUFFICIENT_VESSELS"
INSUFFICIENT_OPERATORS = "INSUFFICIENT_OPERATORS"
INSUFFICIENT_INSTRUCTORS = "INSUFFICIENT_INSTRUCTORS"


class InfeasibleError(Exception):
    """A week could not be staffed; carries the earliest failure."""

    def __init__(self, code: str, week: int, shortfall: int):
        self.code = code
        self.week = week
        self.shortfall = shortfall
        super().__init__(f"{code} in week {week}, short {shortfall} unit(s)")


class UnrepairableError(Exception):
    """No purchase schedule can fix the plan (week-1 demand exceeds stock)."""

    def __init__(self, week: int, detail: str):
        self.week = week
        self.detail = detail
        super().__init__(f"week {week}: {detail}")


class ScheduleFormatError(ValueError):
    """A schedule CSV could not be parsed back into records."""


@dataclass(frozen=True, slots=True)
class Violation:
    week: int
    constraint: str
    detail: str

    def __post_init__(self):
        if self.constraint not in VIOLATION_CODES:
            raise ValueError(f"unknown constraint code: {self.constraint}")


Pool = dict[int, int]  # accumulated maintenance weeks -> unit count


def _total(pool: Pool) -> int:
    return sum(pool.values())


def _merge(*pools: Pool) -> Pool:
    live = [p for p in pools if p]
    if not live:
        return {}
    if len(live) == 1:
        # pools are never mutated in place, so sharing the dict is safe
        return live[0]
    out = dict(live[0])
    for pool in live[1:]:
        for w, n in pool.items():
            out[w] = out.get(w, 0) + n
    return out


def _take_lowest(pool: Pool, n: int) -> tuple[Pool, Pool]:
    """Split n units off a pool, lowest maintenance count first.

    Returns (taken, rest).  Callers check sufficiency beforehand.
    """
    if n == 0:
        return {}, pool
    taken: Pool = {}
    rest: Pool = {}
    left = n
    for w in sorted(pool):
        count = pool[w]
        grab = min(left, count)
        if grab:
            taken[w] = grab
            left -= grab
        if count - grab:
            rest[w] = count - grab
    if left:
        raise ValueError(f"pool exhausted: wanted {n}, short {left}")
    return taken, rest


@dataclass(slots=True)
class FleetState:
    """Snapshot of every pool at the end of a completed week.

    Treated as immutable by convention: step_week builds fresh maps and
    never touches its input, so states can be shared freely.
    """

    week: int
    vessels_available: Pool
    vessels_in_use: Pool
    vessels_maint: Pool
    vessels_commissioning: int
    ops_available: Pool
    ops_in_use: Pool
    ops_maint: Pool
    ops_instructing: Pool
    ops_training: int

    @classmethod
    def initial(cls, params: FleetParams) -> "FleetState":
        """Week-0 state: the starting stock idle and fully skilled."""
        return cls(
            week=0,
            vessels_available={0: params.initial_vessels} if params.initial_vessels else {},
            vessels_in_use={},
            vessels_maint={},
            vessels_commissioning=0,
            ops_available={0: params.initial_operators} if params.initial_operators else {},
            ops_in_use={},
            ops_maint={},
            ops_instructing={},
            ops_training=0,
        )

    def vessels_owned(self) -> int:
        return (_total(self.vessels_available) + _total(self.vessels_in_use)
                + _total(self.vessels_maint) + self.vessels_commissioning)

    def operators_owned(self) -> int:
        return (_total(self.ops_available) + _total(self.ops_in_use)
                + _total(self.ops_maint) + _total(self.ops_instructing)
                + self.ops_training)


@dataclass(frozen=True, slots=True)
class WeekRecord:
    week: int
    vessel_buys: int
    operator_buys: int
    vessel_discards: int
    operator_discards: int
    vessels_destroyed: int
    operators_destroyed: int
    vessels_maint: int
    operators_maint: int
    instructors: int
    trainees: int
    robots_deployed: int
    week_cost: Decimal
    # end-of-week ownership, filled by the simulator; schedules read back
    # from CSV carry None here and the validator reconstructs the totals
    vessels_owned: int | None = None
    operators_owned: int | None = None


@dataclass(frozen=True, slots=True)
class WeekOutcome:
    next_state: FleetState
    record: WeekRecord


@dataclass(frozen=True)
class Schedule:
    records: tuple[WeekRecord, ...]
    total_cost: Decimal

    @property
    def horizon(self) -> int:
        return len(self.records)


def discard_vessel(maint_weeks: int, costs: CostParams) -> bool:
    """True when accumulated upkeep strictly exceeds a replacement hull."""
    return maint_weeks * costs.vessel_maint_price > costs.vessel_price


def discard_operator(maint_weeks: int, costs: CostParams) -> bool:
    """True when accumulated upkeep strictly exceeds a fresh hire plus
    twice the training charge (the hire's course and the instructor)."""
    return (maint_weeks * costs.operator_maint_price
            > costs.operator_price + 2 * costs.training_price)


def _attrit(in_use: Pool, rate: Decimal) -> tuple[int, Pool]:
    """Destroy round-half-up(rate * pool size) units, lowest wear first."""
    if not in_use or not rate:
        return 0, in_use
    destroyed = round_half_up(rate * _total(in_use))
    _, survivors = _take_lowest(in_use, destroyed)
    return destroyed, survivors


def _enter_maintenance(survivors: Pool, is_discard) -> tuple[Pool, int]:
    """Advance wear by one week and apply the discard rule on entry.

    Discarded units never take up a maintenance slot and incur no
    maintenance charge for the week.
    """
    if not survivors:
        return {}, 0
    maint: Pool = {}
    discards = 0
    for w, n in survivors.items():
        w_next = w + 1
        if is_discard(w_next):
            discards += n
        else:
            maint[w_next] = maint.get(w_next, 0) + n
    return maint, discards


def step_week(state: FleetState, buys: tuple[int, int], demand: int,
              params: FleetParams, costs: CostParams) -> WeekOutcome:
    """Advance the fleet one week; raises InfeasibleError when the week
    cannot be staffed.

    buys is (vessel_buys, operator_buys) for the week being entered.
    Feasibility is reported with vessel shortfalls first, then operator
    deployment, then instructor reservation.
    """
    cb, ob = buys
    if cb < 0 or ob < 0:
        raise ValueError("purchases must be >= 0")
    if demand < 0:
        raise ValueError("demand must be >= 0")
    week = state.week + 1

    # attrition strikes last week's working units; survivors go to the shop
    destroyed_v, surv_v = _attrit(state.vessels_in_use, params.attrition_rate)
    destroyed_o, surv_o = _attrit(state.ops_in_use, params.attrition_rate)
    maint_v, discards_v = _enter_maintenance(surv_v, lambda w: discard_vessel(w, costs))
    maint_o, discards_o = _enter_maintenance(surv_o, lambda w: discard_operator(w, costs))

    # everyone who finished maintenance, commissioning, training, or
    # instructor duty last week is available again
    avail_v = _merge(state.vessels_available, state.vessels_maint,
                     {0: state.vessels_commissioning} if state.vessels_commissioning else {})
    avail_o = _merge(state.ops_available, state.ops_maint, state.ops_instructing,
                     {0: state.ops_training} if state.ops_training else {})

    avail_v_n = _total(avail_v)
    avail_o_n = _total(avail_o)
    maint_v_n = _total(maint_v)
    maint_o_n = _total(maint_o)

    instructors = ceil_div(ob, params.instruct_capacity) if ob else 0

    shortfall_v = demand - avail_v_n
    if shortfall_v > 0:
        raise InfeasibleError(INSUFFICIENT_VESSELS, week, shortfall_v)
    shortfall_o = 4 * demand - avail_o_n
    if shortfall_o > 0:
        raise InfeasibleError(INSUFFICIENT_OPERATORS, week, shortfall_o)
    shortfall_g = 4 * demand + instructors - avail_o_n
    if shortfall_g > 0:
        raise InfeasibleError(INSUFFICIENT_INSTRUCTORS, week, shortfall_g)

    instructing, avail_o = _take_lowest(avail_o, instructors)
    use_o, avail_o = _take_lowest(avail_o, 4 * demand)
    use_v, avail_v = _take_lowest(avail_v, demand)

    week_cost = (cb * costs.vessel_price
                 + ob * costs.operator_price
                 + (instructors + ob) * costs.training_price
                 + maint_v_n * costs.vessel_maint_price
                 + maint_o_n * costs.operator_maint_price)

    next_state = FleetState(
        week=week,
        vessels_available=avail_v,
        vessels_in_use=use_v,
        vessels_maint=maint_v,
        vessels_commissioning=cb,
        ops_available=avail_o,
        ops_in_use=use_o,
        ops_maint=maint_o,
        ops_instructing=instructing,
        ops_training=ob,
    )
    record = WeekRecord(
        week=week,
        vessel_buys=cb,
        operator_buys=ob,
        vessel_discards=discards_v,
        operator_discards=discards_o,
        vessels_destroyed=destroyed_v,
        operators_destroyed=destroyed_o,
        vessels_maint=maint_v_n,
        operators_maint=maint_o_n,
        instructors=instructors,
        trainees=ob,
        robots_deployed=demand,
        week_cost=week_cost,
        # everything available pre-deployment plus the shop and the intake
        vessels_owned=avail_v_n + maint_v_n + cb,
        operators_owned=avail_o_n + maint_o_n + ob,
    )
    return WeekOutcome(next_state, record)


def simulate(plan: ProcurementPlan, demand: DemandSeries, params: FleetParams,
             costs: CostParams) -> Schedule:
    """Run the full horizon; raises InfeasibleError at the first unstaffable
    week.  Total cost is the exact sum of the weekly costs."""
    if not (plan.horizon == len(demand) == params.horizon):
        raise ValueError(
            f"horizon mismatch: plan={plan.horizon} demand={len(demand)} "
            f"params={params.horizon}")
    state = FleetState.initial(params)
    records = []
    total = Decimal(0)
    for i in range(params.horizon):
        outcome = step_week(state, (plan.vessel_buys[i], plan.operator_buys[i]),
                            demand[i], params, costs)
        state = outcome.next_state
        records.append(outcome.record)
        total += outcome.record.week_cost
    return Schedule(tuple(records), total)


def total_cost(schedule: Schedule, costs: CostParams) -> Decimal:
    """Recompute cost from aggregate schedule counts.

    Equals the sum of the weekly costs exactly; integer counts times
    Decimal prices make both routes exact.
    """
    sum_cb = sum(r.vessel_buys for r in schedule.records)
    sum_ob = sum(r.operator_buys for r in schedule.records)
    sum_train = sum(r.instructors + r.trainees for r in schedule.records)
    sum_vm = sum(r.vessels_maint for r in schedule.records)
    sum_om = sum(r.operators_maint for r in schedule.records)
    return (sum_cb * costs.vessel_price
            + sum_ob * costs.operator_price
            + sum_train * costs.training_price
            + sum_vm * costs.vessel_maint_price
            + sum_om * costs.operator_maint_price)


def validate(schedule: Schedule, demand: DemandSeries, params: FleetParams,
             costs: CostParams) -> list[Violation]:
    """Check a schedule against the constraint set, independently of the
    simulator.

    Works purely from the week records plus initial stock: ownership is
    reconstructed week by week from the purchase/discard/attrition flows,
    and each week must satisfy demand coverage, operator balance,
    instructor count, maintenance turnover, purchase lead times, the
    attrition account, and nonnegativity.  costs is accepted for
    interface symmetry with the rest of the module; the constraint set
    itself is price-free.
    """
    del costs
    out: list[Violation] = []
    records = schedule.records
    if len(records) != len(demand):
        out.append(Violation(0, "EQ7_USAGE",
                             f"schedule covers {len(records)} week(s), demand covers {len(demand)}"))
        return out

    own_v = params.initial_vessels
    own_o = params.initial_operators
    prev_deployed = 0
    prev_own_v = own_v
    for i, rec in enumerate(records):
        week = i + 1
        r_i = demand[i]

        counts = {
            "vessel_buys": rec.vessel_buys, "operator_buys": rec.operator_buys,
            "vessel_discards": rec.vessel_discards, "operator_discards": rec.operator_discards,
            "vessels_destroyed": rec.vessels_destroyed, "operators_destroyed": rec.operators_destroyed,
            "vessels_maint": rec.vessels_maint, "operators_maint": rec.operators_maint,
            "instructors": rec.instructors, "trainees": rec.trainees,
            "robots_deployed": rec.robots_deployed,
        }
        for name, value in counts.items():
            if value < 0:
                out.append(Violation(week, "NONNEG", f"{name} is negative: {value}"))
        if rec.week_cost < 0:
            out.append(Violation(week, "NONNEG", f"week_cost is negative: {rec.week_cost}"))

        # attrition account: destroyed counts follow from last week's usage
        want_dv = round_half_up(params.attrition_rate * prev_deployed)
        want_do = round_half_up(params.attrition_rate * 4 * prev_deployed)
        if rec.vessels_destroyed != want_dv:
            out.append(Violation(week, "EQ18_ATTRITION_SUPPLY",
                                 f"vessels_destroyed={rec.vessels_destroyed}, "
                                 f"attrition of {prev_deployed} in use gives {want_dv}"))
        if rec.operators_destroyed != want_do:
            out.append(Violation(week, "EQ18_ATTRITION_SUPPLY",
                                 f"operators_destroyed={rec.operators_destroyed}, "
                                 f"attrition of {4 * prev_deployed} in use gives {want_do}"))

        # ownership recurrences (exact integer bookkeeping)
        own_v = own_v + rec.vessel_buys - rec.vessel_discards - rec.vessels_destroyed
        own_o = own_o + rec.operator_buys - rec.operator_discards - rec.operators_destroyed
        if own_v < 0:
            out.append(Violation(week, "NONNEG", f"vessel ownership goes negative: {own_v}"))
        if own_o < 0:
            out.append(Violation(week, "NONNEG", f"operator ownership goes negative: {own_o}"))
        if rec.vessels_owned is not None and rec.vessels_owned != own_v:
            out.append(Violation(week, "EQ18_ATTRITION_SUPPLY",
                                 f"recorded vessel ownership {rec.vessels_owned} breaks the "
                                 f"recurrence value {own_v}"))
        if rec.operators_owned is not None and rec.operators_owned != own_o:
            out.append(Violation(week, "EQ18_ATTRITION_SUPPLY",
                                 f"recorded operator ownership {rec.operators_owned} breaks the "
                                 f"recurrence value {own_o}"))

        # demand coverage
        if rec.robots_deployed != r_i:
            out.append(Violation(week, "EQ7_USAGE",
                                 f"robots_deployed={rec.robots_deployed}, demand is {r_i}"))

        # purchase lead time: this week's vessel buys are commissioning, so
        # deployment draws on prior ownership net of last week's users
        deployable = prev_own_v - prev_deployed
        if rec.robots_deployed > deployable:
            out.append(Violation(week, "EQ13_COMMISSIONING",
                                 f"deploys {rec.robots_deployed} vessels but lead times leave "
                                 f"only {deployable}"))

        # vessel balance: ownership must cover crews, shop, commissioning
        pool_v = own_v - rec.robots_deployed - rec.vessels_maint - rec.vessel_buys
        if pool_v < 0:
            out.append(Violation(week, "EQ13_COMMISSIONING",
                                 f"vessel account short by {-pool_v} "
                                 f"(own {own_v}, need {rec.robots_deployed} deployed + "
                                 f"{rec.vessels_maint} shop + {rec.vessel_buys} commissioning)"))

        # operator balance: ownership must cover crews, shop, classroom
        pool = (own_o - 4 * rec.robots_deployed - rec.operators_maint
                - rec.instructors - rec.trainees)
        if pool < 0:
            out.append(Violation(week, "EQ9_OPERATOR_USAGE",
                                 f"operator account short by {-pool} "
                                 f"(own {own_o}, need 4x{rec.robots_deployed} crews + "
                                 f"{rec.operators_maint} shop + {rec.instructors} instructing + "
                                 f"{rec.trainees} training)"))
        if rec.trainees != rec.operator_buys:
            out.append(Violation(week, "EQ9_OPERATOR_USAGE",
                                 f"trainees={rec.trainees} but operator_buys={rec.operator_buys}"))

        # instructor headcount is pinned by the week's trainee intake
        want_g = ceil_div(rec.operator_buys, params.instruct_capacity) if rec.operator_buys else 0
        if rec.instructors != want_g:
            out.append(Violation(week, "EQ11_INSTRUCTORS",
                                 f"instructors={rec.instructors}, {rec.operator_buys} trainees "
                                 f"need {want_g}"))

        # maintenance turnover: everyone who worked last week and survived
        # attrition is either discarded on entry or in the shop this week
        floor_om = 4 * prev_deployed - rec.operator_discards - rec.operators_destroyed
        if rec.operators_maint < floor_om:
            out.append(Violation(week, "EQ12_MAINTENANCE",
                                 f"operators_maint={rec.operators_maint}, turnover floor is {floor_om}"))
        floor_vm = prev_deployed - rec.vessel_discards - rec.vessels_destroyed
        if rec.vessels_maint < floor_vm:
            out.append(Violation(week, "EQ12_MAINTENANCE",
                                 f"vessels_maint={rec.vessels_maint}, turnover floor is {floor_vm}"))

        prev_own_v = own_v
        prev_deployed = rec.robots_deployed
    return out


_REPAIR_BUMPS = {
    INSUFFICIENT_VESSELS: "vessel",
    INSUFFICIENT_OPERATORS: "operator",
    INSUFFICIENT_INSTRUCTORS: "operator",
}


def repair_and_simulate(plan: ProcurementPlan, demand: DemandSeries,
                        params: FleetParams, costs: CostParams,
                        ) -> tuple[ProcurementPlan, Schedule]:
    """repair() and simulate() fused into one pass.

    Each simulator-reported shortfall is answered with the minimal extra
    purchase at the latest week the one-week lead time allows (the week
    before the failure), and the simulation resumes from that week rather
    than from scratch; weeks before the bump are unaffected by it.

    One exception cuts a purchase instead of adding one: when a week's
    instructor pool cannot cover the plan's own operator purchase and no
    repair bump put that purchase there, the purchase is gratuitous and
    gets clamped down to the instructable maximum.  Purchases repair
    itself added express real downstream demand, so an instructor
    shortfall on those cascades upstream as extra operator buys instead;
    the cascade hitting week 1 (whose instructors can only come from the
    initial stock) is genuinely unrepairable.  Week-1 vessel or operator
    deployment shortfalls are likewise unrepairable: purchases arrive a
    week too late.  Returns the feasible plan and its schedule.
    """
    if not (plan.horizon == len(demand) == params.horizon):
        raise ValueError(
            f"horizon mismatch: plan={plan.horizon} demand={len(demand)} "
            f"params={params.horizon}")
    vessel = list(plan.vessel_buys)
    operator = list(plan.operator_buys)
    # states[i] is the state after i completed weeks; records[i] covers week i+1
    states = [FleetState.initial(params)]
    records: list[WeekRecord] = []
    # generous guard against a runaway loop; every bump adds >= 1 purchase
    limit = 100 + 20 * (sum(demand) * 5 + len(demand))
    bumps = 0
    bumped_ops: set[int] = set()
    i = 0
    while i < params.horizon:
        try:
            outcome = step_week(states[i], (vessel[i], operator[i]),
                                demand[i], params, costs)
        except InfeasibleError as err:
            bumps += 1
            if bumps > limit:
                raise RuntimeError(
                    "repair failed to converge; model invariant broken") from None
            if (err.code == INSUFFICIENT_INSTRUCTORS
                    and err.week - 1 not in bumped_ops):
                # the plan's own purchase for this week outstrips the
                # instructor pool and no repair bump put it there: the
                # purchase is gratuitous, so shrink the intake to fit.
                # shortfall = 4R + ceil(ob/G) - available, hence the
                # largest instructable intake is G*(ceil(ob/G) - shortfall).
                idx = err.week - 1
                g = params.instruct_capacity
                ob_max = g * (ceil_div(operator[idx], g) - err.shortfall)
                if ob_max >= operator[idx]:  # strict progress is guaranteed
                    raise RuntimeError(
                        "instructor clamp failed to shrink the intake"
                    ) from None
                operator[idx] = max(0, ob_max)
                i = idx
                del states[i + 1:]
                del records[i:]
                continue
            if err.week <= 1:
                if err.code == INSUFFICIENT_INSTRUCTORS:
                    cap = params.instruct_capacity * (
                        params.initial_operators - 4 * demand[0])
                    raise UnrepairableError(
                        1, f"{err.code}: later weeks need more trained "
                           f"operators than the initial stock can instruct "
                           f"(at most {cap} week-1 trainees)") from None
                raise UnrepairableError(
                    err.week,
                    f"{err.code}: week-1 demand exceeds the initial fleet "
                    f"by {err.shortfall}") from None
            if _REPAIR_BUMPS[err.code] == "vessel":
                vessel[err.week - 2] += err.shortfall
            else:
                operator[err.week - 2] += err.shortfall
                bumped_ops.add(err.week - 2)
            i = err.week - 2
            del states[i + 1:]
            del records[i:]
            continue
        states.append(outcome.next_state)
        records.append(outcome.record)
        i += 1
    fixed = ProcurementPlan(tuple(vessel), tuple(operator))
    total = sum((r.week_cost for r in records), Decimal(0))
    return fixed, Schedule(tuple(records), total)


def repair(plan: ProcurementPlan, demand: DemandSeries, params: FleetParams,
           costs: CostParams) -> ProcurementPlan:
    """Make a plan feasible by adding purchases, or return it unchanged.

    Each simulator-reported shortfall is answered with the minimal extra
    purchase at the latest week the one-week lead time allows (the week
    before the failure).  A failure in week 1 cannot be bought out of,
    so it raises UnrepairableError.
    """
    fixed, _ = repair_and_simulate(plan, demand, params, costs)
    return fixed


SCHEDULE_HEADER = ["week", "vessel_buys", "operator_buys", "vessel_discards",
                   "operator_discards", "vessels_destroyed", "operators_destroyed",
                   "vessels_maint", "operators_maint", "instructors", "trainees",
                   "robots_deployed", "week_cost"]


def write_schedule_csv(path: str | Path, schedule: Schedule) -> None:
    """Schedule CSV: one row per week plus a trailing totals row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCHEDULE_HEADER)
        sums = [0] * 11
        for r in schedule.records:
            row = [r.week, r.vessel_buys, r.operator_buys, r.vessel_discards,
                   r.operator_discards, r.vessels_destroyed, r.operators_destroyed,
                   r.vessels_maint, r.operators_maint, r.instructors, r.trainees,
                   r.robots_deployed, r.week_cost]
            for k in range(11):
                sums[k] += row[k + 1]
            writer.writerow(row)
        writer.writerow(["total", *sums, schedule.total_cost])


def read_schedule_csv(path: str | Path) -> Schedule:
    """Parse a schedule CSV written by write_schedule_csv.

    Ownership columns are not part of the export, so loaded records carry
    None there and the validator falls back to reconstruction.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCHEDULE_HEADER:
            raise ScheduleFormatError(f"bad schedule header: {header}")
        records = []
        total = None
        for row in reader:
            if not row:
                continue
            if row[0] == "total":
                try:
                    total = Decimal(row[-1])
                except InvalidOperation:
                    raise ScheduleFormatError(f"bad total cost: {row[-1]!r}") from None
                break
            if len(row) != len(SCHEDULE_HEADER):
                raise ScheduleFormatError(f"malformed schedule row: {row}")
            try:
                counts = [int(v) for v in row[:-1]]
                cost = Decimal(row[-1])
            except (ValueError, InvalidOperation):
                raise ScheduleFormatError(f"malformed schedule row: {row}") from None
            records.append(WeekRecord(*counts, cost))
    if total is None:
        raise ScheduleFormatError("schedule file missing totals row")
    check = sum((r.week_cost for r in records), Decimal(0))
    if check != total:
        raise ScheduleFormatError(f"totals row says {total}, weekly costs sum to {check}")
    return Schedule(tuple(records), total)
