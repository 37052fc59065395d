"""Greedy construction of a low-cost feasible plan.

seed_plan builds just-in-time purchases by answering each simulated
shortfall with the minimal buy at the latest lead-time-respecting week;
attrition replacement falls out of the same loop because the simulator
reports post-attrition shortfalls.  reduce_plan then walks the plan
downhill, one unit at a time, until no single purchase can be removed
without breaking feasibility or raising cost.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

from .domain import CostParams, DemandSeries, FleetParams, ProcurementPlan
from .model import InfeasibleError, UnrepairableError, repair, simulate


class UnseedableError(Exception):
    """Week-1 demand exceeds the initial fleet; no purchase plan helps."""

    def __init__(self, week: int, detail: str):
        self.week = week
        self.detail = detail
        super().__init__(f"week {week}: {detail}")


@dataclass(frozen=True)
class Reduction:
    """One accepted decrement: remove a single unit from (week, kind)."""

    pass_index: int
    week: int
    kind: str  # "vessel" or "operator"
    amount: int
    cost_after: Decimal


@dataclass(frozen=True)
class GreedyTrace:
    initial_cost: Decimal
    final_cost: Decimal
    reductions: tuple[Reduction, ...]

    @property
    def passes(self) -> int:
        return len(self.reductions)


def seed_plan(demand: DemandSeries, params: FleetParams,
              costs: CostParams) -> ProcurementPlan:
    """Feasible just-in-time plan grown from zero purchases."""
    try:
        return repair(ProcurementPlan.zero(len(demand)), demand, params, costs)
    except UnrepairableError as err:
        raise UnseedableError(err.week, err.detail) from None


def reduce_plan(plan: ProcurementPlan, demand: DemandSeries, params: FleetParams,
                costs: CostParams) -> tuple[ProcurementPlan, GreedyTrace]:
    """Steepest-descent removal of superfluous purchases.

    Each pass tries every single-unit decrement, keeps the one with the
    lowest resulting cost (ties resolved toward the latest week, then
    vessels over operators), and stops when nothing feasible improves.
    Terminates after at most sum(plan entries) passes since every pass
    removes one unit.
    """
    current = plan
    current_cost = simulate(current, demand, params, costs).total_cost
    initial_cost = current_cost
    reductions: list[Reduction] = []
    while True:
        best = None  # (cost, -week, kind_rank, plan)
        for kind_rank, kind in enumerate(("vessel", "operator")):
            buys = current.vessel_buys if kind == "vessel" else current.operator_buys
            for idx, amount in enumerate(buys):
                if amount == 0:
                    continue
                trimmed = list(buys)
                trimmed[idx] -= 1
                if kind == "vessel":
                    trial = ProcurementPlan(tuple(trimmed), current.operator_buys)
                else:
                    trial = ProcurementPlan(current.vessel_buys, tuple(trimmed))
                try:
                    cost = simulate(trial, demand, params, costs).total_cost
                except InfeasibleError:
                    continue
                if cost >= current_cost:
                    continue
                key = (cost, -(idx + 1), kind_rank)
                if best is None or key < best[0]:
                    best = (key, trial)
        if best is None:
            break
        (cost, neg_week, kind_rank), current = (best[0], best[1])
        current_cost = cost
        reductions.append(Reduction(
            pass_index=len(reductions) + 1,
            week=-neg_week,
            kind="vessel" if kind_rank == 0 else "operator",
            amount=1,
            cost_after=cost,
        ))
    return current, GreedyTrace(initial_cost, current_cost, tuple(reductions))


def write_greedy_trace_csv(path: str | Path, trace: GreedyTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pass", "week", "kind", "amount", "cost_after"])
        for r in trace.reductions:
            writer.writerow([r.pass_index, r.week, r.kind, r.amount, r.cost_after])
