"""Discrete-time simulation of a four-echelon serial supply chain.

The chain is ordered retailer (0) -> wholesaler (1) -> distributor (2) ->
factory (3).  Orders travel upstream through a two-slot mail pipeline and
goods travel downstream through a two-slot shipping pipeline, so a normal
order-to-receipt cycle is four rounds.  The factory has no upstream partner;
its orders enter a production queue that feeds its own shipping pipeline.

Each round executes five phases in a fixed sequence:

  1. receive: every entity absorbs the oldest shipping slot, the pipeline
     shifts forward.
  2. fill: the retailer reads the current customer demand, everyone else
     reads the oldest mail slot; old backlog plus the new order is shipped
     to the extent stock allows, and the shipment enters the downstream
     neighbour's youngest shipping slot.
  3. record: per-entity holding/backorder cost for the round, on post-fill
     stock and backlog.
  4. mail advance: order slips shift forward.
  5. produce and order: the oldest production request enters the factory's
     youngest shipping slot, then every entity places its order for the
     round (into the upstream mail slot, or the production queue for the
     factory).

Ordering decisions are made between phases 4 and 5 using the round's
observed order, post-fill stock, and the current pipeline view; the
``Conventions`` switches control the exact stock/pipeline signals exposed
to policies and a handful of board-layout variants that differ between
published descriptions of the game.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

N_ENTITIES = 4
PIPE_SLOTS = 2
ENTITY_NAMES = ("retailer", "wholesaler", "distributor", "factory")

SUPPLY_LINE_MODES = ("shipping", "shipping+orders", "full")


class SimulationError(ValueError):
    """Raised for invalid inputs to the round-advance machinery."""


@dataclass(frozen=True)
class CostParams:
    """Per-unit per-round holding and backorder charges."""

    holding_cost_per_unit_period: float = 0.50
    backorder_cost_per_unit_period: float = 1.00

    def __post_init__(self):
        if self.holding_cost_per_unit_period <= 0:
            raise ValueError("holding cost must be strictly positive")
        if self.backorder_cost_per_unit_period <= 0:
            raise ValueError("backorder cost must be strictly positive")


@dataclass(frozen=True)
class DemandSchedule:
    """Step demand: `pre_step_demand` until round `step_period`, then
    `post_step_demand` for the rest of the horizon.

    `step_period` is the 1-indexed round at which the higher demand first
    applies; the default of 5 means rounds 1-4 (indices 0-3) see the low
    demand.  The default post-step level of 9 matches the demand string the
    published baseline and Table-style cost anchors were generated with; see
    README "Conventions" for why this is 9 and not the 8 of most textbook
    descriptions.
    """

    pre_step_demand: float = 4.0
    post_step_demand: float = 9.0
    step_period: int = 5
    horizon: int = 52

    def __post_init__(self):
        if self.step_period < 1:
            raise ValueError("step_period must be >= 1")
        if self.horizon < self.step_period:
            raise ValueError("horizon must be >= step_period")
        if self.pre_step_demand < 0 or self.post_step_demand < 0:
            raise ValueError("demands must be non-negative")

    def demand_at(self, period: int) -> float:
        """Customer demand for a 0-based period index."""
        if period < 0:
            raise ValueError("period must be >= 0")
        return self.post_step_demand if period >= self.step_period - 1 else self.pre_step_demand


@dataclass(frozen=True)
class Conventions:
    """Board-layout and signal-definition switches.

    customer_order_delay: 0 reveals the demand card to the retailer the same
        round (classic play); 2 routes customer orders through the retailer's
        two-slot mail pipeline like any other order.
    factory_lag: rounds from production request to stock-on-hand.  3 is the
        classic board (one request slot feeding the two shipping slots); 4
        inserts a second request slot so the factory mirrors everyone else's
        2+2 delay.
    supply_line_mode: which units count as "inbound" in the ordering
        heuristic's supply-line signal.  "shipping" is the two inbound
        shipping slots only; "shipping+orders" adds order slips still in the
        mail (and queued production requests for the factory); "full" also
        adds backlog the upstream neighbour owes.
    net_stock: policies see on_hand - backlog as their stock signal if True,
        bare on_hand otherwise.
    integer_orders: round every placed order to the nearest whole unit.
    """

    customer_order_delay: int = 0
    factory_lag: int = 3
    supply_line_mode: str = "shipping"
    net_stock: bool = True
    integer_orders: bool = False

    def __post_init__(self):
        if self.customer_order_delay not in (0, 2):
            raise ValueError("customer_order_delay must be 0 or 2")
        if self.factory_lag not in (3, 4):
            raise ValueError("factory_lag must be 3 or 4")
        if self.supply_line_mode not in SUPPLY_LINE_MODES:
            raise ValueError(f"supply_line_mode must be one of {SUPPLY_LINE_MODES}")


@dataclass
class EntityState:
    """One echelon's ledger.

    inbound_shipping[0] is received next round; inbound_shipping[1] was
    shipped toward this entity this round.  inbound_orders are the order
    slips travelling to this entity from its downstream neighbour (the
    customer channel, for the retailer).
    """

    on_hand: float = 12.0
    backlog: float = 0.0
    inbound_shipping: list[float] = field(default_factory=lambda: [4.0, 4.0])
    inbound_orders: list[float] = field(default_factory=lambda: [4.0, 4.0])
    demand_forecast: float = 4.0
    last_incoming_order: float = 4.0

    def copy(self) -> "EntityState":
        return EntityState(
            on_hand=self.on_hand,
            backlog=self.backlog,
            inbound_shipping=list(self.inbound_shipping),
            inbound_orders=list(self.inbound_orders),
            demand_forecast=self.demand_forecast,
            last_incoming_order=self.last_incoming_order,
        )


@dataclass
class RoundRecord:
    """Everything observable about one completed round."""

    period: int
    incoming_orders: tuple[float, ...]
    arrivals: tuple[float, ...]
    shipped: tuple[float, ...]
    on_hand: tuple[float, ...]
    backlog: tuple[float, ...]
    orders_placed: tuple[float, ...]
    period_costs: tuple[float, ...]


@dataclass
class GameState:
    """Full simulator state plus the per-round trajectory so far."""

    entities: list[EntityState]
    demand_schedule: DemandSchedule
    cost_params: CostParams
    conventions: Conventions
    production_queue: list[float]
    period: int = 0
    cumulative_cost: float = 0.0
    trajectory: list[RoundRecord] = field(default_factory=list)

    def copy(self) -> "GameState":
        out = GameState(
            entities=[e.copy() for e in self.entities],
            demand_schedule=self.demand_schedule,
            cost_params=self.cost_params,
            conventions=self.conventions,
            production_queue=list(self.production_queue),
            period=self.period,
            cumulative_cost=self.cumulative_cost,
        )
        out.trajectory = [replace(r) for r in self.trajectory]
        return out


@dataclass(frozen=True)
class DecisionContext:
    """What one entity sees when placing its order.

    `stock` and `supply_line` already honour the game's conventions;
    `pipeline_full` is the complete inbound claim (mail + production queue +
    shipping + supplier backlog) regardless of the supply-line convention,
    which is what order-up-to policies track.
    """

    entity: int
    period: int
    observed_order: float
    on_hand: float
    backlog: float
    stock: float
    supply_line: float
    pipeline_full: float
    demand_forecast: float


# A policy maps a DecisionContext to (order, new_forecast).  new_forecast is
# stored back into the entity ledger when not None; policies without a
# demand-smoothing component return None there.
Policy = Callable[[DecisionContext], tuple[float, float | None]]


def init_state(
    demand_schedule: DemandSchedule | None = None,
    cost_params: CostParams | None = None,
    conventions: Conventions | None = None,
) -> GameState:
    """Standard starting board: 12 on hand everywhere, every pipeline slot
    primed with the pre-step demand."""
    schedule = demand_schedule or DemandSchedule()
    costs = cost_params or CostParams()
    conv = conventions or Conventions()
    d0 = schedule.pre_step_demand
    entities = [
        EntityState(
            on_hand=12.0,
            backlog=0.0,
            inbound_shipping=[d0, d0],
            inbound_orders=[d0, d0],
            demand_forecast=d0,
            last_incoming_order=d0,
        )
        for _ in range(N_ENTITIES)
    ]
    queue_len = conv.factory_lag - PIPE_SLOTS
    return GameState(
        entities=entities,
        demand_schedule=schedule,
        cost_params=costs,
        conventions=conv,
        production_queue=[d0] * queue_len,
    )


def _check_orders(orders: Sequence[float]) -> list[float]:
    if len(orders) != N_ENTITIES:
        raise SimulationError(f"expected {N_ENTITIES} orders, got {len(orders)}")
    out = []
    for i, o in enumerate(orders):
        o = float(o)
        if not math.isfinite(o):
            raise SimulationError(f"order for entity {i} is not finite: {o}")
        if o < 0:
            raise SimulationError(f"order for entity {i} is negative: {o}")
        out.append(o)
    return out


def _supply_line_parts(state: GameState, entity: int, mail: float) -> dict[str, float]:
    """Shared supply-line accounting; `mail` is the caller's view of order
    slips in transit (it differs between mid-round and between-round views)."""
    e = state.entities[entity]
    parts = {"shipping": sum(e.inbound_shipping), "mail": mail, "supplier_backlog": 0.0}
    if entity < N_ENTITIES - 1:
        parts["supplier_backlog"] = state.entities[entity + 1].backlog
    return parts


def _combine_supply_line(parts: dict[str, float], mode: str) -> float:
    total = parts["shipping"]
    if mode in ("shipping+orders", "full"):
        total += parts["mail"]
    if mode == "full":
        total += parts["supplier_backlog"]
    return total


def supply_line(state: GameState, entity: int, mode: str | None = None) -> float:
    """Units this entity has ordered but not yet received, between rounds.

    The default mode is the game's convention switch.  Order slips counted
    are the upstream neighbour's inbound mail (the production queue, for the
    factory)."""
    if not 0 <= entity < N_ENTITIES:
        raise ValueError(f"entity index out of range: {entity}")
    mode = mode or state.conventions.supply_line_mode
    if mode not in SUPPLY_LINE_MODES:
        raise ValueError(f"unknown supply_line mode: {mode}")
    if entity < N_ENTITIES - 1:
        mail = sum(state.entities[entity + 1].inbound_orders)
    else:
        mail = sum(state.production_queue)
    return _combine_supply_line(_supply_line_parts(state, entity, mail), mode)


@dataclass
class _MidRound:
    """Post-fill snapshot used to build decision contexts and finish the round."""

    demand: float
    incoming: list[float]
    arrivals: list[float]
    shipped: list[float]
    costs: list[float]


def _begin_round(state: GameState) -> _MidRound:
    if state.period >= state.demand_schedule.horizon:
        raise SimulationError(
            f"cannot advance past horizon {state.demand_schedule.horizon}"
        )
    conv = state.conventions
    ents = state.entities
    demand = state.demand_schedule.demand_at(state.period)

    # The demand card is face-up for the retailer unless orders are mailed.
    if conv.customer_order_delay == 0:
        ents[0].inbound_orders[0] = demand

    # Phase 1: receive, then shift the shipping pipeline forward.
    arrivals = []
    for e in ents:
        arrival = e.inbound_shipping[0]
        e.on_hand += arrival
        e.inbound_shipping[0] = e.inbound_shipping[1]
        arrivals.append(arrival)

    # Phase 2: fill backlog plus the round's order, as far as stock allows.
    incoming = [e.inbound_orders[0] for e in ents]
    shipped = []
    for i, e in enumerate(ents):
        owed = incoming[i] + e.backlog
        out = min(e.on_hand, owed)
        e.on_hand -= out
        e.backlog = owed - out
        shipped.append(out)
    for i in range(N_ENTITIES - 1):
        ents[i].inbound_shipping[1] = shipped[i + 1]

    # Phase 3: record post-fill cost.
    cp = state.cost_params
    costs = [
        cp.holding_cost_per_unit_period * e.on_hand
        + cp.backorder_cost_per_unit_period * e.backlog
        for e in ents
    ]

    # Phase 4: mail slips advance.
    for e in ents:
        e.inbound_orders[0] = e.inbound_orders[1]
    if conv.customer_order_delay == 2:
        ents[0].inbound_orders[1] = demand

    # Phase 5a: the oldest production request reaches the factory pipeline.
    ents[3].inbound_shipping[1] = state.production_queue.pop(0)

    return _MidRound(demand, incoming, arrivals, shipped, costs)


def _decision_context(state: GameState, mid: _MidRound, entity: int) -> DecisionContext:
    conv = state.conventions
    e = state.entities[entity]
    # Mid-round, only the already-advanced slip is in the mail; this round's
    # order has not been placed yet.
    if entity < N_ENTITIES - 1:
        mail = state.entities[entity + 1].inbound_orders[0]
    else:
        mail = sum(state.production_queue)
    parts = _supply_line_parts(state, entity, mail)
    sl = _combine_supply_line(parts, conv.supply_line_mode)
    full = _combine_supply_line(parts, "full")
    stock = e.on_hand - e.backlog if conv.net_stock else e.on_hand
    return DecisionContext(
        entity=entity,
        period=state.period,
        observed_order=mid.incoming[entity],
        on_hand=e.on_hand,
        backlog=e.backlog,
        stock=stock,
        supply_line=sl,
        pipeline_full=full,
        demand_forecast=e.demand_forecast,
    )


def _finish_round(
    state: GameState,
    mid: _MidRound,
    orders: Sequence[float],
    forecasts: Sequence[float | None] | None = None,
) -> tuple[float, ...]:
    orders = _check_orders(orders)
    if state.conventions.integer_orders:
        orders = [float(round(o)) for o in orders]

    # Phase 5b: place orders upstream / into production.
    ents = state.entities
    for i in range(N_ENTITIES - 1):
        ents[i + 1].inbound_orders[1] = orders[i]
    state.production_queue.append(orders[3])

    for i, e in enumerate(ents):
        e.last_incoming_order = mid.incoming[i]
        if forecasts is not None and forecasts[i] is not None:
            e.demand_forecast = forecasts[i]

    costs = tuple(mid.costs)
    state.trajectory.append(
        RoundRecord(
            period=state.period,
            incoming_orders=tuple(mid.incoming),
            arrivals=tuple(mid.arrivals),
            shipped=tuple(mid.shipped),
            on_hand=tuple(e.on_hand for e in ents),
            backlog=tuple(e.backlog for e in ents),
            orders_placed=tuple(orders),
            period_costs=costs,
        )
    )
    state.cumulative_cost += sum(costs)
    state.period += 1
    return costs


def advance_round(state: GameState, orders: Sequence[float]) -> tuple[GameState, tuple[float, ...]]:
    """Run one full round with the four orders decided up front.

    The orders bypass the decision phase entirely, so entity forecasts are
    left untouched.  Mutates and returns `state`."""
    mid = _begin_round(state)
    costs = _finish_round(state, mid, orders)
    return state, costs


def play_round(state: GameState, policies: Sequence[Policy]) -> tuple[GameState, tuple[float, ...]]:
    """Run one round, querying each entity's policy at the decision point."""
    if len(policies) != N_ENTITIES:
        raise SimulationError(f"expected {N_ENTITIES} policies")
    mid = _begin_round(state)
    orders: list[float] = []
    forecasts: list[float | None] = []
    for i, policy in enumerate(policies):
        order, forecast = policy(_decision_context(state, mid, i))
        orders.append(order)
        forecasts.append(forecast)
    costs = _finish_round(state, mid, orders, forecasts)
    return state, costs


def team_cost(trajectory: Sequence[RoundRecord], cost_params: CostParams | None = None) -> float:
    """Total holding + backorder cost over a recorded trajectory.

    Recomputed from the stored stock/backlog columns, so it independently
    cross-checks the accumulated figure."""
    cp = cost_params or CostParams()
    total = 0.0
    for rec in trajectory:
        for i in range(N_ENTITIES):
            total += (
                cp.holding_cost_per_unit_period * rec.on_hand[i]
                + cp.backorder_cost_per_unit_period * rec.backlog[i]
            )
    return total


def run_game(
    policies: Sequence[Policy],
    schedule: DemandSchedule | None = None,
    costs: CostParams | None = None,
    conventions: Conventions | None = None,
    seed: int | None = None,
) -> tuple[GameState, float]:
    """Play a full game under the given policies.

    Policies exposing a ``start_game(entity_index, rng)`` hook are reset with
    a per-entity random stream derived from `seed`, which makes repeated
    calls with the same arguments bit-identical."""
    from .seeding import derive_rng

    if len(policies) != N_ENTITIES:
        raise SimulationError(f"expected {N_ENTITIES} policies")
    state = init_state(schedule, costs, conventions)
    for i, p in enumerate(policies):
        hook = getattr(p, "start_game", None)
        if hook is not None:
            hook(i, derive_rng(seed if seed is not None else 0, "policy", i))
    while state.period < state.demand_schedule.horizon:
        play_round(state, policies)
    return state, state.cumulative_cost


TRAJECTORY_COLUMNS = (
    "period",
    "entity",
    "incoming_order",
    "shipped",
    "on_hand",
    "backlog",
    "order_placed",
    "period_cost",
)


def write_trajectory_csv(trajectory: Sequence[RoundRecord], path) -> None:
    """One row per entity-period, 6-decimal fixed point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for rec in trajectory:
            for i in range(N_ENTITIES):
                writer.writerow(
                    [
                        rec.period,
                        i,
                        f"{rec.incoming_orders[i]:.6f}",
                        f"{rec.shipped[i]:.6f}",
                        f"{rec.on_hand[i]:.6f}",
                        f"{rec.backlog[i]:.6f}",
                        f"{rec.orders_placed[i]:.6f}",
                        f"{rec.period_costs[i]:.6f}",
                    ]
                )
