"""Per-round single-server FCFS queue pass and game triggering.

Every player enters once per round.  Interarrival gaps are exponential
with rate ``lambda``, service durations exponential with rate ``mu``, and
the order in which players arrive is a fresh uniform permutation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .topology import NetworkTopology

SELF_CENTERED = "self_centered"
NEIGHBOR_CENTERED = "neighbor_centered"


@dataclass(frozen=True)
class QueueParams:
    lam: float
    mu: float

    def __post_init__(self):
        for name, value in (("lambda", self.lam), ("mu", self.mu)):
            if not np.isfinite(value) or value <= 0:
                raise InvalidParameterError(f"{name} must be a positive finite rate, got {value!r}")

    @property
    def rho(self) -> float:
        return self.lam / self.mu


@dataclass(frozen=True, eq=False)
class RoundSchedule:
    """Times of one queue pass, all arrays indexed by node id.

    ``arrival_order`` lists node ids by arrival, ``completion_order`` by
    departure (ties broken by arrival position).
    """

    arrival: np.ndarray
    service_start: np.ndarray
    departure: np.ndarray
    service: np.ndarray
    arrival_order: np.ndarray
    completion_order: np.ndarray

    @property
    def n(self) -> int:
        return len(self.arrival)

    @property
    def wait(self) -> np.ndarray:
        return self.service_start - self.arrival

    @property
    def sojourn(self) -> np.ndarray:
        return self.departure - self.arrival

    @property
    def completion_rank(self) -> np.ndarray:
        rank = np.empty(self.n, dtype=np.int64)
        rank[self.completion_order] = np.arange(self.n)
        return rank


@dataclass(frozen=True)
class GameTrigger:
    game_index: int
    focal: int
    triggered_by: int
    kind: str


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def schedule_from_draws(arrival_order, arrival_times, service_times) -> RoundSchedule:
    """Run the FCFS recurrence on explicit draws.

    ``arrival_times`` and ``service_times`` are given in arrival order;
    ``arrival_order[q]`` is the node that arrives q-th.  Arrival times must
    be non-decreasing.
    """
    order = np.asarray(arrival_order, dtype=np.int64)
    a = np.asarray(arrival_times, dtype=float)
    s = np.asarray(service_times, dtype=float)
    n = len(order)
    if a.shape != (n,) or s.shape != (n,):
        raise InvalidInputError("arrival order, arrival times and service times must have equal length")
    if n and np.any(np.diff(a) < 0):
        raise InvalidInputError("arrival times must be non-decreasing in arrival order")
    if n and (np.any(s < 0) or np.any(a < 0)):
        raise InvalidInputError("times must be non-negative")
    if n and not np.array_equal(np.sort(order), np.arange(n)):
        raise InvalidInputError("arrival order must be a permutation of 0..n-1")
    return _fcfs(order, a, s)


def _fcfs(order: np.ndarray, a: np.ndarray, s: np.ndarray) -> RoundSchedule:
    n = len(order)

    # d[q] = max(a[q], d[q-1]) + s[q] unrolls to
    # d[q] = max_{p<=q}(a[p] + s[p] + ... + s[q]); start is then re-derived
    # with an explicit max so that W >= 0 holds exactly.
    cum = np.cumsum(s)
    closed = cum + np.maximum.accumulate(a - (cum - s))
    previous = np.concatenate(([0.0], closed[:-1]))
    start_q = np.maximum(a, previous)
    departure_q = start_q + s

    def by_node(values):
        out = np.empty(n, dtype=float)
        out[order] = values
        return _frozen(out)

    completion = order[np.argsort(departure_q, kind="stable")]
    return RoundSchedule(
        arrival=by_node(a),
        service_start=by_node(start_q),
        departure=by_node(departure_q),
        service=by_node(s),
        arrival_order=_frozen(order.copy()),
        completion_order=_frozen(completion),
    )


def draw_round_schedule(params: QueueParams, n: int, rng: np.random.Generator) -> RoundSchedule:
    if n < 1:
        raise InvalidParameterError(f"a round needs at least one player, got n={n}")
    order = rng.permutation(n)
    arrivals = np.cumsum(rng.exponential(1.0 / params.lam, size=n))
    services = rng.exponential(1.0 / params.mu, size=n)
    return _fcfs(order, arrivals, services)


def trigger_arrays(schedule: RoundSchedule, topology: NetworkTopology):
    """Vectorized trigger sequence.

    Returns ``(focal, triggered_by)`` arrays in firing order.  A group
    fires when its last member departs; at one completion the completing
    node's own game goes first, then neighbor games by ascending focal id.
    """
    n = topology.node_count
    if schedule.n != n:
        raise InvalidInputError(f"schedule covers {schedule.n} players but topology has {n} nodes")
    rank = schedule.completion_rank
    padded_rank = np.append(rank, -1)[topology.padded_neighbors]
    nbr_best = padded_rank.max(axis=1) if padded_rank.shape[1] else np.full(n, -1)
    fire_rank = np.maximum(rank, nbr_best)
    trigger = schedule.completion_order[fire_rank]
    focal = np.arange(n)
    is_self = trigger == focal
    order = np.lexsort((focal, ~is_self, fire_rank))
    return focal[order], trigger[order]


def trigger_sequence(schedule: RoundSchedule, topology: NetworkTopology) -> list[GameTrigger]:
    focal, by = trigger_arrays(schedule, topology)
    return [
        GameTrigger(
            game_index=g,
            focal=int(f),
            triggered_by=int(b),
            kind=SELF_CENTERED if f == b else NEIGHBOR_CENTERED,
        )
        for g, (f, b) in enumerate(zip(focal, by))
    ]


SCHEDULE_TRACE_HEADER = ("round", "node", "arrival", "service_start", "departure", "W", "S", "T")
TRIGGER_TRACE_HEADER = ("round", "game_index", "focal", "triggered_by", "kind")


def schedule_rows(round_index: int, schedule: RoundSchedule) -> Iterator[tuple]:
    wait, soj = schedule.wait, schedule.sojourn
    for node in range(schedule.n):
        yield (round_index, node, float(schedule.arrival[node]), float(schedule.service_start[node]),
               float(schedule.departure[node]), float(wait[node]), float(schedule.service[node]),
               float(soj[node]))


def trigger_rows(round_index: int, triggers: Iterable[GameTrigger]) -> Iterator[tuple]:
    for t in triggers:
        yield (round_index, t.game_index, t.focal, t.triggered_by, t.kind)


def idle_time(schedule: RoundSchedule) -> float:
    """Server idle time between the first arrival and the last departure."""
    span = float(schedule.departure.max() - schedule.arrival.min())
    return span - float(schedule.service.sum())


def lindley_waits(schedule: RoundSchedule) -> np.ndarray:
    """Waits in arrival order from the Lindley recurrence, for cross-checks."""
    order = schedule.arrival_order
    a = schedule.arrival[order]
    d = schedule.departure[order]
    w = np.zeros(len(order))
    if len(order) > 1:
        w[1:] = np.maximum(0.0, d[:-1] - a[1:])
    return w
