"""Monte Carlo dynamics: queue pass, games, reputation, imitation.

One step runs a full queue pass, plays every group game with the round's
sojourn times, updates reputations from the strategies just played, and
then lets every player compare payoffs with one model neighbor under the
Fermi rule.  All adoptions are applied at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError, InvalidParameterError, NoNeighborError
from .payoff import GameParams, PayoffLedger, Strategy, accumulate_round
from .queueing import QueueParams, RoundSchedule, draw_round_schedule, trigger_arrays
from .seeding import RunStreams
from .topology import NetworkTopology

REPUTATION_GAIN = 0.05


class PlayerState(NamedTuple):
    strategy: Strategy
    reputation: float
    payoff: float


@dataclass(frozen=True, eq=False)
class Population:
    """Struct-of-arrays population; ``strategy`` is True for cooperators."""

    strategy: np.ndarray
    reputation: np.ndarray
    payoff: np.ndarray

    @property
    def n(self) -> int:
        return len(self.strategy)

    @property
    def n_cooperators(self) -> int:
        return int(np.count_nonzero(self.strategy))

    @property
    def rho_c(self) -> float:
        return self.n_cooperators / self.n

    def player(self, i: int) -> PlayerState:
        return PlayerState(Strategy.C if self.strategy[i] else Strategy.D,
                           float(self.reputation[i]), float(self.payoff[i]))

    def players(self) -> list[PlayerState]:
        return [self.player(i) for i in range(self.n)]

    @classmethod
    def from_players(cls, players) -> "Population":
        return cls(
            strategy=np.array([p.strategy is Strategy.C for p in players], dtype=bool),
            reputation=np.array([p.reputation for p in players], dtype=float),
            payoff=np.array([p.payoff for p in players], dtype=float),
        )


@dataclass(frozen=True)
class EvolutionParams:
    kappa: float = 0.5
    p_r: float = 0.0
    max_steps: int = 10_000
    tail_window: int = 500

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise InvalidParameterError(f"noise kappa must be positive, got {self.kappa!r}")
        if not 0.0 <= self.p_r <= 1.0:
            raise InvalidParameterError(f"P_r must lie in [0, 1], got {self.p_r!r}")
        if self.max_steps < 0:
            raise InvalidParameterError(f"max_steps must be >= 0, got {self.max_steps!r}")
        if self.tail_window < 1:
            raise InvalidParameterError(f"tail_window must be >= 1, got {self.tail_window!r}")
        if self.max_steps and self.tail_window > self.max_steps:
            raise InvalidParameterError(
                f"tail_window ({self.tail_window}) cannot exceed max_steps ({self.max_steps})")


def init_population(n: int, rng: np.random.Generator) -> Population:
    if n < 1:
        raise InvalidParameterError(f"population size must be >= 1, got {n}")
    strategy = rng.random(n) < 0.5
    reputation = rng.random(n)
    return Population(strategy=strategy, reputation=reputation, payoff=np.zeros(n))


def update_reputation(reputation: float, strategy_used) -> float:
    if strategy_used in (Strategy.C, "C", True):
        return min(1.0, reputation + REPUTATION_GAIN)
    return reputation / 2.0


def update_reputations(reputation: np.ndarray, cooperated: np.ndarray) -> np.ndarray:
    return np.where(cooperated, np.minimum(1.0, reputation + REPUTATION_GAIN), reputation / 2.0)


def select_model_neighbor(node: int, topology: NetworkTopology, reputations, p_r: float,
                          rng: np.random.Generator) -> int:
    """Pick whose payoff ``node`` compares against.

    With probability ``p_r`` the highest-reputation neighbor (ties drawn
    uniformly), otherwise a uniform neighbor.
    """
    nbrs = topology.neighbors(node)
    if not nbrs:
        raise NoNeighborError(f"node {node} has no neighbors")
    if rng.random() < p_r:
        reps = np.asarray(reputations)[list(nbrs)]
        best = np.flatnonzero(reps == reps.max())
        return nbrs[int(best[rng.integers(len(best))])]
    return nbrs[int(rng.integers(len(nbrs)))]


def select_model_neighbors(topology: NetworkTopology, reputations: np.ndarray, p_r: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Vectorized ``select_model_neighbor`` for every node at once."""
    n = topology.node_count
    deg = topology.degrees
    if np.any(deg == 0):
        raise NoNeighborError(f"node {int(np.flatnonzero(deg == 0)[0])} has no neighbors")
    nbrs = topology.padded_neighbors
    col = np.minimum((rng.random(n) * deg).astype(np.int64), deg - 1)
    chosen = np.flatnonzero(rng.random(n) < p_r)
    if len(chosen):
        reps = np.append(reputations, -np.inf)[nbrs[chosen]]
        best = reps == reps.max(axis=1, keepdims=True)
        tie_keys = rng.random(reps.shape)
        col[chosen] = np.where(best, tie_keys, -1.0).argmax(axis=1)
    return nbrs[np.arange(n), col]


def fermi_adopt_probability(pi_i, pi_j, kappa: float):
    """Probability that a player with payoff ``pi_i`` copies one with ``pi_j``."""
    return expit((np.asarray(pi_j, dtype=float) - pi_i) / kappa)


@dataclass(frozen=True)
class StepStats:
    step: int
    rho_c: float
    n_c: int
    mean_payoff: float
    absorbed: bool


@dataclass(frozen=True, eq=False)
class StepOutcome:
    population: Population
    stats: StepStats
    schedule: RoundSchedule
    ledger: PayoffLedger
    triggers: Optional[tuple[np.ndarray, np.ndarray]] = None


def step(population: Population, topology: NetworkTopology, queue_params: QueueParams,
         game_params: GameParams, evo_params: EvolutionParams, rng: np.random.Generator,
         t: int = 0, record_triggers: bool = False) -> StepOutcome:
    n = topology.node_count
    if population.n != n:
        raise InvalidInputError(f"population has {population.n} players but topology has {n} nodes")
    strategy = population.strategy
    schedule = draw_round_schedule(queue_params, n, rng)
    triggers = trigger_arrays(schedule, topology) if record_triggers else None
    ledger = accumulate_round(topology, strategy, schedule, game_params)
    payoff = ledger.totals
    reputation = update_reputations(population.reputation, strategy)

    n_c = int(np.count_nonzero(strategy))
    absorbed = n_c == 0 or n_c == n
    if absorbed:
        new_strategy = strategy
    else:
        models = select_model_neighbors(topology, reputation, evo_params.p_r, rng)
        adopt = rng.random(n) < fermi_adopt_probability(payoff, payoff[models], evo_params.kappa)
        new_strategy = np.where(adopt, strategy[models], strategy)

    stats = StepStats(step=t, rho_c=n_c / n, n_c=n_c, mean_payoff=float(payoff.mean()), absorbed=absorbed)
    new_pop = Population(strategy=new_strategy, reputation=reputation, payoff=payoff)
    return StepOutcome(population=new_pop, stats=stats, schedule=schedule, ledger=ledger, triggers=triggers)


@dataclass(frozen=True)
class Capture:
    """Which per-step artifacts a run should keep."""

    snapshot_steps: tuple[int, ...] = ()
    payoff_steps: tuple[int, ...] = ()
    queue_steps: tuple[int, ...] = ()


@dataclass(eq=False)
class RunResult:
    summary_rho_c: float
    absorbed: bool
    exit_step: Optional[int]
    rho_c: np.ndarray
    n_c: np.ndarray
    mean_payoff: np.ndarray
    initial_rho_c: float
    final: Population
    snapshots: dict = field(default_factory=dict)
    payoffs: dict = field(default_factory=dict)
    schedules: dict = field(default_factory=dict)
    triggers: dict = field(default_factory=dict)

    @property
    def steps_run(self) -> int:
        return len(self.rho_c)


def run(topology: NetworkTopology, queue_params: QueueParams, game_params: GameParams,
        evo_params: EvolutionParams, streams: RunStreams, capture: Optional[Capture] = None) -> RunResult:
    """Iterate ``step`` until absorption or ``max_steps``.

    The summary is 0 or 1 exactly after absorption, the initial
    cooperation level when no step runs, and otherwise the mean over the
    last ``tail_window`` steps.
    """
    capture = capture or Capture()
    snap_steps = set(capture.snapshot_steps)
    pay_steps = set(capture.payoff_steps)
    queue_steps = set(capture.queue_steps)
    n = topology.node_count

    pop = init_population(n, streams.init())
    initial = pop.rho_c
    rho, n_c, mean_pay = [], [], []
    snapshots, payoffs, schedules, triggers = {}, {}, {}, {}
    absorbed, exit_step = False, None

    for t in range(evo_params.max_steps):
        if t in snap_steps:
            snapshots[t] = pop.strategy.copy()
        out = step(pop, topology, queue_params, game_params, evo_params, streams.round(t),
                   t=t, record_triggers=t in queue_steps)
        s = out.stats
        rho.append(s.rho_c)
        n_c.append(s.n_c)
        mean_pay.append(s.mean_payoff)
        if t in pay_steps:
            payoffs[t] = (pop.strategy.copy(), out.ledger.totals.copy())
        if t in queue_steps:
            schedules[t] = out.schedule
            triggers[t] = out.triggers
        pop = out.population
        if s.absorbed:
            absorbed, exit_step = True, t
            break

    # absorbing states never change, so later snapshots equal the final state
    for t in snap_steps:
        if t not in snapshots and (absorbed or t == evo_params.max_steps):
            snapshots[t] = pop.strategy.copy()

    if absorbed:
        summary = float(rho[-1])
    elif not rho:
        summary = initial
    else:
        summary = math.fsum(rho[-evo_params.tail_window:]) / len(rho[-evo_params.tail_window:])

    return RunResult(
        summary_rho_c=summary,
        absorbed=absorbed,
        exit_step=exit_step,
        rho_c=np.array(rho, dtype=float),
        n_c=np.array(n_c, dtype=np.int64),
        mean_payoff=np.array(mean_pay, dtype=float),
        initial_rho_c=initial,
        final=pop,
        snapshots=dict(sorted(snapshots.items())),
        payoffs=payoffs,
        schedules=schedules,
        triggers=triggers,
    )
