"""Public goods payoffs, classic and sojourn-weighted.

Strategy vectors are boolean arrays indexed by node id, ``True`` meaning
cooperate.  In the classic game each cooperator puts ``c`` into every group
it belongs to and the pool is ``r * c * (#cooperators)``; in the continuous
game a cooperator's contribution to the pool is weighted by its sojourn
time from the current round.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConsistencyError, InvalidParameterError
from .queueing import RoundSchedule
from .topology import GameGroup, NetworkTopology

CLASSIC = "classic"
CONTINUOUS = "continuous"


class Strategy(enum.Enum):
    C = "C"
    D = "D"


def cooperator_mask(strategies) -> np.ndarray:
    """Coerce a sequence of Strategy / 'C' / 'D' / bool (or a "CDDC" string) into a boolean array."""
    if isinstance(strategies, str):
        strategies = list(strategies)
    arr = np.asarray(strategies)
    if arr.dtype == bool:
        return arr
    out = np.empty(arr.shape, dtype=bool)
    for i, s in enumerate(arr.ravel()):
        if isinstance(s, Strategy):
            out.flat[i] = s is Strategy.C
        elif s in ("C", "D"):
            out.flat[i] = s == "C"
        else:
            out.flat[i] = bool(s)
    return out


@dataclass(frozen=True)
class GameParams:
    r: float
    c: float = 1.0
    mode: str = CONTINUOUS

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r <= 0:
            raise InvalidParameterError(f"enhancement factor r must be positive, got {self.r!r}")
        if not np.isfinite(self.c) or self.c <= 0:
            raise InvalidParameterError(f"contribution cost c must be positive, got {self.c!r}")
        if self.mode not in (CLASSIC, CONTINUOUS):
            raise InvalidParameterError(f"mode must be '{CLASSIC}' or '{CONTINUOUS}', got {self.mode!r}")


@dataclass(frozen=True, eq=False)
class PayoffLedger:
    """Per-player totals for one round.

    ``share[i]`` is what every member of focal-``i``'s group receives from
    the pool; it is only kept when ``accumulate_round`` is asked for the
    breakdown.
    """

    totals: np.ndarray
    share: Optional[np.ndarray] = None

    def group_payoffs(self, topology: NetworkTopology, strategies, params: GameParams, focal: int) -> np.ndarray:
        if self.share is None:
            raise ConsistencyError("per-group breakdown was not retained for this round")
        members = (focal, *topology.neighbors(focal))
        coop = cooperator_mask(strategies)[list(members)]
        return self.share[focal] - params.c * coop


def _member_payoffs(group: GameGroup, coop: np.ndarray, pooled: float, params: GameParams) -> np.ndarray:
    share = params.r * params.c * pooled / group.size
    return share - params.c * coop.astype(float)


def group_payoff_classic(group: GameGroup, strategies, params: GameParams) -> np.ndarray:
    """Payoff of each member of ``group`` (in member order)."""
    coop = cooperator_mask(strategies)[list(group.members)]
    return _member_payoffs(group, coop, float(coop.sum()), params)


def group_payoff_continuous(group: GameGroup, strategies, sojourns, params: GameParams) -> np.ndarray:
    """Like the classic payoff but each cooperator counts with its sojourn time."""
    members = list(group.members)
    sojourns = np.asarray(sojourns, dtype=float)
    if sojourns.ndim != 1 or max(members) >= len(sojourns):
        raise ConsistencyError(f"no sojourn time for some member of the group of node {group.focal}")
    t = sojourns[members]
    if not np.all(np.isfinite(t)):
        raise ConsistencyError(f"missing sojourn time in the group of node {group.focal}")
    coop = cooperator_mask(strategies)[members]
    return _member_payoffs(group, coop, float(t[coop].sum()), params)


def contributions(coop: np.ndarray, schedule: Optional[RoundSchedule], params: GameParams) -> np.ndarray:
    """What each node adds to every pool it sits in, before the ``r * c`` factor."""
    if params.mode == CLASSIC:
        return coop.astype(float)
    if schedule is None:
        raise ConsistencyError("continuous payoffs need the round's sojourn times")
    sojourn = schedule.sojourn
    if len(sojourn) != len(coop):
        raise ConsistencyError(f"schedule has {len(sojourn)} sojourn times for {len(coop)} players")
    return np.where(coop, sojourn, 0.0)


def accumulate_round(topology: NetworkTopology, strategies, schedule: Optional[RoundSchedule],
                     params: GameParams, keep_groups: bool = False) -> PayoffLedger:
    """Total payoff of every player over the deg+1 groups it belongs to."""
    coop = cooperator_mask(strategies)
    x = contributions(coop, schedule, params)
    nbrs = topology.padded_neighbors
    size = topology.group_sizes
    pool = x + np.append(x, 0.0)[nbrs].sum(axis=1)
    share = params.r * params.c * pool / size
    totals = share + np.append(share, 0.0)[nbrs].sum(axis=1) - params.c * size * coop
    return PayoffLedger(totals=totals, share=share if keep_groups else None)


def network_enhancement(topology: NetworkTopology, strategies, schedule: RoundSchedule, r: float) -> float:
    """Sum over all groups of r times the cooperators' sojourn times."""
    coop = cooperator_mask(strategies)
    x = np.where(coop, schedule.sojourn, 0.0)
    return float(r * (x * topology.group_sizes).sum())
