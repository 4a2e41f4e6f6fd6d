"""Closed-form M/M/1/N queue results and their validators.

``stationary_distribution`` and friends evaluate the truncated-geometric
solution of the birth-death balance equations.  ``solve_balance_equations``
solves the same equations as a direct linear system, and
``empirical_queue_stats`` measures simulated rounds, so each closed form
can be checked against an independent route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .queueing import RoundSchedule

LATTICE_GROUP_SIZE = 5.0

# Bernoulli-number coefficients of h(z) = coth(z/2)/2 - 1/z = z/12 - z^3/720 + ...
_H_SERIES = (1 / 12, -1 / 720, 1 / 30240, -1 / 1209600, 1 / 47900160, -691 / 1307674368000,
             1 / 74724249600)
_H_SERIES_RADIUS = 0.5


def _check(lam: float, mu: float, capacity: int) -> float:
    if not (np.isfinite(lam) and lam > 0 and np.isfinite(mu) and mu > 0):
        raise InvalidParameterError(f"rates must be positive and finite, got lambda={lam!r}, mu={mu!r}")
    if isinstance(capacity, bool) or int(capacity) != capacity or capacity < 0:
        raise InvalidParameterError(f"capacity N must be a non-negative integer, got {capacity!r}")
    return lam / mu


def _log_rho(lam: float, mu: float) -> float:
    return math.log(lam) - math.log(mu)


def _h(z: float) -> float:
    if abs(z) < _H_SERIES_RADIUS:
        z2 = z * z
        acc = 0.0
        for coef in reversed(_H_SERIES):
            acc = acc * z2 + coef
        return acc * z
    if abs(z) > 700:
        return math.copysign(0.5, z) - 1.0 / z
    return 0.5 / math.tanh(0.5 * z) - 1.0 / z


def stationary_distribution(lam: float, mu: float, capacity: int) -> np.ndarray:
    """P_0..P_N of the M/M/1/N chain.

    Weights are rho^n relative to the largest state (P_0 for rho < 1, P_N
    for rho > 1), so nothing overflows; the normalizer is written with
    expm1 so it stays accurate as rho approaches 1.
    """
    _check(lam, mu, capacity)
    n = int(capacity)
    x = _log_rho(lam, mu)
    if x == 0.0:
        return np.full(n + 1, 1.0 / (n + 1))
    lb = -abs(x)
    p = np.exp(np.arange(n + 1) * lb) * (math.expm1(lb) / math.expm1((n + 1) * lb))
    return p if x < 0 else p[::-1].copy()


def mean_queue_length(lam: float, mu: float, capacity: int) -> float:
    """L = rho/(1-rho) - (N+1) rho^(N+1) / (1 - rho^(N+1)).

    With x = ln(rho) and h(z) = coth(z/2)/2 - 1/z this is exactly
    N/2 + (N+1) h((N+1) x) - h(x); the two poles at rho = 1 cancel
    analytically, so the form is accurate for every rho including 1.
    """
    _check(lam, mu, capacity)
    n = int(capacity)
    if n == 0:
        return 0.0
    x = _log_rho(lam, mu)
    L = n / 2.0 + (n + 1) * _h((n + 1) * x) - _h(x)
    return min(float(n), max(0.0, L))


def mean_sojourn(lam: float, mu: float, capacity: int) -> float:
    """Little's law: E(T) = L / lambda."""
    return mean_queue_length(lam, mu, capacity) / lam


def solve_balance_equations(lam: float, mu: float, capacity: int) -> np.ndarray:
    """Stationary vector from a direct solve of the balance equations.

    The redundant last balance row is replaced by the normalization
    constraint, giving a nonsingular dense system.
    """
    _check(lam, mu, capacity)
    n = int(capacity) + 1
    a = np.zeros((n, n))
    for k in range(n):
        if k > 0:
            a[k, k - 1] = lam
        if k < n - 1:
            a[k, k + 1] = mu
        a[k, k] = -((lam if k < n - 1 else 0.0) + (mu if k > 0 else 0.0))
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(a, b)


@dataclass(frozen=True)
class QueueAnalytics:
    lam: float
    mu: float
    capacity: int
    rho: float
    stationary: np.ndarray
    L: float
    ET: float


def analyze(lam: float, mu: float, capacity: int) -> QueueAnalytics:
    return QueueAnalytics(
        lam=lam, mu=mu, capacity=int(capacity), rho=lam / mu,
        stationary=stationary_distribution(lam, mu, capacity),
        L=mean_queue_length(lam, mu, capacity),
        ET=mean_sojourn(lam, mu, capacity),
    )


@dataclass(frozen=True)
class EnhancementForecast:
    r: float
    n_cooperators: int
    psi: float
    psi_limit: Optional[float]


def enhancement_limit(r: float, n_cooperators: int, lam: float, mu: float,
                      group_size: float = LATTICE_GROUP_SIZE) -> float:
    """Large-population limit of the total enhancement; needs rho < 1."""
    _check(lam, mu, 0)
    if lam >= mu:
        raise InvalidParameterError(f"the large-N limit needs lambda < mu, got lambda={lam}, mu={mu}")
    return group_size * r * n_cooperators / (mu - lam)


def total_enhancement(r: float, n_cooperators: int, lam: float, mu: float, capacity: int,
                      group_size: float = LATTICE_GROUP_SIZE) -> EnhancementForecast:
    """Expected network-wide enhancement ``group_size * r * N_c * E(T)``.

    ``group_size`` is 5 on the von Neumann lattice; use the mean of
    deg + 1 for other graphs.  ``psi_limit`` is None when lambda >= mu.
    """
    if r < 0 or n_cooperators < 0:
        raise InvalidParameterError("r and the cooperator count must be non-negative")
    psi = group_size * r * n_cooperators * mean_sojourn(lam, mu, capacity)
    limit = enhancement_limit(r, n_cooperators, lam, mu, group_size) if lam < mu else None
    return EnhancementForecast(r=r, n_cooperators=n_cooperators, psi=psi, psi_limit=limit)


@dataclass(frozen=True)
class EmpiricalQueueStats:
    rounds: int
    players: int
    mean_sojourn: float
    mean_wait: float
    mean_service: float
    time_avg_in_system: float
    throughput: float


def number_in_system_integral(schedule: RoundSchedule) -> tuple[float, float]:
    """Integral of the number-in-system step function, and the round's span.

    The span runs from the first arrival to the last departure.
    """
    times = np.concatenate((schedule.arrival, schedule.departure))
    jumps = np.concatenate((np.ones(schedule.n), -np.ones(schedule.n)))
    # departures sort before arrivals at equal times
    order = np.lexsort((jumps, times))
    times, jumps = times[order], jumps[order]
    level = np.cumsum(jumps)[:-1]
    area = float(np.sum(level * np.diff(times)))
    return area, float(times[-1] - times[0])


def empirical_queue_stats(schedules: Iterable[RoundSchedule]) -> EmpiricalQueueStats:
    schedules = list(schedules)
    if not schedules:
        raise InvalidInputError("need at least one schedule")
    soj, wait, serv = [], [], []
    area = span = 0.0
    for sch in schedules:
        soj.append(sch.sojourn)
        wait.append(sch.wait)
        serv.append(sch.service)
        a, s = number_in_system_integral(sch)
        area += a
        span += s
    soj = np.concatenate(soj)
    players = len(soj)
    return EmpiricalQueueStats(
        rounds=len(schedules),
        players=players,
        mean_sojourn=float(soj.mean()),
        mean_wait=float(np.concatenate(wait).mean()),
        mean_service=float(np.concatenate(serv).mean()),
        time_avg_in_system=area / span if span > 0 else 0.0,
        throughput=players / span if span > 0 else math.inf,
    )
