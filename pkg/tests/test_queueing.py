import heapq

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from queue_spgg.errors import InvalidInputError, InvalidParameterError
from queue_spgg.queueing import (NEIGHBOR_CENTERED, SELF_CENTERED, QueueParams, draw_round_schedule,
                                 idle_time, lindley_waits, schedule_from_draws, trigger_sequence)
from queue_spgg.seeding import generator
from queue_spgg.topology import NetworkTopology, groups, make_lattice, make_small_world


def event_simulation(arrivals, services):
    """Discrete-event FCFS oracle: returns per-customer (start, departure)."""
    events = [(t, 0, i) for i, t in enumerate(arrivals)]
    heapq.heapify(events)
    queue, busy_until, out = [], None, {}
    while events:
        t, kind, i = heapq.heappop(events)
        if kind == 0:
            queue.append(i)
        else:
            busy_until = None
        if busy_until is None and queue:
            j = queue.pop(0)
            start = max(t, arrivals[j])
            out[j] = (start, start + services[j])
            busy_until = start + services[j]
            heapq.heappush(events, (busy_until, -1, j))
    return [out[i] for i in range(len(arrivals))]


def test_single_player_served_immediately():
    sch = draw_round_schedule(QueueParams(2.0, 3.0), 1, generator(5))
    assert sch.wait[0] == 0.0
    assert sch.service_start[0] == sch.arrival[0]
    assert sch.sojourn[0] == pytest.approx(sch.service[0], rel=1e-14)


def test_forced_two_player_schedule():
    sch = schedule_from_draws([0, 1], [0.0, 0.5], [1.0, 1.0])
    assert sch.wait.tolist() == [0.0, 0.5]
    assert sch.sojourn.tolist() == [1.0, 1.5]
    assert sch.departure.tolist() == [1.0, 2.0]
    assert sch.completion_order.tolist() == [0, 1]


def test_arrival_order_maps_to_nodes():
    # node 2 arrives first, then 0, then 1
    sch = schedule_from_draws([2, 0, 1], [0.1, 0.2, 5.0], [1.0, 1.0, 1.0])
    assert sch.arrival.tolist() == [0.2, 5.0, 0.1]
    assert sch.service_start.tolist() == pytest.approx([1.1, 5.0, 0.1])
    assert sch.completion_order.tolist() == [2, 0, 1]


@given(st.lists(st.tuples(st.floats(0, 3), st.floats(0.001, 3)), min_size=1, max_size=60))
@settings(max_examples=200, deadline=None)
def test_recurrence_matches_event_simulation(draws):
    gaps, services = zip(*draws)
    arrivals = np.cumsum(gaps)
    sch = schedule_from_draws(np.arange(len(gaps)), arrivals, services)
    expected = event_simulation(list(arrivals), list(services))
    np.testing.assert_allclose(sch.service_start, [e[0] for e in expected], rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(sch.departure, [e[1] for e in expected], rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("lam,mu", [(2.0, 3.0), (2.0, 2.05), (3.0, 2.05)])
def test_schedule_invariants(lam, mu):
    sch = draw_round_schedule(QueueParams(lam, mu), 2500, generator(9))
    assert np.all(sch.wait >= 0)
    np.testing.assert_allclose(sch.sojourn, sch.wait + sch.service, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(sch.departure, sch.service_start + sch.service, rtol=0, atol=0)
    order = sch.arrival_order
    np.testing.assert_allclose(sch.wait[order], lindley_waits(sch), atol=1e-9)
    # service intervals in arrival order never overlap
    starts, ends = sch.service_start[order], sch.departure[order]
    assert np.all(starts[1:] >= ends[:-1] - 1e-9)
    assert idle_time(sch) >= -1e-9
    assert sorted(order.tolist()) == list(range(2500))
    assert np.all(np.diff(sch.departure[sch.completion_order]) >= 0)


def test_arrival_order_is_uniform_permutation():
    rng = generator(21)
    firsts = np.array([draw_round_schedule(QueueParams(2, 3), 4, rng).arrival_order[0] for _ in range(8000)])
    counts = np.bincount(firsts, minlength=4)
    assert stats.chisquare(counts).pvalue > 0.001


def test_schedule_is_deterministic_given_stream():
    a = draw_round_schedule(QueueParams(2, 3), 100, generator(4))
    b = draw_round_schedule(QueueParams(2, 3), 100, generator(4))
    assert np.array_equal(a.departure, b.departure)
    assert np.array_equal(a.arrival_order, b.arrival_order)


def test_service_times_ks_against_exponential():
    rng = generator(13)
    services = np.concatenate([draw_round_schedule(QueueParams(2, 3), 2500, rng).service for _ in range(40)])
    assert len(services) >= 100_000
    res = stats.kstest(services, "expon", args=(0, 1 / 3.0))
    assert res.pvalue > 0.01


def test_mean_sojourn_near_stationary_value():
    rng = generator(17)
    means = [draw_round_schedule(QueueParams(2, 3), 2500, rng).sojourn.mean() for _ in range(50)]
    assert abs(np.mean(means) - 1.0) < 0.1


@pytest.mark.parametrize("lam,mu", [(0, 1), (1, -1), (float("inf"), 1), (float("nan"), 1)])
def test_queue_params_reject_bad_rates(lam, mu):
    with pytest.raises(InvalidParameterError):
        QueueParams(lam, mu)


def test_schedule_from_draws_validates():
    with pytest.raises(InvalidInputError):
        schedule_from_draws([0, 1], [1.0, 0.5], [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        schedule_from_draws([0, 0], [0.0, 0.5], [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        schedule_from_draws([0, 1], [0.0], [1.0, 1.0])


# ------------------------------------------------------------- triggering

def literal_triggers(schedule, topology):
    """Step through completions one at a time, as the game description reads."""
    done = set()
    fired = set()
    out = []
    for v in schedule.completion_order.tolist():
        done.add(v)
        for focal in [v] + sorted(topology.neighbors(v)):
            if focal in fired:
                continue
            members = {focal, *topology.neighbors(focal)}
            if members <= done:
                fired.add(focal)
                out.append((focal, v))
    return out


def fixed_completion(order):
    n = len(order)
    return schedule_from_draws(order, np.arange(n, dtype=float), np.full(n, 1e-3))


def ten_node_tree():
    # A..J = 0..9; completing in order A..J mixes self and neighbor games
    edges = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 6), (2, 7), (3, 8), (3, 9)]
    adj = [set() for _ in range(10)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return NetworkTopology(adjacency=tuple(tuple(sorted(a)) for a in adj), kind="small_world")


def test_ten_node_tree_trigger_pattern():
    topo = ten_node_tree()
    trig = trigger_sequence(fixed_completion(np.arange(10)), topo)
    names = "ABCDEFGHIJ"
    self_games = {f"g{t.game_index + 1}" for t in trig if t.kind == SELF_CENTERED}
    nbr_games = {f"g{t.game_index + 1}" for t in trig if t.kind == NEIGHBOR_CENTERED}
    assert self_games == {"g2", "g3", "g5", "g6", "g8", "g9"}
    assert nbr_games == {"g1", "g4", "g7", "g10"}
    # the first game is A's group {A, B, C, D}, fired by D
    first = trig[0]
    assert names[first.focal] == "A" and names[first.triggered_by] == "D"
    assert set(groups(topo)[first.focal].members) == {0, 1, 2, 3}
    # A, B and C complete without firing anything
    assert not {t.triggered_by for t in trig} & {0, 1, 2}
    # completions that fire a self game and then a neighbor game
    pairs = [names[a.triggered_by] for a, b in zip(trig, trig[1:])
             if a.triggered_by == b.triggered_by]
    assert pairs == ["F", "H", "J"]


def test_two_node_path_last_completer_fires_both():
    topo = NetworkTopology(adjacency=((1,), (0,)), kind="small_world")
    trig = trigger_sequence(fixed_completion(np.array([0, 1])), topo)
    assert [(t.focal, t.triggered_by, t.kind) for t in trig] == [
        (1, 1, SELF_CENTERED), (0, 1, NEIGHBOR_CENTERED)]


@pytest.mark.parametrize("topo", [make_lattice(5), make_lattice(2), make_small_world(40, 4, 0.3, generator(2))])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_triggers_match_literal_walk(topo, seed):
    sch = draw_round_schedule(QueueParams(2, 2.5), topo.node_count, generator(seed))
    trig = trigger_sequence(sch, topo)
    assert [(t.focal, t.triggered_by) for t in trig] == literal_triggers(sch, topo)
    assert [t.game_index for t in trig] == list(range(topo.node_count))
    assert sorted(t.focal for t in trig) == list(range(topo.node_count))
    assert all((t.kind == SELF_CENTERED) == (t.focal == t.triggered_by) for t in trig)
    last = int(sch.completion_order[-1])
    assert any(t.focal == last and t.triggered_by == last for t in trig)
    assert trigger_sequence(sch, topo) == trig


def test_trigger_size_mismatch():
    sch = draw_round_schedule(QueueParams(2, 3), 5, generator(0))
    with pytest.raises(InvalidInputError):
        trigger_sequence(sch, make_lattice(3))
