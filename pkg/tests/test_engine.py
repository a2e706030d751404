import dataclasses
import math

import numpy as np
import pytest

from circletag.circle_tag import leader_round_path
from circletag.deployment import Deployment, uniform_disk, worst_case_path
from circletag.engine import (LEADER, SimOptions, SimulationInvariantError, _Replay, check_invariants,
                              export_trace, read_tag_events, sample_trace, simulate)
from circletag.spanning_tree import build_mst


def leader_only_reference(target, dt=1e-4):
    """Step the leader along circle-then-East legs until it is within range."""
    R, t = 0.0, 0.0
    while True:
        path = leader_round_path((0, 0), R, 1.0)
        for s in np.arange(0.0, path.total_length, dt):
            x, y = path.point_at(s)
            if math.hypot(x - target[0], y - target[1]) <= 1.0:
                return t + s
        t += path.total_length
        R += 1.0


def test_leader_only():
    res = simulate(Deployment([[0, 0]]))
    assert res.makespan == 0.0
    assert res.rounds == ()


def test_initial_proximity():
    res = simulate(Deployment([[0, 0], [0.5, 0]]))
    assert res.makespan == 0.0
    assert res.taggers[1] == LEADER


def test_hand_trace():
    res = simulate(Deployment([[0, 0], [2.5, 0]]))
    assert res.makespan == pytest.approx(1.5 + 2 * math.pi, abs=1e-9)
    assert res.makespan == pytest.approx(leader_only_reference((2.5, 0)), abs=2e-4)


@pytest.mark.parametrize("target", [(0, 3.2), (-4.1, 0.7), (2.2, -2.9)])
def test_single_frozen_matches_stepper(target):
    res = simulate(Deployment([[0, 0], target]))
    assert res.makespan == pytest.approx(leader_only_reference(target), abs=2e-4)


def test_leader_offset_origin():
    res = simulate(Deployment([[10, -3], [12.5, -3]]))
    assert res.makespan == pytest.approx(1.5 + 2 * math.pi, abs=1e-9)


def test_range_scaling():
    a = simulate(Deployment([[0, 0], [5, 0]], comm_range_r=2.0))
    b = simulate(Deployment([[0, 0], [2.5, 0]]))
    assert a.makespan == b.makespan


def dense_tag_times(res, dt=2e-3):
    """Earliest sampled time each robot comes within range of a mover."""
    replay = _Replay(res)
    first = np.full(res.n, np.inf)
    first[0] = 0.0
    for j, rl in enumerate(res.rounds):
        for ts in np.arange(rl.start_time, rl.end_time + dt, dt):
            for mover in replay.path_of[j]:
                p = replay._on_path(j, mover, ts)
                d = np.hypot(res.positions[:, 0] - p[0], res.positions[:, 1] - p[1])
                hit = (d <= 1.0 + 1e-9) & np.isinf(first)
                first[hit] = ts
        if np.isfinite(first).all():
            break
    return first


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_tag_times_match_time_stepping(seed):
    res = simulate(uniform_disk(12, 6.0, seed))
    ref = dense_tag_times(res)
    tagged_at_zero = res.tag_times == 0
    assert np.all(ref[~tagged_at_zero] >= res.tag_times[~tagged_at_zero] - 1e-9)
    assert np.all(ref[~tagged_at_zero] <= res.tag_times[~tagged_at_zero] + 2e-3 + 1e-9)


def test_tagger_within_range_at_tag_time():
    res = simulate(uniform_disk(40, 8.0, 5))
    replay = _Replay(res)
    for i in range(1, res.n):
        pos, _ = replay.state(int(res.taggers[i]), float(res.tag_times[i]))
        if res.tag_times[i] > 0:
            assert math.dist(pos, res.positions[i]) <= 1 + 1e-9


def test_everyone_tagged_and_rounds_contiguous():
    for seed in range(5):
        res = simulate(uniform_disk(60, 10.0, seed))
        assert np.isfinite(res.tag_times).all()
        assert res.makespan == res.tag_times.max()
        for a, b in zip(res.rounds, res.rounds[1:]):
            assert b.start_time == a.end_time
            assert b.R_prev == a.R_next


def test_activation_rules():
    res = simulate(uniform_disk(80, 10.0, 21))
    for i in range(1, res.n):
        a = res.activation_rounds[i]
        if a >= 0:
            gap = 1 if res.taggers[i] == LEADER else 2
            assert a >= res.tag_rounds[i] + gap


def test_lower_bound():
    for seed in range(6):
        d = uniform_disk(30, 10.0, seed)
        M = build_mst(d).max_edge_M
        assert simulate(d).makespan >= M - 1 - 1e-9


def test_prop1_slack():
    res = simulate(uniform_disk(200, 10.0, 3))
    for rl in res.rounds:
        if rl.block_cover_time is not None:
            assert rl.prop1_slack(True) >= 0
            assert rl.prop1_slack(False) >= 0


def test_deterministic():
    d = uniform_disk(50, 10.0, 77)
    assert simulate(d).serialize() == simulate(d).serialize()


def test_check_invariants_catches_bad_result():
    res = simulate(uniform_disk(20, 6.0, 2))
    check_invariants(res)
    bad = dataclasses.replace(res, makespan=res.makespan + 1)
    with pytest.raises(SimulationInvariantError):
        check_invariants(bad)
    times = res.tag_times.copy()
    times[-1] = np.inf
    with pytest.raises(SimulationInvariantError):
        check_invariants(dataclasses.replace(res, tag_times=times))


def test_trace_rows():
    res = simulate(Deployment([[0, 0]]))
    rows = sample_trace(res, 1.0)
    assert {r[1] for r in rows} == {0}
    res = simulate(uniform_disk(15, 5.0, 4), SimOptions(trace_dt=0.5))
    assert res.trace is not None
    tags = read_tag_events(export_trace(res, 0.5))
    assert set(tags) == set(range(1, 15))
    for i, t in tags.items():
        assert t == res.tag_times[i]


def test_trace_roles():
    res = simulate(worst_case_path(3, 3.0))
    rows = sample_trace(res, 0.25)
    roles = {(r[1], r[4]) for r in rows}
    assert (0, "leader") in roles and (1, "frozen") in roles
    assert all(r[4] != "frozen" or r[0] < res.tag_times[r[1]] for r in rows if r[5] == "sample")


def test_offline_option():
    res = simulate(Deployment([[0, 0], [3, 0]]), SimOptions(offline_variant="exact"))
    assert res.offline_reference == pytest.approx(2.0)
    with pytest.raises(ValueError):
        SimOptions(offline_variant="magic")
    with pytest.raises(ValueError):
        SimOptions(trace_dt=0)
