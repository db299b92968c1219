from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from misgossip import _kernel
from misgossip.core import NetworkParams, NetworkState, apply_source_delivery, apply_source_update
from misgossip.sim import (
    EventStream,
    Probe,
    SimConfig,
    _estimate,
    default_probes,
    iter_trajectory,
    make_streams,
    probe_instantaneous,
    run,
    simulate_replication,
)
from misgossip.solver import solve_all

BASE = NetworkParams(10, 1.0, 1.0, 1.0, 0.9)


def events(params, count, seed=0):
    stream = EventStream(params, make_streams(seed))
    t, out = 0.0, []
    for _ in range(count):
        ev = stream.next_event(t)
        t = ev.time
        out.append(ev)
    return out


def test_no_mutation_means_honest_gossip():
    evs = events(BASE.with_value("p", 0.0), 5000)
    gossip = [e for e in evs if e.kind == "gossip"]
    assert gossip and all(e.honest for e in gossip)


def test_single_node_never_gossips():
    evs = events(NetworkParams(1, 1.0, 1.0, 5.0, 0.5), 5000)
    assert {e.kind for e in evs} <= {"source_update", "source_delivery"}


def test_event_times_increase():
    evs = events(BASE, 2000)
    assert all(a.time < b.time for a, b in zip(evs, evs[1:]))
    gossip = [e for e in evs if e.kind == "gossip"]
    assert all(e.i != e.j for e in gossip)


def test_self_update_share_is_binomial():
    # 1/12 of events are source updates at the baseline: 1 + 1 + 10 * 1
    count = 1_000_000
    rng = np.random.default_rng(5)
    u = rng.random((count, 2))
    kinds = np.array([_kernel.pick_event(a, b, 10, 1.0, 1.0, 10.0, 12.0)[0] for a, b in u])
    share = np.mean(kinds == _kernel.SELF_UPDATE)
    sigma = math.sqrt((1 / 12) * (11 / 12) / count)
    assert abs(share - 1 / 12) < 3 * sigma
    assert abs(np.mean(kinds == _kernel.DELIVERY) - 1 / 12) < 3 * sigma


def test_compiled_kernel_follows_pure_merge_rule():
    for prm in (BASE, NetworkParams(4, 0.5, 2.0, 3.0, 0.3)):
        n_events = 4000
        *_, ages, truths = simulate_replication(SimConfig(prm, horizon=1e12, seed=3),
                                                max_events=n_events)
        traj = list(itertools.islice(iter_trajectory(prm, seed=3), n_events))
        assert ages == traj[-1][1].ages
        assert truths == traj[-1][1].truths


def test_hand_built_trajectory_time_average():
    # n = 2, rates 1/1/2: self-update at t=1, delivery to node 0 at t=3,
    # dishonest gossip 0 -> 1 at t=6, horizon 10
    n = 2
    ver = np.zeros(n, dtype=np.int64)
    truth = np.ones(n, dtype=np.int64)
    status = np.zeros(7, dtype=np.int64)
    status[_kernel.TRUTH_COUNT] = n
    acc = np.zeros((2, 3))
    code = _kernel.advance(
        ver, truth, status, np.zeros(1),
        np.array([1.0, 2.0, 3.0, 10.0]),
        np.array([0.1, 0.5, 0.3, 0.1, 0.9, 0.1, 0.5, 0.5]),
        np.array([0.05, 0.9]),
        n, 1.0, 1.0, 2.0, 0.5,
        np.zeros(0, dtype=np.int64), np.zeros((0, n), dtype=np.bool_),
        np.zeros((0, n), dtype=np.bool_), acc, 0.0, 5.0, 10.0, -1)
    assert code == _kernel.DONE
    assert status[_kernel.EVENTS] == 3
    assert truth.tolist() == [1, 0]
    assert _estimate(acc, 1)[0] == (1 * 1 + 1 * 2 + 1 * 3 + 0.5 * 4) / 10
    assert _estimate(acc, 2)[0] == (0 * 1 + 1 * 2 + 0 * 7) / 10


def test_probe_instantaneous():
    s = apply_source_delivery(NetworkState.from_lists([3, 3, 3], [0, 0, 0]), 1)
    probes = [Probe("c", (0, 1, 2)), Probe("t", (0,)), Probe("v", (0,)),
              Probe("t", (1,), (0,)), Probe("v", (0, 1))]
    assert probe_instantaneous(s, probes) == [1, 0, 3, 1, 0]
    fresh = NetworkState.initial(1)
    assert probe_instantaneous(fresh, [Probe("t", (0,)), Probe("v", (0,))]) == [1, 0]
    assert probe_instantaneous(apply_source_update(s), [Probe("c", (0, 1, 2))]) == [0]


def test_default_probes_cover_table():
    probes = default_probes(3)
    labels = [p.label for p in probes]
    assert labels[:6] == ["t[1,0]", "t[1,1]", "t[1,2]", "t[2,0]", "t[2,1]", "t[3,0]"]
    assert labels[6:] == ["c[1]", "c[2]", "c[3]", "v[1]", "v[2]", "v[3]"]


@pytest.mark.parametrize("kwargs", [
    dict(horizon=0.0), dict(burn_in_fraction=1.0), dict(replications=0),
    dict(probes=[Probe("t", (0,), (0,))]), dict(probes=[Probe("t", ())]),
    dict(probes=[Probe("v", (0,), (1,))]), dict(probes=[Probe("x", (0,))]),
    dict(probes=[Probe("c", (10,))]),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimConfig(BASE, **kwargs)


def test_without_mutation_everyone_keeps_the_truth():
    rep = run(SimConfig(BASE.with_value("p", 0.0), horizon=1e4, seed=7))
    assert rep.F_hat == 1.0 and rep.F_ci95 == 0.0


def test_single_node_age():
    rep = run(SimConfig(NetworkParams(1, 1.0, 1.0, 1.0, 0.5), horizon=5e5))
    assert rep.F_hat == 1.0
    assert abs(rep.x1_hat - 1.0) <= rep.x1_ci95


def test_baseline_truth_fraction_matches_solver():
    rep = run(SimConfig(BASE, horizon=5e5, seed=11))
    sol = solve_all(BASE)
    assert abs(rep.F_hat - sol.F) <= rep.F_ci95
    assert abs(rep.x1_hat - sol.x1) <= 3 * rep.x1_ci95


def test_fresh_truth_vector_at_baseline():
    probes = [Probe("c", tuple(range(k))) for k in range(1, 11)]
    rep = run(SimConfig(BASE, horizon=5e5, seed=12, probes=probes))
    c = solve_all(BASE).c
    for k, est in enumerate(rep.probes, start=1):
        assert abs(est.mean - c[k]) <= 3 * est.ci95, est.probe.label


def test_small_network_probes_match_solver():
    prm = NetworkParams(3, 1.0, 1.0, 1.0, 0.6)
    rep = run(SimConfig(prm, horizon=1e5, seed=4, probes=default_probes(3)))
    sol = solve_all(prm)
    for est in rep.probes:
        k, m = len(est.probe.A), len(est.probe.B)
        exact = {"t": sol.t[k, m], "c": sol.c[k], "v": sol.v[k]}[est.probe.kind]
        assert abs(est.mean - exact) <= max(3 * est.ci95, 1e-12), est.probe.label


def test_same_seed_same_report():
    cfg = SimConfig(BASE, horizon=2e4, seed=99, probes=default_probes(4)[:3])
    assert run(cfg) == run(cfg)
    assert run(cfg).to_json() == run(cfg).to_json()
    assert run(cfg).to_json() != run(SimConfig(BASE, horizon=2e4, seed=100,
                                               probes=cfg.probes)).to_json()


def test_replications_pool_and_parallel_runs_agree():
    cfg = SimConfig(BASE, horizon=5e3, seed=1, replications=3)
    serial = run(cfg)
    assert len(set(serial.age_digests)) == 3
    assert run(cfg, workers=2) == serial


def test_age_trajectory_ignores_mutation():
    reports = [run(SimConfig(BASE.with_value("p", p), horizon=5e4, seed=21)) for p in (0.0, 0.5, 1.0)]
    assert len({r.age_digests for r in reports}) == 1
    assert len({r.x1_hat for r in reports}) == 1
    trajs = [
        [s.ages for _, s in itertools.islice(iter_trajectory(BASE.with_value("p", p), seed=21), 3000)]
        for p in (0.0, 1.0)
    ]
    assert trajs[0] == trajs[1]


def test_trajectory_properties():
    prev = NetworkState.initial(5)
    prm = NetworkParams(5, 1.0, 1.0, 2.0, 0.7)
    absorbed = set()
    for event, state in itertools.islice(iter_trajectory(prm, seed=8), 5000):
        if event.kind == "source_update":
            assert state.ages == [a + 1 for a in prev.ages]
            absorbed.clear()
        else:
            assert all(a <= b for a, b in zip(state.ages, prev.ages))
        for j in absorbed:
            assert state.nodes[j] == prev.nodes[j]
        if event.kind == "source_delivery":
            absorbed.add(event.j)
        prev = state
