"""Discrete-event Monte Carlo simulation of the gossip network.

All events are drawn from the superposition of the source, delivery and
gossip Poisson processes: one exponential gap per event, then a categorical
pick of the event type and endpoints. Three independent random streams feed
the gaps, the event picks and the honesty coins; the honesty stream is only
consumed by gossip events, so changing ``p`` never perturbs the ages.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from . import _kernel
from .core import (
    NetworkParams,
    NetworkState,
    apply_gossip,
    apply_source_delivery,
    apply_source_update,
    fresh_truth_indicator,
    measure_T_AB,
    min_age,
    truth_fraction,
)

DEFAULT_HORIZON = 5e5
DEFAULT_BURN_IN = 0.1
DEFAULT_BATCHES = 20
_BLOCK = 1 << 18

_KIND_NAMES = {
    _kernel.SELF_UPDATE: "source_update",
    _kernel.DELIVERY: "source_delivery",
    _kernel.GOSSIP: "gossip",
}
_PROBE_CODES = {"t": _kernel.PROBE_T, "c": _kernel.PROBE_C, "v": _kernel.PROBE_V}


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    i: int | None = None
    j: int | None = None
    honest: bool | None = None

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind, "i": self.i, "j": self.j,
                "honest": self.honest}


@dataclass(frozen=True)
class Probe:
    """A set-level quantity tracked over time.

    ``kind`` is ``"t"`` (pooled freshest-truth test over A and the mutated
    copies of B), ``"c"`` (some node of A holds the current truth) or ``"v"``
    (smallest age over A).
    """

    kind: str
    A: tuple[int, ...]
    B: tuple[int, ...] = ()

    @property
    def label(self) -> str:
        k, m = len(self.A), len(self.B)
        return f"t[{k},{m}]" if self.kind == "t" else f"{self.kind}[{k}]"

    def validate(self, n: int) -> None:
        if self.kind not in _PROBE_CODES:
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if not self.A:
            raise ValueError("probe set A must be nonempty")
        if self.kind != "t" and self.B:
            raise ValueError(f"{self.kind!r} probes take no B set")
        nodes = list(self.A) + list(self.B)
        if len(set(nodes)) != len(nodes):
            raise ValueError("probe sets must be disjoint and duplicate-free")
        if any(not 0 <= j < n for j in nodes):
            raise ValueError(f"probe node index out of range for n={n}")


def default_probes(n: int) -> list[Probe]:
    """Every ``t[k,m]``, ``c[k]`` and ``v[k]`` on the sets ``A={0..k-1}``, ``B={k..k+m-1}``."""
    probes = []
    for k in range(1, n + 1):
        A = tuple(range(k))
        for m in range(0, n - k + 1):
            probes.append(Probe("t", A, tuple(range(k, k + m))))
    probes += [Probe("c", tuple(range(k))) for k in range(1, n + 1)]
    probes += [Probe("v", tuple(range(k))) for k in range(1, n + 1)]
    return probes


@dataclass(frozen=True)
class SimConfig:
    params: NetworkParams
    horizon: float = DEFAULT_HORIZON
    burn_in_fraction: float = DEFAULT_BURN_IN
    seed: int = 0
    probes: tuple[Probe, ...] = ()
    replications: int = 1
    batches: int = DEFAULT_BATCHES

    def __post_init__(self) -> None:
        object.__setattr__(self, "probes", tuple(self.probes))
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be a positive finite number")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.batches < 2:
            raise ValueError("at least two batches are needed for a confidence interval")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        for probe in self.probes:
            probe.validate(self.params.n)


@dataclass(frozen=True)
class ProbeEstimate:
    probe: Probe
    mean: float
    ci95: float

    def to_dict(self) -> dict:
        return {"label": self.probe.label, "kind": self.probe.kind, "A": list(self.probe.A),
                "B": list(self.probe.B), "mean": self.mean, "ci95": self.ci95}


@dataclass(frozen=True)
class EstimateReport:
    params: NetworkParams
    F_hat: float
    F_ci95: float
    x1_hat: float
    x1_ci95: float
    event_count: int
    elapsed_sim_time: float
    burn_in_time: float
    seed: int
    replications: int
    probes: tuple[ProbeEstimate, ...] = ()
    age_digests: tuple[str, ...] = field(default=(), compare=True)

    def probe(self, label: str) -> ProbeEstimate:
        for est in self.probes:
            if est.probe.label == label:
                return est
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "F_hat": self.F_hat,
            "F_ci95": self.F_ci95,
            "x1_hat": self.x1_hat,
            "x1_ci95": self.x1_ci95,
            "event_count": self.event_count,
            "elapsed_sim_time": self.elapsed_sim_time,
            "burn_in_time": self.burn_in_time,
            "seed": self.seed,
            "replications": self.replications,
            "age_digests": list(self.age_digests),
            "probes": [p.to_dict() for p in self.probes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def make_streams(seed: int, replication: int = 0) -> tuple[np.random.Generator, ...]:
    """Independent generators for gaps, event picks and honesty coins."""
    root = np.random.SeedSequence(seed, spawn_key=(replication,))
    return tuple(np.random.Generator(np.random.PCG64(s)) for s in root.spawn(3))


class EventStream:
    """Python-level event source; draws exactly what the compiled kernel draws."""

    def __init__(self, params: NetworkParams, streams: Sequence[np.random.Generator]):
        if params.total_rate <= 0:
            raise ValueError("no events: every rate is zero")
        self.params = params
        self.gap_rng, self.pick_rng, self.honesty_rng = streams

    def next_event(self, current_time: float) -> Event:
        prm = self.params
        t = current_time + self.gap_rng.standard_exponential() / prm.total_rate
        u_kind, u_end = self.pick_rng.random(2)
        kind, i, j = _kernel.pick_event(u_kind, u_end, prm.n, prm.lambda_e, prm.lambda_s,
                                        prm.gossip_rate, prm.total_rate)
        if kind == _kernel.SELF_UPDATE:
            return Event(t, "source_update")
        if kind == _kernel.DELIVERY:
            return Event(t, "source_delivery", j=j)
        honest = bool(self.honesty_rng.random() >= prm.p)
        return Event(t, "gossip", i=i, j=j, honest=honest)


def next_event(streams: Sequence[np.random.Generator], params: NetworkParams,
               current_time: float) -> Event:
    return EventStream(params, streams).next_event(current_time)


def apply_event(state: NetworkState, event: Event) -> NetworkState:
    if event.kind == "source_update":
        return apply_source_update(state)
    if event.kind == "source_delivery":
        return apply_source_delivery(state, event.j)
    return apply_gossip(state, event.i, event.j, event.honest)


def iter_trajectory(params: NetworkParams, seed: int = 0, replication: int = 0,
                    horizon: float = math.inf) -> Iterator[tuple[Event, NetworkState]]:
    """Yield every event with the state right after it, using the pure merge rule.

    Slow, but an independent path through the same random streams as ``run``;
    used for trajectory logs and for checking the compiled kernel.
    """
    stream = EventStream(params, make_streams(seed, replication))
    state = NetworkState.initial(params.n)
    t = 0.0
    while True:
        event = stream.next_event(t)
        if event.time >= horizon:
            return
        t = event.time
        state = apply_event(state, event)
        yield event, state


def trajectory_record(event: Event, state: NetworkState) -> dict:
    rec = event.to_dict()
    rec["F"] = truth_fraction(state)
    rec["X1"] = state.nodes[0].version_age
    return rec


def probe_instantaneous(state: NetworkState, probes: Sequence[Probe]) -> list[int]:
    out = []
    for probe in probes:
        if probe.kind == "t":
            out.append(measure_T_AB(state, probe.A, probe.B))
        elif probe.kind == "c":
            out.append(fresh_truth_indicator(state, probe.A))
        else:
            out.append(int(min_age(state, probe.A)))
    return out


def _probe_arrays(n: int, probes: Sequence[Probe]):
    kinds = np.array([_PROBE_CODES[p.kind] for p in probes], dtype=np.int64)
    a = np.zeros((len(probes), n), dtype=np.bool_)
    b = np.zeros((len(probes), n), dtype=np.bool_)
    for q, probe in enumerate(probes):
        a[q, list(probe.A)] = True
        b[q, list(probe.B)] = True
    return kinds, a, b


def _refill(buf: np.ndarray, pos: int, fresh: np.ndarray) -> np.ndarray:
    return np.concatenate([buf[pos:], fresh])


def simulate_replication(config: SimConfig, replication: int = 0, max_events: int = -1):
    """Run one trajectory; returns ``(acc, events, digest, ages, truths)``.

    ``acc`` has one row per batch: measured time followed by the time
    integrals of F, X1 and each probe.
    """
    prm = config.params
    n = prm.n
    gap_rng, pick_rng, hon_rng = make_streams(config.seed, replication)
    kinds_p, probe_a, probe_b = _probe_arrays(n, config.probes)
    t0 = config.burn_in_fraction * config.horizon
    blen = (config.horizon - t0) / config.batches
    acc = np.zeros((config.batches, 3 + len(config.probes)))
    ver = np.zeros(n, dtype=np.int64)
    truth = np.ones(n, dtype=np.int64)
    status = np.zeros(7, dtype=np.int64)
    status[_kernel.TRUTH_COUNT] = n
    status[_kernel.DIGEST] = np.array([_kernel._FNV_OFFSET], dtype=np.uint64).view(np.int64)[0]
    clock = np.zeros(1)
    total = prm.total_rate
    empty = np.empty(0)
    dts, kinds, hons = empty, empty, empty
    while True:
        if status[_kernel.I_DT] >= len(dts):
            dts = _refill(dts, status[_kernel.I_DT], gap_rng.standard_exponential(_BLOCK) / total)
            status[_kernel.I_DT] = 0
        if status[_kernel.I_KIND] + 2 > len(kinds):
            kinds = _refill(kinds, status[_kernel.I_KIND], pick_rng.random(2 * _BLOCK))
            status[_kernel.I_KIND] = 0
        if status[_kernel.I_HON] >= len(hons):
            hons = _refill(hons, status[_kernel.I_HON], hon_rng.random(_BLOCK))
            status[_kernel.I_HON] = 0
        code = _kernel.advance(ver, truth, status, clock, dts, kinds, hons, n,
                               prm.lambda_e, prm.lambda_s, prm.gossip_rate, prm.p,
                               kinds_p, probe_a, probe_b, acc, t0, blen, config.horizon,
                               max_events)
        if code != _kernel.REFILL:
            break
    digest = format(int(np.array([status[_kernel.DIGEST]]).view(np.uint64)[0]), "016x")
    ages = (status[_kernel.SOURCE_VERSION] - ver).tolist()
    return acc, int(status[_kernel.EVENTS]), digest, ages, truth.tolist()


def _run_one(args):
    config, rep = args
    return simulate_replication(config, rep)


def _estimate(acc: np.ndarray, col: int) -> tuple[float, float]:
    """Time average and batch-means 95% half-width for one accumulated column."""
    mean = float(acc[:, col].sum() / acc[:, 0].sum())
    batch = acc[:, col] / acc[:, 0]
    nb = len(batch)
    if np.all(batch == batch[0]):
        return mean, 0.0
    half = stats.t.ppf(0.975, nb - 1) * batch.std(ddof=1) / math.sqrt(nb)
    return mean, float(half)


def run(config: SimConfig, workers: int = 1) -> EstimateReport:
    """Time-averaged estimates of F, x1 and the configured probes.

    Replications are pooled: each contributes its batches to one batch-means
    confidence interval.
    """
    if config.params.total_rate <= 0:
        raise ValueError("no events: every rate is zero")
    jobs = [(config, rep) for rep in range(config.replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    acc = np.concatenate([r[0] for r in results])
    F_hat, F_ci = _estimate(acc, 1)
    x1_hat, x1_ci = _estimate(acc, 2)
    probes = tuple(
        ProbeEstimate(probe, *_estimate(acc, 3 + q)) for q, probe in enumerate(config.probes)
    )
    return EstimateReport(
        params=config.params,
        F_hat=F_hat,
        F_ci95=F_ci,
        x1_hat=x1_hat,
        x1_ci95=x1_ci,
        event_count=sum(r[1] for r in results),
        elapsed_sim_time=config.horizon * config.replications,
        burn_in_time=config.burn_in_fraction * config.horizon,
        seed=config.seed,
        replications=config.replications,
        probes=probes,
        age_digests=tuple(r[2] for r in results),
    )
