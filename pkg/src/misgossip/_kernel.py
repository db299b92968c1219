"""Compiled inner loop of the event simulator.

Nodes store the source version they hold rather than their age, so a source
self-update is O(1): ``age = source_version - version``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

SELF_UPDATE = 0
DELIVERY = 1
GOSSIP = 2

PROBE_T = 0
PROBE_C = 1
PROBE_V = 2

# status slots
EVENTS = 0
SOURCE_VERSION = 1
TRUTH_COUNT = 2
I_DT = 3
I_KIND = 4
I_HON = 5
DIGEST = 6

DONE = 0
REFILL = 1
LIMIT = 2

_FNV_OFFSET = np.uint64(14695981039346656037)
_FNV_PRIME = np.uint64(1099511628211)


@njit(cache=True)
def _mix(h, x):
    return (h ^ np.uint64(x)) * _FNV_PRIME


@njit(cache=True)
def pick_event(u_kind, u_end, n, le, ls, lg, total):
    """Map two uniforms to ``(kind, i, j)``; ``i`` is -1 for source events."""
    x = u_kind * total
    if x < le:
        kind = SELF_UPDATE
    elif x < le + ls:
        kind = DELIVERY
    else:
        kind = GOSSIP
    if kind == GOSSIP and lg == 0.0:
        kind = DELIVERY if ls > 0.0 else SELF_UPDATE
    if kind == DELIVERY and ls == 0.0:
        kind = SELF_UPDATE
    if kind == SELF_UPDATE:
        return kind, -1, -1
    if kind == DELIVERY:
        j = int(u_end * n)
        if j >= n:
            j = n - 1
        return kind, -1, j
    pairs = n * (n - 1)
    idx = int(u_end * pairs)
    if idx >= pairs:
        idx = pairs - 1
    i = idx // (n - 1)
    r = idx % (n - 1)
    j = r if r < i else r + 1
    return kind, i, j


@njit(cache=True)
def _eval(ver, truth, vs, n, truth_count, probe_kind, probe_a, probe_b, vals):
    vals[1] = truth_count / n
    vals[2] = vs - ver[0]
    for q in range(probe_kind.shape[0]):
        best_a = -1
        tr = False
        best_b = -1
        for j in range(n):
            if probe_a[q, j]:
                if ver[j] > best_a:
                    best_a = ver[j]
                    tr = truth[j] != 0
                elif ver[j] == best_a and truth[j] != 0:
                    tr = True
            elif probe_b[q, j] and ver[j] > best_b:
                best_b = ver[j]
        kind = probe_kind[q]
        if kind == PROBE_T:
            vals[3 + q] = 1.0 if (tr and best_a >= best_b) else 0.0
        elif kind == PROBE_C:
            vals[3 + q] = 1.0 if (tr and best_a == vs) else 0.0
        else:
            vals[3 + q] = vs - best_a


@njit(cache=True)
def _accumulate(acc, vals, a, b, t0, blen, horizon):
    nb = acc.shape[0]
    if b <= t0:
        return
    if a < t0:
        a = t0
    while a < b:
        bi = int((a - t0) / blen)
        if bi > nb - 1:
            bi = nb - 1
        while bi < nb - 1 and t0 + (bi + 1) * blen <= a:
            bi += 1
        end = horizon if bi == nb - 1 else t0 + (bi + 1) * blen
        if end > b:
            end = b
        w = end - a
        for c in range(vals.shape[0]):
            acc[bi, c] += vals[c] * w
        a = end


@njit(cache=True)
def _locate(t, t0, blen, nb, horizon):
    """Batch index holding time ``t`` and that batch's end; ``-1`` during burn-in."""
    if t < t0:
        return -1, t0
    bi = int((t - t0) / blen)
    if bi > nb - 1:
        bi = nb - 1
    while bi < nb - 1 and t0 + (bi + 1) * blen <= t:
        bi += 1
    return bi, (horizon if bi == nb - 1 else t0 + (bi + 1) * blen)


@njit(cache=True)
def advance(ver, truth, status, clock, dts, kinds, hons, n, le, ls, lg, p,
            probe_kind, probe_a, probe_b, acc, t0, blen, horizon, max_events):
    """Step events until the horizon, a buffer runs dry, or ``max_events``.

    ``dts`` holds inter-arrival times, ``kinds`` two uniforms per event and
    ``hons`` one uniform per gossip event. Buffer positions live in
    ``status`` so the caller can refill and resume.
    """
    total = le + ls + lg
    vals = np.empty(3 + probe_kind.shape[0])
    vals[0] = 1.0
    vs = status[SOURCE_VERSION]
    tc = status[TRUTH_COUNT]
    events = status[EVENTS]
    i_dt = status[I_DT]
    i_kind = status[I_KIND]
    i_hon = status[I_HON]
    h = np.uint64(status[DIGEST])
    t = clock[0]
    _eval(ver, truth, vs, n, tc, probe_kind, probe_a, probe_b, vals)
    ncol = vals.shape[0]
    bi, bend = _locate(t, t0, blen, acc.shape[0], horizon)
    code = DONE
    while True:
        if max_events >= 0 and events >= max_events:
            code = LIMIT
            break
        if i_dt >= dts.shape[0] or i_kind + 2 > kinds.shape[0] or i_hon >= hons.shape[0]:
            code = REFILL
            break
        t_next = t + dts[i_dt]
        i_dt += 1
        if t_next >= horizon:
            _accumulate(acc, vals, t, horizon, t0, blen, horizon)
            t = horizon
            code = DONE
            break
        if bi >= 0 and t_next <= bend:
            w = t_next - t
            for c in range(ncol):
                acc[bi, c] += vals[c] * w
        else:
            _accumulate(acc, vals, t, t_next, t0, blen, horizon)
            bi, bend = _locate(t_next, t0, blen, acc.shape[0], horizon)
        t = t_next
        kind, i, j = pick_event(kinds[i_kind], kinds[i_kind + 1], n, le, ls, lg, total)
        i_kind += 2
        events += 1
        if kind == SELF_UPDATE:
            vs += 1
            h = _mix(h, 1)
        elif kind == DELIVERY:
            if truth[j] == 0:
                tc += 1
            ver[j] = vs
            truth[j] = 1
            h = _mix(_mix(_mix(h, 2), j), vs)
        else:
            honest = hons[i_hon] >= p
            i_hon += 1
            if ver[i] > ver[j]:
                ver[j] = ver[i]
                new_truth = truth[i] if honest else 0
                tc += new_truth - truth[j]
                truth[j] = new_truth
                h = _mix(_mix(_mix(h, 3), j), ver[j])
            else:
                if ver[i] == ver[j] and honest and truth[i] != 0 and truth[j] == 0:
                    truth[j] = 1
                    tc += 1
                h = _mix(h, 4)
        _eval(ver, truth, vs, n, tc, probe_kind, probe_a, probe_b, vals)
    status[SOURCE_VERSION] = vs
    status[TRUTH_COUNT] = tc
    status[EVENTS] = events
    status[I_DT] = i_dt
    status[I_KIND] = i_kind
    status[I_HON] = i_hon
    status[DIGEST] = np.int64(h)
    clock[0] = t
    return code
