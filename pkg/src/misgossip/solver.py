"""Stationary truth fraction and version age from the backward recursions.

Arrays are indexed by set size directly: ``c[k]`` and ``v[k]`` for
``k = 1..n`` (index 0 is NaN) and ``t[k, m]`` for ``k >= 1``, ``m >= 0``,
``k + m <= n`` (all other cells are NaN).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NetworkParams

_DRIFT = 1e-12


@dataclass(frozen=True)
class AnalyticalSolution:
    params: NetworkParams
    c: np.ndarray
    t: np.ndarray
    v: np.ndarray
    F: float
    x1: float
    age_diverges: bool = False

    def t_cells(self):
        """Valid ``(k, m)`` index pairs of the triangular table."""
        n = self.params.n
        return [(k, m) for k in range(1, n + 1) for m in range(0, n - k + 1)]

    def to_dict(self, tables: bool = False) -> dict:
        out = {
            "params": self.params.to_dict(),
            "F": self.F,
            "x1": None if self.age_diverges else self.x1,
            "age_diverges": self.age_diverges,
        }
        if tables:
            out["c"] = [float(x) for x in self.c[1:]]
            out["v"] = [None if math.isinf(x) else float(x) for x in self.v[1:]]
            out["t"] = [{"k": k, "m": m, "value": float(self.t[k, m])} for k, m in self.t_cells()]
        return out


def _check_unit(value: float, what: str) -> float:
    if not -_DRIFT <= value <= 1 + _DRIFT:
        raise AssertionError(f"{what}={value!r} left [0, 1]")
    return min(max(value, 0.0), 1.0)


def solve_c(params: NetworkParams) -> np.ndarray:
    """Probability that some node of a k-set holds the current truth."""
    n, ls, le = params.n, params.lambda_s, params.lambda_e
    pair = params.pair_rate
    c = np.full(n + 1, np.nan)
    if le + params.lambda_s == 0:
        # the indicator never moves from its all-fresh, all-truthful start
        c[1:] = 1.0
        return c
    c[n] = params.lambda_s / (le + params.lambda_s)
    for k in range(n - 1, 0, -1):
        spread = (1 - params.p) * k * (n - k) * pair
        num = k * ls / n + c[k + 1] * spread
        den = le + k * ls / n + spread
        c[k] = _check_unit(num / den, f"c[{k}]")
    return c


def solve_t(params: NetworkParams, c: np.ndarray, *, spread_power: int = 1) -> np.ndarray:
    """Fill the triangular table diagonal by diagonal, from ``t[n, 0]`` down to ``t[1, 0]``.

    ``spread_power`` is the exponent on the count of outside senders in the
    term feeding ``t[k, m+1]``. The balance equation has exponent 1; other
    values exist only to build a deliberately wrong negative control.
    """
    n, ls, p = params.n, params.lambda_s, params.p
    pair = params.pair_rate
    t = np.full((n + 2, n + 2), np.nan)

    def read(k: int, m: int) -> float:
        value = t[k, m]
        if math.isnan(value):
            raise AssertionError(f"t[{k},{m}] read before it was written")
        return value

    for r in range(n, 0, -1):
        for s in range(0, r):
            k, m = r - s, s
            outside = n - k - m
            num = k * ls / n
            den = (k + m) * ls / n + outside * (k + m) * pair + (1 - p) * k * m * pair
            if m:
                num += c[k] * m * ls / n
            coef = (1 - p) * outside * k * pair
            if coef:
                num += read(k + 1, m) * coef
            coef = (p * k + m) * outside ** spread_power * pair
            if coef:
                num += read(k, m + 1) * coef
            coef = (1 - p) * k * m * pair
            if coef:
                num += read(k + 1, m - 1) * coef
            if den > 0:
                t[k, m] = num / den
                if spread_power == 1:
                    t[k, m] = _check_unit(t[k, m], f"t[{k},{m}]")
            else:
                # frozen test function: keeps its value at the all-truthful start
                t[k, m] = 1.0
    return t[: n + 1, : n + 1]


def solve_v(params: NetworkParams) -> np.ndarray:
    """Expected smallest version age over a k-set.

    With no source deliveries the age grows without bound and every entry is
    ``inf``, unless the source never updates either, in which case ages stay 0.
    """
    n, ls, le = params.n, params.lambda_s, params.lambda_e
    pair = params.pair_rate
    v = np.full(n + 1, np.nan)
    if params.lambda_s == 0:
        v[1:] = 0.0 if le == 0 else math.inf
        return v
    nxt = 0.0
    for k in range(n, 0, -1):
        spread = k * (n - k) * pair
        v[k] = (le + (nxt * spread if spread else 0.0)) / (k * ls / n + spread)
        nxt = v[k]
    return v


def solve_all(params: NetworkParams, *, spread_power: int = 1) -> AnalyticalSolution:
    c = solve_c(params)
    t = solve_t(params, c, spread_power=spread_power)
    v = solve_v(params)
    return AnalyticalSolution(
        params=params,
        c=c,
        t=t,
        v=v,
        F=float(t[1, 0]),
        x1=float(v[1]),
        age_diverges=bool(math.isinf(v[1])),
    )
