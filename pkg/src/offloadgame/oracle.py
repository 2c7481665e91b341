"""Brute-force equilibrium certificates.

Nothing here calls the analytic solvers.  Payoffs are written out again from
their definitions, the bounded followers' response comes from a plain
multiplier bisection, and the unbounded one from the aggregate form of the
followers' game: with total offload ``S = t C`` each AP plays
``max(0, S - e_i S^2 / C)``, where ``t`` solves ``sum_i max(0, 1 - e_i t) = 1``.
"""
from __future__ import annotations

import math

import numpy as np

from .model import ScenarioSpec

_BISECT_STEPS = 200


def _grid(center: float, hi: float, n: int, radius: float) -> np.ndarray:
    """Geometric points around ``center`` plus a uniform sweep of ``[0, hi]``."""
    pts = [np.linspace(0.0, hi, n)]
    if center > 0:
        pts.append(center * np.geomspace(1.0 / radius, radius, n))
        pts.append(center * (1.0 + np.geomspace(1e-9, 1e-2, 40) * np.array([[1.0], [-1.0]])).ravel())
    return np.unique(np.concatenate(pts).clip(min=0.0))


def _share_term(C, e, x, others):
    """One flow's contribution to an AP payoff when it offloads ``x``."""
    x = np.asarray(x, dtype=float)
    tot = x + others
    share = np.divide(x, tot, out=np.zeros_like(x), where=tot > 0)
    return C * share - e * x


def certify_follower_ne(s: ScenarioSpec, r, C, grid_points: int = 2000, radius: float = 4.0) -> float:
    """Largest payoff gain any single AP finds by deviating from ``r``.

    Each AP tries moving one flow's offload along a grid and, when capacity
    is bounded, shifting load between two flows.  Together these cover every
    edge direction of an AP's feasible set.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    r = np.asarray(r, dtype=float)
    C = np.asarray(C, dtype=float)
    e = np.array([flow.costs for flow in s.flows], dtype=float)
    F, R = r.shape
    B = s.capacity
    best = 0.0
    for i in range(R):
        others = r.sum(axis=1) - r[:, i]
        base = np.array([_share_term(C[f], e[f, i], r[f, i], others[f]) for f in range(F)])
        load = r[:, i].sum()
        for f in range(F):
            hi = max(radius * r[f].max(), C[f] / e[f, i])
            xs = _grid(r[f, i], hi, grid_points, radius)
            if B is not None:
                xs = xs[xs <= B - (load - r[f, i]) + 1e-12]
            if xs.size:
                gain = _share_term(C[f], e[f, i], xs, others[f]) - base[f]
                best = max(best, float(gain.max()))
            if B is None:
                continue
            for g in range(F):
                if g == f or r[g, i] <= 0:
                    continue
                d = _grid(0.0, r[g, i], grid_points, radius)[1:]
                gain = (
                    _share_term(C[f], e[f, i], r[f, i] + d, others[f]) - base[f]
                    + _share_term(C[g], e[g, i], r[g, i] - d, others[g]) - base[g]
                )
                best = max(best, float(gain.max()))
    return best


def _bounded_response(C: np.ndarray, e: np.ndarray, R: int, B: float) -> np.ndarray:
    """Symmetric per-AP offloads for a batch of price vectors (rows of ``C``)."""
    a = C * (R - 1) / R**2
    rho0 = a / e
    need = rho0.sum(axis=1) > B
    lo = np.zeros(len(C))
    hi = np.where(need, (a.sum(axis=1) / B) if B > 0 else np.inf, 0.0)
    hi = np.where(np.isfinite(hi), hi, 1e300)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        over = (a / (e + mid[:, None])).sum(axis=1) > B
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    lam = np.where(need, hi, 0.0)
    return a / (e + lam[:, None])


def _aggregate_ratio(costs: np.ndarray) -> float:
    lo, hi = 0.0, 1.0 / costs.min()
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if np.maximum(0.0, 1.0 - costs * mid).sum() > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def unbounded_response(s: ScenarioSpec, C) -> np.ndarray:
    """Followers' equilibrium offloads without capacity, via the aggregate form."""
    C = np.asarray(C, dtype=float)
    out = np.zeros((s.num_flows, s.num_aps))
    for f, flow in enumerate(s.flows):
        costs = np.asarray(flow.costs)
        t = _aggregate_ratio(costs)
        out[f] = np.maximum(0.0, C[f] * t * (1.0 - costs * t))
    return out


def _flow_value(u, x: np.ndarray) -> np.ndarray:
    return np.array([u.value(float(v)) for v in x])


def certify_leader_ne(s: ScenarioSpec, C, grid_points: int = 400, radius: float = 4.0) -> float:
    """Largest payoff gain any flow finds by changing its price alone.

    Followers re-equilibrate for every candidate price.  Bounded scenarios
    must have AP-independent costs per flow.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    C = np.asarray(C, dtype=float)
    R = s.num_aps
    best = 0.0
    if s.bounded:
        e = np.array([flow.costs[0] for flow in s.flows])
        B = s.capacity
        for f, flow in enumerate(s.flows):
            top = flow.utility.value(R * math.log1p(B))
            prices = np.concatenate([[C[f]], _grid(C[f], max(radius * C[f], top), grid_points, radius)])
            batch = np.repeat(C[None, :], len(prices), axis=0)
            batch[:, f] = prices
            rho = _bounded_response(batch, e, R, B)[:, f]
            payoff = _flow_value(flow.utility, R * np.log1p(rho)) - prices
            best = max(best, float(payoff[1:].max() - payoff[0]))
        return best
    for f, flow in enumerate(s.flows):
        costs = np.asarray(flow.costs)
        t = _aggregate_ratio(costs)
        share = np.maximum(0.0, t * (1.0 - costs * t))
        prices = np.concatenate([[C[f]], _grid(C[f], radius * max(C[f], 1.0), grid_points, radius)])
        gains = np.log1p(np.outer(prices, share)).sum(axis=1)
        payoff = _flow_value(flow.utility, gains) - prices
        best = max(best, float(payoff[1:].max() - payoff[0]))
    return best
