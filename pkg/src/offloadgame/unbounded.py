"""Closed-form equilibria when APs have no capacity limit.

Without a capacity bound the followers' game splits into one independent game
per flow.  Each flow's game has a unique equilibrium supported on a cost
threshold set of APs, and each flow's optimal payment is found by bisection on
a strictly decreasing marginal utility.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ScenarioSpec, UtilitySpec

BISECT_RTOL = 1e-10
BISECT_MAX_ITERS = 200
MAX_DOUBLINGS = 1024


def follower_best_response(C: float, e: float, others_total: float) -> float:
    """AP best response to a flow paying ``C`` when rivals offload ``others_total``.

    Returns 0 when rivals offload nothing; the payoff has no maximiser there.
    """
    if others_total <= 0 or e * others_total >= C:
        return 0.0
    return max(math.sqrt(C * others_total / e) - others_total, 0.0)


def _select(costs) -> list[int]:
    costs = np.asarray(costs, dtype=float)
    if costs.size < 2:
        raise ValueError("at least two APs are required")
    order = np.argsort(costs, kind="stable")
    chosen = [int(order[0]), int(order[1])]
    total = costs[order[0]] + costs[order[1]]
    for idx in order[2:]:
        if costs[idx] < total / (len(chosen) - 1):
            chosen.append(int(idx))
            total += costs[idx]
        else:
            break
    return sorted(chosen)


def select_ap_sets(s: ScenarioSpec) -> list[list[int]]:
    """Participating AP indices per flow (0-based, ascending).

    APs are visited in ascending cost order, ties by index; the two cheapest
    always participate and the next one joins while its cost is strictly below
    ``sum(costs of current set) / (size - 1)``.
    """
    if s.num_aps < 2:
        raise ValueError("at least two APs are required")
    return [_select(flow.costs) for flow in s.flows]


def coefficients(costs, ap_set) -> np.ndarray:
    """Per-AP slopes ``k_i`` so that the equilibrium offload is ``k_i * C``.

    Entries outside ``ap_set`` are 0.
    """
    costs = np.asarray(costs, dtype=float)
    k = np.zeros_like(costs)
    sel = np.asarray(ap_set, dtype=int)
    m = len(sel) - 1
    total = costs[sel].sum()
    k[sel] = (m / total) * (1.0 - m * costs[sel] / total)
    return k


@dataclass(frozen=True)
class UnboundedEquilibrium:
    ap_sets: list
    offloads: np.ndarray
    prices: np.ndarray
    coefficients: np.ndarray

    def support(self, f: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.offloads[f] > 0)]


def _coefficient_matrix(s: ScenarioSpec, ap_sets) -> np.ndarray:
    return np.array([coefficients(flow.costs, S) for flow, S in zip(s.flows, ap_sets)])


def follower_equilibrium(s: ScenarioSpec, C) -> UnboundedEquilibrium:
    """Followers' equilibrium for fixed payments ``C`` (offloads ``k_i * C^f``)."""
    C = np.asarray(C, dtype=float)
    if C.shape != (s.num_flows,):
        raise ValueError(f"price vector has shape {C.shape}, expected {(s.num_flows,)}")
    if np.any(C < 0):
        raise ValueError("prices must be nonnegative")
    sets = select_ap_sets(s)
    k = _coefficient_matrix(s, sets)
    return UnboundedEquilibrium(sets, k * C[:, None], C.copy(), k)


def _price_marginal(u: UtilitySpec, k: np.ndarray, C: float) -> float:
    # deriv() at 0 is the right-derivative (infinite for power laws)
    x = float(np.sum(np.log1p(k * C)))
    return u.deriv(x) * float(np.sum(k / (1.0 + k * C))) - 1.0


def optimal_price(u: UtilitySpec, k) -> float:
    """Maximiser over ``C >= 0`` of ``u(sum log(1 + k C)) - C`` for slopes ``k``."""
    k = np.asarray(k, dtype=float)
    k = k[k > 0]
    if k.size == 0 or _price_marginal(u, k, 0.0) <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(MAX_DOUBLINGS):
        if _price_marginal(u, k, hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("could not bracket the optimal price; utility may be unbounded")
    for _ in range(BISECT_MAX_ITERS):
        if hi - lo <= BISECT_RTOL * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if _price_marginal(u, k, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def leader_optimal_price(s: ScenarioSpec, f: int) -> float:
    """Unique optimal payment of flow ``f`` anticipating the followers' equilibrium."""
    flow = s.flows[f]
    k = coefficients(flow.costs, _select(flow.costs))
    return optimal_price(flow.utility, k)


def solve_unbounded_sne(s: ScenarioSpec) -> UnboundedEquilibrium:
    """Full Stackelberg equilibrium of an uncapacitated scenario."""
    if s.bounded:
        raise ValueError("scenario has a capacity bound; use the bounded solver")
    prices = np.array([leader_optimal_price(s, f) for f in range(s.num_flows)])
    return follower_equilibrium(s, prices)
