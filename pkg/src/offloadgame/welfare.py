"""System utility, social optima and price of anarchy.

Payments are transfers between flows and APs, so system utility depends only
on offloads: ``sum_f u_f(sum_i log(1 + r[f, i])) - sum_{f,i} e[f, i] r[f, i]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .bounded import bounded_flows, solve_bounded_sne
from .model import ScenarioSpec, UtilitySpec
from .unbounded import solve_unbounded_sne

ROOT_XTOL = 1e-15
ROOT_RTOL = 4 * np.finfo(float).eps


class DegenerateEquilibrium(ValueError):
    """System utility at the equilibrium is not positive, so PoA is undefined."""


@dataclass(frozen=True)
class SocialOptimum:
    value: float
    profile: np.ndarray
    multiplier: float = 0.0


@dataclass(frozen=True)
class WelfareReport:
    u_ne: float
    u_opt: float
    poa: float
    optimum_profile: np.ndarray
    ne_profile: Optional[np.ndarray] = None
    ne_prices: Optional[np.ndarray] = None

    @property
    def loss(self) -> float:
        """Fraction of optimal utility lost at equilibrium, ``1 - 1/PoA``."""
        return 1.0 - 1.0 / self.poa


def system_utility_at_sne_bounded(flows, R: int, B: float, eq, C=None) -> float:
    """System utility of a symmetric profile; prices cancel and are unused."""
    rho = np.asarray(eq.rho if hasattr(eq, "rho") else eq, dtype=float)
    total = 0.0
    for fl, r in zip(flows, rho):
        total += fl.utility.value(R * math.log1p(r)) - R * fl.cost * r
    return total


def system_utility_unbounded(s: ScenarioSpec, r) -> float:
    r = np.asarray(r, dtype=float)
    e = s.cost_matrix()
    value = sum(flow.utility.value(float(np.sum(np.log1p(r[f])))) for f, flow in enumerate(s.flows))
    return value - float(np.sum(e * r))


def system_utility_at_sne_unbounded(s: ScenarioSpec, eq=None) -> float:
    if eq is None:
        eq = solve_unbounded_sne(s)
    return system_utility_unbounded(s, eq.offloads)


def _grow(fn, start=1.0):
    hi = start
    while fn(hi) > 0:
        hi *= 2.0
    return hi


def _social_rho(u: UtilitySpec, e: float, R: int, mu: float) -> float:
    # stationarity u'(R log(1+rho)) / (1+rho) = e + mu/R
    target = e + mu / R

    def gap(r):
        return u.deriv(R * math.log1p(r)) / (1.0 + r) - target

    if gap(0.0) <= 0:
        return 0.0
    return brentq(gap, 0.0, _grow(gap), xtol=ROOT_XTOL, rtol=ROOT_RTOL)


def social_optimum_bounded(flows, R: int, B: float) -> SocialOptimum:
    """Maximise system utility over symmetric per-AP offloads with ``sum(rho) <= B``."""
    def total(mu):
        return sum(_social_rho(fl.utility, fl.cost, R, mu) for fl in flows) - B

    mu = 0.0
    if total(0.0) > 0:
        mu = brentq(total, 0.0, _grow(total), xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    rho = np.array([_social_rho(fl.utility, fl.cost, R, mu) for fl in flows])
    return SocialOptimum(system_utility_at_sne_bounded(flows, R, B, rho), rho, mu)


def _social_flow_unbounded(u: UtilitySpec, costs: np.ndarray) -> np.ndarray:
    # r_i = max(0, m / e_i - 1) where the common marginal m equals u'(total log-gain)
    def gain(m):
        return float(np.sum(np.log(np.maximum(m / costs, 1.0))))

    def gap(m):
        return u.deriv(gain(m)) - m

    lo = float(costs.min())
    if gap(lo) <= 0:
        return np.zeros_like(costs)
    m = brentq(gap, lo, _grow(gap, 2.0 * lo), xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    return np.maximum(m / costs - 1.0, 0.0)


def social_optimum_unbounded(s: ScenarioSpec) -> SocialOptimum:
    """Per-flow separable social optimum without capacity limits."""
    r = np.array([_social_flow_unbounded(flow.utility, np.asarray(flow.costs)) for flow in s.flows])
    return SocialOptimum(system_utility_unbounded(s, r), r)


def price_of_anarchy(u_opt: float, u_ne: float) -> float:
    if not u_ne > 0:
        raise DegenerateEquilibrium(f"system utility at equilibrium is {u_ne}; PoA undefined")
    return u_opt / u_ne


def poa(s: ScenarioSpec, **dynamics_kwargs) -> WelfareReport:
    """Equilibrium vs. optimum for a scenario.

    Bounded scenarios use the leader dynamics from the canonical lower start.
    """
    if s.bounded:
        flows = bounded_flows(s)
        trace, eq = solve_bounded_sne(flows, s.num_aps, s.capacity, **dynamics_kwargs)
        u_ne = system_utility_at_sne_bounded(flows, s.num_aps, s.capacity, eq)
        opt = social_optimum_bounded(flows, s.num_aps, s.capacity)
        ne_profile = np.repeat(eq.rho[:, None], s.num_aps, axis=1)
        opt_profile = np.repeat(opt.profile[:, None], s.num_aps, axis=1)
        prices = trace.final_prices
    else:
        eq = solve_unbounded_sne(s)
        u_ne = system_utility_unbounded(s, eq.offloads)
        opt = social_optimum_unbounded(s)
        ne_profile, opt_profile, prices = eq.offloads, opt.profile, eq.prices
    return WelfareReport(u_ne, opt.value, price_of_anarchy(opt.value, u_ne), opt_profile, ne_profile, prices)
