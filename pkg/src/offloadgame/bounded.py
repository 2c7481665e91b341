"""Capacity-bounded regime with per-flow costs identical across APs.

Followers settle on a symmetric profile: every AP carries ``rho[f]`` of flow
``f``.  That profile is the unique solution of a separable concave program
coupled only through the per-AP capacity ``B``, solved here by water-filling on
the shared multiplier ``lam``.

Leaders adjust prices through :func:`run_dynamics`.  Two update rules are
available: ``"best_response"`` computes each flow's exact optimal price given
its rivals, and ``"closed_form"`` applies the closed-form update of
:func:`price_update`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .model import ScenarioSpec, UtilitySpec

ROOT_XTOL = 1e-15
ROOT_RTOL = 4 * np.finfo(float).eps
BRANCH_SLACK = 1e-9
LOWER_START = 1e-6


@dataclass(frozen=True)
class BoundedFlowSpec:
    utility: UtilitySpec
    cost: float

    def __post_init__(self):
        if not (self.cost > 0 and math.isfinite(self.cost)):
            raise ValueError(f"cost must be a positive finite number, got {self.cost}")


def bounded_flows(s: ScenarioSpec) -> list[BoundedFlowSpec]:
    """Collapse a scenario with AP-independent costs to per-flow specs."""
    out = []
    for f, flow in enumerate(s.flows):
        if not flow.symmetric:
            raise ValueError(
                f"flow {f + 1} has AP-dependent costs; the bounded solver needs identical costs per flow"
            )
        out.append(BoundedFlowSpec(flow.utility, flow.costs[0]))
    return out


@dataclass(frozen=True)
class SymmetricEquilibrium:
    """Symmetric followers' equilibrium with its KKT multipliers."""

    rho: np.ndarray
    lam: float
    nu: np.ndarray

    @property
    def total(self) -> float:
        return float(self.rho.sum())


def _k(R: int) -> float:
    return (R - 1) / R**2


def marginal_g(C: float, e: float, rho: float, R: int) -> float:
    """Marginal payoff ``C (R-1) / (R^2 rho) - e`` of one AP at a symmetric profile."""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    return C * _k(R) / rho - e


def _costs(flows) -> np.ndarray:
    return np.array([fl.cost for fl in flows], dtype=float)


def solve_symmetric_followers(flows: Sequence[BoundedFlowSpec], C, R: int, B: float) -> SymmetricEquilibrium:
    """Water-filling solution of the followers' program for prices ``C``.

    ``rho[f] = C[f] (R-1) / (R^2 (e[f] + lam))`` with ``lam = 0`` when capacity is
    slack, otherwise the unique ``lam > 0`` with ``sum(rho) = B``.  Flows paying
    nothing carry nothing and get ``nu = lam + e``.
    """
    C = np.asarray(C, dtype=float)
    e = _costs(flows)
    if C.shape != e.shape:
        raise ValueError(f"price vector has shape {C.shape}, expected {e.shape}")
    if np.any(C < 0):
        raise ValueError("prices must be nonnegative")
    if R < 2:
        raise ValueError("R must be >= 2")
    if B < 0:
        raise ValueError("capacity must be nonnegative")
    a = C * _k(R)
    active = a > 0
    if not active.any():
        return SymmetricEquilibrium(np.zeros_like(C), 0.0, e.copy())

    def excess(lam):
        return float(np.sum(a[active] / (e[active] + lam))) - B

    lam = 0.0
    if excess(0.0) > 0:
        hi = 1.0
        while excess(hi) > 0:
            hi *= 2.0
        lam = brentq(excess, 0.0, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    rho = np.where(active, a / (e + lam), 0.0)
    nu = np.where(active, 0.0, lam + e)
    return SymmetricEquilibrium(rho, float(lam), nu)


def kkt_residuals(flows, C, R: int, B: float, eq: SymmetricEquilibrium) -> dict:
    """Largest violation of stationarity, complementarity and feasibility."""
    C = np.asarray(C, dtype=float)
    e = _costs(flows)
    pos = eq.rho > 0
    stat = C[pos] * _k(R) / eq.rho[pos] - e[pos] - eq.lam + eq.nu[pos]
    return {
        "stationarity": float(np.max(np.abs(stat), initial=0.0)),
        "capacity_complementarity": abs(eq.lam * (eq.rho.sum() - B)),
        "flow_complementarity": float(np.max(np.abs(eq.nu * eq.rho), initial=0.0)),
        "primal_feasibility": max(0.0, float(eq.rho.sum() - B), float(-eq.rho.min())),
        "dual_feasibility": max(0.0, -eq.lam, float(-eq.nu.min())),
    }


def followers_objective(flows, C, R: int, rho) -> float:
    """Objective of the followers' potential program at ``rho`` (flows with ``C = 0`` skipped)."""
    C = np.asarray(C, dtype=float)
    rho = np.asarray(rho, dtype=float)
    e = _costs(flows)
    on = C > 0
    return float(np.sum(C[on] * _k(R) * np.log(np.maximum(rho[on], 1e-300)) - e[on] * rho[on]))


def psi_map(flows, R: int, B: float, f: int, Cf: float, C_others) -> float:
    """Equilibrium offload of flow ``f`` as a function of its own price."""
    return float(solve_symmetric_followers(flows, _with(C_others, f, Cf), R, B).rho[f])


def lambda_map(flows, R: int, B: float, f: int, Cf: float, C_others) -> float:
    """Capacity multiplier as a function of flow ``f``'s price."""
    return solve_symmetric_followers(flows, _with(C_others, f, Cf), R, B).lam


def _with(C, f, value):
    C = np.array(C, dtype=float)
    C[f] = value
    return C


def contractor_interior_rho(u: UtilitySpec, e: float, R: int) -> float:
    """Per-AP offload a flow targets when capacity is slack.

    Root of ``u'(R log(1+rho)) (R-1)/R = e (1+rho)``; 0 when no positive root.
    """
    def gap(r):
        return u.deriv(R * math.log1p(r)) * (R - 1) / R - e * (1.0 + r)

    if gap(0.0) <= 0:
        return 0.0
    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
    return brentq(gap, 0.0, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)


def upper_price_bound(flow: BoundedFlowSpec, R: int, B: float) -> float:
    """No rational flow pays more than the utility of a fully loaded AP set."""
    return flow.utility.value(R * math.log1p(B))


def price_update(flows, rho, R: int, B: float, f: int, slack: float = BRANCH_SLACK) -> float:
    """Closed-form price update from the current symmetric profile ``rho``.

    Slack capacity: ``u'(R log(1+rho_f)) R rho_f / (1 + rho_f)``.  Binding
    capacity: a shadow price is inferred from the followers' stationarity
    conditions and mapped back to a price.  A negative inferred shadow price is
    clamped to 0.  Flows with ``rho = 0`` are left out of the sums and a flow
    whose own ``rho`` is 0 stays at 0.
    """
    rho = np.asarray(rho, dtype=float)
    e = _costs(flows)
    u = flows[f].utility
    rf = rho[f]
    if rf <= 0:
        return 0.0
    x = R * math.log1p(rf)
    if rho.sum() < B - slack * B:
        return u.deriv(x) * R * rf / (1.0 + rf)
    on = rho > 0
    lam = (u.deriv(x) * (R - 1) / (R * rf * (1.0 + rf)) - np.sum(e[on] / rho[on])) / np.sum(1.0 / rho[on])
    lam = max(lam, 0.0)
    return max(rf * (lam + e[f]) / _k(R), 0.0)


def _bisect(fn, lo, hi, iters=200):
    """Sign bisection; tolerates infinite values of ``fn`` at the ends."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fn(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def best_response_price(flows, C, R: int, B: float, f: int) -> float:
    """Exact optimal price of flow ``f`` given rival prices, anticipating the followers.

    The search is parameterised by the shadow price ``lam``.  With ``lam``
    fixed, the rivals' offloads are pinned, so flow ``f`` gets whatever
    capacity is left, and its price follows from stationarity.  Three regimes
    arise: the interior target fits into leftover capacity, the flow buys
    exactly the leftover capacity at ``lam = 0``, or the optimum has ``lam > 0``
    where the derivative of the flow's payoff in ``lam`` vanishes.
    """
    C = np.asarray(C, dtype=float)
    e = _costs(flows)
    K = 1.0 / _k(R)
    u = flows[f].utility
    ef = e[f]
    rivals = [g for g in range(len(flows)) if g != f and C[g] > 0]
    a = C[rivals] * _k(R)
    eo = e[rivals]

    r_int = contractor_interior_rho(u, ef, R)
    if r_int <= 0:
        return 0.0
    r_kink = B - float(np.sum(a / eo))
    if r_int <= r_kink:
        return ef * r_int * K

    def rho_f(lam):
        return B - float(np.sum(a / (eo + lam)))

    def price(lam):
        return rho_f(lam) * (ef + lam) * K

    def dU(lam):
        r = rho_f(lam)
        dr = float(np.sum(a / (eo + lam) ** 2))
        dC = K * (dr * (ef + lam) + r)
        return u.deriv(R * math.log1p(max(r, 0.0))) * R / (1.0 + r) * dr - dC

    if r_kink > 0:
        lo = 0.0
    else:
        hi = 1.0
        while rho_f(hi) <= 0:
            hi *= 2.0
        lo = brentq(rho_f, 0.0, hi, xtol=ROOT_XTOL, rtol=ROOT_RTOL)
    if dU(lo) <= 0:
        return max(price(lo), 0.0)
    hi = max(1.0, 2.0 * lo)
    while dU(hi) > 0:
        hi *= 2.0
    return max(price(_bisect(dU, lo, hi)), 0.0)


@dataclass
class DynamicsTrace:
    """Price and offload history of a leader dynamics run.

    Row ``n`` of ``prices``/``rho`` is the state after ``n`` full rounds; row 0
    is the start.  ``deltas[n]`` is the sup-norm price change of round ``n``.
    """

    prices: np.ndarray
    rho: np.ndarray
    deltas: np.ndarray
    converged: bool
    iterations: int
    lam: float
    tol: float
    schedule: str
    rule: str

    @property
    def final_prices(self) -> np.ndarray:
        return self.prices[-1]

    @property
    def final_rho(self) -> np.ndarray:
        return self.rho[-1]

    def rows(self):
        for n in range(len(self.prices)):
            yield n, self.prices[n], self.rho[n], self.deltas[n]


SCHEDULES = ("roundrobin", "jacobi")
RULES = ("best_response", "closed_form")


def default_starts(flows, R: int, B: float) -> dict:
    """Canonical low and high starting price vectors."""
    return {
        "lower": np.full(len(flows), LOWER_START),
        "upper": np.array([upper_price_bound(fl, R, B) for fl in flows]),
    }


def run_dynamics(
    flows,
    R: int,
    B: float,
    C0,
    schedule: str = "roundrobin",
    rule: str = "best_response",
    tol: float = 1e-8,
    max_iters: int = 10_000,
) -> DynamicsTrace:
    """Iterate leader price updates against the followers' equilibrium.

    ``roundrobin`` updates flows one at a time in index order, each seeing its
    predecessors' new prices; ``jacobi`` updates all flows from the same state.
    Stops when a round moves no price by more than ``tol``.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    C = np.array(C0, dtype=float)
    if C.shape != (len(flows),) or np.any(C < 0) or not np.all(np.isfinite(C)):
        raise ValueError("initial prices must be finite, nonnegative, one per flow")

    def update(state, f):
        if rule == "best_response":
            return best_response_price(flows, state, R, B, f)
        rho = solve_symmetric_followers(flows, state, R, B).rho
        return price_update(flows, rho, R, B, f)

    prices = [C.copy()]
    rhos = [solve_symmetric_followers(flows, C, R, B).rho]
    deltas = [0.0]
    converged = False
    n = 0
    for n in range(1, max_iters + 1):
        old = C.copy()
        if schedule == "jacobi":
            C = np.array([update(old, f) for f in range(len(flows))])
        else:
            for f in range(len(flows)):
                C[f] = update(C, f)
        eq = solve_symmetric_followers(flows, C, R, B)
        delta = float(np.max(np.abs(C - old)))
        prices.append(C.copy())
        rhos.append(eq.rho)
        deltas.append(delta)
        if delta <= tol:
            converged = True
            break
    lam = solve_symmetric_followers(flows, C, R, B).lam
    return DynamicsTrace(
        np.array(prices), np.array(rhos), np.array(deltas), converged, n, lam, tol, schedule, rule
    )


def solve_bounded_sne(flows, R: int, B: float, C0=None, **kwargs) -> tuple[DynamicsTrace, SymmetricEquilibrium]:
    """Run dynamics from ``C0`` (default: the lower start) and return the limit."""
    if C0 is None:
        C0 = default_starts(flows, R, B)["lower"]
    trace = run_dynamics(flows, R, B, C0, **kwargs)
    return trace, solve_symmetric_followers(flows, trace.final_prices, R, B)
