"""Domain types and raw payoffs for the offloading market.

Flows (leaders) post payments ``C[f]``; access points (followers) choose how
much of each flow to offload, ``r[f, i]``.  Indices are 0-based here; the CLI
and CSV writers translate to 1-based labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


class DomainError(ValueError):
    """Raised when a function is evaluated outside its domain."""


@dataclass(frozen=True)
class Linear:
    weight: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"weight must be > 0, got {self.weight}")

    def value(self, x: float) -> float:
        return self.weight * x

    def deriv(self, x: float) -> float:
        return self.weight

    def second_deriv(self, x: float) -> float:
        return 0.0


@dataclass(frozen=True)
class PowerLaw:
    """``w * x**b`` with ``0 < b < 1``; the derivative blows up at 0."""

    weight: float
    exponent: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"weight must be > 0, got {self.weight}")
        if not 0 < self.exponent < 1:
            raise ValueError(f"exponent must lie in (0, 1), got {self.exponent}")

    def value(self, x: float) -> float:
        return self.weight * x ** self.exponent

    def deriv(self, x: float) -> float:
        if x <= 0:
            return math.inf
        return self.weight * self.exponent * x ** (self.exponent - 1.0)

    def second_deriv(self, x: float) -> float:
        if x <= 0:
            return -math.inf
        b = self.exponent
        return self.weight * b * (b - 1.0) * x ** (b - 2.0)


@dataclass(frozen=True)
class Logarithmic:
    """``w * log(1 + x)``."""

    weight: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError(f"weight must be > 0, got {self.weight}")

    def value(self, x: float) -> float:
        return self.weight * math.log1p(x)

    def deriv(self, x: float) -> float:
        return self.weight / (1.0 + x)

    def second_deriv(self, x: float) -> float:
        return -self.weight / (1.0 + x) ** 2


UtilitySpec = Union[Linear, PowerLaw, Logarithmic]


def utility_value(u: UtilitySpec, x: float) -> float:
    if x < 0:
        raise DomainError(f"utility argument must be >= 0, got {x}")
    return u.value(x)


def utility_deriv(u: UtilitySpec, x: float) -> float:
    """First derivative ``u'(x)``; power-law utilities require ``x > 0``."""
    if x < 0 or (x == 0 and isinstance(u, PowerLaw)):
        raise DomainError(f"utility derivative undefined at x={x} for {u!r}")
    return u.deriv(x)


@dataclass(frozen=True)
class FlowSpec:
    utility: UtilitySpec
    costs: tuple

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        if not costs:
            raise ValueError("a flow needs at least one AP cost")
        for i, c in enumerate(costs):
            if not (c > 0 and math.isfinite(c)):
                raise ValueError(f"cost for AP {i + 1} must be a positive finite number, got {c}")
        object.__setattr__(self, "costs", costs)

    @property
    def symmetric(self) -> bool:
        return all(c == self.costs[0] for c in self.costs)


@dataclass(frozen=True)
class ScenarioSpec:
    """A full game instance.  ``capacity=None`` means APs are unbounded."""

    num_aps: int
    flows: tuple
    capacity: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))
        if int(self.num_aps) != self.num_aps or self.num_aps < 2:
            raise ValueError(f"num_aps must be an integer >= 2, got {self.num_aps}")
        if not self.flows:
            raise ValueError("at least one flow is required")
        for f, flow in enumerate(self.flows):
            if len(flow.costs) != self.num_aps:
                raise ValueError(
                    f"flow {f + 1} has {len(flow.costs)} costs, expected {self.num_aps}"
                )
        if self.capacity is not None and not (self.capacity >= 0 and math.isfinite(self.capacity)):
            raise ValueError(f"capacity must be a nonnegative finite number, got {self.capacity}")

    @property
    def num_flows(self) -> int:
        return len(self.flows)

    @property
    def bounded(self) -> bool:
        return self.capacity is not None

    def cost_matrix(self) -> np.ndarray:
        return np.array([flow.costs for flow in self.flows], dtype=float)


def _check_shapes(s: ScenarioSpec, r, C):
    r = np.asarray(r, dtype=float)
    C = np.asarray(C, dtype=float)
    if r.shape != (s.num_flows, s.num_aps):
        raise ValueError(f"offload matrix has shape {r.shape}, expected {(s.num_flows, s.num_aps)}")
    if C.shape != (s.num_flows,):
        raise ValueError(f"price vector has shape {C.shape}, expected {(s.num_flows,)}")
    return r, C


def flow_payoff(s: ScenarioSpec, f: int, r, C) -> float:
    """Net payoff of flow ``f``: ``u_f(sum_i log(1 + r[f, i])) - C[f]``."""
    r, C = _check_shapes(s, r, C)
    total = float(np.sum(np.log1p(r[f])))
    return utility_value(s.flows[f].utility, total) - C[f]


def ap_payoff(s: ScenarioSpec, i: int, r, C) -> float:
    """Payoff of AP ``i``: proportional share of each payment minus its offloading cost.

    A flow nobody offloads pays nobody, so its share term is 0.
    """
    r, C = _check_shapes(s, r, C)
    e = s.cost_matrix()
    totals = r.sum(axis=1)
    share = np.divide(r[:, i], totals, out=np.zeros_like(totals), where=totals > 0)
    return float(np.sum(C * share - e[:, i] * r[:, i]))
