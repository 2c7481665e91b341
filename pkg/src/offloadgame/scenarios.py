"""Randomised scenario generation for test matrices and the CLI ``--seed`` option."""
from __future__ import annotations

import numpy as np

from .model import FlowSpec, Linear, Logarithmic, PowerLaw, ScenarioSpec


def random_utility(rng: np.random.Generator, weight_range=(0.5, 3.0)):
    w = float(rng.uniform(*weight_range))
    kind = rng.integers(3)
    if kind == 0:
        return Linear(w)
    if kind == 1:
        return PowerLaw(w, float(rng.uniform(0.3, 0.9)))
    return Logarithmic(w)


def random_unbounded(rng: np.random.Generator, max_aps=4, max_flows=3, cost_range=(0.05, 2.0)) -> ScenarioSpec:
    R = int(rng.integers(2, max_aps + 1))
    F = int(rng.integers(1, max_flows + 1))
    flows = [FlowSpec(random_utility(rng), tuple(rng.uniform(*cost_range, R))) for _ in range(F)]
    return ScenarioSpec(R, flows)


def random_bounded(
    rng: np.random.Generator, max_aps=10, max_flows=5, cost_range=(0.05, 1.0), capacity_range=(0.5, 20.0)
) -> ScenarioSpec:
    R = int(rng.integers(2, max_aps + 1))
    F = int(rng.integers(1, max_flows + 1))
    flows = [FlowSpec(random_utility(rng), (float(rng.uniform(*cost_range)),) * R) for _ in range(F)]
    return ScenarioSpec(R, flows, float(rng.uniform(*capacity_range)))
