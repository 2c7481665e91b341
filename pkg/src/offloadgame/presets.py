"""Named experiment configurations (fig1a ... fig8).

``fig1a``/``fig1b`` are solve/dynamics configs; the others are sweeps made of
one or more labelled series.  The capacity for ``fig4`` and ``fig5`` and the
sweep grids are choices made here and are listed in the README.
"""
from __future__ import annotations

import copy

from .config import SCHEMA_VERSION


def _lin(w):
    return {"family": "linear", "weight": w}


def _grid(start, stop, step):
    n = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(n + 1)]


def _cfg(scenario, **blocks):
    out = {"schema_version": SCHEMA_VERSION, "scenario": scenario}
    out.update(blocks)
    return out


def _fig1(B):
    return _cfg(
        {
            "num_aps": 2,
            "capacity": B,
            "flows": [{"utility": _lin(1), "cost": 0.1}, {"utility": _lin(2), "cost": 0.3}],
        },
        dynamics={"starts": [[0.01, 0.01], [5, 0.01], [10, 10]], "tol": 1e-10},
    )


def fig2_config(e2=None):
    sc = {
        "num_aps": 2,
        "capacity": 2,
        "flows": [{"utility": _lin(2), "cost": 0.5}, {"utility": _lin(1), "cost": 0.2 if e2 is None else e2}],
    }
    return _cfg(sc, sweep={"axis": "cost", "flow": 2, "values": _grid(0.11, 1.0, 0.01)})


def _fig3():
    sc = {
        "num_aps": 2,
        "capacity": 1,
        "flows": [{"utility": _lin(1), "cost": 0.1}, {"utility": _lin(1), "cost": 0.3}],
    }
    return _cfg(sc, sweep={"axis": "weight", "flow": 2, "values": _grid(0.1, 4.0, 0.1)})


def _fig4():
    sc = {
        "num_aps": 2,
        "capacity": 10,
        "flows": [{"utility": _lin(2), "cost": 0.1}, {"utility": _lin(3), "cost": 0.2}],
    }
    return _cfg(sc, sweep={"axis": "num_aps", "values": list(range(2, 11))})


FIG5_FAMILIES = {
    "log": {"family": "log", "weight": 1},
    "power_b0.5": {"family": "power", "weight": 1, "exponent": 0.5},
    "power_b0.8": {"family": "power", "weight": 1, "exponent": 0.8},
    "linear": _lin(1),
}


def fig5_config(family: str, capacity=1):
    u = FIG5_FAMILIES[family]
    sc = {
        "num_aps": 3,
        "capacity": capacity,
        "flows": [{"utility": copy.deepcopy(u), "cost": c} for c in (0.1, 0.3, 0.2)],
    }
    return _cfg(sc, sweep={"axis": "num_aps", "values": list(range(2, 11))})


def _fig6(e2):
    sc = {
        "num_aps": 2,
        "capacity": "unbounded",
        "flows": [{"utility": _lin(1), "cost": 0.2}, {"utility": _lin(1), "cost": e2}],
    }
    return _cfg(sc, sweep={"axis": "weight", "flow": 2, "values": _grid(1.0, 5.0, 0.25)})


def _fig7(heterogeneous: bool):
    step = {"cost_step": 0.1} if heterogeneous else {}
    sc = {
        "num_aps": 2,
        "capacity": "unbounded",
        "flows": [
            {"utility": _lin(2), "cost": 0.1, **step},
            {"utility": _lin(3), "cost": 0.2, **step},
        ],
    }
    return _cfg(sc, sweep={"axis": "num_aps", "values": list(range(2, 11))})


def _fig8(heterogeneous: bool, max_flows=10):
    flows = []
    for f in range(max_flows):
        if heterogeneous:
            w, costs = 2 + f, [round(0.1 + 0.1 * f, 10), round(0.2 + 0.1 * f, 10)]
        else:
            w, costs = (2, [0.1, 0.2]) if f == 0 else (3, [0.3, 0.4])
        flows.append({"utility": _lin(w), "costs": costs})
    sc = {"num_aps": 2, "capacity": "unbounded", "flows": flows}
    return _cfg(sc, sweep={"axis": "num_flows", "values": list(range(1, max_flows + 1))})


def _build():
    return {
        "fig1a": [("B=7", _fig1(7))],
        "fig1b": [("B=1", _fig1(1))],
        "fig2": [("e1=0.5", fig2_config())],
        "fig3": [("w1=1", _fig3())],
        "fig4": [("homogeneous", _fig4())],
        "fig5": [(name, fig5_config(name)) for name in FIG5_FAMILIES],
        "fig6": [(f"e2={e2}", _fig6(e2)) for e2 in (0.2, 0.4, 0.6, 0.8)],
        "fig7": [("homogeneous", _fig7(False)), ("heterogeneous", _fig7(True))],
        "fig8": [("homogeneous", _fig8(False)), ("heterogeneous", _fig8(True))],
    }


PRESET_NAMES = tuple(_build())


def get(name: str) -> list:
    """Labelled config series for preset ``name`` (fresh copies)."""
    presets = _build()
    if name not in presets:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return presets[name]
