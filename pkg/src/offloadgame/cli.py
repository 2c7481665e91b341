"""Command-line entry point: ``offloadgame {solve,dynamics,sweep,certify}``.

Exit codes: 0 success, 1 certificate rejected, 2 invalid config or
arguments, 3 dynamics did not converge.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import presets
from .bounded import (
    bounded_flows,
    default_starts,
    kkt_residuals,
    run_dynamics,
    solve_bounded_sne,
    solve_symmetric_followers,
)
from .oracle import certify_follower_ne, certify_leader_ne
from .scenarios import random_bounded, random_unbounded
from .unbounded import solve_unbounded_sne
from .welfare import (
    DegenerateEquilibrium,
    poa,
    price_of_anarchy,
    social_optimum_bounded,
    social_optimum_unbounded,
    system_utility_at_sne_bounded,
    system_utility_unbounded,
)

log = logging.getLogger("offloadgame")

EXIT_OK, EXIT_REJECTED, EXIT_CONFIG, EXIT_NOCONV = 0, 1, 2, 3
DEFAULT_CERT = {"follower_grid": 2000, "leader_grid": 400, "radius": 4.0, "tol": 1e-6}


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer, str)):
        return str(x)
    return f"{float(x):.12g}"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _dyn_settings(cfg, args):
    d = dict(cfg.get("dynamics", {}))
    for key, attr in (("schedule", "schedule"), ("rule", "rule"), ("tol", "tol"), ("max_iters", "max_iters")):
        val = getattr(args, attr, None)
        if val is not None:
            d[key] = val
    d.setdefault("schedule", "roundrobin")
    d.setdefault("rule", "best_response")
    d.setdefault("tol", 1e-8)
    d.setdefault("max_iters", 10_000)
    return d


def _resolve_start(spec, flows, R, B):
    if isinstance(spec, str):
        return default_starts(flows, R, B)[spec]
    return np.asarray(spec, dtype=float)


def _certificates(s, r, C, cert):
    fg = certify_follower_ne(s, r, C, cert["follower_grid"], cert["radius"])
    lg = certify_leader_ne(s, C, cert["leader_grid"], cert["radius"])
    return {
        "follower_max_gain": fg,
        "leader_max_gain": lg,
        "tol": cert["tol"],
        "grid_points": {"follower": cert["follower_grid"], "leader": cert["leader_grid"]},
        "radius": cert["radius"],
        "certified": bool(fg <= cert["tol"] and lg <= cert["tol"]),
    }


def solve_scenario(s, dyn: dict, cert: dict | None = None) -> dict:
    """Equilibrium report for one scenario as a JSON-ready dict (1-based labels)."""
    report = {"flows": list(range(1, s.num_flows + 1)), "aps": list(range(1, s.num_aps + 1))}
    if s.bounded:
        flows = bounded_flows(s)
        R, B = s.num_aps, s.capacity
        C0 = _resolve_start(dyn.get("initial_prices", "lower"), flows, R, B)
        trace = run_dynamics(flows, R, B, C0, dyn["schedule"], dyn["rule"], dyn["tol"], dyn["max_iters"])
        C = trace.final_prices
        eq = solve_symmetric_followers(flows, C, R, B)
        r = np.repeat(eq.rho[:, None], R, axis=1)
        report.update(
            regime="bounded",
            capacity=B,
            prices=C,
            rho=eq.rho,
            offloads=r,
            lam=eq.lam,
            nu=eq.nu,
            kkt_residuals=kkt_residuals(flows, C, R, B, eq),
            dynamics={
                "converged": trace.converged,
                "iterations": trace.iterations,
                "tol": dyn["tol"],
                "max_iters": dyn["max_iters"],
                "schedule": dyn["schedule"],
                "rule": dyn["rule"],
                "initial_prices": C0,
                "final_step": trace.deltas[-1],
            },
        )
    else:
        eq = solve_unbounded_sne(s)
        C, r = eq.prices, eq.offloads
        report.update(
            regime="unbounded",
            capacity="unbounded",
            prices=C,
            offloads=r,
            ap_sets=[[i + 1 for i in S] for S in eq.ap_sets],
            coefficients=eq.coefficients,
            solver={"bisection_rtol": 1e-10, "bisection_max_iters": 200},
        )
    try:
        w = poa(s, **({} if not s.bounded else {"tol": dyn["tol"], "max_iters": dyn["max_iters"]}))
        report["welfare"] = {"u_ne": w.u_ne, "u_opt": w.u_opt, "poa": w.poa, "optimum_profile": w.optimum_profile}
    except DegenerateEquilibrium as exc:
        report["welfare"] = {"error": str(exc)}
    if cert is not None:
        report["certificate"] = _certificates(s, r, C, cert)
    return _jsonable(report)


def _load_configs(args) -> list:
    if args.preset:
        return presets.get(args.preset)
    if not args.config:
        raise cfgmod.ConfigError("either --config or --preset is required")
    return [("config", cfgmod.load(args.config))]


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    label, cfg = _load_configs(args)[0]
    s = cfgmod.scenario_from_dict(cfg["scenario"])
    dyn = _dyn_settings(cfg, args)
    cert = None
    if args.certify or "certify" in cfg:
        cert = {**DEFAULT_CERT, **cfg.get("certify", {})}
    report = solve_scenario(s, dyn, cert)
    out = _out_dir(args)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    e = s.cost_matrix()
    rows = [
        (f + 1, i + 1, report["prices"][f], report["offloads"][f][i], e[f, i])
        for f in range(s.num_flows)
        for i in range(s.num_aps)
    ]
    _write_csv(out / "equilibrium.csv", ["flow", "ap", "price", "offload", "cost"], rows)
    print("prices:", " ".join(fmt(c) for c in report["prices"]))
    if "dynamics" in report and not report["dynamics"]["converged"]:
        log.error("dynamics did not converge within %d rounds", dyn["max_iters"])
        return EXIT_NOCONV
    if cert is not None and not report["certificate"]["certified"]:
        return EXIT_REJECTED
    return EXIT_OK


def cmd_dynamics(args) -> int:
    label, cfg = _load_configs(args)[0]
    s = cfgmod.scenario_from_dict(cfg["scenario"])
    if not s.bounded:
        raise cfgmod.ConfigError("dynamics need a bounded capacity", "scenario.capacity")
    flows = bounded_flows(s)
    R, B = s.num_aps, s.capacity
    dyn = _dyn_settings(cfg, args)
    starts = dyn.get("starts") or [dyn.get("initial_prices", "lower")]
    out = _out_dir(args)
    F = s.num_flows
    header = ["n"] + [f"C_{f}" for f in range(1, F + 1)] + [f"rho_{f}" for f in range(1, F + 1)] + ["delta"]
    summary = []
    status = EXIT_OK
    for k, start in enumerate(starts, 1):
        C0 = _resolve_start(start, flows, R, B)
        trace = run_dynamics(flows, R, B, C0, dyn["schedule"], dyn["rule"], dyn["tol"], dyn["max_iters"])
        _write_csv(out / f"dynamics_{k}.csv", header, ([n, *C, *rho, d] for n, C, rho, d in trace.rows()))
        summary.append(
            {
                "start": C0,
                "converged": trace.converged,
                "iterations": trace.iterations,
                "final_prices": trace.final_prices,
                "final_rho": trace.final_rho,
                "lam": trace.lam,
            }
        )
        print(f"start {k}: converged={trace.converged} iterations={trace.iterations} "
              f"C=({', '.join(fmt(c) for c in trace.final_prices)})")
        if not trace.converged:
            status = EXIT_NOCONV
    meta = {"tol": dyn["tol"], "max_iters": dyn["max_iters"], "schedule": dyn["schedule"], "rule": dyn["rule"]}
    (out / "dynamics.json").write_text(json.dumps(_jsonable({**meta, "runs": summary}), indent=2) + "\n")
    return status


def sweep_point(args):
    """Evaluate one sweep point; top-level so worker processes can pickle it."""
    label, axis, value, sc, dyn = args
    s = cfgmod.scenario_from_dict(sc)
    row = {"series": label, "axis": axis, "value": value, "num_flows": s.num_flows, "num_aps": s.num_aps}
    if s.bounded:
        flows = bounded_flows(s)
        R, B = s.num_aps, s.capacity
        trace, eq = solve_bounded_sne(flows, R, B, tol=dyn["tol"], max_iters=dyn["max_iters"])
        u_ne = system_utility_at_sne_bounded(flows, R, B, eq)
        u_opt = social_optimum_bounded(flows, R, B).value
        row.update(prices=trace.final_prices, offload=eq.rho, lam=eq.lam, converged=trace.converged)
    else:
        eq = solve_unbounded_sne(s)
        u_ne = system_utility_unbounded(s, eq.offloads)
        u_opt = social_optimum_unbounded(s).value
        row.update(prices=eq.prices, offload=eq.offloads.sum(axis=1), converged=True)
    row.update(u_ne=u_ne, u_opt=u_opt)
    try:
        row["poa"] = price_of_anarchy(u_opt, u_ne)
    except DegenerateEquilibrium:
        row["poa"] = None
    return row


def sweep_rows(series, dyn: dict, jobs: int = 1) -> list[dict]:
    tasks = []
    for label, cfg in series:
        sw = cfg["sweep"]
        for v in sw["values"]:
            tasks.append((label, sw["axis"], v, cfgmod.apply_sweep_value(cfg["scenario"], sw, v), dyn))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(sweep_point, tasks))
    return [sweep_point(t) for t in tasks]


def cmd_sweep(args) -> int:
    series = _load_configs(args)
    for _, cfg in series:
        if "sweep" not in cfg:
            raise cfgmod.ConfigError("config has no sweep block", "sweep")
    dyn = _dyn_settings(series[0][1], args)
    rows = sweep_rows(series, dyn, args.jobs)
    F = max(r["num_flows"] for r in rows)
    bounded = any("lam" in r for r in rows)
    offload_name = "rho" if bounded else "offload"
    header = ["series", "axis", "value", "num_flows", "num_aps", "u_ne", "u_opt", "poa"]
    header += [f"C_{f}" for f in range(1, F + 1)] + [f"{offload_name}_{f}" for f in range(1, F + 1)]
    header += (["lam"] if bounded else []) + ["converged"]

    def flat(r):
        pad = [None] * (F - r["num_flows"])
        out = [r["series"], r["axis"], r["value"], r["num_flows"], r["num_aps"],
               r.get("u_ne"), r.get("u_opt"), r.get("poa")]
        out += list(r["prices"]) + pad + list(r["offload"]) + pad
        if bounded:
            out.append(r.get("lam"))
        return out + [str(bool(r["converged"])).lower()]

    out = _out_dir(args)
    name = args.preset or "sweep"
    _write_csv(out / f"{name}.csv", header, (flat(r) for r in rows))
    print(f"wrote {len(rows)} rows to {out / (name + '.csv')}")
    return EXIT_NOCONV if not all(r["converged"] for r in rows) else EXIT_OK


def cmd_certify(args) -> int:
    cert = dict(DEFAULT_CERT)
    dyn = _dyn_settings({}, args)
    if args.random:
        rng = np.random.default_rng(args.seed)
        gen = random_bounded if args.kind == "bounded" else random_unbounded
        scenarios = [("random", gen(rng)) for _ in range(args.random)]
    else:
        label, cfg = _load_configs(args)[0]
        cert.update(cfg.get("certify", {}))
        dyn = _dyn_settings(cfg, args)
        scenarios = [(label, cfgmod.scenario_from_dict(cfg["scenario"]))]
    results = []
    for k, (label, s) in enumerate(scenarios, 1):
        rep = solve_scenario(s, dyn, cert)
        results.append({"index": k, "scenario": cfgmod.scenario_to_dict(s), "certificate": rep["certificate"]})
        c = rep["certificate"]
        print(f"scenario {k}: follower_gain={c['follower_max_gain']:.3e} "
              f"leader_gain={c['leader_max_gain']:.3e} certified={c['certified']}")
    out = _out_dir(args)
    (out / "certificates.json").write_text(json.dumps(_jsonable(results), indent=2) + "\n")
    return EXIT_OK if all(r["certificate"]["certified"] for r in results) else EXIT_REJECTED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offloadgame", description="Offloading market equilibrium solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--preset", choices=presets.PRESET_NAMES, help="built-in experiment configuration")
        sp.add_argument("--out", default="out", help="output directory (default: %(default)s)")
        sp.add_argument("--schedule", choices=["roundrobin", "jacobi"])
        sp.add_argument("--rule", choices=["best_response", "closed_form"])
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iters", type=int, dest="max_iters")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomised scenarios")

    sp = sub.add_parser("solve", help="compute the equilibrium of one scenario")
    common(sp)
    sp.add_argument("--certify", action="store_true", help="attach oracle deviation certificates")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("dynamics", help="write price dynamics traces")
    common(sp)
    sp.set_defaults(func=cmd_dynamics)

    sp = sub.add_parser("sweep", help="PoA and equilibrium quantities along a sweep axis")
    common(sp)
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("certify", help="check equilibria with the brute-force oracle")
    common(sp)
    sp.add_argument("--random", type=int, default=0, metavar="N", help="certify N random scenarios")
    sp.add_argument("--kind", choices=["bounded", "unbounded"], default="bounded")
    sp.set_defaults(func=cmd_certify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
