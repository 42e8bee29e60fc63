"""Command-line front end: equilibria, trace-boundary, simulate, check.

Every run writes its fully resolved configuration (``resolved.cfg``) next to
its outputs, so any artifact can be reproduced exactly with
``--config <outdir>/resolved.cfg``.  CSV files carry full-precision
scientific notation; identical configurations produce byte-identical files.

Exit codes: 0 success (including a clean extinction), 1 runtime failure,
2 invalid configuration, 3 check-suite failure.  ``TDE_PLANKTON_THREADS``
caps the worker pool used for independent batch items.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import checks, continuation, equilibria, simulate
from .config import RunConfig, build_config, dump_flat, parse_flat_text
from .continuation import BoundaryCurve, CurveEnd, TraceOptions
from .exceptions import (
    ConfigError,
    InfeasibleBiomassError,
    NoConvergeError,
    NoSignChangeError,
    NotExistError,
    ParamError,
    TdePlanktonError,
)
from .presets import preset_values

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_CHECKS = 3


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _thread_count() -> int:
    env = os.environ.get("TDE_PLANKTON_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as err:
            raise ConfigError(f"TDE_PLANKTON_THREADS must be an integer, got {env!r}") from err
        if n < 1:
            raise ConfigError("TDE_PLANKTON_THREADS must be at least 1")
        return n
    return min(4, os.cpu_count() or 1)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                _fmt(v) if isinstance(v, float) else str(v) for v in row
            ) + "\n")


def _echo_config(cfg: RunConfig, out_dir: Path) -> None:
    (out_dir / "resolved.cfg").write_text(dump_flat(cfg.resolved))


def _params_dict(params) -> dict:
    d = asdict(params)
    return {k: v for k, v in d.items()}


def cmd_equilibria(cfg: RunConfig, out_dir: Path) -> int:
    sweep = cfg.sweep
    if sweep.nt_points > 0:
        grid = np.logspace(
            math.log10(sweep.nt_min), math.log10(sweep.nt_max), sweep.nt_points
        )
    else:
        grid = np.array([])

    def one(m: float):
        params_m = replace(cfg.params, m=m)
        return m, equilibria.classify_and_sweep(params_m, grid)

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        results = list(pool.map(one, sweep.m_list))

    manifest = []
    for m, rows in results:
        name = f"sweep_m{m:g}_d0{cfg.params.delta0:g}.csv"
        _write_csv(
            out_dir / name,
            ["n_total", "kind", "n_star", "p_star", "z_star", "residual"],
            [[r.n_total, r.kind, r.n_star, r.p_star, r.z_star, r.residual] for r in rows],
        )
        manifest.append({"m": m, "delta0": cfg.params.delta0, "file": name, "rows": len(rows)})
    (out_dir / "manifest.json").write_text(
        json.dumps({"command": "equilibria", "outputs": manifest}, indent=2, sort_keys=True)
        + "\n"
    )
    _echo_config(cfg, out_dir)
    return EXIT_OK


def _auto_windows() -> list[tuple[float, float]]:
    edges = [0.02 * 2 ** k for k in range(11)]
    return list(zip(edges[:-1], edges[1:]))


def cmd_trace_boundary(cfg: RunConfig, out_dir: Path) -> int:
    params = cfg.params
    tr = cfg.trace
    ceiling = equilibria.m_ceiling(params)
    m_max = tr.m_max
    warnings: list[str] = []
    if m_max > ceiling:
        m_max = ceiling * (1 - 1e-9)
        if math.isfinite(ceiling):
            warnings.append(
                f"maturity range clipped to [0, {ceiling:.6g}) by the coexistence ceiling"
            )
    m_seeds = []
    for m in tr.m_seeds:
        if m >= ceiling:
            warnings.append(f"seed m={m:g} at or above the ceiling {ceiling:.6g}; dropped")
        else:
            m_seeds.append(m)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)

    if tr.omega_windows == "none":
        windows: list = [None]
    elif tr.omega_windows == "auto":
        windows = _auto_windows()
    else:
        windows = list(tr.omega_windows)

    seed_jobs = [(m, w) for m in m_seeds for w in windows]
    failures: list[dict] = []

    def seed_one(job):
        m, window = job
        try:
            nt2 = equilibria.compute_nt2(replace(params, m=m))
            lo = max(tr.nt_min, nt2 * 1.001)
            return continuation.find_start(
                params, m, (lo, tr.nt_max), omega_window=window, grid_n=tr.grid_n
            )
        except (NoSignChangeError, NoConvergeError, NotExistError, TdePlanktonError) as err:
            failures.append(
                {"m": m, "window": window, "error": type(err).__name__, "detail": str(err)}
            )
            return None

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        starts = [s for s in pool.map(seed_one, seed_jobs) if s is not None]

    unique_starts = []
    seen = set()
    for s in sorted(starts, key=lambda b: (b.m, b.n_total, b.omega)):
        key = (round(s.m, 9), round(math.log10(s.n_total), 9), round(s.omega, 9))
        if key not in seen:
            seen.add(key)
            unique_starts.append(s)

    opts_common = dict(
        h_init=tr.h_init, h_min=tr.h_min, h_max=tr.h_max,
        corrector_tol=tr.corrector_tol, max_steps=tr.max_steps,
        nt_min=tr.nt_min, nt_max=tr.nt_max, m_min=tr.m_min, m_max=m_max,
    )

    def trace_one(start):
        fwd = continuation.trace_curve(start, params, TraceOptions(orientation=1, **opts_common))
        bwd = continuation.trace_curve(start, params, TraceOptions(orientation=-1, **opts_common))
        pts = list(reversed(bwd.points))[:-1] + fwd.points
        return BoundaryCurve(points=pts, termination=fwd.termination), bwd.termination

    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        traced = list(pool.map(trace_one, unique_starts))

    merged = [c for c, _ in traced]
    back_terms = {id(c): b for (c, b) in traced}
    kept = continuation.deduplicate_curves(merged, params, tol=tr.dedupe_tol)

    m_scale = continuation._m_scale(params)
    curve_rows, freq_rows, curve_meta = [], [], []
    for cid, curve in enumerate(kept):
        for idx, p in enumerate(curve.points):
            res = float(np.max(np.abs(continuation._scaled_residual(
                continuation._pack(p.as_array(), m_scale), params, m_scale
            ))))
            curve_rows.append(
                [cid, idx, p.m, p.n_total, p.omega, p.n_star, p.p_star, p.z_star, res]
            )
            freq_rows.append([cid, p.m, p.n_total, p.omega])
        curve_meta.append({
            "curve_id": cid,
            "points": len(curve.points),
            "termination_forward": curve.termination.value,
            "termination_backward": back_terms.get(id(curve), CurveEnd.DOMAIN_BOUND).value,
        })

    _write_csv(
        out_dir / "curves.csv",
        ["curve_id", "point_index", "m", "n_total", "omega",
         "n_star", "p_star", "z_star", "residual"],
        curve_rows,
    )
    _write_csv(
        out_dir / "frequency_profile.csv",
        ["curve_id", "m", "n_total", "omega"],
        freq_rows,
    )
    (out_dir / "metadata.json").write_text(
        json.dumps(
            {
                "command": "trace-boundary",
                "curves": curve_meta,
                "seed_failures": sorted(failures, key=lambda f: (f["m"], str(f["window"]))),
                "warnings": warnings,
            },
            indent=2, sort_keys=True,
        )
        + "\n"
    )
    _echo_config(cfg, out_dir)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> int:
    params = equilibria.resolve_r_star(cfg.params)
    sim_cfg = cfg.sim
    if params.m > 0:
        big_t = params.m / params.r_star
        dt_hat = sim_cfg.dt_hat if sim_cfg.dt_hat else big_t / sim_cfg.dt_panels
    else:
        dt_hat = sim_cfg.dt_hat if sim_cfg.dt_hat else 0.01

    if sim_cfg.history == "equilibrium":
        spec = simulate.HistorySpec.at_equilibrium(
            sim_cfg.eps_p, sim_cfg.eps_z, n0_offset=sim_cfg.n0_offset
        )
    else:
        if sim_cfg.p0 is None or sim_cfg.z0 is None:
            raise ConfigError("run.history = constant requires run.p0 and run.z0")
        spec = simulate.HistorySpec.constant(
            sim_cfg.p0, sim_cfg.z0, n0_offset=sim_cfg.n0_offset
        )

    buf = simulate.build_initial(spec, params, dt_hat)
    traj = simulate.integrate(buf, params, sim_cfg.horizon_hat)
    traj = simulate.to_physical_time(traj, params)
    freq = simulate.measure_frequency(traj)

    rows = [
        [float(traj.t_hat[i]), float(traj.t[i]), float(traj.n[i]), float(traj.p[i]),
         float(traj.z[i]), float(traj.tau_m[i]), float(traj.cons_residual[i])]
        for i in range(len(traj))
    ]
    _write_csv(
        out_dir / "trajectory.csv",
        ["t_hat", "t", "n", "p", "z", "tau_m", "cons_residual"],
        rows,
    )

    rho_files = []
    for t_req in sim_cfg.rho_times:
        s_grid = np.linspace(0.0, params.m, sim_cfg.rho_s_panels + 1)
        rho = simulate.reconstruct_rho(traj, t_req, s_grid, params)
        name = f"rho_t{t_req:g}.csv"
        _write_csv(out_dir / name, ["s", "rho"],
                   [[float(s), float(r)] for s, r in zip(s_grid, rho)])
        rho_files.append(name)

    (out_dir / "metadata.json").write_text(
        json.dumps(
            {
                "command": "simulate",
                "params": _params_dict(params),
                "history_spec": asdict(spec),
                "dt_hat": dt_hat,
                "termination": traj.termination.value,
                "fitted_frequency": freq,
                "rho_files": rho_files,
                "rows": len(traj),
            },
            indent=2, sort_keys=True,
        )
        + "\n"
    )
    _echo_config(cfg, out_dir)
    if traj.termination is simulate.Termination.SINGULAR_RATE:
        print("run terminated: growth rate hit the singular floor", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_check(cfg: RunConfig, out_dir: Path) -> int:
    results = checks.run_check_suite(cfg.params)
    lines = []
    for r in results:
        line = json.dumps(
            {"check": r.name, "status": r.status, "detail": r.detail}, sort_keys=True
        )
        print(line)
        lines.append(line)
    (out_dir / "report.jsonl").write_text("\n".join(lines) + "\n")
    _echo_config(cfg, out_dir)
    failed = [r for r in results if r.status == "fail"]
    return EXIT_CHECKS if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tde-plankton",
        description="Closed NPZ plankton model with maturity-structured juveniles",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "equilibria": cmd_equilibria,
        "trace-boundary": cmd_trace_boundary,
        "simulate": cmd_simulate,
        "check": cmd_check,
    }
    for name, fn in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="flat key = value file")
        p.add_argument("--preset", type=str, default=None, help="named parameter preset")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument(
            "--set", dest="sets", action="append", default=[],
            metavar="KEY=VALUE", help="override one configuration key (repeatable)",
        )
        p.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        preset_vals = preset_values(args.preset) if args.preset else None
    except KeyError as err:
        print(f"error: {err.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    file_vals = None
    if args.config is not None:
        try:
            file_vals = parse_flat_text(args.config.read_text())
        except OSError as err:
            print(f"error: cannot read config: {err}", file=sys.stderr)
            return EXIT_CONFIG
        except ConfigError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_CONFIG
    overrides = {}
    for item in args.sets:
        if "=" not in item:
            print(f"error: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_CONFIG
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    try:
        cfg = build_config(preset_vals, file_vals, overrides)
    except (ConfigError, ParamError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir: Path = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return args.func(cfg, out_dir)
    except (ConfigError, InfeasibleBiomassError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except TdePlanktonError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
