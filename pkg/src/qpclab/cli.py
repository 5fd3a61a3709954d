"""Command-line front end.

Subcommands: spectrum, bethe, qes-verify, classical, sweep.  Energies are
printed in the natural unit of the model (Omega for AM, k for BH); the
library API underneath keeps explicit couplings.

Exit codes: 0 success, 1 numerical failure, 2 configuration error,
3 inconclusive (e.g. no crossover inside the scanned window).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import classical as cl
from . import correlators as corr
from . import finitediff as fdm
from . import qes as qesm
from .bethe import max_residual, solve_all
from .errors import ConfigError, NoCrossoverError, QpclabError
from .hamiltonians import Model, ModelParams, spectrum

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3

FIG1_POINTS = 301
FIG1_SCALED_MAX = 3.0
FIG1_N_LIST = (20, 30, 40)


def _fmt(x):
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            self.handle = sys.stdout
            self._close = False
        else:
            self.handle = open(self.path, "w", encoding="utf-8", newline="")
            self._close = True
        return self.handle

    def __exit__(self, *exc):
        if self._close:
            self.handle.close()
        return False


def write_csv(path, header, rows):
    with _Output(path) as out:
        out.write(",".join(header) + "\n")
        for row in rows:
            out.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, meta, rows):
    with _Output(path) as out:
        json.dump({"meta": meta, "rows": rows}, out, indent=1, allow_nan=True)
        out.write("\n")


def _apply_config(args, parser_keys):
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - parser_keys
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, value in data.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def _build_params(args) -> ModelParams:
    model = Model(args.model)
    if args.n is None:
        raise ConfigError("--n is required")
    n = int(args.n)
    if n < 0:
        raise ConfigError("--n must be >= 0")
    has_gamma = args.gamma is not None
    if model == Model.AM:
        if args.k is not None or args.eps is not None:
            raise ConfigError("--k/--eps are BH couplings")
        has_phys = args.delta is not None
        if has_gamma and has_phys:
            raise ConfigError("give either --gamma or --delta, not both")
        omega = 1.0 if args.omega is None else float(args.omega)
        if has_gamma:
            return ModelParams.am(n, gamma=float(args.gamma), omega=omega)
        if not has_phys:
            raise ConfigError("need --gamma or --delta")
        return ModelParams.am(n, delta=float(args.delta), omega=omega)
    if args.delta is not None or (args.omega is not None):
        raise ConfigError("--delta/--omega are AM couplings")
    has_phys = args.eps is not None
    if has_gamma and has_phys:
        raise ConfigError("give either --gamma or --eps, not both")
    k = 1.0 if args.k is None else float(args.k)
    if has_gamma:
        return ModelParams.bh(n, gamma=float(args.gamma), k=k)
    if not has_phys:
        raise ConfigError("need --gamma or --eps")
    return ModelParams.bh(n, eps=float(args.eps), k=k)


def _jobs_default():
    env = os.environ.get("QPCLAB_JOBS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _add_model_flags(sub):
    sub.add_argument("--model", required=True, choices=["am", "bh"])
    sub.add_argument("--n", type=int, default=None)
    sub.add_argument("--gamma", type=float, default=None)
    sub.add_argument("--delta", type=float, default=None)
    sub.add_argument("--omega", type=float, default=None)
    sub.add_argument("--k", type=float, default=None)
    sub.add_argument("--eps", type=float, default=None)


def _add_io_flags(sub):
    sub.add_argument("--out", default="-")
    sub.add_argument("--format", choices=["csv", "json"], default="csv")
    sub.add_argument("--config", default=None)


def cmd_spectrum(args) -> int:
    params = _build_params(args)
    unit = params.energy_unit
    vals = spectrum(params, want_vectors=False).eigenvalues / unit
    rows = [[i, v] for i, v in enumerate(vals)]
    meta = {"model": params.model.value, "n": params.n_particles,
            "gamma": params.gamma, "energy_unit": unit}
    if args.format == "json":
        write_json(args.out, meta, [{"index": i, "energy": v} for i, v in rows])
    else:
        write_csv(args.out, ["index", "energy"], rows)
    return EXIT_OK


def cmd_bethe(args) -> int:
    params = _build_params(args)
    unit = params.energy_unit
    header = ["state", "root", "re", "im", "state_residual_max",
              "energy_bethe", "energy_diag", "energy_absdiff"]
    rows = []
    worst = 0.0
    if params.dim > 0 and params.n_particles >= 0:
        from .bethe import bethe_energy

        spec, all_roots = solve_all(params, accept_tol=args.tol)
        for j, roots in enumerate(all_roots):
            res = max_residual(roots)
            worst = max(worst, res)
            e_b = bethe_energy(params, roots, residual_tol=max(args.tol, res * 1.01 + 1e-300))
            e_d = float(spec.eigenvalues[j])
            if roots.n_roots == 0:
                rows.append([j, -1, "", "", res, e_b / unit, e_d / unit,
                             abs(e_b - e_d) / unit])
            for i, v in enumerate(roots.roots):
                rows.append([j, i, v.real, v.imag, res, e_b / unit, e_d / unit,
                             abs(e_b - e_d) / unit])
    meta = {"model": params.model.value, "n": params.n_particles,
            "gamma": params.gamma, "residual_tolerance": args.tol,
            "energy_unit": unit}
    if args.format == "json":
        dict_rows = [dict(zip(header, row)) for row in rows]
        write_json(args.out, meta, dict_rows)
    else:
        write_csv(args.out, header, rows)
    return EXIT_OK if worst <= args.tol else EXIT_NUMERICAL


def _qes_checks(params, inject_error):
    """Run the full verification battery; returns (report dict, ok)."""
    pspec = qesm.PotentialSpec.from_params(params)
    family = qesm.qes_family(params)
    if inject_error:
        from .bethe import BetheRoots

        family = [
            qesm.qes_state(
                params,
                st.energy_im,
                BetheRoots(st.roots.model, st.roots.gamma,
                           st.roots.roots + inject_error, st.roots.parity),
            )
            for st in family
        ]
    report = {"model": params.model.value, "n": params.n_particles,
              "gamma": params.gamma, "injected_error": inject_error}

    worst_ratio = 0.0
    for st in family:
        r, bound = qesm.verify_residual_constancy(st, pspec)
        worst_ratio = max(worst_ratio, r / bound)
    report["residual_constancy"] = {
        "worst_ratio": worst_ratio, "pass": bool(worst_ratio <= 1.0)
    }

    ok_nodes, got = qesm.check_node_ordering(params, family)
    report["node_ordering"] = {
        "expected": qesm.expected_node_sequence(params),
        "got": got,
        "pass": bool(ok_nodes),
    }

    k_need = max(st.node_count for st in family) + 2
    fd = fdm.converged_fd_spectrum(pspec, k_lowest=k_need)
    worst_embed = max(
        float(np.min(np.abs(fd.eigenvalues - st.energy_so))) for st in family
    )
    report["fd_embedding"] = {
        "worst_distance": worst_embed,
        "tolerance": 1e-4,
        "pass": bool(worst_embed <= 1e-4),
    }

    faith = fdm.verify_ground_faithfulness(params)
    report["ground_faithfulness"] = dict(asdict(faith), **{"pass": faith.passed})
    del report["ground_faithfulness"]["passed"]

    ok = all(report[key]["pass"] for key in
             ("residual_constancy", "node_ordering", "fd_embedding",
              "ground_faithfulness"))
    return report, ok


def cmd_qes_verify(args) -> int:
    params = _build_params(args)
    report, ok = _qes_checks(params, args.inject_error)
    if args.format == "json":
        write_json(args.out, {"command": "qes-verify"}, [report])
    else:
        with _Output(args.out) as out:
            for key in ("residual_constancy", "node_ordering", "fd_embedding",
                        "ground_faithfulness"):
                body = report[key]
                out.write(f"{key}: {'PASS' if body['pass'] else 'FAIL'} "
                          f"{json.dumps({k: v for k, v in body.items() if k != 'pass'}, default=str)}\n")
            out.write(f"overall: {'PASS' if ok else 'FAIL'}\n")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_classical(args) -> int:
    model = Model(args.model)
    if args.n is None or args.n < 0:
        raise ConfigError("--n must be a nonnegative integer")
    n = int(args.n)
    lo = args.gamma_min if args.gamma_min is not None else 1e-3
    hi = args.gamma_max if args.gamma_max is not None else float(n) + 3.0
    if not hi > lo:
        raise ConfigError("--gamma-max must exceed --gamma-min")
    grid = np.linspace(lo, hi, max(int(args.points or 501), 2))
    report = {"model": model.value, "n": n, "window": [lo, hi]}
    cc = cl.crossover_coupling(model, n, scan=(lo, hi))
    order = cl.classify_order(model, n, grid)
    report["gamma_c_closed_form"] = cc.closed_form
    report["gamma_c_numeric"] = cc.numeric
    report["gamma_c_agreed"] = bool(cc.agreed)
    report["order"] = order.order
    report["beta"] = order.beta
    report["beta_residual"] = order.beta_residual
    if model == Model.AM:
        n_list = args.scaling_n or [50, 100, 200, 400]
        g = args.scaling_gamma if args.scaling_gamma is not None else -5.0
        scaling = cl.scaling_checks(model, n_list, gamma=g)
        report["scaling"] = {"gamma": g, "rows": scaling.rows,
                             "slope": scaling.slope}
    else:
        n_list = args.scaling_n or [10, 30]
        scaling = cl.scaling_checks(model, n_list)
        report["scaling"] = {"rows": scaling.rows}
    if args.format == "json":
        write_json(args.out, {"command": "classical"}, [report])
    else:
        rows = [[key, json.dumps(val) if isinstance(val, (dict, list)) else val]
                for key, val in report.items()]
        write_csv(args.out, ["key", "value"], rows)
    return EXIT_OK


def _grid_from_args(args, model):
    if model == Model.AM and args.scaled_min is not None:
        if args.gamma_min is not None:
            raise ConfigError("give either --gamma-min/max or --scaled-min/max")
        lo, hi = args.scaled_min, args.scaled_max
        if hi is None:
            raise ConfigError("--scaled-max missing")
        scale = math.sqrt(args.n)
        lo, hi = lo * scale, hi * scale
    else:
        lo, hi = args.gamma_min, args.gamma_max
        if lo is None or hi is None:
            raise ConfigError("need --gamma-min and --gamma-max (or --scaled-*)")
    points = int(args.points or 101)
    if points == 1:
        if hi != lo:
            raise ConfigError("a single-point grid needs gamma-min == gamma-max")
        return np.array([lo])
    if points < 2:
        raise ConfigError("--points must be >= 1")
    if not hi > lo:
        raise ConfigError("grid upper end must exceed lower end")
    return np.linspace(lo, hi, points)


def _run_sweep(model, n, grid, omega, k, jobs):
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            def map_fn(fn, it):
                return pool.map(fn, it, chunksize=8)

            return corr.sweep(model, n, grid, omega=omega, k=k, map_fn=map_fn)
    return corr.sweep(model, n, grid, omega=omega, k=k)


def _write_sweep(result, out, fmt, unit):
    scaled_cols = {"e0", "gap", "cl_e0"}
    if result.model == Model.BH:
        scaled_cols |= {"theta", "theta_per_n", "cl_theta"}
    rows = []
    for row in result.rows:
        r = dict(row)
        for col in scaled_cols | {"d2e0_dgamma2"}:
            if col in r and isinstance(r[col], float):
                r[col] = r[col] / unit
        rows.append(r)
    meta = dict(result.meta)
    meta["energies_in_units_of"] = unit
    if fmt == "json":
        write_json(out, meta, rows)
    else:
        write_csv(out, result.columns,
                  [[row[c] for c in result.columns] for row in rows])


def cmd_sweep(args) -> int:
    jobs = args.jobs if args.jobs else _jobs_default()
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if args.figure:
        if args.figure != "fig1":
            raise ConfigError(f"unknown figure preset {args.figure!r}")
        out_dir = args.out_dir or "."
        os.makedirs(out_dir, exist_ok=True)
        for n in FIG1_N_LIST:
            grid = np.linspace(0.0, FIG1_SCALED_MAX * math.sqrt(n), FIG1_POINTS)
            result = _run_sweep(Model.AM, n, grid, 1.0, 1.0, jobs)
            path = os.path.join(out_dir, f"fig1_am_n{n}.{args.format}")
            _write_sweep(result, path, args.format, 1.0)
            locator = corr.quantum_crossover_locator(result)
            print(f"N={n}: wrote {path}; |d2E0| peak at scaled coupling "
                  f"{_fmt(locator[1])}")
        return EXIT_OK
    model = Model(args.model)
    if args.n is None or args.n < 0:
        raise ConfigError("--n must be a nonnegative integer")
    omega = 1.0 if args.omega is None else args.omega
    k = 1.0 if args.k is None else args.k
    grid = _grid_from_args(args, model)
    result = _run_sweep(model, int(args.n), grid, omega, k, jobs)
    unit = omega if model == Model.AM else k
    _write_sweep(result, args.out, args.format, unit)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qpclab",
        description="Spectra, Bethe roots, QES checks and crossover "
                    "diagnostics for two solvable boson models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues of the fixed-N block")
    _add_model_flags(p)
    _add_io_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bethe", help="Bethe root tables with residuals")
    _add_model_flags(p)
    _add_io_flags(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_bethe)

    p = sub.add_parser("qes-verify",
                       help="residual constancy, node ordering, FD embedding")
    _add_model_flags(p)
    _add_io_flags(p)
    p.add_argument("--inject-error", type=float, nargs="?", const=1e-3,
                   default=0.0)
    p.set_defaults(func=cmd_qes_verify)

    p = sub.add_parser("classical", help="crossover report")
    p.add_argument("--model", required=True, choices=["am", "bh"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--gamma-min", type=float, default=None)
    p.add_argument("--gamma-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--scaling-n", type=lambda s: [int(x) for x in s.split(",")],
                   default=None)
    p.add_argument("--scaling-gamma", type=float, default=None)
    _add_io_flags(p)
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("sweep", help="gamma sweeps of ground-state data")
    _add_model_flags(p)
    _add_io_flags(p)
    p.add_argument("--gamma-min", type=float, default=None)
    p.add_argument("--gamma-max", type=float, default=None)
    p.add_argument("--scaled-min", type=float, default=None)
    p.add_argument("--scaled-max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--figure", default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        keys = {a for a in vars(args) if a not in ("func", "command")}
        args = _apply_config(args, keys)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoCrossoverError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QpclabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
