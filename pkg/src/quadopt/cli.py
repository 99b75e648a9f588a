"""Command-line entry point.

Commands: simulate, oracle, compare, sweep, preset, list-presets.
Precedence of settings: built-in defaults < preset < config file < flags.
Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 comparison failure.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .correlations import observables_series
from .integrator import StepperConfig
from .io import csv_text, dump_json, load_json, read_csv, write_text
from .moments import MomentState
from .oracle import DEFAULT_CUTOFFS, FockSpace, convergence_report, oracle_columns
from .params import (CONFIG_FIELDS, PARAM_FIELDS, ConfigError, SimConfig, SystemParams, build,
                     load_config)
from .scenarios import PRESETS, describe, preset
from .simulation import StabilityWarning, run_moments

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_COMPARE = 0, 1, 2, 3

_FLOAT_FLAGS = ("delta_c", "omega_m", "g_opt", "rabi", "gamma_a", "gamma_b", "nbar_a", "nbar_b",
                "t_end", "rel_tol", "abs_tol")


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="start from a named figure preset")
    p.add_argument("--config", help="plain-text 'key = value' config file")
    for name in _FLOAT_FLAGS:
        p.add_argument(_flag(name), dest=name, type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--rhs-variant", dest="rhs_variant", choices=("closed", "composed"))


def _merged(args) -> tuple[SystemParams, SimConfig, str | None]:
    params, cfg = SystemParams(), SimConfig()
    if args.preset:
        try:
            p = preset(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        params, cfg = p.params, p.sim
    values: dict[str, Any] = {}
    if args.config:
        try:
            values.update(load_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for name in PARAM_FIELDS + CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    params, cfg = build(values, params, cfg)
    return params, cfg, args.preset


def _write_outputs(out: str, text: str, sidecar: dict[str, Any], sidecar_path: str | None) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        write_text(out, text)
        sidecar_path = sidecar_path or str(Path(out).with_suffix(".json"))
    if sidecar_path:
        dump_json(sidecar_path, sidecar)


def simulation_csv(params: SystemParams, cfg: SimConfig) -> tuple[str, dict[str, Any], bool]:
    """Run the moment equations; return CSV text, sidecar payload and success flag."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", StabilityWarning)
        traj = run_moments(params, cfg)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    table = observables_series(traj)
    text = csv_text(traj.times, traj.states, table["g2_a"], table["g2_b"], table["g2_ab"])
    sidecar = {
        "kind": "simulate",
        "params": params.as_dict(),
        "config": cfg.as_dict(),
        "rhs_variant": cfg.rhs_variant,
        "stepper": traj.meta["stepper"],
        "integrator": {"status": traj.status, "message": traj.message, **traj.stats},
        "min_stability_margin": traj.meta["min_stability_margin"],
        "code_version": __version__,
    }
    if isinstance(cfg.initial_state, MomentState):
        sidecar["initial_state_reals"] = cfg.initial_state.to_reals().tolist()
    return text, sidecar, traj.ok


def _replay(path: str) -> tuple[SystemParams, SimConfig]:
    side = load_json(path)
    params = SystemParams(**side["params"])
    conf = dict(side["config"])
    if conf.get("initial_state") == "custom":
        conf["initial_state"] = MomentState.from_reals(side["initial_state_reals"])
    return params, SimConfig(**conf)


def cmd_simulate(args) -> int:
    if args.replay:
        params, cfg = _replay(args.replay)
        preset_name = None
    else:
        params, cfg, preset_name = _merged(args)
    text, sidecar, ok = simulation_csv(params, cfg)
    if preset_name:
        sidecar["preset"] = preset_name
    _write_outputs(args.out, text, sidecar, args.sidecar)
    if not ok:
        print(f"integration failed: {sidecar['integrator']['message']}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_oracle(args) -> int:
    params, cfg, preset_name = _merged(args)
    try:
        FockSpace(args.n_cut_a, args.n_cut_b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    stepper = StepperConfig(rel_tol=args.oracle_rel_tol, abs_tol=args.oracle_abs_tol,
                            h_init=min(1e-3, cfg.t_end), h_max=min(1.0, cfg.t_end),
                            max_steps=int(cfg.max_steps))
    report, traj = convergence_report(params, cfg.t_grid(), (args.n_cut_a, args.n_cut_b),
                                      bump=args.bump, cfg=stepper)
    cols = oracle_columns(traj)
    text = csv_text(cols["t"], cols["moments"], cols["g2_a"], cols["g2_b"], cols["g2_ab"])
    report.update({"kind": "oracle", "params": params.as_dict(), "config": cfg.as_dict(),
                   "preset": preset_name, "code_version": __version__,
                   "integrator": {"status": traj.status, "message": traj.message, **traj.stats}})
    _write_outputs(args.out, text, report, args.report)
    if not traj.ok:
        print(f"oracle integration failed: {traj.message}", file=sys.stderr)
        return EXIT_NUMERICAL
    if report["under_resolved"]:
        print(f"warning: under-resolved, cutoff bump changed n_a(t_end) by {report['delta_n_a']:.3e}",
              file=sys.stderr)
    return EXIT_OK


def compare_tables(a: dict[str, np.ndarray], b: dict[str, np.ndarray], columns: Sequence[str],
                   abs_tol: float, rel_tol: float) -> dict[str, dict[str, Any]]:
    """Per-column deviation of ``a`` from reference ``b``.

    A sample passes if |a - b| <= max(abs_tol, rel_tol * |b|); a value that
    is defined in one table and empty in the other always fails.
    """
    if set(a) != set(b):
        raise ConfigError("tables have different columns")
    if len(a["t"]) != len(b["t"]) or not np.array_equal(a["t"], b["t"]):
        raise ConfigError("tables are sampled on different time grids")
    out = {}
    for col in columns:
        if col not in a:
            raise ConfigError(f"unknown column {col!r}")
        x, y = a[col], b[col]
        both = np.isfinite(x) & np.isfinite(y)
        definedness = int(np.sum(np.isfinite(x) != np.isfinite(y)))
        diff = np.abs(x[both] - y[both])
        ref = np.abs(y[both])
        rel = np.where(ref > 0, diff / np.where(ref > 0, ref, 1.0), np.where(diff > 0, np.inf, 0.0))
        ok = bool(np.all(diff <= np.maximum(abs_tol, rel_tol * ref))) and definedness == 0
        out[col] = {"max_abs": float(diff.max(initial=0.0)), "max_rel": float(rel.max(initial=0.0)),
                    "definedness_mismatches": definedness, "within_tolerance": ok}
    return out


def cmd_compare(args) -> int:
    try:
        a, b = read_csv(args.run_a), read_csv(args.run_b)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read tables: {exc}") from None
    columns = args.columns.split(",") if args.columns else [c for c in a if c != "t"]
    result = compare_tables(a, b, columns, args.abs_tol, args.rel_tol)
    width = max(len(c) for c in columns)
    for col, r in result.items():
        flag = "ok" if r["within_tolerance"] else "FAIL"
        print(f"{col:<{width}}  max_abs={r['max_abs']:.3e}  max_rel={r['max_rel']:.3e}  "
              f"undefined_mismatch={r['definedness_mismatches']}  {flag}")
    if args.report:
        dump_json(args.report, {"abs_tol": args.abs_tol, "rel_tol": args.rel_tol, "columns": result})
    return EXIT_OK if all(r["within_tolerance"] for r in result.values()) else EXIT_COMPARE


def _sweep_point(job: tuple[dict, dict, str]) -> tuple[str, bool, str]:
    params_d, cfg_d, path = job
    text, sidecar, ok = simulation_csv(SystemParams(**params_d), SimConfig(**cfg_d))
    write_text(path, text)
    dump_json(Path(path).with_suffix(".json"), sidecar)
    return path, ok, sidecar["integrator"]["message"]


def cmd_sweep(args) -> int:
    params, cfg, preset_name = _merged(args)
    if args.param not in PARAM_FIELDS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(PARAM_FIELDS)}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep values {args.values!r}") from None
    if not values:
        raise ConfigError("sweep needs at least one value")
    if len(set(values)) != len(values):
        raise ConfigError("sweep values must be distinct")
    if not isinstance(cfg.initial_state, str):
        raise ConfigError("sweeps start from vacuum")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    jobs, index = [], {}
    for v in values:
        p, c = build({args.param: v}, params, cfg)
        path = outdir / f"{args.param}_{v!r}.csv"
        jobs.append((p.as_dict(), c.as_dict(), str(path)))
        index[repr(v)] = path.name
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(job) for job in jobs]
    failed = [(path, msg) for path, ok, msg in results if not ok]
    dump_json(outdir / "index.json", {"param": args.param, "base_preset": preset_name,
                                      "base_params": params.as_dict(), "config": cfg.as_dict(),
                                      "runs": index, "failed": [p for p, _ in failed],
                                      "code_version": __version__})
    for path, msg in failed:
        print(f"{path}: integration failed: {msg}", file=sys.stderr)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_preset(args) -> int:
    try:
        p = preset(args.name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    print(f"# preset {p.name}")
    for name in PARAM_FIELDS:
        print(f"{name} = {getattr(p.params, name)!r}")
    for name in ("t_end", "n_samples", "rel_tol", "abs_tol", "rhs_variant", "max_steps"):
        value = getattr(p.sim, name)
        print(f"{name} = {value!r}" if isinstance(value, float) else f"{name} = {value}")
    for claim in p.claims:
        print(f"# claim {claim.name}: {claim.description}")
    return EXIT_OK


def cmd_list_presets(args) -> int:
    for p in PRESETS.values():
        print(describe(p))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the closed moment equations")
    _add_run_options(p)
    p.add_argument("--replay", help="re-run exactly from a JSON sidecar")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--sidecar", help="JSON sidecar path (default: CSV path with .json)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact master-equation run with cutoff convergence check")
    _add_run_options(p)
    p.add_argument("--n-cut-a", type=int, default=DEFAULT_CUTOFFS[0])
    p.add_argument("--n-cut-b", type=int, default=DEFAULT_CUTOFFS[1])
    p.add_argument("--bump", type=int, default=4, help="cutoff increase for the convergence check")
    p.add_argument("--oracle-rel-tol", type=float, default=1e-8)
    p.add_argument("--oracle-abs-tol", type=float, default=1e-10)
    p.add_argument("--out", default="-")
    p.add_argument("--report", help="convergence JSON path (default: CSV path with .json)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", help="column-wise deviation of two output tables")
    p.add_argument("run_a")
    p.add_argument("run_b", help="reference table")
    p.add_argument("--abs-tol", type=float, default=0.0)
    p.add_argument("--rel-tol", type=float, default=0.0)
    p.add_argument("--columns", help="comma-separated columns (default: all but t)")
    p.add_argument("--report", help="write the deviation table as JSON")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="one simulate run per value of a parameter")
    _add_run_options(p)
    p.add_argument("--param", required=True, help="SystemParams field to sweep")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preset", help="print a preset in config-file format")
    p.add_argument("name")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("list-presets", help="one line per preset")
    p.set_defaults(func=cmd_list_presets)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
