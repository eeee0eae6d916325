"""Command-line interface: ``fracreach {simulate,mlf,oustaloup,verify}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import ConfigError, DomainError, FracReachError, NotConverged
from .interval import Interval
from .model import SCENARIOS, BatteryParams, battery_current, battery_gain, battery_output, scenario
from .oracles import (
    check_containment,
    freq_feedback,
    freq_ss,
    load_paper_ss,
    max_deviation,
    monte_carlo,
    oustaloup_warburg,
    SWEEP_COLUMNS,
    sweep,
    write_sweep,
)
from .reach import SimOptions, Slicing, simulate
from .specfun import MLQuery, ml_eval, ml_interval

log = logging.getLogger("fracreach")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_UNSOUND = 0, 2, 3, 4


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "cubic_a"
    uniform_T: float | None = None
    multi_horizon: tuple[float, ...] | None = None
    grid: tuple[float, ...] | None = None
    t_end: float = 1.0
    samples_per_slice: int = 8
    mc_runs: int = 200
    seed: int = 0
    output_path: str | None = None
    strict: bool = False
    transform: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"field 'scenario': unknown value {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if not self.t_end > 0:
            raise ConfigError(f"field 't_end': must be > 0, got {self.t_end}")
        if self.samples_per_slice < 2:
            raise ConfigError(f"field 'samples_per_slice': must be >= 2, got {self.samples_per_slice}")
        if self.mc_runs < 1:
            raise ConfigError(f"field 'mc_runs': must be >= 1, got {self.mc_runs}")
        chosen = [k for k in ("uniform_T", "multi_horizon", "grid") if getattr(self, k) is not None]
        if len(chosen) > 1:
            raise ConfigError(f"fields {', '.join(chosen)}: give exactly one slicing")
        if self.uniform_T is not None and not self.uniform_T > 0:
            raise ConfigError(f"field 'uniform_T': must be > 0, got {self.uniform_T}")
        for k in ("multi_horizon", "grid"):
            v = getattr(self, k)
            if v is not None and (not v or any(not x > 0 for x in v)):
                raise ConfigError(f"field '{k}': values must be > 0")

    def slicing(self) -> Slicing:
        if self.multi_horizon is not None:
            return Slicing.multi_horizon(self.multi_horizon)
        if self.grid is not None:
            return Slicing.grid(self.grid)
        return Slicing.uniform(self.uniform_T if self.uniform_T is not None else self.t_end)


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _floats(text: str, name: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"field '{name}': expected a comma separated list of numbers, got {text!r}") from None


def load_config(path: str) -> dict:
    """Read a JSON config file into a dict of :class:`ScenarioConfig` fields."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    out = {}
    for key, val in raw.items():
        name = key.replace("-", "_")
        if name not in _FIELD_TYPES:
            raise ConfigError(f"{path}: unknown field {key!r}")
        try:
            if name in ("multi_horizon", "grid"):
                val = _floats(",".join(map(str, val)) if isinstance(val, list) else val, name)
            elif name in ("uniform_T", "t_end"):
                val = float(val)
            elif name in ("samples_per_slice", "mc_runs", "seed"):
                if isinstance(val, bool) or int(val) != val:
                    raise ValueError
                val = int(val)
            elif name in ("strict", "transform"):
                if not isinstance(val, bool):
                    raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: field {key!r} has invalid value {val!r}") from None
        out[name] = val
    return out


def build_config(args) -> ScenarioConfig:
    vals = load_config(args.config) if getattr(args, "config", None) else {}
    flag_map = {
        "scenario": args.scenario,
        "uniform_T": getattr(args, "uniform_T", None),
        "multi_horizon": _floats(args.multi_horizon, "multi_horizon") if getattr(args, "multi_horizon", None) else None,
        "grid": _floats(args.grid, "grid") if getattr(args, "grid", None) else None,
        "t_end": args.t_end,
        "samples_per_slice": getattr(args, "samples_per_slice", None),
        "mc_runs": getattr(args, "mc", None),
        "seed": getattr(args, "seed", None),
        "output_path": getattr(args, "output", None),
    }
    slicing_flags = [k for k in ("uniform_T", "multi_horizon", "grid") if flag_map[k] is not None]
    if slicing_flags:
        for k in ("uniform_T", "multi_horizon", "grid"):
            vals.pop(k, None)
    for k, v in flag_map.items():
        if v is not None:
            vals[k] = v
    if "t_end" not in vals:
        pts = vals.get("multi_horizon") or vals.get("grid")
        if pts:
            vals["t_end"] = max(pts)
    if getattr(args, "strict", False):
        vals["strict"] = True
    if getattr(args, "no_transform", False):
        vals["transform"] = False
    return ScenarioConfig(**vals)


# -- simulate -----------------------------------------------------------------


def tube_rows(tube, battery: bool):
    k = battery_gain() if battery else None
    p = BatteryParams()
    for r in tube.rows:
        row = [r.t_lo, r.t_hi]
        for c in r.x:
            row += [c.lo, c.hi]
        if battery:
            v = battery_output(r.x, battery_current(r.x, k), p)
            row += [v.lo, v.hi]
        yield row


def csv_header(n: int, battery: bool) -> list[str]:
    cols = ["t_lo", "t_hi"]
    for i in range(1, n + 1):
        cols += [f"x{i}_lo", f"x{i}_hi"]
    if battery:
        cols += ["v_lo", "v_hi"]
    return cols


def write_tube_csv(fh, tube, n: int, battery: bool) -> None:
    fh.write(",".join(csv_header(n, battery)) + "\n")
    for row in tube_rows(tube, battery):
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _box(v):
    return [[c.lo, c.hi] for c in v]


def manifest(cfg: ScenarioConfig, sys_, tube, wall: float) -> dict:
    return {
        "scenario": cfg.scenario,
        "nu": [sys_.nu.lo, sys_.nu.hi],
        "x0": _box(sys_.x0),
        "params": {k: [v.lo, v.hi] for k, v in sorted(sys_.params.items())},
        "slicing": tube.mode,
        "slice_grid": [[s.t_start, s.t_end] for s in tube.slices],
        "slice_status": [s.status for s in tube.slices],
        "iterations": list(tube.diagnostics.get("iterations", [])),
        "fallback_slices": list(tube.diagnostics.get("fallback_slices", [])),
        "x_space": tube.diagnostics.get("x_space"),
        "mu": [list(s.mu) for s in tube.slices],
        "z_sup": [list(s.Z_sup) for s in tube.slices],
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "wall_time_s": round(wall, 3),
    }


def run(cfg: ScenarioConfig, out=None, manifest_path: str | None = None):
    """Simulate a scenario and write its tube CSV (and manifest)."""
    sys_ = scenario(cfg.scenario)
    t0 = time.perf_counter()
    opts = SimOptions(samples_per_slice=cfg.samples_per_slice, strict=cfg.strict, transform=cfg.transform)
    tube = simulate(sys_, cfg.t_end, cfg.slicing(), opts)
    wall = time.perf_counter() - t0
    battery = cfg.scenario.startswith("battery")
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            write_tube_csv(fh, tube, sys_.n, battery)
        manifest_path = manifest_path or cfg.output_path + ".manifest.json"
    else:
        write_tube_csv(out or sys.stdout, tube, sys_.n, battery)
    if manifest_path:
        with open(manifest_path, "w") as fh:
            json.dump(manifest(cfg, sys_, tube, wall), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return tube


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    run(cfg, manifest_path=args.manifest)
    return EXIT_OK


# -- mlf ------------------------------------------------------------------------


def _interval_arg(text: str, name: str) -> Interval:
    vals = _floats(text, name)
    if len(vals) == 1:
        return Interval(vals[0])
    if len(vals) == 2 and vals[0] <= vals[1]:
        return Interval(*vals)
    raise ConfigError(f"field '{name}': expected a number or 'lo,hi', got {text!r}")


def cmd_mlf(args) -> int:
    nu = _interval_arg(args.nu, "nu")
    z = _interval_arg(args.z, "z")
    if z.is_point():
        res = ml_eval(nu, args.beta, z.lo, args.tol)
        enc = res.enclosure
        info = f"terms={res.terms} path={res.path} tail<={res.tail_bound:.3g}"
    else:
        enc = ml_interval(MLQuery(nu, args.beta, z, args.tol))
        info = "endpoint evaluation"
    print(f"E_{{{args.nu},{args.beta}}}({args.z}) in [{enc.lo!r}, {enc.hi!r}]  width={enc.width:.3g}  {info}")
    return EXIT_OK


# -- oustaloup ----------------------------------------------------------------


def cmd_oustaloup(args) -> int:
    if args.reference_ss:
        ss = load_paper_ss()
        approx = lambda w: np.array([freq_ss(ss, x) for x in w])  # noqa: E731
    else:
        tf = oustaloup_warburg(args.nu, args.wb, args.wh, args.N, args.margin)
        approx = lambda w: freq_feedback(tf, w)  # noqa: E731
    rows = sweep(approx, args.wb, args.wh, args.sweep, args.nu)
    if args.output:
        write_sweep(args.output, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    dm, dp = max_deviation(rows)
    print(f"max deviation {dm:.4f} dB, {dp:.3f} deg over {args.sweep} frequencies", file=sys.stderr)
    return EXIT_OK


# -- verify ---------------------------------------------------------------------


VERIFY_SLICINGS = {
    "cubic_a": ("uniform", (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125), 1.0),
    "cubic_b": ("uniform", (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125), 1.0),
    "battery_small": ("multi_horizon", tuple(float(k) for k in range(1, 11)), 10.0),
    "battery_large": ("multi_horizon", tuple(float(k) for k in range(1, 11)), 10.0),
}


def verify_scenario(name: str, runs: int, seed: int, h: float = 1e-3, threads: int | None = None, out=None):
    """Monte-Carlo containment for every slicing of ``name``; returns (all ok, rows)."""
    out = out or sys.stdout
    mode, values, t_end = VERIFY_SLICINGS[name]
    sys_ = scenario(name)
    mc = monte_carlo(sys_, runs, t_end, h, seed, threads)
    if mode == "uniform":
        plans = [(f"T={T:g}", Slicing.uniform(T)) for T in values]
    else:
        plans = [(f"{len(values)} horizons", Slicing.multi_horizon(values))]
    results = []
    for label, sl in plans:
        tube = simulate(sys_, t_end, sl)
        c = check_containment(tube, mc)
        results.append((label, c))
        status = "PASS" if c.ok else "FAIL"
        print(f"{status}  {name:14s} {label:12s} containment {c.contained}/{c.runs}", file=out)
    return all(c.ok for _, c in results), results


def cmd_verify(args) -> int:
    names = SCENARIOS if args.scenario == "all" else (args.scenario,)
    threads = args.threads or int(os.environ.get("FRACREACH_THREADS", "1") or 1)
    ok = True
    for name in names:
        good, _ = verify_scenario(name, args.mc, args.seed, args.h, threads)
        ok &= good
    return EXIT_OK if ok else EXIT_UNSOUND


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracreach", description="Verified enclosures of fractional-order systems.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="compute an enclosure tube and write it as CSV")
    s.add_argument("--config", help="JSON file with ScenarioConfig fields; flags override it")
    s.add_argument("--scenario", choices=SCENARIOS)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--uniform-T", type=float, dest="uniform_T")
    g.add_argument("--multi-horizon", help="comma separated horizons, e.g. 1,2,...,10")
    g.add_argument("--grid", help="comma separated slice breakpoints")
    s.add_argument("--t-end", type=float, dest="t_end")
    s.add_argument("--samples-per-slice", type=int, dest="samples_per_slice")
    s.add_argument("--output", "-o", help="CSV path (default: stdout)")
    s.add_argument("--manifest", help="JSON manifest path (default: <output>.manifest.json)")
    s.add_argument("--strict", action="store_true", help="fail instead of falling back to the reference enclosure")
    s.add_argument("--no-transform", action="store_true", dest="no_transform")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mlf", help="rigorous Mittag-Leffler enclosure")
    m.add_argument("--nu", required=True, help="order, number or 'lo,hi'")
    m.add_argument("--z", required=True, help="argument, number or 'lo,hi' (write --z=-2,-1 for negative intervals)")
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--tol", type=float, default=1e-12)
    m.set_defaults(func=cmd_mlf)

    o = sub.add_parser("oustaloup", help="frequency sweep of the rational approximation of 1/(1+s^nu)")
    o.add_argument("--nu", type=float, default=0.5)
    o.add_argument("--wb", type=float, default=0.01)
    o.add_argument("--wh", type=float, default=100.0)
    o.add_argument("--N", type=int, default=5)
    o.add_argument("--margin", type=float, default=1.0, help="decades added on both sides of the band for the construction")
    o.add_argument("--sweep", type=int, default=200)
    o.add_argument("--reference-ss", action="store_true", help="sweep the built-in 11th-order realisation instead")
    o.add_argument("--output", "-o")
    o.set_defaults(func=cmd_oustaloup)

    v = sub.add_parser("verify", help="Monte-Carlo containment check against the GL oracle")
    v.add_argument("--scenario", default="all", choices=("all",) + SCENARIOS)
    v.add_argument("--mc", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--h", type=float, default=1e-3)
    v.add_argument("--threads", type=int, default=None, help="worker threads (default: $FRACREACH_THREADS or 1)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "simulate" and args.scenario is None and args.config is None:
        parser.error("simulate needs --scenario or --config")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (DomainError, FracReachError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
