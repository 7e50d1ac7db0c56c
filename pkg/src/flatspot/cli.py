"""Command-line front end.

Every subcommand reads an optional JSON config, writes its CSV/JSON results
under ``--out`` together with ``manifest.json`` and returns 0 on success.
Failures print a one-line JSON error on stderr and exit with 2 (config),
3 (numeric budget or precision exhausted) or 4 (map rejected by validation).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
import scipy
from mpmath import mpf

from . import __version__, kernel
from .bigreal import mixed_format, parse_decimal, sig, to_decimal, working
from .errors import ConfigError, FlatSpotError, NotFound, PrecisionExhausted
from .flatmap import critical_orbit, map_config, validate, validated
from .rotation import (
    ContinuedFraction,
    closest_returns,
    find_parameter,
    locking_interval,
    rotation_number,
)

MAP_KEYS = ("family", "b", "t", "nu", "precision_bits", "precision_ceiling_bits")
DEFAULT_MAP = {"family": "canonical", "b": "0.5", "t": "0", "nu": "3"}
# convergents beyond the requested depth that the parameter search must resolve
SEARCH_MARGIN = 5


# ---------------------------------------------------------------------------
# run context
# ---------------------------------------------------------------------------


class Run:
    """Parsed config, output directory and manifest bookkeeping of one command."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.started = time.time()
        doc = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError("config must be a JSON object")
        self.doc = doc
        self.options = dict(doc.get("options", {}))
        map_doc = dict(doc.get("map", {k: doc[k] for k in MAP_KEYS if k in doc}))
        if not map_doc:
            map_doc = dict(DEFAULT_MAP)
        if args.precision_bits is not None:
            map_doc["precision_bits"] = args.precision_bits
        if args.precision_ceiling is not None:
            map_doc["precision_ceiling_bits"] = args.precision_ceiling
        self.map_doc = map_doc
        self.cfg = map_config(map_doc)
        self.precision = self.cfg.precision_bits
        self.ceiling = self.cfg.precision_ceiling_bits
        self.max_iters = args.max_iters
        self.out = Path(args.out)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output directory {self.out} is not writable: {exc}") from exc
        self.files: list = []
        self.extra: dict = {}

    def opt(self, name: str, default=None):
        """Command-line value, else config ``options``, else ``default``."""
        v = getattr(self.args, name, None)
        if v is not None:
            return v
        return self.options.get(name, default)

    def margin(self) -> int:
        try:
            m = int(self.opt("search_margin", SEARCH_MARGIN))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"search margin must be an integer: {exc}") from exc
        if m < 1:
            raise ConfigError("search margin must be at least 1")
        return m

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(name)
        return p

    def checkpoint_path(self, name: str) -> Path:
        d = self.out / "checkpoints"
        d.mkdir(exist_ok=True)
        return d / f"{name}.json"

    def load_checkpoint(self, name: str):
        p = self.checkpoint_path(name)
        if getattr(self.args, "resume", False) and p.exists():
            with open(p) as fh:
                return json.load(fh)
        return None

    def save_checkpoint(self, name: str, state: dict) -> None:
        p = self.checkpoint_path(name)
        tmp = p.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump(state, fh, sort_keys=True)
        os.replace(tmp, p)

    def family(self, nu=None):
        """The validated family ``t -> f_t`` of the configured map (``nu`` overrides)."""
        cfg = self.cfg
        if nu is not None:
            if cfg.family != "canonical":
                raise ConfigError("a list of exponents needs the canonical family")
            cfg = map_config({**self.map_doc, "nu": str(nu)})
        with working(self.precision):
            m = cfg.build()
        return validated(m, precision=self.precision)

    def manifest(self, command: str, status: str = "ok") -> None:
        info = {
            "command": command,
            "status": status,
            "config": self.doc,
            "map": self.map_doc,
            "options": {k: v for k, v in vars(self.args).items() if k != "func"},
            "precision_bits": self.precision,
            "precision_ceiling_bits": self.ceiling,
            "versions": {
                "flatspot": __version__,
                "python": platform.python_version(),
                "mpmath": mpmath.__version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "kernel": kernel.BACKEND,
            },
            "files": sorted(set(self.files)),
            "wall_time_s": round(time.time() - self.started, 3),
            **self.extra,
        }
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(info, fh, indent=2, sort_keys=True, default=str)


def _levels(text: str) -> list:
    """``"2:10"`` (inclusive) or ``"2,4,6"``."""
    text = str(text)
    try:
        if ":" in text:
            a, b = text.split(":")
            return list(range(int(a), int(b) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad level list {text!r}") from exc


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def parse_target(text: str, depth: int):
    """``golden``, ``silver``, ``p/q`` or explicit quotients ``cf:1,2,1``."""
    text = str(text).strip()
    if text == "golden":
        return ContinuedFraction.golden(depth)
    if text == "silver":
        return ContinuedFraction.silver(depth)
    if text.startswith("cf:"):
        try:
            qs = [int(v) for v in text[3:].split(",") if v.strip()]
            return ContinuedFraction.from_quotients(qs)
        except ValueError as exc:
            raise ConfigError(f"bad quotient list {text!r}") from exc
    if "/" in text:
        try:
            fr = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad fraction {text!r}") from exc
        if not 0 <= fr < 1:
            raise ConfigError("rational targets must lie in [0, 1)")
        return fr
    raise ConfigError(f"unknown rotation target {text!r}")


def _depth(run: Run, default: int = 20) -> int:
    depth = int(run.opt("depth", default))
    if depth < 3:
        raise ConfigError(f"depth must be at least 3, got {depth}")
    return depth


# ---------------------------------------------------------------------------
# shared pipeline pieces
# ---------------------------------------------------------------------------


def solve_t(run: Run, family, target: ContinuedFraction, depth: int, tag: str):
    """Parameter with the target rotation number; cached in ``find_t_<tag>.json``.

    The search resolves convergents up to ``depth`` plus the search margin.  When the
    bisection bottoms out at the precision floor before that, it continues
    from the same bracket at doubled precision.
    """
    t_file = run.opt("t_file")
    if t_file:
        with open(t_file) as fh:
            doc = json.load(fh)
        prec = int(doc.get("precision_bits", run.precision))
        return parse_decimal(doc["t"], prec), prec
    if isinstance(target, Fraction):
        raise ConfigError("this command needs an irrational target")
    if target.depth < depth:
        raise ConfigError(f"target has {target.depth} quotients, depth {depth} requested")
    deep = target
    level_goal = min(depth + run.margin(), target.depth)
    max_iters = run.max_iters or deep.q(level_goal)
    name = f"find_t_{tag}"
    state = run.load_checkpoint(name)
    if state and state.get("done"):
        prec = int(state["precision_bits"])
        return parse_decimal(state["t"], prec), prec
    prec = int(state["precision_bits"]) if state else run.precision
    bracket = state
    while True:
        def keep(s, prec=prec):
            run.save_checkpoint(name, {**s, "precision_bits": prec, "done": False})

        res = find_parameter(family, deep, mpf(2) ** -(prec - 20), max_iters=max_iters, precision=prec,
                             budget_stop=True, checkpoint=keep, state=bracket)
        if res.stopped_by == "budget" or res.level >= level_goal or prec * 2 > run.ceiling:
            break
        with working(prec):
            bracket = {"lo": mpmath.nstr(res.lo, prec), "hi": mpmath.nstr(res.hi, prec), "steps": 0}
        prec *= 2
    if res.stopped_by != "budget" and res.level < depth:
        raise PrecisionExhausted(
            f"parameter search resolved only {res.level} convergents at the ceiling of {run.ceiling} bits")
    with working(prec):
        t_text = to_decimal(res.t, prec)
        record = {"t": t_text, "lo": to_decimal(res.lo, prec), "hi": to_decimal(res.hi, prec),
                  "steps": res.steps, "stopped_by": res.stopped_by, "level": res.level,
                  "rho_error": None if res.rho_error is None else to_decimal(res.rho_error, prec),
                  "precision_bits": prec, "max_iters": max_iters, "level_goal": level_goal}
    with open(run.path(f"{name}.json"), "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
    run.save_checkpoint(name, {**record, "done": True})
    run.extra.setdefault("parameter_search", {})[tag] = record
    return res.t, prec


def orbit_for(run: Run, family, t, cf: ContinuedFraction, depth: int, prec: int):
    m = family.with_t(t)
    return critical_orbit(m, cf.q(depth) + 1, precision=prec, ceiling=max(run.ceiling, prec))


def _echo(text: str) -> None:
    sys.stdout.write(text + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate(run: Run) -> int:
    with working(run.precision):
        m = run.cfg.build()
    report = validate(m, grid=int(run.opt("grid", 2048)), precision=run.precision)
    doc = report.as_dict()
    with open(run.path("validation.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    _echo(json.dumps(doc, sort_keys=True))
    if not report.usable:
        run.manifest("validate", "rejected")
        sys.stderr.write(json.dumps({"error": "ValidationRejected", "message": "; ".join(report.failures)}) + "\n")
        return 4
    run.manifest("validate")
    return 0


def cmd_rho(run: Run) -> int:
    with working(run.precision):
        m = run.cfg.build()
        tol = parse_decimal(str(run.opt("tol", "1e-12")), run.precision)
    m = validated(m, precision=run.precision)
    rho = rotation_number(m, tol, max_iters=run.max_iters or 10**7, precision=run.precision)
    with working(run.precision):
        if rho.is_rational:
            doc = {"kind": "rational", "p": rho.p, "q": rho.q, "witness": rho.witness}
        else:
            doc = {"kind": "enclosure", "lo": to_decimal(rho.lo, run.precision),
                   "hi": to_decimal(rho.hi, run.precision), "width": to_decimal(rho.hi - rho.lo, run.precision)}
    with open(run.path("rho.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    _echo(json.dumps(doc, sort_keys=True))
    run.manifest("rho")
    return 0


def cmd_find_t(run: Run) -> int:
    depth = _depth(run)
    family = run.family()
    target = parse_target(run.opt("target", "golden"), depth + run.margin())
    if isinstance(target, Fraction):
        res = find_parameter(family, target, mpf(2) ** -(run.precision - 20), precision=run.precision)
        with working(run.precision):
            record = {"t": to_decimal(res.t, run.precision), "stopped_by": res.stopped_by,
                      "steps": res.steps, "precision_bits": run.precision}
        with open(run.path("find_t_target.json"), "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
    else:
        t, prec = solve_t(run, family, target, depth, "target")
        with working(prec):
            record = {"t": to_decimal(t, prec), "precision_bits": prec}
    _echo(json.dumps(record, sort_keys=True))
    run.manifest("find-t")
    return 0


def cmd_orbit(run: Run) -> int:
    depth = _depth(run)
    family = run.family()
    target = parse_target(run.opt("target", "golden"), depth + run.margin())
    if run.opt("t_file") or run.opt("search"):
        t, prec = solve_t(run, family, target, depth, "target")
    else:
        t, prec = family.t, run.precision
    orbit = orbit_for(run, family, t, target, depth, prec)
    level = min(depth, target.level_for(orbit.length))
    rows = closest_returns(orbit, target, level)
    with open(run.path("closest_returns.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "q_n", "y_n"])
        for r in rows:
            w.writerow([r.n, r.q, to_decimal(r.y, orbit.precision)])
    run.extra["orbit"] = {"length": orbit.length, "precision_bits": orbit.precision,
                          "absorbed_at": orbit.absorbed_at,
                          "rotation": None if orbit.rotation is None else str(orbit.rotation)}
    fmt = mixed_format if run.args.mixed_format else sig
    for r in rows:
        _echo(f"{r.n:>3}  {r.q:>8}  {fmt(r.y):>12}  {r.side}")
    run.manifest("orbit")
    return 0


def cmd_table(run: Run) -> int:
    from .scalings import build_report, extrapolate_limit

    depth = _depth(run)
    family = run.family()
    target = parse_target(run.opt("target", "golden"), depth + run.margin())
    t, prec = solve_t(run, family, target, depth, "target")
    orbit = orbit_for(run, family, t, target, depth, prec)
    residual_levels = run.opt("residual_levels")
    extended = bool(run.opt("extended", False)) or residual_levels is not None
    rep = build_report(orbit, target, depth, extended=extended,
                       residual_levels=_levels(residual_levels) if residual_levels is not None else None)
    mixed = bool(run.args.mixed_format)
    rep.write_table(run.path("table.csv"), mixed=mixed, bits=orbit.precision)
    if extended:
        rep.write_extended(run.path("table_extended.csv"), bits=orbit.precision)
    if rep.residuals:
        rep.write_residuals(run.path("residuals.csv"), bits=orbit.precision)
    sig_pairs = rep.series.sigmas()
    summary = {"t": to_decimal(t, prec), "orbit_precision_bits": orbit.precision,
               "extrapolated_limit": float(extrapolate_limit(sig_pairs[-6:]))}
    run.extra["table"] = summary
    _echo(rep.console_table(mixed=mixed))
    _echo(f"extrapolated limit {summary['extrapolated_limit']:.4f}")
    run.manifest("table")
    return 0


def cmd_dichotomy(run: Run) -> int:
    from .scalings import classify_decay, sigma_series

    depth = _depth(run)
    raw = run.opt("nu_list", "1.5,2.5,3")
    nus = [str(v).strip() for v in (raw if isinstance(raw, (list, tuple)) else str(raw).split(",")) if str(v).strip()]
    _floats(nus)
    target = parse_target(run.opt("target", "golden"), depth + run.margin())
    n_from = int(run.opt("n_from", 10))
    results, sigmas = {}, {}
    for nu in nus:
        family = run.family(nu)
        t, prec = solve_t(run, family, target, depth, f"nu{nu}")
        orbit = orbit_for(run, family, t, target, depth, prec)
        series = sigma_series(orbit, target, depth)
        sigmas[nu] = series.sigma
        window = [(n, s) for n, s in series.sigmas() if n >= n_from]
        cls = classify_decay(window)
        results[nu] = {**cls.as_dict(), "min_sigma": float(min(s for _, s in window)),
                       "precision_bits": orbit.precision, "t": to_decimal(t, prec)}
        _echo(f"nu={nu}: {cls.label} (sigma {float(cls.sigma_first):.4f} -> {float(cls.sigma_last):.4f}, "
              f"extrapolated {float(cls.limit):.4f})")
    levels = sorted(set().union(*(s.keys() for s in sigmas.values())))
    with open(run.path("dichotomy.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n"] + [f"sigma_nu{nu}" for nu in nus])
        for n in levels:
            w.writerow([n] + ["" if n not in sigmas[nu] else to_decimal(sigmas[nu][n], results[nu]["precision_bits"])
                              for nu in nus])
    with open(run.path("dichotomy.json"), "w") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
    run.manifest("dichotomy")
    return 0


def cmd_geometry(run: Run) -> int:
    from .geometry import coarse_grid, hausdorff_upper, lebesgue_deficit, partitions, write_hausdorff, write_partitions

    levels = _levels(run.opt("levels", "2:10"))
    if len(levels) < 2:
        raise ConfigError("geometry needs at least two levels")
    depth = max(levels) + 1
    family = run.family()
    target = parse_target(run.opt("target", "golden"), depth + run.margin())
    t, prec = solve_t(run, family, target, max(depth, 3), "target")
    grid = _floats(run.opt("alpha_grid")) if run.opt("alpha_grid") is not None else coarse_grid()
    with working(prec):
        parts = partitions(family.with_t(t), target, levels, precision=prec)
    fit = lebesgue_deficit(parts)
    try:
        est = hausdorff_upper(parts, grid, raise_inconclusive=False)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_partitions(parts, run.path("partitions.csv"), bits=prec)
    write_hausdorff(est, run.path("hausdorff.csv"), bits=prec)
    with open(run.path("deficit.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "total_hole_length"])
        for n, v in zip(fit.levels, fit.totals):
            w.writerow([n, to_decimal(v, prec)])
    doc = {"levels": list(fit.levels), "rate": fit.rate, "rate_ci": [fit.rate_low, fit.rate_high],
           "r2": fit.r2, "strictly_decreasing": fit.strictly_decreasing,
           "alpha_star": est.alpha, "verdict": est.verdict, "caveat": est.caveat}
    with open(run.path("geometry.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    _echo(json.dumps(doc, sort_keys=True))
    run.manifest("geometry")
    return 0


def cmd_matrices(run: Run) -> int:
    from .matrices import MatrixSeq, admissible_from_file, find_N, write_entries

    nu = str(run.opt("nu", "3"))
    prec = run.precision
    length = int(run.opt("length", 1000))
    b_file = run.opt("b_file")
    with working(prec):
        nu_v = parse_decimal(nu, prec)
        if b_file:
            seq = admissible_from_file(b_file, nu_v, prec)
            length = min(length, len(seq))
        else:
            value = run.opt("constant")
            value = parse_decimal(str(value), prec) if value is not None else 1 / nu_v
            seq = MatrixSeq.constant(nu_v, value, length, prec)
    write_entries(run.path("matrices.csv"), seq, length, window=int(run.opt("window", 1)))
    doc = {"nu": float(nu_v)}
    trials = int(run.opt("trials", 32))
    try:
        res = find_N(nu_v, trials=trials, cap=int(run.opt("cap", 200)), seed=int(run.opt("seed", 0)))
        doc.update(json.loads(res.to_json()))
    except NotFound as exc:
        # expected for nu <= 2, reported rather than treated as a failure
        doc.update({"N": None, "not_found": str(exc), "trials": trials})
    with open(run.path("find_n.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    _echo(json.dumps(doc, sort_keys=True))
    run.manifest("matrices")
    return 0


def cmd_params(run: Run) -> int:
    from .scalings import sigma_series

    levels = _levels(run.opt("levels", "6:12"))
    lo_level = min(levels) - 2
    if lo_level < 1:
        raise ConfigError("params levels must start at 3 or later")
    depth = max(levels) + 1
    family = run.family()
    target = parse_target(run.opt("target", "golden"), depth + run.margin())
    t, prec = solve_t(run, family, target, depth, "target")
    orbit = orbit_for(run, family, t, target, depth, prec)
    sig_n = sigma_series(orbit, target, depth).sigma
    nu = family.nu
    tol = mpf(2) ** -(prec - 20)
    state = run.load_checkpoint("params") or {}
    widths = {}
    rows = []
    for n in range(lo_level, max(levels) + 1):
        key = str(n)
        if key in state:
            item = state[key]
            with working(prec):
                lt, rt = parse_decimal(item["t_left"], prec), parse_decimal(item["t_right"], prec)
        else:
            li = locking_interval(family, n, target, tol, precision=prec)
            lt, rt = li.t_left, li.t_right
            state[key] = {"t_left": to_decimal(lt, prec), "t_right": to_decimal(rt, prec)}
            run.save_checkpoint("params", state)
        with working(prec):
            widths[n] = rt - lt
            delta = widths[n] / widths[n - 2] if n - 2 in widths else None
            ratio = delta / sig_n[n - 1] ** nu if delta is not None and (n - 1) in sig_n else None
            rows.append([n, str(target.convergent(n)), to_decimal(lt, prec), to_decimal(rt, prec),
                         to_decimal(widths[n], prec), "" if delta is None else to_decimal(delta, prec),
                         "" if ratio is None else to_decimal(ratio, prec)])
    with open(run.path("params.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p_n/q_n", "t_left", "t_right", "width", "delta_n", "delta_over_sigma_pow_nu"])
        w.writerows(r for r in rows if r[0] in levels)
    for r in rows:
        if r[0] in levels:
            _echo(f"{r[0]:>3}  {r[1]:>10}  delta={sig(r[5]) if r[5] else '':>10}  ratio={sig(r[6]) if r[6] else ''}")
    run.manifest("params")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "rho": cmd_rho,
    "find-t": cmd_find_t,
    "orbit": cmd_orbit,
    "table": cmd_table,
    "dichotomy": cmd_dichotomy,
    "geometry": cmd_geometry,
    "matrices": cmd_matrices,
    "params": cmd_params,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flatspot", description=__doc__.splitlines()[0])
    p.add_argument("--config", metavar="PATH", help="JSON config: map fields plus an 'options' object")
    p.add_argument("--precision-bits", type=int, metavar="N")
    p.add_argument("--precision-ceiling", type=int, metavar="N")
    p.add_argument("--max-iters", type=int, metavar="N", help="iteration budget for rotation-number decisions")
    p.add_argument("--out", default="flatspot-out", metavar="DIR")
    p.add_argument("--mixed-format", action="store_true", help="mixed notation such as 64.04·10⁻⁶ in tables")
    sub = p.add_subparsers(dest="command", required=True)

    def target_opts(s):
        s.add_argument("--target", help="golden, silver, p/q or cf:a1,a2,...")
        s.add_argument("--depth", type=int)
        s.add_argument("--t-file", help="reuse a find_t_*.json result instead of searching")
        s.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")
        s.add_argument("--search-margin", type=int, metavar="K",
                       help=f"convergents resolved beyond --depth (default {SEARCH_MARGIN})")

    s = sub.add_parser("validate", help="check the map against the defining properties")
    s.add_argument("--grid", type=int)
    s = sub.add_parser("rho", help="rotation number of the configured map")
    s.add_argument("--tol")
    s = sub.add_parser("find-t", help="parameter with the target rotation number")
    target_opts(s)
    s = sub.add_parser("orbit", help="closest returns of the critical orbit")
    target_opts(s)
    s.add_argument("--search", action="store_true", help="search t first instead of using the config value")
    s = sub.add_parser("table", help="y_n, sigma(n), mu_n table")
    target_opts(s)
    s.add_argument("--extended", action="store_true", default=None)
    s.add_argument("--residual-levels", help="e.g. 8:18")
    s = sub.add_parser("dichotomy", help="sigma(n) trend for several exponents")
    target_opts(s)
    s.add_argument("--nu-list", help="comma separated, e.g. 1.5,2.5,3")
    s.add_argument("--n-from", type=int)
    s = sub.add_parser("geometry", help="partitions, Lebesgue deficit and Hausdorff sums")
    target_opts(s)
    s.add_argument("--levels", help="e.g. 2:10")
    s.add_argument("--alpha-grid", help="comma separated exponents")
    s = sub.add_parser("matrices", help="matrix products and the contraction window")
    s.add_argument("--nu")
    s.add_argument("--b-file", help="one weight per line")
    s.add_argument("--constant", help="constant weight (default 1/nu)")
    s.add_argument("--length", type=int)
    s.add_argument("--window", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--cap", type=int)
    s.add_argument("--seed", type=int)
    s = sub.add_parser("params", help="locking intervals and parameter scalings")
    target_opts(s)
    s.add_argument("--levels", help="e.g. 6:12")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = None
    try:
        run = Run(args)
        return COMMANDS[args.command](run)
    except FlatSpotError as exc:
        code = getattr(exc, "exit_code", 1)
        doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        report = getattr(exc, "report", None)
        if report is not None:
            doc["report"] = report.as_dict()
        sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
        if run is not None:
            run.extra["error"] = doc
            run.manifest(args.command, "failed")
        return code


if __name__ == "__main__":
    sys.exit(main())
