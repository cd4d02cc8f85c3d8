"""Command-line harness: ``jmc surface|convergence|bounds|selftest``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import selftest
from .config import ExperimentConfig, load
from .errors import ConfigError, JMCError
from .evrelax import ConvergentScheme, build_for_rv, point_bounds
from .interval import Box
from .oracle import mc_expect, mc_samples
from .partition import uniform_partition

GAP_FLOOR = 1e-14
EXACT_GAP = 1e-12


def _fmt(v: float) -> str:
    return repr(float(v))


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    """Ordered map, optionally on a thread pool."""
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])


def _grid(box: Box, n: int) -> list[list[float]]:
    axes = [[c.mid] if n == 1 else [float(v) for v in np.linspace(c.lo, c.hi, n)] for c in box]
    for k, c in enumerate(box):
        if n > 1:
            axes[k][0], axes[k][-1] = c.lo, c.hi
    return [list(p) for p in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(box), -1).T]


def _counts(spec, n: int) -> tuple[int, ...]:
    counts = (int(spec),) * n if isinstance(spec, (int, float)) else tuple(int(c) for c in spec)
    if len(counts) != n:
        raise ConfigError(f"partition {spec!r} does not match {n} uncertain dimensions")
    return counts


# ---------------------------------------------------------------------------

def cmd_surface(cfg: ExperimentConfig, out: Path, seed: int, threads: int) -> int:
    sec = cfg.section("surface")
    if len(cfg.x_box) != 2:
        raise ConfigError(f"{cfg.name}: surfaces need two decision variables")
    n_grid = int(sec.get("grid", 33))
    points = _grid(cfg.x_box, n_grid)
    n_mc = int(sec.get("mc_samples", 100))
    # Common random numbers: one gamma sample shared by every grid point.
    rng = np.random.Generator(np.random.PCG64(seed))
    omega, _ = cfg.rv.sample(rng, n_mc)
    ok = True
    for spec in sec.get("partitions", [[1, 1]]):
        counts = _counts(spec, cfg.rv.n_gamma)
        r = build_for_rv(cfg.integrand, cfg.x_box, cfg.rv, counts, threads)

        def row(x, r=r):
            cv, cc = r.evaluate(x)
            vals = mc_samples(cfg.integrand, x, omega)
            hw = 4.0 * float(np.std(vals, ddof=1)) / math.sqrt(n_mc) if n_mc > 1 else 0.0
            return x[0], x[1], cv, cc, float(np.mean(vals)), hw

        rows = _map(row, points, threads)
        ncell = math.prod(counts)
        path = out / f"{cfg.name}_surface_{ncell}cells.csv"
        _write_csv(path, ("x1", "x2", "Fcv", "Fcc", "F_mc", "mc_halfwidth"), rows)
        gap = max(r[3] - r[2] for r in rows)
        sound = all(r[2] <= r[3] for r in rows)
        ok &= sound
        print(f"{path}: {len(rows)} rows, {ncell} cells, max gap {gap:.6g}"
              + ("" if sound else "  [cv > cc somewhere]"))
    return 0 if ok else 1


def fit_slope(eps: Sequence[float], gaps: Sequence[float]) -> tuple[float | None, str]:
    """Least-squares slope of log(gap) against log(eps), with a status note."""
    if all(g <= EXACT_GAP for g in gaps):
        return None, "all gaps <= 1e-12: relaxation is exact, fit skipped"
    pts = [(math.log(e), math.log(g)) for e, g in zip(eps, gaps) if g >= GAP_FLOOR]
    dropped = len(gaps) - len(pts)
    if len(pts) < 2:
        return None, "fewer than two gaps above 1e-14, fit skipped"
    slope = float(np.polyfit([p[0] for p in pts], [p[1] for p in pts], 1)[0])
    note = f"{dropped} gap(s) below 1e-14 excluded" if dropped else "all points used"
    return slope, note


def convergence_table(cfg: ExperimentConfig, threads: int = 1) -> list[tuple]:
    sec = cfg.section("convergence")
    x = [float(v) for v in sec["x"]]
    if len(x) != len(cfg.x_box):
        raise ConfigError(f"{cfg.name}: convergence x has wrong dimension")
    x_bar = Box(sec["x_bar"]) if "x_bar" in sec else cfg.x_box
    s = ConvergentScheme(cfg.relaxed_integrand, cfg.rv.gamma_box, cfg.rv.base, float(sec["K"]))

    def row(e):
        X = Box([(v - e, v + e) for v in x])
        if X not in x_bar:
            raise ConfigError(f"{cfg.name}: X_eps for eps={e} leaves {x_bar.to_list()}")
        r = s.relaxation(X)
        cv, cc = r.evaluate(x)
        return float(e), len(r), cv, cc, cc - cv

    return _map(row, [float(e) for e in sec["eps"]], threads)


def cmd_convergence(cfg: ExperimentConfig, out: Path, seed: int, threads: int) -> int:
    sec = cfg.section("convergence")
    rows = convergence_table(cfg, threads)
    lo, hi = sec.get("fit_window", [0, len(rows)])
    window = rows[lo:hi]
    slope, note = fit_slope([r[0] for r in window], [r[4] for r in window])
    path = out / f"{cfg.name}_convergence.csv"
    _write_csv(path, ("eps", "cells", "Fcv", "Fcc", "gap"), rows)
    print(f"{path}: {len(rows)} rows")
    for r in rows:
        print(f"  eps={r[0]:<10g} cells={r[1]:<6d} gap={r[4]:.6e}")
    if slope is None:
        print(f"slope: n/a ({note})")
        return 0
    print(f"slope: {slope:.4f} ({note})")
    expect = sec.get("expect_slope")
    if expect is not None and not expect[0] <= slope <= expect[1]:
        print(f"FAIL: slope outside [{expect[0]}, {expect[1]}]")
        return 1
    return 0


def bounds_certificate(cfg: ExperimentConfig, seed: int) -> dict:
    sec = cfg.section("bounds")
    x = [float(v) for v in sec["x"]]
    if not cfg.x_box.contains_point(x):
        raise ConfigError(f"{cfg.name}: bounds point {x} outside x_box")
    counts = _counts(sec.get("partition", 1), cfg.rv.n_gamma)
    P = uniform_partition(cfg.rv.gamma_box, counts)
    lower, upper = point_bounds(cfg.relaxed_integrand, x, P, cfg.rv.base)
    est = mc_expect(cfg.integrand, x, cfg.rv, int(sec.get("mc_samples", 10 ** 6)), seed)
    passed = lower <= est.value + est.half_width and est.value - est.half_width <= upper
    return {"x": x, "lower": lower, "upper": upper, "mc_value": est.value,
            "mc_halfwidth": est.half_width, "partition_size": len(P), "seed": seed,
            "passed": passed}


def cmd_bounds(cfg: ExperimentConfig, out: Path, seed: int, threads: int) -> int:
    cert = bounds_certificate(cfg, seed)
    path = out / f"{cfg.name}_bounds.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cert, indent=2) + "\n", encoding="utf-8")
    print(f"{path}: lower={cert['lower']:.10g} mc={cert['mc_value']:.10g}"
          f"+-{cert['mc_halfwidth']:.3g} upper={cert['upper']:.10g}")
    if not cert["passed"]:
        print("FAIL: bounds do not contain the Monte Carlo estimate")
        return 1
    return 0


def cmd_selftest(cases: int, seed: int) -> int:
    report = selftest.run(cases, seed)
    print("\n".join(report.lines()))
    return 0 if report.ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jmc", description="Jensen-McCormick relaxations of expected values")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides the config)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in (("surface", "relaxation surfaces on a grid (CSV per partition)"),
                      ("convergence", "gap against eps and fitted log-log slope"),
                      ("bounds", "point bounds certificate (JSON)")):
        sp = sub.add_parser(name, parents=[common], help=hlp)
        sp.add_argument("config", help="config file or builtin name (example1, example2, example3)")
    st = sub.add_parser("selftest", parents=[common], help="randomised property suite")
    st.add_argument("--cases", type=int, default=2000)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("jmc: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        if args.command == "selftest":
            return cmd_selftest(args.cases, 0 if args.seed is None else args.seed)
        cfg = load(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        cmd = {"surface": cmd_surface, "convergence": cmd_convergence, "bounds": cmd_bounds}
        return cmd[args.command](cfg, args.out, seed, args.threads)
    except ConfigError as exc:
        print(f"jmc: config error: {exc}", file=sys.stderr)
        return 2
    except (JMCError, KeyError) as exc:
        print(f"jmc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
