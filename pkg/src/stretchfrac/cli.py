"""Command line front end: ``stretchfrac <command> [options]``.

Exit status: 0 success, 1 invalid configuration, 2 numerical failure,
3 a check did not pass.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dims, harmonic, spectral
from .graph import GraphError, build_level, export_graph
from .harmonic import Constant, Infeasible, Perturbed, SequenceError
from .measure import MeasureError, MeasureSpec
from .netalg import FloatingComponentError
from .templates import BUILTIN_NAMES, TemplateError, builtin, resolve

log = logging.getLogger("stretchfrac")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3
OUTDIR_ENV = "STRETCHFRAC_OUTDIR"


class ConfigError(ValueError):
    pass


# -- parsing helpers -----------------------------------------------------------


def parse_grid(text) -> np.ndarray:
    """``lo:hi:count`` (inclusive, evenly spaced) or a single number."""
    if isinstance(text, (int, float)):
        return np.array([float(text)])
    if isinstance(text, list):
        return np.asarray(text, dtype=float)
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) != 3:
            raise ValueError
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid {text!r} must be a number or lo:hi:count") from None
    if count < 1:
        raise ConfigError(f"grid {text!r}: count must be >= 1")
    if lo > hi or (count > 1 and lo == hi):
        raise ConfigError(f"grid {text!r}: lower bound must be below upper bound")
    return np.linspace(lo, hi, count)


def parse_window(text) -> tuple[float, float]:
    if isinstance(text, (list, tuple)):
        lo, hi = map(float, text)
    else:
        try:
            lo, hi = (float(x) for x in str(text).split(":"))
        except ValueError:
            raise ConfigError(f"window {text!r} must look like 0.05:0.6") from None
    if not 0 <= lo < hi <= 1:
        raise ConfigError(f"window ({lo}, {hi}) must satisfy 0 <= lo < hi <= 1")
    return lo, hi


DEFAULTS = {
    "template": "sierpinski3",
    "level": 3,
    "subdivision": 1,
    "lam": None,
    "rho": None,
    "perturb": None,
    "eta": 0.5,
    "beta": None,
    "a": None,
    "bc": "dirichlet",
    "dense_max": spectral.DENSE_EIG_MAX,
    "window": "0.05:0.6",
    "outdir": None,
    "depth": 1,
    "jobs": None,
    "N": None,
    "alpha": None,
    "format": "csv",
}


def merge_config(args: argparse.Namespace) -> dict:
    """Flags overlaid by an optional JSON config file (the file wins, with a warning)."""
    cfg = {k: v for k, v in vars(args).items() if k not in ("config", "func")}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            if cfg.get(key) is not None and cfg[key] != value:
                log.warning("config file overrides --%s=%s with %s", key.replace("_", "-"), cfg[key], value)
            cfg[key] = value
    for key, value in DEFAULTS.items():
        if cfg.get(key) is None:
            cfg[key] = value
    if cfg["outdir"] is None:
        cfg["outdir"] = os.environ.get(OUTDIR_ENV, ".")
    return cfg


def _template(cfg):
    try:
        return resolve(str(cfg["template"]))
    except (TemplateError, OSError) as exc:
        raise ConfigError(str(exc)) from None


def _int(cfg, key, lo=1, hi=None):
    try:
        v = int(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer") from None
    if v < lo or (hi is not None and v > hi):
        raise ConfigError(f"{key} must lie in [{lo}, {hi if hi is not None else 'inf'}], got {v}")
    return v


def _generator(cfg, lam):
    rho = cfg["rho"]
    if cfg["perturb"] is not None:
        try:
            c, q = (float(x) for x in (cfg["perturb"] if isinstance(cfg["perturb"], list) else str(cfg["perturb"]).split(":")))
        except ValueError:
            raise ConfigError("perturb must look like amplitude:ratio") from None
        if not 0 < q < 1:
            raise ConfigError(f"perturbation ratio must lie in (0, 1), got {q}")
        return Perturbed(lam, c, q)
    return Constant(lam, rho)


def _measure(t, cfg, eta=None, beta=None):
    eta = cfg["eta"] if eta is None else eta
    beta = cfg["beta"] if beta is None else beta
    if beta is None:
        beta = 0.9 / t.N
    try:
        return MeasureSpec.create(t, float(eta), float(beta), cfg["a"])
    except MeasureError as exc:
        raise ConfigError(str(exc)) from None


def _out(cfg, name: str, text: str) -> Path:
    d = Path(cfg["outdir"])
    d.mkdir(parents=True, exist_ok=True)
    p = d / name
    p.write_text(text)
    return p


def _theory_half(t, lam, eta, beta):
    ds = dims.spectral_dimension(t.N, lam, eta, beta)
    return math.nan if isinstance(ds, dims.ExcludedCase) else ds / 2


# -- commands -------------------------------------------------------------------


def cmd_list_templates(cfg) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["name", "N", "boundary", "critical_points", "rho_classes", "relation"])
    for name in BUILTIN_NAMES:
        t = builtin("gasket_3" if name == "gasket_d" else name)
        cf = harmonic.closed_form(t)
        if name == "gasket_d":
            w.writerow(["gasket_d", "d+1", "d+1", "d(d+1)/2", 1, "lam (d+3)/(d+1) + rho = 1"])
            continue
        w.writerow([t.name, t.N, t.boundary_size, len(t.critical_points), t.n_rho_classes, cf.relation if cf else ""])
    return EXIT_OK


def _solve_one(args):
    template, lam = args
    t = resolve(template)
    return harmonic.sweep(t, [lam])[0]


def _pool_map(fn, items, jobs):
    jobs = jobs or os.cpu_count() or 1
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def cmd_solve_harmonic(cfg) -> int:
    t = _template(cfg)
    if cfg["lam"] is None:
        raise ConfigError("solve-harmonic needs --lam (a value or lo:hi:count)")
    lams = parse_grid(cfg["lam"])
    rows = _pool_map(_solve_one, [(str(cfg["template"]), float(x)) for x in lams], cfg["jobs"])
    text = harmonic.sweep_csv(t, rows)
    sys.stdout.write(text)
    return EXIT_OK if all(r["feasible"] for r in rows) else EXIT_NUMERIC


def cmd_verify(cfg) -> int:
    t = _template(cfg)
    if cfg["lam"] is None or cfg["rho"] is None:
        raise ConfigError("verify needs --lam and --rho")
    lam = float(cfg["lam"])
    depth = _int(cfg, "depth")
    try:
        res = harmonic.residual(t, lam, cfg["rho"], depth)
    except (GraphError, FloatingComponentError) as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ok = res <= harmonic.VERIFY_TOL
    print(f"template={t.name} lam={lam:.17g} rho={[float(x) for x in np.atleast_1d(cfg['rho'])]} depth={depth}")
    print(f"residual={res:.6e} tolerance={harmonic.VERIFY_TOL:.0e} {'harmonic' if ok else 'NOT harmonic'}")
    return EXIT_OK if ok else EXIT_CHECK


def _spectrum_point(cfg, lam, eta, beta):
    """Build, solve and fit one parameter point; returns (eigs, fit) or raises."""
    t = _template(cfg)
    n = _int(cfg, "level", 1, 8)
    s = _int(cfg, "subdivision", 1)
    seq = harmonic.make_sequence(t, _generator(cfg, lam), n)
    g = build_level(t, n, seq, s)
    spec = _measure(t, cfg, eta, beta)
    p = spectral.assemble(g, spec, cfg["bc"])
    ev = spectral.eigenvalues(p, dense_max=int(cfg["dense_max"]))
    fit = spectral.fit_exponent(ev, parse_window(cfg["window"]))
    return ev, fit, spec


PLOT_SCRIPT = """\
# Plot the eigenvalue counting function written next to this script.
import csv
import math
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
with open(here / "counting.csv") as fh:
    rows = [(float(r["x"]), int(r["N"])) for r in csv.DictReader(fh) if float(r["x"]) > 0]
with open(here / "fit.csv") as fh:
    fit = next(csv.DictReader(fh))
x = [r[0] for r in rows]
N = [r[1] for r in rows]
slope, icpt = float(fit["slope"]), float(fit["intercept"])
plt.loglog(x, N, drawstyle="steps-post", label="N(x)")
plt.loglog(x, [math.exp(icpt) * v**slope for v in x], "--", label=f"slope {{slope:.4f}}")
plt.xlabel("x")
plt.ylabel("N(x)")
plt.title("{title}")
plt.legend()
plt.savefig(here / "counting.png", dpi=150)
"""


def cmd_spectrum(cfg) -> int:
    t = _template(cfg)
    if cfg["lam"] is None:
        raise ConfigError("spectrum needs --lam")
    lam = float(cfg["lam"])
    ev, fit, spec = _spectrum_point(cfg, lam, None, None)
    _out(cfg, "eigenvalues.csv", spectral.eigenvalues_csv(ev))
    _out(cfg, "counting.csv", spectral.counting_csv(ev))
    _out(cfg, "fit.csv", spectral.fit_csv(fit))
    _out(cfg, "plot_counting.py", PLOT_SCRIPT.format(title=f"{t.name}, lam={lam:g}, level {cfg['level']}"))
    half = _theory_half(t, lam, spec.eta, spec.beta)
    print(f"eigenvalues={len(ev)} slope={fit.slope:.6f} theory_dS/2={half:.6f} ratio_spread={fit.ratio_spread:.3f}")
    print(f"written to {Path(cfg['outdir']).resolve()}")
    return EXIT_OK


def cmd_dims(cfg) -> int:
    if cfg["lam"] is None:
        raise ConfigError("dims needs --lam")
    t = None
    if cfg["N"] is not None:
        N = _int(cfg, "N", 2)
    else:
        t = _template(cfg)
        N = t.N
    try:
        rep = dims.report(N, float(cfg["lam"]), float(cfg["eta"]), cfg["beta"], t, cfg["alpha"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(dims.DimensionReport.HEADER)
    w.writerow(rep.row())
    return EXIT_OK


SWEEP_HEADER = ["template", "lam", "eta", "beta", "level", "subdivision", "bc", "n_eigs", "slope", "theory_half_dS", "ratio_spread", "status"]


def _sweep_point(args):
    cfg, lam, eta, beta = args
    t = _template(cfg)
    base = [t.name, format(lam, ".12g"), format(eta, ".12g"), format(beta, ".12g"), cfg["level"], cfg["subdivision"], cfg["bc"]]
    try:
        ev, fit, spec = _spectrum_point(cfg, lam, eta, beta)
    except (SequenceError, Infeasible) as exc:
        return base + [0, "", "", "", f"infeasible: {exc}".replace(",", ";")]
    except spectral.SpectralError as exc:
        return base + [0, "", "", "", f"spectral: {exc}".replace(",", ";")]
    half = _theory_half(t, lam, eta, beta)
    return base + [len(ev), format(fit.slope, ".10g"), format(half, ".10g"), format(fit.ratio_spread, ".6g"), "ok"]


def cmd_sweep(cfg) -> int:
    t = _template(cfg)
    if cfg["lam"] is None:
        raise ConfigError("sweep needs --lam (a value or lo:hi:count)")
    lams = parse_grid(cfg["lam"])
    etas = parse_grid(cfg["eta"])
    betas = parse_grid(cfg["beta"] if cfg["beta"] is not None else 0.9 / t.N)
    parse_window(cfg["window"])
    points = [(cfg, float(l), float(e), float(b)) for l in lams for e in etas for b in betas]
    rows = _pool_map(_sweep_point, points, cfg["jobs"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())
    if cfg.get("outdir_explicit"):
        _out(cfg, "sweep.csv", buf.getvalue())
    return EXIT_OK if all(r[-1] == "ok" for r in rows) else EXIT_NUMERIC


def cmd_export_graph(cfg) -> int:
    t = _template(cfg)
    if cfg["lam"] is None:
        raise ConfigError("export-graph needs --lam")
    n = _int(cfg, "level", 1, 8)
    seq = harmonic.make_sequence(t, _generator(cfg, float(cfg["lam"])), n)
    g = build_level(t, n, seq, _int(cfg, "subdivision", 1))
    sys.stdout.write(export_graph(g, cfg["format"]))
    return EXIT_OK


def run_checks() -> list[tuple[str, bool, str]]:
    """Small, fast version of the invariant suite."""
    out = []

    def record(name, fn):
        try:
            ok, info = fn()
        except Exception as exc:  # a crash is a failed check
            ok, info = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), info))

    def relations():
        worst = 0.0
        for name in ("sierpinski3", "gasket_3", "vicsek"):
            t = builtin(name)
            cf = harmonic.closed_form(t)
            for lam in np.linspace(0, cf.upper, 7)[1:-1]:
                worst = max(worst, harmonic.residual(t, lam, cf.rho(lam)))
        return worst <= 1e-10, f"max residual {worst:.2e}"

    def compat():
        t = builtin("sierpinski3")
        seq = harmonic.make_sequence(t, Perturbed(0.3, 0.05, 0.5), 3)
        r = max(harmonic.sequence_residual(seq, d) for d in (2, 3))
        return r <= 1e-9, f"max residual {r:.2e}"

    def interlacing():
        t = builtin("sierpinski3")
        g = build_level(t, 3, harmonic.make_sequence(t, Constant(0.3), 3), 1)
        spec = MeasureSpec.create(t, 0.5, 0.2)
        en = spectral.eigenvalues(spectral.assemble(g, spec, "neumann"))
        ed = spectral.eigenvalues(spectral.assemble(g, spec, "dirichlet"))
        rep = spectral.bracketing_check(en, ed, t.boundary_size)
        return rep.ok and en[1] > 1e-8, f"lower={rep.lower_violations} upper={rep.upper_violations}"

    def mass():
        worst = 0.0
        from .measure import vertex_masses

        for name in ("sierpinski3", "vicsek", "hata"):
            t = builtin(name)
            g = build_level(t, 3, harmonic.make_sequence(t, Constant(0.2), 3), 2)
            worst = max(worst, abs(vertex_masses(g, MeasureSpec.create(t, 0.5, 0.3 / t.N)).sum() - 1))
        return worst <= 1e-12, f"max error {worst:.2e}"

    def dimensions():
        ok = all(dims.relation_check(3, lam) for lam in np.linspace(0.05, 0.6, 12))
        ok &= abs(dims.hausdorff_resistance(3, 0.6) - math.log(3) / math.log(5 / 3)) < 1e-12
        ok &= isinstance(dims.spectral_dimension(3, 1 / 3, 1.0, 1 / 3), dims.ExcludedCase)
        return ok, "relations and table values"

    def negatives():
        t = builtin("sierpinski3")
        off = harmonic.residual(t, 0.3, 0.4)
        try:
            harmonic.solve_rho(t, 0.7)
            infeasible = False
        except Infeasible:
            infeasible = True
        return off > 1e-3 and infeasible, f"off-curve residual {off:.2e}"

    record("harmonic relations", relations)
    record("level compatibility", compat)
    record("spectral interlacing", interlacing)
    record("measure total mass", mass)
    record("dimension identities", dimensions)
    record("negative controls", negatives)
    return out


def cmd_check(cfg) -> int:
    results = run_checks()
    width = max(len(r[0]) for r in results)
    for name, ok, info in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {info}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_CHECK


# -- argument parser -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stretchfrac", description="Stretched fractal networks, spectra and dimensions.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *groups):
        sp.add_argument("--config", help="JSON config file; its values win over flags")
        sp.add_argument("--template", "-t", help="builtin name or template JSON file")
        if "seq" in groups:
            sp.add_argument("--lam", help="lambda, or lo:hi:count where a grid is accepted")
            sp.add_argument("--rho", type=float, nargs="+", help="explicit rho per class (default: solved)")
            sp.add_argument("--perturb", help="amplitude:ratio for lam_k = lam + c q^k")
        if "build" in groups:
            sp.add_argument("--level", "-n", type=int)
            sp.add_argument("--subdivision", "-s", type=int)
        if "spec" in groups:
            sp.add_argument("--eta", help="measure weight in (0, 1] (grid allowed in sweep)")
            sp.add_argument("--beta", help="line decay in (0, 1/N) (grid allowed in sweep); default 0.9/N")
            sp.add_argument("--a", type=float, nargs="+", help="line weights per attachment slot")
            sp.add_argument("--bc", choices=["neumann", "dirichlet"])
            sp.add_argument("--dense-max", type=int, dest="dense_max")
            sp.add_argument("--window", help="fit window quantiles lo:hi (default 0.05:0.6)")
            sp.add_argument("--outdir", help=f"output directory (env {OUTDIR_ENV})")
        if "jobs" in groups:
            sp.add_argument("--jobs", "-j", type=int, help="worker processes (default: all cores)")

    sp = sub.add_parser("list-templates", help="list builtin templates")
    sp.set_defaults(func=cmd_list_templates)

    sp = sub.add_parser("solve-harmonic", help="solve rho for lambda or a lambda grid")
    common(sp, "seq", "jobs")
    sp.set_defaults(func=cmd_solve_harmonic)

    sp = sub.add_parser("verify", help="residual of a (lambda, rho) pair")
    common(sp, "seq")
    sp.add_argument("--depth", type=int)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("spectrum", help="eigenvalues, counting function and Weyl fit")
    common(sp, "seq", "build", "spec")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("dims", help="dimension report")
    common(sp, "seq")
    sp.add_argument("-N", type=int, dest="N", help="number of maps (instead of a template)")
    sp.add_argument("--eta", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--alpha", type=float, help="stretching factor for the Euclidean dimension")
    sp.set_defaults(func=cmd_dims)

    sp = sub.add_parser("sweep", help="fitted slopes over grids of lambda, eta, beta")
    common(sp, "seq", "build", "spec", "jobs")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("export-graph", help="write the level-n network as CSV or DOT")
    common(sp, "seq", "build")
    sp.add_argument("--format", choices=["csv", "dot"])
    sp.set_defaults(func=cmd_export_graph)

    sp = sub.add_parser("check", help="run the invariant suite and print a pass/fail matrix")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    verbose = args.verbose
    del args.verbose
    try:
        cfg = merge_config(args)
        cfg["outdir_explicit"] = args.__dict__.get("outdir") is not None or OUTDIR_ENV in os.environ
        return args.func(cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (Infeasible, SequenceError, GraphError, FloatingComponentError, spectral.SpectralError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        if verbose:
            raise
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
