"""Command line interface.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or model
error, 3 numerical abort (partial CSV output is kept).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import __version__
from .algebroid import validate
from .conserved import (
    GaugeData, HypothesisViolated, NotEquivalentError, dynamical_equiv, gauge_family,
    geometric_equiv, is_gauge_pair, nonnoether_monitors, noether_test,
)
from .dynamics import SingularHessianError, State
from .integrate import SimulationAborted, Trajectory, drift, simulate
from .models import CATALOG, Model, ModelValidationError, SchemaError, dump, load, to_plain
from .symbolics import ExprError, SampleDomain, UndecidableError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    t_end: float = 10.0
    h: float = 1e-3
    seed: int = 0
    interval: tuple[float, float] = (-2.0, 2.0)
    samples: int = 32
    atol: float = 1e-9
    rtol: float = 1e-9
    drift_tol: float = 1e-7
    out: Path | None = None
    overrides: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.t_end > 0 and self.h > 0):
            raise UsageError("--t-end and --dt must be positive")

    @property
    def domain(self) -> SampleDomain:
        return SampleDomain(n=self.samples, seed=self.seed, atol=self.atol, rtol=self.rtol,
                            default_interval=self.interval)


def _floats(text: str | None) -> tuple[float, ...]:
    if text is None or not text.strip():
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), float(value)


def _config(args) -> RunConfig:
    lo, hi = _floats(args.interval) if args.interval else (-2.0, 2.0)
    return RunConfig(
        t_end=getattr(args, "t_end", 10.0), h=getattr(args, "dt", 1e-3), seed=args.seed,
        interval=(lo, hi), samples=args.samples, atol=args.atol, rtol=args.rtol,
        drift_tol=getattr(args, "drift_tol", 1e-7), out=getattr(args, "out", None),
        overrides=dict(args.param or []),
    )


def _emit(data: dict) -> None:
    sys.stdout.write(yaml.safe_dump(to_plain(data), sort_keys=False))


def _state(model: Model, args) -> State:
    m, p = model.algebroid.m, model.algebroid.p
    x0 = _floats(args.x0) if args.x0 is not None else (0.0,) * m
    y0 = _floats(args.y0)
    if len(x0) != m or len(y0) != p:
        raise UsageError(f"need {m} base and {p} fiber initial values")
    return State(x0, y0)


def write_csv(path: Path | None, header: Sequence[str], rows) -> None:
    if path is None:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format(float(v), ".17g") for v in row])


def _trajectory_rows(model: Model, traj: Trajectory, monitor_names: Sequence[str]):
    A = model.algebroid
    header = ["t", *A.base_coords, *A.fiber_coords, *monitor_names]
    cols = [traj.times[:, None], traj.x, traj.y] + [traj.monitors[n][:, None] for n in monitor_names]
    return header, np.hstack(cols) if len(traj) else []


def _run(model: Model, system, s0: State, cfg: RunConfig, monitors=None, groups=(), columns=None):
    """Simulate, write CSV, print the drift report; returns the exit code."""
    try:
        traj = simulate(system, s0, cfg.t_end, cfg.h, monitors, groups)
        aborted = None
    except SimulationAborted as exc:
        traj, aborted = exc.trajectory, exc
    names = list(traj.monitors)
    if columns is None:
        header, rows = _trajectory_rows(model, traj, names)
    else:
        header = ["t", *columns]
        rows = np.column_stack([traj.times] + [traj.monitors[c] for c in columns]) if len(traj) else []
    write_csv(cfg.out, header, rows)
    if aborted is not None:
        _emit({"status": "aborted", "reason": str(aborted), "steps": len(traj)})
        return EXIT_NUMERIC
    report = drift(traj)
    ok = all(q.relative <= cfg.drift_tol for q in report.quantities.values())
    _emit({"drift": report.as_dict(), "tolerance": cfg.drift_tol, "passed": ok})
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = _config(args)
    model = load(args.model, cfg.overrides, force=True, domain=cfg.domain)
    report = validate(model.algebroid, cfg.domain, threshold=args.threshold)
    _emit({"model": model.name, "identities": report.as_dict(), "passed": report.passed})
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_show(args) -> int:
    cfg = _config(args)
    model = load(args.model, cfg.overrides, force=True, domain=cfg.domain)
    sys.stdout.write(dump(model))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    model = _load(args, cfg)
    system = model.system(args.lagrangian)
    monitors = {}
    for spec in args.monitor or []:
        if spec == "energy":
            monitors["energy"] = system.energy
        elif spec.startswith("expr:"):
            monitors[spec[5:]] = model.parse(spec[5:])
        else:
            raise UsageError(f"unknown monitor {spec!r} (use 'energy' or 'expr:<expression>')")
    return _run(model, system, _state(model, args), cfg, monitors)


def cmd_noether(args) -> int:
    cfg = _config(args)
    model = _load(args, cfg)
    system = model.system(args.lagrangian)
    X = model.section(args.section)
    h = model.function(args.h)
    K = model.parse(args.K) if args.K else None
    cert = noether_test(system, X, h, K, cfg.domain, tol=args.tol)
    out = {"section": [str(c) for c in X], "h": str(h), "residual": cert.residual,
           "passed": cert.passed}
    if cert.passed:
        out["conserved_quantity"] = str(cert.f)
    _emit(out)
    if not cert.passed:
        return EXIT_FAIL
    if args.simulate:
        return _run(model, system, _state(model, args), cfg, {"f": cert.f})
    return EXIT_OK


def cmd_equivalence(args) -> int:
    cfg = _config(args)
    model = _load(args, cfg)
    left, right = model.system(args.left), model.system(args.right)
    geo, geo_r = geometric_equiv(left, right, cfg.domain)
    try:
        dyn, dyn_r = dynamical_equiv(left, right, domain=cfg.domain)
    except SingularHessianError as exc:
        dyn, dyn_r = False, math.inf
        _emit({"warning": str(exc)})
    out = {"geometric": {"equivalent": geo, "residual": geo_r},
           "dynamical": {"equivalent": dyn, "residual": dyn_r},
           "gauge_by_theorem": geo and dyn}
    verdicts = [geo, dyn]
    if args.alpha is not None or args.v is not None:
        alpha = model.one_form(args.alpha) if args.alpha else tuple([0.0] * model.algebroid.p)
        V = model.function(args.v) if args.v else model.parse_base("0")
        chk = is_gauge_pair(left, right, GaugeData(alpha, V), cfg.domain)
        out["gauge_pair"] = {"passed": chk.passed, "residuals": chk.residuals}
        verdicts.append(chk.passed)
    _emit(out)
    return EXIT_OK if all(verdicts) else EXIT_FAIL


def cmd_nonnoether(args) -> int:
    cfg = _config(args)
    model = _load(args, cfg)
    left, right = model.system(args.left), model.system(args.right)
    group = nonnoether_monitors(left, right, cfg.domain, force=args.force)
    return _run(model, left, _state(model, args), cfg, groups=[group], columns=group.names)


def cmd_family(args) -> int:
    cfg = _config(args)
    model = _load(args, cfg)
    system = model.system(args.lagrangian)
    ts = _floats(args.times)
    try:
        rep = gauge_family(system, model.section(args.section), ts, h_flow=args.h_flow,
                           domain=cfg.domain, tol=args.tol)
    except HypothesisViolated as exc:
        _emit({"passed": False, "error": str(exc)})
        return EXIT_FAIL
    except FloatingPointError as exc:
        _emit({"status": "aborted", "reason": str(exc)})
        return EXIT_NUMERIC
    _emit({"beta": [str(b) for b in rep.beta], "W": str(rep.W),
           "hypothesis_residuals": rep.hypothesis_residuals,
           "family": [{"t": e.t, "passed": e.passed, **e.residuals} for e in rep.entries],
           "passed": rep.passed})
    return EXIT_OK if rep.passed else EXIT_FAIL


def _load(args, cfg: RunConfig) -> Model:
    model = load(args.model, cfg.overrides, force=args.force, domain=cfg.domain)
    if not model.validated:
        _emit({"warning": "model failed validation; results are unvalidated",
               "identities": model.report.as_dict()})
    return model


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model", help=f"model file or catalog name ({', '.join(CATALOG)})")
    common.add_argument("--param", action="append", type=_param, metavar="NAME=VALUE",
                        help="override a model parameter")
    common.add_argument("--force", action="store_true", help="continue with an unvalidated model")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=32)
    common.add_argument("--interval", help="sampling interval LO,HI (default -2,2)")
    common.add_argument("--atol", type=float, default=1e-9)
    common.add_argument("--rtol", type=float, default=1e-9)

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--x0", help="comma-separated base coordinates")
    run.add_argument("--y0", help="comma-separated fiber coordinates")
    run.add_argument("--t-end", type=float, default=10.0)
    run.add_argument("--dt", type=float, default=1e-3)
    run.add_argument("--out", type=Path, help="CSV output path")
    run.add_argument("--drift-tol", type=float, default=1e-7)

    ap = argparse.ArgumentParser(prog="liemech", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the algebroid identities")
    p.add_argument("--threshold", type=float, default=1e-8)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("show", parents=[common], help="print the model document")
    p.set_defaults(func=cmd_show)

    p = sub.add_parser("simulate", parents=[common, run], help="integrate the Euler-Lagrange flow")
    p.add_argument("--lagrangian", default="L")
    p.add_argument("--monitor", action="append", help="'energy' or 'expr:<expression>'")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("noether", parents=[common, run], help="test a complete-lift symmetry")
    p.add_argument("--lagrangian", default="L")
    p.add_argument("--section", required=True, help="section name or comma-separated components")
    p.add_argument("--h", default="0", help="function on the base (name or expression)")
    p.add_argument("--K", help="optional closed function added to the conserved quantity")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--simulate", action="store_true", help="also monitor the quantity along a trajectory")
    p.set_defaults(func=cmd_noether)

    p = sub.add_parser("equivalence", parents=[common], help="compare two Lagrangians")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--alpha", help="one-form (name or comma-separated components)")
    p.add_argument("--v", help="function on the base (name or expression)")
    p.set_defaults(func=cmd_equivalence)

    p = sub.add_parser("nonnoether", parents=[common, run], help="monitor char-poly invariants")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.set_defaults(func=cmd_nonnoether)

    p = sub.add_parser("family", parents=[common], help="check a one-parameter gauge family")
    p.add_argument("--lagrangian", default="L")
    p.add_argument("--section", required=True)
    p.add_argument("--times", required=True, help="comma-separated flow times")
    p.add_argument("--h-flow", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_family)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, SchemaError, FileNotFoundError, KeyError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelValidationError as exc:
        _emit({"error": str(exc), "identities": exc.report.as_dict()})
        return EXIT_FAIL
    except NotEquivalentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (SingularHessianError, UndecidableError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
