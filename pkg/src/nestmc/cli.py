"""Command-line front end: run experiments, emit CSV or JSON reports.

Subcommands map one-to-one onto harness runners: converge, bias, allocate,
collapse, plus a models listing.  Same command line and seed always produce
byte-identical output, regardless of --workers.

Exit codes: 0 success, 2 usage or config error, 3 statistical-degeneracy
warning (more than 10% of convergence rows flagged).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from . import __version__
from .allocation import TauPower, budget_grid, parse_policy
from .harness import (ConvergenceReport, SlopeFit, compare_policies, run_bias,
                      run_collapsed_convergence, run_convergence)
from .models import CATALOG, MODEL_TAGS
from .problem import NestedProblem
from .rng import make_root

__all__ = ["RunConfig", "main", "cmd_converge", "cmd_bias", "cmd_allocate",
           "cmd_collapse", "cmd_models"]

_CONVERGE_COLS = ["T", "N", "M", "reps", "mean", "mse", "mse_se", "degenerate_frac"]
_BIAS_COLS = ["M", "N", "reps", "mean_error", "se", "predicted"]
_ALLOCATE_COLS = ["policy", "N", "M", "mse", "mse_se", "rank"]
_COLLAPSE_COLS = ["estimator"] + _CONVERGE_COLS


@dataclass(frozen=True)
class RunConfig:
    """Parsed command line; field values keep their flag spellings.

    Grid and schedule flags stay as strings so that serializing with
    to_args() and reparsing yields an equal config.
    """

    sub: str
    action: Optional[str] = None
    model: Optional[str] = None
    policy: Optional[str] = None
    policies: Optional[str] = None
    budgets: Optional[str] = None
    Ms: Optional[str] = None
    N: Optional[int] = None
    T: Optional[int] = None
    reps: int = 1000
    seed: Optional[int] = None
    out: Optional[str] = None
    fmt: str = "csv"
    drop_smallest: int = 0
    rep_schedule: Optional[str] = None
    workers: int = 1

    @classmethod
    def parse(cls, argv: Optional[Sequence[str]] = None) -> "RunConfig":
        ns = _build_parser().parse_args(argv)
        kwargs = {}
        for f in dataclasses.fields(cls):
            if hasattr(ns, f.name):
                kwargs[f.name] = getattr(ns, f.name)
        return cls(**kwargs)

    def to_args(self) -> List[str]:
        args = [self.sub]
        if self.sub == "models":
            return args + [self.action or "list"]
        args += ["--model", self.model or ""]
        if self.sub == "converge":
            args += ["--policy", self.policy or "", "--budgets", self.budgets or ""]
        elif self.sub == "bias":
            args += ["--N", str(self.N), "--Ms", self.Ms or ""]
        elif self.sub == "allocate":
            args += ["--T", str(self.T), "--policies", self.policies or ""]
        elif self.sub == "collapse":
            args += ["--budgets", self.budgets or ""]
        if self.sub in ("converge", "collapse"):
            args += ["--drop-smallest", str(self.drop_smallest)]
            if self.rep_schedule is not None:
                args += ["--rep-schedule", self.rep_schedule]
        args += ["--reps", str(self.reps)]
        if self.seed is not None:
            args += ["--seed", str(self.seed)]
        if self.out is not None:
            args += ["--out", self.out]
        args += ["--format", self.fmt, "--workers", str(self.workers)]
        return args


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nestmc",
        description="Nested Monte Carlo experiments: convergence, bias, allocation.")
    sub = ap.add_subparsers(dest="sub", required=True)

    def common(sp):
        sp.add_argument("--reps", type=int, default=1000, help="replications per row")
        sp.add_argument("--seed", type=int, default=None,
                        help="root seed (default: $NESTMC_SEED, else 0)")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
        sp.add_argument("--workers", type=int, default=1,
                        help="worker threads; output is identical for any value")

    c = sub.add_parser("converge", help="MSE vs total budget under one policy")
    c.add_argument("--model", required=True)
    c.add_argument("--policy", default="tau:alpha=1,c=1",
                   help="tau:alpha=A,c=C | fixed-inner:M=K | fixed-outer:N=K")
    c.add_argument("--budgets", required=True,
                   help="lo:hi:points (geometric) or comma list")
    c.add_argument("--drop-smallest", dest="drop_smallest", type=int, default=0,
                   help="exclude this many smallest budgets from the slope fit")
    c.add_argument("--rep-schedule", dest="rep_schedule", default=None,
                   help="per-budget replication overrides, e.g. 65536:200,262144:100")
    common(c)

    b = sub.add_parser("bias", help="mean error vs inner count at fixed N")
    b.add_argument("--model", required=True)
    b.add_argument("--N", type=int, required=True)
    b.add_argument("--Ms", required=True, help="lo:hi:points or comma list")
    common(b)

    a = sub.add_parser("allocate", help="rank policies at one budget (CRN)")
    a.add_argument("--model", required=True)
    a.add_argument("--T", type=int, required=True)
    a.add_argument("--policies", required=True, help="semicolon-separated policy specs")
    common(a)

    k = sub.add_parser("collapse", help="nested vs collapsed estimator on a linear model")
    k.add_argument("--model", required=True)
    k.add_argument("--budgets", required=True, help="lo:hi:points or comma list")
    k.add_argument("--drop-smallest", dest="drop_smallest", type=int, default=0)
    k.add_argument("--rep-schedule", dest="rep_schedule", default=None)
    common(k)

    m = sub.add_parser("models", help="list the model catalog")
    m.add_argument("action", nargs="?", choices=["list"], default="list")
    return ap


def _resolve_seed(cfg: RunConfig) -> int:
    if cfg.seed is not None:
        return cfg.seed
    env = os.environ.get("NESTMC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"NESTMC_SEED must be an integer, got {env!r}") from None
    return 0


def _get_model(name: Optional[str]) -> NestedProblem:
    if name not in CATALOG:
        known = ", ".join(sorted(CATALOG))
        raise ValueError(f"unknown model {name!r}; known models: {known}")
    return CATALOG[name]()


def _parse_grid(spec: Optional[str]) -> List[int]:
    if not spec:
        raise ValueError("empty grid")
    parts = spec.split(":")
    if len(parts) == 3:
        lo, hi, points = (int(x) for x in parts)
        return budget_grid(lo, hi, points)
    if len(parts) == 1:
        vals = [int(x) for x in spec.split(",") if x.strip() != ""]
        if not vals:
            raise ValueError(f"empty grid {spec!r}")
        return vals
    raise ValueError(f"grid must be lo:hi:points or a comma list, got {spec!r}")


def _parse_schedule(spec: Optional[str]) -> Optional[Dict[int, int]]:
    if spec is None:
        return None
    sched: Dict[int, int] = {}
    for item in spec.split(","):
        T_str, sep, R_str = item.partition(":")
        if not sep:
            raise ValueError(f"rep schedule entries are T:R, got {item!r}")
        sched[int(T_str)] = int(R_str)
    return sched


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "degenerate"
    return str(v)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence], comments: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    for line in comments:
        buf.write(line + "\n")
    return buf.getvalue()


def _jnum(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return v


def _fit_dict(fit: Optional[SlopeFit]):
    if fit is None:
        return None
    return {"slope": fit.slope, "intercept": fit.intercept,
            "residual_rms": fit.residual_rms, "points_used": fit.points_used}


def _metadata(model: str, policy: Optional[str], seed: int) -> dict:
    return {"model": model, "policy": policy, "seed": seed, "version": __version__}


def _json_text(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _slope_comment(fit: Optional[SlopeFit], note: str, label: str = "slope") -> str:
    if fit is None:
        return f"# {label}=none note={note}"
    return f"# {label}={fit.slope!r} intercept={fit.intercept!r}"


def _slope_stdout(fit: Optional[SlopeFit], note: str) -> str:
    if fit is None:
        return f"slope=none ({note})"
    return f"slope={fit.slope!r}"


def _converge_rows(report: ConvergenceReport) -> List[list]:
    return [[r.T, r.N, r.M, r.reps, r.mean, r.mse, r.mse_se, r.degenerate_frac]
            for r in report.rows]


def _converge_json_rows(report: ConvergenceReport) -> List[dict]:
    return [{k: _jnum(v) for k, v in zip(_CONVERGE_COLS, row)}
            for row in _converge_rows(report)]


def cmd_converge(cfg: RunConfig) -> int:
    p = _get_model(cfg.model)
    policy = parse_policy(cfg.policy or "")
    seed = _resolve_seed(cfg)
    report = run_convergence(p, policy, _parse_grid(cfg.budgets), cfg.reps,
                             make_root(seed), rep_schedule=_parse_schedule(cfg.rep_schedule),
                             drop_smallest=cfg.drop_smallest, workers=cfg.workers)
    if cfg.fmt == "json":
        text = _json_text({"metadata": _metadata(report.model, policy.name, seed),
                           "rows": _converge_json_rows(report),
                           "fit": _fit_dict(report.fit),
                           "fit_note": report.fit_note})
    else:
        text = _csv_text(_CONVERGE_COLS, _converge_rows(report),
                         [_slope_comment(report.fit, report.fit_note)])
    _emit(text, cfg.out)
    if cfg.out is not None:
        print(_slope_stdout(report.fit, report.fit_note))
    flagged = sum(1 for r in report.rows if r.flagged)
    return 3 if flagged > 0.10 * len(report.rows) else 0


def cmd_bias(cfg: RunConfig) -> int:
    p = _get_model(cfg.model)
    seed = _resolve_seed(cfg)
    if cfg.N is None:
        raise ValueError("bias needs --N")
    report = run_bias(p, cfg.N, _parse_grid(cfg.Ms), cfg.reps, make_root(seed),
                      workers=cfg.workers)
    rows = [[r.M, r.N, r.reps, r.mean_error, r.se, r.predicted] for r in report.rows]
    if cfg.fmt == "json":
        text = _json_text({"metadata": _metadata(report.model, None, seed),
                           "rows": [{k: _jnum(v) for k, v in zip(_BIAS_COLS, row)}
                                    for row in rows],
                           "fit": _fit_dict(report.fit),
                           "fit_note": report.fit_note})
    else:
        text = _csv_text(_BIAS_COLS, rows, [_slope_comment(report.fit, report.fit_note)])
    _emit(text, cfg.out)
    if cfg.out is not None:
        print(_slope_stdout(report.fit, report.fit_note))
    return 0


def cmd_allocate(cfg: RunConfig) -> int:
    p = _get_model(cfg.model)
    seed = _resolve_seed(cfg)
    specs = [x for x in (cfg.policies or "").split(";") if x.strip()]
    if not specs:
        raise ValueError("allocate needs at least one policy in --policies")
    policies = [parse_policy(x.strip()) for x in specs]
    if cfg.T is None:
        raise ValueError("allocate needs --T")
    ranking = compare_policies(p, cfg.T, policies, cfg.reps, make_root(seed),
                               workers=cfg.workers)
    rows = [[r.policy.name, r.N, r.M, r.mse, r.mse_se, r.rank] for r in ranking.results]
    policy_meta = ";".join(pol.name for pol in policies)
    if cfg.fmt == "json":
        text = _json_text({"metadata": _metadata(ranking.model, policy_meta, seed),
                           "rows": [{k: _jnum(v) for k, v in zip(_ALLOCATE_COLS, row)}
                                    for row in rows],
                           "tie": ranking.tie})
    else:
        comments = ["# tie=true"] if ranking.tie else []
        text = _csv_text(_ALLOCATE_COLS, rows, comments)
    _emit(text, cfg.out)
    return 0


def cmd_collapse(cfg: RunConfig) -> int:
    p = _get_model(cfg.model)
    if p.linear_g is None:
        raise ValueError(f"model {p.name!r} has no linear integrand decomposition; "
                         "the collapsed estimator does not apply")
    seed = _resolve_seed(cfg)
    root = make_root(seed)
    budgets = _parse_grid(cfg.budgets)
    schedule = _parse_schedule(cfg.rep_schedule)
    # child 0 drives the collapsed sweep, child 1 the nested one
    collapsed = run_collapsed_convergence(p, budgets, cfg.reps, root.split(0),
                                          rep_schedule=schedule,
                                          drop_smallest=cfg.drop_smallest,
                                          workers=cfg.workers)
    nested = run_convergence(p, TauPower(1, 1), budgets, cfg.reps, root.split(1),
                             rep_schedule=schedule, drop_smallest=cfg.drop_smallest,
                             workers=cfg.workers)
    rows = ([["collapsed"] + row for row in _converge_rows(collapsed)]
            + [["nested"] + row for row in _converge_rows(nested)])
    if cfg.fmt == "json":
        text = _json_text({"metadata": _metadata(p.name, TauPower(1, 1).name, seed),
                           "rows": [{k: _jnum(v) for k, v in zip(_COLLAPSE_COLS, row)}
                                    for row in rows],
                           "collapsed_fit": _fit_dict(collapsed.fit),
                           "collapsed_fit_note": collapsed.fit_note,
                           "nested_fit": _fit_dict(nested.fit),
                           "nested_fit_note": nested.fit_note})
    else:
        text = _csv_text(_COLLAPSE_COLS, rows,
                         [_slope_comment(collapsed.fit, collapsed.fit_note, "collapsed_slope"),
                          _slope_comment(nested.fit, nested.fit_note, "nested_slope")])
    _emit(text, cfg.out)
    if cfg.out is not None:
        print("collapsed_" + _slope_stdout(collapsed.fit, collapsed.fit_note))
        print("nested_" + _slope_stdout(nested.fit, nested.fit_note))
    return 0


def cmd_models(cfg: RunConfig) -> int:
    lines = []
    for name in sorted(CATALOG):
        p = CATALOG[name]()
        truth = "none" if p.truth is None else f"{float(p.truth):.6f}"
        tags = MODEL_TAGS.get(name, "")
        lines.append(f"{name:16s} truth={truth:12s} tags={tags}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


_DISPATCH = {
    "converge": cmd_converge,
    "bias": cmd_bias,
    "allocate": cmd_allocate,
    "collapse": cmd_collapse,
    "models": cmd_models,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = RunConfig.parse(argv)
    except SystemExit as e:
        code = e.code
        return code if isinstance(code, int) else 2
    try:
        return _DISPATCH[cfg.sub](cfg)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
