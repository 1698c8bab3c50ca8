"""Command-line entry point: ``excursion-tails {gamma,simulate,maxdist,papertable}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import secrets
import shlex
import sys
import time
from dataclasses import asdict, dataclass
from importlib import metadata

from . import exact_dist
from .excursion_mc import SAMPLERS, McConfig, functional_samples, tail_from_samples
from .functionals import FunctionalId, FunctionalSpec, functional
from .variational import (
    SolverConfig,
    gamma_bounds,
    gamma_closed_form,
    gamma_max_direct,
    gamma_numeric,
    gamma_upper_bound_walpha,
)


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    seed: int | None
    n: int | None
    samples: int | None
    version: str
    timestamp: str

    @classmethod
    def build(cls, argv, seed=None, n=None, samples=None) -> RunManifest:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        t = time.gmtime(int(epoch)) if epoch else time.gmtime()
        return cls(
            command=shlex.join(["excursion-tails", *argv]),
            seed=seed,
            n=n,
            samples=samples,
            version=_version(),
            timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", t),
        )


# -- formatting -------------------------------------------------------------------


def _fmt(v, digits: int) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.{digits}g}"
    return str(v)


def _table(rows: list[dict], digits: int) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[_fmt(r.get(c), digits) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    lines += ["  ".join(x.ljust(w) for x, w in zip(row, widths)) for row in cells]
    return "\n".join(line.rstrip() for line in lines)


def _emit(args, manifest: RunManifest, rows: list[dict], out) -> None:
    man = asdict(manifest)
    print("# " + " ".join(f"{k}={_fmt(v, args.digits)}" for k, v in man.items()), file=out)
    print(_table(rows, args.digits), file=out)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"manifest": man, "rows": rows}, fh, indent=2, sort_keys=False)
            fh.write("\n")
    if args.csv:
        buf = io.StringIO()
        for k, v in man.items():
            buf.write(f"# {k}={v}\n")
        cols = list(rows[0]) if rows else []
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        with open(args.csv, "w") as fh:
            fh.write(buf.getvalue())


def _spec(args) -> FunctionalSpec:
    try:
        return functional(args.functional, args.alpha)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


# -- gamma ----------------------------------------------------------------------------


def _gamma_closed(spec: FunctionalSpec, n: int):
    if spec.id is FunctionalId.MAX:
        return gamma_max_direct(n)
    return gamma_closed_form(spec, n)


def _has_bounds(spec: FunctionalSpec) -> bool:
    return spec.id is FunctionalId.ZETA or (spec.id is FunctionalId.WALPHA and spec.alpha < 1)


def _gamma_row(res, closed: float | None = None) -> dict:
    row = {"functional": res.spec.name, "method": res.method, "gamma": res.gamma,
           "lo": res.lo, "hi": res.hi}
    if res.method == "numeric":
        row["converged"] = res.converged
        row["delta"] = None if closed is None else res.gamma - closed
    else:
        row["converged"] = None
        row["delta"] = None
    row["note"] = res.note
    return row


def cmd_gamma(args) -> tuple[list[dict], dict]:
    spec = _spec(args)
    methods = ["closed", "numeric", "bounds"] if args.method == "all" else [args.method]
    rows = []
    closed = None
    for m in methods:
        if m == "closed":
            res = _gamma_closed(spec, max(args.n, 8))
            closed = res.gamma
            rows.append(_gamma_row(res))
        elif m == "numeric":
            res = gamma_numeric(spec, SolverConfig(n=args.n, seed=args.seed or 0))
            rows.append(_gamma_row(res, closed))
        elif m == "bounds":
            if not _has_bounds(spec):
                if args.method == "bounds":
                    raise UsageError(f"{spec.name}: gamma is known exactly, no bounds available")
                continue
            rows.append(_gamma_row(gamma_bounds(spec)))
    return rows, {"n": args.n, "seed": args.seed}


# -- simulate ------------------------------------------------------------------------


def _best_gamma(spec: FunctionalSpec):
    """Point value when known exactly, else the bound interval ``(lo, hi)``."""
    if spec.id is FunctionalId.MAX:
        return 0.5
    if _has_bounds(spec):
        b = gamma_bounds(spec)
        return (b.lo, b.hi)
    return gamma_closed_form(spec, 8).gamma


def cmd_simulate(args) -> tuple[list[dict], dict]:
    spec = _spec(args)
    xs = args.x or []
    if not xs:
        raise UsageError("simulate needs at least one --x threshold")
    if any(not math.isfinite(x) or x < 0 for x in xs):
        raise UsageError("thresholds must be finite and nonnegative")
    try:
        cfg = McConfig(n=args.n, samples=args.samples, seed=args.seed,
                       sampler=args.sampler, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    gamma = _best_gamma(spec)
    values = functional_samples(spec, cfg)
    rows = []
    for x in xs:
        point = gamma if isinstance(gamma, float) else None
        est = tail_from_samples(values, x, point)
        row = {"functional": spec.name, "x": float(x), "p_hat": est.p_hat, "stderr": est.stderr,
               "ci_lo": est.ci_lo, "ci_hi": est.ci_hi, "n_samples": est.n_samples}
        if point is not None:
            row["gamma"] = point
            row["ratio"] = est.log_tail_ratio
            row["ratio_lo"] = row["ratio_hi"] = None
        else:
            lo, hi = gamma
            row["gamma"] = f"[{lo:.{args.digits}g}, {hi:.{args.digits}g}]"
            row["ratio"] = None
            if est.p_hat > 0 and x > 0:
                base = -math.log(est.p_hat) * 2 / (x * x)
                row["ratio_lo"], row["ratio_hi"] = base * lo * lo, base * hi * hi
            else:
                row["ratio_lo"] = row["ratio_hi"] = None
        row["flag"] = "below MC resolution" if est.below_resolution else (
            "few hits" if not est.reliable else "")
        if spec.id is FunctionalId.MAX and x > 0:
            row["exact_tail"] = exact_dist.tail_max(x)
        rows.append(row)
    return rows, {"n": cfg.n, "seed": cfg.seed, "samples": cfg.samples}


# -- maxdist -------------------------------------------------------------------------


def cmd_maxdist(args) -> tuple[list[dict], dict]:
    xs = args.x or []
    if not xs:
        raise UsageError("maxdist needs at least one --x value")
    if any(not (x > 0) or not math.isfinite(x) for x in xs):
        raise UsageError("maxdist needs finite x > 0")
    rows = []
    for x in xs:
        ev = exact_dist.cdf_max(x, args.tol)
        log_tail = exact_dist.log_tail_max(x, args.tol)
        tail = math.exp(log_tail) if x <= exact_dist.UNDERFLOW_X else 0.0
        rows.append({"x": float(x), "cdf": ev.cdf, "tail": tail, "trunc_bound": ev.trunc_bound,
                     "ratio": -log_tail / (2 * x * x)})
    return rows, {}


# -- papertable ----------------------------------------------------------------------

_TABLE_EXACT = [("max", None), ("area", None), ("xi", None), ("eta", None),
                ("walpha", 1.5), ("walpha", 2.0), ("walpha", 3.0)]
_TABLE_BOUNDS = [("zeta", None), ("walpha", 0.6), ("walpha", 0.75), ("walpha", 0.9)]


def cmd_papertable(args) -> tuple[list[dict], dict]:
    cfg = SolverConfig(n=args.n, seed=args.seed or 0)
    rows = []
    for name, alpha in _TABLE_EXACT:
        spec = functional(name, alpha)
        closed = _gamma_closed(spec, args.n).gamma
        num = gamma_numeric(spec, cfg)
        rows.append({"functional": spec.name, "closed": closed, "lo": None, "hi": None,
                     "factor": None, "numeric": num.gamma, "delta": num.gamma - closed,
                     "ok": abs(num.gamma - closed) <= 5e-3})
    for name, alpha in _TABLE_BOUNDS:
        spec = functional(name, alpha)
        b = gamma_bounds(spec)
        num = gamma_numeric(spec, cfg)
        factor = b.hi / b.lo
        ok = b.lo - 1e-3 <= num.gamma <= b.hi
        if spec.id is FunctionalId.WALPHA:
            ok = ok and factor <= 1.051
            assert math.isclose(b.hi, gamma_upper_bound_walpha(alpha))
        rows.append({"functional": spec.name, "closed": None, "lo": b.lo, "hi": b.hi,
                     "factor": factor, "numeric": num.gamma, "delta": None, "ok": ok})
    return rows, {"n": args.n, "seed": args.seed}


# -- parser ----------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", metavar="PATH", help="write rows and manifest as JSON")
    p.add_argument("--csv", metavar="PATH", help="write rows as CSV (manifest in # comments)")
    p.add_argument("--digits", type=int, default=7, metavar="K", help="significant digits (default 7)")


def _add_functional(p: argparse.ArgumentParser) -> None:
    p.add_argument("functional", choices=[f.value for f in FunctionalId])
    p.add_argument("--alpha", type=float, help="exponent for walpha (required iff walpha)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excursion-tails",
        description="Tail constants of Brownian excursion functionals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gamma", help="tail constant by closed form, ascent or bounds")
    _add_functional(g)
    g.add_argument("--method", choices=["closed", "numeric", "bounds", "all"], default="all")
    g.add_argument("--n", type=int, default=256, help="grid cells (default 256)")
    g.add_argument("--seed", type=int, default=None, help="seed for random restarts")
    _add_common(g)

    s = sub.add_parser("simulate", help="Monte Carlo tail probabilities")
    _add_functional(s)
    s.add_argument("--x", type=float, nargs="+", action="extend", required=True,
                   help="threshold(s); repeatable")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--seed", type=int, default=None, help="omit to draw one (it is printed)")
    s.add_argument("--sampler", choices=SAMPLERS, default="bessel_bridge_norm")
    s.add_argument("--workers", type=int, default=1)
    _add_common(s)

    m = sub.add_parser("maxdist", help="exact distribution of the excursion maximum")
    m.add_argument("--x", type=float, nargs="+", action="extend", required=True)
    m.add_argument("--tol", type=float, default=1e-15)
    _add_common(m)

    t = sub.add_parser("papertable", help="every gamma value and bound, with numeric confirmation")
    t.add_argument("--n", type=int, default=256)
    t.add_argument("--seed", type=int, default=None)
    _add_common(t)
    return parser


_COMMANDS = {"gamma": cmd_gamma, "simulate": cmd_simulate,
             "maxdist": cmd_maxdist, "papertable": cmd_papertable}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.seed is None:
        args.seed = secrets.randbits(32)
    if args.command in ("gamma", "simulate", "papertable") and args.n < 8:
        parser.error("--n must be at least 8")
    try:
        rows, info = _COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    manifest = RunManifest.build(argv, seed=info.get("seed"), n=info.get("n"),
                                 samples=info.get("samples"))
    _emit(args, manifest, rows, sys.stdout)
    failed = [r for r in rows if r.get("ok") is False or r.get("converged") is False]
    for r in failed:
        print(f"failed row: {r.get('functional')}", file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
