"""``casorati-check``: reports, tensor dumps and grid sweeps from the command line.

Exit codes: 0 when every reported inequality holds, 2 when at least one is
violated beyond the report tolerance, 1 on any error.  Errors are printed to
stderr together with the pipeline stage that raised them.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from . import casorati as cz
from . import expr as ex
from . import fixtures as fx
from . import numkit
from . import submersion as sm
from . import theorems as th

__all__ = ["main", "build_parser", "build_report", "tensor_dump", "sweep_rows", "SCHEMA", "HEALTH_RESIDUALS"]

SCHEMA = 1
EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

# residuals that measure the engine and the input, as opposed to alternative readings of formulas
HEALTH_RESIDUALS = (
    "projector",
    "frame_orthonormality",
    "frame_vertical_kernel",
    "riemannian_submersion",
    "metric_compatibility",
    "riemann_symmetry",
    "bianchi",
    "T_symmetry",
    "A_antisymmetry",
    "T_skew_adjoint",
    "A_skew_adjoint",
    "dual_route_tensors",
    "dual_route_delta",
    "bracket_antisymmetrized",
    "bracket_half",
    "mixed_curvature",
    "scalar_split",
    "decomposition_derived",
    "mixed_contracted",
    "gauss_fiber",
    "gauss_horizontal_vs_base",
)

SWEEP_COLUMNS = ("lhs", "rhs_delta", "rhs_hat", "gap_delta", "gap_hat", "equality_flags", "max_residual")


class CliError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class Source:
    name: str
    kind: str  # fixture | spec
    spec: sm.SubmersionSpec
    default_points: tuple[tuple[float, ...], ...]
    theorem: str


# --------------------------------------------------------------------------
# JSON helpers
# --------------------------------------------------------------------------


def _plain(obj: Any) -> Any:
    """Convert numpy containers and scalars to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise CliError("report", f"non-finite value {v!r} in report")
        return v
    return obj


def dumps(doc: Any) -> str:
    # json emits repr(float), the shortest string that round-trips binary64
    return json.dumps(_plain(doc), indent=2, allow_nan=False, ensure_ascii=False)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


def _kinds(arg: str | None, default: str) -> list[str]:
    if arg:
        return [k.strip() for k in arg.split(",") if k.strip()]
    return ["general"] if default == "general" else ["general", default]


def build_report(
    source: Source,
    point: Sequence[float],
    kinds: Sequence[str],
    *,
    tol: float = 1e-8,
    seed: int = numkit.DEFAULT_SEED,
) -> dict[str, Any]:
    """Full per-point report; raises on pipeline errors."""
    spec = source.spec
    an = sm.analyze(spec, point)
    doc: dict[str, Any] = {
        "schema": SCHEMA,
        "source": {"kind": source.kind, "name": source.name},
        "point": [float(v) for v in point],
        "ell": an.ell,
        "s": an.s,
        "base_point": an.base_point,
        "frame_pivots": {"vertical": an.frame.vertical_pivots, "horizontal": an.frame.horizontal_pivots},
        "norms": an.norms.as_dict(),
        "delta_N": an.tensors.delta_N,
        "mixed_sum": an.mixed_sum,
        "ambient_scalar": an.pack.scalar,
        "residuals": dict(an.residuals),
    }
    C_V, C_H = cz.casorati_curvatures(an)
    doc["casorati"] = {"C_V": C_V, "C_H": C_H}
    if an.fiber_scalar is not None:
        doc["fiber_scalar"] = an.fiber_scalar
    if an.ell < 2 or an.s < 2:
        doc["theorems"] = {}
        doc["notes"] = ["scalar curvatures need both distributions of dimension at least 2"]
        doc["max_residual"] = _max_residual(doc["residuals"])
        return doc
    sc = cz.scalar_curvatures(an)
    doc["scalar_curvatures"] = sc.as_dict()
    doc["residuals"].update(cz.scalar_identity_residuals(an, sc))
    doc["max_residual"] = _max_residual(doc["residuals"])

    models = th.models_for(spec, point)
    if models:
        mdocs = []
        for m in models:
            md: dict[str, Any] = {"kind": m.kind, "family": m.family, "declared": m.constants()}
            md["fitted"] = th.fit_constants(m, an.g, an.pack.riemann)
            if m.phi is not None:
                try:
                    md["structure"] = th.structure_quantities(m, an).as_dict()
                except ValueError as exc:  # pragma: no cover - defensive
                    md["structure_error"] = str(exc)
            mdocs.append(md)
        doc["space_forms"] = mdocs

    if an.ell < 3 or an.s < 3:
        doc["theorems"] = {}
        doc["notes"] = ["the inequalities need both distributions of dimension at least 3"]
        return doc
    cs = cz.delta_casorati(an, seed_value=seed)
    doc["casorati"] = cs.as_dict()
    doc["optimizer"] = cs.diagnostics
    doc["proof_polynomials"] = th.proof_polynomials(an, sc, cs)
    slant = dict(spec.slant) if spec.slant else None
    results: dict[str, Any] = {}
    for kind in kinds:
        params = slant
        if kind.startswith("corollary:") and slant is None:
            params = {}
        verdict, rhs = th.check_inequality(an, sc, cs, kind, models, params, tol)
        entry = verdict.as_dict()
        entry["rhs_detail"] = rhs.as_dict()
        results[kind] = entry
    doc["theorems"] = results
    return doc


def _max_residual(res: dict[str, float]) -> float:
    return max((float(v) for k, v in res.items() if k in HEALTH_RESIDUALS), default=0.0)


def _violated(doc: dict[str, Any]) -> bool:
    return any(e["verdict"] == "violated" for e in doc.get("theorems", {}).values())


def tensor_dump(source: Source, point: Sequence[float]) -> dict[str, Any]:
    an = sm.analyze(source.spec, point)
    t = an.tensors
    return {
        "schema": SCHEMA,
        "source": {"kind": source.kind, "name": source.name},
        "point": [float(v) for v in point],
        "ell": an.ell,
        "s": an.s,
        "frame": {
            "vertical": an.frame.V.T,
            "horizontal": an.frame.H.T,
            "vertical_pivots": an.frame.vertical_pivots,
            "horizontal_pivots": an.frame.horizontal_pivots,
        },
        # index order [i][j][alpha]
        "T_H": t.T_H,
        "A_V": t.A_V,
        "T_mixed": t.T_mixed,
        "A_mixed": t.A_mixed,
        "trace_T": t.trace_T,
        "trace_A": t.trace_A,
        "delta_N": t.delta_N,
        "norms": an.norms.as_dict(),
    }


# --------------------------------------------------------------------------
# sources and points
# --------------------------------------------------------------------------


def _validate_expressions(spec: sm.SubmersionSpec) -> None:
    """Parse every chart expression up front so syntax errors are attributed to the spec."""
    total = (spec.metric.values(), spec.map, spec.domain)
    base = (spec.base_metric.values(),)
    for names, groups in ((spec.coords, total), (spec.base_coords, base)):
        for group in groups:
            for text in group:
                unknown = ex.identifiers(ex.parse(str(text))) - set(names)
                if unknown:
                    raise ex.UnboundIdentifierError(f"{text!r} uses unknown coordinate(s) {sorted(unknown)}")


def _load_source(args) -> Source:
    if args.fixture:
        try:
            f = fx.get(args.fixture)
        except KeyError as exc:
            raise CliError("input", str(exc.args[0])) from None
        return Source(f.name, "fixture", f.spec, f.default_points, f.theorem)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("input", f"cannot read spec file: {exc}") from None
    try:
        spec = sm.SubmersionSpec.from_dict(doc)
        _validate_expressions(spec)
    except (KeyError, ValueError, TypeError, ex.ExprSyntaxError, ex.UnboundIdentifierError) as exc:
        raise CliError("spec", f"{type(exc).__name__}: {exc}") from None
    pts = tuple(tuple(float(v) for v in p) for p in doc.get("points", ()))
    theorem = str(doc.get("theorem", "general"))
    return Source(spec.name, "spec", spec, pts, theorem)


def _parse_point(text: str, n: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise CliError("input", f"cannot parse point {text!r}") from None
    if n is not None and len(vals) != n:
        raise CliError("input", f"point {text!r} has {len(vals)} coordinates, expected {n}")
    return vals


def _points(args, source: Source) -> list[tuple[float, ...]]:
    n = source.spec.n1
    if args.point:
        return [_parse_point(p, n) for p in args.point]
    if args.points:
        try:
            with open(args.points, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise CliError("input", f"cannot read points file: {exc}") from None
        try:
            data = json.loads(text)
            pts = [tuple(float(v) for v in p) for p in data]
        except json.JSONDecodeError:
            pts = [_parse_point(line, n) for line in text.splitlines() if line.strip() and not line.startswith("#")]
        for p in pts:
            if len(p) != n:
                raise CliError("input", f"point {list(p)} has {len(p)} coordinates, expected {n}")
        return pts
    if not source.default_points:
        raise CliError("input", "no point given and the source declares no default points")
    return [tuple(p) for p in source.default_points]


def _run_points(fn, points: Sequence, threads: int) -> list:
    if threads <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, points))  # map keeps the input order


def _grid(specs: Sequence[str], source: Source, base: Sequence[float]) -> list[tuple[float, ...]]:
    coords = list(source.spec.coords)
    axes: dict[int, np.ndarray] = {}
    for item in specs:
        try:
            name, rng = item.split("=", 1)
            lo, hi, count = rng.split(":")
            lo_f, hi_f, k = float(lo), float(hi), int(count)
        except ValueError:
            raise CliError("input", f"grid axis {item!r} must look like NAME=LO:HI:COUNT") from None
        name = name.strip()
        if name not in coords:
            raise CliError("input", f"grid axis names unknown coordinate {name!r}")
        if k < 0:
            raise CliError("input", f"grid axis {item!r} has a negative count")
        axes[coords.index(name)] = np.linspace(lo_f, hi_f, k) if k != 1 else np.array([lo_f])
    order = sorted(axes)
    pts = []
    for combo in itertools.product(*(axes[i] for i in order)):
        p = list(base)
        for i, v in zip(order, combo):
            p[i] = float(v)
        pts.append(tuple(p))
    return pts


def _flags_text(flags: dict[str, bool]) -> str:
    return ";".join(f"{k}={'true' if v else 'false'}" for k, v in flags.items())


def sweep_rows(source: Source, points: Iterable[Sequence[float]], kind: str, *, tol: float, seed: int, threads: int = 1):
    """Evaluate a point list; returns (header, rows, skipped)."""
    header = list(source.spec.coords) + list(SWEEP_COLUMNS)
    sub = sm.SubmersionMap(source.spec)
    pts = list(points)
    inside = [p for p in pts if sub.in_domain(p)]
    skipped = len(pts) - len(inside)

    def one(p):
        doc = build_report(source, p, [kind], tol=tol, seed=seed)
        e = doc["theorems"][kind]
        return [*p, e["lhs"], e["rhs_delta"], e["rhs_hat"], e["gap_delta"], e["gap_hat"],
                _flags_text(e["equality_flags"]), doc["max_residual"]], e["verdict"]

    out = _run_points(one, inside, threads)
    return header, [r for r, _ in out], skipped, [v for _, v in out]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_check(args, out) -> int:
    source = _load_source(args)
    points = _points(args, source)
    kinds = _kinds(args.theorem, source.theorem)
    reports = _run_points(lambda p: build_report(source, p, kinds, tol=args.tol, seed=args.seed), points, args.threads)
    if args.format == "csv":
        kind = kinds[0]
        rows = []
        for doc in reports:
            e = doc["theorems"].get(kind)
            if e is None:
                raise CliError("theorem", "; ".join(doc.get("notes", ["no theorem evaluated"])))
            rows.append([*doc["point"], e["lhs"], e["rhs_delta"], e["rhs_hat"], e["gap_delta"], e["gap_hat"],
                         _flags_text(e["equality_flags"]), doc["max_residual"]])
        out.write(_csv_text(list(source.spec.coords) + list(SWEEP_COLUMNS), rows))
    else:
        out.write(dumps({"schema": SCHEMA, "reports": reports}) + "\n")
    return EXIT_VIOLATION if any(_violated(d) for d in reports) else EXIT_OK


def cmd_tensors(args, out) -> int:
    source = _load_source(args)
    points = _points(args, source)
    docs = _run_points(lambda p: tensor_dump(source, p), points, args.threads)
    out.write(dumps({"schema": SCHEMA, "dumps": docs}) + "\n")
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    source = _load_source(args)
    if args.point:
        base = _parse_point(args.point[0], source.spec.n1)
    elif source.default_points:
        base = source.default_points[0]
    else:
        raise CliError("input", "sweep needs --point for the coordinates that are not swept")
    pts = _grid(args.grid or [], source, base) if args.grid else []
    kind = _kinds(args.theorem, source.theorem)[-1]
    header, rows, skipped, verdicts = sweep_rows(source, pts, kind, tol=args.tol, seed=args.seed, threads=args.threads)
    if skipped:
        print(f"skipped {skipped} grid point(s) outside the chart domain", file=sys.stderr)
    out.write(_csv_text(header, rows))
    return EXIT_VIOLATION if "violated" in verdicts else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="casorati-check",
        description="Check Casorati inequalities for Riemannian submersions given in charts.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_theorem=True):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--fixture", metavar="NAME", help=f"built-in fixture ({', '.join(fx.names())})")
        src.add_argument("--spec", metavar="FILE", help="submersion spec JSON file")
        pts = sp.add_mutually_exclusive_group()
        pts.add_argument("--point", metavar="CSV", action="append", help="comma-separated coordinates (repeatable)")
        pts.add_argument("--points", metavar="FILE", help="file with one CSV point per line, or a JSON list")
        if with_theorem:
            sp.add_argument(
                "--theorem",
                metavar="KIND",
                help="general|rsf|csf|gssf|corollary:CLASS, comma-separated for several "
                "(default: general plus the fixture's own theorem)",
            )
            sp.add_argument("--tol", type=float, default=1e-8, help="relative report tolerance (default 1e-8)")
            sp.add_argument("--seed", type=int, default=numkit.DEFAULT_SEED, help="seed for the sphere sampling")
        sp.add_argument("--threads", type=int, default=1, help="points evaluated in parallel (default 1)")

    c = sub.add_parser("check", help="full report per point")
    common(c)
    c.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("tensors", help="dump frames and O'Neill tensor components")
    common(t, with_theorem=False)
    t.set_defaults(func=cmd_tensors)

    s = sub.add_parser("sweep", help="CSV of inequality gaps over a coordinate grid")
    common(s)
    s.add_argument(
        "--grid",
        metavar="NAME=LO:HI:COUNT",
        action="append",
        help="swept coordinate (repeatable); other coordinates come from --point or the default point",
    )
    s.add_argument("--format", choices=("csv",), default="csv", help="output format (csv only)")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"error [{exc.stage}]: {exc}", file=sys.stderr)
    except sm.SubmersionError as exc:
        print(f"error {exc}", file=sys.stderr)
    except (ValueError, ArithmeticError, KeyError, np.linalg.LinAlgError) as exc:
        print(f"error [pipeline]: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
