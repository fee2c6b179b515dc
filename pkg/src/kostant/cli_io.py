"""Spec ingestion, canonical report JSON/CSV and the ``kostant`` command line."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Optional

import numpy as np

from . import circle_action as C
from .bohr_sommerfeld import (BSFibreRecord, Polytope, PolytopeError, Regularity, WindowError,
                              enumerate_bs_fibres)
from .models import Convention, Kind, ModelError, ModelSpec, make_model
from .numerics import NumericsConfig
from .quantisation import (AlmostToric4, DescriptorError, DirectSum, FibrationDescriptor,
                           FiniteDim, FunctionSpace, LagrangianBundle, MarkedPoint, ModelChart,
                           NoTheoremError, QuantisationReport, ToricPolytope, Unresolved, Zero,
                           quantise)
from .verify import SUITES, run_suites

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class SpecError(ValueError):
    """Schema violation, reported with the JSON path of the offending field."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


@dataclass(frozen=True)
class RunConfig:
    fd_step: float = 1e-3
    quadrature_steps: int = 2048
    ode_tol: float = 1e-10
    eq_tol: float = 1e-6
    seed: int = 42
    samples: int = 100
    tol: float = 1e-6
    disk_convention: str = Convention.TRANSPORT_ORACLE.value
    output: Optional[str] = None
    csv: bool = False

    def numerics(self) -> NumericsConfig:
        return NumericsConfig(self.fd_step, self.quadrature_steps, self.ode_tol, self.eq_tol)

    def echo(self) -> dict:
        """Fields that influence results (the output path does not)."""
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in ("output", "csv")}


# --------------------------------------------------------------------------
# spec parsing

_MODEL_KINDS = {k.value for k in Kind} - {Kind.TORIC_POLYTOPE.value}
_DESCRIPTOR_KINDS = _MODEL_KINDS | {"toric_polytope", "lagrangian_bundle", "almost_toric4"}


def _require(obj, key, path, kinds):
    if key not in obj:
        raise SpecError(f"{path}.{key}", "required field missing")
    return _typed(obj[key], f"{path}.{key}", kinds)


def _typed(value, path, kinds):
    if isinstance(value, bool) and bool not in kinds:
        raise SpecError(path, f"expected {'/'.join(k.__name__ for k in kinds)}, got bool")
    if not isinstance(value, kinds):
        raise SpecError(path, f"expected {'/'.join(k.__name__ for k in kinds)}, "
                              f"got {type(value).__name__}")
    return value


def _int(obj, key, path, default=None):
    if key not in obj:
        if default is None:
            raise SpecError(f"{path}.{key}", "required field missing")
        return default
    return _typed(obj[key], f"{path}.{key}", (int,))


def _check_keys(obj, allowed, path):
    for key in obj:
        if key not in allowed:
            raise SpecError(f"{path}.{key}", f"unknown field (allowed: {', '.join(sorted(allowed))})")


def _number(v, path):
    if v is None:
        return None
    _typed(v, path, (int, float))
    if not math.isfinite(v):
        raise SpecError(path, "must be finite")
    return v


def _window(obj, path):
    if obj is None:
        return None
    _typed(obj, path, (dict,))
    out = {}
    for key, iv in obj.items():
        p = f"{path}.{key}"
        if iv is None:
            out[key] = None
            continue
        _typed(iv, p, (list,))
        if len(iv) != 2:
            raise SpecError(p, "interval must be [lo, hi] (null for unbounded)")
        out[key] = [_number(iv[0], f"{p}[0]"), _number(iv[1], f"{p}[1]")]
    return out


def _offsets(obj, path):
    if obj is None:
        return None
    _typed(obj, path, (dict,))
    return {k: float(_number(v, f"{path}.{k}")) for k, v in obj.items()}


def _polytope(obj, path):
    rows = _require(obj, "halfspaces", path, (list,))
    p = f"{path}.halfspaces"
    if not rows:
        raise SpecError(p, "at least one halfspace required")
    for r, row in enumerate(rows):
        _typed(row, f"{p}[{r}]", (list,))
        for c, v in enumerate(row):
            if isinstance(v, str):
                try:
                    Fraction(v)
                except (ValueError, ZeroDivisionError):
                    raise SpecError(f"{p}[{r}][{c}]", f"not a rational number: {v!r}")
            else:
                _number(v, f"{p}[{r}][{c}]")
    try:
        poly = Polytope.from_rows(rows)
        poly.bounding_box()
    except PolytopeError as exc:
        raise SpecError(p, str(exc)) from None
    return poly


def _model_spec(obj, path) -> ModelSpec:
    _typed(obj, path, (dict,))
    kind = _require(obj, "kind", path, (str,))
    if kind not in _MODEL_KINDS:
        raise SpecError(f"{path}.kind", f"unknown model kind {kind!r} "
                                        f"(expected one of {', '.join(sorted(_MODEL_KINDS))})")
    kind = Kind(kind)
    if kind is Kind.CYLINDER:
        spec = ModelSpec.cylinder()
    elif kind is Kind.DISK:
        spec = ModelSpec.disk()
    elif kind is Kind.FOCUS_FOCUS:
        spec = ModelSpec.focus_focus()
    elif kind is Kind.LINEAR:
        spec = ModelSpec.linear(_int(obj, "n", path))
    elif kind in (Kind.LIOUVILLE, Kind.ELLIPTIC):
        spec = ModelSpec(kind, _int(obj, "n", path), _int(obj, "k", path))
    else:
        left = _model_spec(_require(obj, "left", path, (dict,)), f"{path}.left")
        right = _model_spec(_require(obj, "right", path, (dict,)), f"{path}.right")
        spec = ModelSpec.product(left, right)
    try:
        spec.validate()
    except ModelError as exc:
        msg = str(exc)
        if "k <= n" in msg or "n must be" in msg:
            msg = f"invalid (n,k): {msg}"
        raise SpecError(path, msg) from None
    return spec


_COMMON = {"kind", "schema_version", "window", "compact", "zero_fibre_bs", "offsets"}


def parse_spec(text) -> FibrationDescriptor:
    """Validated descriptor from a JSON document (string or parsed object)."""
    if isinstance(text, (str, bytes)):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"$ (line {exc.lineno}, column {exc.colno})",
                            f"invalid JSON: {exc.msg}") from None
    else:
        obj = text
    path = "$"
    _typed(obj, path, (dict,))
    version = obj.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpecError(f"{path}.schema_version", f"unsupported version {version!r}")
    kind = _require(obj, "kind", path, (str,))
    if kind not in _DESCRIPTOR_KINDS:
        raise SpecError(f"{path}.kind", f"unknown kind {kind!r} "
                                        f"(expected one of {', '.join(sorted(_DESCRIPTOR_KINDS))})")
    window = _window(obj.get("window"), f"{path}.window")
    offsets = _offsets(obj.get("offsets"), f"{path}.offsets")
    zero_bs = _typed(obj.get("zero_fibre_bs", True), f"{path}.zero_fibre_bs", (bool,))
    compact_default = kind in ("toric_polytope", "almost_toric4", "lagrangian_bundle")
    compact = _typed(obj.get("compact", compact_default), f"{path}.compact", (bool,))

    if kind == "toric_polytope":
        _check_keys(obj, _COMMON | {"halfspaces"}, path)
        base = ToricPolytope(_polytope(obj, path))
    elif kind == "almost_toric4":
        _check_keys(obj, _COMMON | {"halfspaces", "ff_points"}, path)
        poly = _polytope(obj, path)
        marks = []
        for i, mp in enumerate(obj.get("ff_points", [])):
            p = f"{path}.ff_points[{i}]"
            _typed(mp, p, (dict,))
            pt = _require(mp, "point", p, (list,))
            try:
                pt = tuple(Fraction(v) if isinstance(v, str) else _fraction_of(v) for v in pt)
            except (ValueError, ZeroDivisionError, TypeError):
                raise SpecError(f"{p}.point", "coordinates must be numbers or rational strings")
            mult = _int(mp, "multiplicity", p, default=1)
            if mult < 1:
                raise SpecError(f"{p}.multiplicity", "must be an integer >= 1")
            marks.append(MarkedPoint(pt, mult))
        base = AlmostToric4(poly, tuple(marks))
    elif kind == "lagrangian_bundle":
        _check_keys(obj, _COMMON | {"k", "base_dim", "bs_count"}, path)
        base = LagrangianBundle(_int(obj, "k", path), _int(obj, "base_dim", path),
                                _int(obj, "bs_count", path))
    else:
        _check_keys(obj, _COMMON | {"n", "k", "left", "right"}, path)
        base = ModelChart(_model_spec(obj, path))
    desc = FibrationDescriptor(base, compact, zero_bs, window, offsets)
    try:
        desc.validate()
    except (DescriptorError, ModelError) as exc:
        raise SpecError(path, str(exc)) from None
    return desc


def _fraction_of(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError
    return Fraction(v) if isinstance(v, int) else Fraction(repr(float(v)))


# --------------------------------------------------------------------------
# canonical JSON


def _float_text(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("non-finite number in report")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def canonical_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, two-space indent, 17-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float_text(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {canonical_json(v, indent + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(canonical_json(v) for v in obj) + "]"
        items = [inner + canonical_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def entry_to_json(entry):
    if isinstance(entry, Zero):
        return {"zero": {}}
    if isinstance(entry, FiniteDim):
        return {"finite": entry.count}
    if isinstance(entry, FunctionSpace):
        return {"function_space": {"base_dim": entry.base_dim, "copies": entry.copies}}
    if isinstance(entry, Unresolved):
        return {"unresolved": {"reason": entry.reason,
                               "point": None if entry.point is None else list(entry.point),
                               "multiplicity": entry.multiplicity}}
    if isinstance(entry, DirectSum):
        return {"sum": [entry_to_json(p) for p in entry.parts]}
    raise TypeError(f"unknown entry {entry!r}")


def entry_from_json(obj, path="$"):
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SpecError(path, "entry must be an object with exactly one key")
    (key, val), = obj.items()
    if key == "zero":
        return Zero()
    if key == "finite":
        return FiniteDim(int(val))
    if key == "function_space":
        return FunctionSpace(int(val["base_dim"]), int(val["copies"]))
    if key == "unresolved":
        pt = val.get("point")
        return Unresolved(val["reason"], None if pt is None else tuple(float(v) for v in pt),
                          int(val.get("multiplicity", 1)))
    if key == "sum":
        return DirectSum(tuple(entry_from_json(p, f"{path}.sum[{i}]") for i, p in enumerate(val)))
    raise SpecError(path, f"unknown entry type {key!r}")


def _label_json(v):
    if v is None or isinstance(v, int):
        return v
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    return float(v)


def report_to_json(rep: QuantisationReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "source": rep.source,
        "dimension": rep.dimension,
        "per_degree": {str(d): entry_to_json(e) for d, e in sorted(rep.per_degree.items())},
        "bs_fibres": [{"label": [_label_json(v) for v in r.label],
                       "regularity": str(r.regularity), "fibre_dim": r.fibre_dim}
                      for r in rep.bs_fibres],
        "convention_notes": list(rep.convention_notes),
        "h0_witness": rep.h0_witness,
        "config_echo": rep.config_echo,
    }


def emit_report(rep: QuantisationReport) -> str:
    return canonical_json(report_to_json(rep)) + "\n"


def parse_report(text: str) -> QuantisationReport:
    obj = json.loads(text)
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise SpecError("$.schema_version", f"unsupported version {obj.get('schema_version')!r}")
    per_degree = {int(d): entry_from_json(e, f"$.per_degree.{d}")
                  for d, e in obj["per_degree"].items()}
    records = [BSFibreRecord(tuple(r["label"]), Regularity.parse(r["regularity"]),
                             int(r["fibre_dim"])) for r in obj["bs_fibres"]]
    return QuantisationReport(per_degree, records, list(obj["convention_notes"]),
                              dict(obj.get("config_echo") or {}), obj.get("h0_witness"),
                              obj.get("source", ""), int(obj.get("dimension", 0)))


def report_csv(rep: QuantisationReport, names=None) -> str:
    """One BS record per line: ``label...,regularity,fibre_dim`` after a header."""
    width = max((len(r.label) for r in rep.bs_fibres), default=0)
    names = list(names) if names else [f"label{i + 1}" for i in range(width)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + ["regularity", "fibre_dim"])
    for r in rep.bs_fibres:
        w.writerow(["" if v is None else _csv_num(v) for v in r.label]
                   + [str(r.regularity), r.fibre_dim])
    return buf.getvalue()


def _csv_num(v):
    return str(v) if isinstance(v, int) else _float_text(float(v))


def _moment_names(desc: FibrationDescriptor, convention):
    base = desc.base
    if isinstance(base, ModelChart):
        return list(make_model(base.spec, convention).moment_names)
    if isinstance(base, (ToricPolytope, AlmostToric4)):
        poly = base.polytope
        return [f"x{i + 1}" for i in range(poly.dimension)]
    return None


# --------------------------------------------------------------------------
# runners


def run_quantise(spec, cfg: RunConfig = RunConfig()) -> QuantisationReport:
    """Quantise a spec (JSON text, parsed object or descriptor); writes
    ``cfg.output`` (and ``<output>.csv`` when ``cfg.csv``) if set."""
    desc = spec if isinstance(spec, FibrationDescriptor) else parse_spec(spec)
    rep = quantise(desc, convention=cfg.disk_convention, seed=cfg.seed)
    rep.config_echo = cfg.echo()
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(emit_report(rep))
        if cfg.csv:
            with open(_csv_path(cfg.output), "w", encoding="utf-8") as fh:
                fh.write(report_csv(rep, _moment_names(desc, cfg.disk_convention)))
    return rep


def _csv_path(out: str) -> str:
    return (out[:-5] if out.endswith(".json") else out) + ".csv"


def run_verify(suite: str, cfg: RunConfig = RunConfig()) -> dict:
    """Residual table of a verification suite; ``passed`` is the overall verdict."""
    cases = run_suites(suite, cfg.seed, cfg.samples, cfg.tol, cfg.numerics())
    return {"schema_version": SCHEMA_VERSION, "suite": suite, "config_echo": cfg.echo(),
            "passed": all(c.passed for c in cases),
            "cases": [{"name": c.name, "residual": float(c.residual), "tol": float(c.tol),
                       "passed": c.passed} for c in cases]}


# --------------------------------------------------------------------------
# command line

_MODEL_FLAGS = {"cylinder": ModelSpec.cylinder, "disk": ModelSpec.disk,
                "focus_focus": ModelSpec.focus_focus}

DIVISION_FUNCTIONS = {
    "cos": lambda P: np.cos(P[..., 0]) + 0j,
    "gauss": lambda P: np.exp(-np.sum(P ** 2, axis=-1)) + 0j,
    "wave": lambda P: np.exp(1j * P[..., 0] - P[..., 1] ** 2),
    "poly": lambda P: (1 + P[..., 0] * P[..., 1]) + 0j,
}


def _add_numerics(p):
    p.add_argument("--fd-step", type=float, default=RunConfig.fd_step)
    p.add_argument("--quadrature-steps", type=int, default=RunConfig.quadrature_steps)
    p.add_argument("--ode-tol", type=float, default=RunConfig.ode_tol)
    p.add_argument("--eq-tol", type=float, default=RunConfig.eq_tol)
    p.add_argument("--seed", type=int, default=RunConfig.seed)
    p.add_argument("--disk-convention", choices=[c.value for c in Convention],
                   default=RunConfig.disk_convention)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kostant",
                                     description="Kostant-complex quantisation toolkit")
    sub = parser.add_subparsers(dest="verb", required=True)

    q = sub.add_parser("quantise", help="quantisation report for a JSON spec")
    q.add_argument("spec", help="path to a JSON spec ('-' for stdin)")
    q.add_argument("--out", help="write the report here instead of stdout")
    q.add_argument("--csv", action="store_true", help="also write BS records as CSV")
    _add_numerics(q)

    h = sub.add_parser("holonomy", help="holonomy of an orbit")
    h.add_argument("--model", required=True, choices=sorted(_MODEL_FLAGS))
    h.add_argument("--point", required=True, help="comma separated chart coordinates")
    h.add_argument("--generator", type=int, default=None)
    h.add_argument("--oracle", action="store_true", help="also integrate parallel transport")
    _add_numerics(h)

    b = sub.add_parser("bs", help="enumerate Bohr-Sommerfeld fibres")
    b.add_argument("--spec", required=True, help="path to a JSON spec")
    b.add_argument("--window", action="append", default=[],
                   help="NAME=LO:HI (empty side for unbounded); repeatable")
    b.add_argument("--csv", action="store_true")
    _add_numerics(b)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", default="all", choices=list(SUITES) + ["all"])
    v.add_argument("--samples", type=int, default=RunConfig.samples)
    v.add_argument("--tol", type=float, default=RunConfig.tol)
    v.add_argument("--out")
    _add_numerics(v)

    d = sub.add_parser("divide", help="divide (Q^-1 - 1) g by the holonomy factor")
    d.add_argument("--model", default="disk", choices=["disk"])
    d.add_argument("--fn", required=True, choices=sorted(DIVISION_FUNCTIONS))
    d.add_argument("--points", default="0.7,0.4;0,0;1.41421356237309515,0",
                   help="semicolon separated points")
    _add_numerics(d)
    return parser


def _config(args, **extra) -> RunConfig:
    kw = dict(fd_step=args.fd_step, quadrature_steps=args.quadrature_steps,
              ode_tol=args.ode_tol, eq_tol=args.eq_tol, seed=args.seed,
              disk_convention=args.disk_convention)
    kw.update(extra)
    return RunConfig(**kw)


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _parse_point(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise SpecError("--point", f"not a comma separated list of numbers: {text!r}") from None


def _parse_window_flags(items):
    out = {}
    for item in items:
        if "=" not in item or ":" not in item.split("=", 1)[1]:
            raise SpecError("--window", f"expected NAME=LO:HI, got {item!r}")
        name, rng = item.split("=", 1)
        lo, hi = rng.split(":", 1)
        try:
            out[name] = [float(lo) if lo.strip() else None, float(hi) if hi.strip() else None]
        except ValueError:
            raise SpecError("--window", f"bad bounds in {item!r}") from None
    return out


def _cmd_quantise(args, out):
    cfg = _config(args, output=args.out, csv=args.csv)
    rep = run_quantise(_read(args.spec), cfg)
    if not args.out:
        out.write(emit_report(rep))
        if args.csv:
            desc = parse_spec(_read(args.spec)) if args.spec != "-" else None
            out.write(report_csv(rep, _moment_names(desc, cfg.disk_convention) if desc else None))
    return EXIT_OK


def _cmd_holonomy(args, out):
    cfg = _config(args)
    model = make_model(_MODEL_FLAGS[args.model](), cfg.disk_convention)
    p = _parse_point(args.point)
    if p.size != model.dim:
        raise SpecError("--point", f"{args.model} points have {model.dim} coordinates")
    j = args.generator or C.default_generator(model)
    orbit = C.OrbitSample(tuple(p), j)
    hol = C.holonomy_formula(model, orbit)
    result = {"model": args.model, "generator": j, "point": [float(v) for v in p],
              "convention": cfg.disk_convention, "period": hol.period,
              "theta": hol.hamiltonian_value,
              "holonomy": [hol.value.real, hol.value.imag], "fixed_point": hol.fixed_point}
    code = EXIT_OK
    if args.oracle:
        tr = C.holonomy_transport(model, orbit, cfg.numerics())
        diff = abs(tr.value - hol.value)
        result["transport"] = [tr.value.real, tr.value.imag]
        result["difference"] = diff
        result["passed"] = diff <= 1e-8
        code = EXIT_OK if diff <= 1e-8 else EXIT_FAIL
    out.write(canonical_json(result) + "\n")
    return code


def _cmd_bs(args, out):
    cfg = _config(args)
    desc = parse_spec(_read(args.spec))
    window = _parse_window_flags(args.window) or desc.window
    base = desc.base
    if isinstance(base, ModelChart):
        model = make_model(base.spec, cfg.disk_convention)
        records = enumerate_bs_fibres(model, window, desc.offsets)
        names = list(model.moment_names)
    elif isinstance(base, (ToricPolytope, AlmostToric4)):
        from .bohr_sommerfeld import polytope_fibres
        records = polytope_fibres(base.polytope)
        names = [f"x{i + 1}" for i in range(base.polytope.dimension)]
    else:
        raise SpecError("$.kind", "bs needs a model chart or a polytope spec")
    rep = QuantisationReport({}, records)
    if args.csv:
        out.write(report_csv(rep, names))
    else:
        out.write(canonical_json({"moment_names": names,
                                  "bs_fibres": report_to_json(rep)["bs_fibres"]}) + "\n")
    return EXIT_OK


def _cmd_verify(args, out):
    cfg = _config(args, samples=args.samples, tol=args.tol)
    table = run_verify(args.suite, cfg)
    text = canonical_json(table) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK if table["passed"] else EXIT_FAIL


def _cmd_divide(args, out):
    cfg = _config(args)
    model = make_model(ModelSpec.disk(), cfg.disk_convention)
    g0 = DIVISION_FUNCTIONS[args.fn]
    pts = np.array([_parse_point(p) for p in args.points.split(";")])
    f = lambda P: C.holonomy_factor(model, 1, P) * g0(P)
    g = C.holonomy_division(model, f, pts, cfg.numerics())
    expected = g0(pts)
    err = float(np.max(np.abs(g - expected)))
    rows = [{"point": [float(v) for v in p], "g": [float(v.real), float(v.imag)],
             "expected": [float(e.real), float(e.imag)]} for p, v, e in zip(pts, g, expected)]
    out.write(canonical_json({"fn": args.fn, "convention": cfg.disk_convention,
                              "max_error": err, "passed": err <= 1e-5, "values": rows}) + "\n")
    return EXIT_OK if err <= 1e-5 else EXIT_FAIL


_COMMANDS = {"quantise": _cmd_quantise, "holonomy": _cmd_holonomy, "bs": _cmd_bs,
             "verify": _cmd_verify, "divide": _cmd_divide}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return _COMMANDS[args.verb](args, out)
    except (SpecError, WindowError, PolytopeError, ModelError, NoTheoremError, DescriptorError,
            OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
