"""Command-line interface.

Subcommands ``norm``, ``rho``, ``delta``, ``mu``, ``verify`` and ``growth``;
see ``docs/formats.md`` for the exact output layouts.  Exit codes: 0 on
success, 1 when a verify check fails, 2 on usage or parse errors, 3 on
numerical errors (aliasing, insufficient bandwidth).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import List, Optional, Sequence

import numpy as np

from .errors import NumericalError, UMDNormsError
from .ideal_norms import (IdealNormEstimate, OptimizerConfig, delta_estimate, mu_estimate,
                          rho_estimate)
from .norms import GridFunction, VectorTuple, doubling_residual, resample, system_norm
from .spaces import LinearOperator, NormedSpace, parse_space
from .systems import QuadratureGrid, cosine, exponential, parse_system, sine
from .verify import SUITES, UNIVERSALITY_NOTE, run_suite

FORMATS = ("json", "jsonl", "csv")
COMMANDS = ("norm", "rho", "delta", "mu", "verify", "growth")


class UsageError(UMDNormsError):
    pass


# -- literals and files ------------------------------------------------------------


def parse_scalar(text) -> complex:
    """A real number or an ``a+bi`` literal."""
    if isinstance(text, (int, float)):
        return complex(text)
    s = str(text).strip().replace(" ", "")
    try:
        return complex(s.replace("i", "j")) if s.endswith("i") else complex(float(s))
    except ValueError:
        raise UsageError(f"cannot parse number {text!r}") from None


def format_scalar(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return repr(z.real)
    sign = "+" if z.imag >= 0 or math.isnan(z.imag) else "-"
    return f"{z.real!r}{sign}{abs(z.imag)!r}i"


def _to_array(rows, field: str) -> np.ndarray:
    rows = [[parse_scalar(v) for v in row] for row in rows if len(row)]
    if not rows or len({len(r) for r in rows}) != 1:
        raise UsageError("matrix rows must be non-empty and of equal length")
    a = np.array(rows, dtype=np.complex128)
    if field == "real":
        if np.any(a.imag != 0):
            raise UsageError("complex entries given for a real space")
        return a.real.copy()
    return a


def read_matrix(path: str, field: str) -> np.ndarray:
    """CSV of rows with real or ``a+bi`` entries."""
    try:
        with open(path, newline="") as fh:
            rows = [[c for c in row if c.strip()] for row in csv.reader(fh)]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return _to_array(rows, field)


def read_tuple(source: str, field: str) -> np.ndarray:
    """Inline JSON (``[[2]]``) or a CSV file whose rows are the vectors."""
    s = source.strip()
    if s.startswith("["):
        try:
            rows = json.loads(s)
        except json.JSONDecodeError as exc:
            raise UsageError(f"cannot parse tuple literal at position {exc.pos}: {exc.msg}") from None
        return _to_array(rows, field)
    return read_matrix(source, field)


def _encode_array(a: np.ndarray):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"real": a.real.tolist(), "imag": a.imag.tolist()}
    return {"real": a.tolist()}


def _decode_array(d) -> np.ndarray:
    re = np.asarray(d["real"], dtype=float)
    return re + 1j * np.asarray(d["imag"], dtype=float) if "imag" in d else re


# -- configuration -----------------------------------------------------------------


def parse_n_range(text: str) -> List[int]:
    """``5``, ``1..32`` or ``1,2,4,8``; values must be positive and strictly increasing."""
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            values = list(range(lo, hi + 1))
        else:
            values = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse n range {text!r}") from None
    if not values or values[0] < 1 or any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError(f"n range {text!r} must be positive and strictly increasing")
    return values


def format_n_range(values: Sequence[int]) -> str:
    values = list(values)
    if len(values) > 1 and values == list(range(values[0], values[-1] + 1)):
        return f"{values[0]}..{values[-1]}"
    return ",".join(str(v) for v in values)


@dataclass(frozen=True)
class RunConfig:
    command: str
    space: Optional[str] = None
    field: str = "complex"
    systems: tuple = ()
    n: Optional[str] = None
    operator: str = "identity"
    tuple_source: Optional[str] = None
    restarts: int = 32
    max_iterations: int = 500
    grid: Optional[int] = None
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    emit_certificate: bool = False
    suite: str = "all"
    trials: int = 100

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(restarts=self.restarts, max_iterations=self.max_iterations,
                               seed=self.seed)

    def to_argv(self) -> List[str]:
        argv = [self.command]
        if self.command == "verify":
            argv += ["--suite", self.suite, "--trials", str(self.trials)]
        else:
            argv += ["--space", self.space, "--field", self.field]
        if self.command == "norm":
            argv += ["--system", self.systems[0], "--tuple", self.tuple_source]
        elif self.command in ("rho", "delta"):
            argv += ["--from", self.systems[0], "--to", self.systems[1]]
        elif self.command in ("mu", "growth"):
            argv += ["-n", self.n]
        if self.command != "norm":
            if self.command != "verify":
                argv += ["--operator", self.operator]
            argv += ["--restarts", str(self.restarts), "--max-iterations", str(self.max_iterations)]
        if self.grid is not None:
            argv += ["--grid", str(self.grid)]
        argv += ["--seed", str(self.seed), "--format", self.format]
        if self.out is not None:
            argv += ["--out", self.out]
        if self.emit_certificate:
            argv.append("--emit-certificate")
        return argv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="umdnorms", description="Trigonometric ideal norms of operators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, space=True, optimizer=True, default_format="json"):
        if space:
            p.add_argument("--space", required=True, help="l1:4, l2:8, linf:3, wlp:p=3,w=1;2;0.5")
            p.add_argument("--field", choices=("real", "complex"), default="complex")
            p.add_argument("--operator", default="identity", help="'identity' or a matrix CSV file")
        if optimizer:
            p.add_argument("--restarts", type=int, default=32)
            p.add_argument("--max-iterations", type=int, default=500)
        p.add_argument("--grid", type=int, default=None, help="number of quadrature nodes")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=FORMATS, default=default_format)
        p.add_argument("--emit-certificate", action="store_true")

    p = sub.add_parser("norm", help="system norm of a tuple")
    common(p, optimizer=False)
    p.add_argument("--system", required=True)
    p.add_argument("--tuple", dest="tuple_source", required=True,
                   help="inline JSON like [[1,0],[0,1]] or a CSV file of vectors")
    for name in ("rho", "delta"):
        p = sub.add_parser(name, help=f"estimate {name}(T | to, from)")
        common(p)
        p.add_argument("--from", dest="source", required=True, help="system on the domain side")
        p.add_argument("--to", dest="target", required=True, help="system on the codomain side")
    p = sub.add_parser("mu", help="max of rho(C_n, S_n) and rho(S_n, C_n)")
    common(p)
    p.add_argument("-n", required=True)
    p = sub.add_parser("verify", help="run the check suite")
    common(p, space=False, default_format="jsonl")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--trials", type=int, default=100)
    p = sub.add_parser("growth", help="scan the five sequences over a range of n")
    common(p, default_format="csv")
    p.add_argument("-n", "--n", dest="n", required=True, help="1..32 or 1,2,4")
    return parser


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    cmd = ns.command
    systems: tuple = ()
    if cmd == "norm":
        systems = (ns.system,)
    elif cmd in ("rho", "delta"):
        systems = (ns.source, ns.target)
    cfg = RunConfig(
        command=cmd,
        space=getattr(ns, "space", None),
        field=getattr(ns, "field", "complex"),
        systems=systems,
        n=getattr(ns, "n", None),
        operator=getattr(ns, "operator", "identity"),
        tuple_source=getattr(ns, "tuple_source", None),
        restarts=getattr(ns, "restarts", 32),
        max_iterations=getattr(ns, "max_iterations", 500),
        grid=ns.grid, seed=ns.seed, out=ns.out, format=ns.format,
        emit_certificate=ns.emit_certificate,
        suite=getattr(ns, "suite", "all"), trials=getattr(ns, "trials", 100))
    return cfg


def _space(cfg: RunConfig) -> NormedSpace:
    return parse_space(cfg.space, cfg.field)


def _operator(cfg: RunConfig, space: NormedSpace) -> LinearOperator:
    if cfg.operator == "identity":
        return LinearOperator.identity(space)
    return LinearOperator(space, space, read_matrix(cfg.operator, cfg.field))


# -- records -----------------------------------------------------------------------


@dataclass
class NormRecord:
    system: str
    n: int
    space: str
    value: float
    doubling_residual: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NormRecord":
        return cls(**d)


@dataclass
class EstimateRecord:
    norm: str
    source: Optional[str]
    target: Optional[str]
    n: int
    space: str
    field: str
    operator: str
    value: float
    exact: bool
    restarts: int
    seed: int
    grid: int
    doubling_residual: Optional[float]
    rho_CS: Optional[float] = None
    rho_SC: Optional[float] = None
    certificate: Optional[dict] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["from"], d["to"] = d.pop("source"), d.pop("target")
        order = ["norm", "from", "to"] + [f.name for f in fields(self)][3:]
        out = {k: d[k] for k in order}
        if self.norm != "mu":
            out.pop("rho_CS"), out.pop("rho_SC")
        if self.certificate is None:
            out.pop("certificate")
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "EstimateRecord":
        d = dict(d)
        d["source"], d["target"] = d.pop("from"), d.pop("to")
        return cls(**d)


@dataclass
class GrowthRecord:
    n: int
    space: str
    delta_EE: float
    delta_SC: float
    delta_CS: float
    rho_SC: float
    rho_CS: float
    mu: float
    restarts: int
    seed: int
    doubling_residual: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GrowthRecord":
        kinds = {f.name: f.type for f in fields(cls)}
        return cls(**{k: (int(v) if kinds[k] == "int" else v if kinds[k] == "str" else float(v))
                      for k, v in d.items()})


GROWTH_COLUMNS = tuple(f.name for f in fields(GrowthRecord))


def _certificate_dict(est: IdealNormEstimate) -> dict:
    c = est.certificate
    if isinstance(c, GridFunction):
        return {"kind": "grid_function", "N": c.grid.N, "values": _encode_array(c.values)}
    return {"kind": "tuple", "entries": _encode_array(c.entries)}


def certificate_array(cert: dict) -> np.ndarray:
    key = "values" if cert["kind"] == "grid_function" else "entries"
    return _decode_array(cert[key])


def _dumps(d: dict) -> str:
    return json.dumps(d, allow_nan=True)


def _write(cfg: RunConfig, text: str):
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)


def _render(record: dict, fmt: str) -> str:
    if fmt in ("json", "jsonl"):
        return _dumps(record) + "\n"
    buf = io.StringIO()
    flat = {k: v for k, v in record.items() if not isinstance(v, dict)}
    w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
    w.writeheader()
    w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in flat.items()})
    return buf.getvalue()


# -- commands --------------------------------------------------------------------


def run_norm(cfg: RunConfig) -> NormRecord:
    space = _space(cfg)
    system = parse_system(cfg.systems[0])
    xs = VectorTuple(space, read_tuple(cfg.tuple_source, cfg.field))
    grid = QuadratureGrid(cfg.grid) if cfg.grid else QuadratureGrid.default(system.max_frequency)
    value = system_norm(xs, system, grid)
    return NormRecord(str(system), system.size, space.literal, value,
                      doubling_residual(xs, system, grid))


def run_estimate(cfg: RunConfig) -> EstimateRecord:
    space = _space(cfg)
    T = _operator(cfg, space)
    opt = cfg.optimizer()
    if cfg.command == "mu":
        n = parse_n_range(cfg.n)
        if len(n) != 1:
            raise UsageError("mu takes a single n")
        n = n[0]
        grid = QuadratureGrid(cfg.grid) if cfg.grid else QuadratureGrid.default(n)
        est = mu_estimate(T, n, grid, opt)
        source = target = None
        extra = {"rho_CS": est.branches["rho_CS"].value, "rho_SC": est.branches["rho_SC"].value}
    else:
        A, B = parse_system(cfg.systems[0]), parse_system(cfg.systems[1])
        n = A.size
        band = max(A.max_frequency, B.max_frequency)
        grid = QuadratureGrid(cfg.grid) if cfg.grid else QuadratureGrid.default(band)
        fn = rho_estimate if cfg.command == "rho" else delta_estimate
        est = fn(T, B, A, grid, opt)
        source, target, extra = str(A), str(B), {}
    operator = "identity" if cfg.operator == "identity" else os.path.basename(cfg.operator)
    return EstimateRecord(
        est.norm, source, target, n, space.literal, space.field, operator, est.value, est.exact,
        opt.restarts, opt.seed, grid.N, est.doubling_residual,
        certificate=_certificate_dict(est) if cfg.emit_certificate else None, **extra)


def growth_records(space: NormedSpace, n_values: Sequence[int], cfg: OptimizerConfig,
                   operator: Optional[LinearOperator] = None, grid_nodes: Optional[int] = None):
    """Yield one :class:`GrowthRecord` per n, in order.

    Each n reuses the previous certificates as extra starting points (padded
    with a zero vector, or resampled onto the new grid), which keeps the
    scan close to monotone at modest restart counts.
    """
    T = operator or LinearOperator.identity(space)
    prev = {}
    for n in n_values:
        grid = QuadratureGrid(grid_nodes) if grid_nodes else QuadratureGrid.default(n)
        C, S, E = cosine(n), sine(n), exponential(n)

        def tuple_starts(key):
            if key not in prev or prev[key].exact:
                return ()
            X = prev[key].certificate.entries
            pad = np.zeros((n - X.shape[0], X.shape[1]), dtype=X.dtype)
            return (np.vstack([X, pad]),) if n > X.shape[0] else ()

        def function_starts(key):
            if key not in prev or prev[key].exact:
                return ()
            return (resample(prev[key].certificate, grid).values,)

        est = {}
        est["rho_SC"] = rho_estimate(T, S, C, grid, cfg, tuple_starts("rho_SC"))
        est["rho_CS"] = rho_estimate(T, C, S, grid, cfg, tuple_starts("rho_CS"))
        est["delta_EE"] = delta_estimate(T, E, E, grid, cfg, starts=function_starts("delta_EE"))
        est["delta_SC"] = delta_estimate(T, S, C, grid, cfg, rho=est["rho_SC"],
                                         starts=function_starts("delta_SC"))
        est["delta_CS"] = delta_estimate(T, C, S, grid, cfg, rho=est["rho_CS"],
                                         starts=function_starts("delta_CS"))
        prev = est
        residual = max(e.doubling_residual or 0.0 for e in est.values())
        yield GrowthRecord(n, space.literal, est["delta_EE"].value, est["delta_SC"].value,
                           est["delta_CS"].value, est["rho_SC"].value, est["rho_CS"].value,
                           max(est["rho_SC"].value, est["rho_CS"].value),
                           cfg.restarts, cfg.seed, residual)


def growth_summary(records: Sequence[GrowthRecord], status: str = "complete") -> dict:
    d = [r.delta_EE for r in records]
    drops = [max(0.0, a - b) for a, b in zip(d, d[1:])]
    return {
        "status": status,
        "rows": len(records),
        "delta_EE_first": d[0] if d else None,
        "delta_EE_max": max(d) if d else None,
        "margin_over_first": (max(d) - d[0]) if d else None,
        "largest_drop": max(drops) if drops else 0.0,
    }


def run_growth(cfg: RunConfig, stream=None) -> List[GrowthRecord]:
    """Run the scan, writing and flushing one row per n, then a summary line."""
    space = _space(cfg)
    T = _operator(cfg, space)
    n_values = parse_n_range(cfg.n)
    own = stream is None
    if own:
        stream = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    records: List[GrowthRecord] = []
    status = "complete"
    writer = None
    if cfg.format == "csv":
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(GROWTH_COLUMNS)
    try:
        for rec in growth_records(space, n_values, cfg.optimizer(), T, cfg.grid):
            records.append(rec)
            d = rec.to_dict()
            if writer is not None:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in d.values()])
            else:
                stream.write(_dumps(d) + "\n")
            stream.flush()
    except KeyboardInterrupt:
        status = "interrupted"
        raise
    finally:
        summary = growth_summary(records, status)
        if writer is not None:
            stream.write("# summary " + _dumps(summary) + "\n")
        else:
            stream.write(_dumps({"summary": summary}) + "\n")
        stream.flush()
        if own and cfg.out:
            stream.close()
    return records


def read_growth(path: str) -> List[GrowthRecord]:
    """Read back the rows of a growth file (CSV or JSONL), skipping the summary."""
    with open(path, newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if lines and lines[0].startswith("n,"):
        rows = csv.DictReader(line for line in lines if not line.startswith("#"))
        return [GrowthRecord.from_dict(r) for r in rows]
    out = []
    for line in lines:
        d = json.loads(line)
        if "summary" not in d:
            out.append(GrowthRecord.from_dict(d))
    return out


def run_verify(cfg: RunConfig) -> int:
    results = run_suite(cfg.suite, cfg.trials, cfg.seed, cfg.optimizer())
    failed = [r for r in results if r.failed]
    header = {"header": {"suite": cfg.suite, "trials": cfg.trials, "seed": cfg.seed,
                         "restarts": cfg.restarts, "checks": len(results), "failures": len(failed),
                         "note": UNIVERSALITY_NOTE}}
    if cfg.format == "csv":
        buf = io.StringIO()
        cols = ["check_id", "check_class", "instance", "lhs", "rhs", "ratio", "constant",
                "slack", "abs_tol", "verdict", "note"]
        buf.write("# " + _dumps(header) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in results:
            d = r.to_dict()
            d["instance"] = _dumps(d["instance"])
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
        text = buf.getvalue()
    else:
        text = "".join(_dumps(x) + "\n" for x in [header] + [r.to_dict() for r in results])
    _write(cfg, text)
    return 1 if failed else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        if cfg.command == "norm":
            _write(cfg, _render(run_norm(cfg).to_dict(), cfg.format))
        elif cfg.command in ("rho", "delta", "mu"):
            _write(cfg, _render(run_estimate(cfg).to_dict(), cfg.format))
        elif cfg.command == "growth":
            run_growth(cfg)
        else:
            return run_verify(cfg)
    except NumericalError as exc:
        print(f"umdnorms: {exc}", file=sys.stderr)
        return 3
    except UMDNormsError as exc:
        print(f"umdnorms: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
