"""qplab command line.

    qplab verify --suite all --seed 42
    qplab eval --point pi/2,0,1
    qplab chart pi/2,0,0
    qplab unchart "0,1;-1,0"
    qplab leaf --start pi/2,0,1 --steps 10000 --format csv
    qplab calibrate --target derived

Exit codes: 0 success, 1 a check or calibration failed, 2 bad input or configuration.
Settings come from flags, then the JSON file named by $QPLAB_CONFIG, then defaults.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import btz, serialize
from .double import QuasiTriple
from .lie_core import DEFAULT_SEED, make_context
from .quasi_poisson import P_S_sigma, image_basis
from .verify import SUITES, run_suite

CONFIG_ENV = "QPLAB_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    group: str | None = None
    sigma: str | None = None
    form_scale: float = 1.0
    seed: int = DEFAULT_SEED
    tolerances: dict = field(default_factory=dict)
    tol: float | None = None
    format: str = "json"
    steps: int = 10_000
    step_size: float = 1e-3

    def validate(self) -> "RunConfig":
        if self.group is not None:
            try:
                make_context(self.group)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.sigma not in (None, "id", "adH"):
            raise ConfigError(f"sigma must be id or adH, not {self.sigma!r}")
        if not (isinstance(self.form_scale, (int, float)) and self.form_scale > 0):
            raise ConfigError("form_scale must be a positive number")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.steps < 0 or self.step_size <= 0:
            raise ConfigError("steps must be >= 0 and step_size > 0")
        if self.tol is not None and self.tol <= 0:
            raise ConfigError("tol must be positive")
        return self

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"calibrated_form_scale"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**{k: v for k, v in data.items() if k in known}).validate()


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    path = os.environ.get(CONFIG_ENV)
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    for name in ("group", "sigma", "form_scale", "seed", "tol", "format", "steps", "step_size"):
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return RunConfig.from_dict(data)


# -- argument parsing ------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Decimal or an arithmetic expression in ``pi`` such as ``pi/2`` or ``-3*pi/4``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError(text)
    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse number {text!r}") from None


def parse_point(text: str) -> btz.ChartPoint:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"expected tau,theta,rho, got {text!r}")
    return btz.ChartPoint(*(parse_number(p) for p in parts))


def parse_matrix(text: str) -> np.ndarray:
    rows = [[parse_number(v) for v in row.split(",")] for row in text.split(";")]
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise ConfigError(f"expected a square matrix like '1,0;0,1', got {text!r}")
    return np.array(rows)


def _fmt_matrix(m) -> str:
    return "\n".join(" ".join(serialize.fmt(v) for v in row) for row in np.asarray(m))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------------

def cmd_verify(args, cfg: RunConfig) -> int:
    report = run_suite(args.suite, seed=cfg.seed, group=cfg.group, sigma=cfg.sigma,
                       form_scale=cfg.form_scale, tolerances=cfg.tolerances, tol=cfg.tol)
    if cfg.format == "json":
        text = serialize.dumps(report.as_dict())
    else:
        rows = [(c.family, c.name, c.n_checks, float(c.max_residual), float(c.tolerance),
                 "pass" if c.passed else "fail") for c in report.checks]
        text = serialize.csv_text(
            ["family", "check", "n_checks", "max_residual", "tolerance", "status"], rows)
    _emit(text, args.out)
    for c in report.checks:
        if not c.passed:
            print(f"FAIL {c.family} {c.name}: {serialize.fmt(c.max_residual)} >= "
                  f"{serialize.fmt(c.tolerance)}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_eval(args, cfg: RunConfig) -> int:
    if (args.point is None) == (args.matrix is None):
        raise ConfigError("give exactly one of --point or --matrix")
    if args.point is not None:
        p = parse_point(args.point)
        s = btz.chart(p)
        if not btz.in_domain_I(s, btz.BOUNDARY_MARGIN) or not 0 < p.tau < math.pi:
            raise btz.DomainError(f"{args.point} is outside the chart domain")
        m = btz.coordinate_bivector(p, cfg.form_scale)
        lines = [
            "chart components P(dc_i, dc_j), c = (tau, theta, rho):",
            _fmt_matrix(m),
            f"p_tau_theta {serialize.fmt(m[0, 1])}",
            f"derived tanh(rho/2)/(c sin tau) {serialize.fmt(btz.derived_coeff(p, cfg.form_scale))}",
            f"closed form 2cosh^2(rho/2)sin(tau)sinh(rho) {serialize.fmt(btz.closed_form_coeff(p))}",
            f"lowered-index (theta,tau) {serialize.fmt(btz.lowered_bivector(p, cfg.form_scale)[1, 0])}",
            f"classification {btz.classify_point(p, cfg.form_scale)}",
        ]
        print("\n".join(lines))
        return 0
    s = parse_matrix(args.matrix)
    ctx = make_context(cfg.group or "sl2r", cfg.form_scale)
    try:
        ctx.check_group_element(s)
    except ValueError as exc:
        raise ConfigError(f"--matrix: {exc}") from None
    qt = QuasiTriple.build(ctx, cfg.sigma or "adH")
    P = P_S_sigma(s, qt)
    rank = image_basis(s, qt).rank
    print("P_S^sigma(s) as a map g* -> g (basis coordinates):")
    print(_fmt_matrix(P.matrix))
    note = f"rank-{rank}"
    if rank == 0 and ctx.name == "sl2r" and not qt.sigma.is_identity:
        note += ", identity orbit"
    print(note)
    return 0


def cmd_chart(args, cfg: RunConfig) -> int:
    print(_fmt_matrix(btz.chart(parse_point(args.point))))
    return 0


def cmd_unchart(args, cfg: RunConfig) -> int:
    p = btz.inverse_chart(parse_matrix(args.matrix), branch=args.branch)
    print(",".join(serialize.fmt(v) for v in (p.tau, p.theta, p.rho)))
    return 0


def cmd_leaf(args, cfg: RunConfig) -> int:
    start = parse_point(args.start)
    bcfg = btz.BtzConfig(form_scale=cfg.form_scale, step=cfg.step_size)
    try:
        trace = btz.trace_leaf(start, bcfg, cfg.steps, args.hamiltonian)
    except btz.RankZeroError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if cfg.format == "csv":
        text = trace.to_csv()
    else:
        config = {**bcfg.as_dict(), "steps": cfg.steps, "start": [start.tau, start.theta, start.rho]}
        text = serialize.dumps(trace.to_document(config, cfg.seed))
    _emit(text, args.out)
    print(f"rho_drift {serialize.fmt(trace.rho_drift)}", file=sys.stderr)
    if trace.truncated:
        print("trace left the chart domain; partial trace emitted", file=sys.stderr)
        return 1
    return 0


def _parse_grid(text: str | None) -> btz.BtzConfig:
    if text is None:
        return btz.BtzConfig()
    parts = text.split(",")
    if len(parts) not in (3, 4):
        raise ConfigError("--grid expects N_TAU,N_THETA,N_RHO[,RHO_MAX]")
    try:
        n_tau, n_theta, n_rho = (int(v) for v in parts[:3])
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    rho_max = parse_number(parts[3]) if len(parts) == 4 else 2.0
    if min(n_tau, n_theta, n_rho) < 1:
        raise ConfigError("grid sizes must be >= 1")
    return btz.BtzConfig(n_tau=n_tau, n_theta=n_theta, n_rho=n_rho, rho_max=rho_max)


def cmd_calibrate(args, cfg: RunConfig) -> int:
    grid_cfg = _parse_grid(args.grid)
    # the derived target is taken at c = 1 so that the fitted ratio carries the scale
    targets = {"closed_form": btz.closed_form_coeff,
               "derived": lambda p: btz.derived_coeff(p, 1.0)}
    target = targets[args.target]
    try:
        cal = btz.calibrate_scale(grid_cfg.grid(), cfg.form_scale, target)
    except btz.DegenerateGridError as exc:
        print(f"degenerate grid: {exc}", file=sys.stderr)
        return 2
    n = grid_cfg.n_tau * grid_cfg.n_theta * grid_cfg.n_rho
    print(f"target {args.target}")
    print(f"form_scale {serialize.fmt(cfg.form_scale)}")
    print(f"c {serialize.fmt(cal.c)}")
    print(f"spread {serialize.fmt(cal.spread)}")
    print(f"grid {grid_cfg.n_tau}x{grid_cfg.n_theta}x{grid_cfg.n_rho} "
          f"({cal.n_points} of {n} points used)")
    if not cal.ok():
        print("spread above 1e-8: the target is not a constant multiple of the pulled-back bivector",
              file=sys.stderr)
        return 1
    if args.write is not None:
        path = Path(args.write or os.environ.get(CONFIG_ENV) or "qplab.json")
        data = json.loads(path.read_text()) if path.exists() else {}
        data["form_scale"] = cfg.form_scale * cal.c
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        print(f"wrote form_scale to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", help="sl2r, slNr (e.g. sl3r) or su2")
    common.add_argument("--sigma", choices=("id", "adH"))
    common.add_argument("--form-scale", dest="form_scale", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float, help="override every tolerance")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="write output to FILE instead of stdout")

    parser = argparse.ArgumentParser(prog="qplab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", parents=[common], help="evaluate the bivector at a point")
    p.add_argument("--point", help="tau,theta,rho")
    p.add_argument("--matrix", help="group element, rows separated by ';'")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("chart", parents=[common], help="chart coordinates to matrix")
    p.add_argument("point", help="tau,theta,rho")
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("unchart", parents=[common], help="matrix to chart coordinates")
    p.add_argument("matrix", help="e.g. '0,1;-1,0'")
    p.add_argument("--branch", choices=("upper", "lower"), default="upper")
    p.set_defaults(func=cmd_unchart)

    p = sub.add_parser("leaf", parents=[common], help="trace a symplectic leaf")
    p.add_argument("--start", required=True, help="tau,theta,rho")
    p.add_argument("--steps", type=int)
    p.add_argument("--step-size", dest="step_size", type=float)
    p.add_argument("--hamiltonian", choices=sorted(btz.HAMILTONIANS), default="cos_tau")
    p.set_defaults(func=cmd_leaf)

    p = sub.add_parser("calibrate", parents=[common], help="fit the form scale")
    p.add_argument("--grid", help="N_TAU,N_THETA,N_RHO[,RHO_MAX]")
    p.add_argument("--target", choices=("closed_form", "derived"), default="closed_form")
    p.add_argument("--write", nargs="?", const="", default=None, metavar="FILE",
                   help="store the calibrated form_scale in a JSON config file")
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(args, cfg)
    except (ConfigError, btz.DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
