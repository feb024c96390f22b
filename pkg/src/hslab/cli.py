"""Command-line driver: check suites on catalog or file surfaces,
convergence studies and the superspace identity suite.

    hslab check clifford_torus --grid 64
    hslab convergence round_sphere --grids 32,64,128
    hslab super --mode polynomial --seed 7

Reports are JSON (stdout or --out).  The exit code is the number of
failing checks (capped at 125); bad input exits with 2 and no report.
"""
from __future__ import annotations

import argparse
import ast
import csv
import json
import operator
import os
import sys
from dataclasses import dataclass

import numpy as np
import scipy

from . import __version__
from . import algebra as alg
from . import lift
from .catalog import CatalogError, builtin, load_grid
from .gauss import (Immersion, conformality_residual, cmc_check, gauss_data, hsl_residual,
                    lagrangian_residual, mean_curvature)
from .gridcalc import GridDomain, GridMap, convergence_order, order_passes

TOL_ENV = "HSLAB_TOL"
DEFAULT_TOL = 1e-10
CONFORMAL_TOL = 1e-6
MIN_ORDER = 1.7


class InputError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"i": 1j, "pi": np.pi, "e": np.e}
_FUNCS = {"exp": np.exp, "sqrt": np.sqrt, "cos": np.cos, "sin": np.sin}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.operand))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        return _FUNCS[node.func.id](*[_eval(a) for a in node.args])
    raise ValueError("unsupported expression")


def parse_lambda(text: str) -> complex:
    """'i', '2', '-0.5+1j', 'exp(i*pi/5)', 'e^(i*pi/5)'."""
    src = text.strip().replace("^", "**")
    try:
        value = complex(_eval(ast.parse(src, mode="eval")))
    except (ValueError, SyntaxError, TypeError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"cannot parse lambda {text!r}") from None
    if value == 0:
        raise argparse.ArgumentTypeError("lambda must be nonzero")
    return value


def parse_lambdas(text: str):
    return [parse_lambda(t) for t in text.split(",") if t.strip()]


def parse_u(text: str):
    names = {"i": alg.I, "j": alg.J, "k": alg.K}
    if text in names:
        return names[text]
    try:
        comps = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse unit {text!r}") from None
    if len(comps) not in (3, 7):
        raise argparse.ArgumentTypeError("u needs 3 (quaternion) or 7 (octonion) imaginary components")
    v = np.concatenate([[0.0], comps])
    if np.linalg.norm(v) == 0:
        raise argparse.ArgumentTypeError("u must be nonzero")
    return v / np.linalg.norm(v)


def parse_grids(text: str):
    grids = sorted({int(t) for t in text.split(",") if t.strip()})
    if len(grids) < 2:
        raise argparse.ArgumentTypeError("need at least two grids")
    return grids


def default_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None


def lambda_label(lam: complex) -> str:
    return f"{lam.real:.6g}{lam.imag:+.6g}i"


# --------------------------------------------------------------------------
# checks

@dataclass
class Measured:
    """One quantity evaluated on one grid.  kind: "abs" (residual <= tol),
    "order" (convergence order >= MIN_ORDER, or exact), "flag"."""

    name: str
    kind: str
    value: float
    tol: float | None = None
    expected: bool | None = None
    flag: bool | None = None


class Subject:
    """A catalog entry or a grid file."""

    def __init__(self, name: str):
        self.name = name
        self.entry = None
        self.file_immersion = None
        try:
            self.entry = builtin(name)
        except CatalogError:
            if os.path.exists(name):
                self.file_immersion = load_grid(name)
            else:
                raise InputError(f"{name!r} is neither a catalog entry nor a grid file") from None

    @property
    def fixed_grid(self):
        return self.file_immersion is not None

    def immersion(self, n):
        """Catalog entries are sampled on an n x n grid.  A grid file has two
        levels: n = 0 keeps every other sample, any other n the full grid."""
        if self.file_immersion is not None:
            return subsample(self.file_immersion) if n == 0 else self.file_immersion
        return self.entry.immersion(n)

    @property
    def frame_only(self):
        return self.entry is not None and self.entry.evaluator is None

    def expected(self, key):
        return None if self.entry is None else self.entry.expected.get(key)


def _flatness(bundle, lams, prefix, out, curves, h, family="alpha"):
    for lam in lams:
        r = lift.flatness_residual(bundle, lam, family)
        out.append(Measured(f"{prefix}[{lambda_label(lam)}]", "order", r))
        curves.append((lam, h, r))


def conformal_tolerance(X, cres):
    """CONFORMAL_TOL, or for sampled input without exact derivatives the
    largest residual still consistent with a conformal surface: the value
    on every other sample, divided by 2^MIN_ORDER."""
    if X.exact is not None or cres <= CONFORMAL_TOL:
        return CONFORMAL_TOL
    if X.domain.nx < 7 or X.domain.ny < 7:
        return CONFORMAL_TOL
    return max(CONFORMAL_TOL, conformality_residual(subsample(X)) / 2**MIN_ORDER)


def subsample(X: Immersion) -> Immersion:
    """Every other sample of X, spacing doubled.  A periodic axis with an
    odd sample count cannot stay periodic and is opened."""
    d = X.domain
    periodic = tuple(p and m % 2 == 0 for p, m in zip(d.periodic, (d.nx, d.ny)))
    coarse = GridDomain((d.nx + 1) // 2, (d.ny + 1) // 2, 2 * d.hx, 2 * d.hy, d.x0, d.y0, periodic)
    exact = None if X.exact is None else tuple(a[::2, ::2] for a in X.exact)
    return Immersion(GridMap(coarse, X.X.values[::2, ::2]), exact)


def measure(subject: Subject, n: int, lams, u, tol):
    """All checks of the applicable pipeline on one grid.  Returns
    (measurements, grid info, flatness curve rows)."""
    out, curves = [], []
    if subject.frame_only:
        e = subject.entry
        d = e.domain(n)
        bundle = lift.rotor_lift(e.rotor_map(n).values, d, u)
        _flatness(bundle, lams, "flatness_rotor", out, curves, d.h)
        for lam in lams:
            out.append(Measured(f"flatness_beta_rotor[{lambda_label(lam)}]", "order",
                                lift.flatness_residual(bundle, lam, "beta")))
        return out, d, curves

    X = subject.immersion(n)
    d = X.domain
    cres = conformality_residual(X)
    ctol = conformal_tolerance(X, cres)
    if cres > ctol:
        raise InputError(f"parametrisation is not conformal: residual {cres:.6g} > {ctol:.6g}")
    out.append(Measured("conformality", "abs", cres, ctol))
    ctx = alg.AlgebraContext(X.dim, u if u is not None and len(u) == X.dim else None)
    gd = gauss_data(X.open(), conformal_tol=max(ctol, CONFORMAL_TOL))

    if X.dim == 8:
        bundle = lift.lift_hopf(X, ctx, gd)
        out.append(Measured("lift_condition[spin7]", "order", lift.lift_condition_residual(bundle)))
        _flatness(bundle, lams, "flatness_spin7", out, curves, d.h)
        return out, d, curves

    if np.max(np.abs(X.X.values[..., 0])) < 1e-12:
        res = cmc_check(X, gd)
        out.append(Measured("rho_plus_sigma", "abs", res["rho_plus_sigma"], tol))
        out.append(Measured("gauss_tension", "order", res["tension"]))
        return out, d, curves

    lres = lagrangian_residual(X)["residual"]
    out.append(Measured("lagrangian", "abs", lres, tol))
    lagrangian = gd._beta is not None
    if lagrangian:
        out.append(Measured("hsl_laplacian_beta", "order", hsl_residual(X.open(), gd)["residual"]))
        out.append(Measured("mean_curvature_identity", "order", mean_curvature(X, gd).identity_residual))
        dev = float(np.nanmax(np.abs(gd.beta - np.nanmean(gd.beta))))
        out.append(Measured("special_lagrangian", "flag", dev, 1e-8,
                            expected=subject.expected("special_lagrangian"), flag=dev < 1e-8))
    hop = lift.lift_hopf(X, ctx, gd)
    out.append(Measured("lift_condition[hopf]", "order", lift.lift_condition_residual(hop)))
    completion = "unitary" if lagrangian and np.allclose(ctx.u, alg.J) else "continuous"
    fr = lift.lift_frame(X, ctx, completion=completion, gd=gd)
    out.append(Measured("lift_condition[frame]", "order", lift.lift_condition_residual(fr)))
    _flatness(hop, lams, "flatness_hopf", out, curves, d.h)
    _flatness(fr, lams, "flatness_frame", out, [], d.h)
    if completion == "unitary":
        red = lift.hsl_reduction_check(X, ctx, gd)
        out.append(Measured("u1_reduction", "abs", red["u1_residual"], tol))
        out.append(Measured("beta_convention_offset", "abs", red["det_beta_offset"], tol))
        # flatness should not see how R is completed on the normal plane
        alt = lift.lift_frame(X, ctx, completion="continuous", gd=gd)
        spread = max(abs(lift.flatness_residual(fr, lam) - lift.flatness_residual(alt, lam)) for lam in lams)
        out.append(Measured("completion_spread", "order", spread))
    return out, d, curves


def assemble(levels, tol):
    """Turn per-grid measurements into report checks (sorted by name)."""
    by_name = {}
    for h, ms in levels:
        for m in ms:
            by_name.setdefault(m.name, []).append((h, m))
    checks = []
    for name in sorted(by_name):
        rows = by_name[name]
        h_fine, m = min(rows, key=lambda r: r[0])
        entry = {"name": name, "residual": m.value}
        if m.kind == "abs":
            entry["tolerance"] = m.tol if m.tol is not None else tol
            entry["pass"] = bool(m.value <= entry["tolerance"])
        elif m.kind == "flag":
            entry["tolerance"] = m.tol
            entry["flag"] = bool(m.flag)
            entry["pass"] = True if m.expected is None else bool(m.flag == m.expected)
        else:
            entry["tolerance"] = MIN_ORDER
            if len(rows) >= 2:
                order = convergence_order([(h, r.value) for h, r in rows])
                entry["order"] = order
                entry["pass"] = bool(order_passes(order, MIN_ORDER))
            else:
                entry["pass"] = bool(m.value <= tol)
        checks.append(entry)
    return checks


def versions():
    return {"hslab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3]))}


def report(subject, grid, checks, lams, seed):
    return {"subject": subject, "grid": grid, "checks": checks,
            "lambda_samples": [[float(l.real), float(l.imag)] for l in lams],
            "versions": versions(), "seed": seed}


def run_grids(subject: Subject, grids, lams, u, tol):
    levels, curves, last = [], [], None
    for n in grids:
        ms, d, cv = measure(subject, n, lams, u, tol)
        levels.append((d.h, ms))
        curves.extend(cv)
        last = d
    return levels, curves, last


def cmd_check(args):
    tol = args.tol if args.tol is not None else default_tol()
    subject = Subject(args.subject)
    lams = args.lambdas or list(lift.STANDARD_LAMBDAS)
    grids = [0, 1] if subject.fixed_grid else [max(args.grid // 2, 8), args.grid]
    levels, curves, d = run_grids(subject, grids, lams, args.u, tol)
    checks = assemble(levels, tol)
    grid = {"nx": d.nx, "ny": d.ny, "h": d.h}
    return report(args.subject, grid, checks, lams, args.seed), curves


def cmd_convergence(args):
    tol = args.tol if args.tol is not None else default_tol()
    subject = Subject(args.subject)
    if subject.fixed_grid:
        raise InputError("convergence studies need a catalog entry")
    lams = args.lambdas or list(lift.STANDARD_LAMBDAS)
    levels, curves, d = run_grids(subject, args.grids, lams, args.u, tol)
    checks = assemble(levels, tol)
    grid = {"nx": d.nx, "ny": d.ny, "h": d.h, "levels": [[n, h] for n, (h, _) in zip(args.grids, levels)]}
    return report(args.subject, grid, checks, lams, args.seed), curves


def cmd_super(args):
    from .superspace import suite
    tol = args.tol if args.tol is not None else default_tol()
    checks, grid, lams = suite.run(args.mode, args.seed, args.grids, tol)
    return report(f"superspace:{args.mode}", grid, checks, lams, args.seed), []


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def dumps(rep) -> str:
    return json.dumps(rep, indent=2, default=_json_default) + "\n"


def write_curves(path, curves):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda_re", "lambda_im", "h", "residual"])
        for lam, h, r in curves:
            w.writerow([repr(float(lam.real)), repr(float(lam.imag)), repr(float(h)), repr(float(r))])


def build_parser():
    p = argparse.ArgumentParser(prog="hslab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--tol", type=float, default=None,
                        help=f"tolerance for algebraic checks (default {DEFAULT_TOL}, env {TOL_ENV})")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
        sp.add_argument("--plot-data", default=None, help="CSV of flatness residual per lambda and h")

    c = sub.add_parser("check", help="run the applicable check suite")
    c.add_argument("subject", help="catalog name or grid file")
    c.add_argument("--grid", type=int, default=64)
    c.add_argument("--lambdas", type=parse_lambdas, default=None)
    c.add_argument("--u", type=parse_u, default=None)
    common(c)
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("convergence", help="convergence orders over several grids")
    v.add_argument("subject")
    v.add_argument("--grids", type=parse_grids, default=[32, 64, 128])
    v.add_argument("--lambdas", type=parse_lambdas, default=None)
    v.add_argument("--u", type=parse_u, default=None)
    common(v)
    v.set_defaults(func=cmd_convergence)

    s = sub.add_parser("super", help="superspace identity suite")
    s.add_argument("--mode", choices=("polynomial", "grid"), default="polynomial")
    s.add_argument("--grids", type=parse_grids, default=[64, 128])
    common(s)
    s.set_defaults(func=cmd_super)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rep, curves = args.func(args)
    except (InputError, ValueError) as exc:
        print(f"hslab: error: {exc}", file=sys.stderr)
        return 2
    text = dumps(rep)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot_data:
        write_curves(args.plot_data, curves)
    return min(sum(not c["pass"] for c in rep["checks"]), 125)


if __name__ == "__main__":
    sys.exit(main())
