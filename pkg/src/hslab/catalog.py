"""Analytic test surfaces with known ground truth, and the JSON grid format.

C^2 is identified with H by (z1, z2) -> z1 + z2 j, so a point of C^2 has
quaternion components (Re z1, Im z1, Re z2, Im z2).  Surfaces in R^3 are
placed in Im H as (0, x1, x2, x3).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from .gridcalc import GridDomain, GridMap
from .gauss import Immersion

GRID_SCHEMA = ("hslab-grid/1: values are row-major with y fastest; the entry for "
               "sample (i, j), component k sits at index (i*ny + j)*dim + k")


class CatalogError(KeyError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    """A named analytic example.

    ``evaluator(x, y)`` returns points with components on the last axis and
    ``jacobian(x, y)`` returns the pair (dX/dx, dX/dy).  Frame-only entries
    (no immersion) provide ``rotor`` instead.
    """

    name: str
    dim: int
    xlim: tuple
    ylim: tuple
    periodic: tuple = (False, False)
    expected: dict = field(default_factory=dict)
    evaluator: Optional[Callable] = None
    jacobian: Optional[Callable] = None
    rotor: Optional[Callable] = None
    notes: str = ""

    def domain(self, n: int) -> GridDomain:
        return GridDomain.box(n, self.xlim, self.ylim, periodic=self.periodic)

    def immersion(self, n: int, domain: GridDomain | None = None) -> Immersion:
        if self.evaluator is None:
            raise CatalogError(f"{self.name} is a frame-only entry")
        d = self.domain(n) if domain is None else domain
        x, y = d.mesh()
        exact = None
        if self.jacobian is not None:
            exact = tuple(np.asarray(a, dtype=float) for a in self.jacobian(x, y))
        return Immersion(GridMap(d, np.asarray(self.evaluator(x, y), dtype=float)), exact)

    def rotor_map(self, n: int) -> GridMap:
        if self.rotor is None:
            raise CatalogError(f"{self.name} has no rotor field")
        return GridMap.sample(self.domain(n), self.rotor)


def _stack(*cs):
    cs = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in cs])
    return np.stack(cs, axis=-1)


# --------------------------------------------------------------------------
# evaluators

def _plane(x, y):
    return _stack(x, 0 * x, y, 0 * x)


def _plane_jac(x, y):
    z, o = 0 * x, 0 * x + 1
    return _stack(o, z, z, z), _stack(z, z, o, z)


_S = 1 / math.sqrt(2)


def _clifford(x, y):
    return _S * _stack(np.cos(x), np.sin(x), np.cos(y), np.sin(y))


def _clifford_jac(x, y):
    z = 0 * x * y
    return (_S * _stack(-np.sin(x) + z, np.cos(x) + z, z, z),
            _S * _stack(z, z, -np.sin(y) + z, np.cos(y) + z))


def _catenoid(x, y):
    # (cosh y e^{ix}, sinh y e^{-ix})
    return _stack(np.cosh(y) * np.cos(x), np.cosh(y) * np.sin(x),
                  np.sinh(y) * np.cos(x), -np.sinh(y) * np.sin(x))


def _catenoid_jac(x, y):
    xx = _stack(-np.cosh(y) * np.sin(x), np.cosh(y) * np.cos(x),
                -np.sinh(y) * np.sin(x), -np.sinh(y) * np.cos(x))
    yy = _stack(np.sinh(y) * np.cos(x), np.sinh(y) * np.sin(x),
                np.cosh(y) * np.cos(x), -np.cosh(y) * np.sin(x))
    return xx, yy


def _complex_line(x, y):
    return _stack(x, y, 0 * x, 0 * x)


def _complex_line_jac(x, y):
    z, o = 0 * x, 0 * x + 1
    return _stack(o, z, z, z), _stack(z, o, z, z)


def _cylinder(x, y):
    return _stack(0 * x, np.cos(x), np.sin(x), y)


def _cylinder_jac(x, y):
    z = 0 * x * y
    return _stack(z, -np.sin(x) + z, np.cos(x) + z, z), _stack(z, z, z, z + 1)


def _sphere(x, y):
    d = 1 + x**2 + y**2
    return _stack(0 * x, 2 * x / d, 2 * y / d, (x**2 + y**2 - 1) / d)


def _sphere_jac(x, y):
    d = 1 + x**2 + y**2
    z = 0 * x
    xx = _stack(z, 2 * (d - 2 * x**2) / d**2, -4 * x * y / d**2, 4 * x / d**2)
    yy = _stack(z, -4 * x * y / d**2, 2 * (d - 2 * y**2) / d**2, 4 * y / d**2)
    return xx, yy


TORUS_R, TORUS_r = 2.0, 1.0


@lru_cache(maxsize=None)
def _torus_profile(nodes=4096):
    """v(w) for the isothermal coordinate w = int r dv / (R + r cos v)."""
    v = np.linspace(-np.pi, np.pi, nodes + 1)
    w = cumulative_simpson(TORUS_r / (TORUS_R + TORUS_r * np.cos(v)), x=v, initial=0.0)
    w -= w[nodes // 2]
    return CubicSpline(w, v), float(w[-1] - w[0])


def torus_period():
    return _torus_profile()[1]


def _torus_v(w):
    spline, period = _torus_profile()
    wr = (np.asarray(w) + period / 2) % period - period / 2
    return spline(wr), spline(wr, 1)


def _torus(x, y):
    v, _ = _torus_v(y)
    rad = TORUS_R + TORUS_r * np.cos(v)
    return _stack(0 * x, rad * np.cos(x), rad * np.sin(x), TORUS_r * np.sin(v))


def _torus_jac(x, y):
    v, dv = _torus_v(y)
    rad = TORUS_R + TORUS_r * np.cos(v)
    z = 0 * x
    xx = _stack(z, -rad * np.sin(x), rad * np.cos(x), z)
    yy = _stack(z, -TORUS_r * np.sin(v) * np.cos(x) * dv, -TORUS_r * np.sin(v) * np.sin(x) * dv,
                TORUS_r * np.cos(v) * dv + z)
    return xx, yy


def _octonion_clifford(x, y):
    q = _clifford(x, y)
    return np.concatenate([q, np.zeros(q.shape[:-1] + (4,))], axis=-1)


def _octonion_clifford_jac(x, y):
    pad = lambda a: np.concatenate([a, np.zeros(a.shape[:-1] + (4,))], axis=-1)
    xx, yy = _clifford_jac(x, y)
    return pad(xx), pad(yy)


def _nonharmonic_rotor(x, y):
    t = x**2 + 0 * y
    return _stack(np.cos(t), np.sin(t), 0 * t, 0 * t)


TWO_PI = 2 * np.pi

_ENTRIES = {
    "lagrangian_plane": CatalogEntry(
        "lagrangian_plane", 4, (-1, 1), (-1, 1),
        expected=dict(conformal=True, lagrangian=True, special_lagrangian=True, hsl=True),
        evaluator=_plane, jacobian=_plane_jac,
        notes="X = x + y j; tangent plane span{1, j}, rho = j, beta = 0"),
    "clifford_torus": CatalogEntry(
        "clifford_torus", 4, (0, TWO_PI), (0, TWO_PI), periodic=(False, False),
        expected=dict(conformal=True, lagrangian=True, special_lagrangian=False, hsl=True),
        evaluator=_clifford, jacobian=_clifford_jac,
        notes="(e^{ix}, e^{iy})/sqrt2; rho = e^{i(x+y+pi)} j so beta is linear and harmonic"),
    "lagrangian_catenoid": CatalogEntry(
        "lagrangian_catenoid", 4, (0, TWO_PI), (-1, 1),
        expected=dict(conformal=True, lagrangian=True, special_lagrangian=True, hsl=True),
        evaluator=_catenoid, jacobian=_catenoid_jac,
        notes="(cosh y e^{ix}, sinh y e^{-ix}); both speeds squared equal cosh 2y; det_C frame = i"),
    "complex_line": CatalogEntry(
        "complex_line", 4, (-1, 1), (-1, 1),
        expected=dict(conformal=True, lagrangian=False, rho_harmonic=True),
        evaluator=_complex_line, jacobian=_complex_line_jac,
        notes="(x + iy, 0); rho = i everywhere"),
    "cmc_cylinder": CatalogEntry(
        "cmc_cylinder", 4, (0, TWO_PI), (-1, 1), periodic=(True, False),
        expected=dict(conformal=True, imaginary=True, cmc=True, rho_harmonic=True),
        evaluator=_cylinder, jacobian=_cylinder_jac,
        notes="unit cylinder in Im H; Gauss map (cos x, sin x, 0) is harmonic"),
    "round_sphere": CatalogEntry(
        "round_sphere", 4, (-1, 1), (-1, 1),
        expected=dict(conformal=True, imaginary=True, cmc=True, rho_harmonic=True),
        evaluator=_sphere, jacobian=_sphere_jac,
        notes="inverse stereographic projection; Gauss map is the identity of S^2"),
    "torus_of_revolution": CatalogEntry(
        "torus_of_revolution", 4, (0, TWO_PI), (-0.5 * torus_period(), 0.5 * torus_period()),
        periodic=(True, True),
        expected=dict(conformal=True, imaginary=True, cmc=False, rho_harmonic=False),
        evaluator=_torus, jacobian=_torus_jac,
        notes="R=2, r=1 in isothermal coordinates via tabulated quadrature; not CMC"),
    "octonion_clifford": CatalogEntry(
        "octonion_clifford", 8, (0, TWO_PI), (0, TWO_PI),
        expected=dict(conformal=True, rho_harmonic=True),
        evaluator=_octonion_clifford, jacobian=_octonion_clifford_jac,
        notes="Clifford torus through H inside O; rho is the quaternionic rho"),
    "nonharmonic_rotor": CatalogEntry(
        "nonharmonic_rotor", 4, (-1, 1), (-1, 1),
        expected=dict(rho_harmonic=False),
        rotor=_nonharmonic_rotor,
        notes="frame only: p = e^{i x^2}; p j conj(p) = e^{2i x^2} j, angle Laplacian 4"),
}


def available():
    return sorted(_ENTRIES)


def builtin(name: str) -> CatalogEntry:
    try:
        return _ENTRIES[name]
    except KeyError:
        raise CatalogError(f"unknown catalog entry {name!r}; available: {', '.join(available())}") from None


# --------------------------------------------------------------------------
# grid files

def save_grid(path, X, metadata=None):
    """Write an Immersion or GridMap as a GridFile JSON document."""
    gm = X.X if isinstance(X, Immersion) else X
    d = gm.domain
    vals = np.asarray(gm.values, dtype=float)
    doc = {
        "schema": GRID_SCHEMA,
        "dim": int(vals.shape[-1]),
        "nx": d.nx, "ny": d.ny, "hx": d.hx, "hy": d.hy,
        "x0": d.x0, "y0": d.y0,
        "periodic": list(d.periodic),
        "values": vals.reshape(-1).tolist(),
        "metadata": metadata or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_grid(path) -> Immersion:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    dim, nx, ny = int(doc["dim"]), int(doc["nx"]), int(doc["ny"])
    if dim not in (3, 4, 8):
        raise ValueError(f"unsupported dimension {dim}; expected 3, 4 or 8")
    vals = np.asarray(doc["values"], dtype=float)
    expected = nx * ny * dim
    if vals.size != expected:
        raise ValueError(f"shape mismatch: expected {expected} values (nx*ny*dim), got {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("grid file contains non-finite entries")
    vals = vals.reshape(nx, ny, dim)
    if dim == 3:
        vals = np.concatenate([np.zeros((nx, ny, 1)), vals], axis=-1)
    d = GridDomain(nx, ny, float(doc["hx"]), float(doc["hy"]), float(doc.get("x0", 0.0)),
                   float(doc.get("y0", 0.0)), tuple(doc.get("periodic", (False, False))))
    return Immersion(GridMap(d, vals))
