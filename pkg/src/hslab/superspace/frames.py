"""Superframes F : R^{2|2} -> SO(n+1) with F e_0 = Phi, their Maurer-Cartan
form evaluated on the frame (D, Dbar, d/dz, d/dzbar), graded curvature and
the lambda-family of connections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import SuperField
from .grassmann import (Dbar_op, D_op, GElem, GrassmannError, bracket, dot, g_inv_sqrt, matmul, scale,
                        stack)

FIELDS = ("D", "Dbar", "dz", "dzbar")
PARITY = {"D": 1, "Dbar": 1, "dz": 0, "dzbar": 0}
PAIRS = (("D", "Dbar"), ("D", "dz"), ("D", "dzbar"), ("Dbar", "dz"), ("Dbar", "dzbar"), ("dz", "dzbar"))
EXTRA_PAIRS = (("D", "D"), ("Dbar", "Dbar"))


def apply_field(name, e: GElem) -> GElem:
    if name == "D":
        return D_op(e)
    if name == "Dbar":
        return Dbar_op(e)
    if name == "dz":
        return e.dz()
    if name == "dzbar":
        return e.dzbar()
    raise GrassmannError(f"unknown vector field {name!r}")


def superframe(phi: GElem | SuperField, tol=1e-3) -> GElem:
    """Orthonormal frame with first column Phi, by Grassmann Gram-Schmidt on
    Phi followed by a fixed orthonormal basis of c^perp, where c is the
    normalized mean of the body of Phi.  Smooth as long as <Phi, c> stays
    away from zero, which is checked; positively oriented."""
    if isinstance(phi, SuperField):
        phi = phi.phi
    be = phi.backend
    n1 = phi.vshape[0]
    body = be.body_value(phi.body()).real.reshape(-1, n1)
    body = body[np.all(np.isfinite(body), axis=1)]
    c = body.mean(axis=0)
    c /= np.linalg.norm(c)
    if np.min(body @ c) < tol:
        raise GrassmannError("Phi leaves the hemisphere around its mean; no single Gram-Schmidt chart")
    q, _ = np.linalg.qr(np.column_stack([c, np.eye(n1)]))
    cols = [phi]
    for j in range(1, n1):
        v = GElem.even(be, be.constant(q[:, j]))
        for f in cols:
            v = v - scale(dot(v, f), f)
        cols.append(scale(g_inv_sqrt(dot(v, v)), v))
    F = stack(cols, axis=-1)
    sign = np.unique(np.sign(np.linalg.det(be.body_value(F.body()).real)))
    sign = sign[np.isfinite(sign)]
    if len(sign) != 1 or sign[0] == 0:
        raise GrassmannError("frame orientation is not constant")
    if sign[0] < 0:
        cols[-1] = -cols[-1]
    return stack(cols, axis=-1)


def orthogonality_defect(F: GElem, depth=0) -> float:
    n1 = F.vshape[0]
    return (matmul(F.T, F) - GElem.even(F.backend, F.backend.constant(np.eye(n1)))).norm(depth)


@dataclass
class SuperConnection:
    """so(n+1)-valued 1-form through its values on (D, Dbar, d/dz, d/dzbar)."""

    D: GElem
    Dbar: GElem
    dz: GElem
    dzbar: GElem

    def __post_init__(self):
        for name in FIELDS:
            e = getattr(self, name)
            if e.terms and (not e.is_homogeneous() or e.parity() != PARITY[name]):
                raise GrassmannError(f"alpha({name}) has the wrong parity")

    def value(self, name):
        return getattr(self, name)

    @classmethod
    def from_frame(cls, F: GElem) -> "SuperConnection":
        Ft = F.T
        return cls(*(matmul(Ft, apply_field(nm, F)) for nm in FIELDS))

    def split(self):
        """(alpha_0, alpha_1): the block fixing e_0, and the first row/column."""
        n1 = self.D.vshape[0]
        m0 = np.ones((n1, n1))
        m0[0, :] = 0
        m0[:, 0] = 0
        m1 = 1 - m0

        def part(mask):
            return SuperConnection(*(getattr(self, nm).map_coeffs(lambda c: c * mask) for nm in FIELDS))

        return part(m0), part(m1)


def super_curvature(alpha: SuperConnection, extras=False) -> dict:
    """d alpha + 1/2 [alpha ^ alpha] on frame pairs (U, V):

        U alpha(V) - (-1)^{|U||V|} V alpha(U) + [alpha(U), alpha(V)] - alpha([U, V])

    with [D, D] = -2 d/dz, [Dbar, Dbar] = -2 d/dzbar and all other frame
    brackets zero.  The (D, Dbar) component comes first."""
    pairs = PAIRS + (EXTRA_PAIRS if extras else ())
    out = {}
    for U, V in pairs:
        sign = (-1) ** (PARITY[U] * PARITY[V])
        val = (apply_field(U, alpha.value(V)) - sign * apply_field(V, alpha.value(U))
               + bracket(alpha.value(U), alpha.value(V)))
        if (U, V) == ("D", "D"):
            val = val + 2 * alpha.dz
        elif (U, V) == ("Dbar", "Dbar"):
            val = val + 2 * alpha.dzbar
        out[(U, V)] = val
    return out


def lambda_connection(alpha: SuperConnection, lam) -> SuperConnection:
    """alpha(D)_l = a0(D) + l^-1 a1(D), alpha(Dbar)_l = a0(Dbar) + l a1(Dbar);
    the even values are fixed by the (D, D) and (Dbar, Dbar) equations."""
    if lam == 0:
        raise GrassmannError("lambda must be nonzero")
    a0, a1 = alpha.split()
    aD = a0.D + lam**-1 * a1.D
    aDb = a0.Dbar + lam * a1.Dbar
    az = -(D_op(aD) + matmul(aD, aD))
    azb = -(Dbar_op(aDb) + matmul(aDb, aDb))
    return SuperConnection(aD, aDb, az, azb)


def dbar_d_component(aD: GElem, aDb: GElem) -> GElem:
    """Dbar alpha(D) + D alpha(Dbar) + [alpha(Dbar), alpha(D)]."""
    return Dbar_op(aD) + D_op(aDb) + bracket(aDb, aD)


def superharmonic_frame_residual(alpha: SuperConnection) -> GElem:
    """Dbar alpha_1(D) + [alpha_0(Dbar), alpha_1(D)]."""
    a0, a1 = alpha.split()
    return Dbar_op(a1.D) + bracket(a0.Dbar, a1.D)


def lambda_family_residual(F: GElem, lambdas=(1.0, 1j, np.exp(1j * np.pi / 5), 2.0), depth=0) -> dict:
    """Evaluate the lambda-family expression at sampled lambda and split it
    into powers lambda^-1, lambda^0, lambda^1 (4th roots of unity)."""
    alpha = SuperConnection.from_frame(F)
    a0, a1 = alpha.split()

    def expr(lam):
        return dbar_d_component(a0.D + lam**-1 * a1.D, a0.Dbar + lam * a1.Dbar)

    per_lambda = {complex(l): expr(l).norm(depth) for l in lambdas}
    roots = [1j**m for m in range(4)]
    vals = [expr(w) for w in roots]
    coeffs = {}
    for k in (-1, 0, 1, 2):
        acc = vals[0] * (roots[0] ** -k)
        for v, w in zip(vals[1:], roots[1:]):
            acc = acc + v * (w**-k)
        coeffs[k] = acc * 0.25
    sh = superharmonic_frame_residual(alpha)
    return {
        "per_lambda": per_lambda,
        "per_power": {k: c.norm(depth) for k, c in coeffs.items()},
        "superharmonic": sh.norm(depth),
        "minus_one_vs_superharmonic": (coeffs[-1] - sh).norm(depth),
    }


def graded_curvature_diagnostic(F: GElem, lam, depth=0) -> dict:
    """Norms of all graded curvature components of the lambda-connection."""
    curv = super_curvature(lambda_connection(SuperConnection.from_frame(F), lam), extras=True)
    return {f"{u},{v}": c.norm(depth) for (u, v), c in curv.items()}
