"""Superfields Phi = u + theta^1 psi_1 + theta^2 psi_2 + theta^1 theta^2 AuxF
into S^n and the superharmonic system in component and superfield form.

Conventions: <x, y> = sum_k x_k y_k keeps the order of odd factors;
psi = psi_1 - i psi_2; complex conjugation acts on coefficients only.
The covariant derivative on u*TS^n is the tangential part of the flat one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grassmann import (ETA0, THETA, THETABAR, Dbar_op, D_op, GElem, GrassmannError, dot, g_mul,
                        odd_coordinates, scale)

BASIS = ("1", "theta", "thetabar", "theta thetabar")
_PATTERN = {"1": 0, "theta": 1, "thetabar": 2, "theta thetabar": 3}


def rscale(v: GElem, s: GElem) -> GElem:
    """Vector times scalar with the scalar on the right."""
    return g_mul(v, s, ("i", "", "i"))


def tangential(v: GElem, u: GElem) -> GElem:
    return v - scale(dot(v, u), u)


def theta_components(e: GElem) -> dict:
    """Coefficients of e in the basis (1, theta, thetabar, theta thetabar);
    each is an element in the eta generators only."""
    out = {}
    for name, pat in _PATTERN.items():
        out[name] = GElem(e.backend, {m & ~3: c for m, c in e.terms.items() if m & 3 == pat}, e.vshape)
    return out


@dataclass
class SuperField:
    u: GElem
    psi1: GElem
    psi2: GElem
    aux: GElem

    def __post_init__(self):
        if set(self.u.terms) - {0}:
            raise GrassmannError("u must be an ordinary (body) map")
        for name in ("psi1", "psi2"):
            f = getattr(self, name)
            if f.terms and f.parity() != 1:
                raise GrassmannError(f"{name} must be odd")
            if any(m & 3 for m in f.terms):
                raise GrassmannError(f"{name} may not involve theta")
        if self.aux.terms and self.aux.parity() != 0:
            raise GrassmannError("AuxF must be even")

    @property
    def backend(self):
        return self.u.backend

    @property
    def psi(self):
        return self.psi1 - 1j * self.psi2

    @property
    def psibar(self):
        return self.psi1 + 1j * self.psi2

    @property
    def phi(self) -> GElem:
        _, _, t1, t2 = odd_coordinates(self.backend)
        return (self.u + scale(t1, self.psi1) + scale(t2, self.psi2)
                + scale(t1 * t2, self.aux))

    def with_aux(self, aux):
        return SuperField(self.u, self.psi1, self.psi2, aux)


def aux_from_spinors(u: GElem, psi1: GElem, psi2: GElem) -> GElem:
    """AuxF = (1/2i) <psi, psibar> u."""
    psi = psi1 - 1j * psi2
    psib = psi1 + 1j * psi2
    return scale(dot(psi, psib), u) * (1 / 2j)


def check_sphere(u: GElem, psi1=None, psi2=None, tol=1e-8, depth=0):
    defect = (dot(u, u) - 1.0).norm(depth)
    if defect > tol:
        raise GrassmannError(f"u is off the sphere (defect {defect:.3g})")
    for p in (psi1, psi2):
        if p is not None and p.terms:
            t = dot(p, u).norm(depth)
            if t > tol:
                raise GrassmannError(f"spinor is not tangent to the sphere (defect {t:.3g})")


def superharmonic_component_residuals(u: GElem, psi1: GElem, psi2: GElem, aux: GElem | None = None,
                                      tol=1e-8, depth=0):
    """(R_map, R_spinor, R_aux):

        R_map    = nabla_zbar u_z - 1/4 (psi <psi, u_zbar> + psibar <psibar, u_z>)
        R_spinor = nabla_zbar psi - 1/4 <psibar, psi> psibar
        R_aux    = AuxF - (1/2i) <psi, psibar> u

    With aux=None the auxiliary field is taken from its algebraic equation,
    so R_aux vanishes."""
    check_sphere(u, psi1, psi2, tol, depth)
    psi = psi1 - 1j * psi2
    psib = psi1 + 1j * psi2
    uz, uzb = u.dz(), u.dzbar()
    r_map = (tangential(uz.dzbar(), u)
             - 0.25 * (rscale(psi, dot(psi, uzb)) + rscale(psib, dot(psib, uz))))
    r_spin = tangential(psi.dzbar(), u) - 0.25 * scale(dot(psib, psi), psib)
    target = aux_from_spinors(u, psi1, psi2)
    r_aux = (aux - target) if aux is not None else target - target
    return r_map, r_spin, r_aux


def superharmonic_phi_residual(phi: GElem) -> GElem:
    """Dbar D Phi + <Dbar Phi, D Phi> Phi."""
    dphi = D_op(phi)
    dbphi = Dbar_op(phi)
    return Dbar_op(dphi) + scale(dot(dbphi, dphi), phi)


def sphere_defect(phi: GElem) -> GElem:
    """<Phi, Phi> - 1 as a Grassmann element."""
    return dot(phi, phi) - 1.0


def component_identification(field: SuperField, tol=1e-8):
    """Expand the superfield residual in (1, theta, thetabar, theta thetabar)
    and compare with the closed-form combinations of the component residuals
    (a = psi/2, b = psibar/2, s0 = <b, a>):

        E_1       = (i/2) R_aux
        E_theta   = 1/2 conj(R_spinor) - (i/2) <R_aux, a> u
        E_thetab  = -1/2 R_spinor - (i/2) <b, R_aux> u
        E_thth    = -R_map + (i/2)(s0 R_aux^T + <R_aux, a> b - <b, R_aux> a)
                    + (1/2(<R_spinor, a> - <b, conj R_spinor>)
                       + (3i/2) s0 <u, R_aux> + 1/4 <R_aux, R_aux>) u

    The expansion is exact whenever |u| = 1 and <psi_i, u> = 0 hold exactly
    (jet backend).  Returns (differences, components, residuals)."""
    u = field.u
    r_map, r_spin, r_aux = superharmonic_component_residuals(u, field.psi1, field.psi2, field.aux, tol)
    a = 0.5 * field.psi
    b = 0.5 * field.psibar
    s0 = dot(b, a)
    E = theta_components(superharmonic_phi_residual(field.phi))
    ra_a = dot(r_aux, a)
    b_ra = dot(b, r_aux)
    predicted = {
        "1": 0.5j * r_aux,
        "theta": 0.5 * r_spin.conj() - 0.5j * scale(ra_a, u),
        "thetabar": -0.5 * r_spin - 0.5j * scale(b_ra, u),
        "theta thetabar": (
            -r_map
            + 0.5j * (scale(s0, tangential(r_aux, u)) + scale(ra_a, b) - scale(b_ra, a))
            + scale(0.5 * (dot(r_spin, a) - dot(b, r_spin.conj()))
                    + 1.5j * g_mul(s0, dot(u, r_aux)) + 0.25 * dot(r_aux, r_aux), u)),
    }
    diffs = {k: E[k] - predicted[k] for k in BASIS}
    return diffs, E, {"map": r_map, "spinor": r_spin, "aux": r_aux}


# --------------------------------------------------------------------------
# example fields

def _scalar(backend, a):
    return GElem.even(backend, a)


def _mul(backend, a, b):
    return backend.product(a, b, None)


def stereographic_u(backend):
    """Inverse stereographic projection of w = z: a conformal harmonic map.
    Returns (u, u_z) as body elements with u_z in closed form."""
    x, y = backend.coords()
    x = x.astype(complex)
    y = y.astype(complex)
    r2 = _mul(backend, x, x) + _mul(backend, y, y)
    s = r2 + backend.constant(1.0)
    inv = backend.power(s, -1.0)
    inv2 = _mul(backend, inv, inv)
    num = np.stack([2 * x, 2 * y, r2 - backend.constant(1.0)], axis=-1)
    u = backend.scalar_mul(inv, num)
    zbar = x - 1j * y
    dnum = np.stack([backend.constant(1.0) + 0 * x, -1j * backend.constant(1.0) + 0 * x, zbar], axis=-1)
    uz = backend.scalar_mul(inv, dnum) - backend.scalar_mul(_mul(backend, zbar, inv2), num)
    return GElem.even(backend, u.real.astype(float) if backend.kind == "grid" else u), GElem.even(backend, uz)


def gnomonic_u(backend):
    """u = (x, y, 1)/sqrt(1 + x^2 + y^2): not harmonic."""
    x, y = backend.coords()
    s = _mul(backend, x, x) + _mul(backend, y, y) + backend.constant(1.0)
    inv = backend.power(s, -0.5)
    num = np.stack([x, y, backend.constant(1.0) + 0 * x], axis=-1)
    return GElem.even(backend, backend.scalar_mul(inv, num))


def eta(backend, k):
    return GElem.generator(backend, ETA0 + k)


def superharmonic_example(backend, etas=(0, 1)) -> SuperField:
    """u harmonic (stereographic), psi = zeta u_z with zeta = eta_a + i eta_b,
    AuxF from its algebraic equation.  Solves the system exactly, with
    psi != 0 and AuxF != 0."""
    u, uz = stereographic_u(backend)
    ea, eb = eta(backend, etas[0]), eta(backend, etas[1])
    # psi = psi1 - i psi2 = (ea + i eb) u_z
    psi = scale(ea + 1j * eb, uz)
    psib = psi.conj()
    psi1 = 0.5 * (psi + psib)
    psi2 = (psib - psi) * (0.5 / 1j)
    psi1 = psi1.map_coeffs(np.real) if backend.kind != "jet" else psi1
    psi2 = psi2.map_coeffs(np.real) if backend.kind != "jet" else psi2
    return SuperField(u, psi1, psi2, aux_from_spinors(u, psi1, psi2))


def nonharmonic_example(backend) -> SuperField:
    u = gnomonic_u(backend)
    z = GElem.zero(backend, (3,))
    return SuperField(u, z, z, z)


def random_tangent_field(backend, rng, n_eta=4, degree=2, aux="equation", target_dim=3) -> SuperField:
    """u = stereographic map; psi_i = sum_k eta_k P_u(w_ik) with w_ik random
    polynomial vector fields.  aux="equation" sets AuxF from its algebraic
    equation; aux="random" adds a random even nilpotent perturbation."""
    u, _ = stereographic_u(backend)
    x, y = backend.coords()
    one = backend.constant(1.0) + 0 * x
    monos = []
    for d in range(degree + 1):
        for p in range(d + 1):
            m = one
            for _ in range(p):
                m = _mul(backend, m, x)
            for _ in range(d - p):
                m = _mul(backend, m, y)
            monos.append(m)

    def poly_vec():
        coef = rng.standard_normal((len(monos), target_dim))
        return GElem.even(backend, sum(np.stack([c_ * m for c_ in c], axis=-1) for c, m in zip(coef, monos)))

    psis = []
    for _ in range(2):
        total = GElem.zero(backend, (target_dim,))
        for k in range(n_eta):
            total = total + scale(eta(backend, k), tangential(poly_vec(), u))
        psis.append(total)
    eq = aux_from_spinors(u, *psis)
    if aux == "random":
        pert = GElem.zero(backend, (target_dim,))
        for i in range(n_eta):
            for j in range(i + 1, n_eta):
                pert = pert + scale(eta(backend, i) * eta(backend, j), poly_vec())
        eq = eq + pert
    return SuperField(u, psis[0], psis[1], eq)
