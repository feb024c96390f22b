"""theta-component integration of Dg = g mu(D) for a holomorphic potential
mu(D) = mu_0(D) + theta mu_theta(D), with g = g_0 + theta g_theta.

Comparing theta-components gives g_theta = g_0 mu_0 and
g_0^-1 dg_0/dz = -(mu_0^2 + mu_theta), integrated along the real axis by
classical RK4, one coefficient array per lambda sample.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .grassmann import ETA0, GElem, GrassmannError, PointBackend, matmul


def identity(backend, n):
    return GElem.even(backend, backend.constant(np.eye(n)))


def mat_inv(g: GElem) -> GElem:
    """Inverse of an even matrix element with invertible body."""
    if g.parity() != 0:
        raise GrassmannError("only even matrices are inverted")
    be = g.backend
    binv = GElem.even(be, np.linalg.inv(g.body()))
    step = -matmul(binv, g.nilpotent())
    out = binv
    term = binv
    while True:
        term = matmul(step, term)
        if not term.terms:
            break
        out = out + term
    return out


def mat_exp_nilpotent(a: GElem) -> GElem:
    """exp(a) for a nilpotent even matrix (terminating series)."""
    if 0 in a.terms:
        raise GrassmannError("exp series needs a nilpotent argument")
    out = identity(a.backend, a.vshape[0])
    term = out
    k = 1
    while True:
        term = matmul(term, a)
        if not term.terms:
            break
        out = out + term / factorial(k)
        k += 1
    return out


@dataclass
class DPWResult:
    t: np.ndarray
    g0: list
    gtheta: list
    residual_theta0: float  # g_theta - g_0 mu_0
    residual_theta1: float  # -dg_0/dz - g_0 mu_theta - g_theta mu_0 (central differences)


def dpw_integrate(mu, t_end, steps, n=None, g_start=None) -> DPWResult:
    """Integrate along z = t in [0, t_end].

    ``mu(t)`` returns (mu_0, mu_theta): odd and even matrix elements over a
    PointBackend whose samples are lambda values."""
    m0, mt = mu(0.0)
    be = m0.backend
    n = m0.vshape[0] if n is None else n
    if m0.terms and m0.parity() != 1:
        raise GrassmannError("mu_0(D) must be odd")
    if mt.terms and mt.parity() != 0:
        raise GrassmannError("mu_theta(D) must be even")
    g = identity(be, n) if g_start is None else g_start
    h = t_end / steps

    def rhs(t, y):
        a, b = mu(t)
        return -matmul(y, matmul(a, a) + b)

    ts = [0.0]
    gs = [g]
    for k in range(steps):
        t = k * h
        k1 = rhs(t, g)
        k2 = rhs(t + h / 2, g + k1 * (h / 2))
        k3 = rhs(t + h / 2, g + k2 * (h / 2))
        k4 = rhs(t + h, g + k3 * h)
        g = g + (k1 + 2 * k2 + 2 * k3 + k4) * (h / 6)
        if any(not np.all(np.isfinite(c)) for c in g.terms.values()):
            raise GrassmannError("RK4 step produced non-finite entries")
        ts.append(t + h)
        gs.append(g)
    gth = [matmul(gk, mu(tk)[0]) for tk, gk in zip(ts, gs)]
    r0 = max((gt - matmul(gk, mu(tk)[0])).norm() for tk, gk, gt in zip(ts, gs, gth))
    r1 = 0.0
    for k in range(1, len(ts) - 1):
        dg = (gs[k + 1] - gs[k - 1]) / (2 * h)
        a, b = mu(ts[k])
        r1 = max(r1, (-dg - matmul(gs[k], b) - matmul(gth[k], a)).norm())
    return DPWResult(np.array(ts), gs, gth, r0, r1)


def laurent_coefficients(values: GElem, lambdas) -> dict:
    """Fourier coefficients over lambda samples on the unit circle
    (PointBackend axis = samples): {power: norm of coefficient}."""
    lambdas = np.asarray(lambdas)
    L = len(lambdas)
    out = {}
    for k in range(-(L // 2), L - L // 2):
        w = lambdas ** (-k) / L
        out[k] = max((np.abs(np.tensordot(w, c, axes=(0, 0))).max() for c in values.terms.values()),
                     default=0.0)
    return out


def log_derivative(result: DPWResult, index=None) -> GElem:
    """g_0^-1 dg_0/dz at a sample (fourth-order central difference of the
    RK4 trajectory)."""
    k = len(result.t) // 2 if index is None else index
    if not 2 <= k <= len(result.t) - 3:
        raise GrassmannError("need two samples on each side")
    h = result.t[1] - result.t[0]
    g = result.g0
    dg = (g[k - 2] - 8 * g[k - 1] + 8 * g[k + 1] - g[k + 2]) / (12 * h)
    return matmul(mat_inv(g[k]), dg)


# --------------------------------------------------------------------------
# examples

def circle_lambdas(L=16):
    return np.exp(2j * np.pi * (np.arange(L) + 0.5) / L)


def random_odd_matrix(backend, rng, n, n_eta, block="m"):
    """Odd so(n)-valued constant: entries linear in eta_1..eta_N.
    block="m": first row/column only; "k": the complementary block."""
    mask = np.zeros((n, n))
    if block == "m":
        mask[0, 1:] = 1
    else:
        mask[1:, 1:] = np.triu(np.ones((n - 1, n - 1)), 1)
    out = GElem.zero(backend, (n, n))
    for k in range(n_eta):
        a = rng.standard_normal((n, n)) * mask
        a = a - a.T
        out = out + GElem.generator(backend, ETA0 + k) * GElem.even(backend, backend.constant(a))
    return out


def closed_form_example(rng, n=3, n_eta=4, L=16, t_end=1.0, steps=40):
    """mu_0 = lambda^-1 A, mu_theta = 0: g_0(z) = exp(-z lambda^-2 A^2).
    Returns (max deviation from the closed form, result, lambdas)."""
    lam = circle_lambdas(L)
    be = PointBackend(L)
    A = random_odd_matrix(be, rng, n, n_eta)
    inv_l = GElem.even(be, (1 / lam)[:, None, None] * np.ones((1, n, n)))
    mu0 = A * inv_l

    def mu(t):
        return mu0, GElem.zero(be, (n, n))

    res = dpw_integrate(mu, t_end, steps)
    A2 = matmul(A, A)
    l2 = GElem.even(be, (lam**-2)[:, None, None] * np.ones((1, n, n)))
    err = 0.0
    for t, g in zip(res.t, res.g0):
        exact = mat_exp_nilpotent(A2 * l2 * (-t))
        err = max(err, (g - exact).norm())
    return err, res, lam


def generic_example(rng, n=3, n_eta=4, L=16, t_end=0.5, steps=80):
    """mu_0 = l^-1 (A + t B) + C + l E, mu_theta = l^-1 (P + t Q) with A, B, E
    in the off-diagonal block, C in the diagonal block and P, Q even
    nilpotent.  Returns (result, lambdas)."""
    lam = circle_lambdas(L)
    be = PointBackend(L)
    A, B, E = (random_odd_matrix(be, rng, n, n_eta) for _ in range(3))
    C = random_odd_matrix(be, rng, n, n_eta, block="k")
    P = matmul(random_odd_matrix(be, rng, n, n_eta), random_odd_matrix(be, rng, n, n_eta, block="k"))
    Q = matmul(random_odd_matrix(be, rng, n, n_eta, block="k"), random_odd_matrix(be, rng, n, n_eta))

    def lpow(p):
        return GElem.even(be, (lam**p)[:, None, None] * np.ones((1, n, n)))

    def mu(t):
        m0 = (A + B * t) * lpow(-1) + C + E * lpow(1)
        mt = (P + Q * t) * lpow(-1)
        return m0, mt

    return dpw_integrate(mu, t_end, steps), lam
