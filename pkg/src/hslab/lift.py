"""Lifts F = (R, X) into G = K x| R^n, the order-4 automorphism
tau(R, X) = (L_u R L_u^-1, -L_u X), the eigenspace splitting of the
Maurer-Cartan form, the spectral family alpha_lambda and the
flatness / lift-condition checks built on them.

Group elements and Lie algebra elements are (n+1)x(n+1) real matrices in
homogeneous form [[R, X], [0, 1]] and [[A, x], [0, 0]].  On these tau is
conjugation by diag(L_u, -1), so the projector onto the eigenvalue i^k is

    P_k(xi) = 1/4 sum_m i^(-k m) tau^m(xi).

Eigenvalue convention: g_-1 <-> -i, g_0 <-> 1, g_1 <-> i, g_2 <-> -1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.linalg import null_space

from . import algebra as alg
from .gauss import GeometryError, Immersion, gauss_data
from .gridcalc import GridDomain, commutator, curvature_residual, d_dx, d_dy, finite_block, sup_norm

GROUPS = ("spin3", "so4", "u2", "u1", "spin7")
STANDARD_LAMBDAS = (1.0, 1j, np.exp(1j * np.pi / 5), 2.0)
POWERS = (-1, 0, 1, 2)


class LiftError(ValueError):
    pass


# --------------------------------------------------------------------------
# Lie algebras

def _orthonormal_span(mats, tol=1e-10):
    flat = np.array([m.reshape(-1) for m in mats])
    u, s, vt = np.linalg.svd(flat, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    shape = mats[0].shape
    return [vt[r].reshape(shape) for r in range(rank)]


@lru_cache(maxsize=None)
def rotation_basis(group: str):
    """Orthonormal (Frobenius) basis of the rotation part of the algebra."""
    if group == "so4":
        mats = []
        for a, b in combinations(range(4), 2):
            m = np.zeros((4, 4))
            m[a, b], m[b, a] = -1.0, 1.0
            mats.append(m)
        return tuple(_orthonormal_span(mats))
    if group == "spin3":
        return tuple(_orthonormal_span([alg.left_matrix(v) for v in (alg.I, alg.J, alg.K)]))
    if group == "u1":
        return tuple(_orthonormal_span([alg.left_matrix(alg.I)]))
    if group == "u2":
        so4 = rotation_basis("so4")
        Li = alg.left_matrix(alg.I)
        cons = np.array([commutator(m, Li).reshape(-1) for m in so4]).T
        ns = null_space(cons)
        return tuple(_orthonormal_span([sum(c * m for c, m in zip(col, so4)) for col in ns.T]))
    if group == "spin7":
        gens = [alg.left_matrix(alg.basis(8, a)) for a in range(1, 8)]
        return tuple(_orthonormal_span([ga @ gb for ga, gb in combinations(gens, 2)]))
    raise LiftError(f"unknown group {group!r}; expected one of {GROUPS}")


def ambient_dim(group: str) -> int:
    return 8 if group == "spin7" else 4


def homogeneous(A=None, x=None, n=4):
    m = np.zeros((n + 1, n + 1))
    if A is not None:
        m[:n, :n] = A
    if x is not None:
        m[:n, n] = x
    return m


@dataclass(frozen=True)
class TauAction:
    group: str
    u: np.ndarray
    basis: tuple  # homogeneous matrices, orthonormal
    tau: np.ndarray  # tau_* in basis coordinates (real)
    conj: np.ndarray  # diag(L_u, -1)

    @property
    def n(self):
        return self.conj.shape[0] - 1

    def apply(self, xi, power=1):
        """tau_*^power applied to matrices on the trailing two axes."""
        m = np.linalg.matrix_power(self.conj, power % 4)
        return m @ xi @ np.linalg.inv(m)

    def project(self, xi, k):
        """Component of xi in the i^k eigenspace (xi may be complex)."""
        out = 0
        for m in range(4):
            out = out + (1j) ** (-k * m) * self.apply(xi, m)
        return out / 4

    def projector(self, k):
        t = np.eye(len(self.basis), dtype=complex)
        acc = np.zeros_like(t)
        for m in range(4):
            acc += (1j) ** (-k * m) * t
            t = t @ self.tau
        return acc / 4

    def eigen_dims(self):
        """Complex dimensions of (g_-1, g_0, g_1, g_2)."""
        return tuple(int(round(np.trace(self.projector(k)).real)) for k in POWERS)

    def coords(self, xi):
        return np.array([np.sum(b * xi) for b in self.basis])


def build_tau(group: str = "spin3", u=None, tol=1e-12) -> TauAction:
    n = ambient_dim(group)
    ctx = alg.AlgebraContext(n, u)
    rot = [homogeneous(A, n=n) for A in rotation_basis(group)]
    trans = [homogeneous(x=alg.basis(n, k), n=n) for k in range(n)]
    basis = tuple(rot + trans)
    conj = np.eye(n + 1)
    conj[:n, :n] = alg.left_matrix(ctx.u)
    conj[n, n] = -1.0
    inv = np.linalg.inv(conj)
    images = [conj @ b @ inv for b in basis]
    T = np.array([[np.sum(b * im) for im in images] for b in basis])
    recon = max(np.linalg.norm(sum(c * b for c, b in zip(T[:, a], basis)) - images[a])
                for a in range(len(basis)))
    if recon > 1e-10:
        raise LiftError(f"tau does not preserve the {group} algebra (defect {recon:.3g})")
    if np.linalg.norm(np.linalg.matrix_power(T, 4) - np.eye(len(basis))) > tol * len(basis):
        raise LiftError("tau_*^4 differs from the identity")
    return TauAction(group, ctx.u, basis, T, conj)


# --------------------------------------------------------------------------
# lift bundles

@dataclass
class LiftBundle:
    """Sampled lift F = (R, X) with its Maurer-Cartan form and splitting."""

    domain: GridDomain
    R: np.ndarray  # (nx, ny, n, n)
    X: np.ndarray  # (nx, ny, n)
    tau: TauAction
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.R.shape[-1]
        F = np.zeros(self.R.shape[:2] + (n + 1, n + 1))
        F[..., :n, :n] = self.R
        F[..., :n, n] = self.X
        F[..., n, n] = 1.0
        Finv = np.zeros_like(F)
        Rt = np.swapaxes(self.R, -1, -2)
        Finv[..., :n, :n] = Rt
        Finv[..., :n, n] = -np.einsum("...ij,...j->...i", Rt, self.X)
        Finv[..., n, n] = 1.0
        self.F = F
        self.alpha_x = Finv @ d_dx(F, self.domain)
        self.alpha_y = Finv @ d_dy(F, self.domain)
        az = 0.5 * (self.alpha_x - 1j * self.alpha_y)
        azb = 0.5 * (self.alpha_x + 1j * self.alpha_y)
        # components[k] = (alpha_k(d/dz), alpha_k(d/dzbar))
        self.components = {k: (self.tau.project(az, k), self.tau.project(azb, k)) for k in POWERS}

    @property
    def alpha_norm(self):
        return sup_norm(np.concatenate([self.alpha_x, self.alpha_y], axis=-1))


def _form(dz_part=None, dzb_part=None):
    """(x, y) coefficients of A dz + B dzbar."""
    ax = 0
    ay = 0
    if dz_part is not None:
        ax = ax + dz_part
        ay = ay + 1j * dz_part
    if dzb_part is not None:
        ax = ax + dzb_part
        ay = ay - 1j * dzb_part
    return ax, ay


def decompose_alpha(bundle: LiftBundle) -> dict:
    """alpha_-1, alpha_0, alpha_1 as (x, y) coefficient pairs, alpha_2 split
    into its (1,0) part alpha_2' and (0,1) part alpha_2''."""
    c = bundle.components
    out = {k: _form(*c[k]) for k in (-1, 0, 1)}
    out["2'"] = _form(c[2][0], None)
    out["2''"] = _form(None, c[2][1])
    return out


def alpha_lambda(bundle: LiftBundle, lam):
    """(x, y) coefficients of l^-2 a2' + l^-1 a_-1 + a0 + l a1 + l^2 a2''."""
    c = bundle.components
    az = lam**-2 * c[2][0] + lam**-1 * c[-1][0] + c[0][0] + lam * c[1][0]
    azb = lam**-1 * c[-1][1] + c[0][1] + lam * c[1][1] + lam**2 * c[2][1]
    return _form(az, azb)


def beta_lambda2(bundle: LiftBundle, lam):
    """(x, y) coefficients of l^-2 a2' + a0 + l^2 a2''."""
    c = bundle.components
    return _form(lam**-2 * c[2][0] + c[0][0], c[0][1] + lam**2 * c[2][1])


def _curvature(form, domain):
    return curvature_residual(form[0], form[1], domain)


def flatness_residual(bundle: LiftBundle, lam, family="alpha") -> float:
    """sup norm of the curvature of alpha_lambda (or beta_{lambda^2})."""
    if lam == 0:
        raise LiftError("lambda must be nonzero")
    form = alpha_lambda(bundle, lam) if family == "alpha" else beta_lambda2(bundle, lam)
    return sup_norm(_curvature(form, bundle.domain))


def flatness_laurent(bundle: LiftBundle, family="alpha", samples=8) -> dict:
    """sup norm of each Laurent coefficient of the curvature, lambda^-3..lambda^3,
    by a discrete Fourier transform over roots of unity."""
    roots = np.exp(2j * np.pi * np.arange(samples) / samples)
    fn = alpha_lambda if family == "alpha" else beta_lambda2
    curv = [_curvature(fn(bundle, w), bundle.domain) for w in roots]
    out = {}
    for k in range(-3, 4):
        ck = sum(c * w ** (-k) for c, w in zip(curv, roots)) / samples
        out[k] = sup_norm(ck)
    return out


def lift_condition_residual(bundle: LiftBundle) -> float:
    """sup |alpha_-1(d/dzbar)| relative to sup |alpha|."""
    return sup_norm(bundle.components[-1][1]) / bundle.alpha_norm


def _wedge(a, b):
    return commutator(a[0], b[1]) - commutator(a[1], b[0])


def alpha_beta_curvature_identity(bundle: LiftBundle, lam) -> dict:
    """Both sides of

        curv(alpha_l) = curv(beta_{l^2}) + (l^-3 - l)[a2' ^ a_-1''] + (l^3 - l^-1)[a2'' ^ a1']

    evaluated independently on the grid."""
    c = bundle.components
    lhs = _curvature(alpha_lambda(bundle, lam), bundle.domain)
    w1 = _wedge(_form(c[2][0], None), _form(None, c[-1][1]))
    w2 = _wedge(_form(None, c[2][1]), _form(c[1][0], None))
    rhs = (_curvature(beta_lambda2(bundle, lam), bundle.domain)
           + (lam**-3 - lam) * w1 + (lam**3 - lam**-1) * w2)
    return {"residual": sup_norm(lhs - rhs), "lhs": sup_norm(lhs),
            "term_minus": sup_norm((lam**-3 - lam) * w1),
            "term_plus": sup_norm((lam**3 - lam**-1) * w2)}


# --------------------------------------------------------------------------
# constructing lifts

def _sign_continue(v):
    """Flip signs of v (nx, ny, m) so neighbours agree: down the first
    column, then along each row.  NaN borders are left untouched."""
    block = finite_block(v)
    out = np.full_like(v, np.nan)
    out[block] = _sign_continue_block(v[block])
    return out


def _sign_continue_block(v):
    v = v.copy()
    col = np.sign(np.sum(v[1:, 0] * v[:-1, 0], axis=-1))
    col[col == 0] = 1
    v[1:, 0] *= np.cumprod(col)[:, None]
    row = np.sign(np.sum(v[:, 1:] * v[:, :-1], axis=-1))
    row[row == 0] = 1
    v[:, 1:] *= np.cumprod(row, axis=1)[..., None]
    return v


def _polar(a):
    w, _, vt = np.linalg.svd(a, full_matrices=False)
    return w @ vt


def _complete_continuous(e1, e2):
    """Orthonormal normal frame (e3, e4), continued from neighbour to
    neighbour so that [e1 e2 e3 e4] stays positively oriented."""
    block = finite_block(e1, e2)
    nx, ny, n = e1.shape
    out = np.full((nx, ny, n, n - 2), np.nan)
    out[block] = _complete_block(e1[block], e2[block])
    return out


def _complete_block(e1, e2):
    nx, ny, n = e1.shape
    P = np.eye(n) - e1[..., :, None] * e1[..., None, :] - e2[..., :, None] * e2[..., None, :]
    out = np.zeros((nx, ny, n, n - 2))
    # seed: the two standard vectors with largest normal components
    scores = np.linalg.norm(P[0, 0], axis=0)
    pick = np.argsort(scores)[::-1][: n - 2]
    seed = _polar(P[0, 0][:, pick])
    frame = np.concatenate([e1[0, 0][:, None], e2[0, 0][:, None], seed], axis=1)
    if np.linalg.det(frame) < 0:
        seed[:, -1] *= -1
    out[0, 0] = seed
    for i in range(1, nx):
        out[i, 0] = _polar(P[i, 0] @ out[i - 1, 0])
    for j in range(1, ny):
        out[:, j] = _polar(P[:, j] @ out[:, j - 1])
    return out


def _source_frame(u, n):
    """Positively oriented orthonormal basis (1, u, a, b, ...) of R^n."""
    one = alg.basis(n, 0)
    cols = [one, u]
    for k in range(n):
        v = alg.basis(n, k)
        for c in cols:
            v = v - np.dot(v, c) * c
        if np.linalg.norm(v) > 1e-8:
            cols.append(v / np.linalg.norm(v))
        if len(cols) == n:
            break
    B = np.stack(cols, axis=1)
    if np.linalg.det(B) < 0:
        B[:, -1] *= -1
    return B


def _complex_det(c1, c2):
    z11 = c1[..., 0] + 1j * c1[..., 1]
    z12 = c1[..., 2] + 1j * c1[..., 3]
    z21 = c2[..., 0] + 1j * c2[..., 1]
    z22 = c2[..., 2] + 1j * c2[..., 3]
    return z11 * z22 - z12 * z21


def _unitary_columns(e1, e2):
    """(c1, i c1, c2, i c2) with c1 = e1 and c2 the part of e2 orthogonal to
    the complex line of e1 (falling back to e1 j when that part vanishes)."""
    ie = lambda v: alg.qmul(np.broadcast_to(alg.I, v.shape), v)
    c1 = e1
    ic1 = ie(c1)

    def proj(v):
        return v - np.sum(v * c1, -1)[..., None] * c1 - np.sum(v * ic1, -1)[..., None] * ic1

    c2 = proj(e2)
    small = np.linalg.norm(c2, axis=-1) < 0.1
    if np.any(small):
        alt = proj(alg.qmul(c1, np.broadcast_to(alg.J, c1.shape)))
        c2 = np.where(small[..., None], alt, c2)
    c2 = c2 / np.linalg.norm(c2, axis=-1)[..., None]
    return np.stack([c1, ic1, c2, ie(c2)], axis=-1)


def lift_frame(X: Immersion, ctx: alg.AlgebraContext | None = None, completion="continuous",
               gd=None) -> LiftBundle:
    """First lifting method: R(1) = e1, R(u) = e2.

    completion="continuous" completes the normal frame by neighbour
    continuation (group SO(4) x| R^4); completion="unitary" builds the
    C-linear frame (c1, i c1, c2, i c2), a U(2)-valued map that satisfies
    R(1) = e1, R(j) = e2 whenever X is Lagrangian.
    """
    ctx = alg.AlgebraContext(X.dim) if ctx is None else ctx
    Xo = X.open()
    gd = gauss_data(Xo) if gd is None else gd
    n = X.dim
    if completion == "unitary":
        if n != 4 or not np.allclose(ctx.u, alg.J):
            raise LiftError("the unitary completion needs H with u = j")
        R = _unitary_columns(gd.e1, gd.e2)
        tau = build_tau("u2", ctx.u)
        meta = {"method": "frame", "completion": "unitary",
                "det_c": _complex_det(R[..., 0], R[..., 2])}
    else:
        normal = _complete_continuous(gd.e1, gd.e2)
        E = np.concatenate([gd.e1[..., None], gd.e2[..., None], normal], axis=-1)
        B = _source_frame(ctx.u, n)
        R = E @ B.T
        tau = build_tau("so4" if n == 4 else "spin7", ctx.u) if n == 4 else None
        if tau is None:
            raise LiftError("the frame method is only available in H")
        meta = {"method": "frame", "completion": "continuous"}
    return LiftBundle(Xo.domain, R, Xo.X.values, tau, meta)


def lift_hopf(X: Immersion, ctx: alg.AlgebraContext | None = None, gd=None) -> LiftBundle:
    """Second lifting method: R = L_p with H^u(p) = rho_X.

    In H, p = rotor_to(u, rho) (q = 1), giving a Spin(3) x| H lift.  In O,
    R = L_v with v the unit bisector of u and rho; conjugation by L_v is the
    half-turn about v, which carries u to rho.
    """
    ctx = alg.AlgebraContext(X.dim) if ctx is None else ctx
    Xo = X.open()
    gd = gauss_data(Xo) if gd is None else gd
    rho = gd.rho
    if X.dim == 4:
        hint = None
        lagrangian = np.nanmax(np.abs(rho[..., 1])) < 1e-8
        if lagrangian and abs(ctx.u[1]) < 1e-12:
            hint = alg.I
        p = _sign_continue(alg.rotor_to(ctx.u, rho, axis_hint=hint))
        R = alg.left_matrix(p)
        return LiftBundle(Xo.domain, R, Xo.X.values, build_tau("spin3", ctx.u),
                          {"method": "hopf", "p": p})
    s = rho + ctx.u
    if np.min(np.linalg.norm(s, axis=-1)) < 1e-9:
        raise LiftError("rho_X meets -u; choose a different u")
    v = _sign_continue(alg.normalize(s))
    R = alg.left_matrix(v)
    return LiftBundle(Xo.domain, R, Xo.X.values, build_tau("spin7", ctx.u),
                      {"method": "hopf", "v": v})


def rotor_lift(p, domain: GridDomain, u=None, X=None) -> LiftBundle:
    """Spin(3) x| H map F = (L_p, X) from a unit-quaternion field p (X = 0 by default)."""
    p = np.asarray(p, dtype=float)
    R = alg.left_matrix(p)
    Xv = np.zeros(p.shape) if X is None else np.asarray(X, dtype=float)
    return LiftBundle(domain.open(), R, Xv, build_tau("spin3", u), {"method": "rotor", "p": p})


def random_smooth_bundle(domain: GridDomain, rng, group="so4", modes=2) -> LiftBundle:
    """F = (L_p R_conj(q), X) with p, q, X random low-frequency trigonometric
    fields.  Generically not a lift of anything."""
    x, y = domain.mesh()

    def field(m):
        out = rng.standard_normal(m)[None, None, :] * np.ones(x.shape + (1,))
        for _ in range(modes):
            a, b = rng.standard_normal(2)
            out = out + np.sin(a * x + b * y + rng.uniform(0, 2 * np.pi))[..., None] * rng.standard_normal(m)
        return out

    p = alg.normalize(field(4))
    X = field(4)
    if group == "spin3":
        R = alg.left_matrix(p)
    else:
        q = alg.normalize(field(4))
        R = alg.left_matrix(p) @ alg.right_matrix(alg.conj(q))
    return LiftBundle(domain.open(), R, X, build_tau(group), {"method": "random"})


def hopf_consistency(bundle: LiftBundle, rho) -> float:
    """sup |H^u(R) - rho| for a frame-method bundle, via the rotor pair of R."""
    u = bundle.tau.u
    R = bundle.R
    out = 0.0
    for idx in np.ndindex(R.shape[:2]):
        m = R[idx]
        if not np.all(np.isfinite(m)):
            continue
        p, _ = alg.matrix_to_rotor_pair(m, tol=1e-8)
        out = max(out, float(np.linalg.norm(alg.hopf_left(p, u) - rho[idx])))
    return out


def hsl_reduction_check(X: Immersion, ctx: alg.AlgebraContext | None = None, gd=None) -> dict:
    """U(1) reduction of the Hopf lift (p = +-e^{i beta/2}) and
    det_C R = e^{i beta} for the unitary frame lift."""
    ctx = alg.AlgebraContext(4) if ctx is None else ctx
    if abs(np.dot(ctx.u, alg.I)) > 1e-12:
        raise LiftError("the reduction needs u orthogonal to i")
    Xo = X.open()
    gd = gauss_data(Xo) if gd is None else gd
    try:
        beta = gd.beta
    except GeometryError:
        raise LiftError("surface is not Lagrangian") from None
    beta_u = np.arctan2(ctx.u[3], ctx.u[2])
    hop = lift_hopf(Xo, ctx, gd)
    p = hop.meta["p"]
    half = beta - beta_u
    target = np.stack([np.cos(half / 2), np.sin(half / 2), 0 * half, 0 * half], axis=-1)
    res_p = min(np.nanmax(np.linalg.norm(p - target, axis=-1)), np.nanmax(np.linalg.norm(p + target, axis=-1)))
    uni = lift_frame(Xo, ctx, completion="unitary", gd=gd)
    det = uni.meta["det_c"]
    res_det = float(np.nanmax(np.abs(det - np.exp(1j * beta))))
    offset = np.angle(det * np.exp(-1j * beta))
    return {"u1_residual": float(res_p), "det_residual": res_det,
            "det_beta_offset": float(np.nanmax(np.abs(offset))),
            "beta_mean": float(np.nanmean(beta))}
