"""Gauss maps of conformal immersions into H (and O): frames, the left Gauss
map rho_X, the Lagrangian angle, mean curvature and the Lagrangian / HSL /
special Lagrangian / CMC criteria.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import algebra as alg
from .gridcalc import GridMap, d_dx, d_dy, finite_block, laplacian, sup_norm, tension_sphere


class GeometryError(ValueError):
    pass


def _dot(a, b):
    return np.sum(a * b, axis=-1)


@dataclass(frozen=True)
class Immersion:
    """A sampled map X with optional exact first derivatives (Xx, Xy).

    Exact derivatives, when available, are used for frames and first
    fundamental form quantities; second derivatives are always finite
    differences.
    """

    X: GridMap
    exact: Optional[tuple] = None

    @property
    def domain(self):
        return self.X.domain

    @property
    def dim(self):
        return self.X.values.shape[-1]

    def first_derivatives(self, prefer_exact=True):
        if prefer_exact and self.exact is not None:
            return self.exact
        return d_dx(self.X.values, self.domain), d_dy(self.X.values, self.domain)

    def open(self) -> "Immersion":
        return Immersion(GridMap(self.domain.open(), self.X.values), self.exact)


def conformality_residual(X: Immersion, prefer_exact=True) -> float:
    xx, xy = X.first_derivatives(prefer_exact)
    nx, ny = np.linalg.norm(xx, axis=-1), np.linalg.norm(xy, axis=-1)
    if np.nanmin(nx) < 1e-12:
        raise GeometryError("degenerate point: |dX/dx| vanishes")
    r = (np.abs(nx - ny) + np.abs(_dot(xx, xy))) / nx**2
    return float(np.nanmax(r))


@dataclass(frozen=True)
class GaussData:
    e1: np.ndarray
    e2: np.ndarray
    rho: np.ndarray
    sigma: Optional[np.ndarray]
    conformal_factor: np.ndarray  # |dX/dx|
    omegas: Optional[np.ndarray]  # omega_1..3 on (e1, e2), quaternion case
    relation_residual: float  # sup |X_y - rho X_x| / |X_x|
    lagrangian_residual: float
    _beta: Optional[np.ndarray] = None

    @property
    def beta(self) -> np.ndarray:
        if self._beta is None:
            raise GeometryError("Lagrangian angle requested on a non-Lagrangian surface")
        return self._beta


def lagrangian_angle(rho, lagrangian_tol=1e-8):
    """Unwrapped beta with rho = e^{i beta} j = cos(beta) j + sin(beta) k.

    Unwrapping starts at the first finite sample and continues down the
    first column, then along each row; NaN borders stay NaN.
    """
    if np.nanmax(np.abs(rho[..., 1])) > lagrangian_tol:
        raise GeometryError("rho leaves the circle e^{i beta} j: surface is not Lagrangian")
    block = finite_block(rho)
    raw = np.arctan2(rho[block][..., 3], rho[block][..., 2])
    col = np.unwrap(raw[:, 0])
    beta = np.full(rho.shape[:2], np.nan)
    beta[block] = np.unwrap(np.concatenate([col[:, None], raw[:, 1:]], axis=1), axis=1)
    return beta


def gauss_data(X: Immersion, conformal_tol=1e-6, lagrangian_tol=1e-8) -> GaussData:
    """Frames, Gauss components and (when Lagrangian) the Lagrangian angle."""
    cres = conformality_residual(X)
    if cres > conformal_tol:
        raise GeometryError(f"parametrisation is not conformal (residual {cres:.3g})")
    xx, xy = X.first_derivatives()
    lx = np.linalg.norm(xx, axis=-1)
    e1 = xx / lx[..., None]
    e2 = xy / np.linalg.norm(xy, axis=-1)[..., None]
    rho, sigma = alg.stiefel_rho_sigma(e1, e2, tol=max(conformal_tol, 1e-8))
    fx, fy = X.first_derivatives(prefer_exact=False)
    rel = np.linalg.norm(fy - alg.amul(rho, fx), axis=-1) / np.linalg.norm(fx, axis=-1)
    omegas = None
    lag = None
    beta = None
    if X.dim == 4:
        omegas = np.stack([_dot(alg.qmul(np.broadcast_to(b, e1.shape), e1), e2)
                           for b in (alg.I, alg.J, alg.K)], axis=-1)
        lag = float(max(np.nanmax(np.abs(omegas[..., 0])), np.nanmax(np.abs(rho[..., 1]))))
        if lag <= lagrangian_tol:
            beta = lagrangian_angle(rho, lagrangian_tol)
    return GaussData(e1, e2, rho, sigma, lx, omegas, float(np.nanmax(rel)),
                     lag if lag is not None else float("nan"), beta)


def lagrangian_residual(X: Immersion) -> dict:
    """Both computations of the Lagrangian defect and their maximum."""
    xx, xy = X.first_derivatives()
    e2w = 0.5 * (_dot(xx, xx) + _dot(xy, xy))
    omega1 = _dot(alg.qmul(np.broadcast_to(alg.I, xx.shape), xx), xy) / e2w
    e1 = xx / np.linalg.norm(xx, axis=-1)[..., None]
    e2 = xy / np.linalg.norm(xy, axis=-1)[..., None]
    rho = alg.qmul(e2, alg.conj(e1))
    a = float(np.nanmax(np.abs(omega1)))
    b = float(np.nanmax(np.abs(rho[..., 1])))
    return {"omega1": a, "rho_dot_i": b, "residual": max(a, b)}


@dataclass(frozen=True)
class MeanCurvature:
    H: np.ndarray  # full-trace convention
    H_half: np.ndarray
    J_grad_beta: np.ndarray
    identity_residual: float


def _normal_part(v, e1, e2):
    return v - _dot(v, e1)[..., None] * e1 - _dot(v, e2)[..., None] * e2


def mean_curvature(X: Immersion, gd: GaussData | None = None) -> MeanCurvature:
    """Mean curvature vector (trace of II) and J grad(beta), with the sup
    norm of their difference."""
    Xo = X.open()
    gd = gauss_data(Xo) if gd is None else gd
    beta = gd.beta
    xx, xy = Xo.first_derivatives()
    e2w = (0.5 * (_dot(xx, xx) + _dot(xy, xy)))[..., None]
    lap = laplacian(Xo.X.values, Xo.domain)
    H = _normal_part(lap, gd.e1, gd.e2) / e2w
    bx = d_dx(beta, Xo.domain)[..., None]
    by = d_dy(beta, Xo.domain)[..., None]
    Jm = alg.left_matrix(alg.I)
    jgb = (bx * (xx @ Jm.T) + by * (xy @ Jm.T)) / e2w
    return MeanCurvature(H, 0.5 * H, jgb, sup_norm(H - jgb))


def hsl_residual_from_beta(beta, domain, conformal_factor=None) -> dict:
    """sup |Laplacian beta| (flat) and, given |X_x|, the induced Laplacian."""
    jumps = max(np.nanmax(np.abs(np.diff(beta, axis=0))), np.nanmax(np.abs(np.diff(beta, axis=1))))
    if jumps > np.pi / 2:
        raise GeometryError(f"branch jump of {jumps:.3g} in the unwrapped Lagrangian angle")
    lap = laplacian(np.asarray(beta, dtype=float), domain.open())
    out = {"flat": sup_norm(lap)}
    if conformal_factor is not None:
        out["induced"] = sup_norm(lap / conformal_factor**2)
    out["residual"] = out["flat"]
    return out


def hsl_residual(X: Immersion, gd: GaussData | None = None) -> dict:
    gd = gauss_data(X) if gd is None else gd
    return hsl_residual_from_beta(gd.beta, X.domain, gd.conformal_factor)


def special_lagrangian_check(X: Immersion, gd: GaussData | None = None, tol=1e-8) -> dict:
    gd = gauss_data(X) if gd is None else gd
    dev = float(np.nanmax(np.abs(gd.beta - np.nanmean(gd.beta))))
    return {"special_lagrangian": dev < tol, "deviation": dev, "mean_beta": float(np.nanmean(gd.beta))}


def cmc_check(X: Immersion, gd: GaussData | None = None) -> dict:
    """For surfaces in Im H: rho + sigma, tension of the Gauss map and the
    scalar (half-trace) mean curvature."""
    if np.max(np.abs(X.X.values[..., 0])) > 1e-10:
        raise GeometryError("surface does not lie in Im H")
    gd = gauss_data(X) if gd is None else gd
    n = gd.rho[..., 1:]
    n = n / np.linalg.norm(n, axis=-1)[..., None]
    tau = tension_sphere(n, X.domain)
    xx, xy = X.first_derivatives()
    e2w = 0.5 * (_dot(xx, xx) + _dot(xy, xy))
    lap = laplacian(X.X.values, X.domain)[..., 1:]
    Hs = _dot(lap, n) / (2 * e2w)
    fin = Hs[np.isfinite(Hs)]
    return {
        "rho_plus_sigma": float(np.nanmax(np.linalg.norm(gd.rho + gd.sigma, axis=-1))),
        "tension": sup_norm(tau),
        "mean_curvature_mean": float(fin.mean()),
        "mean_curvature_spread": float(fin.max() - fin.min()),
    }
