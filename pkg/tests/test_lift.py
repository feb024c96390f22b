from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hslab import algebra as alg
from hslab import catalog, lift
from hslab.gauss import gauss_data
from hslab.gridcalc import GridDomain, convergence_order, order_passes

EIGEN_DIMS = {"spin3": (2, 1, 2, 2), "so4": (2, 4, 2, 2), "u2": (2, 3, 2, 1), "u1": (2, 0, 2, 1),
              "spin7": (4, 15, 4, 6)}


@pytest.fixture(scope="module")
def taus():
    return {g: lift.build_tau(g) for g in lift.GROUPS}


def random_element(tau, rng):
    return sum(c * b for c, b in zip(rng.standard_normal(len(tau.basis)), tau.basis))


@pytest.mark.parametrize("group", lift.GROUPS)
def test_tau_structure(group, taus, rng):
    tau = taus[group]
    m = len(tau.basis)
    np.testing.assert_allclose(np.linalg.matrix_power(tau.tau, 4), np.eye(m), atol=1e-12)
    Ps = [tau.projector(k) for k in lift.POWERS]
    np.testing.assert_allclose(sum(Ps), np.eye(m), atol=1e-12)
    for a, Pa in enumerate(Ps):
        np.testing.assert_allclose(Pa @ Pa, Pa, atol=1e-12)
        for b, Pb in enumerate(Ps):
            if a != b:
                assert np.abs(Pa @ Pb).max() < 1e-12
    assert tau.eigen_dims() == EIGEN_DIMS[group]
    # eigenvalue i^k on the k-th component
    xi = random_element(tau, rng)
    for k in lift.POWERS:
        comp = tau.project(xi, k)
        np.testing.assert_allclose(tau.apply(comp), (1j) ** k * comp, atol=1e-12)


@pytest.mark.parametrize("group", ["so4", "spin7"])
def test_tau_automorphism_and_grading(group, taus, rng):
    tau = taus[group]
    for _ in range(5):
        a, b = random_element(tau, rng), random_element(tau, rng)
        br = a @ b - b @ a
        np.testing.assert_allclose(tau.apply(br), tau.apply(a) @ tau.apply(b) - tau.apply(b) @ tau.apply(a),
                                   atol=1e-12)
        for ka in lift.POWERS:
            for kb in lift.POWERS:
                pa, pb = tau.project(a, ka), tau.project(b, kb)
                c = pa @ pb - pb @ pa
                for kc in lift.POWERS:
                    if (kc - ka - kb) % 4:
                        assert np.abs(tau.project(c, kc)).max() < 1e-12


def test_tau_rejects_bad_u():
    with pytest.raises(alg.AlgebraError):
        lift.build_tau("spin3", alg.ONE)


def bundle_levels(name, method, grids=(32, 64), **kw):
    out = []
    for n in grids:
        X = catalog.builtin(name).immersion(n)
        b = lift.lift_hopf(X) if method == "hopf" else lift.lift_frame(X, **kw)
        out.append((b.domain.h, b))
    return out


@pytest.mark.parametrize("name", ["clifford_torus", "lagrangian_catenoid", "lagrangian_plane"])
@pytest.mark.parametrize("method,kw", [("hopf", {}), ("frame", {}), ("frame", {"completion": "unitary"})])
def test_lift_condition(name, method, kw):
    levels = bundle_levels(name, method, **kw)
    order = convergence_order([(h, lift.lift_condition_residual(b)) for h, b in levels])
    assert order_passes(order, 1.7)


def assert_close_where_finite(a, b, atol):
    ok = np.isfinite(a) & np.isfinite(b)
    assert ok.sum() > a.size // 4
    np.testing.assert_allclose(a[ok], b[ok], atol=atol)


def test_decomposition_reconstructs_alpha(rng):
    b = lift.random_smooth_bundle(GridDomain.box(16, (-1, 1), (-1, 1)), rng)
    dec = lift.decompose_alpha(b)
    assert_close_where_finite(sum(dec[k][0] for k in dec), b.alpha_x, 1e-12)
    assert_close_where_finite(sum(dec[k][1] for k in dec), b.alpha_y, 1e-12)
    # real form: alpha_1 is the conjugate of alpha_-1
    assert_close_where_finite(np.conj(dec[-1][0]), dec[1][0], 1e-12)


def test_flatness_at_one_is_pullback(rng):
    b = lift.random_smooth_bundle(GridDomain.box(32, (-1, 1), (-1, 1)), rng)
    c = lift.random_smooth_bundle(GridDomain.box(64, (-1, 1), (-1, 1)), np.random.default_rng(20240611))
    assert lift.flatness_residual(c, 1.0) < lift.flatness_residual(b, 1.0)


@pytest.mark.parametrize("name", ["clifford_torus", "lagrangian_catenoid"])
def test_flatness_on_hsl_lifts(name):
    levels = bundle_levels(name, "hopf")
    for lam in (1j, np.exp(1j * np.pi / 5), 2.0):
        order = convergence_order([(h, lift.flatness_residual(b, lam)) for h, b in levels])
        assert order_passes(order, 1.7)
        order = convergence_order([(h, lift.flatness_residual(b, lam, "beta")) for h, b in levels])
        assert order_passes(order, 1.7)


def test_alpha_beta_curvature_identity_on_random_frames():
    levels = []
    for n in (32, 64):
        b = lift.random_smooth_bundle(GridDomain.box(n, (-1, 1), (-1, 1)), np.random.default_rng(5))
        r = lift.alpha_beta_curvature_identity(b, 2.0)
        assert r["term_minus"] > 1e-2 and r["lhs"] > 1e-2
        levels.append((b.domain.h, r["residual"]))
    assert order_passes(convergence_order(levels), 1.7)


def test_flatness_laurent_span(rng):
    b = lift.random_smooth_bundle(GridDomain.box(24, (-1, 1), (-1, 1)), rng)
    co = lift.flatness_laurent(b)
    assert set(co) == set(range(-3, 4))
    assert max(co.values()) > 1e-3


def test_nonharmonic_rotor_fails_flatness():
    e = catalog.builtin("nonharmonic_rotor")
    vals = []
    for n in (32, 64):
        b = lift.rotor_lift(e.rotor_map(n).values, e.domain(n))
        vals.append(lift.flatness_residual(b, np.exp(1j * np.pi / 4), "beta"))
    assert all(abs(v - 4) < 0.8 for v in vals)
    assert abs(vals[0] / vals[1] - 1) < 0.2


def test_hopf_consistency_of_frame_lift():
    X = catalog.builtin("lagrangian_catenoid").immersion(16)
    gd = gauss_data(X.open())
    b = lift.lift_frame(X, gd=gd)
    assert lift.hopf_consistency(b, gd.rho) < 1e-10


def test_hsl_reduction():
    res = lift.hsl_reduction_check(catalog.builtin("clifford_torus").immersion(32))
    assert res["u1_residual"] < 1e-10
    assert res["det_beta_offset"] < 1e-10 or abs(res["det_beta_offset"] - np.pi) < 1e-10


def test_spin7_lift_of_octonion_torus():
    levels = bundle_levels("octonion_clifford", "hopf")
    for h, b in levels:
        assert b.tau.group == "spin7"
    order = convergence_order([(h, lift.flatness_residual(b, 1j)) for h, b in levels])
    assert order_passes(order, 1.7)


ROOTS = np.exp(2j * np.pi * np.arange(8) / 8)


@lru_cache(maxsize=None)
def small_bundle():
    b = lift.random_smooth_bundle(GridDomain.box(8, (-1, 1), (-1, 1)), np.random.default_rng(1))
    return b, [lift.alpha_lambda(b, w)[0] for w in ROOTS]


@given(st.complex_numbers(min_magnitude=0.3, max_magnitude=3))
def test_alpha_lambda_is_laurent_polynomial(lam):
    b, samples = small_bundle()
    rebuilt = sum(sum(s * w ** (-k) for s, w in zip(samples, ROOTS)) / 8 * lam**k for k in range(-3, 5))
    direct = lift.alpha_lambda(b, lam)[0]
    assert_close_where_finite(rebuilt, direct, 1e-9 * (abs(lam) + 1 / abs(lam)) ** 3)


def test_alpha_lambda_at_one_matches_alpha():
    b, _ = small_bundle()
    assert_close_where_finite(lift.alpha_lambda(b, 1.0)[0], b.alpha_x, 1e-12)


def test_zero_lambda_rejected(rng):
    b = lift.random_smooth_bundle(GridDomain.box(8, (-1, 1), (-1, 1)), rng)
    with pytest.raises(lift.LiftError):
        lift.flatness_residual(b, 0)
