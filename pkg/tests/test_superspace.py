from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hslab.gridcalc import GridDomain
from hslab.superspace import dpw, suite
from hslab.superspace.fields import (SuperField, component_identification, nonharmonic_example,
                                     random_tangent_field, superharmonic_component_residuals,
                                     superharmonic_example, superharmonic_phi_residual, sphere_defect)
from hslab.superspace.frames import (SuperConnection, lambda_connection, lambda_family_residual,
                                     orthogonality_defect, super_curvature, superframe)
from hslab.superspace.grassmann import (ETA0, THETA, THETABAR, D_op, Dbar_op, GElem, GrassmannError,
                                        GridBackend, JetBackend, PointBackend, bracket, g_inv, g_mul,
                                        merge_sign, odd_coordinates)

POINTS = np.array([[0.1, -0.2], [0.4, 0.3], [-0.35, 0.05]])


@lru_cache(maxsize=None)
def jets(K=7):
    return JetBackend(POINTS, K=K)


def gen(be, k):
    return GElem.generator(be, k)


def test_merge_signs():
    assert merge_sign(0b01, 0b10) == 1
    assert merge_sign(0b10, 0b01) == -1
    assert merge_sign(0b11, 0b11) == 0
    assert merge_sign(0b101, 0b010) == -1
    assert merge_sign(0b011, 0b100) == 1


def test_generators_anticommute_and_square_to_zero():
    be = PointBackend(2)
    a, b = gen(be, 0), gen(be, 3)
    assert (a * a).norm() == 0
    assert (a * b + b * a).norm() == 0
    th, thb, t1, t2 = odd_coordinates(be)
    assert (t1 * t1).norm() == 0 and (t1 * t2 + t2 * t1).norm() == 0
    assert (th * thb - (-2j) * t1 * t2).norm() < 1e-15


def random_element(be, rng, parity=None, n_gen=5):
    terms = {}
    for m in range(1 << n_gen):
        if parity is not None and bin(m).count("1") % 2 != parity:
            continue
        terms[m] = rng.standard_normal(be.pshape)
    return GElem(be, terms)


@given(st.integers(0, 2**32 - 1))
def test_grassmann_ring_laws(seed):
    rng = np.random.default_rng(seed)
    be = PointBackend(3)
    a, b, c = (random_element(be, rng) for _ in range(3))
    assert ((a * b) * c - a * (b * c)).norm() < 1e-10
    assert (a * (b + c) - (a * b + a * c)).norm() < 1e-10
    x, y = random_element(be, rng, 1), random_element(be, rng, 1)
    e = random_element(be, rng, 0)
    assert (x * y + y * x).norm() < 1e-10
    assert (e * x - x * e).norm() < 1e-10


def test_generator_derivative_is_graded_derivation(rng):
    be = PointBackend(2)
    a, b = random_element(be, rng, 1), random_element(be, rng)
    for k in range(3):
        lhs = (a * b).d_gen(k)
        rhs = a.d_gen(k) * b - a * b.d_gen(k)
        assert (lhs - rhs).norm() < 1e-12


def test_inverse_of_even_element(rng):
    be = PointBackend(2)
    s = random_element(be, rng, 0) + 3.0
    s = GElem(be, {m: c for m, c in s.terms.items()})
    s.terms[0] = np.abs(s.terms[0]) + 3
    assert (g_mul(s, g_inv(s)) - 1.0).prune(1e-12).norm() < 1e-12


def test_parity_errors():
    be = PointBackend(1)
    mixed = gen(be, 0) + 1.0
    with pytest.raises(GrassmannError):
        mixed.parity()
    z = GElem.zero(be, (3,))
    u = GElem.even(be, np.array([[0.0, 0.0, 1.0]]))
    with pytest.raises(GrassmannError):
        SuperField(u, GElem.even(be, np.ones((1, 3))), z, z)
    with pytest.raises(GrassmannError):
        SuperField(u + gen(be, ETA0) * GElem.even(be, np.ones((1, 3))), z, z, z)
    with pytest.raises(GrassmannError):
        GElem(be, {0: np.ones(5)})
    with pytest.raises(GrassmannError):
        gen(be, 0) + gen(PointBackend(1), 0)


def test_D_on_theta_and_coordinates():
    be = jets()
    th, thb, _, _ = odd_coordinates(be)
    assert (D_op(th) - 1.0).norm() == 0
    assert D_op(thb).norm() == 0
    x, y = be.coords()
    z = GElem.even(be, x + 1j * y)
    # D z = -theta
    assert (D_op(z) + th).norm() < 1e-15


def test_D_squared_is_minus_dz_on_random_superfield(rng):
    be = jets()
    phi = random_tangent_field(be, rng, aux="random").phi
    assert (D_op(D_op(phi)) + phi.dz()).norm(2) < 1e-12 * phi.norm()
    assert (Dbar_op(Dbar_op(phi)) + phi.dzbar()).norm(2) < 1e-12 * phi.norm()
    assert (D_op(Dbar_op(phi)) + Dbar_op(D_op(phi))).norm(2) < 1e-12 * phi.norm()


def test_grid_D_squared_uses_same_stencil():
    # both sides reduce to one d/dz stencil, so the identity survives discretisation
    d = GridDomain.box(32, (-0.5, 0.5), (-0.5, 0.5))
    be = GridBackend(d)
    x, y = be.coords()
    th = gen(be, THETA)
    phi = GElem.even(be, np.sin(x) * np.exp(y)) + th * gen(be, ETA0) * GElem.even(be, np.cos(x * y))
    assert (D_op(D_op(phi)) + phi.dz()).norm() < 1e-12
    assert (Dbar_op(D_op(phi)) + D_op(Dbar_op(phi))).norm() < 1e-12


def test_superharmonic_example_exact_on_jets():
    f = superharmonic_example(jets())
    assert f.psi1.terms and f.aux.terms
    for r in superharmonic_component_residuals(f.u, f.psi1, f.psi2, f.aux):
        assert r.norm(2) < 1e-12
    assert superharmonic_phi_residual(f.phi).norm(2) < 1e-12 * f.phi.norm()
    assert sphere_defect(f.phi).norm(2) < 1e-12


def test_nonharmonic_control_nonzero():
    f = nonharmonic_example(jets())
    r_map, r_spin, r_aux = superharmonic_component_residuals(f.u, f.psi1, f.psi2, f.aux)
    assert r_map.norm(2) > 1e-2
    assert r_spin.norm() == 0 and r_aux.norm() == 0


def test_zero_spinors_reduce_to_harmonic_map():
    f = superharmonic_example(jets())
    z = GElem.zero(f.backend, (3,))
    g = SuperField(f.u, z, z, z)
    assert superharmonic_phi_residual(g.phi).norm(2) < 1e-12


@pytest.mark.parametrize("delta", [1e-3, 1e-1, 1.0])
def test_aux_perturbation_enters_linearly(delta):
    be = jets()
    f = superharmonic_example(be)
    bump = gen(be, ETA0 + 2) * gen(be, ETA0 + 3) * GElem.even(be, be.constant(np.array([1.0, 0.0, 0.0])))
    g = f.with_aux(f.aux + delta * bump)
    r_aux = superharmonic_component_residuals(g.u, g.psi1, g.psi2, g.aux)[2]
    assert abs(r_aux.norm() - delta) < 1e-12
    diffs, comps, _ = component_identification(g)
    assert max(d.norm(2) for d in diffs.values()) < 1e-12 * max(1, max(c.norm(2) for c in comps.values()))
    assert comps["1"].norm() == pytest.approx(delta / 2, rel=1e-12)


def test_component_identification_random(rng):
    be = jets()
    for aux in ("random", "equation"):
        f = random_tangent_field(be, rng, aux=aux)
        diffs, comps, _ = component_identification(f)
        size = max(c.norm(2) for c in comps.values())
        assert size > 1e-3
        assert max(d.norm(2) for d in diffs.values()) < 1e-12 * max(1, size)


def test_superframe_orthonormal_and_oriented():
    f = superharmonic_example(jets())
    F = superframe(f)
    # high jet degrees carry coefficients of size |F|^2
    assert orthogonality_defect(F) < 1e-15 * F.norm() ** 2
    assert (F[:, 0] - f.phi).norm() == 0
    assert np.all(np.linalg.det(F.body()[:, 0].real) > 0)


def test_superframe_rejects_wide_image():
    d = GridDomain.box(16, (-3, 3), (-3, 3))
    with pytest.raises(GrassmannError):
        superframe(superharmonic_example(GridBackend(d)))


def test_pullback_connection_is_flat():
    F = superframe(superharmonic_example(jets()))
    curv = super_curvature(SuperConnection.from_frame(F), extras=True)
    assert max(c.norm(3) for c in curv.values()) < 1e-10


def test_lambda_family_separates_examples():
    be = jets()
    sh = lambda_family_residual(superframe(superharmonic_example(be)), depth=3)
    nh = lambda_family_residual(superframe(nonharmonic_example(be)), depth=3)
    assert max(sh["per_lambda"].values()) < 1e-9
    assert sh["per_lambda"][1.0] < 1e-9 and nh["per_lambda"][1.0] < 1e-9
    assert nh["per_lambda"][complex(2.0)] > 1e-3
    assert nh["superharmonic"] > 1e-3
    assert sh["minus_one_vs_superharmonic"] < 1e-12 and nh["minus_one_vs_superharmonic"] < 1e-12


def test_lambda_connection_rejects_zero():
    F = superframe(nonharmonic_example(jets(4)))
    with pytest.raises(GrassmannError):
        lambda_connection(SuperConnection.from_frame(F), 0)


def test_connection_parity_checked():
    be = PointBackend(1)
    m = GElem.even(be, np.zeros((1, 3, 3)))
    with pytest.raises(GrassmannError):
        SuperConnection(m + GElem.even(be, np.ones((1, 3, 3))), m, m, m)
    odd = gen(be, 2) * GElem.even(be, np.ones((1, 3, 3)))
    assert bracket(odd, odd).parity() == 0


def test_dpw_trivial_potential():
    be = PointBackend(4)
    rng = np.random.default_rng(3)
    A = dpw.random_odd_matrix(be, rng, 3, 3)
    mu0 = A
    mu_th = -dpw.matmul(A, A)  # mu_theta = -mu_0^2 makes g_0 constant

    res = dpw.dpw_integrate(lambda t: (mu0, mu_th), 1.0, 20)
    for g in res.g0:
        assert (g - res.g0[0]).norm() < 1e-14
    assert res.residual_theta0 < 1e-14


def test_dpw_closed_form(rng):
    err, res, _ = dpw.closed_form_example(rng)
    assert err < 1e-8
    assert res.residual_theta0 < 1e-13


def test_dpw_generic_laurent_range(rng):
    res, lams = dpw.generic_example(rng)
    co = dpw.laurent_coefficients(dpw.log_derivative(res), lams)
    top = max(co.values())
    assert max(v for k, v in co.items() if k < -2) / top < 1e-6
    assert co[-2] / top > 1e-3


def test_polynomial_suite_passes():
    a = suite.run("polynomial", 7)
    assert [c["name"] for c in a[0]] == sorted(c["name"] for c in a[0])
    assert all(c["pass"] for c in a[0]), [c for c in a[0] if not c["pass"]]
    with pytest.raises(ValueError):
        suite.run("symbolic", 0)
