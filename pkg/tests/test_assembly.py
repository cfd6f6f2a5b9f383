from math import factorial

import numpy as np
import pytest

import phasefem.la as la
from oracle_dense import ch_residual_dense
from phasefem.assembly import (FormContext, SchemeKind, assemble_jacobian,
                               assemble_residual, block_layout, quadrature, skew_form)
from phasefem.mesh import build_periodic_unit_square
from phasefem.physics import MaterialLaws, potential_deriv
from phasefem.schemes import build_spaces
from phasefem.spaces import FieldVector, SpaceKind, build_space, interpolate


def _laws(scheme):
    return MaterialLaws(beta=1 if scheme is SchemeKind.CHNS else 0)


def make_ctx(scheme, n, phi_prev, x, v_prev=None, darcy_order=0, tau=1e-3, degree=6):
    mesh = build_periodic_unit_square(n)
    spaces = build_spaces(mesh, scheme, darcy_order)
    return FormContext(scheme=scheme, mesh=mesh, spaces=spaces, laws=_laws(scheme),
                       tau=tau, rule=quadrature(degree), prev_phi=phi_prev,
                       prev_v=v_prev, iterate=x)


def _noise(n, seed=0, amp=1e-3):
    rng = np.random.default_rng(seed)
    return 0.4 + amp * (2 * rng.random(n * n) - 1)


# ---------------------------------------------------------------------------
# quadrature

def test_quadrature_weights_and_exactness():
    for deg in range(1, 9):
        r = quadrature(deg)
        assert np.all(r.weights > 0)
        assert abs(r.weights.sum() - 0.5) <= 1e-15
        for i in range(deg + 1):
            for j in range(deg + 1 - i):
                got = np.sum(r.weights * r.points[:, 0] ** i * r.points[:, 1] ** j)
                want = factorial(i) * factorial(j) / factorial(i + j + 2)
                assert abs(got - want) <= 2e-15, (deg, i, j)


def test_quadrature_examples():
    r2 = quadrature(2)
    assert np.sum(r2.weights * r2.points[:, 0] * r2.points[:, 1]) == pytest.approx(1 / 24, abs=1e-16)
    r6 = quadrature(6)
    val = np.sum(r6.weights * (r6.points[:, 0] + r6.points[:, 1]) ** 6)
    assert val == pytest.approx(0.125, abs=1e-14)


def test_quadrature_bad_degree():
    for deg in (0, 9, -1, 3.5):
        with pytest.raises(ValueError):
            quadrature(deg)


# ---------------------------------------------------------------------------
# residual structure

def test_ch_constant_state_residual_zero():
    n, c = 4, 0.4
    phi = np.full(n * n, c)
    mu = np.full(n * n, float(potential_deriv(c)))
    ctx = make_ctx(SchemeKind.CH, n, phi, np.concatenate([phi, mu]))
    r = assemble_residual(SchemeKind.CH, ctx)
    assert np.abs(r).max() <= 1e-13


def test_chns_quiescent_residual_zero():
    n, c = 4, 0.4
    mesh = build_periodic_unit_square(n)
    spaces = build_spaces(mesh, SchemeKind.CHNS)
    phi = np.full(n * n, c)
    mu = np.full(n * n, float(potential_deriv(c)))
    x = np.concatenate([phi, mu, np.zeros(spaces["v"].ndofs),
                        np.zeros(spaces["p"].ndofs), [0.0]])
    ctx = make_ctx(SchemeKind.CHNS, n, phi, x, v_prev=np.zeros(spaces["v"].ndofs))
    r = assemble_residual(SchemeKind.CHNS, ctx)
    assert np.abs(r).max() <= 1e-13


def test_ch_residual_against_dense_oracle():
    n = 2
    phi_old = _noise(n, seed=3)
    phi_new = phi_old.copy()  # iterate equals previous level
    rng = np.random.default_rng(4)
    mu = 0.02 + 1e-3 * rng.standard_normal(n * n)
    x = np.concatenate([phi_new, mu])
    ctx = make_ctx(SchemeKind.CH, n, phi_old, x)
    r = assemble_residual(SchemeKind.CH, ctx)
    r_ref = ch_residual_dense(ctx.mesh, ctx.spaces["phi"], phi_new, phi_old, mu,
                              ctx.laws, ctx.tau)
    assert np.abs(r - r_ref).max() <= 1e-12
    # with iterate == previous level the phase block is pure mobility flux
    lay = ctx.layout
    assert np.abs(r[lay.sl("phi")] - r_ref[: n * n]).max() <= 1e-13


def test_ch_residual_noisy_iterate_oracle():
    n = 2
    phi_old = _noise(n, seed=7)
    phi_new = _noise(n, seed=8, amp=5e-3)
    mu = np.full(n * n, 0.02)
    x = np.concatenate([phi_new, mu])
    ctx = make_ctx(SchemeKind.CH, n, phi_old, x)
    r = assemble_residual(SchemeKind.CH, ctx)
    r_ref = ch_residual_dense(ctx.mesh, ctx.spaces["phi"], phi_new, phi_old, mu,
                              ctx.laws, ctx.tau)
    assert np.abs(r - r_ref).max() <= 1e-12


def test_stiffness_nullspace_constants():
    # iterate mu == 1: the phase-block residual is the mobility-weighted
    # stiffness applied to constants, which vanishes
    n = 4
    phi = _noise(n, seed=1)
    x = np.concatenate([phi, np.ones(n * n)])
    ctx = make_ctx(SchemeKind.CH, n, phi, x)
    r = assemble_residual(SchemeKind.CH, ctx)
    assert np.abs(r[ctx.layout.sl("phi")]).max() <= 1e-13


def test_mass_matrix_row_sums():
    # the potential-equation block applied to mu recovers the mass matrix;
    # row sums are the vertex dual areas 1/n^2 and total exactly 1
    n = 4
    phi = np.zeros(n * n)
    x = np.concatenate([phi, np.ones(n * n)])
    ctx = make_ctx(SchemeKind.CH, n, phi, x)
    r = assemble_residual(SchemeKind.CH, ctx)
    row_sums = r[ctx.layout.sl("mu")]  # M @ 1 (dg and gradient terms vanish)
    assert np.allclose(row_sums, 1.0 / (n * n), atol=1e-15)
    assert abs(row_sums.sum() - 1.0) <= 1e-13


# ---------------------------------------------------------------------------
# Jacobians

def _fd_check(scheme, darcy_order=0, seed=0, reps=3):
    n = 2
    mesh = build_periodic_unit_square(n)
    spaces = build_spaces(mesh, scheme, darcy_order)
    lay = block_layout(scheme, spaces)
    rng = np.random.default_rng(seed)
    phi_prev = 0.4 + 0.1 * rng.standard_normal(spaces["phi"].ndofs)
    v_prev = (0.1 * rng.standard_normal(spaces["v"].ndofs)
              if scheme is SchemeKind.CHNS else None)
    x0 = 0.4 + 0.2 * rng.standard_normal(lay.total)
    rule = quadrature(6)

    def ctx_at(xx):
        return FormContext(scheme=scheme, mesh=mesh, spaces=spaces, laws=_laws(scheme),
                           tau=1e-3, rule=rule, prev_phi=phi_prev, prev_v=v_prev,
                           iterate=xx)

    jac = assemble_jacobian(scheme, ctx_at(x0))
    worst = 0.0
    for _ in range(reps):
        d = rng.standard_normal(lay.total)
        d /= np.abs(d).max()
        eps = 1e-6
        fd = (assemble_residual(scheme, ctx_at(x0 + eps * d))
              - assemble_residual(scheme, ctx_at(x0 - eps * d))) / (2 * eps)
        jd = la.matvec(jac, d)
        worst = max(worst, np.abs(fd - jd).max() / max(np.abs(jd).max(), 1e-14))
    return worst


@pytest.mark.parametrize("scheme", [SchemeKind.CH, SchemeKind.CHD, SchemeKind.CHNS])
def test_jacobian_finite_difference(scheme):
    assert _fd_check(scheme) <= 1e-6


def test_jacobian_finite_difference_darcy_order1():
    assert _fd_check(SchemeKind.CHD, darcy_order=1) <= 1e-6


@pytest.mark.parametrize("scheme,extra", [(SchemeKind.CH, 0), (SchemeKind.CHD, 1),
                                          (SchemeKind.CHNS, 1)])
def test_jacobian_shape(scheme, extra):
    n = 2
    mesh = build_periodic_unit_square(n)
    spaces = build_spaces(mesh, scheme)
    lay = block_layout(scheme, spaces)
    total = sum(s.ndofs for s in spaces.values()) + spaces["phi"].ndofs + extra
    assert lay.total == total
    x = np.full(lay.total, 0.3)
    ctx = FormContext(scheme=scheme, mesh=mesh, spaces=spaces, laws=_laws(scheme),
                      tau=1e-3, rule=quadrature(6), prev_phi=np.full(n * n, 0.3),
                      prev_v=np.zeros(spaces["v"].ndofs) if scheme is SchemeKind.CHNS else None,
                      iterate=x)
    jac = assemble_jacobian(scheme, ctx)
    assert jac.shape == (total, total)


def test_jacobian_pattern_constant_across_iterates():
    n = 3
    mesh = build_periodic_unit_square(n)
    spaces = build_spaces(mesh, SchemeKind.CHD)
    lay = block_layout(SchemeKind.CHD, spaces)
    rng = np.random.default_rng(5)
    phi_prev = _noise(n, seed=5)

    def jac_at(xx):
        ctx = FormContext(scheme=SchemeKind.CHD, mesh=mesh, spaces=spaces,
                          laws=_laws(SchemeKind.CHD), tau=1e-3, rule=quadrature(6),
                          prev_phi=phi_prev, prev_v=None, iterate=xx)
        return assemble_jacobian(SchemeKind.CHD, ctx)

    j1 = jac_at(0.4 + 0.1 * rng.standard_normal(lay.total))
    j2 = jac_at(0.4 + 0.1 * rng.standard_normal(lay.total))
    assert np.array_equal(j1.indptr, j2.indptr)
    assert np.array_equal(j1.indices, j2.indices)


def test_assembly_deterministic():
    n = 3
    phi = _noise(n, seed=9)
    x = np.concatenate([phi, np.full(n * n, 0.02)])
    ctx1 = make_ctx(SchemeKind.CH, n, phi, x)
    ctx2 = make_ctx(SchemeKind.CH, n, phi, x.copy())
    r1 = assemble_residual(SchemeKind.CH, ctx1)
    r2 = assemble_residual(SchemeKind.CH, ctx2)
    assert np.array_equal(r1, r2)
    j1 = assemble_jacobian(SchemeKind.CH, ctx1)
    j2 = assemble_jacobian(SchemeKind.CH, ctx2)
    assert np.array_equal(j1.data, j2.data)


def test_iterate_length_mismatch_rejected():
    n = 2
    phi = np.full(n * n, 0.4)
    with pytest.raises(ValueError):
        make_ctx(SchemeKind.CH, n, phi, np.zeros(3 * n * n))


# ---------------------------------------------------------------------------
# convective/force cross-cancellation (the energy-proof identity)

@pytest.mark.parametrize("scheme,darcy_order", [(SchemeKind.CHD, 0), (SchemeKind.CHD, 1),
                                                (SchemeKind.CHNS, 0)])
def test_cross_cancellation(scheme, darcy_order):
    n = 4
    mesh = build_periodic_unit_square(n)
    spaces = build_spaces(mesh, scheme, darcy_order)
    lay = block_layout(scheme, spaces)
    rng = np.random.default_rng(12)
    phi = _noise(n, seed=12, amp=0.2)
    mu = rng.standard_normal(n * n)
    v = rng.standard_normal(spaces["v"].ndofs)

    def residual(vc, muc):
        x = np.zeros(lay.total)
        x[lay.sl("phi")] = phi
        x[lay.sl("mu")] = muc
        x[lay.sl("v")] = vc
        ctx = FormContext(scheme=scheme, mesh=mesh, spaces=spaces, laws=_laws(scheme),
                          tau=1e-3, rule=quadrature(6), prev_phi=phi,
                          prev_v=np.zeros_like(vc) if scheme is SchemeKind.CHNS else None,
                          iterate=x)
        return assemble_residual(scheme, ctx)

    # transport part of the phase block, paired against mu coefficients
    conv = residual(v, mu)[lay.sl("phi")] - residual(np.zeros_like(v), mu)[lay.sl("phi")]
    transport = conv @ mu  # -<phi v, grad mu>
    # capillary force part of the momentum block, paired against v coefficients
    base = residual(np.zeros_like(v), np.zeros_like(mu))[lay.sl("v")]
    force = residual(np.zeros_like(v), mu)[lay.sl("v")] - base  # +<phi grad mu, w>
    scale = max(abs(transport), abs(force @ v), 1.0)
    assert abs(transport + force @ v) <= 1e-13 * scale


# ---------------------------------------------------------------------------
# skew form

def _vec_space(n=4):
    mesh = build_periodic_unit_square(n)
    return build_space(mesh, SpaceKind.P2C_VEC)


def test_skew_vanishing_diagonal_and_antisymmetry():
    s = _vec_space()
    rng = np.random.default_rng(3)
    rule = quadrature(6)
    u = FieldVector(rng.standard_normal(s.ndofs), s)
    v = FieldVector(rng.standard_normal(s.ndofs), s)
    w = FieldVector(rng.standard_normal(s.ndofs), s)
    scale = 1.0 + abs(skew_form(u, v, w, rule))
    assert abs(skew_form(u, v, v, rule)) <= 1e-13 * scale
    assert abs(skew_form(u, v, w, rule) + skew_form(u, w, v, rule)) <= 1e-13 * scale


def test_skew_shear_field_value():
    s = _vec_space(8)
    rule = quadrature(6)
    u = interpolate(s, lambda x, y: (np.sin(2 * np.pi * y), np.zeros_like(x)))
    # (u.grad)u vanishes pointwise for a unidirectional shear, so both halves
    # of the skew form vanish, not only their difference
    assert abs(skew_form(u, u, u, rule)) <= 1e-13


def test_skew_dense_oracle_crosscheck():
    # quadrature evaluation of each half against a per-element loop
    from phasefem.spaces import eval_basis

    n = 2
    mesh = build_periodic_unit_square(n)
    s = build_space(mesh, SpaceKind.P2C_VEC)
    rng = np.random.default_rng(8)
    rule = quadrature(6)
    u = FieldVector(rng.standard_normal(s.ndofs), s)
    v = FieldVector(rng.standard_normal(s.ndofs), s)
    w = FieldVector(rng.standard_normal(s.ndofs), s)
    total = 0.0
    for t in range(mesh.num_triangles):
        be = eval_basis(s, t, rule.points)
        dofs = s.element_dofs[t]
        uval = np.einsum("qld,l->qd", be.val, u.coeffs[dofs])
        vval = np.einsum("qld,l->qd", be.val, v.coeffs[dofs])
        wval = np.einsum("qld,l->qd", be.val, w.coeffs[dofs])
        vgrad = np.einsum("qlde,l->qde", be.grad, v.coeffs[dofs])
        wgrad = np.einsum("qlde,l->qde", be.grad, w.coeffs[dofs])
        det = 1.0 / (n * n)  # det J = 2 * area = 1/n^2
        adv_v = np.einsum("qe,qde->qd", uval, vgrad)
        adv_w = np.einsum("qe,qde->qd", uval, wgrad)
        total += 0.5 * det * np.einsum("q,qd,qd->", rule.weights, adv_v, wval)
        total -= 0.5 * det * np.einsum("q,qd,qd->", rule.weights, adv_w, vval)
    got = skew_form(u, v, w, rule)
    assert got == pytest.approx(total, rel=1e-12, abs=1e-13)


def test_skew_space_mismatch():
    s = _vec_space()
    mesh2 = build_periodic_unit_square(3)
    s2 = build_space(mesh2, SpaceKind.P2C_VEC)
    rule = quadrature(6)
    u = FieldVector(np.zeros(s.ndofs), s)
    w = FieldVector(np.zeros(s2.ndofs), s2)
    with pytest.raises(ValueError):
        skew_form(u, u, w, rule)
