import numpy as np
import pytest

from phasefem import diagnostics as dg
from phasefem.assembly import SchemeKind, quadrature
from phasefem.mesh import build_periodic_unit_square
from phasefem.physics import MaterialLaws
from phasefem.schemes import SchemeConfig, SchemeState, initial_state, make_mesh_and_phi, step
from phasefem.spaces import FieldVector, SpaceKind, build_space, interpolate

RULE = quadrature(6)


@pytest.fixture(scope="module")
def mesh8():
    return build_periodic_unit_square(8)


def _const_phi(mesh, c):
    s = build_space(mesh, SpaceKind.P1C)
    return FieldVector(np.full(s.ndofs, c), s)


def test_mass_values(mesh8):
    assert dg.mass(_const_phi(mesh8, 0.4), RULE) == pytest.approx(0.4, abs=1e-14)
    assert dg.mass(_const_phi(mesh8, 1.0), RULE) == pytest.approx(1.0, abs=1e-14)
    s = build_space(mesh8, SpaceKind.P1C)
    f = interpolate(s, lambda x, y: np.sin(2 * np.pi * x))
    assert abs(dg.mass(f, RULE)) <= 1e-13


def test_energy_values(mesh8):
    laws = MaterialLaws()
    e = dg.energy(_const_phi(mesh8, 0.4), None, laws, RULE)
    assert e.total == pytest.approx(0.0144, rel=1e-12)
    assert e.interfacial == pytest.approx(0.0, abs=1e-15)
    assert dg.energy(_const_phi(mesh8, 0.0), None, laws, RULE).total == 0.0

    laws1 = MaterialLaws(beta=1)
    sv = build_space(mesh8, SpaceKind.P2C_VEC)
    v = interpolate(sv, lambda x, y: (np.ones_like(x), np.zeros_like(x)))
    e1 = dg.energy(_const_phi(mesh8, 0.4), v, laws1, RULE)
    assert e1.kinetic == pytest.approx(0.5, rel=1e-13)
    assert e1.total == pytest.approx(0.0144 + 0.5, rel=1e-12)
    # record invariant: total equals the sum of its parts
    assert e1.total == e1.interfacial + e1.bulk + e1.kinetic


def test_momenta_constant_fields(mesh8):
    sv = build_space(mesh8, SpaceKind.P2C_VEC)
    v = interpolate(sv, lambda x, y: (np.ones_like(x), np.zeros_like(x)))
    lx, ly, ang = dg.momenta(v, RULE)
    assert (lx, ly) == (pytest.approx(1.0, rel=1e-13), pytest.approx(0.0, abs=1e-13))
    assert ang == pytest.approx(0.5, rel=1e-12)
    v2 = interpolate(sv, lambda x, y: (np.zeros_like(x), np.ones_like(x)))
    lx, ly, ang = dg.momenta(v2, RULE)
    assert (lx, ly) == (pytest.approx(0.0, abs=1e-13), pytest.approx(1.0, rel=1e-13))
    assert ang == pytest.approx(-0.5, rel=1e-12)
    vz = FieldVector(np.zeros(sv.ndofs), sv)
    assert dg.momenta(vz, RULE) == (0.0, 0.0, 0.0)


def test_divergence_norm_constant_and_rt(mesh8):
    sv = build_space(mesh8, SpaceKind.P2C_VEC)
    v = interpolate(sv, lambda x, y: (np.full_like(x, 2.0), np.full_like(x, -1.0)))
    assert dg.divergence_norm(v, RULE) <= 1e-13
    # tangential increments of a continuous scalar give a divergence-free
    # lowest-order H(div) field
    srt = build_space(mesh8, SpaceKind.RT0)
    rng = np.random.default_rng(0)
    sc = rng.standard_normal(mesh8.num_vertices)
    lo = np.minimum(mesh8.edges[:, 0], mesh8.edges[:, 1])
    hi = np.maximum(mesh8.edges[:, 0], mesh8.edges[:, 1])
    vrt = FieldVector(sc[hi] - sc[lo], srt)
    assert dg.divergence_norm(vrt, RULE) <= 1e-13


def test_divergence_norm_refinement_oracle():
    # interpolated shear divergence approaches the analytic norm pi*sqrt(2)
    want = np.pi * np.sqrt(2.0)
    errs = []
    for n in (8, 16, 32):
        mesh = build_periodic_unit_square(n)
        sv = build_space(mesh, SpaceKind.P2C_VEC)
        v = interpolate(sv, lambda x, y: (np.sin(2 * np.pi * x), np.zeros_like(x)))
        errs.append(abs(dg.divergence_norm(v, RULE) - want))
    assert errs[-1] <= 0.02 * want
    assert errs[2] < 0.2 * errs[0]
    assert errs[1] < errs[0] and errs[2] < errs[1]


def _one_ch_step(n=16, seed=1):
    cfg = SchemeConfig(scheme=SchemeKind.CH, n=n, tau=1e-3, t_end=1e-3)
    rng = np.random.default_rng(seed)
    mesh, phi = make_mesh_and_phi(cfg, 0.4 + 1e-3 * (2 * rng.random(n * n) - 1))
    s0 = initial_state(cfg, phi)
    s1, rep = step(s0, cfg, RULE)
    return cfg, s0, s1, rep


def test_balance_residual_constant_pair():
    cfg = SchemeConfig(scheme=SchemeKind.CH, n=8, tau=1e-3, t_end=1e-3)
    mesh, phi = make_mesh_and_phi(cfg, np.full(64, 0.4))
    s0 = initial_state(cfg, phi)
    assert dg.balance_residual(s0, s0, cfg.scheme, cfg.laws, cfg.tau, RULE) <= 1e-14


def test_balance_residual_one_step():
    cfg, s0, s1, _ = _one_ch_step()
    assert dg.balance_residual(s0, s1, cfg.scheme, cfg.laws, cfg.tau, RULE) <= 1e-10


def test_balance_residual_sensitivity_probe():
    # the identity check must not be vacuous: poking one dof of the new
    # state must raise the residual well above its converged level.  The
    # local sensitivity is about f'(0.4)/n^2 ~ 1e-4 per unit perturbation.
    cfg, s0, s1, _ = _one_ch_step()
    base = dg.balance_residual(s0, s1, cfg.scheme, cfg.laws, cfg.tau, RULE)
    assert base <= 1e-12

    def perturbed(delta):
        pp = s1.phi.copy()
        pp.coeffs[7] += delta
        return SchemeState(index=s1.index, phi=pp, mu=s1.mu)

    r6 = dg.balance_residual(s0, perturbed(1e-6), cfg.scheme, cfg.laws, cfg.tau, RULE)
    r3 = dg.balance_residual(s0, perturbed(1e-3), cfg.scheme, cfg.laws, cfg.tau, RULE)
    assert r6 > max(1e-11, 100 * base)
    assert r3 > 1e-8


def test_make_record_consistency():
    cfg, s0, s1, rep = _one_ch_step()
    rec = dg.make_record(s0, s1, cfg.scheme, cfg.laws, cfg.tau, RULE, 1,
                         rep.iterations, rep.residual)
    assert rec.step == 1
    assert rec.time == pytest.approx(cfg.tau)
    assert rec.e_total == rec.e_interf + rec.e_bulk + rec.e_kin
    assert rec.mass == pytest.approx(dg.mass(s1.phi, RULE), abs=1e-16)
    assert rec.balance_res <= 1e-10
    assert rec.div_norm == 0.0 and rec.lx == 0.0
    assert rec.newton_iters == rep.iterations


def test_space_mismatch_errors(mesh8):
    s2 = build_space(mesh8, SpaceKind.P2C)
    f = FieldVector(np.zeros(s2.ndofs), s2)
    with pytest.raises(ValueError):
        dg.mass(f, RULE)
    with pytest.raises(ValueError):
        dg.divergence_norm(FieldVector(np.zeros(s2.ndofs), s2), RULE)
