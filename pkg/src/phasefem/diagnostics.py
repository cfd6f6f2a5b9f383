"""Per-step structure diagnostics: mass, energy split, dissipation terms,
momenta, divergence norm and the sharp energy-balance residual.

Every integral uses the run's assembly quadrature rule; a finer rule would
break the exactness of the balance identity.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import QuadratureRule, SchemeKind
from .physics import MaterialLaws, double_well
from .spaces import FieldVector, SpaceKind, quad_geometry, rt_tab, scalar_tab


@dataclass(frozen=True)
class EnergyParts:
    interfacial: float
    bulk: float
    kinetic: float

    @property
    def total(self) -> float:
        return self.interfacial + self.bulk + self.kinetic


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the per-step structure report."""

    step: int
    time: float
    mass: float
    e_total: float
    e_interf: float
    e_bulk: float
    e_kin: float
    diss_mob: float
    diss_alpha: float
    diss_visc: float
    balance_res: float
    lx: float
    ly: float
    ang: float
    div_norm: float
    newton_iters: int
    newton_res: float


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _scalar_point_values(f: FieldVector, rule: QuadratureRule):
    mesh = f.space.mesh
    val, grad = scalar_tab(mesh, f.space.kind, rule.points)
    fe = f.coeffs[f.space.element_dofs]
    return np.einsum("ql,tl->tq", val, fe), np.einsum("tqld,tl->tqd", grad, fe)


def _velocity_point_values(v: FieldVector, rule: QuadratureRule):
    """Values (T, Q, 2), divergence (T, Q) and, for the quadratic space,
    the full gradient (T, Q, 2, 2)."""
    mesh = v.space.mesh
    if v.space.kind is SpaceKind.P2C_VEC:
        sval, sgrad = scalar_tab(mesh, SpaceKind.P2C, rule.points)
        sdofs = v.space.element_dofs[:, :6]
        ve = np.stack([v.coeffs[sdofs], v.coeffs[sdofs + v.space.nscalar]], axis=1)
        val = np.einsum("tdl,ql->tqd", ve, sval)
        grad = np.einsum("tdl,tqle->tqde", ve, sgrad)
        return val, np.einsum("tqdd->tq", grad), grad
    if v.space.kind in (SpaceKind.RT0, SpaceKind.RT1):
        rv, rd = rt_tab(v.space, rule.points)
        ve = v.coeffs[v.space.element_dofs]
        return (np.einsum("tqld,tl->tqd", rv, ve),
                np.einsum("tql,tl->tq", rd, ve), None)
    raise ValueError(f"{v.space.kind.name} is not a velocity space")


def _wdet(mesh, rule: QuadratureRule):
    return quad_geometry(mesh, rule.points, rule.weights)[1]


def mass(phi: FieldVector, rule: QuadratureRule) -> float:
    """Integral of the phase field over the domain."""
    _require(phi.space.kind is SpaceKind.P1C, "mass expects a P1 phase field")
    pq, _ = _scalar_point_values(phi, rule)
    return float(np.einsum("tq,tq->", pq, _wdet(phi.space.mesh, rule)))


def energy(phi: FieldVector, v: FieldVector | None, laws: MaterialLaws,
           rule: QuadratureRule) -> EnergyParts:
    """Interfacial, bulk and kinetic energy; kinetic weighted by laws.beta."""
    _require(phi.space.kind is SpaceKind.P1C, "energy expects a P1 phase field")
    wdet = _wdet(phi.space.mesh, rule)
    pq, gpq = _scalar_point_values(phi, rule)
    interf = 0.5 * laws.gamma * float(np.einsum("tqd,tqd,tq->", gpq, gpq, wdet))
    bulk = float(np.einsum("tq,tq->", double_well(pq), wdet))
    kinetic = 0.0
    if v is not None and laws.beta:
        _require(v.space.mesh is phi.space.mesh, "fields live on different meshes")
        vq, _, _ = _velocity_point_values(v, rule)
        kinetic = 0.5 * laws.beta * float(np.einsum("tqd,tqd,tq->", vq, vq, wdet))
    return EnergyParts(interfacial=interf, bulk=bulk, kinetic=kinetic)


def momenta(v: FieldVector, rule: QuadratureRule) -> tuple[float, float, float]:
    """Linear momentum components and the scalar angular momentum.

    The angular momentum uses the cross product v x x, i.e. the integral of
    v1*x2 - v2*x1 with per-element unwrapped physical coordinates.
    """
    mesh = v.space.mesh
    qp, wdet = quad_geometry(mesh, rule.points, rule.weights)
    vq, _, _ = _velocity_point_values(v, rule)
    lx = float(np.einsum("tq,tq->", vq[..., 0], wdet))
    ly = float(np.einsum("tq,tq->", vq[..., 1], wdet))
    ang = float(np.einsum("tq,tq->",
                          vq[..., 0] * qp[..., 1] - vq[..., 1] * qp[..., 0], wdet))
    return lx, ly, ang


def divergence_norm(v: FieldVector, rule: QuadratureRule) -> float:
    """L2 norm of the elementwise divergence."""
    dq = _velocity_point_values(v, rule)[1]
    wdet = _wdet(v.space.mesh, rule)
    return float(np.sqrt(np.einsum("tq,tq,tq->", dq, dq, wdet)))


def _dissipation(scheme: SchemeKind, phi: FieldVector, mu: FieldVector,
                 v: FieldVector | None, laws: MaterialLaws, rule: QuadratureRule):
    """Mobility, Darcy and viscous dissipation rates at one time level."""
    wdet = _wdet(phi.space.mesh, rule)
    pq, _ = _scalar_point_values(phi, rule)
    _, gmq = _scalar_point_values(mu, rule)
    d_mob = float(np.einsum("tq,tqd,tqd,tq->", laws.mobility(pq), gmq, gmq, wdet))
    d_alpha = 0.0
    d_visc = 0.0
    if scheme is SchemeKind.CHD:
        vq, _, _ = _velocity_point_values(v, rule)
        d_alpha = float(np.einsum("tq,tqd,tqd,tq->", laws.alpha(pq), vq, vq, wdet))
    elif scheme is SchemeKind.CHNS:
        _, _, grad = _velocity_point_values(v, rule)
        dv = 0.5 * (grad + np.swapaxes(grad, 2, 3))
        d_visc = float(np.einsum("tq,tqde,tqde,tq->", laws.eta(pq), dv, dv, wdet))
    return d_mob, d_alpha, d_visc


def balance_residual(prev, nxt, scheme: SchemeKind, laws: MaterialLaws,
                     tau: float, rule: QuadratureRule) -> float:
    """Absolute defect of the sharp per-step energy identity.

    The identity balances the energy drop against the dissipation terms and
    the squared-increment remainders of the time discretization; for a
    converged step it vanishes to solver accuracy.
    """
    e_prev = energy(prev.phi, getattr(prev, "v", None), laws, rule)
    e_next = energy(nxt.phi, getattr(nxt, "v", None), laws, rule)
    d_mob, d_alpha, d_visc = _dissipation(scheme, nxt.phi, nxt.mu,
                                          getattr(nxt, "v", None), laws, rule)
    wdet = _wdet(nxt.phi.space.mesh, rule)
    dphi = FieldVector(nxt.phi.coeffs - prev.phi.coeffs, nxt.phi.space)
    _, gdq = _scalar_point_values(dphi, rule)
    rem = 0.5 * laws.gamma * float(np.einsum("tqd,tqd,tq->", gdq, gdq, wdet))
    if scheme is SchemeKind.CHNS:
        dvf = FieldVector(nxt.v.coeffs - prev.v.coeffs, nxt.v.space)
        dvq, _, _ = _velocity_point_values(dvf, rule)
        rem += 0.5 * float(np.einsum("tqd,tqd,tq->", dvq, dvq, wdet))
    r = (e_next.total - e_prev.total) + tau * (d_mob + d_alpha + d_visc) + rem
    return abs(r)


def make_record(prev, nxt, scheme: SchemeKind, laws: MaterialLaws, tau: float,
                rule: QuadratureRule, step: int, newton_iters: int,
                newton_res: float) -> DiagnosticsRecord:
    """Full structure report for the step prev -> nxt."""
    e = energy(nxt.phi, getattr(nxt, "v", None), laws, rule)
    d_mob, d_alpha, d_visc = _dissipation(scheme, nxt.phi, nxt.mu,
                                          getattr(nxt, "v", None), laws, rule)
    if getattr(nxt, "v", None) is not None:
        lx, ly, ang = momenta(nxt.v, rule)
        div = divergence_norm(nxt.v, rule)
    else:
        lx = ly = ang = div = 0.0
    bal = balance_residual(prev, nxt, scheme, laws, tau, rule)
    return DiagnosticsRecord(
        step=step,
        time=step * tau,
        mass=mass(nxt.phi, rule),
        e_total=e.total,
        e_interf=e.interfacial,
        e_bulk=e.bulk,
        e_kin=e.kinetic,
        diss_mob=d_mob,
        diss_alpha=d_alpha,
        diss_visc=d_visc,
        balance_res=bal,
        lx=lx,
        ly=ly,
        ang=ang,
        div_norm=div,
        newton_iters=newton_iters,
        newton_res=newton_res,
    )


def initial_record(state, scheme: SchemeKind, laws: MaterialLaws,
                   rule: QuadratureRule) -> DiagnosticsRecord:
    """Step-0 row: energies and momenta of the initial data, zero elsewhere."""
    e = energy(state.phi, getattr(state, "v", None), laws, rule)
    if getattr(state, "v", None) is not None:
        lx, ly, ang = momenta(state.v, rule)
        div = divergence_norm(state.v, rule)
    else:
        lx = ly = ang = div = 0.0
    return DiagnosticsRecord(
        step=0, time=0.0, mass=mass(state.phi, rule),
        e_total=e.total, e_interf=e.interfacial, e_bulk=e.bulk, e_kin=e.kinetic,
        diss_mob=0.0, diss_alpha=0.0, diss_visc=0.0, balance_res=0.0,
        lx=lx, ly=ly, ang=ang, div_norm=div, newton_iters=0, newton_res=0.0,
    )
