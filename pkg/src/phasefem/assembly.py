"""Quadrature and element-loop assembly of the scheme residuals and Jacobians.

One quadrature rule drives every form and every diagnostic of a run; the
discrete balance identities hold to roundoff only under that consistency.
The convective term in the phase equation and the capillary force in the
momentum equation are assembled from the same pointwise products, which
makes their cancellation in the energy budget exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import la
from .mesh import Mesh
from .physics import MaterialLaws, dg_potential, dg_potential_db
from .spaces import DofMap, FieldVector, SpaceKind, quad_geometry, rt_tab, scalar_tab


class SchemeKind(Enum):
    CH = "ch"
    CHD = "chd"
    CHNS = "chns"


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule on the reference triangle, weights sum to 1/2."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(a, a), (b, a), (a, b)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(y, z) for (x, y, z) in
            ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a))]


def _table_rule(degree: int):
    if degree == 1:
        return [(1 / 3, 1 / 3)], [0.5]
    if degree == 2:
        return _orbit3(1 / 6), [1 / 6] * 3
    if degree in (3, 4):
        pts = _orbit3(0.445948490915965) + _orbit3(0.091576213509771)
        wts = [0.223381589678011 / 2] * 3 + [0.109951743655322 / 2] * 3
        return pts, wts
    if degree == 5:
        pts = [(1 / 3, 1 / 3)] + _orbit3(0.470142064105115) + _orbit3(0.101286507323456)
        wts = [0.225 / 2] + [0.132394152788506 / 2] * 3 + [0.125939180544827 / 2] * 3
        return pts, wts
    if degree == 6:
        pts = (_orbit3(0.249286745170910) + _orbit3(0.063089014491502)
               + _orbit6(0.310352451033785, 0.053145049844816))
        wts = ([0.116786275726379 / 2] * 3 + [0.050844906370207 / 2] * 3
               + [0.082851075618374 / 2] * 6)
        return pts, wts
    return None


def quadrature(degree: int) -> QuadratureRule:
    """Rule exact for polynomials up to the requested degree, 1 <= degree <= 8.

    Degrees through 6 use symmetric Gauss tables; 7 and 8 fall back to a
    conical-product Gauss-Jacobi rule (positive weights, exact degree).
    """
    if not isinstance(degree, (int, np.integer)) or not 1 <= degree <= 8:
        raise ValueError(f"unsupported quadrature degree {degree!r} (need 1..8)")
    tab = _table_rule(int(degree))
    if tab is not None:
        pts, wts = tab
        return QuadratureRule(np.array(pts, dtype=float), np.array(wts, dtype=float),
                              int(degree))
    from scipy.special import roots_jacobi, roots_legendre

    p = (degree + 2) // 2
    xj, wj = roots_jacobi(p, 1, 0)
    xl, wl = roots_legendre(p)
    r = (xj + 1.0) / 2.0
    s = (xl + 1.0) / 2.0
    pts = np.array([(ri, sk * (1.0 - ri)) for ri in r for sk in s])
    wts = np.array([(wi / 4.0) * (wk / 2.0) for wi in wj for wk in wl])
    return QuadratureRule(pts, wts, int(degree))


# ---------------------------------------------------------------------------
# block layout and form context

@dataclass(frozen=True)
class BlockLayout:
    names: tuple[str, ...]
    sizes: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def offset(self, name: str) -> int:
        return sum(self.sizes[: self.names.index(name)])

    def sl(self, name: str) -> slice:
        off = self.offset(name)
        return slice(off, off + self.sizes[self.names.index(name)])


def block_layout(scheme: SchemeKind, spaces: dict[str, DofMap]) -> BlockLayout:
    np_ = spaces["phi"].ndofs
    if scheme is SchemeKind.CH:
        return BlockLayout(("phi", "mu"), (np_, np_))
    nv = spaces["v"].ndofs
    npr = spaces["p"].ndofs
    return BlockLayout(("phi", "mu", "v", "p", "lam"), (np_, np_, nv, npr, 1))


def velocity_space_kind(scheme: SchemeKind, darcy_order: int = 0) -> tuple:
    """(velocity kind, pressure kind) for the coupled schemes."""
    if scheme is SchemeKind.CHD:
        if darcy_order not in (0, 1):
            raise ValueError(f"darcy order must be 0 or 1, got {darcy_order}")
        return ((SpaceKind.RT0, SpaceKind.P0_DISC) if darcy_order == 0
                else (SpaceKind.RT1, SpaceKind.P1_DISC))
    if scheme is SchemeKind.CHNS:
        return (SpaceKind.P2C_VEC, SpaceKind.P1C)
    raise ValueError(f"{scheme} has no velocity space")


@dataclass
class FormContext:
    """Everything one Newton iteration needs to assemble residual/Jacobian."""

    scheme: SchemeKind
    mesh: Mesh
    spaces: dict[str, DofMap]
    laws: MaterialLaws
    tau: float
    rule: QuadratureRule
    prev_phi: np.ndarray
    prev_v: np.ndarray | None
    iterate: np.ndarray
    layout: BlockLayout = field(init=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        for role, space in self.spaces.items():
            if space.mesh is not self.mesh:
                raise ValueError(f"space {role!r} lives on a different mesh")
        self.layout = block_layout(self.scheme, self.spaces)
        if self.iterate.shape != (self.layout.total,):
            raise ValueError(
                f"iterate length {self.iterate.shape} does not match block "
                f"layout total {self.layout.total}"
            )
        if self.prev_phi.shape != (self.spaces["phi"].ndofs,):
            raise ValueError("previous phase field has wrong length")


class _Workspace:
    """Cached tabulations and scatter indices per (scheme, mesh, rule)."""

    def __init__(self, scheme: SchemeKind, mesh: Mesh, spaces: dict, rule: QuadratureRule):
        self.qp, self.wdet = quad_geometry(mesh, rule.points, rule.weights)
        self.pmap = spaces["phi"]
        self.pdofs = self.pmap.element_dofs
        self.pval, self.pgrad = scalar_tab(mesh, SpaceKind.P1C, rule.points)
        if scheme is not SchemeKind.CH:
            self.vmap = spaces["v"]
            self.qmap = spaces["p"]
            if self.vmap.kind is SpaceKind.P2C_VEC:
                self.sval, self.sgrad = scalar_tab(mesh, SpaceKind.P2C, rule.points)
                sdofs = self.vmap.element_dofs[:, :6]
                ns = self.vmap.nscalar
                self.vdofs = np.stack([sdofs, sdofs + ns], axis=1)  # (T, 2, 6)
            else:
                self.rtval, self.rtdiv = rt_tab(self.vmap, rule.points)
                self.vdofs = self.vmap.element_dofs
            self.qval, _ = scalar_tab(mesh, self.qmap.kind, rule.points)
            self.qdofs = self.qmap.element_dofs
            # pressure mean vector: integral of each pressure basis function
            cloc = np.einsum("ql,tq->tl", self.qval, self.wdet)
            self.cpress = np.bincount(self.qdofs.ravel(), weights=cloc.ravel(),
                                      minlength=self.qmap.ndofs)


def _workspace(ctx: FormContext) -> _Workspace:
    key = ("ws", ctx.scheme, ctx.rule.degree,
           tuple(sorted((k, v.kind) for k, v in ctx.spaces.items())))
    if key not in ctx.mesh._cache:
        ctx.mesh._cache[key] = _Workspace(ctx.scheme, ctx.mesh, ctx.spaces, ctx.rule)
    return ctx.mesh._cache[key]


def _scatter(dofs: np.ndarray, local: np.ndarray, ndofs: int) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=ndofs)


# ---------------------------------------------------------------------------
# pointwise evaluations shared by residual and Jacobian

class _Fields:
    def __init__(self, ctx: FormContext, ws: _Workspace):
        lay = ctx.layout
        x = ctx.iterate
        self.phi_c = x[lay.sl("phi")]
        self.mu_c = x[lay.sl("mu")]
        pe = self.phi_c[ws.pdofs]
        me = self.mu_c[ws.pdofs]
        pne = ctx.prev_phi[ws.pdofs]
        self.phi = np.einsum("ql,tl->tq", ws.pval, pe)
        self.phin = np.einsum("ql,tl->tq", ws.pval, pne)
        self.gphi = np.einsum("tqld,tl->tqd", ws.pgrad, pe)
        self.gphin = np.einsum("tqld,tl->tqd", ws.pgrad, pne)
        self.mu = np.einsum("ql,tl->tq", ws.pval, me)
        self.gmu = np.einsum("tqld,tl->tqd", ws.pgrad, me)
        self.m = ctx.laws.mobility(self.phi)
        self.dg = dg_potential(self.phin, self.phi)
        if ctx.scheme is SchemeKind.CH:
            return
        self.v_c = x[lay.sl("v")]
        self.p_c = x[lay.sl("p")]
        self.lam = x[lay.offset("lam")]
        self.p = np.einsum("ql,tl->tq", ws.qval, self.p_c[ws.qdofs])
        if ctx.scheme is SchemeKind.CHNS:
            ve = self.v_c[ws.vdofs]  # (T, 2, 6)
            self.ve = ve
            self.v = np.einsum("tdl,ql->tqd", ve, ws.sval)
            self.gradv = np.einsum("tdl,tqle->tqde", ve, ws.sgrad)
            self.divv = np.einsum("tqdd->tq", self.gradv)
            vne = ctx.prev_v[ws.vdofs]
            self.vn = np.einsum("tdl,ql->tqd", vne, ws.sval)
        else:
            ve = self.v_c[ws.vdofs]  # (T, L)
            self.ve = ve
            self.v = np.einsum("tqld,tl->tqd", ws.rtval, ve)
            self.divv = np.einsum("tql,tl->tq", ws.rtdiv, ve)


# ---------------------------------------------------------------------------
# residuals

def assemble_residual(scheme: SchemeKind, ctx: FormContext) -> np.ndarray:
    """Block residual of the coupled nonlinear system at the current iterate."""
    if scheme is not ctx.scheme:
        raise ValueError(f"context was built for {ctx.scheme}, not {scheme}")
    ws = _workspace(ctx)
    f = _Fields(ctx, ws)
    lay = ctx.layout
    laws = ctx.laws
    out = np.zeros(lay.total)
    wdet = ws.wdet

    # phase equation, tested with the P1 basis
    dtphi = (f.phi - f.phin) / ctx.tau
    rp = np.einsum("tq,ql,tq->tl", dtphi, ws.pval, wdet)
    rp += np.einsum("tq,tqd,tqld,tq->tl", f.m, f.gmu, ws.pgrad, wdet)
    # chemical potential equation
    rm = np.einsum("tq,ql,tq->tl", f.mu, ws.pval, wdet)
    rm -= laws.gamma * np.einsum("tqd,tqld,tq->tl", f.gphi, ws.pgrad, wdet)
    rm -= np.einsum("tq,ql,tq->tl", f.dg, ws.pval, wdet)

    if scheme is SchemeKind.CH:
        out[lay.sl("phi")] = _scatter(ws.pdofs, rp, ws.pmap.ndofs)
        out[lay.sl("mu")] = _scatter(ws.pdofs, rm, ws.pmap.ndofs)
        return out

    # transport: -<phi v, grad psi>, paired with the force +<phi grad mu, w>
    phiv = f.phi[..., None] * f.v
    rp -= np.einsum("tqd,tqld,tq->tl", phiv, ws.pgrad, wdet)
    out[lay.sl("phi")] = _scatter(ws.pdofs, rp, ws.pmap.ndofs)
    out[lay.sl("mu")] = _scatter(ws.pdofs, rm, ws.pmap.ndofs)

    force = f.phi[..., None] * f.gmu
    if scheme is SchemeKind.CHD:
        al = laws.alpha(f.phi)
        rv = np.einsum("tq,tqd,tqld,tq->tl", al, f.v, ws.rtval, wdet)
        rv -= np.einsum("tq,tql,tq->tl", f.p, ws.rtdiv, wdet)
        rv += np.einsum("tqd,tqld,tq->tl", force, ws.rtval, wdet)
        out[lay.sl("v")] = _scatter(ws.vdofs, rv, ws.vmap.ndofs)
    else:
        eta = laws.eta(f.phi)
        dv = 0.5 * (f.gradv + np.swapaxes(f.gradv, 2, 3))
        rv = np.einsum("tqd,ql,tq->tdl", (f.v - f.vn) / ctx.tau, ws.sval, wdet)
        adv = np.einsum("tqe,tqde->tqd", f.v, f.gradv)
        rv += 0.5 * np.einsum("tqd,ql,tq->tdl", adv, ws.sval, wdet)
        rv -= 0.5 * np.einsum("tqe,tqle,tqd,tq->tdl", f.v, ws.sgrad, f.v, wdet)
        rv += np.einsum("tq,tqdj,tqlj,tq->tdl", eta, dv, ws.sgrad, wdet)
        rv -= np.einsum("tq,tqld,tq->tdl", f.p, ws.sgrad, wdet)
        rv += np.einsum("tqd,ql,tq->tdl", force, ws.sval, wdet)
        out[lay.sl("v")] = _scatter(ws.vdofs, rv, ws.vmap.ndofs)

    rq = np.einsum("tq,ql,tq->tl", f.divv, ws.qval, wdet)
    out[lay.sl("p")] = _scatter(ws.qdofs, rq, ws.qmap.ndofs) + f.lam * ws.cpress
    out[lay.offset("lam")] = ws.cpress @ f.p_c
    return out


# ---------------------------------------------------------------------------
# Jacobians

class _TripletBag:
    def __init__(self, total: int):
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.total = total

    def add(self, rdofs, cdofs, local):
        """rdofs (T, L), cdofs (T, M), local (T, L, M)."""
        t, l = rdofs.shape
        m = cdofs.shape[1]
        r = np.broadcast_to(rdofs[:, :, None], (t, l, m))
        c = np.broadcast_to(cdofs[:, None, :], (t, l, m))
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.ascontiguousarray(local).reshape(-1))

    def add_col(self, rows: np.ndarray, col: int, vec: np.ndarray):
        self.rows.append(rows)
        self.cols.append(np.full(rows.size, col, dtype=np.int64))
        self.vals.append(vec)

    def add_row(self, row: int, cols: np.ndarray, vec: np.ndarray):
        self.rows.append(np.full(cols.size, row, dtype=np.int64))
        self.cols.append(cols)
        self.vals.append(vec)

    def matrix(self) -> la.SparseMatrix:
        t = la.Triplets(np.concatenate(self.rows), np.concatenate(self.cols),
                        np.concatenate(self.vals), (self.total, self.total))
        return la.from_triplets(t)


def assemble_jacobian(scheme: SchemeKind, ctx: FormContext) -> la.SparseMatrix:
    """Exact analytic Jacobian of assemble_residual at the current iterate.

    The sparsity pattern depends only on the mesh and block layout, so it is
    identical across Newton iterations and time steps.
    """
    if scheme is not ctx.scheme:
        raise ValueError(f"context was built for {ctx.scheme}, not {scheme}")
    ws = _workspace(ctx)
    f = _Fields(ctx, ws)
    lay = ctx.layout
    laws = ctx.laws
    wdet = ws.wdet
    bag = _TripletBag(lay.total)

    pd_r = ws.pdofs + lay.offset("phi")
    md_r = ws.pdofs + lay.offset("mu")

    mass = np.einsum("ql,qm,tq->tlm", ws.pval, ws.pval, wdet)
    stiff = np.einsum("tqld,tqmd,tq->tlm", ws.pgrad, ws.pgrad, wdet)
    md = laws.mobility_d(f.phi)
    dgdb = dg_potential_db(f.phin, f.phi)

    # phase-equation rows
    app = mass / ctx.tau
    app += np.einsum("tq,qm,tqd,tqld,tq->tlm", md, ws.pval, f.gmu, ws.pgrad, wdet)
    apm = np.einsum("tq,tqld,tqmd,tq->tlm", f.m, ws.pgrad, ws.pgrad, wdet)
    # potential-equation rows
    amp = -laws.gamma * stiff
    amp -= np.einsum("tq,ql,qm,tq->tlm", dgdb, ws.pval, ws.pval, wdet)

    if scheme is SchemeKind.CH:
        bag.add(pd_r, pd_r, app)
        bag.add(pd_r, md_r, apm)
        bag.add(md_r, pd_r, amp)
        bag.add(md_r, md_r, mass)
        return bag.matrix()

    qd_r = ws.qdofs + lay.offset("p")
    lam_row = lay.offset("lam")
    app -= np.einsum("qm,tqd,tqld,tq->tlm", ws.pval, f.v, ws.pgrad, wdet)

    if scheme is SchemeKind.CHD:
        vd_r = ws.vdofs + lay.offset("v")
        vval, vdiv = ws.rtval, ws.rtdiv
        apv = -np.einsum("tq,tqmd,tqld,tq->tlm", f.phi, vval, ws.pgrad, wdet)
        bag.add(pd_r, pd_r, app)
        bag.add(pd_r, md_r, apm)
        bag.add(pd_r, vd_r, apv)
        bag.add(md_r, pd_r, amp)
        bag.add(md_r, md_r, mass)

        al = laws.alpha(f.phi)
        ald = laws.alpha_d(f.phi)
        avp = np.einsum("tq,qm,tqd,tqld,tq->tlm", ald, ws.pval, f.v, vval, wdet)
        avp += np.einsum("qm,tqd,tqld,tq->tlm", ws.pval, f.gmu, vval, wdet)
        avm = np.einsum("tq,tqmd,tqld,tq->tlm", f.phi, ws.pgrad, vval, wdet)
        avv = np.einsum("tq,tqld,tqmd,tq->tlm", al, vval, vval, wdet)
        avq = -np.einsum("qm,tql,tq->tlm", ws.qval, vdiv, wdet)
        bag.add(vd_r, pd_r, avp)
        bag.add(vd_r, md_r, avm)
        bag.add(vd_r, vd_r, avv)
        bag.add(vd_r, qd_r, avq)

        aqv = np.einsum("ql,tqm,tq->tlm", ws.qval, vdiv, wdet)
        bag.add(qd_r, vd_r, aqv)
    else:
        sval, sgrad = ws.sval, ws.sgrad
        nt = ws.vdofs.shape[0]
        vd_flat = (ws.vdofs + lay.offset("v")).reshape(nt, 12)

        apv = -np.einsum("tq,qm,tqle,tq->tlem", f.phi, sval, ws.pgrad, wdet)
        bag.add(pd_r, pd_r, app)
        bag.add(pd_r, md_r, apm)
        bag.add(pd_r, vd_flat, apv.reshape(nt, 3, 12))
        bag.add(md_r, pd_r, amp)
        bag.add(md_r, md_r, mass)

        eta = laws.eta(f.phi)
        etad = laws.eta_d(f.phi)
        dv = 0.5 * (f.gradv + np.swapaxes(f.gradv, 2, 3))
        eye = np.eye(2)
        smass = np.einsum("ql,qm,tq->tlm", sval, sval, wdet)
        vdotg = np.einsum("tqj,tqlj->tql", f.v, sgrad)

        avv = np.einsum("de,tlm->tdlem", eye, smass / ctx.tau)
        # skew convection: d(c_skw(v, v, w))/dv
        avv += 0.5 * np.einsum("ql,qm,tqde,tq->tdlem", sval, sval, f.gradv, wdet)
        avv += 0.5 * np.einsum("de,tqm,ql,tq->tdlem", eye, vdotg, sval, wdet)
        avv -= 0.5 * np.einsum("qm,tqle,tqd,tq->tdlem", sval, sgrad, f.v, wdet)
        avv -= 0.5 * np.einsum("de,tql,qm,tq->tdlem", eye, vdotg, sval, wdet)
        # viscous block: symmetric-gradient contraction
        etastiff = np.einsum("tq,tqld,tqmd,tq->tlm", eta, sgrad, sgrad, wdet)
        avv += 0.5 * np.einsum("de,tlm->tdlem", eye, etastiff)
        avv += 0.5 * np.einsum("tq,tqmd,tqle,tq->tdlem", eta, sgrad, sgrad, wdet)
        bag.add(vd_flat, vd_flat, avv.reshape(nt, 12, 12))

        avp = np.einsum("tq,qm,tqdj,tqlj,tq->tdlm", etad, ws.pval, dv, sgrad, wdet)
        avp += np.einsum("qm,tqd,ql,tq->tdlm", ws.pval, f.gmu, sval, wdet)
        avm = np.einsum("tq,tqmd,ql,tq->tdlm", f.phi, ws.pgrad, sval, wdet)
        avq = -np.einsum("qm,tqld,tq->tdlm", ws.qval, sgrad, wdet)
        bag.add(vd_flat, pd_r, avp.reshape(nt, 12, 3))
        bag.add(vd_flat, md_r, avm.reshape(nt, 12, 3))
        bag.add(vd_flat, qd_r, avq.reshape(nt, 12, ws.qval.shape[1]))

        aqv = np.einsum("ql,tqme,tq->tlem", ws.qval, sgrad, wdet)
        bag.add(qd_r, vd_flat, aqv.reshape(nt, ws.qval.shape[1], 12))

    # pressure mean constraint: one multiplier column/row pair
    bag.add_col(np.arange(ws.qmap.ndofs) + lay.offset("p"), lam_row, ws.cpress)
    bag.add_row(lam_row, np.arange(ws.qmap.ndofs) + lay.offset("p"), ws.cpress)
    return bag.matrix()


def skew_form(u: FieldVector, v: FieldVector, w: FieldVector,
              rule: QuadratureRule) -> float:
    """Skew-symmetric trilinear convection form on the quadratic vector space.

    c(u, v, w) = <(u.grad)v, w>/2 - <(u.grad)w, v>/2, so c(u, v, v) = 0.
    """
    space = u.space
    if not (v.space is space and w.space is space) or space.kind is not SpaceKind.P2C_VEC:
        raise ValueError("skew_form requires three fields on one quadratic vector space")
    mesh = space.mesh
    sval, sgrad = scalar_tab(mesh, SpaceKind.P2C, rule.points)
    _, wdet = quad_geometry(mesh, rule.points, rule.weights)
    sdofs = space.element_dofs[:, :6]
    ns = space.nscalar
    vdofs = np.stack([sdofs, sdofs + ns], axis=1)

    def _eval(fv):
        ve = fv.coeffs[vdofs]
        val = np.einsum("tdl,ql->tqd", ve, sval)
        grad = np.einsum("tdl,tqle->tqde", ve, sgrad)
        return val, grad

    uval, _ = _eval(u)
    vval, vgrad = _eval(v)
    wval, wgrad = _eval(w)
    first = np.einsum("tqe,tqde,tqd,tq->", uval, vgrad, wval, wdet)
    second = np.einsum("tqe,tqde,tqd,tq->", uval, wgrad, vval, wdet)
    return 0.5 * (first - second)


def initial_mu(phi: FieldVector, laws: MaterialLaws, rule: QuadratureRule) -> FieldVector:
    """Consistent chemical potential for a given phase field.

    Solves the mass-matrix projection of the potential equation with both
    time levels equal to phi; used to seed the first Newton iterate.
    """
    space = phi.space
    mesh = space.mesh
    pval, pgrad = scalar_tab(mesh, SpaceKind.P1C, rule.points)
    _, wdet = quad_geometry(mesh, rule.points, rule.weights)
    dofs = space.element_dofs
    pe = phi.coeffs[dofs]
    phi_q = np.einsum("ql,tl->tq", pval, pe)
    gphi_q = np.einsum("tqld,tl->tqd", pgrad, pe)
    rhs_loc = laws.gamma * np.einsum("tqd,tqld,tq->tl", gphi_q, pgrad, wdet)
    rhs_loc += np.einsum("tq,ql,tq->tl", dg_potential(phi_q, phi_q), pval, wdet)
    rhs = _scatter(dofs, rhs_loc, space.ndofs)
    mloc = np.einsum("ql,qm,tq->tlm", pval, pval, wdet)
    bag = _TripletBag(space.ndofs)
    bag.add(dofs, dofs, mloc)
    mu = la.direct_solve(bag.matrix(), rhs)
    return FieldVector(mu, space)
