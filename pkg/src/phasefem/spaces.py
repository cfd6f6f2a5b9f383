"""Finite-element spaces and dof management on the periodic mesh.

Continuous P1/P2 Lagrange spaces, elementwise-discontinuous P0/P1, and
H(div)-conforming Raviart-Thomas spaces RT0/RT1.  Lagrange bases are pulled
back affinely; RT bases use the contravariant Piola transform with dof
functionals defined against each edge's canonical direction (from the lower
to the higher vertex index), which makes normal components continuous
across every edge without per-element sign tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .mesh import Mesh, all_jacobians

_REF_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_EDGE_PAIRS = ((0, 1), (1, 2), (2, 0))

# 2-point Gauss on [0,1]: exact through cubics, enough for RT1 edge moments.
_EDGE_GAUSS2 = (np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]),
                np.array([0.5, 0.5]))
# 4-point Gauss on [0,1], used for interpolation moments of general fields.
_EG4X = np.array([0.069431844202973712, 0.33000947820757187,
                  0.66999052179242813, 0.93056815579702623])
_EG4W = np.array([0.17392742256872692, 0.32607257743127305,
                  0.32607257743127305, 0.17392742256872692])
# 6-point degree-4 triangle rule (weights sum to 1/2), for interior moments.
_TRI_A1, _TRI_W1 = 0.445948490915965, 0.223381589678011 / 2.0
_TRI_A2, _TRI_W2 = 0.091576213509771, 0.109951743655322 / 2.0


def _deg4_rule():
    pts = []
    wts = []
    for a, w in ((_TRI_A1, _TRI_W1), (_TRI_A2, _TRI_W2)):
        b = 1.0 - 2.0 * a
        for bary in ((b, a, a), (a, b, a), (a, a, b)):
            pts.append((bary[1], bary[2]))
            wts.append(w)
    return np.array(pts), np.array(wts)


_TRI_DEG4 = _deg4_rule()


class SpaceKind(Enum):
    P1C = "p1c"
    P2C = "p2c"
    P2C_VEC = "p2c_vec"
    P0_DISC = "p0_disc"
    P1_DISC = "p1_disc"
    RT0 = "rt0"
    RT1 = "rt1"


_SCALAR_KINDS = {SpaceKind.P1C, SpaceKind.P2C, SpaceKind.P0_DISC, SpaceKind.P1_DISC}
_RT_KINDS = {SpaceKind.RT0, SpaceKind.RT1}


@dataclass(frozen=True)
class DofMap:
    """Global dof numbering of one space on one mesh."""

    kind: SpaceKind
    mesh: Mesh
    ndofs: int
    element_dofs: np.ndarray  # (T, nloc) local -> global

    @property
    def nloc(self) -> int:
        return self.element_dofs.shape[1]

    @property
    def nscalar(self) -> int:
        """Scalar dof count per component (vector spaces only)."""
        if self.kind is SpaceKind.P2C_VEC:
            return self.ndofs // 2
        return self.ndofs


@dataclass
class FieldVector:
    """Global coefficient vector tagged with its space."""

    coeffs: np.ndarray
    space: DofMap

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.ndofs,):
            raise ValueError(
                f"coefficient length {self.coeffs.shape} does not match "
                f"{self.space.kind.name} dof count {self.space.ndofs}"
            )

    def copy(self) -> "FieldVector":
        return FieldVector(self.coeffs.copy(), self.space)


def expected_dof_count(kind: SpaceKind, n: int) -> int:
    n2 = n * n
    return {
        SpaceKind.P1C: n2,
        SpaceKind.P2C: 4 * n2,
        SpaceKind.P2C_VEC: 8 * n2,
        SpaceKind.P0_DISC: 2 * n2,
        SpaceKind.P1_DISC: 6 * n2,
        SpaceKind.RT0: 3 * n2,
        SpaceKind.RT1: 10 * n2,  # 2 per edge + 2 per triangle
    }[kind]


def build_space(mesh: Mesh, kind: SpaceKind) -> DofMap:
    """Construct the dof map of the given space kind on the mesh."""
    n2 = mesh.n * mesh.n
    tris = mesh.triangles
    t2e = mesh.triangle_to_edges
    ntri = mesh.num_triangles
    if kind is SpaceKind.P1C:
        dofs = tris.copy()
    elif kind is SpaceKind.P2C:
        dofs = np.hstack([tris, n2 + t2e])
    elif kind is SpaceKind.P2C_VEC:
        sc = np.hstack([tris, n2 + t2e])
        dofs = np.hstack([sc, sc + 4 * n2])
    elif kind is SpaceKind.P0_DISC:
        dofs = np.arange(ntri, dtype=np.int64)[:, None]
    elif kind is SpaceKind.P1_DISC:
        dofs = 3 * np.arange(ntri, dtype=np.int64)[:, None] + np.arange(3)
    elif kind is SpaceKind.RT0:
        dofs = t2e.copy()
    elif kind is SpaceKind.RT1:
        ned = mesh.num_edges
        edge_part = np.repeat(2 * t2e, 2, axis=1)
        edge_part[:, 1::2] += 1
        interior = 2 * ned + 2 * np.arange(ntri, dtype=np.int64)[:, None] + np.arange(2)
        dofs = np.hstack([edge_part, interior])
    else:  # pragma: no cover
        raise ValueError(f"unknown space kind {kind}")
    return DofMap(kind=kind, mesh=mesh, ndofs=expected_dof_count(kind, mesh.n),
                  element_dofs=dofs)


# ---------------------------------------------------------------------------
# reference bases

def _p1_ref(pts: np.ndarray):
    x, y = pts[:, 0], pts[:, 1]
    val = np.stack([1.0 - x - y, x, y], axis=1)
    grad = np.broadcast_to(
        np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), (len(pts), 3, 2)
    ).copy()
    return val, grad


def _p2_ref(pts: np.ndarray):
    lam, glam = _p1_ref(pts)
    q = len(pts)
    val = np.empty((q, 6))
    grad = np.empty((q, 6, 2))
    for i in range(3):
        val[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
        grad[:, i] = (4.0 * lam[:, i] - 1.0)[:, None] * glam[:, i]
    for k, (a, b) in enumerate(_EDGE_PAIRS):
        val[:, 3 + k] = 4.0 * lam[:, a] * lam[:, b]
        grad[:, 3 + k] = 4.0 * (lam[:, a, None] * glam[:, b] + lam[:, b, None] * glam[:, a])
    return val, grad


def _p0_ref(pts: np.ndarray):
    q = len(pts)
    return np.ones((q, 1)), np.zeros((q, 1, 2))


_REF_EVAL = {
    SpaceKind.P1C: _p1_ref,
    SpaceKind.P1_DISC: _p1_ref,
    SpaceKind.P2C: _p2_ref,
    SpaceKind.P0_DISC: _p0_ref,
}


def _rt_monomials(kind: SpaceKind, pts: np.ndarray):
    """Reference monomial fields spanning RT_k and their divergences."""
    x, y = pts[:, 0], pts[:, 1]
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    if kind is SpaceKind.RT0:
        val = np.stack([
            np.stack([one, zero], -1),
            np.stack([zero, one], -1),
            np.stack([x, y], -1),
        ], axis=1)
        div = np.stack([zero, zero, 2.0 * one], axis=1)
    else:
        val = np.stack([
            np.stack([one, zero], -1),
            np.stack([x, zero], -1),
            np.stack([y, zero], -1),
            np.stack([zero, one], -1),
            np.stack([zero, x], -1),
            np.stack([zero, y], -1),
            np.stack([x * x, x * y], -1),
            np.stack([x * y, y * y], -1),
        ], axis=1)
        div = np.stack([zero, one, zero, zero, zero, one, 3.0 * x, 3.0 * y], axis=1)
    return val, div  # (Q, nm, 2), (Q, nm)


def _points_key(pts: np.ndarray) -> tuple:
    return (pts.shape, hash(pts.tobytes()))


def scalar_tab(mesh: Mesh, kind: SpaceKind, pts: np.ndarray):
    """Reference values (Q, L) and physical gradients (T, Q, L, 2)."""
    key = ("stab", kind, _points_key(pts))
    if key not in mesh._cache:
        val, rgrad = _REF_EVAL[kind](pts)
        _, _, jinv_t = all_jacobians(mesh)
        grad = np.einsum("tde,qle->tqld", jinv_t, rgrad)
        mesh._cache[key] = (val, np.ascontiguousarray(grad))
    return mesh._cache[key]


def _rt_local_frames(mesh: Mesh):
    """Per-element edge frames: canonical unit normal, length, sign."""
    key = "rt_frames"
    if key not in mesh._cache:
        c = mesh.corner_coords
        frames = []
        for k, (a, b) in enumerate(_EDGE_PAIRS):
            evec = c[:, b] - c[:, a]
            elen = np.linalg.norm(evec, axis=1)
            s = mesh.edge_signs[:, k].astype(float)
            tan = s[:, None] * evec / elen[:, None]
            nor = np.stack([tan[:, 1], -tan[:, 0]], axis=1)
            frames.append((elen, s, nor))
        mesh._cache[key] = frames
    return mesh._cache[key]


def _rt_coefficients(space: DofMap) -> np.ndarray:
    """Nodal coefficient matrices C with basis_i = sum_j C[t, j, i] * monomial_j."""
    mesh = space.mesh
    key = ("rtcoef", space.kind)
    if key in mesh._cache:
        return mesh._cache[key]
    nm = 3 if space.kind is SpaceKind.RT0 else 8
    per_edge = 1 if space.kind is SpaceKind.RT0 else 2
    jac, det, _ = all_jacobians(mesh)
    ntri = mesh.num_triangles
    dmat = np.zeros((ntri, nm, nm))
    frames = _rt_local_frames(mesh)
    ug, wg = _EDGE_GAUSS2
    for k, (a, b) in enumerate(_EDGE_PAIRS):
        elen, s, nor = frames[k]
        ra, rb = _REF_CORNERS[a], _REF_CORNERS[b]
        for u, w in zip(ug, wg):
            xr = (ra + u * (rb - ra))[None, :]
            mv, _ = _rt_monomials(space.kind, xr)  # (1, nm, 2)
            phys = np.einsum("tde,me->tmd", jac, mv[0]) / det[:, None, None]
            vn = np.einsum("tmd,td->tm", phys, nor)
            dmat[:, per_edge * k, :] += (w * elen)[:, None] * vn
            if per_edge == 2:
                tcan = np.where(s > 0, u, 1.0 - u)
                dmat[:, per_edge * k + 1, :] += (w * elen * (2.0 * tcan - 1.0))[:, None] * vn
    if space.kind is SpaceKind.RT1:
        pts, wts = _TRI_DEG4
        mv, _ = _rt_monomials(space.kind, pts)  # (Q, nm, 2)
        phys = np.einsum("tde,qme->tqmd", jac, mv) / det[:, None, None, None]
        wdet = wts[None, :] * det[:, None]
        dmat[:, 6, :] = np.einsum("tq,tqm->tm", wdet, phys[..., 0])
        dmat[:, 7, :] = np.einsum("tq,tqm->tm", wdet, phys[..., 1])
    coef = np.linalg.inv(dmat)
    mesh._cache[key] = coef
    return coef


def rt_tab(space: DofMap, pts: np.ndarray):
    """RT basis values (T, Q, L, 2) and divergences (T, Q, L) at ref points."""
    mesh = space.mesh
    key = ("rttab", space.kind, _points_key(pts))
    if key not in mesh._cache:
        coef = _rt_coefficients(space)
        mv, md = _rt_monomials(space.kind, pts)
        jac, det, _ = all_jacobians(mesh)
        phys = np.einsum("tde,qme->tqmd", jac, mv) / det[:, None, None, None]
        val = np.einsum("tmi,tqmd->tqid", coef, phys)
        div = np.einsum("tmi,qm->tqi", coef, md) / det[:, None, None]
        mesh._cache[key] = (np.ascontiguousarray(val), np.ascontiguousarray(div))
    return mesh._cache[key]


def quad_geometry(mesh: Mesh, pts: np.ndarray, wts: np.ndarray):
    """Physical quadrature points (T, Q, 2) and weights*|J| (T, Q)."""
    key = ("qgeom", _points_key(pts))
    if key not in mesh._cache:
        jac, det, _ = all_jacobians(mesh)
        x0 = mesh.corner_coords[:, 0]
        qp = x0[:, None, :] + np.einsum("tde,qe->tqd", jac, pts)
        wdet = wts[None, :] * det[:, None]
        mesh._cache[key] = (qp, wdet)
    return mesh._cache[key]


# ---------------------------------------------------------------------------
# public operations

@dataclass(frozen=True)
class BasisEval:
    """Basis data at user points of one element.

    val has shape (Q, L) for scalar spaces and (Q, L, 2) for vector ones;
    grad is (Q, L, 2) respectively (Q, L, 2, 2) with grad[..., d, e] the
    e-derivative of component d; div is (Q, L) for vector spaces.
    """

    val: np.ndarray
    grad: np.ndarray | None
    div: np.ndarray | None


def eval_basis(space: DofMap, t: int, pts) -> BasisEval:
    """Evaluate all local basis functions of element t at reference points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if not 0 <= t < space.mesh.num_triangles:
        raise IndexError(f"triangle index {t} out of range")
    if space.kind in _SCALAR_KINDS:
        val, rgrad = _REF_EVAL[space.kind](pts)
        _, _, jinv_t = all_jacobians(space.mesh)
        grad = np.einsum("de,qle->qld", jinv_t[t], rgrad)
        return BasisEval(val=val, grad=grad, div=None)
    if space.kind is SpaceKind.P2C_VEC:
        sval, rgrad = _p2_ref(pts)
        _, _, jinv_t = all_jacobians(space.mesh)
        sgrad = np.einsum("de,qle->qld", jinv_t[t], rgrad)
        q, ls = sval.shape
        val = np.zeros((q, 2 * ls, 2))
        grad = np.zeros((q, 2 * ls, 2, 2))
        div = np.zeros((q, 2 * ls))
        for comp in range(2):
            val[:, comp * ls:(comp + 1) * ls, comp] = sval
            grad[:, comp * ls:(comp + 1) * ls, comp, :] = sgrad
            div[:, comp * ls:(comp + 1) * ls] = sgrad[..., comp]
        return BasisEval(val=val, grad=grad, div=div)
    coef = _rt_coefficients(space)[t]
    mv, md = _rt_monomials(space.kind, pts)
    jac, det, _ = all_jacobians(space.mesh)
    phys = np.einsum("de,qme->qmd", jac[t], mv) / det[t]
    val = np.einsum("mi,qmd->qid", coef, phys)
    div = np.einsum("mi,qm->qi", coef, md) / det[t]
    return BasisEval(val=val, grad=None, div=div)


def _edge_frames_global(mesh: Mesh):
    tail = mesh.vertices[mesh.edges[:, 0]]
    delta = mesh.edge_delta
    length = np.linalg.norm(delta, axis=1)
    sgn = np.where(mesh.edge_flip, -1.0, 1.0)
    tan = sgn[:, None] * delta / length[:, None]
    nor = np.stack([tan[:, 1], -tan[:, 0]], axis=1)
    return tail, delta, length, sgn, nor


def interpolate(space: DofMap, fn) -> FieldVector:
    """Nodal (Lagrange) or moment (RT) interpolation of a pointwise function.

    fn(x, y) must accept numpy arrays; for vector spaces it returns a pair
    (vx, vy).  On the periodic continuous spaces the caller is responsible
    for passing a 1-periodic function; non-periodic input is not detected.
    """
    mesh = space.mesh
    kind = space.kind
    if kind is SpaceKind.P1C:
        vals = np.asarray(fn(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)
        return FieldVector(np.broadcast_to(vals, (space.ndofs,)).copy(), space)
    if kind is SpaceKind.P2C:
        coeffs = np.empty(space.ndofs)
        coeffs[: mesh.num_vertices] = fn(mesh.vertices[:, 0], mesh.vertices[:, 1])
        mid = mesh.vertices[mesh.edges[:, 0]] + 0.5 * mesh.edge_delta
        coeffs[mesh.num_vertices:] = fn(mid[:, 0], mid[:, 1])
        return FieldVector(coeffs, space)
    if kind is SpaceKind.P2C_VEC:
        ns = space.nscalar
        coeffs = np.empty(space.ndofs)
        verts = mesh.vertices
        mid = verts[mesh.edges[:, 0]] + 0.5 * mesh.edge_delta
        for nodes, sl in ((verts, slice(0, mesh.num_vertices)),
                          (mid, slice(mesh.num_vertices, ns))):
            vx, vy = fn(nodes[:, 0], nodes[:, 1])
            coeffs[sl] = vx
            coeffs[ns:][sl] = vy
        return FieldVector(coeffs, space)
    if kind is SpaceKind.P0_DISC:
        bary = mesh.corner_coords.mean(axis=1)
        return FieldVector(np.asarray(fn(bary[:, 0], bary[:, 1]), dtype=float), space)
    if kind is SpaceKind.P1_DISC:
        c = mesh.corner_coords
        vals = np.asarray(fn(c[..., 0], c[..., 1]), dtype=float)
        return FieldVector(vals.reshape(-1), space)
    if kind in _RT_KINDS:
        return _interpolate_rt(space, fn)
    raise ValueError(f"unknown space kind {kind}")  # pragma: no cover


def _interpolate_rt(space: DofMap, fn) -> FieldVector:
    mesh = space.mesh
    per_edge = 1 if space.kind is SpaceKind.RT0 else 2
    tail, delta, length, sgn, nor = _edge_frames_global(mesh)
    ned = mesh.num_edges
    coeffs = np.zeros(space.ndofs)
    for u, w in zip(_EG4X, _EG4W):
        x = tail + u * delta
        vx, vy = fn(x[:, 0], x[:, 1])
        vn = vx * nor[:, 0] + vy * nor[:, 1]
        tcan = np.where(sgn > 0, u, 1.0 - u)
        coeffs[per_edge * np.arange(ned)] += w * length * vn
        if per_edge == 2:
            coeffs[per_edge * np.arange(ned) + 1] += w * length * vn * (2.0 * tcan - 1.0)
    if space.kind is SpaceKind.RT1:
        pts, wts = _TRI_DEG4
        qp, wdet = quad_geometry(mesh, pts, wts)
        vx, vy = fn(qp[..., 0], qp[..., 1])
        base = 2 * ned + 2 * np.arange(mesh.num_triangles)
        coeffs[base] = np.einsum("tq,tq->t", wdet, vx)
        coeffs[base + 1] = np.einsum("tq,tq->t", wdet, vy)
    return FieldVector(coeffs, space)
