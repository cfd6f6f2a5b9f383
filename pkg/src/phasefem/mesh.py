"""Uniform periodic triangulations of the unit square (torus topology).

Every grid cell of an n-by-n subdivision is split along its bottom-left to
top-right diagonal.  Periodic identification happens at the mesh level: each
torus point is stored once, and triangles crossing the seam carry per-corner
wrap offsets so that physical coordinates are always reconstructable.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class InvalidMeshError(ValueError):
    """Raised when a periodic mesh cannot be built from the given size."""


@dataclass(frozen=True)
class Mesh:
    """Periodic triangulation of (0,1)^2 with n subdivisions per side.

    Attributes
    ----------
    n : int
        Subdivisions per side; the mesh has n^2 vertices, 3n^2 edges and
        2n^2 triangles.
    vertices : (n^2, 2) float array
        Representative coordinates of the periodic vertices.
    triangles : (2n^2, 3) int array
        Vertex indices, counterclockwise.
    edges : (3n^2, 2) int array
        (tail, head) vertex indices in structural direction.  Edge 3c+0 is
        the horizontal, 3c+1 the vertical and 3c+2 the diagonal edge leaving
        the bottom-left corner of cell c.
    edge_delta : (3n^2, 2) float array
        Physical vector head - tail for each edge (structural direction).
    edge_flip : (3n^2,) bool array
        True where the canonical direction (lower to higher vertex index)
        reverses the structural one.
    triangle_to_edges : (2n^2, 3) int array
        Edge ids of local edges k: (k, k+1 mod 3) in local vertices.
    edge_signs : (2n^2, 3) int array
        +1 where the local traversal matches the canonical edge direction.
    shift_tags : (2n^2, 3, 2) int array
        Periodic wrap offsets in {-1,0,+1}^2 per triangle corner; physical
        corner = vertices[triangles] + shift_tags.
    corner_coords : (2n^2, 3, 2) float array
        Unwrapped physical corner coordinates.
    edge_tri : (3n^2, 2) int array
        The two triangles incident to each edge.
    edge_tri_local : (3n^2, 2) int array
        Local edge index of the edge within each incident triangle.
    """

    n: int
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_delta: np.ndarray
    edge_flip: np.ndarray
    triangle_to_edges: np.ndarray
    edge_signs: np.ndarray
    shift_tags: np.ndarray
    corner_coords: np.ndarray
    edge_tri: np.ndarray
    edge_tri_local: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        return self.n * self.n

    @property
    def num_edges(self) -> int:
        return 3 * self.n * self.n

    @property
    def num_triangles(self) -> int:
        return 2 * self.n * self.n

    @property
    def h_max(self) -> float:
        """Longest edge length (the cell diagonal)."""
        return np.sqrt(2.0) / self.n


def build_periodic_unit_square(n: int) -> Mesh:
    """Build the uniform periodic triangulation with n subdivisions per side.

    Requires n >= 2; n = 1 would identify an edge with itself.
    """
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise InvalidMeshError(f"mesh size must be an integer, got {n!r}")
    if n < 2:
        raise InvalidMeshError(f"mesh size must be at least 2, got {n}")
    n = int(n)
    h = 1.0 / n

    # Vertex v = j*n + i sits at (i/n, j/n); cell c = j*n + i has its
    # bottom-left corner at vertex c.
    idx = np.arange(n * n)
    verts = np.column_stack([(idx % n) * h, (idx // n) * h]).astype(float)

    cells = idx
    ii = cells % n
    jj = cells // n
    ip = (ii + 1) % n
    jp = (jj + 1) % n
    wx = (ii + 1 == n).astype(np.int64)  # wraps in x
    wy = (jj + 1 == n).astype(np.int64)  # wraps in y

    v00 = jj * n + ii
    v10 = jj * n + ip
    v11 = jp * n + ip
    v01 = jp * n + ii

    ntri = 2 * n * n
    tris = np.empty((ntri, 3), dtype=np.int64)
    tris[0::2] = np.column_stack([v00, v10, v11])  # lower triangle
    tris[1::2] = np.column_stack([v00, v11, v01])  # upper triangle

    zero = np.zeros_like(wx)
    shifts = np.empty((ntri, 3, 2), dtype=np.int64)
    shifts[0::2, 0] = np.column_stack([zero, zero])
    shifts[0::2, 1] = np.column_stack([wx, zero])
    shifts[0::2, 2] = np.column_stack([wx, wy])
    shifts[1::2, 0] = np.column_stack([zero, zero])
    shifts[1::2, 1] = np.column_stack([wx, wy])
    shifts[1::2, 2] = np.column_stack([zero, wy])

    # Structural edges per cell: 3c+0 horizontal, 3c+1 vertical, 3c+2 diagonal.
    nedg = 3 * n * n
    edges = np.empty((nedg, 2), dtype=np.int64)
    edges[3 * cells + 0] = np.column_stack([v00, v10])
    edges[3 * cells + 1] = np.column_stack([v00, v01])
    edges[3 * cells + 2] = np.column_stack([v00, v11])
    edge_delta = np.empty((nedg, 2), dtype=float)
    edge_delta[3 * cells + 0] = (h, 0.0)
    edge_delta[3 * cells + 1] = (0.0, h)
    edge_delta[3 * cells + 2] = (h, h)
    edge_flip = edges[:, 0] > edges[:, 1]

    cell_right = jj * n + ip  # cell (i+1, j)
    cell_up = jp * n + ii     # cell (i, j+1)
    t2e = np.empty((ntri, 3), dtype=np.int64)
    s_struct = np.empty((ntri, 3), dtype=np.int64)
    t2e[0::2] = np.column_stack([3 * cells + 0, 3 * cell_right + 1, 3 * cells + 2])
    s_struct[0::2] = (1, 1, -1)
    t2e[1::2] = np.column_stack([3 * cells + 2, 3 * cell_up + 0, 3 * cells + 1])
    s_struct[1::2] = (1, -1, -1)
    signs = s_struct * np.where(edge_flip[t2e], -1, 1)

    corner = verts[tris] + shifts

    # Invert triangle_to_edges: each edge has exactly two incidences.
    tri_ids = np.repeat(np.arange(ntri), 3)
    loc_ids = np.tile(np.arange(3), ntri)
    eids = t2e.ravel()
    order = np.argsort(eids, kind="stable")
    if not np.array_equal(eids[order].reshape(nedg, 2), np.repeat(np.arange(nedg), 2).reshape(nedg, 2)):
        raise InvalidMeshError("internal error: edge incidence count != 2")
    edge_tri = tri_ids[order].reshape(nedg, 2)
    edge_tri_local = loc_ids[order].reshape(nedg, 2)

    return Mesh(
        n=n,
        vertices=verts,
        triangles=tris,
        edges=edges,
        edge_delta=edge_delta,
        edge_flip=edge_flip,
        triangle_to_edges=t2e,
        edge_signs=signs,
        shift_tags=shifts,
        corner_coords=corner,
        edge_tri=edge_tri,
        edge_tri_local=edge_tri_local,
    )


def triangle_geometry(mesh: Mesh, t: int):
    """Return (corners, signed area, Jacobian) of triangle t.

    corners is the (3, 2) array of unwrapped physical coordinates, the
    Jacobian J maps reference coordinates to physical ones (columns are the
    two edge vectors leaving corner 0) and det(J) = 2 * area.
    """
    if not 0 <= t < mesh.num_triangles:
        raise IndexError(f"triangle index {t} out of range [0, {mesh.num_triangles})")
    corners = mesh.corner_coords[t]
    jac = np.column_stack([corners[1] - corners[0], corners[2] - corners[0]])
    area = 0.5 * float(np.linalg.det(jac))
    return corners, area, jac


def all_jacobians(mesh: Mesh):
    """Stacked Jacobians, determinants and inverse-transposes per triangle.

    Cached on the mesh; returns (jac (T,2,2), det (T,), jinv_t (T,2,2)) where
    jinv_t[t] = inv(jac[t]).T maps reference to physical gradients.
    """
    key = "jacobians"
    if key not in mesh._cache:
        c = mesh.corner_coords
        jac = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]], axis=-1)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv /= det[:, None, None]
        jinv_t = np.transpose(inv, (0, 2, 1))
        mesh._cache[key] = (jac, det, jinv_t)
    return mesh._cache[key]
