"""Uniform right-triangulated P1 mesh on the unit square.

Dirichlet boundary is the bottom (u=0) and top (u=1) edges including the
corners; the left/right edges between them are the no-flow (Neumann)
boundary. Each boundary node carries exactly one tag.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse


def _local_stiffness(verts: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """P1 stiffness of one triangle for coefficient tensor theta."""
    x, y = verts[:, 0], verts[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area = 0.5 * abs((x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]))
    grads = np.column_stack([b, c])  # (3, 2), times 1/(2A)
    return (grads @ theta @ grads.T) / (4.0 * area)


class Mesh:
    """nx-by-ny cells, two triangles per cell (diagonal lower-left to
    upper-right), nodes ordered row-major bottom to top."""

    def __init__(self, nx: int, ny: int | None = None):
        ny = nx if ny is None else ny
        if nx < 1 or ny < 1:
            raise ValueError("cell counts must be positive")
        self.nx, self.ny = nx, ny
        self.hx, self.hy = 1.0 / nx, 1.0 / ny

        ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="xy")
        self.nodes = np.column_stack([(ii * self.hx).ravel(), (jj * self.hy).ravel()])
        self.n_nodes = (nx + 1) * (ny + 1)

        def nid(i, j):
            return j * (nx + 1) + i

        lower, upper = [], []
        for j in range(ny):
            for i in range(nx):
                a, b = nid(i, j), nid(i + 1, j)
                c, d = nid(i + 1, j + 1), nid(i, j + 1)
                lower.append((a, b, c))
                upper.append((a, c, d))
        self.tri_lower = np.array(lower, dtype=np.int64)
        self.tri_upper = np.array(upper, dtype=np.int64)
        self.triangles = np.vstack([self.tri_lower, self.tri_upper])
        self.tri_area = 0.5 * self.hx * self.hy

        # reference geometry of the two congruent shapes
        self._verts_lower = np.array([[0.0, 0.0], [self.hx, 0.0], [self.hx, self.hy]])
        self._verts_upper = np.array([[0.0, 0.0], [self.hx, self.hy], [0.0, self.hy]])

        # boundary tags: Dirichlet wins at the corners
        i_all = np.arange(self.n_nodes) % (nx + 1)
        j_all = np.arange(self.n_nodes) // (nx + 1)
        bottom = np.where(j_all == 0)[0]
        top = np.where(j_all == ny)[0]
        self.dirichlet_nodes = np.concatenate([bottom, top])
        self.dirichlet_values = np.concatenate([np.zeros(len(bottom)), np.ones(len(top))])
        self.neumann_nodes = np.where(((i_all == 0) | (i_all == nx))
                                      & (j_all > 0) & (j_all < ny))[0]
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.dirichlet_nodes] = False
        self.free_nodes = np.where(mask)[0]

        # boundary edges of the Neumann sides, for flux loads
        left = [(nid(0, j), nid(0, j + 1)) for j in range(ny)]
        right = [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)]
        self.neumann_edges = np.array(left + right, dtype=np.int64)

        self._mass = None
        self._scatter_rows = None
        self._scatter_cols = None

    def local_stiffness(self, theta: np.ndarray | None = None):
        """Local stiffness matrices (lower, upper) for a coefficient tensor."""
        theta = np.eye(2) if theta is None else np.asarray(theta, dtype=float)
        return (_local_stiffness(self._verts_lower, theta),
                _local_stiffness(self._verts_upper, theta))

    @property
    def assembly_indices(self):
        """(rows, cols) COO indices for 9 entries per triangle."""
        if self._scatter_rows is None:
            tri = self.triangles
            self._scatter_rows = np.repeat(tri, 3, axis=1).ravel()
            self._scatter_cols = np.tile(tri, (1, 3)).ravel()
        return self._scatter_rows, self._scatter_cols

    def assemble_stiffness(self, elem_coeff=None, theta=None) -> sparse.csr_matrix:
        """Global stiffness with an optional per-element scalar coefficient."""
        k_lo, k_up = self.local_stiffness(theta)
        ntri_half = len(self.tri_lower)
        vals = np.concatenate([
            np.tile(k_lo.ravel(), ntri_half).reshape(ntri_half, 9),
            np.tile(k_up.ravel(), ntri_half).reshape(ntri_half, 9),
        ])
        if elem_coeff is not None:
            vals = vals * np.asarray(elem_coeff, dtype=float)[:, None]
        rows, cols = self.assembly_indices
        a = sparse.coo_matrix((vals.ravel(), (rows, cols)),
                              shape=(self.n_nodes, self.n_nodes))
        return a.tocsr()

    @property
    def mass(self) -> sparse.csr_matrix:
        """Consistent P1 mass matrix."""
        if self._mass is None:
            m_loc = self.tri_area / 12.0 * np.array([[2.0, 1, 1], [1, 2, 1], [1, 1, 2]])
            ntri = len(self.triangles)
            vals = np.tile(m_loc.ravel(), ntri)
            rows, cols = self.assembly_indices
            self._mass = sparse.coo_matrix(
                (vals, (rows, cols)), shape=(self.n_nodes, self.n_nodes)).tocsr()
        return self._mass

    @property
    def lumped_mass(self) -> np.ndarray:
        return np.asarray(self.mass.sum(axis=1)).ravel()

    def centroid_values(self, nodal: np.ndarray) -> np.ndarray:
        """Per-triangle centroid value of a P1 nodal field."""
        return np.mean(np.asarray(nodal, dtype=float)[self.triangles], axis=1)
