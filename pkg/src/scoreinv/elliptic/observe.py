"""Pointwise observation of the pressure field by P1 interpolation."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from ..stochastic import rng_stream
from .fem import assemble, solve_forward, volume_load
from .mesh import Mesh


def lattice_points(k: int) -> np.ndarray:
    """k-by-k uniform lattice strictly inside the unit square."""
    xs = np.arange(1, k + 1) / (k + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    return np.column_stack([xx.ravel(), yy.ravel()])


class ObservationOperator:
    """Sparse M-by-N interpolation matrix; rows are barycentric weights."""

    def __init__(self, mesh: Mesh, points: np.ndarray):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != 2:
            raise ValueError("observation points must be (M, 2)")
        if np.any(points <= 0.0) or np.any(points >= 1.0):
            raise ValueError("observation points must lie in the open unit square")
        self.mesh = mesh
        self.points = points
        rows, cols, vals = [], [], []
        for k, (x, y) in enumerate(points):
            i = min(int(x / mesh.hx), mesh.nx - 1)
            j = min(int(y / mesh.hy), mesh.ny - 1)
            xl, yl = x - i * mesh.hx, y - j * mesh.hy
            cell = j * mesh.nx + i
            if xl / mesh.hx >= yl / mesh.hy:  # below the cell diagonal
                tri = mesh.tri_lower[cell]
            else:
                tri = mesh.tri_upper[cell]
            verts = mesh.nodes[tri]
            mat = np.vstack([np.ones(3), verts.T])
            w = np.linalg.solve(mat, np.array([1.0, x, y]))
            w = np.clip(w, 0.0, None)
            w /= w.sum()
            rows.extend([k] * 3)
            cols.extend(tri.tolist())
            vals.extend(w.tolist())
        self.b = sparse.csr_matrix((vals, (rows, cols)),
                                   shape=(len(points), mesh.n_nodes))

    @property
    def n_points(self) -> int:
        return self.b.shape[0]

    def observe(self, u: np.ndarray) -> np.ndarray:
        return self.b @ np.asarray(u, dtype=float)

    def adjoint(self, w: np.ndarray) -> np.ndarray:
        return self.b.T @ np.asarray(w, dtype=float)


def make_observations(mesh: Mesh, obs_op: ObservationOperator, m_true: np.ndarray,
                      truth_forcing: np.ndarray, noise_sigma: float,
                      seed: int) -> np.ndarray:
    """d_obs = B u(m_true; forcing) + N(0, sigma^2 I) noise."""
    if noise_sigma < 0:
        raise ValueError("noise sigma must be nonnegative")
    system = assemble(mesh, m_true)
    u = solve_forward(system, volume_load(mesh, truth_forcing))
    d = obs_op.observe(u)
    if noise_sigma > 0:
        d = d + noise_sigma * rng_stream(seed, 0).standard_normal(len(d))
    return d
