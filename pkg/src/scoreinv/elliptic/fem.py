"""Forward and adjoint solves for -div(exp(m) grad u) = f on the unit
square, pressure-driven top/bottom Dirichlet data and no-flow sides.

The reduced SPD system is factored once per (m, mesh) and shared by every
forward and adjoint solve of an objective evaluation.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .mesh import Mesh


class EllipticSystem:
    """Assembled operator for one coefficient field, with solve counters."""

    def __init__(self, mesh: Mesh, m: np.ndarray):
        m = np.asarray(m, dtype=float)
        if m.shape != (mesh.n_nodes,):
            raise ValueError(f"field length {m.shape} does not match mesh "
                             f"({mesh.n_nodes} nodes)")
        with np.errstate(over="ignore"):
            coeff_nodal = np.exp(m)
        if not np.all(np.isfinite(coeff_nodal)):
            bad = int(np.argmax(~np.isfinite(coeff_nodal)))
            raise ValueError(f"coefficient overflow: exp(m) not finite at node {bad}")
        self.mesh = mesh
        self.m = m.copy()
        # exp(m) evaluated at element centroids
        self.elem_coeff = np.exp(mesh.centroid_values(m))
        a_full = mesh.assemble_stiffness(self.elem_coeff)
        free, dirich = mesh.free_nodes, mesh.dirichlet_nodes
        self.a_ff = a_full[free][:, free].tocsc()
        self.a_fd = a_full[free][:, dirich].tocsr()
        self.lu = splu(self.a_ff)
        self.forward_solves = 0
        self.adjoint_solves = 0

    def _full_vector(self, free_values: np.ndarray, dirichlet_values: np.ndarray):
        out = np.empty(self.mesh.n_nodes)
        out[self.mesh.free_nodes] = free_values
        out[self.mesh.dirichlet_nodes] = dirichlet_values
        return out


def assemble(mesh: Mesh, m: np.ndarray) -> EllipticSystem:
    """Build and factor the reduced SPD system for coefficient exp(m)."""
    return EllipticSystem(mesh, m)


def volume_load(mesh: Mesh, f_nodal: np.ndarray) -> np.ndarray:
    """Load vector of a P1 volume forcing."""
    return mesh.mass @ np.asarray(f_nodal, dtype=float)


def neumann_load(mesh: Mesh, h) -> np.ndarray:
    """Boundary load of a flux h(x, y) on the left/right sides (1D P1 mass)."""
    load = np.zeros(mesh.n_nodes)
    for n1, n2 in mesh.neumann_edges:
        x1, y1 = mesh.nodes[n1]
        x2, y2 = mesh.nodes[n2]
        length = np.hypot(x2 - x1, y2 - y1)
        h1, h2 = h(x1, y1), h(x2, y2)
        load[n1] += length / 6.0 * (2 * h1 + h2)
        load[n2] += length / 6.0 * (h1 + 2 * h2)
    return load


def solve_forward(system: EllipticSystem, load: np.ndarray) -> np.ndarray:
    """State with exact Dirichlet values; load is an assembled vector."""
    mesh = system.mesh
    load = np.asarray(load, dtype=float)
    rhs = load[mesh.free_nodes] - system.a_fd @ mesh.dirichlet_values
    u_f = system.lu.solve(rhs)
    system.forward_solves += 1
    return system._full_vector(u_f, mesh.dirichlet_values)


def solve_adjoint(system: EllipticSystem, obs_op, obs_rhs: np.ndarray) -> np.ndarray:
    """Adjoint with homogeneous Dirichlet data: A p = -B* obs_rhs."""
    mesh = system.mesh
    rhs = -obs_op.adjoint(np.asarray(obs_rhs, dtype=float))[mesh.free_nodes]
    p_f = system.lu.solve(rhs)
    system.adjoint_solves += 1
    return system._full_vector(p_f, np.zeros(len(mesh.dirichlet_nodes)))


def save_field(mesh: Mesh, values: np.ndarray, path: str | Path) -> None:
    """Nodal field as a (ny+1)-row CSV grid with a JSON header sidecar."""
    path = Path(path)
    grid = np.asarray(values, dtype=float).reshape(mesh.ny + 1, mesh.nx + 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in grid:
            writer.writerow([f"{v:.17g}" for v in row])
    header = {"nx": mesh.nx, "ny": mesh.ny, "bbox": [0.0, 1.0, 0.0, 1.0]}
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(header, fh, indent=1)


def load_field(path: str | Path) -> tuple[Mesh, np.ndarray]:
    path = Path(path)
    with open(path.with_suffix(path.suffix + ".json")) as fh:
        header = json.load(fh)
    grid = np.loadtxt(path, delimiter=",", ndmin=2)
    mesh = Mesh(header["nx"], header["ny"])
    if grid.shape != (mesh.ny + 1, mesh.nx + 1):
        raise ValueError("field grid does not match its header dimensions")
    return mesh, grid.ravel()
