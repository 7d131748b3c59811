"""Semi-discrete reference solvers: spatial FEM plus a one-step theta scheme.

theta = 1.0 is implicit Euler, theta = 0.5 is Crank-Nicolson. The stored
stiffness is pre-scaled by the thermal diffusivity, so one operator serves
both schemes without re-threading material data through every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elements as el
from .heat import BoundaryCondition, MaterialParams, SolverError
from .mesh import SpatialMesh, _SPATIAL_FACES

_KIND = {1: "line2", 2: "quad4"}


@dataclass
class SemiDiscreteOperator:
    """Spatial mass M, diffusivity-scaled stiffness K, and Neumann load f."""

    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    load: np.ndarray

    @property
    def n(self) -> int:
        return self.load.shape[0]


def assemble_spatial(mesh: SpatialMesh, material: MaterialParams,
                     bcs: dict[str, BoundaryCondition], quad_order: int = 2) -> SemiDiscreteOperator:
    """Standard FE mass/stiffness on the spatial mesh with Neumann loads."""
    kind = _KIND[mesh.dim]
    ref = el.reference_element(kind, quad_order)
    conn = mesh.elements
    npe = conn.shape[1]
    grad, w, _ = el.map_isoparametric(mesh.nodes[conn], ref)
    me = np.einsum("eq,qi,qj->eij", w, ref.shape, ref.shape, optimize=True)
    ke = material.alpha * np.einsum("eq,eqid,eqjd->eij", w, grad, grad, optimize=True)
    rows = np.repeat(conn[:, :, None], npe, axis=2).ravel()
    cols = np.repeat(conn[:, None, :], npe, axis=1).ravel()
    n = mesh.n_nodes
    mass = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    stiff = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    tags = {f[2] for f in mesh.boundary_facets}
    for tag, bc in bcs.items():
        if tag not in tags:
            raise ValueError(f"unknown boundary tag {tag!r}; mesh has {sorted(tags)}")
        if bc.kind == "dirichlet":
            raise NotImplementedError("semi-discrete path supports Neumann/adiabatic only")
    f = np.zeros(n)
    faces = _SPATIAL_FACES[mesh.dim]
    for e, face, tag in mesh.boundary_facets:
        bc = bcs.get(tag)
        if bc is None or bc.kind != "neumann_flux":
            continue
        nodes = conn[e][list(faces[face])]
        if mesh.dim == 1:  # facet is a point: the load is just the flux value
            f[nodes[0]] += bc.value
        else:
            pts, wq = el.gauss_points(1, quad_order)
            nvals = el.shape_values("line2", pts)
            edge = mesh.nodes[nodes]
            length = float(np.linalg.norm(edge[1] - edge[0]))
            f[nodes] += bc.value * (length / 2.0) * (wq @ nvals)
    return SemiDiscreteOperator(mass, stiff, f)


def step_theta(op: SemiDiscreteOperator, t_n: np.ndarray, dt: float, theta: float) -> np.ndarray:
    """One theta-scheme step: (M + theta dt K) T' = (M - (1-theta) dt K) T + dt f."""
    if theta not in (1.0, 0.5):
        raise ValueError(f"theta must be 1.0 (implicit Euler) or 0.5 (Crank-Nicolson), got {theta}")
    lhs = (op.mass + theta * dt * op.stiffness).tocsc()
    rhs = (op.mass - (1.0 - theta) * dt * op.stiffness) @ t_n + dt * op.load
    try:
        return spla.splu(lhs).solve(rhs)
    except RuntimeError as exc:
        raise SolverError(f"theta-scheme factorization failed: {exc}") from exc


def march_theta(op: SemiDiscreteOperator, t0: np.ndarray, dt: float,
                n_steps: int, theta: float) -> np.ndarray:
    """March n_steps with one cached factorization of the constant operator."""
    if theta not in (1.0, 0.5):
        raise ValueError(f"theta must be 1.0 or 0.5, got {theta}")
    if n_steps < 1:
        raise ValueError(f"march_theta needs n_steps >= 1, got {n_steps}")
    lhs = (op.mass + theta * dt * op.stiffness).tocsc()
    explicit = op.mass - (1.0 - theta) * dt * op.stiffness
    lu = spla.splu(lhs)
    t = np.asarray(t0, dtype=float).copy()
    for _ in range(n_steps):
        t = lu.solve(explicit @ t + dt * op.load)
    return t
