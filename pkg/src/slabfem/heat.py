"""Slab assembly and time marching for transient heat conduction.

Each slab solves: find T such that for all test functions w

    int_Q w dT/dt + int_Q alpha grad_x(w) . grad_x(T)
        + int_{Omega_n} w (T+ - T-)  =  int_{Gamma_N} w q

with the diffusion term integrated by parts and the prescribed flux q on
the lateral space-time boundary. The jump integral contributes a spatial
mass matrix on the slab-bottom block (acting on the unknown T+) and the
same mass applied to the carried trace on the right-hand side (T-).

Marching supports two jump treatments. classical: the slab geometry is
reused unchanged and the trace pairs with the bottom nodes through the
shared spatial ordering. flipped: the slab is time-mirrored before every
step after the first, so the nodes that carried the previous top values
sit at the new bottom with unchanged indices and the pairing is the
identity; the trace for the next step is read from the post-flip top list.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elements as el
from .mesh import SlabInterval, SpaceTimeSlab, flip_time

JumpMode = Literal["classical", "flipped"]

DIRECT_SOLVE_LIMIT = 200_000
_ASSEMBLY_CHUNK = 25_000


class SolverError(RuntimeError):
    pass


@dataclass
class MaterialParams:
    """alpha = kappa/(rho c_p); zero is allowed for pure-transport reuse."""

    alpha: float

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError(f"thermal diffusivity must be >= 0, got {self.alpha}")


@dataclass
class BoundaryCondition:
    kind: Literal["dirichlet", "neumann_flux", "adiabatic"]
    value: float = 0.0


def dirichlet(value: float) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", value)


def neumann_flux(q: float) -> BoundaryCondition:
    return BoundaryCondition("neumann_flux", q)


def adiabatic() -> BoundaryCondition:
    return BoundaryCondition("adiabatic")


@dataclass
class SlabTrace:
    """Interface values carried between slabs, in spatial node order."""

    values: np.ndarray
    node_order: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.node_order = np.asarray(self.node_order, dtype=int)
        if self.values.shape != self.node_order.shape:
            raise ValueError("trace values and node_order lengths differ")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trace contains non-finite values")

    @classmethod
    def constant(cls, value: float, n_spatial: int) -> "SlabTrace":
        return cls(np.full(n_spatial, float(value)), np.arange(n_spatial))


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: np.ndarray


def _volume_parts(slab, interval, material, ref, source=0.0):
    """Volume operator (time derivative + diffusion) and source load, in COO parts."""
    conn = slab.elements
    ne, npe = conn.shape
    d = slab.spatial_dim
    rows, cols, vals = [], [], []
    b = np.zeros(slab.n_nodes)
    for start in range(0, ne, _ASSEMBLY_CHUNK):
        idx = np.arange(start, min(start + _ASSEMBLY_CHUNK, ne))
        grad, w, _ = el.map_elements(slab, interval, ref, elements=idx)
        gs = grad[:, :, :, :d]
        gt = grad[:, :, :, d]
        ae = np.einsum("eq,qi,eqj->eij", w, ref.shape, gt, optimize=True)
        ae += material.alpha * np.einsum("eq,eqid,eqjd->eij", w, gs, gs, optimize=True)
        c = conn[idx]
        rows.append(np.repeat(c[:, :, None], npe, axis=2).ravel())
        cols.append(np.repeat(c[:, None, :], npe, axis=1).ravel())
        vals.append(ae.ravel())
        if source != 0.0:
            be = source * np.einsum("eq,qi->ei", w, ref.shape)
            np.add.at(b, c.ravel(), be.ravel())
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), b


def _facets_by_tag(slab):
    groups: dict[str, list] = {}
    for f in slab.boundary_facets:
        groups.setdefault(f[2], []).append(f)
    return groups


def assemble_jump_matrix(slab, interval, quad_order: int = 2) -> sp.csr_matrix:
    """Spatial mass matrix of the slab-bottom interface, scattered to slab DOFs.

    This is the jump-term block: symmetric positive definite, independent
    of the step size (the interface lies in a constant-time plane).
    """
    facets = [f for f in slab.boundary_facets if f[2] == "slab_bottom"]
    rows, cols, vals = [], [], []
    for nodes, _load, mass in el.facet_integrals(slab, interval, facets, quad_order):
        k = nodes.shape[0]
        rows.append(np.repeat(nodes, k))
        cols.append(np.tile(nodes, k))
        vals.append(mass.ravel())
    n = slab.n_nodes
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()


def assemble_boundary_loads(slab, interval, bcs, quad_order: int = 2) -> np.ndarray:
    """Neumann flux integrated over the lateral space-time facets."""
    groups = _facets_by_tag(slab)
    known = set(groups) | {"slab_bottom", "slab_top"}
    for tag in bcs:
        if tag not in known:
            raise ValueError(f"unknown boundary tag {tag!r}; mesh has {sorted(groups)}")
    b = np.zeros(slab.n_nodes)
    for tag, bc in bcs.items():
        if bc.kind != "neumann_flux" or tag in ("slab_bottom", "slab_top"):
            continue
        for nodes, load, _mass in el.facet_integrals(slab, interval, groups[tag], quad_order):
            b[nodes] += bc.value * load
    return b


def _dirichlet_nodes(slab, bcs):
    groups = _facets_by_tag(slab)
    faces = el.FACES[slab.kind]
    out: dict[int, float] = {}
    for tag, bc in bcs.items():
        if bc.kind != "dirichlet":
            continue
        for e, f, _tag in groups.get(tag, []):
            for n in slab.elements[e][list(faces[f])]:
                out[int(n)] = bc.value
    return out


def trace_vector(slab, trace: SlabTrace) -> np.ndarray:
    """Scatter trace values onto the slab-bottom DOFs of the full vector."""
    if trace.values.shape[0] != slab.n_spatial_nodes:
        raise ValueError(
            f"trace has {trace.values.shape[0]} values for "
            f"{slab.n_spatial_nodes} interface nodes"
        )
    z = np.zeros(slab.n_nodes)
    z[slab.bottom_nodes[trace.node_order]] = trace.values
    return z


def assemble_slab(
    slab: SpaceTimeSlab,
    interval: SlabInterval,
    material: MaterialParams,
    bcs: dict[str, BoundaryCondition],
    trace: SlabTrace,
    jump_mode: JumpMode = "flipped",
    source: float = 0.0,
    quad_order: int = 2,
) -> SparseSystem:
    """Assemble the full slab system for one step.

    ``trace`` carries T- (the previous top values, or the initial condition
    for the first slab) in spatial node order. Assembly itself is identical
    for both jump modes: the mode governs how the caller positions the slab,
    and the bottom-node index list keeps the pairing aligned either way.
    """
    if trace is None:
        raise ValueError("missing interface trace (initial condition or previous top values)")
    if jump_mode not in ("classical", "flipped"):
        raise ValueError(f"unknown jump_mode {jump_mode!r}")
    ref = el.reference_element(slab.kind, quad_order)
    rows, cols, vals, b = _volume_parts(slab, interval, material, ref, source)
    n = slab.n_nodes
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    jump = assemble_jump_matrix(slab, interval, quad_order)
    matrix = matrix + jump
    b += assemble_boundary_loads(slab, interval, bcs, quad_order)
    b += jump @ trace_vector(slab, trace)

    fixed = _dirichlet_nodes(slab, bcs)
    if fixed:
        idx = np.fromiter(fixed.keys(), dtype=int)
        matrix = matrix.tolil()
        matrix[idx, :] = 0.0
        matrix[idx, idx] = 1.0
        matrix = matrix.tocsr()
        b[idx] = np.fromiter(fixed.values(), dtype=float)
    return SparseSystem(matrix=matrix, rhs=b, dof_map=np.arange(n))


def _relative_residual(matrix, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - matrix @ x)
    return r / nb if nb > 0 else r


def solve_system(
    system: SparseSystem,
    tol: float = 1e-12,
    max_iter: int = 5000,
    method: Literal["auto", "direct", "iterative"] = "auto",
) -> np.ndarray:
    """Solve the assembled system to a relative residual of tol.

    Direct sparse factorization below DIRECT_SOLVE_LIMIT unknowns;
    ILU-preconditioned BiCGSTAB above (the space-time operator is
    nonsymmetric), with a direct fallback if the iteration stalls.
    """
    matrix, b = system.matrix, system.rhs
    n = b.shape[0]
    if method == "auto":
        method = "direct" if n < DIRECT_SOLVE_LIMIT else "iterative"

    if method == "iterative":
        x = _solve_iterative(matrix, b, tol, max_iter)
        if x is not None and _relative_residual(matrix, x, b) <= tol:
            return x
        warnings.warn("iterative solve did not reach tolerance; falling back to direct")

    try:
        lu = spla.splu(matrix.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    x = lu.solve(b)
    res = _relative_residual(matrix, x, b)
    if not np.isfinite(res) or res > max(tol, 1e-10):
        raise SolverError(f"direct solve residual {res:.3e} exceeds tolerance {tol:.1e}")
    return x


def _solve_iterative(matrix, b, tol, max_iter):
    try:
        ilu = spla.spilu(matrix.tocsc(), drop_tol=1e-5, fill_factor=10.0)
    except RuntimeError:
        return None
    precond = spla.LinearOperator(matrix.shape, ilu.solve)
    try:
        x, info = spla.bicgstab(matrix, b, rtol=tol, atol=0.0, maxiter=max_iter, M=precond)
    except TypeError:  # scipy < 1.12 spells the kwarg 'tol'
        x, info = spla.bicgstab(matrix, b, tol=tol, atol=0.0, maxiter=max_iter, M=precond)
    return x if info == 0 else None


@dataclass
class MarchState:
    """Mutable marching state: current slab geometry, carried trace, step count."""

    slab: SpaceTimeSlab
    trace: SlabTrace
    jump_mode: JumpMode
    step_index: int = 0


def advance(
    state: MarchState,
    interval: SlabInterval,
    material: MaterialParams,
    bcs: dict[str, BoundaryCondition],
    source: float = 0.0,
    tol: float = 1e-12,
    quad_order: int = 2,
):
    """One slab solve; returns (solution vector, next MarchState).

    In flipped mode the slab is time-mirrored before assembly on every step
    after the first. The next trace is read off the current top-node index
    list, which both modes keep in spatial node order.
    """
    slab = state.slab
    if state.jump_mode == "flipped" and state.step_index > 0:
        slab = flip_time(slab)
    system = assemble_slab(slab, interval, material, bcs, state.trace,
                           state.jump_mode, source, quad_order)
    sol = solve_system(system, tol)
    trace = SlabTrace(sol[slab.top_nodes].copy(), state.trace.node_order.copy())
    return sol, MarchState(slab, trace, state.jump_mode, state.step_index + 1)


@dataclass
class HeatCase:
    """Everything march needs for a fixed-geometry transient run."""

    slab: SpaceTimeSlab
    dt: float
    material: MaterialParams
    bcs: dict[str, BoundaryCondition]
    jump_mode: JumpMode = "flipped"
    initial: SlabTrace | None = None
    source: float = 0.0
    tol: float = 1e-12
    quad_order: int = 2

    def __post_init__(self):
        if self.initial is None:
            self.initial = SlabTrace.constant(0.0, self.slab.n_spatial_nodes)


@dataclass
class MarchResult:
    traces: list[SlabTrace]      # traces[k] holds the solution at physical time k*dt
    final_solution: np.ndarray
    final_slab: SpaceTimeSlab
    final_interval: SlabInterval
    layer_dt: float


def march(case: HeatCase, n_steps: int) -> MarchResult:
    """March n_steps slabs of size case.dt, reusing the factorization.

    With stationary geometry the slab matrix is identical on every step of
    the same flip parity, so one factorization per parity serves the whole
    march; only the jump right-hand side changes with the carried trace.
    """
    if n_steps < 1:
        raise ValueError(f"march needs n_steps >= 1, got {n_steps}")
    slab = case.slab
    trace = case.initial
    traces = [trace]
    cache: dict[int, tuple] = {}
    sol = None
    interval = None
    for k in range(n_steps):
        if case.jump_mode == "flipped" and k > 0:
            slab = flip_time(slab)
        interval = SlabInterval(k * case.dt, (k + 1) * case.dt)
        parity = k % 2 if case.jump_mode == "flipped" else 0
        if parity not in cache:
            cache[parity] = _step_operator(slab, interval, case)
        matrix, lu, jump, b_base, fixed, cached_slab = cache[parity]
        rhs = b_base + jump @ trace_vector(cached_slab, trace)
        if fixed:
            rhs[np.fromiter(fixed.keys(), dtype=int)] = np.fromiter(fixed.values(), dtype=float)
        if lu is not None:
            sol = lu.solve(rhs)
            res = _relative_residual(matrix, sol, rhs)
            if not np.isfinite(res) or res > max(case.tol, 1e-10):
                raise SolverError(f"step {k}: direct solve residual {res:.3e}")
        else:
            sol = solve_system(SparseSystem(matrix, rhs, np.arange(rhs.shape[0])), case.tol)
        trace = SlabTrace(sol[slab.top_nodes].copy(), trace.node_order.copy())
        traces.append(trace)
    layer_dt = case.dt / case.slab.time_layers
    return MarchResult(traces, sol, slab, interval, layer_dt)


def _step_operator(slab, interval, case: HeatCase):
    """Assemble the step-invariant pieces of the slab system for one flip parity."""
    ref = el.reference_element(slab.kind, case.quad_order)
    rows, cols, vals, b_src = _volume_parts(slab, interval, case.material, ref, case.source)
    n = slab.n_nodes
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    jump = assemble_jump_matrix(slab, interval, case.quad_order)
    matrix = matrix + jump
    b_base = b_src + assemble_boundary_loads(slab, interval, case.bcs, case.quad_order)
    fixed = _dirichlet_nodes(slab, case.bcs)
    if fixed:
        idx = np.fromiter(fixed.keys(), dtype=int)
        matrix = matrix.tolil()
        matrix[idx, :] = 0.0
        matrix[idx, idx] = 1.0
        matrix = matrix.tocsr()
    lu = spla.splu(matrix.tocsc()) if n < DIRECT_SOLVE_LIMIT else None
    return matrix, lu, jump, b_base, fixed, slab
