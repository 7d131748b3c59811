"""Structured spatial meshes, space-time slab extrusion, and the time flip.

Slab node ordering is bottom layer first, then layer by layer ascending in
time, with the identical spatial ordering inside each layer. The flip then
never has to touch connectivity: it mirrors the time coordinates and swaps
the bottom/top index lists, so the degrees of freedom that carried the
previous top trace end up at the new slab bottom with unchanged indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import elements as el

Facet = tuple[int, int, str]

# lateral face of the extruded element corresponding to a spatial facet
_LIFT_1D = {0: 3, 1: 1}                  # segment endpoint -> quad edge
_LIFT_2D = {0: 2, 1: 3, 2: 4, 3: 5}      # quad edge -> hex face
_TOP_FACE = {"quad4": 2, "hex8": 1}
_BOTTOM_FACE = {"quad4": 0, "hex8": 0}

_SPATIAL_FACES = {
    1: ((0,), (1,)),
    2: el.QUAD4_FACES,
}


@dataclass
class SpatialMesh:
    """Structured line or quadrilateral mesh with tagged boundary facets."""

    dim: int
    nodes: np.ndarray       # (n, dim)
    elements: np.ndarray    # (ne, 2) segments or (ne, 4) quads
    boundary_facets: list[Facet] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]


@dataclass
class SlabInterval:
    """Physical time interval [t_n, t_n1] one slab is mapped onto."""

    t_n: float
    t_n1: float

    def __post_init__(self):
        if not self.t_n1 > self.t_n:
            raise ValueError(f"slab interval needs t_n1 > t_n, got [{self.t_n}, {self.t_n1}]")

    @property
    def dt(self) -> float:
        return self.t_n1 - self.t_n


@dataclass
class SpaceTimeSlab:
    """One space-time slab: a spatial mesh extruded over normalized time."""

    spatial_dim: int
    nodes: np.ndarray          # (n, spatial_dim + 1), last column normalized time
    elements: np.ndarray       # (ne, 4) quads or (ne, 8) hexes
    time_layers: int
    bottom_nodes: np.ndarray   # spatial-ordered node ids at t = t_min
    top_nodes: np.ndarray      # spatial-ordered node ids at t = t_max
    boundary_facets: list[Facet]
    t_min: float = 0.0
    t_max: float = 1.0

    @property
    def kind(self) -> str:
        return "quad4" if self.spatial_dim == 1 else "hex8"

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_spatial_nodes(self) -> int:
        return self.bottom_nodes.shape[0]


def _boundary_facets(elements: np.ndarray, dim: int) -> list[tuple[int, int]]:
    """Facets of a spatial mesh that occur exactly once (exterior)."""
    faces = _SPATIAL_FACES[dim]
    seen: dict[tuple, tuple[int, int]] = {}
    count: dict[tuple, int] = {}
    for e, conn in enumerate(elements):
        for f, face in enumerate(faces):
            key = tuple(sorted(conn[list(face)]))
            count[key] = count.get(key, 0) + 1
            seen.setdefault(key, (e, f))
    return [seen[k] for k in seen if count[k] == 1]


def _tag_spatial_facets(nodes: np.ndarray, elements: np.ndarray, dim: int) -> list[Facet]:
    """Axis-aligned geometric tags: left/right and, in 2D, space_bottom/space_top."""
    lo = nodes.min(axis=0)
    hi = nodes.max(axis=0)
    tol = 1e-9 * max(float(np.max(hi - lo)), 1.0)
    faces = _SPATIAL_FACES[dim]
    tagged = []
    for e, f in _boundary_facets(elements, dim):
        centroid = nodes[elements[e][list(faces[f])]].mean(axis=0)
        if abs(centroid[0] - lo[0]) <= tol:
            tag = "left"
        elif abs(centroid[0] - hi[0]) <= tol:
            tag = "right"
        elif dim > 1 and abs(centroid[1] - lo[1]) <= tol:
            tag = "space_bottom"
        elif dim > 1 and abs(centroid[1] - hi[1]) <= tol:
            tag = "space_top"
        else:
            tag = "boundary"
        tagged.append((e, f, tag))
    return tagged


def line_mesh(length: float, nx: int, origin: float = 0.0) -> SpatialMesh:
    """Uniform 1D mesh of nx segments on [origin, origin + length]."""
    if nx < 1 or length <= 0:
        raise ValueError("line_mesh needs nx >= 1 and length > 0")
    nodes = (origin + np.linspace(0.0, length, nx + 1))[:, None]
    conn = np.stack([np.arange(nx), np.arange(1, nx + 1)], axis=1)
    return SpatialMesh(1, nodes, conn, _tag_spatial_facets(nodes, conn, 1))


def rect_mesh(length: float, width: float, nx: int, ny: int,
              origin=(0.0, 0.0)) -> SpatialMesh:
    """Structured quad mesh of nx*ny elements, x running fastest in node order."""
    if nx < 1 or ny < 1 or length <= 0 or width <= 0:
        raise ValueError("rect_mesh needs positive sizes and counts")
    x = origin[0] + np.linspace(0.0, length, nx + 1)
    y = origin[1] + np.linspace(0.0, width, ny + 1)
    xv, yv = np.meshgrid(x, y)  # row-major: node id = j*(nx+1) + i
    nodes = np.stack([xv.ravel(), yv.ravel()], axis=1)

    i = np.arange(nx)
    j = np.arange(ny)
    ii, jj = np.meshgrid(i, j)
    n0 = (jj * (nx + 1) + ii).ravel()
    conn = np.stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1], axis=1)
    return SpatialMesh(2, nodes, conn, _tag_spatial_facets(nodes, conn, 2))


def extrude(spatial_nodes, spatial_elements, time_layers: int) -> SpaceTimeSlab:
    """Extend a spatial mesh in the time direction into one slab.

    Layer interfaces sit at k/time_layers for k = 0..time_layers; segments
    become quads, quads become hexes. Lateral boundary facets inherit
    axis-aligned geometric tags, the constant-time faces are tagged
    slab_bottom/slab_top.
    """
    nodes = np.asarray(spatial_nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    conn = np.asarray(spatial_elements, dtype=int)
    if nodes.size == 0 or conn.size == 0:
        raise ValueError("extrude needs a non-empty spatial mesh")
    if time_layers < 1:
        raise ValueError(f"time_layers must be >= 1, got {time_layers}")
    dim = nodes.shape[1]
    if dim not in (1, 2):
        raise ValueError(f"only 1D or 2D spatial meshes are supported, got dim={dim}")
    if conn.min() < 0 or conn.max() >= nodes.shape[0]:
        raise ValueError("spatial connectivity indices out of range")

    nsp = nodes.shape[0]
    layers = np.arange(time_layers + 1) / time_layers
    st_nodes = np.empty(((time_layers + 1) * nsp, dim + 1))
    for k, t in enumerate(layers):
        st_nodes[k * nsp:(k + 1) * nsp, :dim] = nodes
        st_nodes[k * nsp:(k + 1) * nsp, dim] = t

    ne = conn.shape[0]
    st_conn = np.empty((time_layers * ne, 2 * conn.shape[1]), dtype=int)
    for k in range(time_layers):
        base = conn + k * nsp
        st_conn[k * ne:(k + 1) * ne] = np.hstack([base, base + nsp])

    kind = "quad4" if dim == 1 else "hex8"
    lift = _LIFT_1D if dim == 1 else _LIFT_2D
    facets: list[Facet] = []
    for e in range(ne):
        facets.append((e, _BOTTOM_FACE[kind], "slab_bottom"))
        facets.append(((time_layers - 1) * ne + e, _TOP_FACE[kind], "slab_top"))
    for e, f, tag in _tag_spatial_facets(nodes, conn, dim):
        for k in range(time_layers):
            facets.append((k * ne + e, lift[f], tag))

    return SpaceTimeSlab(
        spatial_dim=dim,
        nodes=st_nodes,
        elements=st_conn,
        time_layers=time_layers,
        bottom_nodes=np.arange(nsp),
        top_nodes=np.arange(time_layers * nsp, (time_layers + 1) * nsp),
        boundary_facets=facets,
    )


def flip_time(slab: SpaceTimeSlab) -> SpaceTimeSlab:
    """Mirror the slab's time coordinates: t* = t_max - t + t_min.

    Spatial coordinates and connectivity are untouched; the bottom/top node
    lists and the slab_bottom/slab_top facet tags swap so they keep naming
    the geometric interfaces. When the set of time values is symmetric
    about the interval midpoint (always true for uniform layers), flipping
    permutes the existing values in place so a double flip is bit-identical.
    """
    t = slab.nodes[:, -1]
    u = np.unique(t)
    mirrored_set = (slab.t_max + slab.t_min) - u[::-1]
    span = max(slab.t_max - slab.t_min, 1e-30)
    if np.allclose(u, mirrored_set, rtol=0.0, atol=1e-12 * span):
        t_new = u[::-1][np.searchsorted(u, t)]
    else:
        t_new = (slab.t_max - t) + slab.t_min

    nodes = slab.nodes.copy()
    nodes[:, -1] = t_new
    swap = {"slab_bottom": "slab_top", "slab_top": "slab_bottom"}
    facets = [(e, f, swap.get(tag, tag)) for e, f, tag in slab.boundary_facets]
    return replace(
        slab,
        nodes=nodes,
        bottom_nodes=slab.top_nodes.copy(),
        top_nodes=slab.bottom_nodes.copy(),
        boundary_facets=facets,
    )


def displace_nodes(slab: SpaceTimeSlab, displacement) -> SpaceTimeSlab:
    """Shift spatial coordinates by per-node vectors; time is untouched."""
    disp = np.asarray(displacement, dtype=float)
    if disp.ndim == 1:
        disp = disp[:, None]
    if disp.shape != (slab.n_nodes, slab.spatial_dim):
        raise ValueError(
            f"displacement shape {disp.shape} does not match "
            f"({slab.n_nodes}, {slab.spatial_dim})"
        )
    nodes = slab.nodes.copy()
    nodes[:, :slab.spatial_dim] += disp
    return replace(slab, nodes=nodes)


def element_volumes(slab: SpaceTimeSlab, interval: SlabInterval, order: int = 2) -> np.ndarray:
    """Quadrature volume of every element (in physical space-time units)."""
    ref = el.reference_element(slab.kind, order)
    _, weights, _ = el.map_elements(slab, interval, ref)
    return weights.sum(axis=1)


def validate_slab(slab: SpaceTimeSlab, interval: SlabInterval | None = None):
    """Check the structural slab invariants; raises ValueError on violation."""
    t = slab.nodes[:, -1]
    if t.min() < slab.t_min - 1e-12 or t.max() > slab.t_max + 1e-12:
        raise ValueError("node time coordinates leave [t_min, t_max]")
    if slab.bottom_nodes.shape != slab.top_nodes.shape:
        raise ValueError("bottom/top node lists differ in length")
    if slab.elements.min() < 0 or slab.elements.max() >= slab.n_nodes:
        raise ValueError("element connectivity indices out of range")
    expected = slab.n_nodes // (slab.time_layers + 1)
    if slab.n_spatial_nodes != expected:
        raise ValueError("interface node count does not match the layer structure")
    if interval is not None:
        ref = el.reference_element(slab.kind)
        _, _, det = el.map_elements(slab, interval, ref)
        if np.abs(det).min() <= 0.0:
            raise ValueError("element mapping is singular at a quadrature point")
