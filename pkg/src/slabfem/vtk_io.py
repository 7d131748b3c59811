"""Legacy ASCII VTK output of space-time slabs with per-DOF point data."""

from __future__ import annotations

import numpy as np

_CELL_TYPE = {"quad4": 9, "hex8": 12}


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_slab_vtk(slab, interval, point_scalars=None, point_vectors=None,
                   title: str = "space-time slab") -> str:
    """Render one slab as a legacy VTK unstructured grid (text).

    1D+time slabs are embedded as (x, t_phys, 0) quads, 2D+time slabs as
    (x, y, t_phys) hexahedra, so the time axis points out of the spatial
    plane in a viewer.
    """
    point_scalars = point_scalars or {}
    point_vectors = point_vectors or {}
    n = slab.n_nodes
    pts = np.zeros((n, 3))
    t_phys = slab.nodes[:, -1] * interval.dt + interval.t_n
    if slab.spatial_dim == 1:
        pts[:, 0] = slab.nodes[:, 0]
        pts[:, 1] = t_phys
    else:
        pts[:, :2] = slab.nodes[:, :2]
        pts[:, 2] = t_phys

    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n} double",
    ]
    lines += [" ".join(_fmt(c) for c in p) for p in pts]

    ne, npe = slab.elements.shape
    lines.append(f"CELLS {ne} {ne * (npe + 1)}")
    lines += [f"{npe} " + " ".join(str(i) for i in conn) for conn in slab.elements]
    lines.append(f"CELL_TYPES {ne}")
    ct = _CELL_TYPE[slab.kind]
    lines += [str(ct)] * ne

    if point_scalars or point_vectors:
        lines.append(f"POINT_DATA {n}")
    for name, values in point_scalars.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [_fmt(v) for v in np.asarray(values, dtype=float)]
    for name, vecs in point_vectors.items():
        vecs = np.asarray(vecs, dtype=float)
        full = np.zeros((n, 3))
        full[:, : vecs.shape[1]] = vecs
        lines.append(f"VECTORS {name} double")
        lines += [" ".join(_fmt(c) for c in v) for v in full]
    return "\n".join(lines) + "\n"
