"""Reference elements, Gauss quadrature, and the space-time element mapping.

The mapping treats the last coordinate as normalized slab time: physical
time is t*dt + t_n, so a single [0,1]-time mesh serves every step and the
step size enters only through the Jacobian. Spatial gradients are the
first ``spatial_dim`` rows of the mapped gradient, the temporal derivative
is the last row. Flipped slabs mirror the time axis, which makes the raw
Jacobian determinant negative; weights use |det J| while derivatives use
the signed inverse, so flipped and unflipped assembly agree to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# counterclockwise corner tour for the quad, bottom quad then top quad for the hex
_CORNERS = {
    "line2": np.array([[-1.0], [1.0]]),
    "quad4": np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
    "hex8": np.array(
        [
            [-1.0, -1.0, -1.0],
            [1.0, -1.0, -1.0],
            [1.0, 1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
            [1.0, -1.0, 1.0],
            [1.0, 1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ]
    ),
}

# local faces, ordered so the face spans a valid lower-dimensional element
QUAD4_FACES = ((0, 1), (1, 2), (2, 3), (3, 0))
HEX8_FACES = (
    (0, 1, 2, 3),  # t_min
    (4, 5, 6, 7),  # t_max
    (0, 1, 5, 4),  # y_min lateral
    (1, 2, 6, 5),  # x_max lateral
    (2, 3, 7, 6),  # y_max lateral
    (3, 0, 4, 7),  # x_min lateral
)

FACES = {"quad4": QUAD4_FACES, "hex8": HEX8_FACES}
FACET_KIND = {"quad4": "line2", "hex8": "quad4"}


class SingularJacobianError(RuntimeError):
    """Raised when an element mapping degenerates at a quadrature point."""

    def __init__(self, element: int, point: int):
        super().__init__(f"singular Jacobian in element {element} at quadrature point {point}")
        self.element = element
        self.point = point


def shape_values(kind: str, points) -> np.ndarray:
    """Multilinear shape functions N_i at reference points, shape (nq, npe)."""
    corners = _CORNERS[kind]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    # product over dims of (1 + xi_d * corner_d)/2
    vals = np.ones((pts.shape[0], corners.shape[0]))
    for d in range(corners.shape[1]):
        vals *= 0.5 * (1.0 + pts[:, None, d] * corners[None, :, d])
    return vals


def shape_gradients(kind: str, points) -> np.ndarray:
    """Reference gradients dN_i/dxi_d at reference points, shape (nq, npe, dim)."""
    corners = _CORNERS[kind]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    nq, npe, dim = pts.shape[0], corners.shape[0], corners.shape[1]
    grads = np.empty((nq, npe, dim))
    for d in range(dim):
        g = np.full((nq, npe), 0.5) * corners[None, :, d]
        for other in range(dim):
            if other != d:
                g *= 0.5 * (1.0 + pts[:, None, other] * corners[None, :, other])
        grads[:, :, d] = g
    return grads


def gauss_points(dim: int, order: int = 2):
    """Tensor-product Gauss-Legendre rule on [-1,1]^dim."""
    if not 1 <= order <= 4:
        raise ValueError(f"quadrature order must be in 1..4, got {order}")
    p1, w1 = np.polynomial.legendre.leggauss(order)
    grids = np.meshgrid(*([p1] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w1] * dim), indexing="ij")
    w = np.ones(pts.shape[0])
    for g in wgrids:
        w *= g.ravel()
    return pts, w


@dataclass(frozen=True)
class ReferenceElement:
    """Shape values and reference gradients tabulated at a Gauss rule."""

    kind: str
    points: np.ndarray   # (nq, dim)
    weights: np.ndarray  # (nq,)
    shape: np.ndarray    # (nq, npe)
    grad: np.ndarray     # (nq, npe, dim)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def npe(self) -> int:
        return self.shape.shape[1]


def reference_element(kind: str, order: int = 2) -> ReferenceElement:
    if kind not in _CORNERS:
        raise ValueError(f"unknown element kind {kind!r}")
    pts, w = gauss_points(_CORNERS[kind].shape[1], order)
    return ReferenceElement(kind, pts, w, shape_values(kind, pts), shape_gradients(kind, pts))


@dataclass
class MappedBasis:
    """Per-quadrature-point geometry factors of one mapped element."""

    shape: np.ndarray       # (nq, npe)
    grad_space: np.ndarray  # (nq, npe, spatial_dim)
    dt_basis: np.ndarray    # (nq, npe) temporal derivative, already 1/dt scaled
    weights: np.ndarray     # (nq,) quadrature weight * |det J|
    det: np.ndarray         # (nq,) signed determinant


def physical_coords(slab, interval, conn: np.ndarray) -> np.ndarray:
    """Node coordinates of elements with slab time mapped to physical time."""
    coords = slab.nodes[conn].copy()
    coords[..., -1] = coords[..., -1] * interval.dt + interval.t_n
    return coords


def map_isoparametric(coords: np.ndarray, ref: ReferenceElement):
    """Isoparametric mapping of a coordinate batch (ne, npe, dim).

    Returns (grad_phys, weights, det) with grad_phys of shape
    (ne, nq, npe, dim) and weights already including |det J|.
    """
    jac = np.einsum("ena,qnb->eqab", coords, ref.grad)      # dx_a/dxi_b
    det = np.linalg.det(jac)                                # (ne, nq)
    bad = np.abs(det) < 1e-300
    if bad.any():
        e, q = np.argwhere(bad)[0]
        raise SingularJacobianError(int(e), int(q))
    inv = np.linalg.inv(jac)
    grad_phys = np.einsum("eqba,qnb->eqna", inv, ref.grad)  # J^{-T} grad_ref
    weights = ref.weights[None, :] * np.abs(det)
    return grad_phys, weights, det


def map_elements(slab, interval, ref: ReferenceElement, elements=None):
    """Map a batch of slab elements with time scaled to the physical interval."""
    conn = slab.elements if elements is None else slab.elements[np.atleast_1d(elements)]
    coords = physical_coords(slab, interval, conn)
    try:
        return map_isoparametric(coords, ref)
    except SingularJacobianError as exc:
        idx = int(exc.element if elements is None else np.atleast_1d(elements)[exc.element])
        raise SingularJacobianError(idx, exc.point) from None


def map_element(slab, element: int, interval, ref: ReferenceElement) -> MappedBasis:
    """Mapped basis of a single element (see map_elements for the batch form)."""
    grad_phys, weights, det = map_elements(slab, interval, ref, elements=element)
    return MappedBasis(
        shape=ref.shape,
        grad_space=grad_phys[0, :, :, :-1],
        dt_basis=grad_phys[0, :, :, -1],
        weights=weights[0],
        det=det[0],
    )


def interpolate(slab, values, element: int, local_point) -> float:
    """Isoparametric interpolation of nodal values at a reference point."""
    conn = slab.elements[element]
    values = np.asarray(values, dtype=float)
    if values.shape[0] < conn.max() + 1:
        raise ValueError("nodal value vector does not cover the element nodes")
    n = shape_values(slab.kind, np.asarray(local_point, dtype=float)[None, :])[0]
    return float(n @ values[conn])


def facet_integrals(slab, interval, facets, ref_order: int = 2):
    """Nodal N_i and pairwise N_i N_j integrals over boundary facets.

    Facets lying in constant-time planes get the spatial measure; lateral
    facets span time, so their measure carries the dt scaling. Returns a
    list of (facet_nodes, load_vector, mass_block) per facet.
    """
    kind = FACET_KIND[slab.kind]
    pts, w = gauss_points(_CORNERS[kind].shape[1], ref_order)
    n = shape_values(kind, pts)
    g = shape_gradients(kind, pts)
    faces = FACES[slab.kind]
    out = []
    for elem, face, _tag in facets:
        nodes = slab.elements[elem][list(faces[face])]
        coords = physical_coords(slab, interval, nodes[None, :])[0]  # (npe_f, dim)
        tang = np.einsum("na,qnb->qab", coords, g)                   # (nq, dim, dim-1)
        gram = np.einsum("qab,qac->qbc", tang, tang)
        measure = np.sqrt(np.linalg.det(gram))
        wq = w * measure
        load = np.einsum("q,qn->n", wq, n)
        mass = np.einsum("q,qi,qj->ij", wq, n, n)
        out.append((nodes, load, mass))
    return out
