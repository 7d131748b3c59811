"""Analytical reference solutions and the error norms used by all case reports."""

from __future__ import annotations

from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel

from .special import erfc

NormVariant = Literal["rms", "sum_by_n"]


class ErrorReport(BaseModel):
    """One error measurement: a scheme at one time-step size.

    ``dt`` is reported as the time-layer thickness, so multi-layer slabs
    and slab-per-step marches with the same layer thickness compare at
    the same abscissa.
    """

    dt: float
    scheme: str
    error: float
    n_points: int
    window: tuple[float, float] = (0.0, 2.0)
    norm_variant: NormVariant = "rms"


def rod_exact(x, t: float):
    """Temperature in the semi-infinite rod with unit flux at x = 0.

    T(x, t) = 2 sqrt(t/pi) [exp(-x^2/(4t)) - (x/2) sqrt(pi/t) erfc(x/(2 sqrt(t)))]

    Parameters
    ----------
    x : float or array
        Distance from the heated end, m. Must be >= 0.
    t : float
        Time, s. Must be > 0.
    """
    if t <= 0.0:
        raise ValueError(f"rod_exact needs t > 0, got t={t}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("rod_exact needs x >= 0")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    z = x / (2.0 * np.sqrt(t))
    val = 2.0 * np.sqrt(t / np.pi) * (
        np.exp(-(x * x) / (4.0 * t)) - 0.5 * x * np.sqrt(np.pi / t) * erfc(z)
    )
    return float(val[0]) if scalar else val


def decaying_cosine_exact(x, t: float, length: float, mode: int = 1, alpha: float = 1.0):
    """Smooth manufactured solution cos(k x) exp(-alpha k^2 t), k = mode*pi/length.

    Satisfies the heat equation with adiabatic ends on [0, length]; used by
    the semi-discrete temporal-order checks.
    """
    k = mode * np.pi / length
    return np.cos(k * np.asarray(x, dtype=float)) * np.exp(-alpha * k * k * t)


def error_norm(
    coords,
    values,
    reference: Callable | np.ndarray,
    window: tuple[float, float] = (0.0, 2.0),
    variant: NormVariant = "rms",
    dt: float = 0.0,
    scheme: str = "",
) -> ErrorReport:
    """Pointwise error norm over the nodes whose x lies in ``window``.

    ``reference`` is either a callable evaluated at the node x-coordinates
    (numeric vs exact) or a second nodal array of the same length (numeric
    vs numeric, e.g. the classical/flipped difference curves).

    The default variant is the RMS form sqrt(sum e_i^2 / N); ``sum_by_n``
    gives the alternative reading sqrt(sum e_i^2) / N.
    """
    coords = np.asarray(coords, dtype=float)
    values = np.asarray(values, dtype=float)
    xs = coords if coords.ndim == 1 else coords[:, 0]
    lo, hi = window
    tol = 1e-12 * max(1.0, abs(hi - lo))
    mask = (xs >= lo - tol) & (xs <= hi + tol)
    n = int(mask.sum())
    if n == 0:
        raise ValueError(f"no evaluation points inside window {window}")

    if callable(reference):
        ref = np.asarray(reference(xs[mask]), dtype=float)
    else:
        ref = np.asarray(reference, dtype=float)[mask]
    e = values[mask] - ref
    if variant == "rms":
        err = float(np.sqrt(np.sum(e * e) / n))
    else:
        err = float(np.sqrt(np.sum(e * e)) / n)
    return ErrorReport(dt=dt, scheme=scheme, error=err, n_points=n,
                       window=window, norm_variant=variant)
