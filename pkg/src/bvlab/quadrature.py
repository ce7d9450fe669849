"""Masked tensor-product midpoint quadrature on bounded domains."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import DomainUnbounded, ResolutionTooSmall
from .fields import as_field

__all__ = ["QuadratureResult", "cell_grid", "integrate", "masked_sum", "interior_mask", "threads"]

# rows per evaluation chunk; fixed so the reduction order never depends on threads
CHUNK_ROWS = 64


class QuadratureResult(NamedTuple):
    value: complex
    refined: complex
    error_estimate: float


def threads() -> int:
    try:
        return max(1, int(os.environ.get("BVLAB_THREADS", "1")))
    except ValueError:
        return 1


def cell_grid(domain, n):
    """Cell centers of the ``n x n`` partition of the bounding box.

    Returns ``(X, Y, mask, hx, hy)`` with ``mask`` marking centers inside the
    domain.
    """
    if not domain.bounded:
        raise DomainUnbounded("quadrature needs a bounded domain")
    x0, x1, y0, y1 = domain.bbox()
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    xs = x0 + (np.arange(n) + 0.5) * hx
    ys = y0 + (np.arange(n) + 0.5) * hy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X, Y, domain.contains(X, Y), hx, hy


def _chunk_sum(g, X, Y, mask, rows):
    m = mask[rows]
    if not m.any():
        return 0j
    return np.sum(g(X[rows][m], Y[rows][m]))


def masked_sum(domain, g, n) -> complex:
    """Midpoint rule with ``n x n`` cells; a cell counts iff its center is inside."""
    if n < 4:
        raise ResolutionTooSmall(f"quadrature resolution {n} < 4")
    g = as_field(g)
    X, Y, mask, hx, hy = cell_grid(domain, n)
    chunks = [slice(k, min(k + CHUNK_ROWS, n)) for k in range(0, n, CHUNK_ROWS)]
    nt = threads()
    if nt > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            parts = list(pool.map(lambda r: _chunk_sum(g, X, Y, mask, r), chunks))
    else:
        parts = [_chunk_sum(g, X, Y, mask, r) for r in chunks]
    return complex(np.sum(np.array(parts, dtype=complex))) * hx * hy


def integrate(domain, g, n) -> QuadratureResult:
    """Integrate ``g`` over ``domain`` at ``n`` and ``2n`` cells per axis."""
    value = masked_sum(domain, g, n)
    refined = masked_sum(domain, g, 2 * n)
    return QuadratureResult(value, refined, abs(value - refined))


def interior_mask(mask, hx, hy, margin):
    """Erode ``mask`` by a physical distance ``margin`` (disk structuring element)."""
    rx, ry = int(np.ceil(margin / hx)), int(np.ceil(margin / hy))
    if rx == 0 and ry == 0:
        return mask.copy()
    ii, jj = np.mgrid[-rx : rx + 1, -ry : ry + 1]
    disk = (ii * hx) ** 2 + (jj * hy) ** 2 <= margin**2
    return ndimage.binary_erosion(mask, structure=disk, border_value=0)
