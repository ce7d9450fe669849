"""Planar domains: rectangles, disks and diffeomorphic images."""

from __future__ import annotations

import math

import numpy as np

from .fields import Point

__all__ = ["Domain", "Rectangle", "Disk", "ImageDomain", "unit_disk"]


class Domain:
    bounded = True

    def contains(self, x, y):
        """Vectorised membership test; NaN coordinates are outside."""
        raise NotImplementedError

    def contains_point(self, p) -> bool:
        p = Point.of(p)
        return bool(self.contains(np.array([p.x]), np.array([p.y]))[0])

    def bbox(self):
        raise NotImplementedError

    def boundary_points(self, n=2048):
        raise NotImplementedError


class Rectangle(Domain):
    def __init__(self, x0, x1, y0, y1):
        x0, x1, y0, y1 = map(float, (x0, x1, y0, y1))
        if not (x0 < x1 and y0 < y1):
            raise ValueError("rectangle needs x0 < x1 and y0 < y1")
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.bounded = all(map(math.isfinite, (x0, x1, y0, y1)))

    def contains(self, x, y):
        x, y = np.asarray(x), np.asarray(y)
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def bbox(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def boundary_points(self, n=2048):
        k = max(n // 4, 2)
        t = np.linspace(0.0, 1.0, k, endpoint=False)
        w, h = self.x1 - self.x0, self.y1 - self.y0
        c0 = complex(self.x0, self.y0)
        return np.concatenate(
            [
                c0 + w * t,
                c0 + w + 1j * h * t,
                c0 + w + 1j * h - w * t,
                c0 + 1j * h - 1j * h * t,
            ]
        )

    def __eq__(self, other):
        return isinstance(other, Rectangle) and self.bbox() == other.bbox()

    def __hash__(self):
        return hash(("rect",) + self.bbox())

    def __repr__(self):
        return f"Rectangle({self.x0}, {self.x1}, {self.y0}, {self.y1})"


class Disk(Domain):
    def __init__(self, center=0j, radius=1.0):
        center = Point.of(center).z
        if not radius > 0:
            raise ValueError("disk radius must be positive")
        self.center, self.radius = center, float(radius)

    def contains(self, x, y):
        dx = np.asarray(x) - self.center.real
        dy = np.asarray(y) - self.center.imag
        return dx * dx + dy * dy < self.radius**2

    def bbox(self):
        c, r = self.center, self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def boundary_points(self, n=2048):
        t = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        return self.center + self.radius * np.exp(1j * t)

    def __eq__(self, other):
        return isinstance(other, Disk) and (self.center, self.radius) == (other.center, other.radius)

    def __hash__(self):
        return hash(("disk", self.center, self.radius))

    def __repr__(self):
        return f"Disk({self.center}, {self.radius})"


def unit_disk():
    return Disk(0j, 1.0)


class ImageDomain(Domain):
    """``Phi(base)`` for a diffeomorphism ``Phi`` that knows its inverse.

    Membership is decided by pulling the point back through the inverse map;
    the bounding box comes from the mapped boundary of ``base`` plus a small
    margin.
    """

    PAD = 0.01

    def __init__(self, base: Domain, diffeo):
        if diffeo.inverse is None:
            raise ValueError("image domains need a map with an inverse")
        self.base, self.diffeo = base, diffeo
        self._bbox = None

    def contains(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        w = self.diffeo.inverse.Phi(x, y)
        inside = self.base.contains(w.real, w.imag)
        return inside & np.isfinite(w)

    def bbox(self):
        if self._bbox is None:
            b = self.boundary_points(4096)
            x0, x1, y0, y1 = b.real.min(), b.real.max(), b.imag.min(), b.imag.max()
            px, py = self.PAD * (x1 - x0), self.PAD * (y1 - y0)
            self._bbox = (x0 - px, x1 + px, y0 - py, y1 + py)
        return self._bbox

    def boundary_points(self, n=2048):
        b = self.base.boundary_points(n)
        return self.diffeo.Phi(b.real, b.imag)

    def __repr__(self):
        return f"ImageDomain({self.base!r})"
