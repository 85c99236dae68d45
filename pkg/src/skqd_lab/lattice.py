"""Open-boundary lattice geometries: chains and most-square rectangles."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidSizeError


@dataclass(frozen=True)
class Geometry:
    """Sites ``0..n_sites-1`` and their nearest-neighbor bonds.

    Rectangles use row-major labels, ``site = row * cols + col``. A chain is
    stored with ``rows=1, cols=n_sites`` so both shapes share the same fields.
    """

    n_sites: int
    shape: str
    rows: int
    cols: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.shape not in ("chain", "rect"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.rows * self.cols != self.n_sites:
            raise InvalidSizeError(f"{self.rows}x{self.cols} != {self.n_sites}")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on site {i}")
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites):
                raise ValueError(f"edge ({i}, {j}) out of range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)

    def to_json(self) -> dict:
        return {
            "n": self.n_sites,
            "shape": self.shape,
            "rows": self.rows,
            "cols": self.cols,
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Geometry":
        return cls(
            n_sites=int(data["n"]),
            shape=data["shape"],
            rows=int(data["rows"]),
            cols=int(data["cols"]),
            edges=tuple((int(i), int(j)) for i, j in data["edges"]),
        )


def build_chain(n: int) -> Geometry:
    if n < 2:
        raise InvalidSizeError(f"a chain needs at least 2 sites, got {n}")
    edges = tuple((i, i + 1) for i in range(n - 1))
    return Geometry(n_sites=n, shape="chain", rows=1, cols=n, edges=edges)


def rectangle_dims(n: int) -> tuple[int, int]:
    """Most-square factorization ``n = r * c`` with ``r <= c``.

    Scans downward from ``floor(sqrt(n))`` and stops at the first divisor, so a
    prime ``n`` gives a ``1 x n`` strip.
    """
    if n < 2:
        raise InvalidSizeError(f"a rectangle needs at least 2 sites, got {n}")
    r = math.isqrt(n)
    while n % r:
        r -= 1
    return r, n // r


def build_rectangle(n: int) -> Geometry:
    rows, cols = rectangle_dims(n)
    edges = []
    for row in range(rows):
        for col in range(cols):
            site = row * cols + col
            if col + 1 < cols:
                edges.append((site, site + 1))
            if row + 1 < rows:
                edges.append((site, site + cols))
    edges.sort()
    return Geometry(n_sites=n, shape="rect", rows=rows, cols=cols, edges=tuple(edges))


def build_geometry(n: int, shape: str = "chain") -> Geometry:
    if shape == "chain":
        return build_chain(n)
    if shape in ("rect", "rectangle"):
        return build_rectangle(n)
    raise ValueError(f"unknown geometry {shape!r}")


def snake_order(g: Geometry) -> list[int]:
    """Boustrophedon path through the sites: even rows left to right, odd rows reversed."""
    if g.shape == "chain":
        return list(range(g.n_sites))
    order = []
    for row in range(g.rows):
        cols = range(g.cols) if row % 2 == 0 else range(g.cols - 1, -1, -1)
        order.extend(row * g.cols + col for col in cols)
    return order
