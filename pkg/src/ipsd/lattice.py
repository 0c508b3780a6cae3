"""Torus geometry and homogeneous migration stencils.

The diffusion and walker modules share one migration structure: a finite
set of lattice displacements with nonnegative rate weights, translated
over a d-dimensional torus.  ``m(x, y) = weight(y - x)`` in torus
arithmetic.  This module keeps the displacement table and the flat-index
move tables in one place so both sides of a moment duality are guaranteed
to use identical rates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = ["Stencil", "Torus"]


@dataclass(frozen=True)
class Stencil:
    """Homogeneous finite-range migration weights, indexed by displacement."""

    displacements: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.displacements) != len(self.weights):
            raise ValueError("displacements and weights must align")
        for disp, w in zip(self.displacements, self.weights):
            if all(c == 0 for c in disp):
                raise ValueError("zero displacement is not a migration")
            if w < 0:
                raise ValueError("migration weights must be nonnegative")
        dims = {len(d) for d in self.displacements}
        if len(dims) > 1:
            raise ValueError("displacements must share one dimension")
        if len(set(self.displacements)) != len(self.displacements):
            raise ValueError("duplicate displacement")

    @property
    def dim(self) -> int:
        return len(self.displacements[0])

    @property
    def total_rate(self) -> float:
        return float(sum(self.weights))

    @classmethod
    def nearest_neighbor(cls, d: int, total_rate: float = 1.0) -> "Stencil":
        """Rate ``total_rate`` split evenly over the 2d unit displacements."""
        if d < 1 or total_rate < 0:
            raise ValueError("need d >= 1 and a nonnegative rate")
        disps = []
        for axis in range(d):
            for step in (1, -1):
                v = [0] * d
                v[axis] = step
                disps.append(tuple(v))
        w = total_rate / (2 * d)
        return cls(tuple(disps), tuple(w for _ in disps))

    @classmethod
    def parse(cls, spec: str, d: int) -> "Stencil":
        """Parse a stencil spec; currently ``nn:RATE`` (nearest neighbor)."""
        s = spec.strip()
        if s.startswith("nn:"):
            return cls.nearest_neighbor(d, float(s.split(":", 1)[1]))
        raise ValueError(f"unrecognized stencil spec {spec!r}")


@dataclass(frozen=True)
class Torus:
    """d-dimensional torus of side L with row-major flat indexing."""

    d: int
    L: int

    def __post_init__(self):
        if self.d < 1 or self.L < 2:
            raise ValueError("torus needs d >= 1 and L >= 2")

    @property
    def n_sites(self) -> int:
        return self.L**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.L,) * self.d

    def index(self, coords) -> int:
        idx = 0
        for c in coords:
            idx = idx * self.L + (c % self.L)
        return idx

    def coords(self, idx: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.d):
            out.append(idx % self.L)
            idx //= self.L
        return tuple(reversed(out))

    def move_table(self, stencil: Stencil) -> np.ndarray:
        """(n_sites, n_displacements) flat indices of x + disp on the torus."""
        if stencil.dim != self.d:
            raise ValueError("stencil dimension does not match the torus")
        table = np.empty((self.n_sites, len(stencil.displacements)), dtype=np.int64)
        for x in range(self.n_sites):
            c = self.coords(x)
            for j, disp in enumerate(stencil.displacements):
                table[x, j] = self.index(tuple(ci + di for ci, di in zip(c, disp)))
        return table
