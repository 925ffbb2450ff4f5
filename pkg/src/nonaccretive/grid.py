"""Uniform tensor-product grids on boxes with homogeneous Dirichlet boundary."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["Grid", "random_compact_support", "write_csv"]


@dataclass(frozen=True)
class Grid:
    """Interior nodes of a box ``prod [lower_i, upper_i]``.

    Axis ``i`` carries ``n_i`` interior nodes, spacing ``h_i = (b_i - a_i)/(n_i + 1)``.
    Nodal vectors are flattened in C order (last axis fastest).  Values outside the
    interior are implicitly zero.
    """

    lower: tuple
    upper: tuple
    n: tuple
    step: tuple | None = None  # exact spacing; nodes then sit at integer multiples of it

    def __post_init__(self):
        lower = tuple(float(a) for a in np.atleast_1d(self.lower))
        upper = tuple(float(b) for b in np.atleast_1d(self.upper))
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        if not (len(lower) == len(upper) == len(n)):
            raise ValueError("lower, upper and n must have the same length")
        if len(n) not in (1, 2):
            raise ValueError("only d = 1 or d = 2 grids are supported")
        if any(k < 3 for k in n):
            raise ValueError("each axis needs at least 3 interior nodes")
        if any(b <= a for a, b in zip(lower, upper)):
            raise ValueError("box must have upper > lower on every axis")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "n", n)
        if self.step is not None:
            step = tuple(float(h) for h in np.atleast_1d(self.step))
            for a, b, k, h in zip(lower, upper, n, step):
                if abs(h * (k + 1) - (b - a)) > 1e-9 * (b - a) or abs(a / h - round(a / h)) > 1e-9:
                    raise ValueError("step must divide the box into whole cells aligned with the origin")
            object.__setattr__(self, "step", step)

    @classmethod
    def box(cls, half_width, n, dim=1):
        """Symmetric box ``[-R, R]^dim`` with ``n`` interior nodes per axis."""
        return cls((-half_width,) * dim, (half_width,) * dim, (n,) * dim)

    @classmethod
    def with_spacing(cls, half_width, h, dim=1):
        """Symmetric box whose spacing is exactly ``h``; the half width is rounded to a multiple of ``h``."""
        half = int(round(half_width / h))
        R = half * h
        return cls((-R,) * dim, (R,) * dim, (2 * half - 1,) * dim, (float(h),) * dim)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @cached_property
    def h(self) -> np.ndarray:
        if self.step is not None:
            return np.array(self.step)
        return np.array([(b - a) / (k + 1) for a, b, k in zip(self.lower, self.upper, self.n)])

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def axes(self) -> tuple:
        if self.step is not None:
            # integer node labels times the exact step: nested boxes share bitwise-equal coordinates
            return tuple(h * (np.arange(1, k + 1) + round(a / h)) for a, h, k in zip(self.lower, self.h, self.n))
        return tuple(a + h * np.arange(1, k + 1) for a, h, k in zip(self.lower, self.h, self.n))

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(d, N)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh])

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points**2, axis=0))

    def describe(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "n": list(self.n),
                "h": [float(h) for h in self.h]}

    def refine(self) -> "Grid":
        """Halve the spacing; the old nodes are a subset of the new ones."""
        step = None if self.step is None else tuple(h / 2 for h in self.step)
        return Grid(self.lower, self.upper, tuple(2 * k + 1 for k in self.n), step)

    def nearest_node(self, x) -> int:
        x = np.asarray(x, dtype=float).reshape(self.dim, 1)
        return int(np.argmin(np.sum((self.points - x) ** 2, axis=0)))

    def default_base_node(self) -> int:
        """The origin if it lies inside the box, otherwise the node nearest the centre."""
        inside = all(a < 0 < b for a, b in zip(self.lower, self.upper))
        centre = np.zeros(self.dim) if inside else (np.array(self.lower) + np.array(self.upper)) / 2
        return self.nearest_node(centre)

    # -- discrete L2 -------------------------------------------------------

    def _check(self, u):
        u = np.asarray(u)
        if u.shape[0] != self.size:
            raise ValueError(f"grid function has {u.shape[0]} values, grid has {self.size} nodes")
        return u

    def inner(self, u, v) -> complex:
        """``<u, v>_h = (prod h_i) sum_j u_j conj(v_j)``."""
        u = self._check(u)
        v = self._check(v)
        return complex(self.cell_volume * np.sum(u * np.conj(v)))

    def norm(self, u) -> float:
        u = self._check(u)
        return float(np.sqrt(self.cell_volume * np.sum(np.abs(u) ** 2)))

    def normalize(self, u) -> np.ndarray:
        return np.asarray(u) / self.norm(u)

    def boundary_distance(self) -> np.ndarray:
        """Distance of each node to the box boundary relative to that axis' width (min over axes)."""
        rel = []
        for i in range(self.dim):
            width = self.upper[i] - self.lower[i]
            x = self.points[i]
            rel.append(np.minimum(x - self.lower[i], self.upper[i] - x) / width)
        return np.min(np.stack(rel), axis=0)


def random_compact_support(grid: Grid, margin: float, seed) -> np.ndarray:
    """Random complex nodal values supported at least ``margin * width`` away from the boundary."""
    if not 0 < margin < 0.5:
        raise ValueError("margin must lie in (0, 0.5)")
    mask = grid.boundary_distance() >= margin - 1e-12
    if not np.any(mask):
        raise ValueError(f"margin {margin} leaves no interior nodes")
    rng = np.random.default_rng(seed)
    u = np.zeros(grid.size, dtype=complex)
    k = int(mask.sum())
    u[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return u


def write_csv(path, grid: Grid, u, extra: dict | None = None):
    """One row per node: ``x1[,x2], Re, Im, Abs`` plus any extra columns."""
    u = np.asarray(u)
    names = [f"x{i + 1}" for i in range(grid.dim)] + ["Re", "Im", "Abs"]
    cols = list(grid.points) + [u.real, u.imag, np.abs(u)]
    for key, val in (extra or {}).items():
        names.append(key)
        cols.append(np.asarray(val))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
