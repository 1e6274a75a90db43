"""Domains, sampling grids, and the plain-text field formats.

A domain is represented on a uniform lattice of interior nodes with
spacing h; functions in the Dirichlet class are identified with their
interior samples and implicit zeros on and outside the boundary.  The
quadrature weight per interior node is h^d, plus a boundary collar that
tops the total mass up to |Omega| exactly (the collar carries value 0
for Dirichlet fields, so integrals of densities are unaffected while
averages of exp-type integrands stay exactly normalized).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Domain:
    """Bounded region: rectangle(a, b), disk(R), or raster mask."""

    kind: str
    measure: float
    params: dict = field(default_factory=dict)

    @classmethod
    def rectangle(cls, a: float, b: float) -> "Domain":
        if a <= 0 or b <= 0:
            raise ValueError("rectangle sides must be positive")
        return cls("rectangle", a * b, {"a": float(a), "b": float(b)})

    @classmethod
    def square(cls) -> "Domain":
        return cls.rectangle(1.0, 1.0)

    @classmethod
    def disk(cls, R: float) -> "Domain":
        if R <= 0:
            raise ValueError("disk radius must be positive")
        return cls("disk", float(np.pi * R * R), {"R": float(R)})

    @classmethod
    def from_mask(cls, mask: np.ndarray, h: float) -> "Domain":
        mask = np.asarray(mask, dtype=bool)
        count = int(mask.sum())
        if count == 0:
            raise ValueError("mask has no interior cells")
        return cls("mask", h * h * count, {"mask": mask, "h": float(h)})

    @classmethod
    def interval(cls, L: float) -> "Domain":
        if L <= 0:
            raise ValueError("interval length must be positive")
        return cls("interval", float(L), {"L": float(L)})


@dataclass(frozen=True)
class Grid2D:
    """Uniform interior-node lattice over the bounding box of a domain.

    Nodes sit at (i*h, j*h) for i = 1..shape[0], j = 1..shape[1]; the
    box extent per axis is (shape[k]+1)*h.  For non-rectangular domains
    ``mask`` flags which lattice nodes are interior; fields carry zeros
    at masked-out nodes.
    """

    h: float
    shape: tuple[int, int]
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.h <= 0 or min(self.shape) < 1:
            raise ValueError("invalid grid parameters")
        if self.mask is not None and self.mask.shape != self.shape:
            raise ValueError("mask shape mismatch")

    @property
    def extent(self) -> tuple[float, float]:
        return ((self.shape[0] + 1) * self.h, (self.shape[1] + 1) * self.h)

    @property
    def weight(self) -> float:
        return self.h * self.h

    @property
    def interior_count(self) -> int:
        if self.mask is None:
            return self.shape[0] * self.shape[1]
        return int(self.mask.sum())

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(1, self.shape[0] + 1) * self.h
        y = np.arange(1, self.shape[1] + 1) * self.h
        return x, y

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def integrate(self, values: np.ndarray) -> float:
        """h^2-weighted sum over interior nodes (exterior samples are 0)."""
        return float(self.weight * values.sum())


@dataclass(frozen=True)
class Grid1D:
    """Interior nodes i*h, i = 1..m, of the interval [0, (m+1)h]."""

    h: float
    m: int

    @property
    def length(self) -> float:
        return (self.m + 1) * self.h

    @property
    def weight(self) -> float:
        return self.h

    def nodes(self) -> np.ndarray:
        return np.arange(1, self.m + 1) * self.h

    def integrate(self, values: np.ndarray) -> float:
        return float(self.h * values.sum())


def grid_for_rectangle(a: float, b: float, h: float) -> Grid2D:
    nx, ny = round(a / h), round(b / h)
    if abs(nx * h - a) > 1e-9 * a or abs(ny * h - b) > 1e-9 * b:
        raise ValueError(f"spacing {h} does not divide the rectangle sides")
    if nx < 2 or ny < 2:
        raise ValueError("grid too coarse")
    return Grid2D(h=h, shape=(nx - 1, ny - 1))


def grid_for_disk(R: float, h: float) -> Grid2D:
    # bounding box [0, 2R]^2, disk centered at (R, R); nodes strictly inside
    n = round(2.0 * R / h)
    if n < 4:
        raise ValueError("grid too coarse")
    shape = (n - 1, n - 1)
    x = np.arange(1, n) * h - R
    rr = x[:, None] ** 2 + x[None, :] ** 2
    return Grid2D(h=h, shape=shape, mask=rr < R * R)


def collar_mass(domain: Domain, grid: Grid2D) -> float:
    """|Omega| minus the interior-node quadrature mass (never negative)."""
    return max(0.0, domain.measure - grid.weight * grid.interior_count)


# ---------------------------------------------------------------------------
# plain-text field formats: first line "rows cols h", then one line per row.
# Mask rows are strings of 0/1 characters; value grids use whitespace-
# separated reals.  Row r, column c maps to lattice node (r+1, c+1).


def load_mask(path: str | Path) -> tuple[Domain, Grid2D]:
    lines = Path(path).read_text().split("\n")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError(f"{path}: expected header 'rows cols h'")
    rows, cols, h = int(header[0]), int(header[1]), float(header[2])
    cells = np.zeros((rows, cols), dtype=bool)
    for r in range(rows):
        line = lines[1 + r].strip()
        if len(line) != cols or set(line) - {"0", "1"}:
            raise ValueError(f"{path}: bad mask row {r + 1}")
        cells[r] = np.frombuffer(line.encode(), dtype=np.uint8) == ord("1")
    domain = Domain.from_mask(cells, h)
    grid = Grid2D(h=h, shape=cells.shape, mask=cells)
    return domain, grid


def save_mask(path: str | Path, grid: Grid2D) -> None:
    mask = grid.mask if grid.mask is not None else np.ones(grid.shape, dtype=bool)
    rows = ["%d %d %.17g" % (grid.shape[0], grid.shape[1], grid.h)]
    for r in range(grid.shape[0]):
        rows.append("".join("1" if v else "0" for v in mask[r]))
    Path(path).write_text("\n".join(rows) + "\n")


def load_values(path: str | Path) -> tuple[np.ndarray, float]:
    """Read a real-valued grid in the mask text layout; returns (array, h)."""
    lines = Path(path).read_text().split("\n")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError(f"{path}: expected header 'rows cols h'")
    rows, cols, h = int(header[0]), int(header[1]), float(header[2])
    vals = np.zeros((rows, cols))
    for r in range(rows):
        entries = lines[1 + r].split()
        if len(entries) != cols:
            raise ValueError(f"{path}: bad value row {r + 1}")
        vals[r] = [float(e) for e in entries]
    return vals, h


def save_values(path: str | Path, values: np.ndarray, h: float) -> None:
    rows = ["%d %d %.17g" % (values.shape[0], values.shape[1], h)]
    for r in range(values.shape[0]):
        rows.append(" ".join("%.17g" % v for v in values[r]))
    Path(path).write_text("\n".join(rows) + "\n")
