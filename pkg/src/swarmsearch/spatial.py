"""Sub-quadratic neighbor queries on the torus via a uniform cell grid.

The grid is rebuilt from scratch each tick.  Cells are stored as a CSR-style
sorted index (ids sorted by cell key, then id), which is what the simulation
kernel consumes directly; this module is the same machinery behind a
point-query interface.  Below three cells per side the grid degenerates and
queries fall back to an exhaustive scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .geometry import TorusSpec, Vec2


@dataclass
class CellGrid:
    """Uniform cell grid over agent positions on the torus."""

    world: TorusSpec
    cell_size: float
    dim: int
    xs: np.ndarray
    ys: np.ndarray
    order: np.ndarray
    keys_sorted: np.ndarray
    _scratch_idx: np.ndarray = field(repr=False, default=None)
    _scratch_d2: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        n = len(self.xs)
        self._scratch_idx = np.empty(n, np.int64)
        self._scratch_d2 = np.empty(n, np.float64)

    def __len__(self) -> int:
        return len(self.xs)

    @property
    def cell_width(self) -> float:
        return self.world.side_length / self.dim

    def cell_of(self, p: Vec2) -> tuple[int, int]:
        length = self.world.side_length
        return (int(_k.cell_coord(p.x, length, self.dim)),
                int(_k.cell_coord(p.y, length, self.dim)))

    def occupied_cells(self) -> dict[tuple[int, int], list[int]]:
        """Mapping from (ix, iy) cell coordinates to agent ids."""
        cells: dict[tuple[int, int], list[int]] = {}
        for r in range(len(self.order)):
            key = int(self.keys_sorted[r])
            coord = (key % self.dim, key // self.dim)
            cells.setdefault(coord, []).append(int(self.order[r]))
        return cells


def rebuild(positions, world: TorusSpec, cell_size: float) -> CellGrid:
    """Build a grid whose 3x3 neighborhood covers everything within cell_size.

    `positions` is a sequence of Vec2 or an (n, 2) array.  Positions are
    expected to lie in [0, L)^2; out-of-range values are wrapped.
    """
    if not (cell_size > 0.0):
        raise ValueError(f"cell_size must be positive, got {cell_size}")
    length = world.side_length
    arr = _as_xy(positions)
    xs = np.array([_k.wrap1(v, length) for v in arr[:, 0]], dtype=np.float64)
    ys = np.array([_k.wrap1(v, length) for v in arr[:, 1]], dtype=np.float64)
    dim = int(_k.grid_dim_for(length, cell_size))
    order, keys_sorted = _k.build_cell_index(xs, ys, length, dim)
    return CellGrid(world=world, cell_size=cell_size, dim=dim, xs=xs, ys=ys,
                    order=order, keys_sorted=keys_sorted)


def neighbors_within(grid: CellGrid, center: Vec2, radius: float,
                     exclude: int = -1) -> list[tuple[int, float]]:
    """All agents at torus distance <= radius from `center`, with distances.

    `exclude` removes the querying agent's own id from the result.  The order
    is the canonical cell-major enumeration (deterministic for a given grid).
    """
    if radius > grid.cell_size and grid.dim >= 3:
        raise ValueError(
            f"query radius {radius} exceeds cell_size {grid.cell_size}")
    length = grid.world.side_length
    cnt = _k.query_radius(grid.xs, grid.ys, grid.order, grid.keys_sorted,
                          grid.dim, length,
                          _k.wrap1(center.x, length), _k.wrap1(center.y, length),
                          radius, exclude,
                          grid._scratch_idx, grid._scratch_d2)
    out = []
    for k in range(cnt):
        out.append((int(grid._scratch_idx[k]),
                    float(np.sqrt(grid._scratch_d2[k]))))
    return out


def _as_xy(positions) -> np.ndarray:
    if isinstance(positions, np.ndarray):
        if positions.size == 0:
            return positions.reshape(0, 2).astype(np.float64)
        return positions.astype(np.float64).reshape(-1, 2)
    xs = [(p.x, p.y) if isinstance(p, Vec2) else (p[0], p[1]) for p in positions]
    if not xs:
        return np.empty((0, 2), np.float64)
    return np.asarray(xs, dtype=np.float64)
