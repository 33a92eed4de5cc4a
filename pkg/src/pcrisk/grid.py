"""Cell lattice construction and spatial neighborhoods.

A country bounding box is discretized into square cells of a chosen edge
length (50/75/100 km by default, any positive edge via config) using an
equirectangular projection anchored at the bbox center. Cells are addressed
by (row, col): row 0 sits on the southern edge and grows northward, col 0
on the western edge and grows eastward. Cells are half-open in both axes,
so a point on a shared boundary belongs to the higher-index cell.

Grids are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, OutOfBoundsError

# arc length of one degree at the mean Earth radius (6371 km)
KM_PER_DEG = math.pi * 6371.0 / 180.0

# slack (in cells) absorbing float round-off at cell boundaries
_EDGE_EPS = 1e-9


@dataclass(frozen=True, order=True)
class CellId:
    row: int
    col: int


@dataclass(frozen=True)
class BBox:
    lat_min: float
    lon_min: float
    lat_max: float
    lon_max: float

    def validate(self) -> None:
        vals = (self.lat_min, self.lon_min, self.lat_max, self.lon_max)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidInputError(f"bbox coordinates must be finite, got {self}")
        if self.lat_min >= self.lat_max or self.lon_min >= self.lon_max:
            raise InvalidInputError(f"degenerate bbox: {self}")

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.lat_min + self.lat_max), 0.5 * (self.lon_min + self.lon_max))


@dataclass(frozen=True, eq=False)
class Grid:
    """Rectangular cell lattice over a bbox.

    origin_lat/origin_lon is the south-west corner; anchor_lat is the
    latitude used to scale km to degrees of longitude. mask marks the
    cells that belong to the modelled country (row-major).
    """

    origin_lat: float
    origin_lon: float
    anchor_lat: float
    cell_km: float
    n_rows: int
    n_cols: int
    mask: np.ndarray  # bool, shape (n_rows, n_cols), read-only

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise InvalidInputError("grid must have at least one row and one column")
        if self.cell_km <= 0:
            raise InvalidInputError("cell_km must be positive")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.n_rows, self.n_cols):
            raise InvalidInputError("mask shape does not match grid shape")
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def deg_per_cell_lat(self) -> float:
        return self.cell_km / KM_PER_DEG

    @property
    def deg_per_cell_lon(self) -> float:
        return self.cell_km / (KM_PER_DEG * math.cos(math.radians(self.anchor_lat)))

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    def contains(self, c: CellId) -> bool:
        return 0 <= c.row < self.n_rows and 0 <= c.col < self.n_cols

    def index(self, c: CellId) -> int:
        """Row-major flat index of a cell."""
        if not self.contains(c):
            raise OutOfBoundsError(f"cell {c} outside {self.n_rows}x{self.n_cols} grid")
        return c.row * self.n_cols + c.col

    def cells(self):
        """All cells in row-major order."""
        for r in range(self.n_rows):
            for c in range(self.n_cols):
                yield CellId(r, c)

    def masked_cells(self):
        """Cells inside the country mask, row-major order."""
        for c in self.cells():
            if self.mask[c.row, c.col]:
                yield c

    def cell_bounds(self, c: CellId) -> tuple[float, float, float, float]:
        """(lat_south, lon_west, lat_north, lon_east) of a cell."""
        if not self.contains(c):
            raise OutOfBoundsError(f"cell {c} outside grid")
        lat_s = self.origin_lat + c.row * self.deg_per_cell_lat
        lon_w = self.origin_lon + c.col * self.deg_per_cell_lon
        return (lat_s, lon_w, lat_s + self.deg_per_cell_lat, lon_w + self.deg_per_cell_lon)

    def cell_center(self, c: CellId) -> tuple[float, float]:
        lat_s, lon_w, lat_n, lon_e = self.cell_bounds(c)
        return (0.5 * (lat_s + lat_n), 0.5 * (lon_w + lon_e))

    def to_dict(self) -> dict:
        return {
            "origin_lat": self.origin_lat,
            "origin_lon": self.origin_lon,
            "anchor_lat": self.anchor_lat,
            "cell_km": self.cell_km,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "mask": [int(v) for v in self.mask.ravel()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        mask = np.asarray(d["mask"], dtype=bool).reshape(d["n_rows"], d["n_cols"])
        return cls(
            origin_lat=float(d["origin_lat"]),
            origin_lon=float(d["origin_lon"]),
            anchor_lat=float(d["anchor_lat"]),
            cell_km=float(d["cell_km"]),
            n_rows=int(d["n_rows"]),
            n_cols=int(d["n_cols"]),
            mask=mask,
        )


def build_grid(bbox: BBox, cell_km: float, mask_polygon=None) -> Grid:
    """Cover a bbox with square cells of edge cell_km.

    Partial edge cells are kept. When mask_polygon (a list of (lat, lon)
    vertices) is given, a cell is masked in iff its center falls inside
    the polygon; otherwise every cell counts.
    """
    bbox.validate()
    if cell_km <= 0:
        raise InvalidInputError(f"cell_km must be positive, got {cell_km}")
    anchor_lat = bbox.center[0]
    span_ns_km = (bbox.lat_max - bbox.lat_min) * KM_PER_DEG
    span_ew_km = (bbox.lon_max - bbox.lon_min) * KM_PER_DEG * math.cos(math.radians(anchor_lat))
    n_rows = max(1, math.ceil(span_ns_km / cell_km - _EDGE_EPS))
    n_cols = max(1, math.ceil(span_ew_km / cell_km - _EDGE_EPS))
    grid = Grid(
        origin_lat=bbox.lat_min,
        origin_lon=bbox.lon_min,
        anchor_lat=anchor_lat,
        cell_km=float(cell_km),
        n_rows=n_rows,
        n_cols=n_cols,
        mask=np.ones((n_rows, n_cols), dtype=bool),
    )
    if mask_polygon is not None:
        mask = np.zeros((n_rows, n_cols), dtype=bool)
        for c in grid.cells():
            mask[c.row, c.col] = _point_in_polygon(*grid.cell_center(c), mask_polygon)
        grid = Grid(grid.origin_lat, grid.origin_lon, grid.anchor_lat,
                    grid.cell_km, grid.n_rows, grid.n_cols, mask)
    return grid


def cell_of(grid: Grid, lat: float, lon: float) -> CellId:
    """Cell containing a point; boundary points go to the higher-index cell.

    Total on the grid's bbox: the far north/east edges map into the last
    row/column.
    """
    fr = (lat - grid.origin_lat) / grid.deg_per_cell_lat + _EDGE_EPS
    fc = (lon - grid.origin_lon) / grid.deg_per_cell_lon + _EDGE_EPS
    if fr < 0 or fc < 0 or fr > grid.n_rows + _EDGE_EPS or fc > grid.n_cols + _EDGE_EPS:
        raise OutOfBoundsError(f"point ({lat}, {lon}) outside grid bbox")
    row = min(int(fr), grid.n_rows - 1)
    col = min(int(fc), grid.n_cols - 1)
    return CellId(row, col)


@lru_cache(maxsize=None)
def neighbor_offsets(j: int) -> tuple[tuple[int, int], ...]:
    """Lattice offsets (dr, dc) with 0 < euclidean distance <= j, sorted."""
    if not 1 <= j <= 5:
        raise InvalidInputError(f"neighborhood radius must be in 1..5, got {j}")
    offs = [
        (dr, dc)
        for dr in range(-j, j + 1)
        for dc in range(-j, j + 1)
        if (dr, dc) != (0, 0) and dr * dr + dc * dc <= j * j
    ]
    return tuple(sorted(offs))


def neighbors(grid: Grid, c: CellId, j: int) -> set[CellId]:
    """Cells within Euclidean lattice distance j of c, excluding c, clipped
    to the grid."""
    if not grid.contains(c):
        raise OutOfBoundsError(f"cell {c} outside {grid.n_rows}x{grid.n_cols} grid")
    out = set()
    for dr, dc in neighbor_offsets(j):
        r, col = c.row + dr, c.col + dc
        if 0 <= r < grid.n_rows and 0 <= col < grid.n_cols:
            out.add(CellId(r, col))
    return out


def _point_in_polygon(lat: float, lon: float, polygon) -> bool:
    """Ray-casting point-in-polygon test on (lat, lon) vertices."""
    inside = False
    n = len(polygon)
    for i in range(n):
        la1, lo1 = polygon[i]
        la2, lo2 = polygon[(i + 1) % n]
        if (lo1 > lon) != (lo2 > lon):
            t = (lon - lo1) / (lo2 - lo1)
            if lat < la1 + t * (la2 - la1):
                inside = not inside
    return inside


def save_grid(grid: Grid, path) -> None:
    Path(path).write_text(json.dumps(grid.to_dict(), sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def load_grid(path) -> Grid:
    return Grid.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
