"""Raster grid geometry and point/zone-to-grid transfer.

The grid is row-major with row 0 at the southern edge: cell (r, c)
covers the half-open square [x0 + c*s, x0 + (c+1)*s) x
[y0 + r*s, y0 + (r+1)*s).  Raw layers hold real values with NaN as
nodata.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import shapely

REDUCERS = ("sum", "mean", "max")


@dataclass(frozen=True)
class GridSpec:
    """Rectangular analysis grid in planar meters."""

    origin_x: float
    origin_y: float
    cell_size: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid needs at least one cell, got {self.rows}x{self.cols}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def cell_of(self, x: float, y: float) -> "tuple[int, int] | None":
        """(row, col) containing the point, or None if outside."""
        c = int(np.floor((x - self.origin_x) / self.cell_size))
        r = int(np.floor((y - self.origin_y) / self.cell_size))
        if 0 <= r < self.rows and 0 <= c < self.cols:
            return (r, c)
        return None

    def cell_center(self, r: int, c: int) -> tuple[float, float]:
        return (
            self.origin_x + (c + 0.5) * self.cell_size,
            self.origin_y + (r + 0.5) * self.cell_size,
        )

    def cell_polygon(self, r: int, c: int) -> list[list[float]]:
        """Cell corner ring (closed, counterclockwise)."""
        x0 = self.origin_x + c * self.cell_size
        y0 = self.origin_y + r * self.cell_size
        x1, y1 = x0 + self.cell_size, y0 + self.cell_size
        return [[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]

    def to_dict(self) -> dict:
        return {
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "cell_size": self.cell_size,
            "rows": self.rows,
            "cols": self.cols,
        }


@dataclass(frozen=True, eq=False)
class RawLayer:
    """Per-cell real values (NaN = nodata) with free-form provenance."""

    grid: GridSpec
    values: np.ndarray
    provenance: tuple = ()

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"layer shape {values.shape} does not match grid {self.grid.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass
class RasterizeReport:
    """How many points landed in the grid and which fell outside."""

    points_binned: int = 0
    out_of_bounds: list = field(default_factory=list)

    @property
    def points_out_of_bounds(self) -> int:
        return len(self.out_of_bounds)


def rasterize(
    points: Sequence[tuple[float, float, float]],
    grid: GridSpec,
    reducer: str = "sum",
) -> tuple[RawLayer, RasterizeReport]:
    """Bin (x, y, value) points to grid cells and reduce per cell.

    Cells that receive no point are nodata.  Out-of-grid points are
    collected in the report rather than raised.
    """
    if reducer not in REDUCERS:
        raise ValueError(f"unknown reducer {reducer!r}, expected one of {REDUCERS}")
    report = RasterizeReport()
    if len(points) == 0:
        values = np.full(grid.shape, np.nan)
        return RawLayer(grid, values), report

    pts = np.asarray(points, dtype=float)
    cols = np.floor((pts[:, 0] - grid.origin_x) / grid.cell_size).astype(np.int64)
    rows = np.floor((pts[:, 1] - grid.origin_y) / grid.cell_size).astype(np.int64)
    inside = (rows >= 0) & (rows < grid.rows) & (cols >= 0) & (cols < grid.cols)
    report.out_of_bounds = [int(i) for i in np.nonzero(~inside)[0]]
    report.points_binned = int(inside.sum())

    flat = rows[inside] * grid.cols + cols[inside]
    vals = pts[inside, 2]
    n_cells = grid.rows * grid.cols
    counts = np.bincount(flat, minlength=n_cells).astype(float)
    if reducer == "sum":
        acc = np.bincount(flat, weights=vals, minlength=n_cells)
    elif reducer == "mean":
        acc = np.bincount(flat, weights=vals, minlength=n_cells)
        acc = np.divide(acc, counts, out=np.zeros(n_cells), where=counts > 0)
    else:  # max
        acc = np.full(n_cells, -np.inf)
        np.maximum.at(acc, flat, vals)
    # bincount of an empty index array comes back integer-typed
    acc = np.asarray(acc, dtype=float)
    acc[counts == 0] = np.nan
    return RawLayer(grid, acc.reshape(grid.shape)), report


def paint_zones(
    zone_polygons: Sequence,
    zone_values: Mapping[str, float],
    grid: GridSpec,
) -> RawLayer:
    """Paint per-zone values onto cells by cell-center containment.

    Zones are visited in zone_id order; the first zone covering a cell
    center wins, so overlaps resolve deterministically.  Cells whose
    center no valued zone covers are nodata.
    """
    values = np.full(grid.shape, np.nan)
    rr, cc = np.meshgrid(np.arange(grid.rows), np.arange(grid.cols), indexing="ij")
    xs = grid.origin_x + (cc + 0.5) * grid.cell_size
    ys = grid.origin_y + (rr + 0.5) * grid.cell_size
    centers = shapely.points(xs.ravel(), ys.ravel())
    unassigned = np.ones(grid.rows * grid.cols, dtype=bool)
    for zone in sorted(zone_polygons, key=lambda z: z.zone_id):
        if zone.zone_id not in zone_values:
            continue
        covered = shapely.covers(zone.polygon, centers) & unassigned
        values.ravel()[covered] = zone_values[zone.zone_id]
        unassigned &= ~covered
    return RawLayer(grid, values)
