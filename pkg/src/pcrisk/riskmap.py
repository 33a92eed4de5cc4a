"""Risk-surface rendering: per-cell conflict probabilities to GeoJSON
polygons, a binary PGM raster, and a flat CSV.

Rendering is a pure function of the surface, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ValidationError
from .grid import CellId, Grid

#: 5-stop linear color scale, low risk to high risk
COLOR_STOPS = ("#2c7bb6", "#abd9e9", "#ffffbf", "#fdae61", "#d7191c")


@dataclass(frozen=True)
class RiskSurface:
    """Per-cell conflict probabilities on a grid."""

    grid: Grid
    values: np.ndarray  # (n_rows, n_cols) floats in [0, 1]
    model_id: str = ""
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.values.shape != (self.grid.n_rows, self.grid.n_cols):
            raise InvalidInputError("values shape must match the grid")
        masked = self.values[self.grid.mask]
        if masked.size and (np.min(masked) < 0.0 or np.max(masked) > 1.0):
            raise ValidationError("risk values must lie in [0, 1]")


def risk_color(risk: float) -> str:
    """Linear interpolation through the 5 color stops."""
    if not 0.0 <= risk <= 1.0:
        raise ValidationError(f"risk {risk} outside [0, 1]")
    segments = len(COLOR_STOPS) - 1
    pos = risk * segments
    i = min(int(pos), segments - 1)
    t = pos - i
    c0 = _hex_to_rgb(COLOR_STOPS[i])
    c1 = _hex_to_rgb(COLOR_STOPS[i + 1])
    rgb = tuple(int(round(a + t * (b - a))) for a, b in zip(c0, c1))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _hex_to_rgb(h: str) -> tuple[int, int, int]:
    return (int(h[1:3], 16), int(h[3:5], 16), int(h[5:7], 16))


def surface_from_rows(grid: Grid, cells: list[CellId], scores,
                      model_id: str = "") -> RiskSurface:
    """Scatter per-cell scores into a full-grid surface (unmasked cells 0)."""
    values = np.zeros((grid.n_rows, grid.n_cols))
    for cell, s in zip(cells, scores):
        values[cell.row, cell.col] = float(s)
    return RiskSurface(grid=grid, values=values, model_id=model_id)


def render_geojson(surface: RiskSurface, path) -> None:
    """One polygon feature per masked cell with risk and color properties.

    Rings are counterclockwise (lon, lat), per RFC 7946.
    """
    surface.validate()
    g = surface.grid
    features = []
    for cell in g.masked_cells():
        risk = float(surface.values[cell.row, cell.col])
        lat_s, lon_w, lat_n, lon_e = g.cell_bounds(cell)
        ring = [[lon_w, lat_s], [lon_e, lat_s], [lon_e, lat_n],
                [lon_w, lat_n], [lon_w, lat_s]]
        features.append({
            "type": "Feature",
            "properties": {
                "row": cell.row,
                "col": cell.col,
                "risk": risk,
                "color": risk_color(risk),
            },
            "geometry": {"type": "Polygon", "coordinates": [ring]},
        })
    doc = {
        "type": "FeatureCollection",
        "properties": {"model_id": surface.model_id, "cell_km": g.cell_km},
        "features": features,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def render_pgm(surface: RiskSurface, path) -> None:
    """Binary (P5) graymap, one pixel per cell, intensity round(255 * risk),
    northernmost grid row first; cells outside the mask render black."""
    surface.validate()
    g = surface.grid
    shades = np.rint(255.0 * np.where(g.mask, surface.values, 0.0)).astype(np.uint8)
    header = f"P5\n{g.n_cols} {g.n_rows}\n255\n".encode("ascii")
    Path(path).write_bytes(header + shades[::-1].tobytes())


def render_csv(surface: RiskSurface, path) -> None:
    """row,col,risk for every masked cell."""
    surface.validate()
    g = surface.grid
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "risk"])
        for cell in g.masked_cells():
            w.writerow([cell.row, cell.col, repr(float(surface.values[cell.row, cell.col]))])
