"""Per-cell feature construction: 11 variables x 10 histogram bins plus
5 neighborhood-presence and 5 neighborhood-count features (120 total),
and the binary conflict label.

Histogram bins are 10 equal widths between the dataset-wide min and max of
each variable; a cell's bin value is the fraction of its monthly samples
falling in that bin. Bins are half-open [lo, hi) except the last, which is
closed so the dataset maximum lands in bin 10.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, MissingVariableError, OutOfBoundsError
from .grid import CellId, Grid, cell_of, neighbor_offsets
from .ingest import VARIABLES, CellSeries, ConflictEvent, Window

log = logging.getLogger(__name__)

N_BINS = 10
NEIGHBOR_RADII = (1, 2, 3, 4, 5)

HIST_FEATURE_NAMES = tuple(f"{v}{b}" for v in VARIABLES for b in range(1, N_BINS + 1))
PRESENCE_FEATURE_NAMES = tuple(f"NBRP{j}" for j in NEIGHBOR_RADII)
COUNT_FEATURE_NAMES = tuple(f"NBRC{j}" for j in NEIGHBOR_RADII)
FEATURE_NAMES = HIST_FEATURE_NAMES + PRESENCE_FEATURE_NAMES + COUNT_FEATURE_NAMES
N_FEATURES = len(FEATURE_NAMES)  # 120

FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass(frozen=True)
class BinEdges:
    """Equal-width bin edges for one variable over the whole dataset."""

    variable: str
    lo: float
    hi: float
    n_bins: int = N_BINS

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_bins

    @property
    def degenerate(self) -> bool:
        return self.hi <= self.lo

    def edges(self) -> list[float]:
        return [self.lo + i * self.width for i in range(self.n_bins + 1)]

    def bin_of(self, value: float) -> tuple[int, bool]:
        """0-based bin index and whether the value had to be clamped.

        Degenerate edges (constant variable) send all mass to bin 1.
        """
        if self.degenerate:
            return 0, False
        if value < self.lo:
            return 0, True
        if value >= self.hi:
            return self.n_bins - 1, value > self.hi
        return min(int((value - self.lo) / self.width), self.n_bins - 1), False


def fit_bin_edges(all_series: list[CellSeries],
                  variables=VARIABLES) -> dict[str, BinEdges]:
    """Dataset-wide min/max per variable (all cells, all timestamps)."""
    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    for s in all_series:
        if s.variable not in variables or not s.samples:
            continue
        vals = s.values()
        lo[s.variable] = min(lo.get(s.variable, np.inf), float(vals.min()))
        hi[s.variable] = max(hi.get(s.variable, -np.inf), float(vals.max()))
    out = {}
    for var in variables:
        if var not in lo:
            raise MissingVariableError(f"no samples for variable {var}")
        out[var] = BinEdges(variable=var, lo=lo[var], hi=hi[var])
    return out


def histogram_features(series: CellSeries, edges: BinEdges) -> np.ndarray:
    """Fraction of the cell's samples per bin; all-zero for an empty series.

    Samples outside [lo, hi] (possible only when edges were fitted on a
    different dataset) are clamped into the boundary bin and counted in a
    warning.
    """
    if series.variable != edges.variable:
        raise InvalidInputError(
            f"edges fitted for {edges.variable}, series is {series.variable}")
    out = np.zeros(edges.n_bins, dtype=float)
    if not series.samples:
        return out
    n_clamped = 0
    for _, v in series.samples:
        idx, clamped = edges.bin_of(v)
        out[idx] += 1.0
        n_clamped += clamped
    if n_clamped:
        log.warning("%d sample(s) of %s outside fitted range [%g, %g]; clamped",
                    n_clamped, series.variable, edges.lo, edges.hi)
    return out / len(series.samples)


def neighbor_features(grid: Grid, conflict_counts: np.ndarray,
                      c: CellId) -> tuple[np.ndarray, np.ndarray]:
    """(presence booleans, conflict counts) over nested neighborhoods j=1..5.

    conflict_counts is an (n_rows, n_cols) integer array covering every
    grid cell.
    """
    if conflict_counts.shape != (grid.n_rows, grid.n_cols):
        raise InvalidInputError("conflict_counts shape must match the grid")
    counts = np.zeros(len(NEIGHBOR_RADII), dtype=int)
    for k, j in enumerate(NEIGHBOR_RADII):
        total = 0
        for dr, dc in neighbor_offsets(j):
            r, col = c.row + dr, c.col + dc
            if 0 <= r < grid.n_rows and 0 <= col < grid.n_cols:
                total += int(conflict_counts[r, col])
        counts[k] = total
    return counts > 0, counts


def count_events_per_cell(grid: Grid, events: list[ConflictEvent],
                          window: Window) -> np.ndarray:
    """Events per cell within the window; events outside the grid or the
    country mask are logged and skipped."""
    window.validate()
    counts = np.zeros((grid.n_rows, grid.n_cols), dtype=int)
    n_skipped = 0
    for ev in events:
        if not window.contains(ev.date):
            continue
        try:
            cell = cell_of(grid, ev.lat, ev.lon)
        except OutOfBoundsError:
            n_skipped += 1
            continue
        if not grid.mask[cell.row, cell.col]:
            n_skipped += 1
            continue
        counts[cell.row, cell.col] += 1
    if n_skipped:
        log.warning("skipped %d event(s) outside the grid or country mask", n_skipped)
    return counts


@dataclass
class FeatureRow:
    """One cell's 120-feature vector and binary conflict label."""

    cell: CellId
    hist: np.ndarray          # 110 floats, 11 variables x 10 bins
    nbr_presence: np.ndarray  # 5 booleans
    nbr_count: np.ndarray     # 5 non-negative ints
    label: int

    def vector(self) -> np.ndarray:
        return np.concatenate([
            self.hist,
            self.nbr_presence.astype(float),
            self.nbr_count.astype(float),
        ])


def assemble_dataset(grid: Grid, series: list[CellSeries],
                     events: list[ConflictEvent], window: Window,
                     edges: dict[str, BinEdges] | None = None) -> list[FeatureRow]:
    """One FeatureRow per masked grid cell, ordered row-major.

    label = 1 iff at least one pastoral event falls in the cell within the
    window; neighbor features use the same window's per-cell event counts.
    """
    window.validate()
    if edges is None:
        edges = fit_bin_edges(series)
    by_cell_var: dict[tuple[CellId, str], CellSeries] = {}
    for s in series:
        key = (s.cell, s.variable)
        if key in by_cell_var:
            raise InvalidInputError(
                f"duplicate series for cell ({s.cell.row},{s.cell.col}) variable {s.variable}")
        by_cell_var[key] = s
    counts = count_events_per_cell(grid, events, window)
    rows = []
    for cell in grid.masked_cells():
        hist = np.empty(len(HIST_FEATURE_NAMES), dtype=float)
        for vi, var in enumerate(VARIABLES):
            s = by_cell_var.get((cell, var))
            if s is None:
                s = CellSeries(cell=cell, variable=var, samples=[])
            hist[vi * N_BINS:(vi + 1) * N_BINS] = histogram_features(s, edges[var])
        presence, nbr_counts = neighbor_features(grid, counts, cell)
        rows.append(FeatureRow(
            cell=cell,
            hist=hist,
            nbr_presence=presence,
            nbr_count=nbr_counts,
            label=int(counts[cell.row, cell.col] > 0),
        ))
    return rows


def to_matrix(rows: list[FeatureRow]) -> tuple[np.ndarray, np.ndarray]:
    """Stack rows into (X, y) for the statistics and learning modules."""
    X = np.stack([r.vector() for r in rows]) if rows else np.empty((0, N_FEATURES))
    y = np.array([r.label for r in rows], dtype=int)
    return X, y


# ---------------------------------------------------------------------------
# serialization

_CSV_HEADER = ("row", "col", "label") + FEATURE_NAMES


def write_dataset_csv(rows: list[FeatureRow], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_CSV_HEADER)
        for r in rows:
            rec = [r.cell.row, r.cell.col, r.label]
            rec.extend(repr(float(v)) for v in r.hist)
            rec.extend(int(v) for v in r.nbr_presence)
            rec.extend(int(v) for v in r.nbr_count)
            w.writerow(rec)


def read_dataset_csv(path) -> list[FeatureRow]:
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != _CSV_HEADER:
            raise InvalidInputError(f"unexpected dataset header in {path}")
        nh = len(HIST_FEATURE_NAMES)
        nj = len(NEIGHBOR_RADII)
        for rec in reader:
            rows.append(FeatureRow(
                cell=CellId(int(rec[0]), int(rec[1])),
                label=int(rec[2]),
                hist=np.array([float(v) for v in rec[3:3 + nh]]),
                nbr_presence=np.array([int(v) for v in rec[3 + nh:3 + nh + nj]], dtype=bool),
                nbr_count=np.array([int(v) for v in rec[3 + nh + nj:3 + nh + 2 * nj]], dtype=int),
            ))
    return rows


def write_bin_edges_json(edges: dict[str, BinEdges], path) -> None:
    d = {var: {"lo": e.lo, "hi": e.hi, "n_bins": e.n_bins} for var, e in edges.items()}
    Path(path).write_text(json.dumps(d, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_bin_edges_json(path) -> dict[str, BinEdges]:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return {var: BinEdges(variable=var, lo=e["lo"], hi=e["hi"], n_bins=e["n_bins"])
            for var, e in d.items()}
