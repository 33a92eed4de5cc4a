"""Conflict-event and environmental-series ingestion, plus a synthetic
desk-scale country generator.

Event CSVs follow the ACLED export shape (header row, configurable column
names, ISO-8601 dates). Series CSVs use either the canonical cell-indexed
layout ``cell_row,cell_col,variable,timestamp,value`` or a ``lat,lon,...``
variant that is mapped through the grid. Keyword rules for pastoral
filtering live in a JSON file so the rule set stays user-auditable.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateTimestampError,
    InvalidInputError,
    SchemaError,
)
from .grid import CellId, Grid, cell_of

log = logging.getLogger(__name__)

#: canonical variable order; histogram features follow this ordering
VARIABLES = (
    "LAI", "GRN", "SSW", "SST", "LNDEV",
    "WS10M_MAX", "WS10M_MIN", "RH2M", "PRECTOTCORR", "T2M_MAX", "T2M_MIN",
)


@dataclass(frozen=True)
class Window:
    """Inclusive study window [start, end]."""

    start: dt.date
    end: dt.date

    def validate(self) -> None:
        if self.start > self.end:
            raise InvalidInputError(f"inverted window: {self.start} > {self.end}")

    def contains(self, day: dt.date) -> bool:
        return self.start <= day <= self.end

    @property
    def months(self) -> int:
        return (self.end.year - self.start.year) * 12 + (self.end.month - self.start.month) + 1


@dataclass(frozen=True)
class ConflictEvent:
    date: dt.date
    lat: float
    lon: float
    country: str
    notes: str
    is_pastoral: bool = False


@dataclass(frozen=True)
class EventSchema:
    """Maps logical event fields to CSV column names (ACLED defaults)."""

    date: str = "event_date"
    lat: str = "latitude"
    lon: str = "longitude"
    country: str = "country"
    notes: str = "notes"


@dataclass
class CellSeries:
    """Time-stamped observations of one variable for one cell."""

    cell: CellId
    variable: str
    samples: list  # [(date, float)], strictly increasing timestamps

    def validate(self) -> None:
        if self.variable not in VARIABLES:
            raise InvalidInputError(f"unknown variable {self.variable!r}")
        last = None
        for ts, v in self.samples:
            if last is not None and ts <= last:
                raise DuplicateTimestampError(
                    f"cell ({self.cell.row},{self.cell.col}) variable {self.variable}: "
                    f"timestamp {ts} not after {last}")
            if not math.isfinite(v):
                raise InvalidInputError(
                    f"non-finite value for {self.variable} at {ts} in cell "
                    f"({self.cell.row},{self.cell.col})")
            last = ts

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.samples], dtype=float)


# ---------------------------------------------------------------------------
# event parsing and pastoral filtering


def parse_events(path, schema: EventSchema = EventSchema()) -> list[ConflictEvent]:
    """Parse a conflict-event CSV.

    Rows with unparseable coordinates or dates are logged and skipped,
    never silently dropped. A missing mapped column raises SchemaError.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            log.warning("events file %s is empty", path)
            return []
        for col in (schema.date, schema.lat, schema.lon, schema.country, schema.notes):
            if col not in reader.fieldnames:
                raise SchemaError(f"events file {path} lacks mapped column {col!r}")
        events = []
        n_skipped = 0
        for lineno, row in enumerate(reader, start=2):
            try:
                events.append(ConflictEvent(
                    date=dt.date.fromisoformat(row[schema.date].strip()),
                    lat=float(row[schema.lat]),
                    lon=float(row[schema.lon]),
                    country=row[schema.country].strip(),
                    notes=row[schema.notes],
                ))
            except (ValueError, AttributeError, TypeError) as exc:
                n_skipped += 1
                log.warning("skipping %s line %d: %s", path.name, lineno, exc)
    if not events and n_skipped == 0:
        log.warning("events file %s has a header but no rows", path)
    if n_skipped:
        log.warning("skipped %d unparseable event rows in %s", n_skipped, path.name)
    return events


@dataclass(frozen=True)
class KeywordRules:
    """Case-insensitive include/exclude patterns over the notes column.

    Patterns are regular expressions; plain substrings work as-is.
    """

    include: tuple = ()
    exclude: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_inc", tuple(re.compile(p, re.IGNORECASE) for p in self.include))
        object.__setattr__(self, "_exc", tuple(re.compile(p, re.IGNORECASE) for p in self.exclude))

    def matches(self, notes: str) -> bool:
        if not any(rx.search(notes) for rx in self._inc):
            return False
        return not any(rx.search(notes) for rx in self._exc)


def default_keyword_rules() -> KeywordRules:
    text = resources.files("pcrisk.data").joinpath("default_keyword_rules.json").read_text("utf-8")
    d = json.loads(text)
    return KeywordRules(include=tuple(d["include"]), exclude=tuple(d.get("exclude", ())))


def load_keyword_rules(path) -> KeywordRules:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if "include" not in d or not d["include"]:
        raise SchemaError(f"keyword rules {path} must define a non-empty 'include' list")
    return KeywordRules(include=tuple(d["include"]), exclude=tuple(d.get("exclude", ())))


def filter_pastoral(events, window: Window, rules: KeywordRules | None = None) -> list[ConflictEvent]:
    """Keep events inside the window whose notes match the include rules
    and none of the exclude rules; marks survivors is_pastoral."""
    window.validate()
    if rules is None:
        rules = default_keyword_rules()
    if not rules.include:
        raise InvalidInputError("keyword rules must contain at least one include pattern")
    out = []
    for ev in events:
        if not window.contains(ev.date):
            continue
        if rules.matches(ev.notes):
            out.append(ev if ev.is_pastoral else
                       ConflictEvent(ev.date, ev.lat, ev.lon, ev.country, ev.notes, True))
    return out


# ---------------------------------------------------------------------------
# series parsing

_CANONICAL_COLS = ("cell_row", "cell_col", "timestamp", "value")
_LATLON_COLS = ("lat", "lon", "timestamp", "value")


def parse_series(path, variable: str, grid: Grid | None = None) -> list[CellSeries]:
    """Parse one variable's series CSV into per-cell sorted series.

    Accepts the cell-indexed layout or the lat/lon layout (the latter
    requires a grid to map coordinates through cell_of). A 'variable'
    column, when present, filters rows to the requested variable.
    """
    if variable not in VARIABLES:
        raise InvalidInputError(f"unknown variable {variable!r}")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or ()
        if all(c in cols for c in _CANONICAL_COLS):
            by_cell_layout = True
        elif all(c in cols for c in _LATLON_COLS):
            if grid is None:
                raise SchemaError(f"series file {path} uses lat/lon layout; a grid is required")
            by_cell_layout = False
        else:
            raise SchemaError(
                f"series file {path} needs columns {_CANONICAL_COLS} or {_LATLON_COLS}")
        has_var_col = "variable" in cols
        samples: dict[CellId, list] = {}
        for row in reader:
            if has_var_col and row["variable"].strip() != variable:
                continue
            if by_cell_layout:
                cell = CellId(int(row["cell_row"]), int(row["cell_col"]))
            else:
                cell = cell_of(grid, float(row["lat"]), float(row["lon"]))
            ts = dt.date.fromisoformat(row["timestamp"].strip())
            samples.setdefault(cell, []).append((ts, float(row["value"])))
    out = []
    for cell in sorted(samples):
        rows = sorted(samples[cell])
        for (t1, _), (t2, _) in zip(rows, rows[1:]):
            if t1 == t2:
                raise DuplicateTimestampError(
                    f"duplicate timestamp {t1} for cell ({cell.row},{cell.col}) "
                    f"variable {variable} in {path.name}")
        s = CellSeries(cell=cell, variable=variable, samples=rows)
        s.validate()
        out.append(s)
    return out


def write_series_csv(series: list[CellSeries], path) -> None:
    """Canonical cell-indexed series CSV; floats round-trip bit-exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell_row", "cell_col", "variable", "timestamp", "value"])
        for s in series:
            for ts, v in s.samples:
                w.writerow([s.cell.row, s.cell.col, s.variable, ts.isoformat(), repr(v)])


# ---------------------------------------------------------------------------
# synthetic country generator

#: per-variable (cell-mean low, cell-mean high, seasonal amplitude, monthly noise sd)
VARIABLE_PROFILES = {
    "LAI": (0.5, 4.5, 0.6, 0.3),
    "GRN": (0.15, 0.85, 0.08, 0.04),
    "SSW": (30.0, 70.0, 5.0, 4.0),
    "SST": (18.0, 40.0, 4.0, 1.5),
    "LNDEV": (1.0, 8.0, 1.0, 0.5),
    "WS10M_MAX": (4.0, 16.0, 2.0, 1.0),
    "WS10M_MIN": (0.5, 6.0, 1.0, 0.5),
    "RH2M": (25.0, 85.0, 8.0, 4.0),
    "PRECTOTCORR": (20.0, 250.0, 40.0, 15.0),
    "T2M_MAX": (22.0, 42.0, 3.0, 1.5),
    "T2M_MIN": (8.0, 26.0, 3.0, 1.5),
}

# variables that cannot physically go negative / above 1
_FLOOR_ZERO = {"LAI", "GRN", "SSW", "LNDEV", "WS10M_MAX", "WS10M_MIN", "RH2M", "PRECTOTCORR"}
_CAP_ONE = {"GRN"}


@dataclass(frozen=True)
class PlantedEffect:
    """Ground truth planted into a synthetic country.

    Cells are split into a risk stratum (fraction risk_fraction) and a
    background stratum. The planted variable's cell-level mean is drawn
    near low_mean inside the stratum and near high_mean outside, so the
    stratum is recoverable from the data. Conflict probability follows
    base_rate outside the stratum and the odds-ratio-scaled rate inside.
    """

    variable: str = "SSW"
    odds_ratio: float = 20.0
    risk_fraction: float = 0.3
    base_rate: float = 0.05
    low_mean: float = 22.0
    high_mean: float = 62.0
    regime_sd: float = 3.0
    extra_events_rate: float = 1.5  # Poisson rate on top of the first event

    def validate(self) -> None:
        if self.variable not in VARIABLES:
            raise InvalidInputError(f"unknown planted variable {self.variable!r}")
        if not 0.0 <= self.base_rate < 1.0:
            raise InvalidInputError("base_rate must be in [0, 1)")
        if self.odds_ratio <= 0:
            raise InvalidInputError("odds_ratio must be positive")
        if not 0.0 <= self.risk_fraction <= 1.0:
            raise InvalidInputError("risk_fraction must be in [0, 1]")

    @property
    def risk_rate(self) -> float:
        """Conflict probability inside the risk stratum."""
        if self.base_rate == 0.0:
            return 0.0
        odds = self.odds_ratio * self.base_rate / (1.0 - self.base_rate)
        return odds / (1.0 + odds)

    @property
    def regime_cutpoint(self) -> float:
        """Cell-mean threshold separating the two regimes."""
        return 0.5 * (self.low_mean + self.high_mean)


def month_sequence(start: dt.date, months: int) -> list[dt.date]:
    """First-of-month dates starting at start's month."""
    out = []
    y, m = start.year, start.month
    for _ in range(months):
        out.append(dt.date(y, m, 1))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out


def synth_country(seed: int, grid: Grid, months: int,
                  planted: PlantedEffect = PlantedEffect(),
                  start: dt.date = dt.date(2015, 1, 1),
                  country: str = "Synthia",
                  ) -> tuple[list[CellSeries], list[ConflictEvent]]:
    """Generate seasonal series for all 11 variables plus planted conflicts.

    Deterministic for a fixed seed: draws follow a fixed order (stratum,
    then per-variable cell means and monthly values, then events).
    """
    if months < 1:
        raise InvalidInputError("months must be >= 1")
    planted.validate()
    rng = np.random.default_rng(seed)
    cells = list(grid.masked_cells())
    n = len(cells)
    dates = month_sequence(start, months)
    t = np.arange(months, dtype=float)

    in_stratum = rng.random(n) < planted.risk_fraction

    series: list[CellSeries] = []
    for var in VARIABLES:
        lo, hi, amp, sd = VARIABLE_PROFILES[var]
        if var == planted.variable:
            means = np.where(
                in_stratum,
                rng.normal(planted.low_mean, planted.regime_sd, size=n),
                rng.normal(planted.high_mean, planted.regime_sd, size=n),
            )
        else:
            means = rng.uniform(lo, hi, size=n)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=n)
        noise = rng.normal(0.0, sd, size=(n, months))
        seasonal = amp * np.sin(2.0 * math.pi * t[None, :] / 12.0 + phases[:, None])
        values = means[:, None] + seasonal + noise
        if var in _FLOOR_ZERO:
            values = np.maximum(values, 0.0)
        if var in _CAP_ONE:
            values = np.minimum(values, 1.0)
        for i, cell in enumerate(cells):
            series.append(CellSeries(
                cell=cell, variable=var,
                samples=list(zip(dates, values[i].tolist()))))

    p_hot, p_cold = planted.risk_rate, planted.base_rate
    events: list[ConflictEvent] = []
    for i, cell in enumerate(cells):
        p = p_hot if in_stratum[i] else p_cold
        if rng.random() >= p:
            continue
        n_events = 1 + rng.poisson(planted.extra_events_rate)
        lat_s, lon_w, lat_n, lon_e = grid.cell_bounds(cell)
        for _ in range(n_events):
            month = dates[int(rng.integers(0, months))]
            events.append(ConflictEvent(
                date=month.replace(day=15),
                lat=float(rng.uniform(lat_s, lat_n)),
                lon=float(rng.uniform(lon_w, lon_e)),
                country=country,
                notes="Herders clashed with farmers over access to grazing land.",
                is_pastoral=True,
            ))
    return series, events


def planted_risk_cells(series: list[CellSeries], planted: PlantedEffect) -> set[CellId]:
    """Recover the risk stratum from data: cells whose planted-variable mean
    falls below the regime cutpoint."""
    cut = planted.regime_cutpoint
    out = set()
    for s in series:
        if s.variable == planted.variable and s.samples:
            if float(s.values().mean()) < cut:
                out.add(s.cell)
    return out
