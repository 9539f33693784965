"""Daily rain-gauge parsing and hydrological-year splitting.

Rain rates are held internally in mm/h. A :class:`DailySeries` is stored as
a start date plus one value per consecutive day; missing days are NaN.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import NamedTuple

import numpy as np

from .errors import IngestError

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24

UNIT_ALIASES = {
    "mm/h": "mm/h",
    "mm-per-hour": "mm/h",
    "mm/hr": "mm/h",
    "mm/day": "mm/day",
    "mm-per-day": "mm/day",
    "mm/d": "mm/day",
}


class DailyRecord(NamedTuple):
    date: date
    value: float | None  # None is the missing marker


@dataclass(frozen=True)
class CsvFormat:
    """How to read a gauge CSV.

    ``date_column``/``value_column`` are either 0-based indices or header
    names. ``has_header=None`` detects a header from the first row.
    """

    date_column: int | str = 0
    value_column: int | str = 1
    has_header: bool | None = None
    date_format: str = "auto"  # "iso", "dmy" or "auto"
    delimiter: str = ","
    decimal: str = "."
    units: str = "mm/h"
    missing_codes: tuple = ("-9999", "")

    def __post_init__(self):
        if self.units not in UNIT_ALIASES:
            raise IngestError(f"unknown units {self.units!r}; expected one of {sorted(UNIT_ALIASES)}")
        if self.date_format not in ("auto", "iso", "dmy"):
            raise IngestError(f"unknown date_format {self.date_format!r}")
        if self.decimal == self.delimiter:
            raise IngestError("decimal separator and delimiter must differ")


@dataclass(frozen=True, eq=False)
class DailySeries:
    station_id: str
    start: date
    values: np.ndarray  # mm/h, NaN where missing

    def __len__(self):
        return len(self.values)

    @property
    def end(self):
        return self.start + timedelta(days=len(self.values) - 1)

    @property
    def records(self):
        return [
            DailyRecord(self.start + timedelta(days=k), None if math.isnan(v) else float(v))
            for k, v in enumerate(self.values)
        ]

    def __eq__(self, other):
        if not isinstance(other, DailySeries):
            return NotImplemented
        return (
            self.station_id == other.station_id
            and self.start == other.start
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    @classmethod
    def from_records(cls, station_id, records):
        """Build a series from ``(date, value)`` pairs, filling date gaps as missing."""
        records = list(records)
        if not records:
            raise IngestError("no records")
        for prev, cur in zip(records, records[1:]):
            if cur[0] == prev[0]:
                raise IngestError(f"duplicate date {cur[0].isoformat()}")
            if cur[0] < prev[0]:
                raise IngestError(f"non-monotone dates: {cur[0].isoformat()} after {prev[0].isoformat()}")
        start = records[0][0]
        values = np.full((records[-1][0] - start).days + 1, np.nan)
        for d, v in records:
            values[(d - start).days] = np.nan if v is None else v
        return cls(station_id, start, values)


class HydroYear:
    """One September-to-August year of rain rates (mm/h), missing days filled."""

    __slots__ = ("start_year", "values", "missing_count")

    def __init__(self, start_year, values, missing_count=0):
        values = np.asarray(values, dtype=np.float64)
        expected = hydro_year_length(start_year)
        if len(values) != expected:
            raise IngestError(f"hydrological year {start_year} needs {expected} values, got {len(values)}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise IngestError(f"hydrological year {start_year} has negative or non-finite values")
        self.start_year = int(start_year)
        self.values = values
        self.missing_count = int(missing_count)

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"HydroYear({self.start_year}, n={len(self.values)}, missing={self.missing_count})"

    @property
    def first_day(self):
        return date(self.start_year, 9, 1)

    def to_dict(self):
        return {
            "start_year": self.start_year,
            "missing_count": self.missing_count,
            "values": [float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["start_year"], data["values"], data.get("missing_count", 0))


def hydro_year_length(start_year):
    return (date(start_year + 1, 9, 1) - date(start_year, 9, 1)).days


@dataclass(frozen=True)
class MissingPolicy:
    max_missing_fraction: float = 0.05
    fill: str = "zero"

    def __post_init__(self):
        if not 0 <= self.max_missing_fraction <= 1:
            raise IngestError("max_missing_fraction must be in [0, 1]")
        if self.fill != "zero":
            raise IngestError(f"unsupported fill policy {self.fill!r}")


class SplitResult(NamedTuple):
    years: list
    excluded: list


# ---------------------------------------------------------------------------
# parsing


def _parse_date(text, fmt):
    text = text.strip()
    if fmt in ("iso", "auto"):
        try:
            return date.fromisoformat(text)
        except ValueError:
            if fmt == "iso":
                raise
    return datetime.strptime(text, "%d/%m/%Y").date()


def _column_index(spec, header, what):
    if isinstance(spec, int):
        return spec
    if header is None:
        raise IngestError(f"{what} column {spec!r} given by name but the file has no header")
    try:
        return [h.strip() for h in header].index(spec)
    except ValueError:
        raise IngestError(f"{what} column {spec!r} not found in header {header}") from None


def parse_daily_csv(path, fmt=None, station_id=None):
    """Read a daily gauge file into a :class:`DailySeries`.

    Values in mm/day are divided by 24. Dates missing from the file become
    missing records.
    """
    fmt = fmt or CsvFormat()
    units = UNIT_ALIASES[fmt.units]
    numeric_missing = set()
    for code in fmt.missing_codes:
        try:
            numeric_missing.add(float(code))
        except ValueError:
            pass
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = list(enumerate(csv.reader(fh, delimiter=fmt.delimiter), start=1))
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read file ({exc})", path) from None

    rows = [(n, row) for n, row in lines if row and any(c.strip() for c in row) and not row[0].startswith("#")]
    if not rows:
        raise IngestError("file contains no data rows", path)

    header = None
    has_header = fmt.has_header
    if has_header is None:
        first = rows[0][1]
        probe = first[fmt.date_column] if isinstance(fmt.date_column, int) and fmt.date_column < len(first) else ""
        try:
            _parse_date(probe, fmt.date_format)
            has_header = False
        except ValueError:
            has_header = True
    if has_header:
        header = rows[0][1]
        rows = rows[1:]
    di = _column_index(fmt.date_column, header, "date")
    vi = _column_index(fmt.value_column, header, "value")
    if not rows:
        raise IngestError("file contains no data rows", path)

    records = []
    for line, row in rows:
        if len(row) <= max(di, vi):
            raise IngestError(f"expected at least {max(di, vi) + 1} fields, got {len(row)}", path, line)
        try:
            day = _parse_date(row[di], fmt.date_format)
        except ValueError:
            raise IngestError(f"unparsable date {row[di]!r}", path, line) from None
        raw = row[vi].strip()
        if raw in fmt.missing_codes:
            value = None
        else:
            try:
                value = float(raw.replace(fmt.decimal, ".") if fmt.decimal != "." else raw)
            except ValueError:
                raise IngestError(f"unparsable value {raw!r}", path, line) from None
            if value in numeric_missing:
                value = None
            elif not math.isfinite(value) or value < 0:
                raise IngestError(f"rain value must be finite and >= 0, got {raw!r}", path, line)
            elif units == "mm/day":
                value = value / HOURS_PER_DAY
        if records:
            prev = records[-1][0]
            if day == prev:
                raise IngestError(f"duplicate date {day.isoformat()}", path, line)
            if day < prev:
                raise IngestError(f"non-monotone dates: {day.isoformat()} after {prev.isoformat()}", path, line)
        records.append((day, value))

    series = DailySeries.from_records(station_id or "", records)
    gaps = len(series) - len(records)
    if gaps:
        logger.info("%s: materialized %d missing days", path, gaps)
    return series


def write_daily_csv(series, path):
    """Write a series in mm/h with ISO dates; missing days are empty fields."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "rain_rate_mm_h"])
        for k, v in enumerate(series.values):
            w.writerow([(series.start + timedelta(days=k)).isoformat(), "" if math.isnan(v) else repr(float(v))])


# ---------------------------------------------------------------------------
# hydrological years


def split_hydro_years(series, policy=None):
    """Cut a series into complete September 1 to August 31 years.

    Returns
    -------
    SplitResult
        ``years`` in chronological order and ``excluded``, a list of
        ``{year, missing_count, reason}`` dicts for years dropped because
        their missing fraction exceeds the policy threshold.
    """
    policy = policy or MissingPolicy()
    first = series.start.year if series.start <= date(series.start.year, 9, 1) else series.start.year + 1
    years, excluded = [], []
    y = first
    while date(y + 1, 8, 31) <= series.end:
        offset = (date(y, 9, 1) - series.start).days
        chunk = series.values[offset : offset + hydro_year_length(y)]
        missing = int(np.count_nonzero(np.isnan(chunk)))
        fraction = missing / len(chunk)
        if fraction > policy.max_missing_fraction:
            excluded.append(
                {
                    "year": y,
                    "missing_count": missing,
                    "reason": f"missing fraction {fraction:.4f} exceeds {policy.max_missing_fraction}",
                }
            )
            logger.warning("excluding hydrological year %d: %d missing days", y, missing)
        else:
            years.append(HydroYear(y, np.where(np.isnan(chunk), 0.0, chunk), missing))
        y += 1
    if y == first:
        raise IngestError(
            f"series {series.start.isoformat()}..{series.end.isoformat()} is shorter than one full hydrological year"
        )
    return SplitResult(years, excluded)


# ---------------------------------------------------------------------------
# year store


def save_years(path, years, excluded=(), provenance=None):
    doc = {
        "kind": "hydro_years",
        "provenance": provenance or {},
        "excluded": list(excluded),
        "years": [y.to_dict() for y in years],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_years(path):
    """Read a year store; returns ``(years, excluded)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IngestError(f"cannot read year store ({exc})", path) from None
    except json.JSONDecodeError as exc:
        raise IngestError(f"corrupt year store ({exc})", path) from None
    if not isinstance(doc, dict) or doc.get("kind") != "hydro_years":
        raise IngestError("not a hydrological-year store", path)
    try:
        years = [HydroYear.from_dict(d) for d in doc["years"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestError(f"malformed year entry ({exc})", path) from None
    labels = [y.start_year for y in years]
    if labels != sorted(set(labels)):
        raise IngestError("year labels must be strictly increasing", path)
    return years, doc.get("excluded", [])
