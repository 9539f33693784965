"""Cluster frequencies over sliding multi-year windows, and their trends."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError, TrendError

GRADIENT_SYMBOLS = {"down": "↘", "down-up": "↘↗", "up-down": "↗↘", "up": "↗", "flat": "→"}


@dataclass(frozen=True)
class WindowSpec:
    first_start_year: int
    length_years: int = 26
    step_years: int = 19
    extend_last: bool = True

    def __post_init__(self):
        if self.length_years < 1 or self.step_years < 1:
            raise InputError("window length and step must both be >= 1")

    @property
    def overlap(self):
        return self.length_years - self.step_years


def make_windows(spec, last_year):
    """Inclusive ``(start, end)`` year windows.

    Windows start every ``step_years`` from ``first_start_year`` and span
    ``length_years`` start-years; only windows ending by ``last_year`` are
    kept. With ``extend_last`` the final window is stretched to end at
    ``last_year``.
    """
    if last_year < spec.first_start_year + spec.length_years - 1:
        raise TrendError(
            f"years {spec.first_start_year}..{last_year} are too short for a {spec.length_years}-year window"
        )
    windows = []
    start = spec.first_start_year
    while start + spec.length_years - 1 <= last_year:
        windows.append((start, start + spec.length_years - 1))
        start += spec.step_years
    if spec.extend_last:
        windows[-1] = (windows[-1][0], last_year)
    return windows


def uncovered_years(windows, first_year, last_year):
    """Years in ``first_year..last_year`` that fall in no window."""
    covered = set()
    for s, e in windows:
        covered.update(range(s, e + 1))
    return [y for y in range(first_year, last_year + 1) if y not in covered]


@dataclass
class FrequencyTable:
    windows: list
    counts: np.ndarray  # (n_windows, k) year counts
    normalization: str
    exact: list  # per window, per cluster Fraction percentages
    skipped: list = field(default_factory=list)

    @property
    def rows(self):
        return np.array([[float(x) for x in r] for r in self.exact])

    def rounded(self):
        return np.round(self.rows, 1)

    def column(self, c):
        return self.rows[:, c]

    def gradients(self, dead_band=0.5):
        return [gradient(self.column(c), dead_band) for c in range(self.counts.shape[1])]

    def to_dict(self):
        k = self.counts.shape[1]
        return {
            "normalization": self.normalization,
            "clusters": list(range(k)),
            "windows": [
                {
                    "start": s,
                    "end": e,
                    "counts": [int(x) for x in self.counts[w]],
                    "percent": [round(float(x), 1) for x in self.exact[w]],
                    "exact": [str(x) for x in self.exact[w]],
                }
                for w, (s, e) in enumerate(self.windows)
            ],
            "gradient": self.gradients() if len(self.windows) >= 2 else None,
            "skipped_years": list(self.skipped),
        }

    def to_csv(self, provenance=None, dead_band=0.5):
        k = self.counts.shape[1]
        buf = io.StringIO()
        if provenance is not None:
            for line in json.dumps(provenance, indent=1, sort_keys=True).splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_start", "window_end", *(f"cluster_{c}" for c in range(k))])
        for (s, e), row in zip(self.windows, self.rounded()):
            w.writerow([s, e, *(f"{x:.1f}" for x in row)])
        if len(self.windows) >= 2:
            w.writerow(["gradient", "", *self.gradients(dead_band)])
        return buf.getvalue()


def frequency_table(clustering, windows, normalization="row", strict=True):
    """Percentage of each cluster's years per window.

    ``row``: share of the window's years in each cluster.
    ``column``: share of each cluster's windowed occurrences falling in the
    window. With ``strict=False`` years lacking an assignment are skipped and
    listed instead of raising.
    """
    if normalization not in ("row", "column"):
        raise InputError(f"normalization must be 'row' or 'column', got {normalization!r}")
    if not windows:
        raise TrendError("no windows")
    assigned = {y: int(c) for y, c in zip(clustering.labels, clustering.assignments)}
    k = clustering.k
    counts = np.zeros((len(windows), k), dtype=np.int64)
    skipped = []
    for w, (s, e) in enumerate(windows):
        for y in range(s, e + 1):
            if y in assigned:
                counts[w, assigned[y]] += 1
            elif strict:
                raise TrendError(f"year {y} in window {s}-{e} has no cluster assignment")
            elif y not in skipped:
                skipped.append(y)
    if normalization == "row":
        denom = [[int(counts[w].sum())] * k for w in range(len(windows))]
    else:
        totals = counts.sum(axis=0)
        denom = [[int(t) for t in totals] for _ in windows]
    exact = [
        [Fraction(100 * int(counts[w, c]), denom[w][c]) if denom[w][c] else Fraction(0) for c in range(k)]
        for w in range(len(windows))
    ]
    return FrequencyTable(list(windows), counts, normalization, exact, sorted(skipped))


def _slope(y):
    x = np.arange(len(y), dtype=np.float64)
    xc = x - x.mean()
    return float(np.dot(xc, y - np.mean(y)) / np.dot(xc, xc))


def gradient(column, dead_band=0.5):
    """Classify a per-window percentage column as a trend symbol.

    Least-squares slopes are fitted to the first and second halves of the
    column (sharing the middle point when the length is odd, and both
    spanning the whole column when it has only two entries). A slope within
    ``dead_band`` percentage points per window counts as flat.
    """
    y = np.asarray(column, dtype=np.float64)
    if len(y) < 2:
        raise TrendError("gradient needs at least 2 windows")
    half = max(2, -(-len(y) // 2))
    s1, s2 = _slope(y[:half]), _slope(y[-half:])
    sign1 = 0 if abs(s1) <= dead_band else (1 if s1 > 0 else -1)
    sign2 = 0 if abs(s2) <= dead_band else (1 if s2 > 0 else -1)
    if sign1 == 0 and sign2 == 0:
        return "flat"
    if sign1 == 0:
        sign1 = sign2
    if sign2 == 0:
        sign2 = sign1
    return {(-1, -1): "down", (-1, 1): "down-up", (1, -1): "up-down", (1, 1): "up"}[(sign1, sign2)]
