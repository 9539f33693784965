"""Pairwise dissimilarity matrix over hydrological years."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InputError, MatrixFormatError, WarpError
from .warp import WarpConfig, ims_dtw

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DissimMatrix:
    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)
        n = len(labels)
        if values.shape != (n, n):
            raise MatrixFormatError(f"matrix shape {values.shape} does not match {n} labels")
        if any(b <= a for a, b in zip(labels, labels[1:])):
            raise MatrixFormatError("labels must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise MatrixFormatError("dissimilarities must be finite and non-negative")
        if np.any(np.diag(values) != 0):
            raise MatrixFormatError("diagonal must be zero")
        asym = np.abs(values - values.T)
        if np.any(asym > SYMMETRY_TOL):
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise MatrixFormatError(
                f"matrix is not symmetric: [{labels[i]}, {labels[j]}] differs from its mirror by {asym[i, j]:.3g}"
            )

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, DissimMatrix):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.values, other.values)

    def index_of(self, label):
        try:
            return self.labels.index(int(label))
        except ValueError:
            raise InputError(f"unknown year label {label}") from None


def _pair_score(years, i, j, config):
    try:
        return ims_dtw(years[i].values, years[j].values, config)[0]
    except WarpError as exc:
        raise type(exc)(f"years {years[i].start_year} and {years[j].start_year}: {exc}") from exc


def build_matrix(years, config=None, workers=1, progress=None):
    """Compare every unordered pair of years with :func:`ims_dtw`.

    Each of the N(N-1)/2 pairs is computed once and mirrored. Rows are
    handed to a thread pool when ``workers > 1``; the warp kernels release
    the GIL and each cell is written by exactly one task, so the result is
    bitwise independent of ``workers``.

    ``progress``, if given, is called as ``progress(done_pairs, total_pairs)``.
    """
    config = config or WarpConfig()
    years = list(years)
    if not years:
        raise InputError("no years to compare")
    labels = [y.start_year for y in years]
    n = len(years)
    values = np.zeros((n, n))
    total = n * (n - 1) // 2
    done = 0
    started = time.perf_counter()
    last_log = started

    def row(i):
        return i, [_pair_score(years, i, j, config) for j in range(i + 1, n)]

    def collect(i, scores):
        nonlocal done, last_log
        for off, s in enumerate(scores):
            values[i, i + 1 + off] = s
            values[i + 1 + off, i] = s
        done += len(scores)
        if progress is not None:
            progress(done, total)
        now = time.perf_counter()
        if now - last_log > 5 or done == total:
            logger.info("dissimilarity pairs %d/%d (%.1fs)", done, total, now - started)
            last_log = now

    if workers > 1 and n > 2:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, scores in pool.map(row, range(n - 1)):
                collect(i, scores)
    else:
        for i in range(n - 1):
            collect(*row(i))
    return DissimMatrix(tuple(labels), values)


def rank_outliers(matrix, top):
    """Years with the largest mean dissimilarity to all other years.

    Returns ``[(label, mean), ...]`` sorted by descending mean, ties by
    ascending year.
    """
    n = len(matrix)
    if top > n or top < 0:
        raise InputError(f"top={top} outside 0..{n}")
    means = matrix.values.sum(axis=1) / max(n - 1, 1)
    order = sorted(range(n), key=lambda k: (-means[k], matrix.labels[k]))
    return [(matrix.labels[k], float(means[k])) for k in order[:top]]


# ---------------------------------------------------------------------------
# persistence


def save_matrix(matrix, path, provenance=None):
    """Write ``matrix`` as JSON (``.json`` suffix) or CSV (anything else).

    Values are written with ``repr`` so reloading is lossless. CSV files
    carry provenance as leading ``#`` comment lines.
    """
    path = str(path)
    if path.endswith(".json"):
        doc = {"labels": list(matrix.labels), "values": matrix.values.tolist()}
        if provenance is not None:
            doc["provenance"] = provenance
        text = json.dumps(doc, indent=1) + "\n"
    else:
        buf = io.StringIO()
        if provenance is not None:
            for line in json.dumps(provenance, indent=1, sort_keys=True).splitlines():
                buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["year", *matrix.labels])
        for label, row in zip(matrix.labels, matrix.values):
            w.writerow([label, *(repr(float(v)) for v in row)])
        text = buf.getvalue()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_matrix(path):
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise MatrixFormatError(f"{path}: cannot read ({exc})") from None
    try:
        if path.endswith(".json"):
            doc = json.loads(text)
            labels, rows = doc["labels"], doc["values"]
        else:
            lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
            table = list(csv.reader(lines))
            if not table or table[0][0] != "year":
                raise MatrixFormatError(f"{path}: missing 'year,...' header row")
            labels = [int(x) for x in table[0][1:]]
            row_labels = [int(r[0]) for r in table[1:]]
            rows = [[float(x) for x in r[1:]] for r in table[1:]]
            if len(rows) == len(labels) and row_labels != labels:
                raise MatrixFormatError(f"{path}: row labels do not match header labels")
        if len(rows) != len(labels) or any(len(r) != len(labels) for r in rows):
            raise MatrixFormatError(
                f"{path}: shape mismatch, {len(labels)} labels but {len(rows)} rows "
                f"of widths {sorted({len(r) for r in rows})}"
            )
        return DissimMatrix(tuple(labels), np.array(rows, dtype=np.float64).reshape(len(labels), len(labels)))
    except MatrixFormatError as exc:
        if str(exc).startswith(path):
            raise
        raise MatrixFormatError(f"{path}: {exc}") from None
    except (ValueError, KeyError, TypeError, IndexError) as exc:
        raise MatrixFormatError(f"{path}: corrupt matrix file ({exc})") from None


def read_provenance(path):
    """Provenance block embedded in a matrix file, or ``{}``."""
    path = str(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        return json.loads(text).get("provenance", {})
    block = [ln[2:] for ln in text.splitlines() if ln.startswith("# ")]
    return json.loads("\n".join(block)) if block else {}
