"""Per-year precipitation indices and rule-based cluster labels."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

INDEX_NAMES = ("max_rr", "std_rr", "total_amount", "wet_days", "max_cwd", "max_cdd")

DROUGHT = "drought"
EXTREME = "extreme_variability"
NORMAL = "normal"


@dataclass(frozen=True)
class IndexVector:
    max_rr: float  # mm/h
    std_rr: float  # mm/h, population
    total_amount: float  # mm
    wet_days: int
    max_cwd: int
    max_cdd: int

    def as_tuple(self):
        return tuple(getattr(self, k) for k in INDEX_NAMES)


def _longest_run(mask):
    if not mask.any():
        return 0
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return int(np.max(edges[1::2] - edges[::2]))


def compute_indices(year, wet_threshold=1.0):
    """Indices of one year of rain rates.

    Parameters
    ----------
    year : HydroYear or array_like
        Daily rain rates in mm/h.
    wet_threshold : float
        Daily accumulation in mm/day at or above which a day counts as wet.
    """
    if wet_threshold <= 0:
        raise InputError("wet_threshold must be > 0")
    v = np.asarray(getattr(year, "values", year), dtype=np.float64)
    n = len(v)
    wet = v >= wet_threshold / 24
    # fsum gives correctly rounded totals; a constant year has std exactly 0
    # even when fsum(v) / n does not round back to the constant
    if v.min() == v.max():
        std = 0.0
    else:
        mean = math.fsum(v) / n
        std = math.sqrt(math.fsum((v - mean) ** 2) / n)
    return IndexVector(
        max_rr=float(v.max()),
        std_rr=std,
        total_amount=math.fsum(v) * 24,
        wet_days=int(wet.sum()),
        max_cwd=_longest_run(wet),
        max_cdd=_longest_run(~wet),
    )


@dataclass
class ClusterProfile:
    cluster: int
    size: int
    medoid: int
    members: list
    mean: dict
    median: dict
    label: str = NORMAL
    evidence: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _unique_extreme(values, pick):
    target = pick(values)
    hits = [c for c, v in enumerate(values) if v == target]
    return hits[0] if len(hits) == 1 else None


def profile_clusters(clustering, indices):
    """Summarize each cluster's indices and attach a label.

    ``indices`` maps year label to :class:`IndexVector`. A cluster is
    ``drought`` when it alone has both the lowest mean total amount and the
    highest mean longest dry spell, and ``extreme_variability`` when it alone
    has both the highest mean standard deviation and the highest mean maximum
    rain rate. Everything else is ``normal``.
    """
    missing = [y for y in clustering.labels if y not in indices]
    if missing:
        raise InputError(f"no indices for assigned years {missing[:5]}{'...' if len(missing) > 5 else ''}")

    profiles = []
    for c in range(clustering.k):
        members = [clustering.labels[i] for i in clustering.members(c)]
        table = np.array([indices[y].as_tuple() for y in members], dtype=np.float64)
        profiles.append(
            ClusterProfile(
                cluster=c,
                size=len(members),
                medoid=clustering.labels[clustering.medoids[c]],
                members=members,
                mean={k: float(x) for k, x in zip(INDEX_NAMES, table.mean(axis=0))},
                median={k: float(x) for k, x in zip(INDEX_NAMES, np.median(table, axis=0))},
            )
        )

    def column(name):
        return [p.mean[name] for p in profiles]

    low_total = _unique_extreme(column("total_amount"), min)
    long_cdd = _unique_extreme(column("max_cdd"), max)
    high_std = _unique_extreme(column("std_rr"), max)
    high_max = _unique_extreme(column("max_rr"), max)
    evidence = {
        "lowest_mean_total_amount": low_total,
        "highest_mean_max_cdd": long_cdd,
        "highest_mean_std_rr": high_std,
        "highest_mean_max_rr": high_max,
    }
    run_warnings = []
    for name, who in evidence.items():
        if who is None:
            run_warnings.append(f"tie for {name}; rule cannot single out a cluster")

    drought = low_total if low_total is not None and low_total == long_cdd else None
    extreme = high_std if high_std is not None and high_std == high_max else None
    if drought is not None:
        profiles[drought].label = DROUGHT
    if extreme is not None:
        if extreme == drought:
            run_warnings.append(f"cluster {extreme} matches both drought and extreme rules; labeled {EXTREME}")
        profiles[extreme].label = EXTREME
    for p in profiles:
        p.evidence = {k: v == p.cluster for k, v in evidence.items()}
        p.warnings = list(run_warnings)
    for msg in run_warnings:
        logger.warning(msg)
    return profiles


# ---------------------------------------------------------------------------
# export


def indices_csv(rows, provenance=None):
    """CSV text for ``[(year, IndexVector), ...]``."""
    buf = io.StringIO()
    if provenance is not None:
        for line in json.dumps(provenance, indent=1, sort_keys=True).splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["year", *INDEX_NAMES])
    for year, iv in rows:
        w.writerow([year, repr(iv.max_rr), repr(iv.std_rr), repr(iv.total_amount), iv.wet_days, iv.max_cwd, iv.max_cdd])
    return buf.getvalue()


def read_indices_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    out = {}
    for r in reader:
        out[int(r["year"])] = IndexVector(
            float(r["max_rr"]), float(r["std_rr"]), float(r["total_amount"]),
            int(r["wet_days"]), int(r["max_cwd"]), int(r["max_cdd"]),
        )
    return out
