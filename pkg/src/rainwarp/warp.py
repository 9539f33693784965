"""Banded DTW and iterative multiscale DTW between rain-rate series.

The multiscale variant solves the alignment on a pyramid of block-averaged
series, then refines it one level at a time inside a corridor projected from
the coarser path. Both solvers share one dynamic-programming kernel, which
stores the accumulated cost row by row over a per-row column window
``[lo[i], hi[i]]``. Bands and corridors are therefore both expressed as
row windows.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from numba import njit

from .errors import ConfigError, CorridorInfeasibleError, InfeasibleBandError, WarpError

__all__ = [
    "WarpConfig",
    "AlignmentPath",
    "dtw_exact",
    "coarsen",
    "expand_corridor",
    "ims_dtw",
    "band_bounds",
]


@dataclass(frozen=True)
class WarpConfig:
    """Parameters of the warping.

    ``band_days=None`` disables the band constraint entirely.
    """

    band_days: int | None = 14
    coarsen_factor: int = 2
    min_coarse_len: int = 16
    radius: int = 2
    cost_exponent: int = 1
    normalize: bool = True

    def __post_init__(self):
        if self.band_days is not None and (
            not isinstance(self.band_days, int) or isinstance(self.band_days, bool) or self.band_days < 0
        ):
            raise ConfigError(f"band_days must be an integer >= 0 or null, got {self.band_days!r}")
        _check_int(self.coarsen_factor, "coarsen_factor", 2)
        _check_int(self.min_coarse_len, "min_coarse_len", 2)
        _check_int(self.radius, "radius", 0)
        if self.cost_exponent not in (1, 2) or isinstance(self.cost_exponent, bool):
            raise ConfigError(f"cost_exponent must be 1 or 2, got {self.cost_exponent!r}")
        if not isinstance(self.normalize, bool):
            raise ConfigError(f"normalize must be a boolean, got {self.normalize!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("warp config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown warp config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)


def _check_int(value, name, minimum):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")


@dataclass(frozen=True, eq=False)
class AlignmentPath:
    """Monotone warping path.

    ``steps`` is an ``(L, 2)`` integer array of ``(i, j)`` pairs running from
    ``(0, 0)`` to ``(n - 1, m - 1)``.
    """

    steps: np.ndarray
    total_cost: float
    normalized_cost: float

    def __len__(self):
        return len(self.steps)

    def pairs(self):
        return [(int(i), int(j)) for i, j in self.steps]

    def max_offset(self):
        return int(np.max(np.abs(self.steps[:, 0] - self.steps[:, 1])))

    def transposed(self):
        return AlignmentPath(self.steps[:, ::-1].copy(), self.total_cost, self.normalized_cost)

    def to_dict(self):
        return {
            "steps": self.pairs(),
            "total_cost": float(self.total_cost),
            "normalized_cost": float(self.normalized_cost),
        }

    @classmethod
    def from_dict(cls, data):
        steps = np.asarray(data["steps"], dtype=np.int64).reshape(-1, 2)
        return cls(steps, float(data["total_cost"]), float(data["normalized_cost"]))


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True, nogil=True)
def _accumulate(a, b, lo, hi, squared):
    n = a.shape[0]
    width = 1
    for i in range(n):
        w = hi[i] - lo[i] + 1
        if w > width:
            width = w
    acc = np.full((n, width), np.inf)
    for i in range(n):
        li = lo[i]
        for j in range(li, hi[i] + 1):
            d = a[i] - b[j]
            c = d * d if squared else abs(d)
            if i == 0 and j == 0:
                acc[0, j - li] = c
                continue
            best = np.inf
            if i > 0:
                lp = lo[i - 1]
                hp = hi[i - 1]
                if j > 0 and lp <= j - 1 <= hp:
                    best = acc[i - 1, j - 1 - lp]
                if lp <= j <= hp:
                    v = acc[i - 1, j - lp]
                    if v < best:
                        best = v
            if j - 1 >= li:
                v = acc[i, j - 1 - li]
                if v < best:
                    best = v
            acc[i, j - li] = c + best
    return acc


@njit(cache=True, nogil=True)
def _backtrack(acc, lo, hi):
    n = acc.shape[0]
    i = n - 1
    j = hi[n - 1]
    buf = np.empty((n + j + 1, 2), dtype=np.int64)
    k = 0
    buf[0, 0] = i
    buf[0, 1] = j
    while i > 0 or j > 0:
        # candidate order is the tie-break order: diagonal, advance-i, advance-j
        best = np.inf
        bi = -1
        bj = -1
        if i > 0 and j > 0 and lo[i - 1] <= j - 1 <= hi[i - 1]:
            best = acc[i - 1, j - 1 - lo[i - 1]]
            bi = i - 1
            bj = j - 1
        if i > 0 and lo[i - 1] <= j <= hi[i - 1]:
            v = acc[i - 1, j - lo[i - 1]]
            if v < best:
                best = v
                bi = i - 1
                bj = j
        if j > 0 and j - 1 >= lo[i]:
            v = acc[i, j - 1 - lo[i]]
            if v < best:
                best = v
                bi = i
                bj = j - 1
        i = bi
        j = bj
        k += 1
        buf[k, 0] = i
        buf[k, 1] = j
    return buf[: k + 1][::-1].copy()


@njit(cache=True, nogil=True)
def _corridor_bounds(path, factor, radius, n, m):
    lo = np.full(n, m, dtype=np.int64)
    hi = np.full(n, -1, dtype=np.int64)
    for s in range(path.shape[0]):
        ci = path[s, 0]
        cj = path[s, 1]
        r0 = max(0, ci * factor - radius)
        r1 = min(n - 1, (ci + 1) * factor - 1 + radius)
        c0 = max(0, cj * factor - radius)
        c1 = min(m - 1, (cj + 1) * factor - 1 + radius)
        for x in range(r0, r1 + 1):
            if c0 < lo[x]:
                lo[x] = c0
            if c1 > hi[x]:
                hi[x] = c1
    return lo, hi


# ---------------------------------------------------------------------------
# helpers


def _as_series(x, name):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise WarpError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise WarpError(f"{name} is empty")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise WarpError(f"{name} must contain finite non-negative values")
    return arr


def band_bounds(n, m, band):
    """Row windows of the proportional band.

    Cell ``(i, j)`` is allowed when ``|i*m - j*n| <= band * max(n, m)``. For
    equal lengths this is the usual ``|i - j| <= band``; the form is exact
    integer arithmetic and symmetric under swapping the two series.
    """
    i = np.arange(n, dtype=np.int64)
    if band is None:
        return np.zeros(n, dtype=np.int64), np.full(n, m - 1, dtype=np.int64)
    width = band * max(n, m)
    lo = -((width - i * m) // n)
    hi = (i * m + width) // n
    return np.maximum(lo, 0), np.minimum(hi, m - 1)


def _solve(a, b, lo, hi, exponent, normalize):
    n, m = a.shape[0], b.shape[0]
    if lo[0] != 0 or hi[-1] != m - 1 or np.any(lo > hi):
        return None
    acc = _accumulate(a, b, lo, hi, exponent == 2)
    total = float(acc[n - 1, m - 1 - lo[n - 1]])
    if not math.isfinite(total):
        return None
    steps = _backtrack(acc, lo, hi)
    norm = total / len(steps) if normalize else total
    return AlignmentPath(steps, total, norm)


# ---------------------------------------------------------------------------
# public operations


def dtw_exact(a, b, config=None):
    """Minimum-cost monotone alignment of ``a`` and ``b`` inside the band.

    Parameters
    ----------
    a, b : array_like
        Non-negative rain-rate vectors, possibly of different lengths.
    config : WarpConfig, optional
        Only ``band_days``, ``cost_exponent`` and ``normalize`` are used.

    Returns
    -------
    AlignmentPath
        Among equal-cost predecessors the backtrack prefers the diagonal,
        then the step advancing ``i``.
    """
    config = config or WarpConfig()
    a = _as_series(a, "a")
    b = _as_series(b, "b")
    lo, hi = band_bounds(len(a), len(b), config.band_days)
    path = _solve(a, b, lo, hi, config.cost_exponent, config.normalize)
    if path is None:
        raise InfeasibleBandError(
            f"band_days={config.band_days} admits no path between lengths {len(a)} and {len(b)}"
        )
    return path


def coarsen(a, factor):
    """Block means of ``a`` over consecutive blocks of ``factor`` samples."""
    a = np.asarray(a, dtype=np.float64)
    if factor < 2:
        raise ValueError("factor must be >= 2")
    if a.size == 0:
        raise ValueError("cannot coarsen an empty series")
    starts = np.arange(0, a.size, factor)
    sizes = np.minimum(starts + factor, a.size) - starts
    return np.add.reduceat(a, starts) / sizes


def expand_corridor(path, factor, radius, n, m):
    """Boolean ``(n, m)`` mask of fine cells covered by a coarse path.

    Each coarse cell becomes a ``factor x factor`` block, dilated by
    ``radius`` cells in every direction and clipped to the grid.
    """
    steps = path.steps if isinstance(path, AlignmentPath) else np.asarray(path, dtype=np.int64)
    lo, hi = _corridor_bounds(np.ascontiguousarray(steps, dtype=np.int64), factor, radius, n, m)
    cols = np.arange(m)
    return (cols[None, :] >= lo[:, None]) & (cols[None, :] <= hi[:, None])


def _ims(a, b, config):
    f = config.coarsen_factor
    # both pyramids must have the same depth
    depth = 0
    la, lb = len(a), len(b)
    while max(la, lb) > config.min_coarse_len:
        la, lb = -(-la // f), -(-lb // f)
        depth += 1
    pa, pb = [a], [b]
    for _ in range(depth):
        pa.append(coarsen(pa[-1], f))
        pb.append(coarsen(pb[-1], f))

    def level_band(level):
        if config.band_days is None:
            return None
        return -(-config.band_days // f**level)

    lo, hi = band_bounds(len(pa[depth]), len(pb[depth]), level_band(depth))
    path = _solve(pa[depth], pb[depth], lo, hi, config.cost_exponent, config.normalize)
    if path is None:
        raise InfeasibleBandError(
            f"band_days={config.band_days} admits no path between lengths {len(a)} and {len(b)}"
        )
    for level in range(depth - 1, -1, -1):
        xa, xb = pa[level], pb[level]
        n, m = len(xa), len(xb)
        clo, chi = _corridor_bounds(path.steps, f, config.radius, n, m)
        blo, bhi = band_bounds(n, m, level_band(level))
        lo, hi = np.maximum(clo, blo), np.minimum(chi, bhi)
        path = _solve(xa, xb, lo, hi, config.cost_exponent, config.normalize)
        if path is None:
            if level == 0 and config.band_days is not None and _solve(
                xa, xb, blo, bhi, config.cost_exponent, config.normalize
            ) is None:
                raise InfeasibleBandError(
                    f"band_days={config.band_days} admits no path between lengths {n} and {m}"
                )
            raise CorridorInfeasibleError(
                f"corridor (radius={config.radius}) disconnected at level {level} "
                f"for lengths {n} and {m}; widen radius or band"
            )
    return path


def ims_dtw(a, b, config=None):
    """Iterative multiscale DTW dissimilarity.

    Returns ``(score, path)`` where ``score`` is the path's normalized cost.
    The computation is run on a canonical ordering of the two inputs and the
    path transposed back, so ``ims_dtw(a, b)`` and ``ims_dtw(b, a)`` give
    bit-identical scores.
    """
    config = config or WarpConfig()
    a = _as_series(a, "a")
    b = _as_series(b, "b")
    swap = (len(b), b.tobytes()) < (len(a), a.tobytes())
    if swap:
        a, b = b, a
    path = _ims(a, b, config)
    if swap:
        path = path.transposed()
    return path.normalized_cost, path
